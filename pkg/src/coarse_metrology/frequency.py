"""Ramsey frequency estimation when the interrogation time is jittered.

The interrogation time follows a normal law around ``t0`` truncated to
``t >= 0``; ``<f>`` denotes the average over that law. For a product probe of
n qubits (m = 1) or a GHZ probe (m = n) with detuning phi:

    signal  = < (1 + cos(m phi t) exp(-m gamma(t))) / 2 >
    dw2     = (1 - <cos(m phi t) e^{-m gamma(t)}>^2) <t>
              / (n^k T <t sin(m phi t) e^{-m gamma(t)}>^2)

with k = 1 for the product probe and k = 2 for GHZ.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import BracketError, DivergenceError
from .kinds import StateKind
from .numerics import QuadratureSpec, TruncatedGaussianTime, find_root, truncated_gaussian_expectation

logger = logging.getLogger(__name__)

#: Largest decay exponent m*gamma(t) kept inside the integration window.
MAX_DECAY_EXPONENT = 700.0
#: Absolute accuracy demanded of fringe averages bounded by 1 in magnitude;
#: near the fringe midpoint they cancel to roundoff and cannot be resolved
#: relative to themselves.
FRINGE_ABS_TOL = 1e-15
#: Denominators below this make the variance an infinite-uncertainty sentinel.
DENOMINATOR_FLOOR = 1e-300

FREQ_QUAD = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-300, max_subdivisions=200_000)

FIG1_N = 10_000
FIG1_GAMMA0 = 1.0
FIG1_TOTAL_TIME = 1.0


@dataclass(frozen=True)
class DephasingModel:
    """gamma(t) = gamma0 * t**exponent; exponent 1 is Markovian, 2 non-Markovian."""

    gamma0: float
    exponent: int = 1

    def __post_init__(self):
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be non-negative")
        if self.exponent not in (1, 2):
            raise ValueError("only exponents 1 and 2 are supported")

    @property
    def label(self) -> str:
        return "markov" if self.exponent == 1 else "nonmarkov"

    def __call__(self, t):
        return self.gamma0 * np.asarray(t, dtype=float) ** self.exponent

    def derivative(self, t):
        return self.exponent * self.gamma0 * np.asarray(t, dtype=float) ** (self.exponent - 1)

    def decay_horizon(self, m: int) -> float:
        """Largest t with m * gamma(t) <= MAX_DECAY_EXPONENT."""
        if self.gamma0 == 0:
            return math.inf
        return (MAX_DECAY_EXPONENT / (m * self.gamma0)) ** (1.0 / self.exponent)


MARKOV = DephasingModel(1.0, 1)
NON_MARKOV = DephasingModel(1.0, 2)


def gamma(model: DephasingModel, t: float) -> float:
    if t < 0:
        raise ValueError("time must be non-negative")
    return float(model(t))


def _closed_form_t0(model: DephasingModel, m: int) -> float:
    # 2 m t gamma'(t) = 1  =>  2 m p gamma0 t^p = 1
    return (1.0 / (2 * m * model.exponent * model.gamma0)) ** (1.0 / model.exponent)


def optimal_t0(model: DephasingModel, n: int = 1, entangled: bool = False,
               closed_form: bool = False) -> float:
    """Jitter-free optimal interrogation time, root of 2 m t gamma'(t) = 1.

    ``m`` is n for an entangled probe and 1 otherwise. The root is bracketed
    and solved numerically unless ``closed_form`` is set.
    """
    if model.gamma0 == 0:
        raise DivergenceError("no dephasing: the optimal interrogation time is unbounded")
    m = n if entangled else 1
    if closed_form:
        return _closed_form_t0(model, m)

    def condition(t):
        return 2 * m * t * float(model.derivative(t)) - 1.0

    hi = 1.0
    while condition(hi) < 0:
        hi *= 2.0
        if hi > 1e300:
            raise BracketError("could not bracket the optimal interrogation time")
    return find_root(condition, 0.0, hi, rel_tol=1e-14)


@dataclass(frozen=True)
class FrequencyScenario:
    state: StateKind
    n: int
    dephasing: DephasingModel
    total_time: float
    jitter: TruncatedGaussianTime
    detuning: float

    def __post_init__(self):
        object.__setattr__(self, "state", StateKind(self.state))
        if self.state is StateKind.ALTERNATING:
            raise ValueError("frequency estimation supports product and GHZ probes only")
        if self.n < 1 or self.total_time <= 0:
            raise ValueError("n must be >= 1 and total_time > 0")
        if self.jitter.center <= 0:
            raise ValueError("t0 must be positive")

    @property
    def m(self) -> int:
        return self.n if self.state is StateKind.GHZ else 1

    @property
    def t0(self) -> float:
        return self.jitter.center

    @property
    def delta(self) -> float:
        return self.jitter.width

    def with_delta(self, delta: float) -> "FrequencyScenario":
        return replace(self, jitter=TruncatedGaussianTime(self.t0, delta))


def make_scenario(state, n: int = FIG1_N, model: DephasingModel = MARKOV,
                  total_time: float = FIG1_TOTAL_TIME, delta: float = 0.0) -> FrequencyScenario:
    """Scenario at the jitter-free optimum: t0 from the dephasing law, m phi t0 = pi/2."""
    state = StateKind(state)
    entangled = state is StateKind.GHZ
    t0 = optimal_t0(model, n, entangled)
    m = n if entangled else 1
    detuning = math.pi / (2 * m * t0)
    return FrequencyScenario(state, n, model, total_time, TruncatedGaussianTime(t0, delta), detuning)


def _fringe_quad(quad: QuadratureSpec) -> QuadratureSpec:
    return replace(quad, abs_tol=max(quad.abs_tol, FRINGE_ABS_TOL))


def _averages(sc: FrequencyScenario, quad: QuadratureSpec) -> tuple[float, float, float]:
    m = sc.m
    omega = m * sc.detuning
    law = sc.jitter
    horizon = sc.dephasing.decay_horizon(m)

    def envelope(t):
        return np.exp(-m * sc.dephasing(t))

    cos_avg = truncated_gaussian_expectation(
        lambda t: np.cos(omega * t) * envelope(t), law, _fringe_quad(quad), omega, upper=horizon)
    tsin_avg = truncated_gaussian_expectation(
        lambda t: t * np.sin(omega * t) * envelope(t), law, quad, omega, upper=horizon)
    t_avg = truncated_gaussian_expectation(lambda t: t, law, quad)
    return cos_avg, tsin_avg, t_avg


def ramsey_signal(sc: FrequencyScenario, quad: QuadratureSpec = FREQ_QUAD) -> float:
    """Probability of the bright Ramsey outcome averaged over the time jitter."""
    m = sc.m
    omega = m * sc.detuning
    horizon = sc.dephasing.decay_horizon(m)
    cos_avg = truncated_gaussian_expectation(
        lambda t: np.cos(omega * t) * np.exp(-m * sc.dephasing(t)),
        sc.jitter, _fringe_quad(quad), omega, upper=horizon)
    return 0.5 * (1.0 + cos_avg)


def freq_variance(sc: FrequencyScenario, quad: QuadratureSpec = FREQ_QUAD) -> float:
    """Cramer-Rao frequency variance; ``inf`` once the signal slope underflows."""
    cos_avg, tsin_avg, t_avg = _averages(sc, quad)
    scale = sc.n if sc.state is StateKind.PRODUCT else sc.n ** 2
    denom = scale * sc.total_time * tsin_avg ** 2
    if denom < DENOMINATOR_FLOOR:
        logger.warning("signal slope underflow at delta=%g (%s, %s): variance set to inf",
                       sc.delta, sc.state.value, sc.dephasing.label)
        return math.inf
    return (1.0 - cos_avg ** 2) * t_avg / denom


@dataclass(frozen=True)
class PrecisionCurve:
    rows: tuple[tuple[float, float], ...]

    def __post_init__(self):
        deltas = [d for d, _ in self.rows]
        if any(b <= a for a, b in zip(deltas, deltas[1:])):
            raise ValueError("deltas must be strictly increasing")

    @property
    def deltas(self) -> np.ndarray:
        return np.array([d for d, _ in self.rows])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.rows])

    def scaled(self, factor: float) -> np.ndarray:
        """Display-scaled copy of the variances; stored rows are untouched."""
        return self.values * factor


class CurveError(RuntimeError):
    def __init__(self, delta: float, cause: Exception):
        super().__init__(f"curve evaluation failed at delta={delta!r}: {cause}")
        self.delta = delta
        self.cause = cause


def precision_curve(scenario: FrequencyScenario, deltas: Sequence[float],
                    quad: QuadratureSpec = FREQ_QUAD, workers: int = 1) -> PrecisionCurve:
    """Frequency variance of ``scenario`` evaluated at each jitter width."""
    deltas = [float(d) for d in deltas]
    if any(d < 0 for d in deltas):
        raise ValueError("deltas must be non-negative")
    if any(b <= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly increasing")

    def row(d):
        try:
            return freq_variance(scenario.with_delta(d), quad)
        except Exception as exc:  # re-raised with the failing delta attached
            raise CurveError(d, exc) from exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            values = list(pool.map(row, deltas))
    else:
        values = [row(d) for d in deltas]
    return PrecisionCurve(tuple(zip(deltas, values)))


def default_delta_grid(model: DephasingModel = MARKOV, points: int = 60,
                       lowest: float = 1e-6) -> np.ndarray:
    """delta = 0 followed by a log grid up to four product-state optimal times."""
    top = 4 * optimal_t0(model, 1, False)
    return np.concatenate([[0.0], np.geomspace(lowest, top, points)])


FIG1_CURVES = (
    ("dw2_product_markov", StateKind.PRODUCT, MARKOV),
    ("dw2_ghz_markov", StateKind.GHZ, MARKOV),
    ("dw2_product_nonmarkov", StateKind.PRODUCT, NON_MARKOV),
    ("dw2_ghz_nonmarkov", StateKind.GHZ, NON_MARKOV),
)


def fig1_scenarios(n: int = FIG1_N, gamma0: float = FIG1_GAMMA0,
                   total_time: float = FIG1_TOTAL_TIME) -> dict[str, FrequencyScenario]:
    out = {}
    for name, state, model in FIG1_CURVES:
        out[name] = make_scenario(state, n, DephasingModel(gamma0, model.exponent), total_time)
    return out


#: Relative gap below which two variances count as tied.
TIE_TOL = 1e-9


@dataclass(frozen=True)
class Crossover:
    """Where curve ``a`` overtakes curve ``b``.

    ``delta`` is None when no crossing was found. ``from_tie`` marks curves that
    coincide at the start of the scan and separate immediately after it.
    """

    delta: Optional[float]
    bracket: tuple[float, float]
    from_tie: bool = False

    @property
    def found(self) -> bool:
        return self.delta is not None


def _log_gap(a: FrequencyScenario, b: FrequencyScenario, quad: QuadratureSpec,
             scale_a: float = 1.0):
    def gap(d):
        va = scale_a * freq_variance(a.with_delta(d), quad)
        vb = freq_variance(b.with_delta(d), quad)
        if math.isinf(va) and math.isinf(vb):
            return 0.0
        g = math.log(va) - math.log(vb)
        return 0.0 if abs(g) <= TIE_TOL else g
    return gap


def crossover_delta(a: FrequencyScenario, b: FrequencyScenario, bracket: tuple[float, float],
                    quad: QuadratureSpec = FREQ_QUAD, rel_tol: float = 1e-10,
                    scale_a: float = 1.0) -> Crossover:
    """Jitter width inside ``bracket`` where the variances of ``a`` and ``b`` cross.

    ``scale_a`` multiplies the variance of ``a`` before comparing (for the
    display-scaled figure curve). Returns an unfound ``Crossover`` when the
    log-ratio does not strictly change sign across the bracket.
    """
    gap = _log_gap(a, b, quad, scale_a)
    lo, hi = bracket
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo == 0 or g_hi == 0 or np.sign(g_lo) == np.sign(g_hi):
        return Crossover(None, (lo, hi))
    return Crossover(find_root(gap, lo, hi, rel_tol=rel_tol), (lo, hi))


def scan_crossover(a: FrequencyScenario, b: FrequencyScenario, grid: Iterable[float],
                   quad: QuadratureSpec = FREQ_QUAD, scale_a: float = 1.0) -> Crossover:
    """First jitter width on ``grid`` beyond which ``a`` has the larger variance.

    A sign change of log(var_a / var_b) between neighbouring grid points is
    refined by root finding. Curves that are tied at the first grid point and
    have ``a`` worse at the next one cross at that first point.
    """
    gap = _log_gap(a, b, quad, scale_a)
    grid = [float(d) for d in grid]
    gaps = [gap(grid[0])]
    for prev_d, d in zip(grid, grid[1:]):
        g = gap(d)
        prev_g = gaps[-1]
        if prev_g == 0 and g > 0 and len(gaps) == 1:
            return Crossover(prev_d, (prev_d, d), from_tie=True)
        if prev_g < 0 < g:
            return crossover_delta(a, b, (prev_d, d), quad, scale_a=scale_a)
        gaps.append(g)
    return Crossover(None, (grid[0], grid[-1]))
