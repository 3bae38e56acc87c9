"""Numerical kernels: Gaussian averages, bracketing roots, integer argmax, Fisher info.

Everything here is a pure function of its arguments. The quadrature is a
vectorised adaptive Gauss-Kronrod (7/15) rule: all panels of one refinement
level are evaluated with a single call to the integrand, which must therefore
accept a 1-D array of abscissae and return an array whose first axis matches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special

from .errors import BracketError, ProbabilityRangeError, QuadratureError

#: Half-width of every Gaussian integration window, in standard deviations.
TRUNCATION_SIGMAS = 8.0
#: Minimum number of panels per oscillation period of the integrand.
PANELS_PER_PERIOD = 20
_MIN_PANELS = 8

# Kronrod 15-point abscissae (positive half) and weights; Gauss 7-point
# weights live on the odd-indexed Kronrod nodes.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KRONROD = np.concatenate([_WK[:-1], _WK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[1:7:2] = _WG[:3]
_GAUSS[7] = _WG[3]
_GAUSS[9:15:2] = _WG[2::-1]


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 10_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class GaussianKernel:
    """Centred normal density of width ``sigma`` used to smear a reference angle."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"kernel width must be positive, got {self.sigma!r}")

    def pdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.exp(-0.5 * (theta / self.sigma) ** 2) / (math.sqrt(2 * math.pi) * self.sigma)

    def window(self) -> tuple[float, float]:
        half = TRUNCATION_SIGMAS * self.sigma
        return -half, half


@dataclass(frozen=True)
class TruncatedGaussianTime:
    """Interrogation-time law: normal(center, width) restricted to t >= 0.

    ``width == 0`` is the point mass at ``center``.
    """

    center: float
    width: float

    def __post_init__(self):
        if self.center < 0 or self.width < 0:
            raise ValueError("center and width must be non-negative")

    @property
    def is_point_mass(self) -> bool:
        return self.width == 0

    def normalization(self) -> float:
        """Integral of exp(-(t-center)^2 / 2 width^2) over [0, inf)."""
        s = self.width
        return s * math.sqrt(math.pi / 2) * special.erfc(-self.center / (s * math.sqrt(2)))

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        dens = np.exp(-0.5 * ((t - self.center) / self.width) ** 2) / self.normalization()
        return np.where(t < 0, 0.0, dens)

    def window(self) -> tuple[float, float]:
        half = TRUNCATION_SIGMAS * self.width
        return max(0.0, self.center - half), self.center + half

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``size`` times; used by Monte-Carlo cross-checks only."""
        if self.is_point_mass:
            return np.full(size, float(self.center))
        a = -self.center / self.width
        return special.ndtri(
            special.ndtr(a) + rng.random(size) * special.ndtr(-a)
        ) * self.width + self.center


def _gk_panels(f, left, right):
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    y = np.asarray(f(x))
    if y.shape[0] != x.shape[0]:
        raise ValueError("integrand must return one value per abscissa along axis 0")
    if not np.all(np.isfinite(y)):
        raise QuadratureError("integrand returned a non-finite value")
    y = y.reshape((left.size, 15) + y.shape[1:])
    wk = _KRONROD.reshape((1, 15) + (1,) * (y.ndim - 2))
    wg = _GAUSS.reshape((1, 15) + (1,) * (y.ndim - 2))
    scale = half.reshape((-1,) + (1,) * (y.ndim - 2))
    kron = (y * wk).sum(axis=1) * scale
    gauss = (y * wg).sum(axis=1) * scale
    mass = (np.abs(y) * wk).sum(axis=1) * np.abs(scale)
    err = np.abs(kron - gauss)
    if err.ndim > 1:
        err = err.reshape(err.shape[0], -1).max(axis=1)
    return kron, err, mass


def adaptive_integrate(f: Callable, a: float, b: float, n_panels: int = _MIN_PANELS,
                       spec: QuadratureSpec = DEFAULT_QUAD):
    """Integrate ``f`` over [a, b] with panel-wise adaptive Gauss-Kronrod.

    ``f`` may be vector valued (extra trailing axes); convergence is then judged
    on the largest component. The relative tolerance applies to the integral
    of ``|f|``, so integrals that cancel to nearly zero still terminate.
    Returns ``(integral, error_estimate)``.

    Raises:
        QuadratureError: when the panel budget ``spec.max_subdivisions`` is
            exhausted before the error estimate meets the tolerance.
    """
    if b <= a:
        raise ValueError("integration bounds must satisfy a < b")
    n_panels = max(1, int(n_panels))
    if n_panels > spec.max_subdivisions:
        raise QuadratureError(
            f"{n_panels} initial panels exceed max_subdivisions={spec.max_subdivisions}")
    edges = np.linspace(a, b, n_panels + 1)
    left, right = edges[:-1], edges[1:]
    total = None
    done_mass = None
    done_err = 0.0
    used = n_panels
    length = b - a
    while True:
        kron, err, mass = _gk_panels(f, left, right)
        active_sum = kron.sum(axis=0)
        estimate = active_sum if total is None else total + active_sum
        active_mass = mass.sum(axis=0)
        mass_total = active_mass if done_mass is None else done_mass + active_mass
        tol = max(spec.abs_tol, spec.rel_tol * float(np.max(mass_total)))
        err_total = done_err + float(err.sum())
        if err_total <= tol:
            return estimate, err_total
        # panels whose local error is within their share of the budget are frozen
        share = 0.5 * tol * (right - left) / length
        keep = err <= share
        frozen = kron[keep].sum(axis=0)
        total = frozen if total is None else total + frozen
        frozen_mass = mass[keep].sum(axis=0)
        done_mass = frozen_mass if done_mass is None else done_mass + frozen_mass
        done_err += float(err[keep].sum())
        left, right = left[~keep], right[~keep]
        used += left.size
        if used > spec.max_subdivisions:
            raise QuadratureError(
                f"quadrature did not converge within {spec.max_subdivisions} subdivisions "
                f"(error estimate {err_total:.3e}, tolerance {tol:.3e})",
                error_estimate=err_total,
            )
        mid = 0.5 * (left + right)
        left, right = np.concatenate([left, mid]), np.concatenate([mid, right])


def _oscillation_panels(a: float, b: float, omega: float) -> int:
    periods = abs(omega) * (b - a) / (2 * math.pi)
    return max(_MIN_PANELS, math.ceil(PANELS_PER_PERIOD * periods))


def truncated_gaussian_expectation(f: Callable, law: TruncatedGaussianTime,
                                   spec: QuadratureSpec = DEFAULT_QUAD,
                                   omega: float = 0.0,
                                   upper: Optional[float] = None) -> float:
    """Average of ``f(t)`` over the truncated-Gaussian interrogation time.

    Args:
        f: Vectorised function of time.
        law: Time-jitter distribution.
        spec: Quadrature tolerances.
        omega: Dominant angular frequency of ``f``; sets the initial panel count.
        upper: Optional cut beyond which the caller guarantees ``f`` is
            negligible (used for strongly decaying integrands).

    Returns:
        The expectation as a float. A point-mass law returns ``f(center)``.
    """
    if law.is_point_mass:
        value = np.asarray(f(np.array([float(law.center)])), dtype=float)[0]
        if not np.isfinite(value):
            raise QuadratureError("integrand returned a non-finite value")
        return float(value)
    # integrate in standard units so abscissae resolve the window even when
    # width is many orders of magnitude below center
    center, width = float(law.center), float(law.width)
    lo = max(-TRUNCATION_SIGMAS, -center / width)
    hi = TRUNCATION_SIGMAS
    if upper is not None:
        hi = min(hi, (upper - center) / width)
        if hi <= lo:
            return 0.0
    norm = math.sqrt(math.pi / 2) * special.erfc(-center / (width * math.sqrt(2)))

    def weighted(u):
        return f(center + width * u) * np.exp(-0.5 * u * u)

    n_panels = _oscillation_panels(lo, hi, omega * width)
    value, _ = adaptive_integrate(weighted, lo, hi, n_panels, spec)
    return float(value) / norm


def gaussian_average(f: Callable, kernel: GaussianKernel,
                     spec: QuadratureSpec = DEFAULT_QUAD, omega: float = 0.0):
    """Average of (possibly vector-valued) ``f(theta)`` over a centred Gaussian kernel."""
    a, b = kernel.window()

    def weighted(theta):
        y = np.asarray(f(theta))
        w = kernel.pdf(theta).reshape((-1,) + (1,) * (y.ndim - 1))
        return y * w

    value, _ = adaptive_integrate(weighted, a, b, _oscillation_panels(a, b, omega), spec)
    return value


def find_root(g: Callable[[float], float], lo: float, hi: float,
              rel_tol: float = 1e-12) -> float:
    """Root of ``g`` inside the sign-changing bracket [lo, hi] (Brent's method)."""
    if not lo < hi:
        raise BracketError(f"bracket must satisfy lo < hi, got [{lo}, {hi}]")
    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0:
        return float(lo)
    if g_hi == 0:
        return float(hi)
    if np.sign(g_lo) == np.sign(g_hi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: g = {g_lo:.3e}, {g_hi:.3e}")
    rtol = max(rel_tol, 4 * np.finfo(float).eps)
    return float(optimize.brentq(g, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500))


@dataclass(frozen=True)
class ArgmaxResult:
    n: int
    value: float
    at_boundary: bool


def integer_argmax(f: Callable[[int], float], n_max: int) -> ArgmaxResult:
    """Exhaustive scan of ``f`` over 1..n_max; ties resolve to the smallest n.

    ``at_boundary`` flags an argmax sitting at ``n_max``, i.e. the true optimum
    may lie beyond the scanned range.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    best_n, best_val = 1, f(1)
    for n in range(2, n_max + 1):
        val = f(n)
        if val > best_val:
            best_n, best_val = n, val
    return ArgmaxResult(best_n, float(best_val), best_n == n_max)


_PROB_SLACK = 1e-12


def fisher_two_outcome(p: Callable[[float], float], x: float, dx: Optional[float] = None,
                       derivative: Optional[Callable[[float], float]] = None) -> float:
    """Fisher information of a binary outcome with success probability ``p(x)``.

    Uses ``derivative`` when supplied, otherwise a central difference with step
    ``dx`` (default ``1e-6 * max(1, |x|)``).
    """
    px = p(x)
    if not -_PROB_SLACK <= px <= 1 + _PROB_SLACK:
        raise ProbabilityRangeError(f"p({x}) = {px} lies outside [0, 1]")
    px = min(max(px, 0.0), 1.0)
    if derivative is not None:
        slope = derivative(x)
    else:
        h = 1e-6 * max(1.0, abs(x)) if dx is None else dx
        if not h > 0:
            raise ValueError("dx must be positive")
        slope = (p(x + h) - p(x - h)) / (2 * h)
    if slope == 0:
        return 0.0
    q = px * (1 - px)
    if q == 0:
        return math.inf
    return slope * slope / q
