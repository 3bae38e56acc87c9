"""Closed-form phase estimation with a coarsened measurement basis.

The parity fringe of every probe considered here is ``(1 + V cos(m phi)) / 2``
with ``m = n`` for entangled probes and ``m = 1`` for product probes (read out
qubit by qubit). Coarsening enters only through the visibility ``V``:

==============  ===========  ===================================
probe           reference    V
==============  ===========  ===================================
GHZ             common       exp(-n^2 Delta^2)
GHZ             independent  exp(-n Delta^2)
product         either       exp(-Delta^2)
alternating     common       1 for even n, exp(-Delta^2) for odd n
any             perfect      1
==============  ===========  ===================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import DivergenceError, UnsupportedScenarioError
from .kinds import ParityDistribution, ProbeStateSpec, Reference, StateKind
from .numerics import ArgmaxResult, integer_argmax

OPTIMAL = "optimal"


@dataclass(frozen=True)
class PhaseScenario:
    state: ProbeStateSpec
    reference: Reference = Reference.PERFECT
    delta: float = 0.0
    experiments: int = 1

    def __post_init__(self):
        object.__setattr__(self, "reference", Reference(self.reference))
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.experiments < 1:
            raise ValueError("experiments must be >= 1")
        if self.state.kind is StateKind.ALTERNATING and self.reference is Reference.INDEPENDENT:
            raise UnsupportedScenarioError(
                "alternating probe has no model under independent references")

    @classmethod
    def make(cls, kind, n: int, reference=Reference.PERFECT, delta: float = 0.0,
             phase: float = 0.0, experiments: int = 1) -> "PhaseScenario":
        return cls(ProbeStateSpec(StateKind(kind), n, phase), Reference(reference),
                   delta, experiments)

    @property
    def n(self) -> int:
        return self.state.n

    @property
    def effective_reference(self) -> Reference:
        return Reference.PERFECT if self.delta == 0 else self.reference

    @property
    def multiplier(self) -> int:
        """Factor converting phi into the fringe argument."""
        return 1 if self.state.kind is StateKind.PRODUCT else self.n


def visibility(scenario: PhaseScenario) -> float:
    """Fringe visibility left by the coarsened reference (see module table)."""
    ref = scenario.effective_reference
    if ref is Reference.PERFECT:
        return 1.0
    n, d2 = scenario.n, scenario.delta ** 2
    kind = scenario.state.kind
    if kind is StateKind.PRODUCT:
        return math.exp(-d2)
    if kind is StateKind.ALTERNATING:
        return 1.0 if n % 2 == 0 else math.exp(-d2)
    if ref is Reference.COMMON:
        return math.exp(-n * n * d2)
    return math.exp(-n * d2)


def parity_probabilities(scenario: PhaseScenario, phi: Optional[float] = None) -> ParityDistribution:
    """Parity distribution at ``phi`` (defaults to the scenario's encoded phase)."""
    phi = scenario.state.phase if phi is None else phi
    v = visibility(scenario)
    return ParityDistribution.from_even(0.5 * (1.0 + v * math.cos(scenario.multiplier * phi)))


def parity_slope(scenario: PhaseScenario, phi: float) -> float:
    """Analytic d p_even / d phi."""
    m = scenario.multiplier
    return -0.5 * visibility(scenario) * m * math.sin(m * phi)


def fisher_phase(scenario: PhaseScenario, phi: Optional[float] = None) -> float:
    """Fisher information about phi carried by one run of the whole probe.

    Product probes contribute n independent single-qubit readouts.
    """
    phi = scenario.state.phase if phi is None else phi
    m = scenario.multiplier
    v2 = visibility(scenario) ** 2
    s2 = math.sin(m * phi) ** 2
    c2 = math.cos(m * phi) ** 2
    if v2 == 1.0:
        # deterministic fringe: the 0/0 at the extrema extends continuously to m^2
        per_readout = float(m * m)
    elif s2 * v2 == 0.0:
        return 0.0
    else:
        # 1 - c2 v2 written without cancellation
        per_readout = m * m * s2 * v2 / (s2 + c2 * (1.0 - v2))
    return scenario.n * per_readout if scenario.state.kind is StateKind.PRODUCT else per_readout


def optimal_phase(scenario: PhaseScenario) -> float:
    """Operating point with fringe argument pi/2."""
    return math.pi / (2 * scenario.multiplier)


def resolution_phase(scenario: PhaseScenario, phi: Union[float, str, None] = OPTIMAL) -> float:
    """Cramer-Rao phase uncertainty 1/sqrt(N F); ``inf`` when F vanishes."""
    if phi == OPTIMAL:
        phi = optimal_phase(scenario)
    f = fisher_phase(scenario, phi)
    if f <= 0:
        return math.inf
    return 1.0 / math.sqrt(scenario.experiments * f)


@dataclass(frozen=True)
class OptimalParticles:
    reference: Reference
    delta: float
    n: int
    continuous: float
    at_boundary: bool
    fisher: float = field(default=math.nan)


def continuous_optimum(reference: Reference, delta: float) -> float:
    """Real-valued maximiser of n^2 V(n)^2 for a GHZ probe."""
    reference = Reference(reference)
    if delta <= 0:
        return math.inf
    if reference is Reference.COMMON:
        return 1.0 / (math.sqrt(2) * delta)
    if reference is Reference.INDEPENDENT:
        return 1.0 / delta ** 2
    return math.inf


def optimal_particles(reference: Reference, delta: float,
                      n_max: Optional[int] = None) -> OptimalParticles:
    """Best integer GHZ size under coarsening, alongside the continuous optimum.

    Raises:
        DivergenceError: for ``delta == 0`` or a perfect reference, where the
            Fisher information grows without bound in n.
    """
    reference = Reference(reference)
    if delta <= 0 or reference is Reference.PERFECT:
        raise DivergenceError("Fisher information grows without bound: no finite optimal n")
    cont = continuous_optimum(reference, delta)
    if n_max is None:
        n_max = int(math.ceil(4 * cont)) + 10

    def fisher_at(n: int) -> float:
        return fisher_phase(PhaseScenario.make(StateKind.GHZ, n, reference, delta),
                            math.pi / (2 * n))

    best: ArgmaxResult = integer_argmax(fisher_at, n_max)
    return OptimalParticles(reference, delta, best.n, cont, best.at_boundary, best.value)
