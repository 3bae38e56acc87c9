"""Verification drivers: oracle-vs-closed-form grid and Monte-Carlo CR-bound check."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .kinds import ProbeStateSpec, Reference, StateKind
from .oracle import mle_phase, sample_outcomes, smeared_parity_distribution
from .phase import PhaseScenario, fisher_phase, parity_probabilities

ORACLE_TOL = 1e-8
DEFAULT_NS = tuple(range(1, 9))
DEFAULT_DELTAS = (0.0, 0.1, 0.3)
MC_BAND = (0.9, 1.2)

DEFAULT_SEED = 20_240_917


def phase_grid(n: int) -> tuple[float, ...]:
    return (0.0, math.pi / (4 * n), math.pi / (2 * n), math.pi / n)


def supported_pairs():
    for kind in StateKind:
        for ref in Reference:
            if kind is StateKind.ALTERNATING and ref is Reference.INDEPENDENT:
                continue
            yield kind, ref


@dataclass(frozen=True)
class OracleDeviation:
    kind: StateKind
    reference: Reference
    max_abs_dev: float
    worst: tuple  # (n, delta, phi)


def oracle_deviations(ns: Iterable[int] = DEFAULT_NS,
                      deltas: Iterable[float] = DEFAULT_DELTAS) -> list[OracleDeviation]:
    """Max |oracle p_even - closed form| per (state, reference) over the grid."""
    ns, deltas = list(ns), list(deltas)
    out = []
    for kind, ref in supported_pairs():
        worst_dev, worst_at = -1.0, None
        for n in ns:
            for delta in deltas:
                for phi in phase_grid(n):
                    spec = ProbeStateSpec(kind, n, phi)
                    got = smeared_parity_distribution(spec, ref, delta).p_even
                    want = parity_probabilities(PhaseScenario(spec, ref, delta)).p_even
                    dev = abs(got - want)
                    if dev > worst_dev:
                        worst_dev, worst_at = dev, (n, delta, phi)
        out.append(OracleDeviation(kind, ref, worst_dev, worst_at))
    return out


@dataclass(frozen=True)
class MonteCarloCase:
    n: int = 1
    delta: float = 0.0
    reference: Reference = Reference.COMMON
    kind: StateKind = StateKind.GHZ
    phi: Optional[float] = None  # defaults to the fringe midpoint


@dataclass(frozen=True)
class MonteCarloResult:
    case: MonteCarloCase
    shots: int
    repetitions: int
    mean: float
    variance: float
    cramer_rao: float

    @property
    def ratio(self) -> float:
        return self.variance / self.cramer_rao

    @property
    def within_band(self) -> bool:
        return MC_BAND[0] <= self.ratio <= MC_BAND[1]


DEFAULT_MC_CASES = (MonteCarloCase(1, 0.0), MonteCarloCase(1, 0.3))


def monte_carlo_cr(case: MonteCarloCase, shots: int, repetitions: int,
                   rng: np.random.Generator) -> MonteCarloResult:
    """Sample parity counts from the oracle and compare MLE variance with 1/(N F)."""
    m = 1 if case.kind is StateKind.PRODUCT else case.n
    phi = math.pi / (2 * m) if case.phi is None else case.phi
    spec = ProbeStateSpec(case.kind, case.n, phi)
    dist = smeared_parity_distribution(spec, case.reference, case.delta)
    scenario = PhaseScenario(spec, case.reference, case.delta)

    def model(x):
        return parity_probabilities(scenario, x).p_even

    bracket = (0.0, math.pi / m)
    estimates = np.array([
        mle_phase(sample_outcomes(dist, shots, rng), model, bracket)
        for _ in range(repetitions)
    ])
    single_readout_f = fisher_phase(scenario, phi)
    if case.kind is StateKind.PRODUCT:
        single_readout_f /= case.n
    return MonteCarloResult(case, shots, repetitions, float(estimates.mean()),
                            float(estimates.var(ddof=1)), 1.0 / (shots * single_readout_f))


def run_monte_carlo(cases: Sequence[MonteCarloCase] = DEFAULT_MC_CASES, shots: int = 100_000,
                    repetitions: int = 200, seed: int = DEFAULT_SEED) -> list[MonteCarloResult]:
    rng = np.random.default_rng(seed)
    return [monte_carlo_cr(c, shots, repetitions, rng) for c in cases]
