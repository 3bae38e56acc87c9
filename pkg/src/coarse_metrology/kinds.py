"""Scenario selectors and small value types shared by the oracle and closed forms."""

from __future__ import annotations

import enum
from dataclasses import dataclass

#: Largest register the statevector oracle will build.
ORACLE_MAX_QUBITS = 12


class StateKind(str, enum.Enum):
    GHZ = "ghz"
    PRODUCT = "product"
    ALTERNATING = "alternating"


class Reference(str, enum.Enum):
    PERFECT = "perfect"
    COMMON = "common"
    INDEPENDENT = "independent"


@dataclass(frozen=True)
class ProbeStateSpec:
    """Encoded probe state.

    GHZ:          (|0...0> + e^{i n phase}|1...1>)/sqrt2
    PRODUCT:      ((|0> + e^{i phase}|1>)/sqrt2)^{(x) n}
    ALTERNATING:  (|0101...> + e^{i n phase}|1010...>)/sqrt2
    """

    kind: StateKind
    n: int
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", StateKind(self.kind))
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")


@dataclass(frozen=True)
class ParityDistribution:
    """Probabilities of even and odd parity of the measured bit string."""

    p_even: float
    p_odd: float

    def __post_init__(self):
        for name in ("p_even", "p_odd"):
            v = getattr(self, name)
            if not -1e-12 <= v <= 1 + 1e-12:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if abs(self.p_even + self.p_odd - 1) > 1e-10:
            raise ValueError(f"probabilities sum to {self.p_even + self.p_odd}, not 1")

    @classmethod
    def from_even(cls, p_even: float) -> "ParityDistribution":
        return cls(float(p_even), float(1.0 - p_even))
