"""Brute-force statevector oracle for small registers.

Builds the encoded probe states explicitly, measures every qubit in a
Gaussian-smeared rotated X basis and reports the outcome statistics. Nothing
here uses the closed-form visibilities; the oracle exists to check them.

Basis ordering is big-endian: qubit 1 is the most significant bit of the
amplitude index, which is also axis 0 of the ``(2,) * n`` tensor view.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import optimize
from scipy.special import xlogy

from .errors import BracketError, OracleCapError
from .kinds import (
    ORACLE_MAX_QUBITS,
    ParityDistribution,
    ProbeStateSpec,
    Reference,
    StateKind,
)
from .numerics import DEFAULT_QUAD, GaussianKernel, QuadratureSpec, find_root, gaussian_average

#: Scale c in U(theta) = exp(-i c theta sigma_Z). With c = 1/sqrt2 a Gaussian
#: angle of width Delta leaves single-qubit fringe visibility exp(-Delta^2).
ROTATION_SCALE = 1 / math.sqrt(2)

_SQRT_HALF = 1 / math.sqrt(2)


def build_probe_state(spec: ProbeStateSpec) -> np.ndarray:
    """Normalised amplitude vector of length 2**n."""
    n = spec.n
    if n > ORACLE_MAX_QUBITS:
        raise OracleCapError(f"oracle is capped at {ORACLE_MAX_QUBITS} qubits, got n={n}")
    psi = np.zeros(2 ** n, dtype=complex)
    collective = np.exp(1j * n * spec.phase)
    if spec.kind is StateKind.GHZ:
        psi[0] = _SQRT_HALF
        psi[-1] = _SQRT_HALF * collective
    elif spec.kind is StateKind.ALTERNATING:
        low = int("01" * (n // 2) + "0" * (n % 2), 2)
        psi[low] = _SQRT_HALF
        psi[(2 ** n - 1) ^ low] = _SQRT_HALF * collective
    else:
        single = np.array([1.0, np.exp(1j * spec.phase)]) * _SQRT_HALF
        psi = single
        for _ in range(n - 1):
            psi = np.kron(psi, single)
    return psi


def _basis_vectors(theta) -> np.ndarray:
    """Rows are U^dagger(theta)|+x> and U^dagger(theta)|-x>; shape (..., 2, 2)."""
    theta = np.asarray(theta, dtype=float)
    ph = np.exp(1j * ROTATION_SCALE * theta)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = ph * _SQRT_HALF
    out[..., 0, 1] = np.conj(ph) * _SQRT_HALF
    out[..., 1, 0] = ph * _SQRT_HALF
    out[..., 1, 1] = -np.conj(ph) * _SQRT_HALF
    return out


def rotated_x_projectors(theta) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto U^dagger(theta)|+x> and U^dagger(theta)|-x>.

    Vectorised over ``theta``; a scalar angle gives a pair of 2x2 matrices.
    """
    v = _basis_vectors(theta)
    plus = v[..., 0, :]
    minus = v[..., 1, :]
    p_plus = plus[..., :, None] * np.conj(plus[..., None, :])
    p_minus = minus[..., :, None] * np.conj(minus[..., None, :])
    return p_plus, p_minus


def smeared_effects(delta: float, quad: QuadratureSpec = DEFAULT_QUAD) -> tuple[np.ndarray, np.ndarray]:
    """Single-qubit POVM elements after averaging the rotated projectors over theta."""
    if delta == 0:
        return rotated_x_projectors(0.0)
    kernel = GaussianKernel(delta)

    def stacked(theta):
        p_plus, p_minus = rotated_x_projectors(theta)
        return np.stack([p_plus, p_minus], axis=1)

    avg = gaussian_average(stacked, kernel, quad, omega=2 * ROTATION_SCALE)
    return avg[0], avg[1]


def _apply_local(ops: np.ndarray, psi: np.ndarray, n: int, qubits: Sequence[int]) -> np.ndarray:
    """Apply a 2x2 operator (optionally batched as (m, 2, 2)) to each listed qubit."""
    batched = ops.ndim == 3
    if batched and psi.ndim == 1:
        psi = np.broadcast_to(psi, (ops.shape[0],) + psi.shape)
    lead = 1 if batched else 0
    t = psi.reshape(psi.shape[:lead] + (2,) * n)
    for q in qubits:
        axis = lead + q
        t = np.moveaxis(t, axis, -1)
        if batched:
            t = np.einsum("m...j,mij->m...i", t, ops)
        else:
            t = t @ ops.T
        t = np.moveaxis(t, -1, axis)
    return t.reshape(psi.shape[:lead] + (2 ** n,))


def _parity_expectation(psi: np.ndarray, diff: np.ndarray, n: int, qubits: Sequence[int]):
    phi = _apply_local(diff, psi, n, qubits)
    return np.real(phi @ np.conj(psi)) if diff.ndim == 3 else float(np.real(np.vdot(psi, phi)))


def _readout_qubits(spec: ProbeStateSpec, qubit: int) -> list[int]:
    # product probes are read qubit by qubit; entangled probes by global parity
    if spec.kind is StateKind.PRODUCT:
        return [qubit]
    return list(range(spec.n))


def smeared_parity_distribution(spec: ProbeStateSpec, reference: Reference,
                                delta: Optional[float] = None,
                                quad: QuadratureSpec = DEFAULT_QUAD,
                                qubit: int = 0) -> ParityDistribution:
    """Parity statistics of the smeared rotated-X measurement on the probe.

    Entangled probes (GHZ, alternating) report the parity of all n outcome
    bits. Product probes report the single-qubit distribution of ``qubit``.

    Common: every qubit is rotated by the same Gaussian angle and the parity
    probability is averaged over that angle. Independent: each qubit is
    measured with its own smeared POVM. Perfect ignores ``delta``.
    """
    reference = Reference(reference)
    psi = build_probe_state(spec)
    qubits = _readout_qubits(spec, qubit)
    if reference is Reference.PERFECT or not delta:
        p_plus, p_minus = rotated_x_projectors(0.0)
        exp_val = _parity_expectation(psi, p_plus - p_minus, spec.n, qubits)
    elif reference is Reference.COMMON:
        kernel = GaussianKernel(delta)

        def parity_at(theta):
            p_plus, p_minus = rotated_x_projectors(theta)
            return _parity_expectation(psi, p_plus - p_minus, spec.n, qubits)

        exp_val = float(gaussian_average(parity_at, kernel, quad,
                                         omega=2 * ROTATION_SCALE * len(qubits)))
    else:
        e_plus, e_minus = smeared_effects(delta, quad)
        exp_val = _parity_expectation(psi, e_plus - e_minus, spec.n, qubits)
    return ParityDistribution.from_even(0.5 * (1.0 + exp_val))


def outcome_probabilities(spec: ProbeStateSpec, reference: Reference,
                          delta: Optional[float] = None,
                          quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """Full distribution over all 2**n outcome strings (big-endian index).

    Exponential in memory (4**n for independent smearing); meant for n <= 8.
    """
    reference = Reference(reference)
    psi = build_probe_state(spec)
    n = spec.n
    if reference is Reference.PERFECT or not delta:
        return np.abs(_apply_local(np.conj(_basis_vectors(0.0)), psi, n, range(n))) ** 2
    if reference is Reference.COMMON:
        def probs_at(theta):
            amps = _apply_local(np.conj(_basis_vectors(theta)), psi, n, range(n))
            return np.abs(amps) ** 2

        return np.real(gaussian_average(probs_at, GaussianKernel(delta), quad,
                                        omega=2 * ROTATION_SCALE * n))
    # Kraus rows sqrt(lambda) <u| for each eigenpair of each effect
    rows = []
    for effect in smeared_effects(delta, quad):
        vals, vecs = np.linalg.eigh(effect)
        vals = np.clip(vals, 0.0, None)
        rows.extend(np.sqrt(vals[k]) * np.conj(vecs[:, k]) for k in range(2))
    kraus = np.array(rows)
    t = psi.reshape((2,) * n)
    for q in range(n):
        t = np.moveaxis(np.tensordot(kraus, t, axes=([1], [q])), 0, q)
    weights = (np.abs(t) ** 2).reshape((2, 2) * n)
    return weights.sum(axis=tuple(range(1, 2 * n, 2))).reshape(-1)


def parity_from_outcomes(probs: np.ndarray) -> ParityDistribution:
    n = int(round(math.log2(probs.size)))
    ones = np.array([bin(i).count("1") for i in range(2 ** n)])
    return ParityDistribution.from_even(float(probs[ones % 2 == 0].sum()))


def sample_outcomes(dist: ParityDistribution, shots: int,
                    seed: Union[int, np.random.Generator]) -> tuple[int, int]:
    """Draw ``shots`` parity outcomes; returns ``(even_count, odd_count)``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    even = int(rng.binomial(shots, min(max(dist.p_even, 0.0), 1.0)))
    return even, shots - even


def mle_phase(counts: tuple[int, int], model: Callable[[float], float],
              bracket: tuple[float, float], xtol: float = 1e-10) -> float:
    """Maximum-likelihood phase from parity counts.

    ``model(phi)`` is the even-parity probability. The likelihood is searched
    with bounded Brent (golden section with parabolic steps). When the model
    can reach the observed frequency near the optimum, the estimate is polished
    by solving ``model(phi) == even / shots`` exactly, since the likelihood is
    too flat there for a value-based search to reach ``xtol``.

    Raises:
        BracketError: the optimum sits on the bracket edge.
    """
    even, odd = counts
    shots = even + odd
    lo, hi = bracket

    def nll(phi):
        p = min(max(model(phi), 0.0), 1.0)
        return -(xlogy(even, p) + xlogy(odd, 1.0 - p))

    res = optimize.minimize_scalar(nll, bounds=(lo, hi), method="bounded",
                                   options={"xatol": xtol})
    phi_hat = float(res.x)
    edge = 1e-6 * (hi - lo)
    if phi_hat - lo < edge or hi - phi_hat < edge:
        raise BracketError(f"likelihood maximum lies on the bracket edge ({phi_hat})")
    target = even / shots
    step = 1e-3 * (hi - lo)
    a, b = max(lo, phi_hat - step), min(hi, phi_hat + step)
    resid = lambda phi: model(phi) - target  # noqa: E731
    if resid(a) * resid(b) < 0:
        phi_hat = find_root(resid, a, b, rel_tol=1e-15)
    return phi_hat


def apply_dephasing(rho: np.ndarray, gamma_value: float) -> np.ndarray:
    """Pure dephasing of a qubit: coherences scaled by exp(-gamma_value)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("expected a 2x2 density matrix")
    if gamma_value < 0:
        raise ValueError("gamma_value must be non-negative")
    if not np.allclose(rho, rho.conj().T, atol=1e-12):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-10:
        raise ValueError("density matrix trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -1e-12:
        raise ValueError("density matrix is not positive semidefinite")
    out = rho.copy()
    decay = math.exp(-gamma_value)
    out[0, 1] *= decay
    out[1, 0] *= decay
    return out
