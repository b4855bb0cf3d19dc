"""Quantum states and channels: pure-state families, density matrices, dephasing.

All states live in a d-dimensional Hilbert space represented by plain numpy
arrays: kets as length-d complex vectors, density matrices as d x d complex
matrices.  Ensembles carry the prior probabilities alongside the states.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)


def _as_complex_vector(amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("state amplitudes must be a non-empty 1-d sequence")
    return v


def ket(amplitudes) -> np.ndarray:
    """Validate and return a normalized pure-state vector."""
    v = _as_complex_vector(amplitudes)
    norm_sq = float(np.sum(np.abs(v) ** 2))
    if abs(norm_sq - 1.0) > 1e-12:
        raise ValueError(f"amplitudes are not normalized: |psi|^2 = {norm_sq!r}")
    return v


def density(amplitudes) -> np.ndarray:
    """Rank-1 density matrix |psi><psi| of a normalized ket."""
    v = ket(amplitudes)
    return np.outer(v, v.conj())


def validate_density(rho: np.ndarray, *, min_eig: float = -1e-10) -> None:
    """Check Hermiticity, unit trace, and positive semi-definiteness."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm_dev = float(np.max(np.abs(rho - rho.conj().T)))
    if herm_dev > 1e-12:
        raise ValueError(f"density matrix not Hermitian: deviation {herm_dev:.2e}")
    trace_dev = abs(complex(np.trace(rho)) - 1.0)
    if trace_dev > 1e-12:
        raise ValueError(f"density matrix trace deviates from 1 by {trace_dev:.2e}")
    # symmetrize before the spectral test so eigvalsh sees an exactly Hermitian input
    eigs = np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)
    if eigs[0] < min_eig:
        raise ValueError(f"density matrix has negative eigenvalue {eigs[0]:.2e}")


@dataclass(frozen=True)
class StateEnsemble:
    """States rho_q with prior probabilities eta_q."""

    states: tuple[np.ndarray, ...]
    priors: np.ndarray

    def __post_init__(self):
        states = tuple(np.asarray(s, dtype=complex) for s in self.states)
        priors = np.asarray(self.priors, dtype=float)
        if len(states) == 0 or priors.shape != (len(states),):
            raise ValueError("need one prior per state")
        if np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-12:
            raise ValueError(f"priors must be non-negative and sum to 1, got {priors}")
        d = states[0].shape[0]
        for rho in states:
            if rho.shape != (d, d):
                raise ValueError("all states must share one dimension")
            validate_density(rho)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "priors", priors)

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def d(self) -> int:
        return self.states[0].shape[0]


@dataclass(frozen=True)
class DephasingChannel:
    """Qubit dephasing of strength p in [1/2, 1]; off-diagonals scale by 2p-1."""

    strength: float

    def __post_init__(self):
        if not 0.5 <= self.strength <= 1.0:
            raise ValueError(f"dephasing strength must lie in [1/2, 1], got {self.strength}")


def make_two_pure_states(s: float, eta0: float, eta1: float) -> StateEnsemble:
    """Two qubit pure states with real inner product s and priors (eta0, eta1).

    |psi_0,1> = sqrt((1+s)/2) |0> +- sqrt((1-s)/2) |1>.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"inner product s must lie in [0, 1], got {s}")
    _check_pair_priors(eta0, eta1)
    up = np.sqrt((1.0 + s) / 2.0)
    dn = np.sqrt((1.0 - s) / 2.0)
    return StateEnsemble(
        states=(density([up, dn]), density([up, -dn])),
        priors=np.array([eta0, eta1]),
    )


def _check_pair_priors(eta0: float, eta1: float) -> None:
    if eta0 < 0 or eta1 < 0 or abs(eta0 + eta1 - 1.0) > 1e-12:
        raise ValueError(f"priors must be non-negative and sum to 1, got ({eta0}, {eta1})")


def make_symmetric_states(coeffs) -> StateEnsemble:
    """d symmetric states |psi_j> = sum_k c_k w^{jk} |k>, w = exp(2 pi i / d), equal priors."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coefficients must be a non-empty 1-d sequence")
    if np.any(c < 0):
        raise ValueError("coefficients must be non-negative")
    norm_sq = float(np.sum(c**2))
    if norm_sq == 0.0:
        raise ValueError("coefficients must not be all zero")
    if abs(norm_sq - 1.0) > 1e-9:
        raise ValueError(f"squared coefficients sum to {norm_sq!r}, too far from 1")
    c = c / np.sqrt(norm_sq)  # absorb rounding from coefficient formulas
    d = c.size
    phases = np.exp(2j * np.pi * np.outer(np.arange(d), np.arange(d)) / d)
    states = tuple(density(c * phases[j]) for j in range(d))
    return StateEnsemble(states=states, priors=np.full(d, 1.0 / d))


def make_three_state_coeffs(theta1: float, theta2: float) -> np.ndarray:
    """Three-state coefficient family (cos(t1/2)cos(t2/2), sin(t1/2)cos(t2/2), sin(t2/2))."""
    for name, th in (("theta1", theta1), ("theta2", theta2)):
        if not 0.0 <= th <= np.pi:
            raise ValueError(f"{name} must lie in [0, pi], got {th}")
    return np.array([
        np.cos(theta1 / 2) * np.cos(theta2 / 2),
        np.sin(theta1 / 2) * np.cos(theta2 / 2),
        np.sin(theta2 / 2),
    ])


def make_biparametric_coeffs(d: int, j0: int, alpha: float) -> np.ndarray:
    """Normalized coefficients with c_k^2 prop. to 1 below j0, tapered above.

    Unnormalized c_k^2 = 1 for k < j0 and 1 - (alpha (k - j0 + 1)/(d - j0))^(1/d)
    for k >= j0.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if not 1 <= j0 <= d - 1:
        raise ValueError(f"j0 must lie in [1, {d - 1}], got {j0}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    k = np.arange(d)
    sq = np.ones(d)
    tail = k >= j0
    sq[tail] = 1.0 - (alpha * (k[tail] - j0 + 1) / (d - j0)) ** (1.0 / d)
    return np.sqrt(sq / sq.sum())


def random_orthogonal_qubit_pair(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Haar-random orthogonal qubit pair (columns of a random unitary)."""
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    return q[:, 0].copy(), q[:, 1].copy()


def apply_dephasing(rho: np.ndarray, channel: DephasingChannel) -> np.ndarray:
    """p rho + (1-p) sigma_z rho sigma_z on a single qubit."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"dephasing acts on qubits only, got shape {rho.shape}")
    p = channel.strength
    return p * rho + (1.0 - p) * (SIGMA_Z @ rho @ SIGMA_Z)


def born_probability(rho: np.ndarray, effect: np.ndarray) -> float:
    """Outcome probability Tr(E rho), clipped to [0, 1] against rounding."""
    rho = np.asarray(rho)
    effect = np.asarray(effect)
    if rho.shape != effect.shape:
        raise ValueError(f"dimension mismatch: state {rho.shape} vs effect {effect.shape}")
    p = float(np.trace(effect @ rho).real)
    return min(max(p, 0.0), 1.0)


def fidelity(psi, rho: np.ndarray) -> float:
    """Pure-state fidelity <psi| rho |psi>."""
    v = ket(psi)
    rho = np.asarray(rho)
    if rho.shape != (v.size, v.size):
        raise ValueError(f"dimension mismatch: ket {v.size} vs matrix {rho.shape}")
    return float(np.real(v.conj() @ rho @ v))
