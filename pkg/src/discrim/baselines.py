"""Analytic optima that trained measurements are judged against.

Two pure states: the Helstrom bound 1/2 (1 - sqrt(1 - 4 eta0 eta1 s^2)).
Two mixed states: 1/2 (1 - ||eta0 rho0 - eta1 rho1||_1) with the optimal
projective measurement built from the eigenspaces of the weighted difference.
Equal-prior symmetric states: the Fourier-basis observable, with the closed
form p_err = 1 - (sum_k c_k)^2 / d as an independent cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import exact_perr
from .states import make_symmetric_states, make_two_pure_states


@dataclass(frozen=True)
class OptimalReference:
    """An optimal error probability and, when constructed, the measurement achieving it."""

    p_err: float
    povm: tuple[np.ndarray, ...] | None
    method: str
    max_prior: float = 1.0

    def __post_init__(self):
        # guessing the most likely state is always available, so the optimum
        # can never exceed 1 - max prior
        if not -1e-12 <= self.p_err <= 1.0 - self.max_prior + 1e-12:
            raise ValueError(
                f"optimal p_err {self.p_err} outside [0, {1.0 - self.max_prior}]"
            )


def trace_norm(M: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    M = np.asarray(M)
    dev = float(np.max(np.abs(M - M.conj().T)))
    if dev > 1e-10:
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.2e})")
    eigs = np.linalg.eigvalsh((M + M.conj().T) / 2.0)
    return float(np.sum(np.abs(eigs)))


def helstrom_two_pure(s: float, eta0: float, eta1: float) -> OptimalReference:
    """Minimum error for two pure states of real inner product s."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"inner product s must lie in [0, 1], got {s}")
    if eta0 < 0 or eta1 < 0 or abs(eta0 + eta1 - 1.0) > 1e-12:
        raise ValueError(f"invalid priors ({eta0}, {eta1})")
    p_err = 0.5 * (1.0 - np.sqrt(1.0 - 4.0 * eta0 * eta1 * s * s))
    ens = make_two_pure_states(s, eta0, eta1)
    povm = _difference_measurement(ens.states[0], ens.states[1], eta0, eta1)
    return OptimalReference(
        p_err=float(p_err), povm=povm, method="helstrom-pure",
        max_prior=max(eta0, eta1),
    )


def helstrom_two_mixed(
    rho0: np.ndarray, rho1: np.ndarray, eta0: float, eta1: float
) -> OptimalReference:
    """Minimum error for two mixed states via the trace-norm bound."""
    if eta0 < 0 or eta1 < 0 or abs(eta0 + eta1 - 1.0) > 1e-12:
        raise ValueError(f"invalid priors ({eta0}, {eta1})")
    rho0 = np.asarray(rho0, dtype=complex)
    rho1 = np.asarray(rho1, dtype=complex)
    if rho0.shape != rho1.shape:
        raise ValueError("states must share one dimension")
    gamma = eta0 * rho0 - eta1 * rho1
    p_err = 0.5 * (1.0 - trace_norm(gamma))
    povm = _difference_measurement(rho0, rho1, eta0, eta1)
    return OptimalReference(
        p_err=float(max(p_err, 0.0)), povm=povm, method="trace-norm-mixed",
        max_prior=max(eta0, eta1),
    )


def _difference_measurement(rho0, rho1, eta0, eta1) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the non-negative / negative eigenspaces of eta0 rho0 - eta1 rho1.

    Zero eigenvalues go to outcome 0; either assignment is optimal, a fixed
    rule keeps the construction deterministic.
    """
    gamma = eta0 * np.asarray(rho0) - eta1 * np.asarray(rho1)
    eigvals, eigvecs = np.linalg.eigh((gamma + gamma.conj().T) / 2.0)
    d = gamma.shape[0]
    e0 = np.zeros((d, d), dtype=complex)
    e1 = np.zeros((d, d), dtype=complex)
    for lam, v in zip(eigvals, eigvecs.T):
        proj = np.outer(v, v.conj())
        if lam >= 0.0:
            e0 += proj
        else:
            e1 += proj
    return e0, e1


def fourier_observable(d: int) -> list[np.ndarray]:
    """Rank-1 projectors onto the Fourier basis |mu_m> = d^{-1/2} sum_k w^{mk} |k>."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    phases = np.exp(2j * np.pi * np.outer(np.arange(d), np.arange(d)) / d)
    basis = phases / np.sqrt(d)
    return [np.outer(basis[m], basis[m].conj()) for m in range(d)]


def symmetric_optimal(coeffs) -> OptimalReference:
    """Optimal (Fourier-measurement) error for equal-prior symmetric states."""
    ens = make_symmetric_states(coeffs)
    povm = fourier_observable(ens.d)
    p_err = exact_perr(ens, povm)
    return OptimalReference(
        p_err=p_err, povm=tuple(povm), method="fourier-symmetric",
        max_prior=1.0 / ens.d,
    )


def symmetric_closed_form(coeffs) -> float:
    """Closed form 1 - (sum_k c_k)^2 / d for non-negative normalized coefficients."""
    c = np.asarray(coeffs)
    if np.iscomplexobj(c) or np.any(c < 0):
        raise ValueError("closed form requires non-negative real coefficients")
    if abs(float(np.sum(c**2)) - 1.0) > 1e-9:
        raise ValueError("coefficients must be normalized")
    d = c.size
    return float(1.0 - (np.sum(c) ** 2) / d)
