"""Control-vector parameterizations of measurements.

A length n*d^2 complex vector, reshaped row-major into an (n*d) x d matrix and
QR-projected onto an isometry S, yields a POVM of n effects E_i = M_i^dag M_i
from the d x d row blocks M_i of S.  Completeness holds by construction since
sum_i M_i^dag M_i = S^dag S = I.  The observable-restricted variant maps a
length d^2 vector through the QR of a d x d matrix to the rank-1 projectors
onto the columns of the resulting unitary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateControlError(ValueError):
    """Raised when a control vector maps to a rank-deficient matrix."""


@dataclass(frozen=True)
class Layout:
    """Shape tag for control vectors: n effects of dimension d."""

    kind: str  # "general" or "observable"
    n: int
    d: int

    def __post_init__(self):
        if self.kind not in ("general", "observable"):
            raise ValueError(f"unknown layout kind {self.kind!r}")
        if self.kind == "observable" and self.n != self.d:
            raise ValueError("observable layout requires n == d")
        if self.n < 1 or self.d < 1:
            raise ValueError("layout sizes must be positive")

    @property
    def control_len(self) -> int:
        return self.n * self.d * self.d if self.kind == "general" else self.d * self.d

    def build_povm(self, z: np.ndarray) -> list[np.ndarray]:
        if self.kind == "general":
            return povm_from_control(z, self.n, self.d)
        return observable_from_control(z, self.d)


def general_layout(n: int, d: int) -> Layout:
    return Layout("general", n, d)


def observable_layout(d: int) -> Layout:
    return Layout("observable", d, d)


def qr_isometry(Z: np.ndarray) -> np.ndarray:
    """QR projection of a tall matrix onto an isometry, with a fixed phase gauge.

    The gauge makes the R factor's diagonal real non-negative, so the result is
    a pure deterministic function of Z (plain QR is only unique up to column
    phases).
    """
    Z = np.asarray(Z, dtype=complex)
    svals = np.linalg.svd(Z, compute_uv=False)
    if svals[0] == 0.0 or svals[-1] <= 1e-12 * svals[0]:
        raise DegenerateControlError(
            f"control matrix is numerically rank-deficient (singular values {svals})"
        )
    q, r = np.linalg.qr(Z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def povm_from_control(z: np.ndarray, n: int, d: int) -> list[np.ndarray]:
    """POVM of n effects from a length n*d^2 control vector."""
    z = _control_array(z, n * d * d, "general")
    S = qr_isometry(z.reshape(n * d, d))
    effects = []
    for i in range(n):
        M = S[i * d:(i + 1) * d]
        effects.append(M.conj().T @ M)
    return effects


def observable_from_control(z: np.ndarray, d: int) -> list[np.ndarray]:
    """Rank-1 projective measurement from a length d^2 control vector."""
    z = _control_array(z, d * d, "observable")
    q = qr_isometry(z.reshape(d, d))
    return [np.outer(q[:, i], q[:, i].conj()) for i in range(d)]


def _control_array(z, expected_len: int, kind: str) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1 or z.size != expected_len:
        raise ValueError(f"{kind} control vector must have length {expected_len}, got {z.shape}")
    return z


def random_control(layout: Layout, rng: np.random.Generator) -> np.ndarray:
    """Random control vector with standard-normal real and imaginary parts."""
    m = layout.control_len
    return rng.standard_normal(m) + 1j * rng.standard_normal(m)


@dataclass(frozen=True)
class PovmReport:
    """Diagnostics from validate_povm."""

    completeness_deviation: float
    min_eigenvalue: float
    ok: bool


def validate_povm(
    effects,
    *,
    completeness_atol: float = 1e-9,
    eig_atol: float = 1e-10,
    herm_atol: float = 1e-10,
) -> PovmReport:
    """Check that effects are Hermitian, positive semi-definite, and sum to I."""
    effects = [np.asarray(e) for e in effects]
    d = effects[0].shape[0]
    herm_dev = max(float(np.max(np.abs(e - e.conj().T))) for e in effects)
    total = sum(effects)
    completeness_dev = float(np.max(np.abs(total - np.eye(d))))
    min_eig = min(
        float(np.linalg.eigvalsh((e + e.conj().T) / 2.0)[0]) for e in effects
    )
    ok = (
        herm_dev <= herm_atol
        and completeness_dev <= completeness_atol
        and min_eig >= -eig_atol
    )
    return PovmReport(completeness_dev, min_eig, ok)
