"""Complex simultaneous perturbation stochastic approximation (CSPSA).

Minimizes a noisy real objective of a complex vector using two evaluations per
iteration at z_k +- c_k Delta_k, where Delta_k has entries drawn uniformly from
{1, -1, i, -i}.  The pseudo-gradient g_i = (f_plus - f_minus) / (2 c_k Delta_i*)
drives the update z_{k+1} = z_k - a_k g_k.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .povm import DegenerateControlError

PERTURBATION_SYMBOLS = np.array([1.0, -1.0, 1.0j, -1.0j])


@dataclass(frozen=True)
class GainSchedule:
    """Decaying gains a_k = a/(k+1+A)^s and c_k = b/(k+1)^r.

    The defaults are calibrated on the deterministic dim=8 quadratic benchmark
    (objective below 1e-3 within 200 iterations); experiment scenarios pin
    their own schedules tuned for shot-noise objectives.
    """

    a: float = 1.2
    A: float = 60.0
    s: float = 0.602
    b: float = 0.25
    r: float = 0.101

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("gain scales a and b must be positive")
        if self.A < 0:
            raise ValueError("stability offset A must be non-negative")
        if not 0 < self.s <= 1 or not 0 < self.r <= 1:
            raise ValueError("gain exponents must lie in (0, 1]")

    def a_k(self, k: int) -> float:
        return self.a / (k + 1 + self.A) ** self.s

    def c_k(self, k: int) -> float:
        return self.b / (k + 1) ** self.r


def draw_perturbation(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Vector of dim entries drawn uniformly from {1, -1, i, -i}."""
    return PERTURBATION_SYMBOLS[rng.integers(0, 4, dim)]


def pseudo_gradient(f_plus: float, f_minus: float, c_k: float, delta: np.ndarray) -> np.ndarray:
    """Two-point gradient proxy g_i = (f_plus - f_minus) / (2 c_k Delta_i*)."""
    if c_k <= 0:
        raise ValueError("perturbation gain c_k must be positive")
    # |Delta_i| = 1, so dividing by Delta_i* is multiplying by Delta_i
    return (f_plus - f_minus) / (2.0 * c_k) * delta


@dataclass
class OptimizerState:
    """Iterate bookkeeping: current z, iteration counter, owned random stream."""

    z: np.ndarray
    k: int
    rng: np.random.Generator


@dataclass
class RunTrace:
    """Per-iteration estimates at the perturbed points, plus optional exact values."""

    est_plus: list[float] = field(default_factory=list)
    est_minus: list[float] = field(default_factory=list)
    exact: list[float] = field(default_factory=list)
    final_z: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.est_plus)


class TrainingAborted(RuntimeError):
    """A degenerate control was hit mid-run; carries the partial trace."""

    def __init__(self, message: str, trace: RunTrace):
        super().__init__(message)
        self.trace = trace


def step(state: OptimizerState, objective, gains: GainSchedule) -> tuple[OptimizerState, float, float]:
    """One CSPSA iteration; returns the new state and the two evaluations.

    Consumes randomness in a fixed order (perturbation draw, then the
    objective at z_plus, then at z_minus) so runs replay bit-identically.
    """
    a_k = gains.a_k(state.k)
    c_k = gains.c_k(state.k)
    delta = draw_perturbation(state.rng, state.z.size)
    f_plus = objective(state.z + c_k * delta)
    f_minus = objective(state.z - c_k * delta)
    g = pseudo_gradient(f_plus, f_minus, c_k, delta)
    new_state = OptimizerState(z=state.z - a_k * g, k=state.k + 1, rng=state.rng)
    return new_state, f_plus, f_minus


def run(
    z0: np.ndarray,
    objective,
    gains: GainSchedule,
    k_t: int,
    rng: np.random.Generator,
    evaluator=None,
) -> RunTrace:
    """Apply k_t CSPSA steps from z0, recording a full trace.

    When an evaluator is supplied, the exact objective of each post-step
    iterate is recorded as well (evaluation only, never fed back).  Aborts
    with a partial trace if a perturbed point maps to a degenerate control.
    """
    if k_t < 1:
        raise ValueError(f"iteration budget must be >= 1, got {k_t}")
    state = OptimizerState(z=np.asarray(z0, dtype=complex).copy(), k=0, rng=rng)
    trace = RunTrace()
    for _ in range(k_t):
        try:
            state, f_plus, f_minus = step(state, objective, gains)
        except DegenerateControlError as exc:
            trace.final_z = state.z
            raise TrainingAborted(
                f"degenerate control at iteration {state.k}: {exc}", trace
            ) from exc
        trace.est_plus.append(f_plus)
        trace.est_minus.append(f_minus)
        if evaluator is not None:
            trace.exact.append(evaluator(state.z))
    trace.final_z = state.z
    return trace
