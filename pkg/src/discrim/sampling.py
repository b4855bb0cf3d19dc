"""Finite-shot measurement statistics and error-probability estimates.

Training never sees the true states: it only receives the estimate
1 - sum_l eta_l n_l / N where n_l ~ Binomial(N, p_l) is the simulated number
of correct identifications of state l in N shots.  The exact error
probability is computed separately for evaluation and plotting.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .povm import Layout
from .states import StateEnsemble, born_probability


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream: (seed, stream key) -> identical draws."""

    seed: int
    stream: tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        stream = tuple(int(i) for i in self.stream)
        if any(i < 0 or i >= 2**32 for i in stream):
            raise ValueError(f"stream key entries must be uint32, got {stream}")
        object.__setattr__(self, "stream", stream)

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class SuccessCounts:
    """Per-state correct-identification counts out of N shots each."""

    counts: np.ndarray
    shots_per_state: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if self.shots_per_state < 1:
            raise ValueError("shots per state must be >= 1")
        if np.any(counts < 0) or np.any(counts > self.shots_per_state):
            raise ValueError(f"counts must lie in [0, {self.shots_per_state}], got {counts}")
        object.__setattr__(self, "counts", counts)


def simulate_success_counts(
    ens: StateEnsemble,
    effects,
    n_shots: int,
    rng: np.random.Generator,
) -> SuccessCounts:
    """Draw n_l ~ Binomial(N, Tr(E_l rho_l)) independently for each state l."""
    if len(effects) != ens.n:
        raise ValueError(f"need {ens.n} effects, got {len(effects)}")
    probs = np.array([
        born_probability(rho, effect) for rho, effect in zip(ens.states, effects)
    ])
    counts = rng.binomial(n_shots, probs)
    return SuccessCounts(counts=counts, shots_per_state=n_shots)


def estimate_perr(counts: SuccessCounts, priors) -> float:
    """Shot-noise estimate 1 - sum_l eta_l n_l / N of the error probability."""
    priors = np.asarray(priors, dtype=float)
    if priors.shape != counts.counts.shape:
        raise ValueError("one prior per count required")
    return float(1.0 - priors @ (counts.counts / counts.shots_per_state))


def exact_perr(ens: StateEnsemble, effects) -> float:
    """Exact error probability 1 - sum_l eta_l Tr(E_l rho_l)."""
    if len(effects) != ens.n:
        raise ValueError(f"need {ens.n} effects, got {len(effects)}")
    p_corr = sum(
        eta * born_probability(rho, effect)
        for eta, rho, effect in zip(ens.priors, ens.states, effects)
    )
    return float(min(max(1.0 - p_corr, 0.0), 1.0))


def noisy_objective(
    ens: StateEnsemble,
    n_shots: int,
    rng: np.random.Generator,
    layout: Layout,
) -> Callable[[np.ndarray], float]:
    """Objective mapping a control vector to an estimated error probability.

    Each call consumes fresh randomness from rng and N copies of each state.
    """
    if layout.n != ens.n or layout.d != ens.d:
        raise ValueError(
            f"layout ({layout.n}, {layout.d}) does not match ensemble ({ens.n}, {ens.d})"
        )

    def objective(z: np.ndarray) -> float:
        effects = layout.build_povm(z)
        counts = simulate_success_counts(ens, effects, n_shots, rng)
        return estimate_perr(counts, ens.priors)

    return objective


def exact_evaluator(ens: StateEnsemble, layout: Layout) -> Callable[[np.ndarray], float]:
    """Evaluation-only map from a control vector to its exact error probability."""

    def evaluate(z: np.ndarray) -> float:
        return exact_perr(ens, layout.build_povm(z))

    return evaluate
