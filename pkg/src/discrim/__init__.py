"""Minimum-error discrimination of quantum states with a trainable measurement.

The package simulates a parameterized measurement device, estimates its error
probability from finite-shot statistics, and improves it with a complex-domain
simultaneous perturbation optimizer.  Analytic optima (Helstrom bound, trace
norm, Fourier measurement for symmetric states) serve as ground truth.
"""

__version__ = "0.1.0"

from .states import (
    StateEnsemble,
    DephasingChannel,
    make_two_pure_states,
    make_symmetric_states,
    make_three_state_coeffs,
    make_biparametric_coeffs,
    apply_dephasing,
    born_probability,
    fidelity,
)
from .povm import (
    DegenerateControlError,
    Layout,
    general_layout,
    observable_layout,
    qr_isometry,
    povm_from_control,
    observable_from_control,
    validate_povm,
    random_control,
)
from .sampling import (
    RngStream,
    SuccessCounts,
    simulate_success_counts,
    estimate_perr,
    exact_perr,
    noisy_objective,
)
from .cspsa import (
    GainSchedule,
    OptimizerState,
    RunTrace,
    TrainingAborted,
    draw_perturbation,
    pseudo_gradient,
    step,
    run,
)
from .baselines import (
    OptimalReference,
    trace_norm,
    helstrom_two_pure,
    helstrom_two_mixed,
    symmetric_optimal,
    symmetric_closed_form,
    fourier_observable,
)
from .experiment import (
    Scenario,
    ScenarioError,
    AggregateRow,
    ScenarioResult,
    load_scenario,
    run_scenario,
    write_results,
    bundled_scenarios,
)

__all__ = [
    "__version__",
    "StateEnsemble", "DephasingChannel", "make_two_pure_states",
    "make_symmetric_states", "make_three_state_coeffs", "make_biparametric_coeffs",
    "apply_dephasing", "born_probability", "fidelity",
    "DegenerateControlError", "Layout", "general_layout", "observable_layout",
    "qr_isometry", "povm_from_control", "observable_from_control",
    "validate_povm", "random_control",
    "RngStream", "SuccessCounts", "simulate_success_counts", "estimate_perr",
    "exact_perr", "noisy_objective",
    "GainSchedule", "OptimizerState", "RunTrace", "TrainingAborted",
    "draw_perturbation", "pseudo_gradient", "step", "run",
    "OptimalReference", "trace_norm", "helstrom_two_pure", "helstrom_two_mixed",
    "symmetric_optimal", "symmetric_closed_form", "fourier_observable",
    "Scenario", "ScenarioError", "AggregateRow", "ScenarioResult",
    "load_scenario", "run_scenario", "write_results", "bundled_scenarios",
]
