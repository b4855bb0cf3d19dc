"""Scenario-driven training sweeps with reproducible aggregation.

A scenario file is a flat `key = value` text format selecting a state family,
a parameter grid, the shot/iteration budget, and the gain schedule.  For each
grid point the harness runs independent training repetitions, each owning a
random stream derived from (base seed, grid value, repetition index), and
aggregates the final error probabilities into medians and quartiles.
"""
from __future__ import annotations

import json
import math
import re
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import cspsa
from .baselines import OptimalReference, helstrom_two_mixed, helstrom_two_pure, symmetric_optimal
from .cspsa import GainSchedule, TrainingAborted
from .povm import Layout, general_layout, observable_layout, random_control
from .sampling import RngStream, exact_evaluator, noisy_objective
from .states import (
    DephasingChannel,
    StateEnsemble,
    apply_dephasing,
    density,
    make_biparametric_coeffs,
    make_symmetric_states,
    make_three_state_coeffs,
    make_two_pure_states,
    random_orthogonal_qubit_pair,
)

AGGREGATE_COLUMNS = (
    "param", "optimal_perr", "median_perr", "q1_perr", "q3_perr",
    "median_perr_est", "median_abs_gap", "reps", "N", "k_t", "N_total",
)

FAMILIES = ("two-pure", "symmetric-theta", "symmetric-biparam", "dephasing")

# schedule used by scenario files that do not set gain_* keys; tuned for
# shot-noise objectives, unlike the quadratic-calibrated library defaults
SCENARIO_GAINS = GainSchedule(a=9.0, A=0.0, s=0.602, b=1.0, r=0.101)

_COMMON_KEYS = {
    "family", "N", "k_t", "reps", "seed", "layout", "init",
    "gain_a", "gain_A", "gain_s", "gain_b", "gain_r",
}
_FAMILY_KEYS = {
    "two-pure": {"s_grid", "eta0", "eta1"},
    "symmetric-theta": {"theta1_grid", "theta2"},
    "symmetric-biparam": {"d", "j0", "alpha_grid"},
    "dephasing": {"p", "source", "s"},
}


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


@dataclass(frozen=True)
class Scenario:
    """Validated experiment description."""

    family: str
    n_shots: int
    k_t: int
    reps: int
    seed: int
    layout_kind: str = "general"
    init: str = "random"
    gains: GainSchedule = SCENARIO_GAINS
    # family parameters; unused ones stay None
    s_grid: tuple[float, ...] | None = None
    eta0: float = 0.5
    eta1: float = 0.5
    theta1_grid: tuple[float, ...] | None = None
    theta2: float | None = None
    d: int | None = None
    j0: int | None = None
    alpha_grid: tuple[float, ...] | None = None
    p: float | None = None
    source: str | None = None
    s: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ScenarioError(f"unknown family {self.family!r}")
        for name, value in (("N", self.n_shots), ("k_t", self.k_t), ("reps", self.reps)):
            if value < 1:
                raise ScenarioError(f"{name} must be >= 1, got {value}")
        if not 0 <= self.seed < 2**64:
            raise ScenarioError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.layout_kind not in ("general", "observable"):
            raise ScenarioError(f"unknown layout {self.layout_kind!r}")
        if self.init not in ("random", "warm-start-from-reference"):
            raise ScenarioError(f"unknown init {self.init!r}")
        if self.init == "warm-start-from-reference" and self.family != "dephasing":
            raise ScenarioError("warm start is defined for the dephasing family only")
        getattr(self, "_validate_" + self.family.replace("-", "_"))()

    def _validate_two_pure(self):
        if not self.s_grid:
            raise ScenarioError("two-pure requires a non-empty s_grid")
        if any(not 0.0 <= s <= 1.0 for s in self.s_grid):
            raise ScenarioError("s_grid values must lie in [0, 1]")
        if self.eta0 < 0 or self.eta1 < 0 or abs(self.eta0 + self.eta1 - 1.0) > 1e-12:
            raise ScenarioError(f"priors ({self.eta0}, {self.eta1}) must be non-negative and sum to 1")

    def _validate_symmetric_theta(self):
        if not self.theta1_grid:
            raise ScenarioError("symmetric-theta requires a non-empty theta1_grid")
        if self.theta2 is None:
            raise ScenarioError("symmetric-theta requires theta2")
        if any(not 0.0 <= t <= math.pi for t in (*self.theta1_grid, self.theta2)):
            raise ScenarioError("theta values must lie in [0, pi]")
        if self.layout_kind != "general":
            raise ScenarioError("symmetric families use the general layout")

    def _validate_symmetric_biparam(self):
        if self.d is None or self.j0 is None or not self.alpha_grid:
            raise ScenarioError("symmetric-biparam requires d, j0, and a non-empty alpha_grid")
        if self.d < 2 or not 1 <= self.j0 <= self.d - 1:
            raise ScenarioError(f"need d >= 2 and j0 in [1, d-1], got d={self.d}, j0={self.j0}")
        if any(not 0.0 <= a <= 1.0 for a in self.alpha_grid):
            raise ScenarioError("alpha_grid values must lie in [0, 1]")
        if self.layout_kind != "general":
            raise ScenarioError("symmetric families use the general layout")

    def _validate_dephasing(self):
        if self.p is None or not 0.5 <= self.p <= 1.0:
            raise ScenarioError(f"dephasing requires p in [1/2, 1], got {self.p}")
        if self.source not in ("random-orthogonal", "two-pure"):
            raise ScenarioError("dephasing source must be random-orthogonal or two-pure")
        if self.source == "two-pure" and (self.s is None or not 0.0 <= self.s <= 1.0):
            raise ScenarioError("dephasing with a two-pure source requires s in [0, 1]")

    def grid_values(self) -> tuple[float, ...]:
        if self.family == "two-pure":
            return self.s_grid
        if self.family == "symmetric-theta":
            return self.theta1_grid
        if self.family == "symmetric-biparam":
            return self.alpha_grid
        return (self.p,)

    def n_total_per_rep(self) -> int:
        return 2 * self.n_shots * self.k_t


# ---------------------------------------------------------------------------
# scenario file parsing

_PI_TOKEN = re.compile(r"^[0-9pi+\-*/. ()]+$")


def _parse_number(token: str, where: str) -> float:
    token = token.strip()
    if not token or not _PI_TOKEN.match(token):
        raise ScenarioError(f"{where}: cannot parse number {token!r}")
    try:
        value = eval(token, {"__builtins__": {}}, {"pi": math.pi})  # guarded by _PI_TOKEN
    except Exception as exc:
        raise ScenarioError(f"{where}: cannot parse number {token!r}") from exc
    if not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: {token!r} is not a number")
    return float(value)


def _parse_grid(token: str, where: str) -> tuple[float, ...]:
    """Grids are `start:stop:count` (inclusive, count points) or comma lists."""
    token = token.strip()
    if ":" in token:
        parts = token.split(":")
        if len(parts) != 3:
            raise ScenarioError(f"{where}: grid ranges take start:stop:count")
        start, stop = (_parse_number(p, where) for p in parts[:2])
        try:
            count = int(parts[2])
        except ValueError:
            raise ScenarioError(f"{where}: grid count must be an integer") from None
        if count < 1:
            raise ScenarioError(f"{where}: grid count must be >= 1")
        if count == 1:
            values = np.array([start])
        else:
            values = np.linspace(start, stop, count)
        # round so CSV params and trace filenames stay clean, but never let
        # rounding push a value past the range endpoints (pi rounds upward)
        lo, hi = min(start, stop), max(start, stop)
        values = np.clip(np.round(values, 12), lo, hi)
    else:
        values = np.array([_parse_number(p, where) for p in token.split(",")])
    return tuple(float(v) for v in values)


def _parse_int(token: str, where: str) -> int:
    try:
        return int(token.strip())
    except ValueError:
        raise ScenarioError(f"{where}: expected an integer, got {token!r}") from None


def parse_scenario(text: str, name: str = "<scenario>") -> Scenario:
    """Parse flat `key = value` scenario text; unknown keys are rejected."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ScenarioError(f"{name}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in raw:
            raise ScenarioError(f"{name}:{lineno}: duplicate key {key!r}")
        raw[key] = value.split("#", 1)[0].strip()

    family = raw.get("family")
    if family is None:
        raise ScenarioError(f"{name}: missing required key 'family'")
    if family not in FAMILIES:
        raise ScenarioError(f"{name}: unknown family {family!r}")
    allowed = _COMMON_KEYS | _FAMILY_KEYS[family]
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ScenarioError(f"{name}: unknown keys for family {family}: {', '.join(unknown)}")
    for required in ("N", "k_t", "reps", "seed"):
        if required not in raw:
            raise ScenarioError(f"{name}: missing required key {required!r}")

    gains_kwargs = {}
    for short, fld in (("a", "a"), ("A", "A"), ("s", "s"), ("b", "b"), ("r", "r")):
        key = f"gain_{short}"
        if key in raw:
            gains_kwargs[fld] = _parse_number(raw[key], f"{name}: {key}")
    try:
        gains = replace(SCENARIO_GAINS, **gains_kwargs) if gains_kwargs else SCENARIO_GAINS
    except ValueError as exc:
        raise ScenarioError(f"{name}: {exc}") from exc

    kwargs = dict(
        family=family,
        n_shots=_parse_int(raw["N"], f"{name}: N"),
        k_t=_parse_int(raw["k_t"], f"{name}: k_t"),
        reps=_parse_int(raw["reps"], f"{name}: reps"),
        seed=_parse_int(raw["seed"], f"{name}: seed"),
        layout_kind=raw.get("layout", "general"),
        init=raw.get("init", "random"),
        gains=gains,
    )
    if family == "two-pure":
        kwargs["s_grid"] = _parse_grid(raw["s_grid"], f"{name}: s_grid") if "s_grid" in raw else None
        kwargs["eta0"] = _parse_number(raw.get("eta0", "0.5"), f"{name}: eta0")
        kwargs["eta1"] = _parse_number(raw.get("eta1", "0.5"), f"{name}: eta1")
    elif family == "symmetric-theta":
        if "theta1_grid" in raw:
            kwargs["theta1_grid"] = _parse_grid(raw["theta1_grid"], f"{name}: theta1_grid")
        if "theta2" in raw:
            kwargs["theta2"] = _parse_number(raw["theta2"], f"{name}: theta2")
    elif family == "symmetric-biparam":
        if "d" in raw:
            kwargs["d"] = _parse_int(raw["d"], f"{name}: d")
        if "j0" in raw:
            kwargs["j0"] = _parse_int(raw["j0"], f"{name}: j0")
        if "alpha_grid" in raw:
            kwargs["alpha_grid"] = _parse_grid(raw["alpha_grid"], f"{name}: alpha_grid")
    else:
        if "p" in raw:
            kwargs["p"] = _parse_number(raw["p"], f"{name}: p")
        kwargs["source"] = raw.get("source", "random-orthogonal")
        if "s" in raw:
            kwargs["s"] = _parse_number(raw["s"], f"{name}: s")
    try:
        return Scenario(**kwargs)
    except ScenarioError as exc:
        raise ScenarioError(f"{name}: {exc}") from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    return parse_scenario(path.read_text(), name=path.name)


def bundled_scenarios() -> dict[str, Path]:
    """Name -> path of the scenario files shipped with the package."""
    base = resources.files("discrim") / "scenarios"
    return {
        entry.name.removesuffix(".scn"): Path(str(entry))
        for entry in sorted(base.iterdir(), key=lambda e: e.name)
        if entry.name.endswith(".scn")
    }


# ---------------------------------------------------------------------------
# execution

@dataclass(frozen=True)
class GridPoint:
    """A prepared grid point: ensemble, reference optimum, layout, start point."""

    value: float
    ensemble: StateEnsemble
    reference: OptimalReference
    layout: Layout
    warm_z0: np.ndarray | None


@dataclass(frozen=True)
class AggregateRow:
    param: float
    optimal_perr: float
    median_perr: float
    q1_perr: float
    q3_perr: float
    median_perr_est: float
    median_abs_gap: float
    reps: int
    n_shots: int
    k_t: int
    n_total: int


@dataclass
class ScenarioResult:
    rows: list[AggregateRow]
    traces: dict[tuple[float, int], cspsa.RunTrace]
    manifest: dict
    failures: list[dict] = field(default_factory=list)


# reserved 1-element spawn key for scenario-level draws (the dephasing source
# pair); per-repetition streams always use 2-element keys, so no collisions
_PAIR_STREAM = (0xD1CE,)


def _param_stream_key(value: float) -> int:
    return zlib.crc32(repr(value).encode("ascii"))


def _prepare_grid_point(sc: Scenario, value: float) -> GridPoint:
    if sc.family == "two-pure":
        ens = make_two_pure_states(value, sc.eta0, sc.eta1)
        ref = helstrom_two_pure(value, sc.eta0, sc.eta1)
    elif sc.family == "symmetric-theta":
        coeffs = make_three_state_coeffs(value, sc.theta2)
        ens = make_symmetric_states(coeffs)
        ref = symmetric_optimal(coeffs)
    elif sc.family == "symmetric-biparam":
        coeffs = make_biparametric_coeffs(sc.d, sc.j0, value)
        ens = make_symmetric_states(coeffs)
        ref = symmetric_optimal(coeffs)
    else:
        return _prepare_dephasing_point(sc, value)
    layout = (
        general_layout(ens.n, ens.d)
        if sc.layout_kind == "general"
        else observable_layout(ens.d)
    )
    return GridPoint(value=value, ensemble=ens, reference=ref, layout=layout, warm_z0=None)


def _prepare_dephasing_point(sc: Scenario, p_value: float) -> GridPoint:
    if sc.source == "random-orthogonal":
        pair_rng = RngStream(sc.seed, _PAIR_STREAM).generator()
        psi0, psi1 = random_orthogonal_qubit_pair(pair_rng)
        pure0, pure1 = density(psi0), density(psi1)
    else:
        pure_ens = make_two_pure_states(sc.s, 0.5, 0.5)
        pure0, pure1 = pure_ens.states
    channel = DephasingChannel(p_value)
    rho0 = apply_dephasing(pure0, channel)
    rho1 = apply_dephasing(pure1, channel)
    ens = StateEnsemble(states=(rho0, rho1), priors=np.array([0.5, 0.5]))
    ref = helstrom_two_mixed(rho0, rho1, 0.5, 0.5)
    layout = (
        general_layout(2, 2) if sc.layout_kind == "general" else observable_layout(2)
    )
    warm_z0 = None
    if sc.init == "warm-start-from-reference":
        warm_z0 = _warm_start_control(pure0, pure1, sc.layout_kind)
    return GridPoint(value=p_value, ensemble=ens, reference=ref, layout=layout, warm_z0=warm_z0)


def _warm_start_control(pure0, pure1, layout_kind: str) -> np.ndarray:
    """Control encoding the observable that optimally splits the pre-channel pair.

    The unitary whose columns are the eigenvectors of (rho0 - rho1)/2, ordered
    so column i answers outcome i, is flattened row-major.  For the general
    layout the same projective measurement is encoded as stacked effect blocks.
    """
    ref = helstrom_two_mixed(pure0, pure1, 0.5, 0.5)
    e0, e1 = ref.povm
    eigvals0, vecs0 = np.linalg.eigh(e0)
    eigvals1, vecs1 = np.linalg.eigh(e1)
    u = np.column_stack([vecs0[:, np.argmax(eigvals0)], vecs1[:, np.argmax(eigvals1)]])
    if layout_kind == "observable":
        return u.reshape(-1).astype(complex)
    return np.concatenate([np.asarray(e0).reshape(-1), np.asarray(e1).reshape(-1)])


def _run_one_rep(sc: Scenario, point: GridPoint, rep: int, want_trace: bool):
    """One independent training repetition; returns finals and optionally the trace."""
    stream = RngStream(sc.seed, (_param_stream_key(point.value), rep))
    rng = stream.generator()
    if point.warm_z0 is not None:
        z0 = point.warm_z0
    else:
        z0 = random_control(point.layout, rng)
    objective = noisy_objective(point.ensemble, sc.n_shots, rng, point.layout)
    evaluator = exact_evaluator(point.ensemble, point.layout)
    trace = cspsa.run(z0, objective, sc.gains, sc.k_t, rng, evaluator=evaluator)
    final_exact = trace.exact[-1]
    final_est = 0.5 * (trace.est_plus[-1] + trace.est_minus[-1])
    return final_exact, final_est, (trace if want_trace else None)


def _run_rep_task(args):
    sc, point, rep, want_trace = args
    try:
        return rep, _run_one_rep(sc, point, rep, want_trace), None
    except TrainingAborted as exc:
        return rep, None, str(exc)


def run_scenario(
    sc: Scenario,
    *,
    traces: bool = False,
    jobs: int = 1,
    progress=None,
) -> ScenarioResult:
    """Run every grid point and aggregate final error probabilities.

    A degenerate-control abort skips the affected grid point (recorded under
    failures); remaining grid points still run.
    """
    rows: list[AggregateRow] = []
    all_traces: dict[tuple[float, int], cspsa.RunTrace] = {}
    failures: list[dict] = []
    grid_manifest = []

    for value in sc.grid_values():
        point = _prepare_grid_point(sc, value)
        grid_manifest.append({
            "param": value,
            "optimal_perr": point.reference.p_err,
            "stream_key": [_param_stream_key(value)],
        })
        tasks = [(sc, point, rep, traces) for rep in range(sc.reps)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                outcomes = list(pool.map(_run_rep_task, tasks))
        else:
            outcomes = [_run_rep_task(t) for t in tasks]

        errors = [(rep, msg) for rep, _, msg in outcomes if msg is not None]
        if errors:
            failures.append({
                "param": value,
                "errors": [{"rep": rep, "message": msg} for rep, msg in errors],
            })
            continue

        finals_exact = np.array([res[0] for _, res, _ in outcomes])
        finals_est = np.array([res[1] for _, res, _ in outcomes])
        if traces:
            for rep, res, _ in outcomes:
                all_traces[(value, rep)] = res[2]
        q1, med, q3 = np.quantile(finals_exact, [0.25, 0.5, 0.75])
        row = AggregateRow(
            param=value,
            optimal_perr=point.reference.p_err,
            median_perr=float(med),
            q1_perr=float(q1),
            q3_perr=float(q3),
            median_perr_est=float(np.median(finals_est)),
            median_abs_gap=float(np.median(np.abs(finals_est - point.reference.p_err))),
            reps=sc.reps,
            n_shots=sc.n_shots,
            k_t=sc.k_t,
            n_total=sc.n_total_per_rep(),
        )
        rows.append(row)
        if progress is not None:
            progress(row)

    manifest = _build_manifest(sc, grid_manifest, failures)
    return ScenarioResult(rows=rows, traces=all_traces, manifest=manifest, failures=failures)


def _build_manifest(sc: Scenario, grid_manifest: list[dict], failures: list[dict]) -> dict:
    from . import __version__

    scenario_echo = {
        "family": sc.family, "N": sc.n_shots, "k_t": sc.k_t, "reps": sc.reps,
        "seed": sc.seed, "layout": sc.layout_kind, "init": sc.init,
        "gains": {"a": sc.gains.a, "A": sc.gains.A, "s": sc.gains.s,
                  "b": sc.gains.b, "r": sc.gains.r},
    }
    for fld in sorted(_FAMILY_KEYS[sc.family]):
        value = getattr(sc, fld)
        if value is None:
            continue
        if isinstance(value, tuple):
            value = list(value)
        scenario_echo[fld] = value
    return {
        "artifact_version": __version__,
        "base_seed": sc.seed,
        "scenario": scenario_echo,
        "grid": grid_manifest,
        "n_total_per_rep": sc.n_total_per_rep(),
        "failures": failures,
    }


# ---------------------------------------------------------------------------
# output files

def _format_value(x) -> str:
    # repr of floats is the shortest round-trip form, keeping files byte-stable;
    # the float() call strips numpy scalar wrappers, whose repr is not bare
    return repr(float(x)) if isinstance(x, float) else str(x)


def write_results(result: ScenarioResult, out_dir) -> list[Path]:
    """Write aggregate.csv, optional per-repetition traces, and manifest.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    agg = out / "aggregate.csv"
    lines = [",".join(AGGREGATE_COLUMNS)]
    for row in result.rows:
        lines.append(",".join(_format_value(v) for v in (
            row.param, row.optimal_perr, row.median_perr, row.q1_perr, row.q3_perr,
            row.median_perr_est, row.median_abs_gap, row.reps, row.n_shots,
            row.k_t, row.n_total,
        )))
    agg.write_text("\n".join(lines) + "\n")
    written.append(agg)

    for (value, rep), trace in result.traces.items():
        path = out / f"trace_{_format_value(value)}_{rep}.csv"
        rows = ["iteration,perr_est_plus,perr_est_minus,perr_exact"]
        exact = trace.exact if trace.exact else [math.nan] * len(trace)
        for k in range(len(trace)):
            rows.append(",".join((
                str(k),
                _format_value(trace.est_plus[k]),
                _format_value(trace.est_minus[k]),
                _format_value(exact[k]),
            )))
        path.write_text("\n".join(rows) + "\n")
        written.append(path)

    manifest = out / "manifest.json"
    manifest.write_text(json.dumps(result.manifest, indent=2, sort_keys=True) + "\n")
    written.append(manifest)
    return written
