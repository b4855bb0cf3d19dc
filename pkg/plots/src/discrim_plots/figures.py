"""Figure rendering from the training harness's CSV files.

This package talks to the training harness only through its documented file
formats: `aggregate.csv` (one row per grid point) and `trace_<param>_<rep>.csv`
(one row per iteration).  Nothing here imports the harness.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.container import ErrorbarContainer

AGGREGATE_COLUMNS = (
    "param", "optimal_perr", "median_perr", "q1_perr", "q3_perr",
    "median_perr_est", "median_abs_gap", "reps", "N", "k_t", "N_total",
)
TRACE_COLUMNS = ("iteration", "perr_est_plus", "perr_est_minus", "perr_exact")

# columns that live on a probability axis and must stay inside [0, 1]
_PROBABILITY_COLUMNS = (
    "optimal_perr", "median_perr", "q1_perr", "q3_perr", "median_perr_est",
)

FIGURE_KINDS = ("bound-vs-param", "convergence-vs-iteration")


class SchemaError(ValueError):
    """An input file does not conform to the documented CSV schema."""


@dataclass(frozen=True)
class FigureSpec:
    """What to render: input files, figure kind, labels, output target."""

    kind: str
    out: Path
    aggregate: Path | None = None
    traces_dir: Path | None = None
    optimal: float | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    image_format: str | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r} (expected one of {FIGURE_KINDS})")
        object.__setattr__(self, "out", Path(self.out))
        if self.kind == "bound-vs-param":
            if self.aggregate is None:
                raise ValueError("bound-vs-param requires an aggregate path")
            object.__setattr__(self, "aggregate", Path(self.aggregate))
            if not self.aggregate.is_file():
                raise SchemaError(f"aggregate file not found: {self.aggregate}")
        else:
            if self.traces_dir is None or self.optimal is None:
                raise ValueError("convergence-vs-iteration requires traces_dir and optimal")
            object.__setattr__(self, "traces_dir", Path(self.traces_dir))
            if not self.traces_dir.is_dir():
                raise SchemaError(f"trace directory not found: {self.traces_dir}")
            if not 0.0 <= self.optimal <= 1.0:
                raise ValueError(f"optimal error probability must lie in [0, 1], got {self.optimal}")

    def resolved_out(self) -> tuple[Path, str]:
        """Output path and image format; the path extension wins when present."""
        fmt = self.image_format or "pdf"
        if self.out.suffix:
            return self.out, self.out.suffix.lstrip(".")
        return self.out.with_suffix("." + fmt), fmt


@dataclass(frozen=True)
class AggregateTable:
    """Parsed aggregate.csv columns as float arrays (counts kept as ints)."""

    param: np.ndarray
    optimal_perr: np.ndarray
    median_perr: np.ndarray
    q1_perr: np.ndarray
    q3_perr: np.ndarray
    median_perr_est: np.ndarray
    median_abs_gap: np.ndarray
    reps: np.ndarray
    n_shots: np.ndarray
    k_t: np.ndarray
    n_total: np.ndarray


@dataclass(frozen=True)
class TraceSet:
    """All repetitions of one grid point, stacked: arrays are (reps, iterations)."""

    param_token: str
    reps: tuple[int, ...]
    est_plus: np.ndarray
    est_minus: np.ndarray
    exact: np.ndarray

    @property
    def iterations(self) -> np.ndarray:
        return np.arange(self.est_plus.shape[1])


@dataclass
class RenderResult:
    """The written file plus the exact data series that were drawn.

    `line_count` counts standalone line series; lines owned by error-bar
    containers (the marker line and caps) are excluded.
    """

    out_path: Path
    series: dict[str, np.ndarray] = field(default_factory=dict)
    line_count: int = 0
    errorbar_count: int = 0
    band_count: int = 0


def read_aggregate(path) -> AggregateTable:
    """Parse and validate an aggregate.csv; empty tables are rejected."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        _check_header(header, AGGREGATE_COLUMNS, path)
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")

    columns = {}
    for j, name in enumerate(AGGREGATE_COLUMNS):
        try:
            columns[name] = np.array([float(row[j]) for row in rows])
        except (ValueError, IndexError):
            raise SchemaError(f"{path}: column {name!r} contains a non-numeric entry") from None
    for name in _PROBABILITY_COLUMNS:
        col = columns[name]
        if not np.all(np.isfinite(col)) or col.min() < 0.0 or col.max() > 1.0:
            raise SchemaError(f"{path}: column {name!r} has values outside [0, 1]")
    if np.any(columns["q1_perr"] > columns["median_perr"]) or np.any(
        columns["median_perr"] > columns["q3_perr"]
    ):
        raise SchemaError(f"{path}: column 'q1_perr' does not satisfy q1 <= median <= q3")
    return AggregateTable(
        param=columns["param"],
        optimal_perr=columns["optimal_perr"],
        median_perr=columns["median_perr"],
        q1_perr=columns["q1_perr"],
        q3_perr=columns["q3_perr"],
        median_perr_est=columns["median_perr_est"],
        median_abs_gap=columns["median_abs_gap"],
        reps=columns["reps"].astype(int),
        n_shots=columns["N"].astype(int),
        k_t=columns["k_t"].astype(int),
        n_total=columns["N_total"].astype(int),
    )


def _check_header(header, expected, path):
    if tuple(header) == tuple(expected):
        return
    missing = [c for c in expected if c not in header]
    extra = [c for c in header if c not in expected]
    if missing:
        raise SchemaError(f"{path}: missing column {missing[0]!r}")
    if extra:
        raise SchemaError(f"{path}: unexpected column {extra[0]!r}")
    raise SchemaError(f"{path}: columns out of order, expected {','.join(expected)}")


def read_traces(directory) -> TraceSet:
    """Load trace_<param>_<rep>.csv files for exactly one grid point.

    Repetition indices must be contiguous from 0; gaps are reported by index.
    """
    directory = Path(directory)
    found: dict[int, Path] = {}
    params = set()
    for entry in sorted(directory.glob("trace_*.csv")):
        stem = entry.name[len("trace_"):-len(".csv")]
        param_token, _, rep_token = stem.rpartition("_")
        if not param_token or not rep_token.isdigit():
            raise SchemaError(f"{entry}: trace files are named trace_<param>_<rep>.csv")
        params.add(param_token)
        found[int(rep_token)] = entry
    if not found:
        raise SchemaError(f"{directory}: no trace files")
    if len(params) > 1:
        raise SchemaError(
            f"{directory}: traces for several grid points ({', '.join(sorted(params))}); "
            "point at a single-grid-point run"
        )
    missing = sorted(set(range(max(found) + 1)) - set(found))
    if missing:
        raise SchemaError(f"{directory}: missing repetition trace(s) {missing}")

    plus_rows, minus_rows, exact_rows = [], [], []
    length = None
    for rep in range(len(found)):
        plus, minus, exact = _read_one_trace(found[rep])
        if length is None:
            length = plus.size
        elif plus.size != length:
            raise SchemaError(
                f"{found[rep]}: trace length {plus.size} differs from repetition 0's {length}"
            )
        plus_rows.append(plus)
        minus_rows.append(minus)
        exact_rows.append(exact)
    return TraceSet(
        param_token=params.pop(),
        reps=tuple(range(len(found))),
        est_plus=np.vstack(plus_rows),
        est_minus=np.vstack(minus_rows),
        exact=np.vstack(exact_rows),
    )


def _read_one_trace(path: Path):
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        _check_header(header, TRACE_COLUMNS, path)
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError:
        raise SchemaError(f"{path}: non-numeric entry") from None
    if data.shape[1] != len(TRACE_COLUMNS):
        raise SchemaError(f"{path}: expected {len(TRACE_COLUMNS)} columns")
    if not np.array_equal(data[:, 0], np.arange(data.shape[0])):
        raise SchemaError(f"{path}: iteration column must count 0..{data.shape[0] - 1}")
    est = data[:, 1:3]
    if not np.all(np.isfinite(est)) or est.min() < 0.0 or est.max() > 1.0:
        raise SchemaError(f"{path}: estimate columns have values outside [0, 1]")
    if not np.all(np.isfinite(data[:, 3])):
        raise SchemaError(f"{path}: column 'perr_exact' contains non-finite values")
    return data[:, 1], data[:, 2], data[:, 3]


def _figure_counts(axes) -> tuple[int, int, int]:
    lines = 0
    errorbars = 0
    bands = 0
    for ax in axes:
        containers = [c for c in ax.containers if isinstance(c, ErrorbarContainer)]
        owned = set()
        for container in containers:
            data_line, caplines, barcols = container
            if data_line is not None:
                owned.add(id(data_line))
            owned.update(id(line) for line in caplines)
        errorbars += len(containers)
        lines += sum(1 for line in ax.lines if id(line) not in owned)
        bands += len(ax.collections)
    return lines, errorbars, bands


def render_bound_figure(spec: FigureSpec) -> RenderResult:
    """Optimum curve plus median markers with interquartile error bars."""
    if spec.kind != "bound-vs-param":
        raise ValueError(f"render_bound_figure got kind {spec.kind!r}")
    table = read_aggregate(spec.aggregate)
    yerr_low = table.median_perr - table.q1_perr
    yerr_high = table.q3_perr - table.median_perr

    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    try:
        ax.plot(table.param, table.optimal_perr, color="black", lw=1.5, label="optimal")
        ax.errorbar(
            table.param, table.median_perr, yerr=[yerr_low, yerr_high],
            fmt="o", ms=4, capsize=3, color="tab:blue", label="trained (median, IQR)",
        )
        ax.set_xlabel(spec.xlabel or "state parameter")
        ax.set_ylabel(spec.ylabel or "average error probability")
        ax.legend(frameon=False)
        fig.tight_layout()
        out, fmt = spec.resolved_out()
        fig.savefig(out, format=fmt)
        lines, errorbars, bands = _figure_counts([ax])
    finally:
        plt.close(fig)
    return RenderResult(
        out_path=out,
        series={
            "param": table.param,
            "optimal_perr": table.optimal_perr,
            "median_perr": table.median_perr,
            "yerr_low": yerr_low,
            "yerr_high": yerr_high,
        },
        line_count=lines,
        errorbar_count=errorbars,
        band_count=bands,
    )


def render_convergence_figure(spec: FigureSpec) -> RenderResult:
    """Median exact-error curve with interquartile band, plus a log-scale
    panel of the median gap between the training-visible estimate and the
    optimum."""
    if spec.kind != "convergence-vs-iteration":
        raise ValueError(f"render_convergence_figure got kind {spec.kind!r}")
    traces = read_traces(spec.traces_dir)
    iters = traces.iterations
    q1, med, q3 = np.quantile(traces.exact, [0.25, 0.5, 0.75], axis=0)
    estimate = 0.5 * (traces.est_plus + traces.est_minus)
    gap = np.median(np.abs(estimate - spec.optimal), axis=0)

    fig, (ax_top, ax_bot) = plt.subplots(
        2, 1, figsize=(5.0, 5.2), sharex=True, height_ratios=[2, 1]
    )
    try:
        ax_top.fill_between(iters, q1, q3, alpha=0.3, color="tab:blue", lw=0)
        ax_top.plot(iters, med, color="tab:blue", lw=1.2, label="median exact error")
        ax_top.axhline(spec.optimal, color="black", lw=1.0, ls="--", label="optimal")
        ax_top.set_ylabel(spec.ylabel or "average error probability")
        ax_top.legend(frameon=False)

        ax_bot.semilogy(iters, gap, color="tab:red", lw=1.2)
        ax_bot.set_xlabel(spec.xlabel or "iteration")
        ax_bot.set_ylabel("median |estimate - optimal|")
        fig.tight_layout()
        out, fmt = spec.resolved_out()
        fig.savefig(out, format=fmt)
        lines, errorbars, bands = _figure_counts([ax_top, ax_bot])
    finally:
        plt.close(fig)
    return RenderResult(
        out_path=out,
        series={
            "iteration": iters,
            "median_exact": med,
            "band_low": q1,
            "band_high": q3,
            "optimal": np.array([spec.optimal]),
            "median_abs_gap": gap,
        },
        line_count=lines,
        errorbar_count=errorbars,
        band_count=bands,
    )
