"""Scenario parsing, sweep execution, and the command-line harness."""
import dataclasses
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import discrim.experiment as expmod
from discrim import cspsa
from discrim.baselines import helstrom_two_mixed
from discrim.cli import main
from discrim.cspsa import TrainingAborted
from discrim.experiment import (
    AGGREGATE_COLUMNS,
    Scenario,
    ScenarioError,
    bundled_scenarios,
    load_scenario,
    parse_scenario,
    run_scenario,
    write_results,
)
from discrim.sampling import exact_perr
from discrim.states import StateEnsemble, density, random_orthogonal_qubit_pair
from discrim.sampling import RngStream

SMALL = """
family = two-pure
N = 20
k_t = 10
reps = 3
seed = 99
s_grid = 0.3,0.5,0.7
"""

DEPHASING_WARM = """
family = dephasing
N = 30
k_t = 5
reps = 2
seed = 44300
layout = observable
init = warm-start-from-reference
p = 3/5
source = random-orthogonal
"""


class TestParsing:
    def test_minimal_scenario(self):
        sc = parse_scenario(SMALL)
        assert sc.family == "two-pure"
        assert (sc.n_shots, sc.k_t, sc.reps, sc.seed) == (20, 10, 3, 99)
        assert sc.s_grid == (0.3, 0.5, 0.7)
        assert sc.layout_kind == "general"
        assert sc.init == "random"

    def test_default_gains_for_scenarios(self):
        g = parse_scenario(SMALL).gains
        assert (g.a, g.A, g.s, g.b, g.r) == (9.0, 0.0, 0.602, 1.0, 0.101)

    def test_gain_override(self):
        sc = parse_scenario(SMALL + "gain_r = 0.25\n")
        assert sc.gains.r == 0.25
        assert sc.gains.a == 9.0

    def test_inline_comments_stripped(self):
        sc = parse_scenario(SMALL.replace("N = 20", "N = 20  # shots per state"))
        assert sc.n_shots == 20

    def test_range_grid(self):
        sc = parse_scenario(SMALL.replace("0.3,0.5,0.7", "0.1:0.9:9"))
        assert len(sc.s_grid) == 9
        assert_allclose(sc.s_grid, np.linspace(0.1, 0.9, 9), atol=1e-12)

    def test_single_point_range(self):
        sc = parse_scenario(SMALL.replace("0.3,0.5,0.7", "0.5:0.9:1"))
        assert sc.s_grid == (0.5,)

    def test_pi_expressions(self):
        text = """
family = symmetric-theta
N = 10
k_t = 5
reps = 2
seed = 1
theta1_grid = 0:pi:11
theta2 = pi/2
"""
        sc = parse_scenario(text)
        assert len(sc.theta1_grid) == 11
        assert sc.theta1_grid[0] == 0.0
        assert abs(sc.theta1_grid[-1] - math.pi) <= 1e-12
        assert_allclose(sc.theta2, math.pi / 2)

    def test_rounding_never_leaves_range(self):
        sc = parse_scenario("""
family = symmetric-theta
N = 10
k_t = 5
reps = 2
seed = 1
theta1_grid = 0:pi:7
theta2 = 0
""")
        assert all(0.0 <= t <= math.pi for t in sc.theta1_grid)

    def test_rejects_unknown_key(self):
        with pytest.raises(ScenarioError, match="unknown keys.*momentum"):
            parse_scenario(SMALL + "momentum = 0.9\n")

    def test_rejects_duplicate_key(self):
        with pytest.raises(ScenarioError, match="duplicate key"):
            parse_scenario(SMALL + "N = 21\n")

    def test_rejects_malformed_line_with_number(self):
        with pytest.raises(ScenarioError, match=":[0-9]+:"):
            parse_scenario(SMALL + "just some words\n")

    def test_rejects_missing_required(self):
        with pytest.raises(ScenarioError, match="missing required key"):
            parse_scenario("family = two-pure\ns_grid = 0.5\n")

    def test_rejects_zero_iteration_budget(self):
        with pytest.raises(ScenarioError, match="k_t"):
            parse_scenario(SMALL.replace("k_t = 10", "k_t = 0"))

    def test_rejects_out_of_range_grid(self):
        with pytest.raises(ScenarioError, match="s_grid"):
            parse_scenario(SMALL.replace("0.3,0.5,0.7", "0.3,1.2"))

    def test_rejects_scientific_notation(self):
        with pytest.raises(ScenarioError, match="cannot parse"):
            parse_scenario(SMALL.replace("0.3,0.5,0.7", "1e-1"))

    def test_rejects_warm_start_outside_dephasing(self):
        with pytest.raises(ScenarioError, match="warm start"):
            parse_scenario(SMALL + "init = warm-start-from-reference\n")

    def test_rejects_observable_layout_for_symmetric(self):
        text = """
family = symmetric-biparam
N = 10
k_t = 5
reps = 2
seed = 1
d = 4
j0 = 2
alpha_grid = 0.5
layout = observable
"""
        with pytest.raises(ScenarioError, match="general layout"):
            parse_scenario(text)

    def test_rejects_weak_dephasing(self):
        with pytest.raises(ScenarioError, match="p in"):
            parse_scenario(DEPHASING_WARM.replace("p = 3/5", "p = 0.3"))

    def test_rejects_unknown_dephasing_source(self):
        with pytest.raises(ScenarioError, match="source"):
            parse_scenario(DEPHASING_WARM.replace("random-orthogonal", "bell-pairs"))

    def test_dephasing_grid_is_single_point(self):
        sc = parse_scenario(DEPHASING_WARM)
        assert sc.grid_values() == (0.6,)

    def test_shot_accounting(self):
        assert parse_scenario(SMALL).n_total_per_rep() == 2 * 20 * 10


class TestBundledScenarios:
    def test_all_present(self):
        names = set(bundled_scenarios())
        assert names == {
            "fig1a", "fig1b", "fig1c", "fig2a_caption", "fig2a_text",
            "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "fig4",
        }

    def test_all_parse(self):
        for name, path in bundled_scenarios().items():
            sc = load_scenario(path)
            assert sc.reps >= 1, name

    def test_fig1c_budget(self):
        sc = load_scenario(bundled_scenarios()["fig1c"])
        assert (sc.n_shots, sc.k_t, sc.reps) == (50, 300, 100)
        assert len(sc.s_grid) == 9
        assert_allclose(sc.s_grid, np.linspace(0.1, 0.9, 9), atol=1e-12)

    def test_fig4_warm_start(self):
        sc = load_scenario(bundled_scenarios()["fig4"])
        assert sc.family == "dephasing"
        assert sc.init == "warm-start-from-reference"
        assert sc.layout_kind == "observable"
        assert sc.gains.r == 0.25


def run_small(**overrides):
    sc = dataclasses.replace(parse_scenario(SMALL), **overrides)
    return sc, run_scenario(sc)


class TestExecution:
    def test_aggregate_row_accounting(self):
        sc, result = run_small()
        assert len(result.rows) == 3
        for row, value in zip(result.rows, sc.s_grid):
            assert row.param == value
            assert (row.reps, row.n_shots, row.k_t) == (3, 20, 10)
            assert row.n_total == 400
            assert row.q1_perr <= row.median_perr <= row.q3_perr
            assert 0.0 <= row.median_perr <= 1.0

    def test_quantiles_recomputed_from_traces(self):
        sc = dataclasses.replace(parse_scenario(SMALL), reps=4, s_grid=(0.5,))
        result = run_scenario(sc, traces=True)
        finals = [result.traces[(0.5, rep)].exact[-1] for rep in range(4)]
        q1, med, q3 = np.quantile(finals, [0.25, 0.5, 0.75])
        row = result.rows[0]
        assert_allclose([row.q1_perr, row.median_perr, row.q3_perr], [q1, med, q3], atol=1e-15)
        ests = [
            0.5 * (result.traces[(0.5, rep)].est_plus[-1] + result.traces[(0.5, rep)].est_minus[-1])
            for rep in range(4)
        ]
        assert_allclose(row.median_perr_est, np.median(ests), atol=1e-15)
        gaps = np.abs(np.array(ests) - row.optimal_perr)
        assert_allclose(row.median_abs_gap, np.median(gaps), atol=1e-15)

    def test_grid_points_independent(self):
        _, full = run_small()
        _, single = run_small(s_grid=(0.5,))
        row_full = next(r for r in full.rows if r.param == 0.5)
        assert row_full == single.rows[0]

    def test_parallel_matches_serial(self):
        sc = parse_scenario(SMALL)
        serial = run_scenario(sc, jobs=1)
        parallel = run_scenario(sc, jobs=2)
        assert serial.rows == parallel.rows

    def test_orthogonal_states_trained_to_near_zero(self):
        sc = load_scenario(bundled_scenarios()["fig1c"])
        sc = dataclasses.replace(sc, s_grid=(0.0,), reps=10)
        result = run_scenario(sc)
        assert result.rows[0].optimal_perr == 0.0
        assert result.rows[0].median_perr <= 1e-3

    def test_manifest_contents(self):
        sc, result = run_small()
        m = result.manifest
        assert m["base_seed"] == 99
        assert m["n_total_per_rep"] == 400
        assert m["failures"] == []
        assert m["scenario"]["family"] == "two-pure"
        assert m["scenario"]["gains"]["a"] == 9.0
        assert m["scenario"]["s_grid"] == [0.3, 0.5, 0.7]
        assert [g["param"] for g in m["grid"]] == [0.3, 0.5, 0.7]
        for g in m["grid"]:
            assert 0.0 <= g["optimal_perr"] <= 0.5
            assert len(g["stream_key"]) == 1


class TestWarmStart:
    @pytest.mark.parametrize("layout", ["observable", "general"])
    def test_start_point_encodes_pre_channel_optimum(self, layout):
        sc = parse_scenario(DEPHASING_WARM.replace("layout = observable", f"layout = {layout}"))
        point = expmod._prepare_grid_point(sc, 0.6)
        assert point.warm_z0 is not None
        assert point.warm_z0.size == point.layout.control_len

        pair_rng = RngStream(sc.seed, expmod._PAIR_STREAM).generator()
        psi0, psi1 = random_orthogonal_qubit_pair(pair_rng)
        pure = StateEnsemble(states=(density(psi0), density(psi1)), priors=(0.5, 0.5))
        ref = helstrom_two_mixed(pure.states[0], pure.states[1], 0.5, 0.5)
        effects = point.layout.build_povm(point.warm_z0)
        # the starting measurement is optimal for the states before the channel
        assert_allclose(exact_perr(pure, effects), ref.p_err, atol=1e-10)
        for got, want in zip(effects, ref.povm):
            assert_allclose(got, want, atol=1e-9)

    def test_observable_start_is_row_major_unitary(self):
        sc = parse_scenario(DEPHASING_WARM)
        point = expmod._prepare_grid_point(sc, 0.6)
        u = point.warm_z0.reshape(2, 2)
        assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-10)

    def test_warm_reps_share_start_but_not_noise(self):
        sc = dataclasses.replace(parse_scenario(DEPHASING_WARM), reps=2)
        result = run_scenario(sc, traces=True)
        t0 = result.traces[(0.6, 0)]
        t1 = result.traces[(0.6, 1)]
        assert t0.est_plus != t1.est_plus


class TestFailureHandling:
    def test_degenerate_abort_skips_grid_point(self, monkeypatch):
        real = expmod._run_one_rep

        def flaky(sc, point, rep, want_trace):
            if point.value == 0.5:
                raise TrainingAborted("degenerate control at iteration 3", cspsa.RunTrace())
            return real(sc, point, rep, want_trace)

        monkeypatch.setattr(expmod, "_run_one_rep", flaky)
        _, result = run_small()
        assert [r.param for r in result.rows] == [0.3, 0.7]
        assert len(result.failures) == 1
        assert result.failures[0]["param"] == 0.5
        assert result.manifest["failures"] == result.failures

    def test_cli_reports_partial_failure(self, monkeypatch, tmp_path):
        def always_abort(sc, point, rep, want_trace):
            raise TrainingAborted("degenerate control at iteration 0", cspsa.RunTrace())

        monkeypatch.setattr(expmod, "_run_one_rep", always_abort)
        scn = tmp_path / "bad.scn"
        scn.write_text(SMALL)
        assert main(["run", "--scenario", str(scn), "--out", str(tmp_path / "out")]) == 2


class TestOutputFiles:
    def test_csv_header_exact(self, tmp_path):
        _, result = run_small(s_grid=(0.5,))
        write_results(result, tmp_path)
        lines = (tmp_path / "aggregate.csv").read_text().splitlines()
        assert lines[0] == "param,optimal_perr,median_perr,q1_perr,q3_perr,median_perr_est,median_abs_gap,reps,N,k_t,N_total"
        assert len(lines) == 2
        assert lines[1].startswith("0.5,")
        assert len(lines[1].split(",")) == len(AGGREGATE_COLUMNS)

    def test_trace_files(self, tmp_path):
        sc = dataclasses.replace(parse_scenario(SMALL), s_grid=(0.5,), reps=2)
        result = run_scenario(sc, traces=True)
        write_results(result, tmp_path)
        for rep in range(2):
            path = tmp_path / f"trace_0.5_{rep}.csv"
            lines = path.read_text().splitlines()
            assert lines[0] == "iteration,perr_est_plus,perr_est_minus,perr_exact"
            assert len(lines) == 1 + sc.k_t
            assert lines[1].split(",")[0] == "0"
            assert lines[-1].split(",")[0] == str(sc.k_t - 1)
            # every cell must be a bare number
            for line in lines[1:]:
                values = [float(v) for v in line.split(",")]
                assert len(values) == 4
                assert all(0.0 <= v <= 1.0 for v in values[1:])

    def test_manifest_round_trips_as_json(self, tmp_path):
        _, result = run_small()
        write_results(result, tmp_path)
        loaded = json.loads((tmp_path / "manifest.json").read_text())
        assert loaded["base_seed"] == 99


class TestCli:
    def test_run_replays_byte_identical(self, tmp_path):
        scn = tmp_path / "tiny.scn"
        scn.write_text(SMALL)
        outs = []
        for sub in ("one", "two"):
            out = tmp_path / sub
            code = main(["run", "--scenario", str(scn), "--out", str(out), "--traces"])
            assert code == 0
            outs.append(out)
        for name in sorted(p.name for p in outs[0].iterdir()):
            a = (outs[0] / name).read_bytes()
            b = (outs[1] / name).read_bytes()
            assert a == b, name

    def test_run_accepts_bundled_name_and_overrides(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main([
            "run", "--scenario", "fig1b", "--out", str(out), "--reps", "2", "--seed", "7",
        ])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["base_seed"] == 7
        assert manifest["scenario"]["reps"] == 2
        assert "wrote" in capsys.readouterr().out

    def test_validate_bundled(self, capsys):
        assert main(["validate", "--scenario", "fig1c"]) == 0
        assert capsys.readouterr().out.startswith("ok:")

    def test_validate_bad_file(self, tmp_path, capsys):
        scn = tmp_path / "broken.scn"
        scn.write_text(SMALL + "momentum = 1\n")
        assert main(["validate", "--scenario", str(scn)]) == 1
        assert "scenario error" in capsys.readouterr().err

    def test_unknown_scenario_name(self, capsys):
        assert main(["validate", "--scenario", "no-such-scenario"]) == 1
        assert "no scenario file" in capsys.readouterr().err

    def test_list_scenarios(self, capsys):
        assert main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        for name in ("fig1a", "fig1b", "fig1c", "fig4"):
            assert name in out
