"""Command line surface, exercised through cli_dispatch.

Calling the dispatcher directly keeps these fast (no subprocess) while
still covering argument parsing, config merging, and exit codes.
"""

import json

import pytest

from conftest import make_dataset

from netpop.cli import cli_dispatch
from netpop.data import load_dataset, save_dataset

SPEC = {
    "kind": "homogeneous",
    "config": {
        "entities_per_population": 3,
        "time_points": 1,
        "V": 6,
        "zipf_lambda": 1.0,
        "seed": 7,
    },
    "populations": [
        [{"V": 6, "baseline_prob": 0.05,
          "blocks": [{"rows": [0, 3], "cols": [0, 3], "prob": 0.7}]}],
        [{"V": 6, "baseline_prob": 0.05,
          "blocks": [{"rows": [3, 6], "cols": [3, 6], "prob": 0.7}]}],
    ],
}

FIT_CONFIG = {
    "n_clusters": 3,
    "latent_dim": 2,
    "n_samples": 30,
    "burn_in": 10,
    "thin": 4,
    "seed": 5,
}


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """simulate + fit once; the test command is cheap enough to re-run."""
    root = tmp_path_factory.mktemp("cli")
    spec = write_json(root / "spec.json", SPEC)
    data_dir = root / "data"
    run_dir = root / "run"
    assert cli_dispatch(["simulate", "--spec", spec, "--out", str(data_dir)]) == 0
    cfg = write_json(root / "fit.json", FIT_CONFIG)
    assert cli_dispatch(
        ["fit", str(data_dir), "--out", str(run_dir), "--config", cfg]
    ) == 0
    return root, data_dir, run_dir


class TestPipeline:
    def test_simulate_outputs(self, pipeline):
        _, data_dir, _ = pipeline
        assert (data_dir / "simulation.json").exists()
        dataset = load_dataset(data_dir)
        assert len(dataset.graphs) == 6
        assert dataset.has_node_counts()

    def test_fit_outputs(self, pipeline):
        _, _, run_dir = pipeline
        assert (run_dir / "trace.csv").exists()
        meta = json.loads((run_dir / "trace_meta.json").read_text())
        assert meta["complete"] is True
        assert meta["config"]["n_samples"] == 30

    def test_test_reports(self, pipeline, capsys):
        _, _, run_dir = pipeline
        assert cli_dispatch(["test", str(run_dir)]) == 0
        out = capsys.readouterr().out
        assert "p_h1=" in out

        report = json.loads((run_dir / "population_test.json").read_text())
        assert 0.0 <= report["p_h1"] <= 1.0
        assert report["decision_threshold"] == 0.95

        entity_lines = (run_dir / "entity_tests.csv").read_text().splitlines()
        assert entity_lines[0] == "entity_a,entity_b,p_h1"
        # default pairing: every cross-population pair, 3 x 3
        assert len(entity_lines) == 1 + 9

        edge_lines = (run_dir / "edge_tests.csv").read_text().splitlines()
        assert edge_lines[0] == "edge_index,i,j,p_l,theta_bar_diff,flagged"
        assert len(edge_lines) == 1 + 15  # C(6, 2)

    def test_skip_entity_tests_flag(self, pipeline):
        _, _, run_dir = pipeline
        entity_path = run_dir / "entity_tests.csv"
        assert cli_dispatch(["test", str(run_dir)]) == 0
        entity_path.unlink()
        assert cli_dispatch(["test", str(run_dir), "--skip-entity-tests"]) == 0
        assert not entity_path.exists()
        assert (run_dir / "population_test.json").exists()
        # restore for any later test reading the shared run dir
        assert cli_dispatch(["test", str(run_dir)]) == 0

    def test_decision_threshold_flag(self, pipeline):
        _, _, run_dir = pipeline
        assert cli_dispatch(
            ["test", str(run_dir), "--decision-threshold", "0.5"]
        ) == 0
        report = json.loads((run_dir / "population_test.json").read_text())
        assert report["decision_threshold"] == 0.5
        assert report["reject_null"] == (report["p_h1"] > 0.5)
        assert cli_dispatch(["test", str(run_dir)]) == 0


def test_simulate_overrides(tmp_path):
    spec = write_json(tmp_path / "spec.json", SPEC)
    out = tmp_path / "data"
    assert cli_dispatch([
        "simulate", "--spec", spec, "--out", str(out),
        "--entities", "2", "--seed", "9",
    ]) == 0
    dataset = load_dataset(out)
    assert len(dataset.graphs) == 2 * 2
    resolved = json.loads((out / "simulation.json").read_text())
    assert resolved["config"]["entities_per_population"] == 2
    assert resolved["config"]["seed"] == 9


def test_simulate_time_points_override(tmp_path):
    # homogeneous generation is single-shot, so multiple time points
    # need the regime-mixing kind
    hetero = dict(SPEC)
    hetero["kind"] = "heterogeneous"
    hetero["time_locked"] = True
    spec = write_json(tmp_path / "spec.json", hetero)
    out = tmp_path / "data"
    assert cli_dispatch([
        "simulate", "--spec", spec, "--out", str(out), "--time-points", "2",
    ]) == 0
    dataset = load_dataset(out)
    assert len(dataset.graphs) == 3 * 2 * 2
    resolved = json.loads((out / "simulation.json").read_text())
    assert resolved["config"]["time_points"] == 2


def test_fit_flags_override_config(tmp_path):
    spec = write_json(tmp_path / "spec.json", SPEC)
    data_dir = tmp_path / "data"
    assert cli_dispatch(["simulate", "--spec", spec, "--out", str(data_dir)]) == 0
    cfg = write_json(tmp_path / "fit.json", FIT_CONFIG)
    run_dir = tmp_path / "run"
    assert cli_dispatch([
        "fit", str(data_dir), "--out", str(run_dir), "--config", cfg,
        "--samples", "14", "--burn-in", "6", "--thin", "2",
    ]) == 0
    meta = json.loads((run_dir / "trace_meta.json").read_text())
    assert meta["config"]["n_samples"] == 14
    assert meta["config"]["burn_in"] == 6
    assert meta["config"]["thin"] == 2
    # untouched keys still come from the config file
    assert meta["config"]["seed"] == 5


def test_repeat_runs_byte_identical(tmp_path):
    """Same config and seed must reproduce every persisted artifact,
    reports included.  trace_meta.json is exempt (wall-clock timings)."""
    spec = write_json(tmp_path / "spec.json", SPEC)
    data_dir = tmp_path / "data"
    assert cli_dispatch(["simulate", "--spec", spec, "--out", str(data_dir)]) == 0
    cfg = write_json(tmp_path / "fit.json", FIT_CONFIG)

    runs = []
    for name in ("run_a", "run_b"):
        run_dir = tmp_path / name
        assert cli_dispatch(
            ["fit", str(data_dir), "--out", str(run_dir), "--config", cfg]
        ) == 0
        assert cli_dispatch(["test", str(run_dir)]) == 0
        runs.append(run_dir)

    same = [
        "trace.csv", "beta.csv", "theta_bar.csv", "entity_counts.csv",
        "edge_trials.csv", "population_test.json", "entity_tests.csv",
        "edge_tests.csv",
    ]
    for fname in same:
        a = (runs[0] / fname).read_bytes()
        b = (runs[1] / fname).read_bytes()
        assert a == b, f"{fname} differs between identical runs"


class TestErrorPaths:
    def test_no_command(self, capsys):
        assert cli_dispatch([]) == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_flag(self, capsys):
        assert cli_dispatch(["simulate", "--bogus"]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_command(self):
        assert cli_dispatch(["frobnicate"]) == 1

    def test_malformed_fit_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = cli_dispatch([
            "fit", str(tmp_path), "--out", str(tmp_path / "r"),
            "--config", str(bad),
        ])
        assert code == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_config_must_be_object(self, tmp_path):
        cfg = write_json(tmp_path / "list.json", [1, 2])
        code = cli_dispatch([
            "fit", str(tmp_path), "--out", str(tmp_path / "r"),
            "--config", cfg,
        ])
        assert code == 1

    def test_simulate_malformed_spec(self, tmp_path, capsys):
        bad = tmp_path / "spec.json"
        bad.write_text("[}")
        assert cli_dispatch(
            ["simulate", "--spec", str(bad), "--out", str(tmp_path / "d")]
        ) == 1
        assert "cannot read simulation spec" in capsys.readouterr().err

    def test_simulate_missing_spec_file(self, tmp_path):
        assert cli_dispatch([
            "simulate", "--spec", str(tmp_path / "absent.json"),
            "--out", str(tmp_path / "d"),
        ]) == 1

    def test_simulate_bad_kind_is_runtime_error(self, tmp_path, capsys):
        # well-formed JSON with an invalid schema fails inside the
        # generator, which the CLI reports as a runtime failure
        spec = write_json(tmp_path / "spec.json", {"kind": "nope"})
        assert cli_dispatch(
            ["simulate", "--spec", spec, "--out", str(tmp_path / "d")]
        ) == 2
        assert "netpop simulate" in capsys.readouterr().err

    def test_fit_binomial_needs_node_counts(self, tmp_path, capsys):
        dataset = make_dataset(with_counts=False)
        data_dir = tmp_path / "data"
        save_dataset(dataset, data_dir)
        code = cli_dispatch(
            ["fit", str(data_dir), "--out", str(tmp_path / "run")]
        )
        assert code == 2
        err = capsys.readouterr().err
        assert err.startswith("netpop fit:")
        assert "node_counts" in err

    def test_test_on_missing_run_dir(self, tmp_path):
        assert cli_dispatch(["test", str(tmp_path / "nothing")]) == 2

    def test_power_invalid_plan(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "plan.json", {"scenario": "h1_true"})
        assert cli_dispatch(
            ["power", "--config", cfg, "--out", str(tmp_path / "out")]
        ) == 1
        assert "invalid experiment plan" in capsys.readouterr().err

    def test_sweep_config_needs_levels(self, tmp_path):
        cfg = write_json(tmp_path / "sweep.json", {"simulation": SPEC})
        assert cli_dispatch(
            ["sweep", "--config", cfg, "--out", str(tmp_path / "out")]
        ) == 1

    def test_sweep_config_needs_data_source(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "sweep.json", {"levels": [0.0]})
        assert cli_dispatch(
            ["sweep", "--config", cfg, "--out", str(tmp_path / "out")]
        ) == 1
        assert "'dataset' or 'simulation'" in capsys.readouterr().err


def test_power_subcommand(tmp_path, capsys):
    plan = {
        "scenario": "h1_true",
        "sample_sizes": [3],
        "trials_per_size": 2,
        "simulation": SPEC,
        "seed": 1,
        "hyperparams": {"n_clusters": 3, "latent_dim": 2},
        "mcmc": {"n_samples": 16, "burn_in": 4, "thin": 4},
    }
    cfg = write_json(tmp_path / "plan.json", plan)
    out = tmp_path / "out"
    assert cli_dispatch(["power", "--config", cfg, "--out", str(out)]) == 0
    assert "size=3" in capsys.readouterr().out

    curve = (out / "power_curve.csv").read_text().splitlines()
    assert curve[0] == "sample_size,trial,p_h1"
    assert len(curve) == 1 + 2
    assert (out / "power_summary.csv").exists()
    assert json.loads((out / "plan.json").read_text()) == plan


def test_sweep_subcommand(tmp_path, capsys):
    sweep = {
        "levels": [0.0, 0.5],
        "simulation": SPEC,
        "seed": 2,
        "reference_seeds": [0],
        "hyperparams": {"n_clusters": 3, "latent_dim": 2},
        "mcmc": {"n_samples": 16, "burn_in": 4, "thin": 4},
    }
    cfg = write_json(tmp_path / "sweep.json", sweep)
    out = tmp_path / "out"
    assert cli_dispatch(["sweep", "--config", cfg, "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "dd_threshold level=0.00" in stdout
    assert "nc_fixed level=-" in stdout

    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "level,p_h1,method"
    # two dd levels plus one nc_fixed and one nc_mixed reference
    assert len(lines) == 1 + 4
    assert json.loads((out / "sweep_config.json").read_text()) == sweep
