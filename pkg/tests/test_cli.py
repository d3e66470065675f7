"""Command-line interface: config handling, artifacts, determinism, exit codes."""

import csv
import json
import math

import pytest

from dsn.cli import DEFAULTS, load_config, main


def write_config(tmp_path, obj, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def strip_volatile(manifest):
    return {k: v for k, v in manifest.items() if k not in ("wall_clock_seconds", "written_at_utc")}


TINY_REPLICA = {"replica": {"n_samples": 2000}}
TINY_SIM = {"simulate": {"n": 30, "trials": 2}}


class TestConfigHandling:
    def test_defaults_load_without_file(self):
        cfg = load_config(None)
        assert cfg["seed"] == 0
        assert cfg["lambdas"] == [0.04, 0.04]
        assert cfg["psi"] == 0.8
        assert cfg["scheme"] == "coupled"
        assert cfg["prior"]["common_rate"] == 0.3
        assert cfg["fig3"]["resolution"] == 1e-3
        assert cfg["replica"]["n_samples"] == 200_000

    def test_defaults_are_not_mutated(self):
        cfg = load_config(None)
        cfg["fig2"]["lambda_grid"].append(99.0)
        assert 99.0 not in DEFAULTS["fig2"]["lambda_grid"]
        assert 99.0 not in load_config(None)["fig2"]["lambda_grid"]

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"bogus": 1})
        out = tmp_path / "out"
        assert main(["replica", "--config", cfg, "--out", str(out)]) == 2
        assert "config.bogus: unknown field" in capsys.readouterr().err
        assert not out.exists()

    def test_nested_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"replica": {"dampingg": 0.5}})
        assert main(["replica", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "config.replica.dampingg: unknown field" in capsys.readouterr().err

    def test_malformed_json_reports_position(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"seed": 0,,}')
        assert main(["replica", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
        err = capsys.readouterr().err
        assert "line 1 column" in err

    def test_wrong_type_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"psi": "strong"})
        assert main(["replica", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "config.psi: must be a number" in capsys.readouterr().err

    def test_out_of_range_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"replica": {"damping": 1.5}})
        assert main(["replica", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "config.replica.damping" in capsys.readouterr().err

    def test_missing_file_rejected(self, tmp_path, capsys):
        assert main(["replica", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_non_object_top_level_rejected(self, tmp_path, capsys):
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        assert main(["replica", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
        assert "top level must be a JSON object" in capsys.readouterr().err

    def test_invalid_workers_env_rejected(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("DSN_WORKERS", "many")
        cfg = write_config(tmp_path, TINY_REPLICA)
        assert main(["replica", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "DSN_WORKERS" in capsys.readouterr().err

    def test_nonpositive_workers_flag_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_REPLICA)
        assert main(["replica", "--config", cfg, "--out", str(tmp_path / "o"), "--workers", "0"]) == 2
        assert "workers" in capsys.readouterr().err

    def test_negative_seed_flag_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_REPLICA)
        assert main(["replica", "--config", cfg, "--out", str(tmp_path / "o"), "--seed", "-3"]) == 2
        assert "--seed: must be a nonnegative integer" in capsys.readouterr().err

    def test_bad_proxcheck_flags_rejected(self, capsys):
        assert main(["proxcheck", "--draws", "-5"]) == 2
        assert "--draws: must be a positive integer" in capsys.readouterr().err
        assert main(["proxcheck", "--psi", "-0.5"]) == 2
        assert "--psi: must be a nonnegative number" in capsys.readouterr().err


class TestReplicaCommand:
    def test_produces_artifacts(self, tmp_path, capsys):
        cfg = write_config(tmp_path, TINY_REPLICA)
        out = tmp_path / "out"
        assert main(["replica", "--config", cfg, "--out", str(out)]) == 0
        assert "replica: mse_db=" in capsys.readouterr().out

        header, rows = read_csv(out / "replica.csv")
        assert header == ["terminal", "chi", "p", "tau", "theta2", "mse", "mse_db", "iterations", "residual"]
        assert [r[0] for r in rows] == ["1", "2"]
        assert rows[0][1] == rows[1][1]  # symmetric network -> equal chi
        assert float(rows[0][6]) < -10.0  # a sane mse_db for the reference setup

        report = read_json(out / "report.json")
        assert report["manifest"]["command"] == "replica"
        assert report["manifest"]["seed"] == 0
        assert "replica.csv" in report["manifest"]["outputs"]
        assert (out / "convergence.png").exists()

        manifest = read_json(out / "manifest.json")
        assert "manifest.json" in manifest["outputs"]
        assert "wall_clock_seconds" in manifest
        assert strip_volatile(manifest) == report["manifest"] | {
            "outputs": manifest["outputs"]
        }

    def test_no_figures_flag(self, tmp_path):
        cfg = write_config(tmp_path, TINY_REPLICA)
        out = tmp_path / "out"
        assert main(["replica", "--config", cfg, "--out", str(out), "--no-figures"]) == 0
        assert not (out / "convergence.png").exists()
        assert "convergence.png" not in read_json(out / "manifest.json")["outputs"]

    def test_seed_override_recorded(self, tmp_path):
        cfg = write_config(tmp_path, TINY_REPLICA)
        out = tmp_path / "out"
        assert main(["replica", "--config", cfg, "--out", str(out), "--seed", "7", "--no-figures"]) == 0
        assert read_json(out / "manifest.json")["seed"] == 7

    def test_zero_source_writes_db_sentinel(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "prior": {"common_rate": 0.0, "private_rates": [0.0, 0.0]},
                "noise_vars": [0.0, 0.0],
                "replica": {"n_samples": 2000},
            },
        )
        out = tmp_path / "out"
        assert main(["replica", "--config", cfg, "--out", str(out), "--no-figures"]) == 0
        _, rows = read_csv(out / "replica.csv")
        assert rows[0][6] == "-inf"
        assert read_json(out / "report.json")["mse_db"] == "-inf"

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, TINY_REPLICA)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["replica", "--config", cfg, "--out", str(a), "--no-figures"]) == 0
        assert main(["replica", "--config", cfg, "--out", str(b), "--no-figures"]) == 0
        assert (a / "replica.csv").read_bytes() == (b / "replica.csv").read_bytes()
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
        assert strip_volatile(read_json(a / "manifest.json")) == strip_volatile(
            read_json(b / "manifest.json")
        )


class TestSimulateCommand:
    def test_produces_artifacts(self, tmp_path):
        cfg = write_config(tmp_path, TINY_SIM)
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out), "--no-figures"]) == 0
        header, rows = read_csv(out / "trials.csv")
        assert header == ["trial", "seed", "distortion", "distortion_db", "converged", "iterations"]
        assert len(rows) == 2
        assert [r[0] for r in rows] == ["0", "1"]
        assert all(r[4] == "true" for r in rows)

        report = read_json(out / "report.json")
        assert report["trials"] == 2
        assert report["flagged_trials"] == 0
        mean = (float(rows[0][2]) + float(rows[1][2])) / 2.0
        assert math.isclose(report["mean"], mean, rel_tol=1e-15)
        assert math.isclose(report["mean_db"], 10.0 * math.log10(mean), rel_tol=1e-12)

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, TINY_SIM)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", cfg, "--out", str(a), "--no-figures"]) == 0
        assert main(["simulate", "--config", cfg, "--out", str(b), "--no-figures"]) == 0
        assert (a / "trials.csv").read_bytes() == (b / "trials.csv").read_bytes()
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()

    def test_all_failed_trials_exit_code(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            {"simulate": {"n": 30, "trials": 2, "solver_max_iter": 1, "solver_tol": 1e-16}},
        )
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 3
        assert "non-convergence" in capsys.readouterr().err

    def test_figure_rendered_by_default(self, tmp_path):
        cfg = write_config(tmp_path, TINY_SIM)
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        assert (out / "trials.png").exists()


class TestFig2Command:
    def test_prediction_only_sweep(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "replica": {"n_samples": 2000},
                "fig2": {
                    "lambda_grid": [0.03, 0.05],
                    "psi_list": [0.0, 0.8],
                    "sim_lambdas": [],
                    "sim_psi_list": [],
                    "l21_lambdas": [],
                },
            },
        )
        out = tmp_path / "out"
        assert main(["fig2", "--config", cfg, "--out", str(out)]) == 0
        header, rows = read_csv(out / "fig2.csv")
        assert header == ["series", "kind", "psi", "lam", "mse", "mse_db", "stderr", "trials", "n_samples"]
        assert len(rows) == 4
        assert all(r[0] == "coupled" and r[1] == "replica" for r in rows)
        assert (out / "fig2.png").exists()

        report = read_json(out / "report.json")
        minima = {(m["series"], m["kind"], m["psi"]): m["lam"] for m in report["minima"]}
        assert ("coupled", "replica", 0.0) in minima
        assert ("coupled", "replica", 0.8) in minima

    def test_sim_rows_present_when_requested(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "replica": {"n_samples": 2000},
                "simulate": {"n": 30, "trials": 2},
                "fig2": {
                    "lambda_grid": [0.04],
                    "psi_list": [0.8],
                    "sim_lambdas": [0.04],
                    "sim_psi_list": [0.8],
                    "l21_lambdas": [0.04],
                },
            },
        )
        out = tmp_path / "out"
        assert main(["fig2", "--config", cfg, "--out", str(out), "--no-figures"]) == 0
        _, rows = read_csv(out / "fig2.csv")
        kinds = {(r[0], r[1]) for r in rows}
        assert kinds == {("coupled", "replica"), ("coupled", "simulated"), ("l21", "simulated")}


class TestFig3Command:
    def test_trivial_target_sits_at_grid_minimum(self, tmp_path):
        # A +10 dB distortion target is met by any compression ratio in the
        # sweep, so every boundary lands on the smallest second-terminal
        # ratio in the search range.
        cfg = write_config(
            tmp_path,
            {
                "fig3": {
                    "rho1_grid": [0.5, 1.0],
                    "rho2_min": 0.3,
                    "rho2_max": 1.0,
                    "mse0_db": 10.0,
                    "psi_list": [0.8],
                    "n_samples": 2000,
                }
            },
        )
        out = tmp_path / "out"
        assert main(["fig3", "--config", cfg, "--out", str(out), "--no-figures"]) == 0
        header, rows = read_csv(out / "fig3.csv")
        assert header == ["psi", "rho1", "rho2", "mse_db", "evaluations", "status"]
        assert len(rows) == 2
        for row in rows:
            assert row[5] == "ok"
            assert float(row[2]) == 0.3
        report = read_json(out / "report.json")
        assert report["unreachable_points"] == 0
        assert report["target_mse_db"] == 10.0


class TestProxcheckCommand:
    def test_pass_run(self, capsys):
        assert main(["proxcheck", "--draws", "400"]) == 0
        out = capsys.readouterr().out
        assert "PASS: max deviation" in out

    def test_routed_notice_for_strong_coupling(self, capsys):
        assert main(["proxcheck", "--draws", "200", "--psi", "1.2"]) == 0
        out = capsys.readouterr().out
        assert "routed to the numeric oracle" in out
        assert "PASS" in out

    def test_injected_bug_is_caught(self, capsys, monkeypatch):
        monkeypatch.setenv("DSN_PROXCHECK_INJECT_BUG", "1")
        assert main(["proxcheck", "--draws", "400"]) == 4
        out = capsys.readouterr().out
        assert "FAIL: max deviation" in out
        assert "worst offending y=" in out

    def test_report_written_when_out_given(self, tmp_path):
        out = tmp_path / "o"
        assert main(["proxcheck", "--draws", "300", "--out", str(out)]) == 0
        report = read_json(out / "report.json")
        assert report["passed"] is True
        assert report["n_draws"] == 300
        assert report["manifest"]["command"] == "proxcheck"
