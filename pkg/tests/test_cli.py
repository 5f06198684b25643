"""Command-line interface: argument handling, outputs, and exit codes."""

import csv
import json

import numpy as np
import pytest

from cvtalloc import cli


def run_cli(*argv):
    return cli.main(list(argv))


class TestParsing:
    def test_valid_cvt_spec(self):
        parser = cli.build_parser()
        args = parser.parse_args(["cvt", "--domain", "0,15", "--n", "3",
                                  "--density", "uniform"])
        assert args.subcommand == "cvt"
        assert args.n == 3

    def test_missing_required_flag(self, capsys):
        rc = run_cli("cvt", "--domain", "0,15", "--density", "uniform")
        assert rc == cli.EXIT_USAGE

    def test_unknown_subcommand(self):
        rc = run_cli("frobnicate")
        assert rc == cli.EXIT_USAGE

    def test_bad_domain_string(self, capsys):
        rc = run_cli("cvt", "--domain", "zero-fifteen", "--n", "3",
                     "--density", "uniform")
        assert rc == cli.EXIT_USAGE


class TestCvt:
    def test_uniform_three_generators(self, tmp_path, capsys):
        rc = run_cli("cvt", "--domain", "0,15", "--n", "3",
                     "--density", "uniform", "--out", str(tmp_path))
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        np.testing.assert_allclose(out["generators"], [2.5, 7.5, 12.5],
                                   atol=1e-9)
        lines = (tmp_path / "generators.csv").read_text().splitlines()
        assert lines[0] == "iter,i,z_i"
        # final rows carry the cell boundaries
        boundary_rows = [ln for ln in lines if ln.startswith("boundary,")]
        bounds = [float(ln.split(",")[2]) for ln in boundary_rows]
        np.testing.assert_allclose(bounds, [0.0, 5.0, 10.0, 15.0], atol=1e-9)

    def test_json_density_and_custom_init(self, tmp_path, capsys):
        rc = run_cli("cvt", "--domain", "0,15", "--n", "2",
                     "--density", '{"family":"gaussian","mu":7.5,"sigma2":4.0}',
                     "--init", "4,11", "--out", str(tmp_path))
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["converged"]
        z = out["generators"]
        assert z[0] + z[1] == pytest.approx(15.0, abs=1e-6)


class TestStaticAlloc:
    def test_symmetric_gaussian(self, tmp_path, capsys):
        rc = run_cli("static-alloc", "--domain", "0,100", "--n", "50",
                     "--density",
                     '{"family":"gaussian","mu":"free","sigma2":4.0}',
                     "--r", "2500", "--out", str(tmp_path), "--csv")
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["v_k"] == pytest.approx(50.0, abs=1e-6)
        assert out["sum"] == pytest.approx(2500.0, abs=1e-6)
        assert out["residual_norm"] < 1e-9
        saved = json.loads((tmp_path / "allocation.json").read_text())
        assert saved == out
        with open(tmp_path / "allocation.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 50

    def test_infeasible_exits_nonzero(self, tmp_path, capsys):
        rc = run_cli("static-alloc", "--domain", "0,100", "--n", "10",
                     "--density",
                     '{"family":"gaussian","mu":"free","sigma2":4.0}',
                     "--r", "5000", "--out", str(tmp_path))
        assert rc == cli.EXIT_USAGE


class TestShiftCheck:
    def test_pass(self, capsys):
        rc = run_cli("shift-check", "--domain", "0,100", "--n", "5",
                     "--mu", "50", "--sigma2", "4", "--delta", "2",
                     "--tol", "1e-7")
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["passed"]

    def test_narrow_domain_is_config_error(self, capsys):
        rc = run_cli("shift-check", "--domain", "49,51", "--n", "2",
                     "--mu", "50", "--sigma2", "1", "--delta", "5",
                     "--tol", "1e-7")
        assert rc == cli.EXIT_USAGE


class TestDynamicSim:
    @pytest.fixture()
    def config_path(self, tmp_path):
        cfg = {
            "n_agents": 4, "horizon": 12, "domain": [0.0, 3000.0],
            "density": {"family": "gaussian", "mu": "free", "sigma2": 900.0},
            "power_schedule": [3200.0] * 12, "seed": 5,
            "setpoints": [70.0, 71.0, 73.0, 74.0],
        }
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_outputs_written(self, tmp_path, config_path, capsys):
        out = tmp_path / "results"
        rc = run_cli("dynamic-sim", "--config", str(config_path),
                     "--out", str(out))
        assert rc == 0
        for name in ("trace.csv", "swaps.csv", "metrics.json", "powers.csv",
                     "total_power.csv", "temperatures.csv"):
            assert (out / name).exists()
        with open(out / "trace.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 12 * 4
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["l2_power_error"] <= 1e-6
        with open(out / "total_power.csv") as fh:
            totals = list(csv.DictReader(fh))
        for row in totals:
            assert float(row["total_consumed"]) == pytest.approx(
                float(row["available"]), abs=1e-9)

    def test_horizon_mismatch_exits_one(self, tmp_path, config_path):
        cfg = json.loads(config_path.read_text())
        cfg["horizon"] = 13
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(cfg))
        rc = run_cli("dynamic-sim", "--config", str(bad),
                     "--out", str(tmp_path / "x"))
        assert rc == cli.EXIT_USAGE

    def test_seed_override_changes_plants(self, tmp_path, config_path, capsys):
        out1 = tmp_path / "r1"
        out2 = tmp_path / "r2"
        assert run_cli("dynamic-sim", "--config", str(config_path),
                       "--out", str(out1)) == 0
        assert run_cli("--seed", "99", "dynamic-sim", "--config",
                       str(config_path), "--out", str(out2)) == 0
        assert (out1 / "trace.csv").read_bytes() != \
            (out2 / "trace.csv").read_bytes()

    def test_repeat_run_byte_identical(self, tmp_path, config_path, capsys):
        out1 = tmp_path / "r1"
        out2 = tmp_path / "r2"
        for out in (out1, out2):
            assert run_cli("dynamic-sim", "--config", str(config_path),
                           "--out", str(out)) == 0
        assert (out1 / "trace.csv").read_bytes() == \
            (out2 / "trace.csv").read_bytes()
        assert (out1 / "swaps.csv").read_bytes() == \
            (out2 / "swaps.csv").read_bytes()
