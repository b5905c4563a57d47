import csv
import io
import json
import math
import subprocess
import sys

import pytest

from semiconj.cli import UsageError, main, parse_args


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestParse:
    def test_simulate(self):
        cfg = parse_args(["simulate", "--system", "normalized", "--x0", "3,4", "--t", "2.5"])
        assert cfg.command == "simulate" and cfg.fmt == "csv"
        assert cfg.system == {"name": "normalized", "dimension": 2, "params": {}}
        assert cfg.options["x0"] == [3.0, 4.0] and cfg.options["t"] == 2.5
        assert cfg.out is None

    def test_figdata(self):
        cfg = parse_args(["figdata", "--figure", "4", "--out", "fig4.csv"])
        assert (cfg.command, cfg.options["figure"], cfg.out, cfg.fmt) == ("figdata", 4, "fig4.csv", "csv")

    def test_unknown_suite_lists_choices(self):
        with pytest.raises(UsageError) as info:
            parse_args(["verify", "--suite", "nope"])
        assert "conjugacy-closed" in str(info.value) and "interior" in str(info.value)

    @pytest.mark.parametrize(
        "argv, flag",
        [
            (["simulate", "--system", "normalized", "--x0", "3,a", "--t", "1"], "--x0"),
            (["simulate", "--system", "normalized", "--t", "1"], "--x0"),
            (["simulate", "--system", "normalized", "--x0", "1,2"], "--t"),
            (["simulate", "--x0", "1,2", "--t", "1"], "--system"),
            (["simulate", "--system", "normalized", "--x0", "1,2", "--t", "1", "--bogus"], "--bogus"),
            (["conjugate", "--system", "normalized", "--r", "1", "--point", "2,0"], "--epsilon"),
            (["simulate", "--system", "normalized", "--x0", "1,2", "--t", "1", "--dimension", "3"], "--dimension"),
            (["simulate", "--system", "normalized", "--x0", "1,2", "--t", "1", "--param", "a"], "--param"),
            ([], "command"),
        ],
    )
    def test_usage_errors_name_the_flag(self, argv, flag):
        with pytest.raises(UsageError, match=flag):
            parse_args(argv)

    def test_config_file_precedence(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"name": "linear-scaled", "dimension": 1, "params": {"a": 2.0},
                                    "x0": [1.0], "t": 5.0, "rel_tol": 1e-8}))
        cfg = parse_args(["simulate", "--config", str(path), "--t", "1", "--param", "a=3"])
        assert cfg.system == {"name": "linear-scaled", "dimension": 1, "params": {"a": 3.0}}
        assert cfg.options["t"] == 1.0
        assert cfg.options["rel_tol"] == 1e-8
        assert cfg.options["abs_tol"] is None

    def test_bad_config_files(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(UsageError, match="--config"):
            parse_args(["simulate", "--config", str(bad)])
        extra = tmp_path / "extra.json"
        extra.write_text(json.dumps({"name": "normalized", "colour": "red"}))
        with pytest.raises(UsageError, match="colour"):
            parse_args(["simulate", "--config", str(extra)])
        with pytest.raises(UsageError, match="cannot read"):
            parse_args(["simulate", "--config", str(tmp_path / "missing.json")])


class TestRun:
    def test_simulate_final_row(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--system", "normalized", "--x0", "3,4", "--t", "2.5")
        assert code == 0
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["t", "x1", "x2", "V"]
        t, x1, x2, v = map(float, rows[-1])
        assert (t, x1, x2) == pytest.approx((2.5, 1.5, 2.0), abs=1e-12)
        assert v == pytest.approx(3.125, abs=1e-12)

    def test_simulate_grid_to_file(self, capsys, tmp_path):
        out_path = tmp_path / "traj.csv"
        code, out, _ = run_cli(capsys, "simulate", "--system", "linear-scaled", "--x0", "1",
                               "--t", "1", "--grid", f"0,{math.log(2)}", "--out", str(out_path))
        assert code == 0 and out == ""
        rows = list(csv.reader(out_path.open()))
        assert float(rows[2][1]) == pytest.approx(0.5, abs=1e-12)

    def test_simulate_backward(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--system", "normalized", "--x0", "3,4",
                               "--t", "1", "--backward")
        rows = list(csv.reader(io.StringIO(out)))
        assert code == 0
        assert [float(v) for v in rows[-1][:3]] == pytest.approx([-1.0, 3.6, 4.8], abs=1e-12)

    def test_conjugate(self, capsys):
        code, out, _ = run_cli(capsys, "conjugate", "--system", "normalized", "--epsilon", "0.5",
                               "--r", "1", "--point", "2,0")
        assert code == 0
        report = json.loads(out)
        assert report["h"] == pytest.approx([math.e, 0.0], abs=1e-10)
        assert report["roundtrip_error"] <= 1e-10
        assert report["tau_prime"] == pytest.approx(1.0, abs=1e-10)
        assert report["gamma"]["gamma_r"] == pytest.approx(report["gamma"]["closed_form_log"], abs=1e-6)
        assert report["config"]["integrator"]["rel_tol"] == 1e-10

    def test_conjugate_bounded(self, capsys):
        code, out, _ = run_cli(capsys, "conjugate", "--system", "normalized-bounded", "--epsilon", "0.5",
                               "--r", "1", "--C", "1", "--point", "1.2,0")
        report = json.loads(out)
        assert code == 0
        assert report["outer_radius_R"] == pytest.approx(math.exp(math.sqrt(2) - 1), abs=1e-6)
        assert report["tau_case2"] == pytest.approx(0.2, abs=1e-10)

    def test_verify_pass_and_fail(self, capsys, tmp_path):
        out_path = tmp_path / "report.json"
        code, _, _ = run_cli(capsys, "verify", "--suite", "scalar", "--out", str(out_path))
        assert code == 0
        assert json.loads(out_path.read_text())["verdict"] == "pass"
        code, out, _ = run_cli(capsys, "verify", "--suite", "reverse", "--tol", "0")
        assert code == 1
        assert json.loads(out)["verdict"] == "fail"

    def test_figdata(self, capsys):
        code, out, _ = run_cli(capsys, "figdata", "--figure", "5")
        assert code == 0
        assert out.splitlines()[0] == "t,norm,closed_form"
        assert len(out.splitlines()) == 401

    @pytest.mark.parametrize(
        "argv, needle",
        [
            (["simulate", "--system", "x0-plane", "--x0", "1,2,3", "--t", "1"], "dimension mismatch"),
            (["simulate", "--system", "normalized", "--x0", "0,0", "--t", "1", "--backward"], "equilibrium"),
            (["conjugate", "--system", "normalized", "--epsilon", "-1", "--r", "1", "--point", "1,0"], "epsilon"),
            (["simulate", "--system", "linear-scaled", "--x0", "1", "--t", "1", "--param", "a=-2"], "positive"),
            (["verify", "--suite", "nope"], "invalid choice"),
        ],
    )
    def test_failures_exit_nonzero_with_diagnostic(self, capsys, argv, needle):
        code, out, err = run_cli(capsys, *argv)
        assert code == 2
        assert out == ""
        assert len(err.strip().splitlines()) == 1
        assert needle in err

    def test_seed_env_must_be_integer(self, capsys, monkeypatch):
        monkeypatch.setenv("SEMICONJ_SEED", "abc")
        code, _, err = run_cli(capsys, "conjugate", "--system", "normalized", "--epsilon", "0.5",
                               "--r", "1", "--point", "2,0")
        assert code == 2 and "SEMICONJ_SEED" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--system", "x0-plane", "--x0", "1,1", "--t", "3", "--grid", "0,0.5,1,2,3"],
        ["conjugate", "--system", "x0-plane", "--epsilon", "0.25", "--r", "1", "--point", "0.7,-0.4"],
        ["figdata", "--figure", "3"],
    ],
)
def test_outputs_are_byte_identical(argv):
    first = subprocess.run([sys.executable, "-m", "semiconj", *argv], capture_output=True, check=True)
    second = subprocess.run([sys.executable, "-m", "semiconj", *argv], capture_output=True, check=True)
    assert first.stdout == second.stdout and first.stdout


def test_module_entry_point_usage_exit():
    proc = subprocess.run([sys.executable, "-m", "semiconj", "verify", "--suite", "nope"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "usage error" in proc.stderr
