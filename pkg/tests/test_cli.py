import csv
import io
import json
import math

import pytest

from bqlab import cli
from bqlab.config import defaults


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


class TestExponents:
    def test_rows(self, capsys):
        code, out, _ = run(capsys, "exponents", "--n", "2", "--p", "2", "3", "6", "inf", "--format", "csv")
        assert code == 0
        rows = read_csv(out)
        assert [r["p"] for r in rows] == ["2", "3", "6", "inf"]
        assert (float(rows[0]["G_h"]), float(rows[0]["G_sigma"])) == (-0.25, 0.0)

    def test_log_marker(self, capsys):
        code, out, _ = run(capsys, "exponents", "--n", "3", "--p", "2")
        assert code == 0
        assert "·|log h|^{1/2}" in out

    def test_empty_p_list(self, capsys):
        code, out, _ = run(capsys, "exponents", "--n", "2", "--p", "--format", "json")
        assert code == 0
        assert json.loads(out)["rows"] == []

    @pytest.mark.parametrize("argv", [["--n", "1"], ["--p", "1.5"]])
    def test_invalid(self, capsys, argv):
        code, _, err = run(capsys, "exponents", *argv)
        assert code == 1 and "error" in err

    def test_json_header(self, capsys):
        code, out, _ = run(capsys, "exponents", "--n", "2", "--p", "inf", "--format", "json")
        data = json.loads(out)
        assert data["config"]["command"] == "exponents"
        assert data["rows"][0]["p"] == "inf"


class TestSweeps:
    def test_flat_sweep_artifacts(self, capsys, tmp_path):
        out_path = tmp_path / "flat.csv"
        code, out, err = run(capsys, "flat-sweep", "--regime", "large_p", "--format", "csv", "--out", str(out_path))
        assert code == 0
        assert "estimated grid points" in err
        text = out_path.read_text()
        assert text == out
        header = json.loads(text.splitlines()[0][2:])
        assert header["defaults"] == defaults()
        rows = read_csv(text)
        assert len(rows) == 10
        assert set(rows[0]) >= {"h", "sigma", "alpha_h", "alpha_sigma", "p", "norm"}
        verdicts = json.loads((tmp_path / "flat.verdicts.json").read_text())["verdicts"]
        assert [v["slope_name"] for v in verdicts] == ["h", "sigma"]
        assert [v["predicted"] for v in verdicts] == [-0.5, -0.25]
        assert all(v["pass"] for v in verdicts)
        assert not [p for p in tmp_path.iterdir() if p.name.endswith(".tmp")]

    def test_verdict_failure_exit_code(self, capsys):
        code, *_ = run(capsys, "flat-sweep", "--regime", "small_p_2d", "--tolerance", "0.001")
        assert code == 2

    def test_sphere_small_p(self, capsys, tmp_path):
        out_path = tmp_path / "s.json"
        code, out, _ = run(capsys, "sphere-sweep", "--regime", "small_p", "--format", "json", "--out", str(out_path))
        assert code == 0
        data = json.loads(out)
        v = {r["slope_name"]: r for r in data["verdicts"]}
        assert v["lambda"]["predicted"] == 0.25 and v["mu"]["predicted"] == 0.0
        assert set(data["points"][0]) >= {
            "k", "lambda", "mu", "alpha_realized", "p", "norm", "predicted_exponent_lambda", "predicted_exponent_mu",
        }

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"regime": "zonal", "grid": {"k": [16, 32, 64, 128]}, "p": ["inf"]}))
        code, out, _ = run(capsys, "sphere-sweep", "--config", str(cfg), "--format", "json")
        assert code == 0
        assert len(json.loads(out)["points"]) == 4

    @pytest.mark.parametrize(
        "argv",
        [
            ["flat-sweep"],
            ["flat-sweep", "--regime", "large_p", "--h", "2.0"],
            ["flat-sweep", "--regime", "small_p_2d", "--n", "3"],
            ["sphere-sweep", "--regime", "large_p", "--config", "/nonexistent.json"],
            ["flat-sweep", "--regime", "large_p", "--points-per-axis", "1000"],
        ],
    )
    def test_config_errors(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == 1
        assert "error" in err and out == ""

    def test_resource_budget(self, capsys, monkeypatch):
        monkeypatch.setattr(cli, "MEMORY_BUDGET", 1000)
        code, out, err = run(capsys, "flat-sweep", "--regime", "large_p")
        assert code == 1 and "budget" in err and out == ""


class TestEnsembleCommands:
    def test_gram_check(self, capsys):
        code, out, _ = run(capsys, "gram-check", "--k", "256", "--alpha", "0.25", "--format", "json")
        assert code == 0
        rep = json.loads(out)
        assert rep["eigen_min"] >= 0.5 and rep["eigen_max"] <= 2.0 and rep["pass"] is True
        assert {"k", "alpha", "d", "m"} <= set(rep)

    def test_gram_check_fails_when_halved(self, capsys):
        code, out, _ = run(capsys, "gram-check", "--k", "256", "--d", "1.5", "--format", "json")
        assert code == 2
        assert json.loads(out)["pass"] is False

    def test_region_floor(self, capsys):
        code, out, _ = run(capsys, "region-floor", "--format", "json")
        assert code == 0
        data = json.loads(out)
        assert data["pass"] and data["floor_drift"] < 2
        assert [r["k"] for r in data["reports"]] == [64, 128, 256]


def test_clean_infinity():
    assert cli.dumps({"p": math.inf}).strip() == '{\n  "p": "inf"\n}'
