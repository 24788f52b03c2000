import csv
import json
import subprocess
import sys

import pytest

from trafficlens.cli import main


def run(*argv) -> int:
    return main([str(a) for a in argv])


def read_json(path):
    return json.loads(path.read_text())


def without_wall_time(report):
    report = dict(report)
    report.pop("wall_time")
    return report


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("synth", "traffic", "--out", d, "--n", 720) == 0
    assert run("synth", "accidents", "--out", d, "--n", 1500) == 0
    assert run("train-severity", "--data", d / "accidents.csv", "--out", d / "gbdt.tlns",
               "--report", d / "gbdt.json") == 0
    assert run("train-severity", "--data", d / "accidents.csv", "--model", "rf", "--n-trees", 10,
               "--out", d / "rf.tlns") == 0
    assert run("fit-arima", "--series", d / "traffic.csv", "--out", d / "arima.tlns",
               "--report", d / "arima.json") == 0
    return d


class TestForecastPipeline:
    def test_forecast_rows(self, work):
        assert run("forecast", "--model", work / "arima.tlns", "--out", work / "fc.csv") == 0
        rows = list(csv.DictReader(open(work / "fc.csv")))
        assert len(rows) == 24
        assert list(rows[0]) == ["step", "timestamp_hour", "forecast", "stderr", "lower95", "upper95", "actual"]
        assert rows[0]["actual"] != ""

    def test_arima_report(self, work):
        rep = read_json(work / "arima.json")
        assert rep["seed"] == 42 and rep["command"] == "fit-arima"
        assert len(rep["result"]["phi"]) == 2 and len(rep["result"]["theta"]) == 1
        assert rep["result"]["holdout_mae"] < 5.0

    def test_horizon_zero(self, work, capsys):
        out = work / "h0.csv"
        assert run("forecast", "--model", work / "arima.tlns", "--horizon", 0, "--out", out) == 1
        assert not out.exists()
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 1 and err[0].startswith("trafficlens: error[config]")

    def test_decompose(self, work):
        assert run("decompose", "--series", work / "traffic.csv", "--out", work / "dec.csv") == 0
        rows = list(csv.DictReader(open(work / "dec.csv")))
        assert len(rows) == 720 and rows[0]["trend"] == ""
        r = rows[100]
        parts = float(r["trend"]) + float(r["seasonal"]) + float(r["residual"])
        assert parts == pytest.approx(float(r["observed"]), abs=1e-9)

    def test_wrong_kind(self, work):
        assert run("forecast", "--model", work / "gbdt.tlns", "--out", work / "x.csv") == 2


class TestSeverity:
    def test_evaluate_json(self, work):
        assert run("evaluate", "--model", work / "gbdt.tlns", "--data", work / "accidents.csv",
                   "--report", work / "eval.json") == 0
        rep = read_json(work / "eval.json")["result"]["evaluation"]
        assert rep["accuracy"] >= 0.99
        assert len(rep["confusion"]) == 3 and rep["averaging"] == "macro"
        assert all(v["auc"] is not None for v in rep["per_class"].values())

    def test_evaluate_csv(self, work):
        assert run("evaluate", "--model", work / "gbdt.tlns", "--data", work / "accidents.csv",
                   "--report", work / "eval.csv") == 0
        assert (work / "eval.csv").read_text().startswith("class,precision,recall,f1,auc")

    def test_importance(self, work):
        assert run("importance", "--model", work / "gbdt.tlns", "--out", work / "imp.csv") == 0
        rows = list(csv.DictReader(open(work / "imp.csv")))
        assert {r["feature"] for r in rows[:3]} == {"weather", "road_type", "driver_age"}

    def test_ensemble(self, work):
        assert run("ensemble", "--models", f"{work / 'gbdt.tlns'},{work / 'rf.tlns'}", "--weights", "3,1",
                   "--data", work / "accidents.csv", "--report", work / "ens.json") == 0
        rep = read_json(work / "ens.json")
        assert rep["result"]["weights"] == [0.75, 0.25]

    def test_ensemble_bad_weights(self, work):
        assert run("ensemble", "--models", f"{work / 'gbdt.tlns'},{work / 'rf.tlns'}", "--weights", "1,-1",
                   "--data", work / "accidents.csv") == 1

    def test_tune(self, work):
        grid = work / "grid.json"
        grid.write_text(json.dumps({"max_depth": [1, 3], "n_rounds": [5]}))
        assert run("tune", "--data", work / "accidents.csv", "--grid", grid, "--report", work / "tune.json") == 0
        rep = read_json(work / "tune.json")["result"]
        assert len(rep["cells"]) == 2

    def test_irrelevant_flag(self, work):
        assert run("train-severity", "--data", work / "accidents.csv", "--model", "logistic", "--rounds", 3,
                   "--out", work / "x.tlns") == 1

    def test_bench_latency(self, work):
        assert run("bench", "latency", "--model", work / "gbdt.tlns", "--data", work / "accidents.csv",
                   "--reps", 30, "--report", work / "lat.csv") == 0
        assert "p95_ms" in (work / "lat.csv").read_text()

    def test_bench_scaling(self, work):
        assert run("bench", "scaling", "--sizes", "200,400", "--fit-model", "logistic",
                   "--report", work / "scale.csv") == 0
        assert len((work / "scale.csv").read_text().splitlines()) == 3


class TestReproducibility:
    def test_reports_identical_except_wall_time(self, work):
        runs = []
        for _ in range(2):
            assert run("train-severity", "--data", work / "accidents.csv", "--rounds", 10,
                       "--out", work / "r.tlns", "--report", work / "r.json") == 0
            runs.append(((work / "r.json").read_text(), (work / "r.tlns").read_bytes()))
        a, b = (json.loads(text) for text, _ in runs)
        assert without_wall_time(a) == without_wall_time(b)
        assert {"seed", "config", "artifact_version", "wall_time"} <= set(a)
        assert runs[0][1] == runs[1][1]

    def test_synth_bitwise(self, tmp_path):
        for name in ("a", "b"):
            assert run("synth", "accidents", "--out", tmp_path / name, "--n", 300) == 0
        assert (tmp_path / "a" / "accidents.csv").read_bytes() == (tmp_path / "b" / "accidents.csv").read_bytes()

    def test_env_seed(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TRAFFICLENS_SEED", "7")
        assert run("synth", "traffic", "--out", tmp_path / "env", "--n", 50, "--report", tmp_path / "env.json") == 0
        assert read_json(tmp_path / "env.json")["seed"] == 7
        assert run("synth", "traffic", "--out", tmp_path / "flag", "--n", 50, "--seed", 9,
                   "--report", tmp_path / "flag.json") == 0
        assert read_json(tmp_path / "flag.json")["seed"] == 9

    def test_bad_env_seed(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TRAFFICLENS_SEED", "abc")
        assert run("synth", "traffic", "--out", tmp_path, "--n", 50) == 1


class TestErrors:
    def test_corrupted_model(self, work, tmp_path):
        blob = bytearray((work / "gbdt.tlns").read_bytes())
        blob[len(blob) // 2] ^= 0x10
        bad = tmp_path / "bad.tlns"
        bad.write_bytes(bytes(blob))
        assert run("evaluate", "--model", bad, "--data", work / "accidents.csv") == 2

    def test_missing_file(self, tmp_path):
        assert run("decompose", "--series", tmp_path / "nope.csv", "--out", tmp_path / "o.csv") == 2

    def test_unknown_command(self):
        assert run("frobnicate") == 1

    def test_parse_error_location(self, tmp_path, capsys):
        p = tmp_path / "t.csv"
        p.write_text("timestamp_hour,volume\n0,1\n1,x\n")
        assert run("decompose", "--series", p, "--out", tmp_path / "o.csv") == 2
        assert ":3:" in capsys.readouterr().err


class TestOtherCommands:
    def test_images(self, tmp_path):
        assert run("synth", "images", "--out", tmp_path, "--n", 80) == 0
        assert run("train-image", "--dir", tmp_path / "images", "--epochs", 2, "--out", tmp_path / "cnn.tlns",
                   "--report", tmp_path / "cnn.json") == 0
        rep = read_json(tmp_path / "cnn.json")["result"]
        assert len(rep["history"]["loss"]) == 2
        assert run("evaluate", "--model", tmp_path / "cnn.tlns", "--data", tmp_path / "images",
                   "--report", tmp_path / "ev.json") == 0

    def test_wordfreq(self, tmp_path):
        assert run("synth", "texts", "--out", tmp_path, "--n", 100) == 0
        assert run("wordfreq", "--texts", tmp_path / "narratives.txt", "--top", 10, "--out", tmp_path / "wf.csv") == 0
        lines = (tmp_path / "wf.csv").read_text().splitlines()
        assert lines[0] == "term,count" and len(lines) == 11


def test_console_script_exit_code(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "trafficlens.cli", "forecast", "--model", str(tmp_path / "m"),
                           "--horizon", "0", "--out", str(tmp_path / "o.csv")], capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stderr.startswith("trafficlens: error[config]")
