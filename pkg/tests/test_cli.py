import json
import math
import subprocess
import sys

import pytest

from relayrank.cli import main
from relayrank.dataio import read_race_csv, read_rmse_csv


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def small_race_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "race.csv"
    assert main(["simulate", "--teams", "200", "--seed", "3", "--out", str(path)]) == 0
    return path


def config_of(out):
    line = out.splitlines()[0]
    assert line.startswith("config: ")
    return json.loads(line[len("config: "):])


class TestSimulate:
    def test_paper_like(self, tmp_path, capsys):
        out_path = tmp_path / "race.csv"
        code, out, _ = run(["simulate", "--paper-like", "--seed", 7, "--out", out_path], capsys)
        assert code == 0
        cfg = config_of(out)
        assert (cfg["teams"], cfg["legs"], cfg["seed"]) == (1653, 7, 7)
        assert len(out_path.read_text().splitlines()) == 1654

    def test_rerun_from_echoed_config(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        _, out, _ = run(["simulate", "--teams", 50, "--legs", 3, "--mu-list", "4.1,4.2,4.3", "--out", a], capsys)
        cfg = config_of(out)
        args = ["simulate", "--teams", cfg["teams"], "--legs", cfg["legs"], "--seed", cfg["seed"],
                "--mu-list", ",".join(map(repr, cfg["mu_list"])),
                "--sigma-list", ",".join(map(repr, cfg["sigma_list"])), "--out", b]
        assert run(args, capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_lists_broadcast(self, tmp_path, capsys):
        out_path = tmp_path / "race.csv"
        code, out, _ = run(["simulate", "--teams", 10, "--legs", 4, "--sigma-list", "0.2", "--out", out_path], capsys)
        assert code == 0
        assert config_of(out)["sigma_list"] == [0.2] * 4
        assert read_race_csv(out_path).m == 4

    @pytest.mark.parametrize(
        "extra",
        [
            ["--paper-like", "--mu-list", "4.0"],
            ["--paper-like", "--teams", "10"],
            ["--teams", "1"],
            ["--legs", "3", "--mu-list", "1,2"],
            ["--sigma-list", "0"],
        ],
    )
    def test_usage_errors(self, tmp_path, capsys, extra):
        code, _, err = run(["simulate", *extra, "--out", tmp_path / "x.csv"], capsys)
        assert code == 2
        assert "error" in err
        assert not (tmp_path / "x.csv").exists()


class TestEvaluate:
    def test_grid(self, small_race_file, tmp_path, capsys):
        rmse_path, curves = tmp_path / "rmse.csv", tmp_path / "curves"
        code, out, _ = run(
            ["evaluate", "--race", small_race_file, "--train-fraction", 0.8, "--models", "fwos,ols,gp,ordinal",
             "--out-rmse", rmse_path, "--out-curves", curves],
            capsys,
        )
        assert code == 0
        assert config_of(out)["models"] == ["fwos", "ols", "gp", "ordinal"]
        report = read_rmse_csv(rmse_path)
        assert len(report.entries) == 28
        assert sorted(p.name for p in curves.iterdir()) == [f"curves_leg{l}.csv" for l in range(1, 8)]
        header = (curves / "curves_leg4.csv").read_text().splitlines()[0]
        assert header == "leg_index,time,true_place,ols,gp,ordinal,fwos"

    def test_fwos_only(self, small_race_file, tmp_path, capsys):
        code, _, _ = run(["evaluate", "--race", small_race_file, "--models", "fwos",
                          "--out-rmse", tmp_path / "r.csv"], capsys)
        assert code == 0
        assert len(read_rmse_csv(tmp_path / "r.csv").entries) == 7

    @pytest.mark.parametrize("flags", [["--train-fraction", "1.0"], ["--train-fraction", "0"],
                                       ["--models", "svm"], ["--gp-policy", "bogus"],
                                       ["--train-fraction", "0.001"]])
    def test_usage_errors(self, small_race_file, tmp_path, capsys, flags):
        code, _, _ = run(["evaluate", "--race", small_race_file, *flags, "--out-rmse", tmp_path / "r.csv"], capsys)
        assert code == 2

    def test_unreadable_race(self, tmp_path, capsys):
        code, _, err = run(["evaluate", "--race", tmp_path / "missing.csv", "--out-rmse", tmp_path / "r.csv"], capsys)
        assert code == 1
        assert "error" in err

    def test_malformed_race(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("team_id,leg_1,place\n1,x,1\n")
        code, _, err = run(["evaluate", "--race", bad, "--out-rmse", tmp_path / "r.csv"], capsys)
        assert code == 1
        assert "line 2" in err


class TestPredictAndFit:
    def test_fwos_at_fitted_median(self, small_race_file, capsys):
        code, out, _ = run(["fit", "--race", small_race_file, "--leg", 3, "--model", "fwos"], capsys)
        assert code == 0
        params = json.loads(out.splitlines()[1][len("params: "):])
        t = math.exp(params["mu"])
        code, out, _ = run(["predict", "--race", small_race_file, "--leg", 3, "--model", "fwos", "--time", repr(t)],
                           capsys)
        assert code == 0
        place = int(out.splitlines()[1].split(": ")[1])
        expected = min(max(math.floor(0.5 * (params["n_hat"] + 1) + 0.5), 1), params["clamp_high"])
        assert place == expected
        printed = json.loads(out.splitlines()[2][len("params: "):])
        assert {"mu", "sigma", "n_hat"} <= set(printed)

    @pytest.mark.parametrize("model", ["ols", "gp", "ordinal"])
    def test_other_models(self, small_race_file, capsys, model):
        code, out, _ = run(["predict", "--race", small_race_file, "--leg", 7, "--model", model, "--time", 700,
                            "--gp-policy", "fixed:1.0,1.0,0.1"], capsys)
        assert code == 0
        assert int(out.splitlines()[1].split(": ")[1]) >= 1

    def test_fit_writes_json(self, small_race_file, tmp_path, capsys):
        out_file = tmp_path / "model.json"
        code, _, _ = run(["fit", "--race", small_race_file, "--leg", 2, "--model", "ordinal", "--out", out_file],
                         capsys)
        assert code == 0
        assert json.loads(out_file.read_text())["model"] == "ordinal"

    @pytest.mark.parametrize("flags", [["--leg", "9", "--time", "400"], ["--leg", "0", "--time", "400"],
                                       ["--leg", "2", "--time", "-5"], ["--leg", "2", "--time", "0"],
                                       ["--leg", "2", "--time", "nan"]])
    def test_usage_errors(self, small_race_file, capsys, flags):
        code, _, _ = run(["predict", "--race", small_race_file, "--model", "fwos", *flags], capsys)
        assert code == 2


def test_module_entry_point_exit_codes(tmp_path):
    res = subprocess.run([sys.executable, "-m", "relayrank", "simulate", "--teams", "1", "--out",
                          str(tmp_path / "x.csv")], capture_output=True, text=True)
    assert res.returncode == 2
    res = subprocess.run([sys.executable, "-m", "relayrank", "simulate", "--teams", "5", "--out",
                          str(tmp_path / "x.csv")], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("config: ")
