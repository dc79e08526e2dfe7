import json
import subprocess
import sys

import numpy as np
import pytest

from cloudeff import hloa, neural
from cloudeff.cli import main
from cloudeff.dataset import apply_scaler, fit_scaler, load_csv, split
from cloudeff.models import RunConfig, load_model

SMALL_NET = {"optimizer": {"pop_size": 8, "max_evaluations": 120}}
SMALL_RF = {"forest": {"n_trees": 10}}
MEMORIZE = {"forest": {"n_trees": 1, "bootstrap": False, "min_samples_leaf": 1, "max_depth": None, "mtry": 5}}


def write_config(path, data):
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def data300(tmp_path):
    path = tmp_path / "d.csv"
    assert main(["synth", "--rows", "300", "--seed", "1", "--out", str(path)]) == 0
    return path


class TestSynth:
    def test_rows(self, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["synth", "--rows", "10", "--seed", "1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 11
        assert "instructions_executed" not in lines[0]

    def test_instructions(self, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["synth", "--rows", "5", "--seed", "1", "--instructions", "--out", str(out)]) == 0
        assert load_csv(out).has_instructions

    @pytest.mark.parametrize("rows", ["0", "-3", "ten"])
    def test_bad_rows(self, tmp_path, capsys, rows):
        assert main(["synth", "--rows", rows, "--seed", "1", "--out", str(tmp_path / "d.csv")]) == 2
        assert capsys.readouterr().err

    def test_missing_flag(self, tmp_path):
        assert main(["synth", "--rows", "5", "--out", str(tmp_path / "d.csv")]) == 2


class TestAnalyze:
    def test_ranking(self, tmp_path):
        data = tmp_path / "d.csv"
        main(["synth", "--rows", "1000", "--seed", "7", "--out", str(data)])
        out, heat = tmp_path / "a.txt", tmp_path / "heat.svg"
        assert main(["analyze", "--data", str(data), "--out", str(out), "--svg", str(heat)]) == 0
        text = out.read_text()
        ranking = text.split("# ranking")[1].strip().splitlines()[2:]
        assert ranking[0].split(",")[1] == "power_consumption"
        assert ranking[-1].split(",")[1] == "cpu_usage"
        assert heat.read_text().startswith("<?xml")
        assert (tmp_path / "heat.ranking.svg").exists()

    def test_matrix_symmetric(self, tmp_path, data300):
        out = tmp_path / "a.txt"
        assert main(["analyze", "--data", str(data300), "--out", str(out)]) == 0
        block = out.read_text().split("\n\n")[0].splitlines()[1:]
        names = block[0].split(",")[1:]
        m = np.array([[float(v) for v in row.split(",")[1:]] for row in block[1:]])
        assert m.shape == (len(names), len(names))
        assert np.array_equal(m, m.T) and np.all(np.diag(m) == 1.0)

    def test_constant_column(self, tmp_path, data300, capsys):
        lines = data300.read_text().splitlines()
        header = lines[0].split(",")
        col = header.index("network_traffic")
        rows = [ln.split(",") for ln in lines[1:]]
        for r in rows:
            r[col] = "12.5"
        bad = tmp_path / "bad.csv"
        bad.write_text("\n".join([lines[0]] + [",".join(r) for r in rows]) + "\n")
        assert main(["analyze", "--data", str(bad), "--out", str(tmp_path / "a.txt")]) == 3
        assert "network_traffic" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["analyze", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "a.txt")]) == 2

    def test_malformed_csv(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("cpu_usage,memory_usage\n1,2\n")
        assert main(["analyze", "--data", str(bad), "--out", str(tmp_path / "a.txt")]) == 3


class TestTrain:
    def test_rf_smoke(self, tmp_path):
        data = tmp_path / "d.csv"
        main(["synth", "--rows", "500", "--seed", "2", "--out", str(data)])
        model = tmp_path / "rf.json"
        cfg = write_config(tmp_path / "c.json", SMALL_RF)
        assert main(["train", "--model", "rf", "--data", str(data), "--config", cfg, "--out", str(model)]) == 0
        assert load_model(model).forest.config.n_trees == 10
        manifest = json.loads((tmp_path / "rf.manifest.json").read_text())
        assert manifest["split"] == {"test_fraction": 0.2, "n_train": 400, "n_test": 100}
        assert manifest["config"]["forest"]["n_trees"] == 10
        assert manifest["kernel_backend"] in ("compiled", "python")

    def test_hloa_budget_equals_population(self, tmp_path, data300):
        cfg_data = {"seed": 4, "optimizer": {"pop_size": 8, "max_evaluations": 8}}
        cfg = write_config(tmp_path / "c.json", cfg_data)
        model_path = tmp_path / "net.json"
        assert main(["train", "--model", "hloa", "--data", str(data300), "--config", cfg, "--out", str(model_path)]) == 0
        model = load_model(model_path)

        config = RunConfig.from_dict(cfg_data)
        train, _ = split(load_csv(data300), config.test_fraction, config.seed)
        spec = config.net.spec(train.n_features)
        objective = neural.FitnessFunction(spec, apply_scaler(fit_scaler(train), train))
        space = hloa.SearchSpace.box(neural.param_count(spec), -3.0, 3.0)
        state = hloa.init_population(space, config.optimizer.hloa_config(config.seed), objective)
        assert np.array_equal(model.params, state.best_x)
        assert model.training_fitness == state.best_fitness

        manifest = json.loads((tmp_path / "net.manifest.json").read_text())
        assert manifest["n_parameters"] == 213 and manifest["evaluations_used"] == 8
        history = (tmp_path / "net.history.csv").read_text().splitlines()
        assert len(history) == 2

    def test_seed_flag_overrides(self, tmp_path, data300):
        cfg = write_config(tmp_path / "c.json", {"seed": 1, **SMALL_RF})
        out = tmp_path / "m.json"
        main(["train", "--model", "rf", "--data", str(data300), "--config", cfg, "--seed", "9", "--out", str(out)])
        assert json.loads((tmp_path / "m.manifest.json").read_text())["seed"] == 9

    def test_unknown_config_key(self, tmp_path, data300, capsys):
        cfg = write_config(tmp_path / "c.json", {"forest": {"trees": 5}})
        assert main(["train", "--model", "rf", "--data", str(data300), "--config", cfg,
                     "--out", str(tmp_path / "m.json")]) == 2
        assert "forest.trees" in capsys.readouterr().err

    @pytest.mark.parametrize("cfg", [{"forest": {"n_trees": 0}}, {"optimizer": {"pop_size": 2}}, {"test_fraction": 1.5}])
    def test_invalid_config_values(self, tmp_path, data300, cfg):
        path = write_config(tmp_path / "c.json", cfg)
        model = "rf" if "forest" in cfg else "hloa"
        assert main(["train", "--model", model, "--data", str(data300), "--config", path,
                     "--out", str(tmp_path / "m.json")]) == 2

    def test_bad_model_kind(self, tmp_path, data300):
        assert main(["train", "--model", "svm", "--data", str(data300), "--out", str(tmp_path / "m.json")]) == 2

    def test_rerun_from_manifest(self, tmp_path, data300):
        cfg = write_config(tmp_path / "c.json", {"seed": 3, **SMALL_NET})
        first = tmp_path / "a" / "net.json"
        first.parent.mkdir()
        main(["train", "--model", "hloa", "--data", str(data300), "--config", cfg, "--out", str(first)])
        second = tmp_path / "b" / "net.json"
        second.parent.mkdir()
        manifest = first.parent / "net.manifest.json"
        assert main(["train", "--model", "hloa", "--data", str(data300), "--config", str(manifest),
                     "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()
        assert (first.parent / "net.history.csv").read_bytes() == (second.parent / "net.history.csv").read_bytes()


class TestEvaluate:
    def test_memorizing_forest(self, tmp_path, data300):
        cfg = write_config(tmp_path / "c.json", MEMORIZE)
        model, train = tmp_path / "rf.json", tmp_path / "train.csv"
        assert main(["train", "--model", "rf", "--data", str(data300), "--config", cfg, "--out", str(model),
                     "--train-out", str(train)]) == 0
        report = tmp_path / "r.csv"
        assert main(["evaluate", "--model", str(model), "--data", str(train), "--out", str(report)]) == 0
        header, row = report.read_text().splitlines()
        values = dict(zip(header.split(","), row.split(",")))
        assert float(values["MSE"]) == 0.0 and float(values["R2"]) == 1.0

    def test_compare(self, tmp_path, data300):
        rf, net = tmp_path / "rf.json", tmp_path / "net.json"
        test = tmp_path / "test.csv"
        main(["train", "--model", "rf", "--data", str(data300), "--config",
              write_config(tmp_path / "c1.json", SMALL_RF), "--out", str(rf), "--test-out", str(test)])
        main(["train", "--model", "hloa", "--data", str(data300), "--config",
              write_config(tmp_path / "c2.json", SMALL_NET), "--out", str(net)])
        report = tmp_path / "cmp.csv"
        assert main(["evaluate", "--model", str(net), "--compare", str(rf), "--data", str(test),
                     "--out", str(report)]) == 0
        lines = report.read_text().splitlines()
        assert lines[0] == "model,MSE,RMSE,MAE,MAPE,R2,MAPE_n"
        assert [ln.split(",")[0] for ln in lines[1:]] == ["net", "rf"]
        assert all(len(ln.split(",")) == 7 for ln in lines)

    def test_missing_model(self, tmp_path, data300):
        assert main(["evaluate", "--model", str(tmp_path / "none.json"), "--data", str(data300),
                     "--out", str(tmp_path / "r.csv")]) == 2

    def test_corrupt_model(self, tmp_path, data300):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["evaluate", "--model", str(bad), "--data", str(data300), "--out", str(tmp_path / "r.csv")]) == 2

    def test_column_mismatch(self, tmp_path, data300):
        model = tmp_path / "rf.json"
        main(["train", "--model", "rf", "--data", str(data300), "--config",
              write_config(tmp_path / "c.json", SMALL_RF), "--out", str(model)])
        other = tmp_path / "wide.csv"
        main(["synth", "--rows", "20", "--seed", "1", "--instructions", "--out", str(other)])
        assert main(["evaluate", "--model", str(model), "--data", str(other), "--out", str(tmp_path / "r.csv")]) == 3


class TestPredict:
    def test_rows_and_svg(self, tmp_path, data300):
        model = tmp_path / "net.json"
        main(["train", "--model", "hloa", "--data", str(data300), "--config",
              write_config(tmp_path / "c.json", SMALL_NET), "--out", str(model)])
        out, chart = tmp_path / "p.csv", tmp_path / "p.svg"
        assert main(["predict", "--model", str(model), "--data", str(data300), "--out", str(out),
                     "--svg", str(chart)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "index,actual,predicted" and len(lines) == 301
        predicted = np.array([float(ln.split(",")[2]) for ln in lines[1:]])
        assert np.all((predicted > 0) & (predicted < 1))
        assert chart.read_text().count("<polyline") == 2


def test_every_command_is_byte_deterministic(tmp_path):
    def run(folder):
        folder.mkdir()
        f = lambda name: str(folder / name)  # noqa: E731
        cfg = write_config(folder / "c.json", {**SMALL_NET, **SMALL_RF})
        assert main(["synth", "--rows", "120", "--seed", "5", "--out", f("d.csv")]) == 0
        assert main(["analyze", "--data", f("d.csv"), "--out", f("a.txt"), "--svg", f("h.svg")]) == 0
        assert main(["train", "--model", "rf", "--data", f("d.csv"), "--config", cfg, "--out", f("rf.json"),
                     "--test-out", f("test.csv")]) == 0
        assert main(["train", "--model", "hloa", "--data", f("d.csv"), "--config", cfg, "--out", f("nn.json")]) == 0
        assert main(["evaluate", "--model", f("nn.json"), "--compare", f("rf.json"), "--data", f("test.csv"),
                     "--out", f("e.csv")]) == 0
        assert main(["predict", "--model", f("rf.json"), "--data", f("test.csv"), "--out", f("p.csv"),
                     "--svg", f("p.svg")]) == 0
        # manifests record the differing folder paths; the acceptance suite checks them with equal paths
        return {p.name: p.read_bytes() for p in sorted(folder.iterdir()) if not p.name.endswith("manifest.json")}

    a, b = run(tmp_path / "a"), run(tmp_path / "b")
    assert a.keys() == b.keys() and len(a) >= 12
    for name in a:
        assert a[name] == b[name], name


def test_module_entry_point_keeps_stdout_empty(tmp_path):
    out = tmp_path / "d.csv"
    proc = subprocess.run([sys.executable, "-m", "cloudeff", "synth", "--rows", "3", "--seed", "0", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "" and out.exists()
    proc = subprocess.run([sys.executable, "-m", "cloudeff", "synth", "--rows", "0", "--seed", "0", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stdout == "" and proc.stderr
