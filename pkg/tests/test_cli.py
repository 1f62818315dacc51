import csv
import json
import hashlib

import numpy as np
import pytest

import povbench.models as M
from povbench.cli import main
from povbench.config import ExperimentConfig, PatternSpec, parse_config, preset
from povbench.errors import ConfigError
from povbench.dataset import load_csv
from povbench.missingness import mcar, read_mask_csv
from povbench.pipeline import PREDICT_ON_ALL, Scenario, run_scenario

SMALL_CONFIG = """
config_version = 1

[data]
source = "synthetic"
n = 900

[seeds]
data = 1
mask = 2
model = 3
split = 4

[experiment]
patterns = ["mcar:0.5"]
models = ["wcn", "rct"]
lines = [0.5]
cutpoints = [0.5]
predict_on = "missing"
cdf = "first"

[hyper.rf]
trees = 15
"""


def run_cli(*argv):
    return main(list(argv))


class TestConfigParsing:
    def test_small_config(self, tmp_path):
        p = tmp_path / "cfg.toml"
        p.write_text(SMALL_CONFIG)
        from povbench.config import parse_config_file
        cfg = parse_config_file(p)
        assert cfg.n == 900
        assert [pt.label for pt in cfg.patterns] == ["MCAR50"]
        assert cfg.models == ["wcn", "rct"]
        assert cfg.hyper.rf.trees == 15

    def test_unknown_key_is_error(self, tmp_path):
        p = tmp_path / "cfg.toml"
        p.write_text(SMALL_CONFIG + "\n[experiment.extra]\nfoo = 1\n")
        from povbench.config import parse_config_file
        with pytest.raises(ConfigError, match="extra"):
            parse_config_file(p)

    def test_missing_seeds_is_error(self):
        doc = preset("baseline")
        del doc["seeds"]
        with pytest.raises(ConfigError, match="seeds"):
            parse_config(doc)

    def test_bad_model_code(self):
        doc = preset("baseline")
        doc["experiment"]["models"] = ["wcn", "xyz"]
        with pytest.raises(ConfigError, match="xyz"):
            parse_config(doc)

    def test_bad_pattern(self):
        with pytest.raises(ConfigError):
            PatternSpec.parse("mcar")
        with pytest.raises(ConfigError):
            PatternSpec.parse("mnar:0.5x")

    def test_exit_2_on_bad_config(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text("config_version = 2\n[seeds]\ndata=1\nmask=1\nmodel=1\nsplit=1\n")
        rc = run_cli("run", "--config", str(p), "--out", str(tmp_path / "o"))
        assert rc == 2
        assert "config_version" in capsys.readouterr().err


class TestGenerateCorrupt:
    def test_generate_and_reload(self, tmp_path):
        out = tmp_path / "survey.csv"
        assert run_cli("generate", "--n", "400", "--seed", "9",
                       "--out", str(out)) == 0
        ds = load_csv(out)
        assert ds.n == 400

    def test_generate_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli("generate", "--n", "300", "--seed", "4", "--out", str(a))
        run_cli("generate", "--n", "300", "--seed", "4", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_corrupt_mask_csv(self, tmp_path):
        data = tmp_path / "survey.csv"
        run_cli("generate", "--n", "400", "--seed", "9", "--out", str(data))
        mask_path = tmp_path / "mask.csv"
        assert run_cli("corrupt", "--data", str(data), "--pattern",
                       "mcar:0.25", "--seed", "3", "--out",
                       str(mask_path)) == 0
        mask = read_mask_csv(mask_path)
        assert mask.n_missing == 100


class TestRun:
    def test_two_scenarios_and_artifacts(self, tmp_path):
        cfgp = tmp_path / "cfg.toml"
        cfgp.write_text(SMALL_CONFIG)
        out = tmp_path / "out"
        assert run_cli("run", "--config", str(cfgp), "--out", str(out)) == 0
        rows = list(csv.DictReader(open(out / "scenarios.csv")))
        assert len(rows) == 2
        assert {r["model"] for r in rows} == {"wcn", "rct"}
        comp = list((out).glob("comparison_*.csv"))
        assert len(comp) == 1
        header = open(comp[0]).readline().strip().split(",")
        assert "wcn_r" in header and "rct_r" in header
        manifest = json.loads((out / "run_manifest.json").read_text())
        for rel, digest in manifest["outputs"].items():
            got = hashlib.sha256((out / rel).read_bytes()).hexdigest()
            assert got == digest, rel
        assert manifest["seeds"] == {"data": 1, "mask": 2, "model": 3,
                                     "split": 4}

    def test_rerun_byte_identical(self, tmp_path):
        cfgp = tmp_path / "cfg.toml"
        cfgp.write_text(SMALL_CONFIG)
        outs = []
        for name in ("o1", "o2"):
            out = tmp_path / name
            run_cli("run", "--config", str(cfgp), "--out", str(out))
            outs.append(out)
        for rel in ("scenarios.csv", "sweep.csv"):
            assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes()
        comp = sorted(p.name for p in outs[0].glob("comparison_*"))
        for name in comp:
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_report_rerenders(self, tmp_path):
        cfgp = tmp_path / "cfg.toml"
        cfgp.write_text(SMALL_CONFIG)
        out = tmp_path / "out"
        run_cli("run", "--config", str(cfgp), "--out", str(out))
        comp = sorted(out.glob("comparison_*.csv"))[0]
        before = comp.read_bytes()
        comp.unlink()
        assert run_cli("report", "--out", str(out)) == 0
        assert comp.read_bytes() == before

    def test_workers_match_sequential(self, tmp_path):
        cfgp = tmp_path / "cfg.toml"
        cfgp.write_text(SMALL_CONFIG)
        seq, par = tmp_path / "seq", tmp_path / "par"
        run_cli("run", "--config", str(cfgp), "--out", str(seq))
        run_cli("run", "--config", str(cfgp), "--out", str(par),
                "--workers", "2")
        assert (seq / "scenarios.csv").read_bytes() == \
            (par / "scenarios.csv").read_bytes()


class TestCdfData:
    def test_truth_and_model_files(self, tmp_path):
        cfgp = tmp_path / "cfg.toml"
        cfgp.write_text(SMALL_CONFIG)
        out = tmp_path / "out"
        run_cli("run", "--config", str(cfgp), "--out", str(out))
        files = sorted((out / "cdf").glob("*.csv"))
        names = [f.name for f in files]
        assert "truth.csv" in names
        assert any("wcn" in n for n in names)
        rows = list(csv.DictReader(open(out / "cdf" / "truth.csv")))
        shares = [float(r["cumulative_share"]) for r in rows]
        assert shares == sorted(shares) and shares[-1] == 1.0

    def test_constant_predictions_step_cdf(self, tmp_path):
        from povbench.reporting import write_cdf_csv
        p = tmp_path / "c.csv"
        write_cdf_csv(p, np.full(25, 0.4), "const")
        rows = list(csv.DictReader(open(p)))
        assert {r["value"] for r in rows} == {"0.4"}  # single step
        assert float(rows[-1]["cumulative_share"]) == 1.0

    def test_ols_cdf_inside_truth(self, ds7062):
        """Predicted-value distribution is strictly narrower than the truth
        at both tails; the forest keeps a heavier lower tail than OLS."""
        mask = mcar(ds7062, 0.0, seed=1)
        wcn = run_scenario(Scenario(dataset=ds7062, mask=mask,
                                    spec=M.ModelSpec.from_code("wcn"),
                                    q=0.5, predict_on=PREDICT_ON_ALL))
        rcn = run_scenario(Scenario(dataset=ds7062, mask=mask,
                                    spec=M.ModelSpec.from_code("rcn"),
                                    q=0.5, predict_on=PREDICT_ON_ALL, seed=2))
        truth = ds7062.log_income
        for q in (5, 95):
            t, w = np.percentile(truth, q), np.percentile(wcn.predictions, q)
            if q == 5:
                assert w > t  # lower tail pulled in
            else:
                assert w < t  # upper tail pulled in
        # forest reaches further into the tails than OLS (extreme quantiles;
        # at the 5th percentile the averaging over trees still masks it)
        assert (np.percentile(rcn.predictions, 1)
                <= np.percentile(wcn.predictions, 1))
        assert rcn.predictions.min() < wcn.predictions.min()
        assert (rcn.predictions.max() - rcn.predictions.min()
                > wcn.predictions.max() - wcn.predictions.min())


def test_preset_configs_parse():
    for name in ("baseline", "table6", "grid-desk"):
        cfg = parse_config(preset(name), origin=name)
        assert isinstance(cfg, ExperimentConfig)


def test_tune_desk_outputs(tmp_path, ds_small):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("""
config_version = 1
[data]
source = "synthetic"
n = 600
[seeds]
data = 1
mask = 2
model = 3
split = 4
[grid]
families = ["rf"]
target = "continuous"
line = 0.5
preset = "desk"
""")
    out = tmp_path / "grid"
    assert run_cli("tune", "--config", str(cfg), "--out", str(out)) == 0
    table = list(csv.DictReader(open(out / "grid_random_forest_continuous.csv")))
    assert len(table) == 8  # 1*2*2*2 desk points
    best = list(csv.DictReader(open(out / "grid_best.csv")))
    assert any(r["parameter"] == "best_accuracy" for r in best)
