import json
import shutil
import subprocess

import numpy as np
import pytest

from eqvar import SemModel, sample_data, validate_dag
from eqvar.bench import BenchmarkReport, ConfigError, load_config, parse_estimator, run_benchmark
from eqvar.cli import main
from eqvar.io import read_data_csv, read_model, read_ordering, write_data_csv


def run(argv):
    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:
        code = exc.code
    return code


@pytest.fixture
def chain_csv(tmp_path):
    B = np.zeros((3, 3))
    B[1, 0] = B[2, 1] = 1.0
    X = sample_data(SemModel(validate_dag(B), 1.0), 1000, 11)
    path = tmp_path / "chain.csv"
    write_data_csv(path, X)
    return path


class TestSimulate:
    def test_writes_three_files(self, tmp_path):
        out = tmp_path / "d"
        code = run(["simulate", "--family", "chain-random", "--p", 5, "--n", 100, "--pc", 0.3, "--seed", 7, "--out", out])
        assert code == 0
        assert sorted(f.name for f in out.iterdir()) == ["data.csv", "edges.csv", "model.json"]
        X = read_data_csv(out / "data.csv")
        assert X.shape == (100, 5)
        m = read_model(out)
        assert m.p == 5 and all((v, v + 1) in m.dag.edges for v in range(4))
        meta = json.loads((out / "model.json").read_text())
        assert set(meta) == {"p", "sigma2", "error"}

    def test_byte_identical(self, tmp_path):
        args = ["simulate", "--family", "highdim-hub", "--p", 12, "--n", 30, "--seed", 3]
        assert run(args + ["--out", tmp_path / "a"]) == 0
        assert run(args + ["--out", tmp_path / "b"]) == 0
        for f in ("data.csv", "edges.csv", "model.json"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()

    def test_header_and_rademacher(self, tmp_path):
        out = tmp_path / "r"
        code = run(["simulate", "--family", "highdim-smallk", "--p", 8, "--n", 20, "--error", "rademacher",
                    "--sigma2", 0.8, "--coeff", "0.5,1", "--header", "--out", out])
        assert code == 0
        assert (out / "data.csv").read_text().startswith("X1,X2,")
        assert json.loads((out / "model.json").read_text())["error"]["kind"] == "rademacher"

    def test_bad_pc(self, tmp_path, capsys):
        code = run(["simulate", "--family", "chain-random", "--p", 5, "--n", 10, "--pc", 1.5, "--out", tmp_path])
        assert code == 2
        assert "--pc" in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code = run(["simulate", "--family", "chain-random", "--p", 3, "--n", 10, "--out", blocker / "sub"])
        assert code == 1


class TestDiscover:
    def test_chain_td(self, chain_csv, tmp_path):
        out = tmp_path / "o"
        assert run(["discover", "--data", chain_csv, "--method", "td", "--out", out]) == 0
        doc = json.loads((out / "ordering.json").read_text())
        assert doc["sequence"] == [1, 2, 3]
        assert set(doc) == {"sequence", "step_criteria", "step_subsets"}
        assert read_ordering(out / "ordering.json").sequence == (0, 1, 2)
        edges = (out / "edges.csv").read_text().splitlines()
        assert edges[0] == "src,dst,weight"
        assert {tuple(r.split(",")[:2]) for r in edges[1:]} >= {("1", "2"), ("2", "3")}

    @pytest.mark.parametrize("method", ["bu", "td-hd"])
    def test_other_methods(self, chain_csv, tmp_path, method):
        out = tmp_path / method
        extra = ["--q", 1] if method == "td-hd" else []
        assert run(["discover", "--data", chain_csv, "--method", method, *extra, "--order-only", "--out", out]) == 0
        assert json.loads((out / "ordering.json").read_text())["sequence"] == [1, 2, 3]
        assert not (out / "edges.csv").exists()

    def test_hd_needs_q(self, chain_csv, tmp_path):
        assert run(["discover", "--data", chain_csv, "--method", "td-hd", "--out", tmp_path]) == 2

    def test_missing_data(self, tmp_path):
        assert run(["discover", "--data", tmp_path / "nope.csv", "--method", "td", "--out", tmp_path]) == 1

    def test_exhausted_writes_prefix(self, tmp_path):
        X = np.random.default_rng(0).standard_normal((100, 150))
        write_data_csv(tmp_path / "wide.csv", X)
        out = tmp_path / "o"
        assert run(["discover", "--data", tmp_path / "wide.csv", "--method", "td", "--out", out]) == 3
        doc = json.loads((out / "ordering.json").read_text())
        assert doc["exhausted_at_step"] == 100
        assert len(doc["sequence"]) == 99 and len(set(doc["sequence"])) == 99


class TestBound:
    def test_lowdim(self, capsys):
        assert run(["bound", "--p", 2, "--gamma2-over-sigma2", 0.25, "--max-sigma-jj", 1, "--zeta", 1,
                    "--lambda-min", 1]) == 0
        assert json.loads(capsys.readouterr().out) == {"n": 101020, "criterion": "full"}

    def test_invalid(self):
        assert run(["bound", "--p", 2, "--epsilon", 2, "--max-sigma-jj", 1, "--zeta", 1, "--lambda-min", 1]) == 2


class TestBench:
    def test_table1_markdown(self, tmp_path):
        out = tmp_path / "t1.md"
        assert run(["bench", "--config", "table1", "--replicates", 2, "--format", "md", "--out", out]) == 0
        text = out.read_text()
        head = text.splitlines()[2]
        for col in ("Kendall's τ TD", "Kendall's τ BU", "Recall % TD", "FDR % BU"):
            assert col in head
        assert len([l for l in text.splitlines() if l.startswith("| ") and l[2].isdigit()]) == 9

    def test_table3_columns(self):
        cfg = load_config("table3", replicates=1)
        labels = {(s.label, tuple(s.estimators)) for s in cfg.settings}
        assert labels == {("Small k", ("TD_HD(3)",)), ("Hub", ("TD_HD(3)",))}
        small = load_config({"name": "t3", "settings": [
            {"family": "highdim-smallk", "p": 20, "n": 30, "estimators": ["TD_HD(3)"], "edges": False, "label": "Small k"},
            {"family": "highdim-hub", "p": 20, "n": 30, "estimators": ["TD_HD(3)"], "edges": False, "label": "Hub"},
        ]}, replicates=2)
        md = run_benchmark(small).to_markdown()
        assert "Kendall's τ HTD Small k" in md and "Kendall's τ HTD Hub" in md

    def test_threads_identical(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"name": "det", "master_seed": 5, "replicates": 4, "settings": [
            {"family": "chain-random", "p": 8, "n": 60, "pc": "sparse", "estimators": ["TD", "BU"]},
            {"family": "highdim-smallk", "p": 30, "n": 20, "estimators": ["HTD(2)", "TD"], "edges": False},
        ]}))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(["bench", "--config", cfg, "--threads", 1, "--out", a]) == 0
        assert run(["bench", "--config", cfg, "--threads", 8, "--out", b]) == 0
        assert a.read_bytes() == b.read_bytes()
        rep = BenchmarkReport.from_csv(a.read_text())
        # p > n under TD: every replicate fails and is counted, none aborts
        td = rep.cell("TD", 30, 20)
        assert td.failures == 4 and td.tau_mean is None

    def test_round_trips(self):
        cfg = load_config({"name": "rt", "master_seed": 2, "replicates": 3, "settings": [
            {"family": "chain-random", "p": 6, "n": 50, "pc": 0.3, "estimators": ["TD", "BU"]}]})
        rep = run_benchmark(cfg)
        assert BenchmarkReport.from_csv(rep.to_csv(timing=True), "rt", 2) == rep
        assert BenchmarkReport.from_json(rep.to_json(timing=True)) == rep
        assert "seconds" not in rep.to_csv().splitlines()[0]

    def test_env_threads(self, tmp_path, monkeypatch):
        monkeypatch.setenv("EQVAR_THREADS", "two")
        assert run(["bench", "--config", "table1", "--replicates", 1, "--out", tmp_path / "x"]) == 2

    def test_malformed_config(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"settings": [{"family": "chain-random"}]}')
        assert run(["bench", "--config", bad]) == 2
        bad.write_text('{"settings": [{"family": "chain-random", "p": 5, "n": 9, "estimators": ["XYZ"]}]}')
        assert run(["bench", "--config", bad]) == 2
        assert run(["bench", "--config", tmp_path / "missing.json"]) == 2

    def test_estimator_names(self):
        assert parse_estimator("TD")[0] == "TD"
        assert parse_estimator("TD_HD(3)")[1].q == 3
        assert parse_estimator("HTD(2)")[0] == "HTD"
        with pytest.raises(ConfigError):
            parse_estimator("GDS")


@pytest.mark.skipif(shutil.which("eqvar") is None, reason="console script not installed")
def test_console_script(tmp_path):
    argv = ["eqvar", "simulate", "--family", "peters", "--p", "4", "--n", "10", "--pc", "0.5", "--out", str(tmp_path)]
    res = subprocess.run(argv, capture_output=True)
    assert res.returncode == 0
    assert (tmp_path / "data.csv").exists()
