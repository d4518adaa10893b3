import json

import numpy as np
import pytest

from segraph.cli import main
from segraph.data import load_csv


def run(*argv):
    return main([str(a) for a in argv])


def simulate_gaussian(tmp_path, name="data.csv", n=40, d=5, mu=0.2, seed=1):
    path = tmp_path / name
    assert run("simulate", "--model", "gaussian", "--n", n, "--d", d,
               "--mu", mu, "--seed", seed, "--output", path) == 0
    return path


class TestSimulate:
    def test_gaussian_outputs(self, tmp_path):
        path = simulate_gaussian(tmp_path, n=20, d=6)
        data = load_csv(path)
        assert (data.n, data.d) == (20, 6)
        truth = (tmp_path / "data.truth.csv").read_text().strip().splitlines()
        assert truth[0] == "j,k"
        assert len(truth) - 1 == 2 * 6

    def test_ising_truth_edge_count(self, tmp_path):
        out = tmp_path / "ising.csv"
        assert run("simulate", "--model", "ising", "--n", 10, "--grid", 4, 5,
                   "--mu", 0.5, "--burn-in", 50, "--thin", 1,
                   "--output", out) == 0
        truth = out.with_suffix(".truth.csv").read_text().strip().splitlines()
        assert len(truth) - 1 == 4 * 4 + 5 * 3
        values = load_csv(out).values
        assert set(np.unique(values)) <= {0.0, 1.0}

    def test_mixed_truth_edge_count_and_custom_truth_path(self, tmp_path):
        out = tmp_path / "mixed.csv"
        truth = tmp_path / "edges.csv"
        assert run("simulate", "--model", "mixed", "--n", 10, "--grid", 2, 2,
                   "--burn-in", 50, "--thin", 1, "--output", out,
                   "--truth", truth) == 0
        lines = truth.read_text().strip().splitlines()
        assert len(lines) - 1 == 2 * 4 + 4

    def test_deterministic_in_seed(self, tmp_path):
        a = simulate_gaussian(tmp_path, "a.csv", seed=9)
        b = simulate_gaussian(tmp_path, "b.csv", seed=9)
        assert a.read_text() == b.read_text()


class TestEstimate:
    def test_huge_lambda_gives_no_edges(self, tmp_path):
        data = simulate_gaussian(tmp_path)
        out = tmp_path / "est.json"
        assert run("estimate", "--input", data, "--output", out,
                   "--lambda", 10.0) == 0
        payload = json.loads(out.read_text())
        assert payload["lambda_source"] == "fixed"
        assert not np.any(payload["adjacency"])
        assert payload["edges"] == []
        edge_csv = out.with_suffix(".edges.csv").read_text().strip().splitlines()
        assert edge_csv == ["j,k,name_j,name_k,beta_jk,beta_kj"]

    def test_cv_path_runs(self, tmp_path):
        data = simulate_gaussian(tmp_path, n=30, d=5)
        out = tmp_path / "est.json"
        assert run("estimate", "--input", data, "--output", out,
                   "--cv-folds", 3, "--cv-grid", 3) == 0
        payload = json.loads(out.read_text())
        assert payload["lambda_source"] == "cv"
        assert len(payload["nodes"]) == 5
        assert all(len(nd["beta"]) == 4 for nd in payload["nodes"])

    def test_adjacency_symmetric_and_consistent_with_edges(self, tmp_path):
        data = simulate_gaussian(tmp_path, n=60, d=5, mu=0.25)
        out = tmp_path / "est.json"
        assert run("estimate", "--input", data, "--output", out,
                   "--lambda", 0.05, "--symmetrize", "OR") == 0
        payload = json.loads(out.read_text())
        adj = np.array(payload["adjacency"])
        assert np.array_equal(adj, adj.T)
        assert adj.sum() == 2 * len(payload["edges"])

    def test_plot_writes_figure(self, tmp_path):
        data = simulate_gaussian(tmp_path)
        out = tmp_path / "est.json"
        assert run("estimate", "--input", data, "--output", out,
                   "--lambda", 0.1, "--plot") == 0
        assert out.with_suffix(".adjacency.png").stat().st_size > 0


class TestTest:
    def test_single_edge_order_invariant(self, tmp_path):
        data = simulate_gaussian(tmp_path)
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert run("test", "--input", data, "--output", a, "--lambda", 0.1,
                   "--edge", "1,3") == 0
        assert run("test", "--input", data, "--output", b, "--lambda", 0.1,
                   "--edge", "3,1") == 0
        pa = json.loads(a.read_text())
        pb = json.loads(b.read_text())
        pa.pop("config")
        pb.pop("config")
        assert pa == pb
        assert pa["edge"] == [1, 3]

    def test_repeat_run_byte_identical(self, tmp_path):
        data = simulate_gaussian(tmp_path)
        out = tmp_path / "t.json"
        assert run("test", "--input", data, "--output", out,
                   "--lambda", 0.1, "--correction", "bonferroni") == 0
        first = out.read_bytes()
        assert run("test", "--input", data, "--output", out,
                   "--lambda", 0.1, "--correction", "bonferroni") == 0
        assert out.read_bytes() == first

    def test_bonferroni_payload_structure(self, tmp_path):
        data = simulate_gaussian(tmp_path, n=40, d=5)
        out = tmp_path / "t.json"
        assert run("test", "--input", data, "--output", out,
                   "--lambda", 0.1) == 0
        payload = json.loads(out.read_text())
        p = np.array(payload["p_matrix"])
        assert np.array_equal(p, p.T)
        assert np.all(np.diag(p) == 1.0)
        assert len(payload["edges"]) == 10
        assert payload["method"] == "bonferroni"
        assert payload["metadata"]["per_test_level"] == pytest.approx(0.05 / 10)

    def test_stability_correction(self, tmp_path):
        data = simulate_gaussian(tmp_path, n=40, d=5)
        out = tmp_path / "s.json"
        assert run("test", "--input", data, "--output", out, "--lambda", 0.1,
                   "--correction", "stability", "--subsamples", 3,
                   "--keep-threshold", 2, "--seed", 0) == 0
        payload = json.loads(out.read_text())
        assert payload["method"] == "stability"
        assert payload["metadata"]["n_subsamples"] == 3

    def test_plot_writes_figures(self, tmp_path):
        data = simulate_gaussian(tmp_path, n=40, d=5)
        out = tmp_path / "t.json"
        assert run("test", "--input", data, "--output", out, "--lambda", 0.1,
                   "--plot") == 0
        assert out.with_suffix(".pvalues.png").stat().st_size > 0
        assert out.with_suffix(".adjacency.png").stat().st_size > 0


class TestPower:
    def test_single_replicate_table(self, tmp_path):
        out = tmp_path / "power.csv"
        assert run("power", "--model", "gaussian", "--n", 40, "--d", 5,
                   "--mu", "0.25", "--replicates", 1, "--lambda", 0.1,
                   "--seed", 0, "--output", out) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "mu,n,d,model,replicates,rejection_rate,monte_carlo_stderr"
        assert len(lines) == 2
        fields = lines[1].split(",")
        assert float(fields[0]) == 0.25
        assert fields[4] == "1"
        assert float(fields[6]) == 0.0

    def test_mu_grid_sorted_and_plotted(self, tmp_path):
        out = tmp_path / "power.csv"
        assert run("power", "--model", "gaussian", "--n", 30, "--d", 5,
                   "--mu", "0.2,0.0", "--replicates", 1, "--lambda", 0.15,
                   "--seed", 1, "--output", out, "--plot") == 0
        lines = out.read_text().strip().splitlines()
        mus = [float(line.split(",")[0]) for line in lines[1:]]
        assert mus == sorted(mus) == [0.0, 0.2]
        assert out.with_suffix(".png").stat().st_size > 0


class TestErrorsAndConfig:
    def test_missing_required_flag_is_usage_error(self, tmp_path):
        assert run("estimate", "--output", tmp_path / "x.json") == 2

    def test_nonexistent_input_is_data_error(self, tmp_path):
        assert run("estimate", "--input", tmp_path / "nope.csv",
                   "--output", tmp_path / "x.json", "--lambda", 0.1) == 3

    def test_malformed_cell_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1.0,2.0\n1.5,oops\n")
        assert run("estimate", "--input", bad, "--output", tmp_path / "x.json",
                   "--lambda", 0.1) == 3

    def test_bad_edge_syntax_is_usage_error(self, tmp_path):
        data = simulate_gaussian(tmp_path)
        assert run("test", "--input", data, "--output", tmp_path / "x.json",
                   "--lambda", 0.1, "--edge", "1;3") == 2
        assert run("test", "--input", data, "--output", tmp_path / "x.json",
                   "--lambda", 0.1, "--edge", "2,2") == 2
        assert run("test", "--input", data, "--output", tmp_path / "x.json",
                   "--lambda", 0.1, "--edge", "0,99") == 2

    def test_invalid_model_parameters_are_usage_errors(self, tmp_path):
        out = tmp_path / "x.csv"
        assert run("simulate", "--model", "gaussian", "--n", 10, "--d", 4,
                   "--output", out) == 2
        assert run("simulate", "--model", "ising", "--n", 10,
                   "--output", out) == 2
        assert run("simulate", "--model", "gaussian", "--n", 1, "--d", 6,
                   "--output", out) == 2

    def test_config_file_supplies_options(self, tmp_path):
        data = simulate_gaussian(tmp_path)
        out = tmp_path / "cfg.json"
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"input": str(data), "output": str(out),
                                   "lam": 10.0}))
        assert run("estimate", "--config", cfg) == 0
        payload = json.loads(out.read_text())
        assert payload["edges"] == []
        assert payload["config"]["lam"] == 10.0

    def test_flag_overrides_config_file(self, tmp_path):
        data = simulate_gaussian(tmp_path, n=60, d=5, mu=0.25)
        out = tmp_path / "cfg.json"
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"input": str(data), "output": str(out),
                                   "lam": 10.0}))
        assert run("estimate", "--config", cfg, "--lambda", 0.05) == 0
        payload = json.loads(out.read_text())
        assert payload["config"]["lam"] == 0.05
        assert payload["nodes"][0]["lambda"] == 0.05

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"inptu": "typo.csv"}))
        assert run("estimate", "--config", cfg) == 2

    def test_malformed_config_rejected(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text("[1, 2]")
        assert run("estimate", "--config", cfg) == 2
