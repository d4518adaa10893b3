"""Command-line front end: estimate, test, simulate, power.

Structured results go to JSON, tables to CSV; --plot additionally renders
matplotlib figures next to the delimited output. Exit codes: 0 success,
2 usage/config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import plots
from .data import Dataset, load_csv, save_csv, standardize
from .errors import DataError, NumericalError, UsageError
from .inference import InferenceConfig, edge_test, stability_select, test_all_edges
from .penalties import FAMILIES, PenaltySpec
from .samplers import (
    GaussianSpec,
    GibbsConfig,
    IsingSpec,
    MixedSpec,
    build_precision,
    gaussian_truth_edges,
    ising_truth_edges,
    mixed_truth_edges,
    sample_gaussian,
    sample_ising,
    sample_mixed,
)
from .solver import SolverConfig, cross_validate, estimate_graph

SCHEMA_VERSION = 1


def _load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return cfg


def _merge_config(args, parser_defaults):
    """Flags override config-file values; the merged dict is echoed verbatim."""
    merged = dict(vars(args))
    merged.pop("func", None)
    file_cfg = {}
    if merged.get("config"):
        file_cfg = _load_config_file(merged["config"])
    for key, value in file_cfg.items():
        if key not in merged:
            raise UsageError(f"unknown config key {key!r}")
        # a flag left at its parser default yields to the config file
        if merged[key] == parser_defaults.get(key):
            merged[key] = value
    return merged


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_edge(text):
    try:
        j, k = (int(p) for p in text.split(","))
    except ValueError:
        raise UsageError(f"--edge expects 'j,k', got {text!r}") from None
    if j == k:
        raise UsageError("edge endpoints must differ")
    return j, k


def _require(cfg, *keys):
    for key in keys:
        if cfg.get(key) is None:
            raise UsageError(f"missing required option --{key.replace('_', '-')}")


def _load_input(cfg):
    _require(cfg, "input", "output")
    data = load_csv(cfg["input"])
    if cfg.get("standardize"):
        data = standardize(data, center=True, scale=True)
    return data


def _inference_config(cfg) -> InferenceConfig:
    return InferenceConfig(
        penalty_family=cfg["penalty"],
        lam=cfg.get("lam"),
        cv_folds=cfg["cv_folds"],
        cv_grid_size=cfg["cv_grid"],
        cv_seed=cfg["seed"] if cfg.get("seed") is not None else 0,
        cv_rule=cfg.get("cv_rule", "min"),
        lambda_d=cfg.get("lambda_d", InferenceConfig.lambda_d),
    )


def cmd_estimate(cfg):
    data = _load_input(cfg)
    penalty = PenaltySpec(cfg["penalty"], lam=1.0)
    solver_cfg = SolverConfig(penalty=penalty)
    if cfg.get("lam") is not None:
        lambdas = [cfg["lam"]] * data.d
        lambda_source = "fixed"
    else:
        # shared lambda chosen by CV on the summed validation loss
        from .inference import _shared_lambda

        lam = _shared_lambda(data, range(data.d), _inference_config(cfg))
        lambdas = [lam] * data.d
        lambda_source = "cv"
    solver_cfg = solver_cfg.with_lambda(float(lambdas[0]))
    graph = estimate_graph(data, solver_cfg, symmetrize=cfg["symmetrize"],
                           lambdas=lambdas)
    names = data.column_names or tuple(f"x{j}" for j in range(data.d))
    out = Path(cfg["output"])
    edges = []
    for j in range(data.d):
        for k in range(j + 1, data.d):
            if graph.adjacency[j, k]:
                bj = graph.node_estimates[j].beta_hat.beta[k - 1 if k > j else k]
                bk = graph.node_estimates[k].beta_hat.beta[j if j < k else j - 1]
                edges.append({"j": j, "k": k, "name_j": names[j], "name_k": names[k],
                              "beta_jk": float(bj), "beta_kj": float(bk)})
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _jsonable(cfg),
        "n": data.n,
        "d": data.d,
        "symmetrize": cfg["symmetrize"],
        "lambda_source": lambda_source,
        "adjacency": graph.adjacency.astype(int).tolist(),
        "nodes": [
            {
                "node": est.node,
                "lambda": est.lambda_used,
                "stages": est.stages_run,
                "converged": bool(est.converged),
                "beta": est.beta_hat.beta.tolist(),
            }
            for est in graph.node_estimates
        ],
        "edges": edges,
    }
    _write_json(out, payload)
    edge_csv = out.with_suffix(".edges.csv")
    with open(edge_csv, "w", encoding="utf-8") as fh:
        fh.write("j,k,name_j,name_k,beta_jk,beta_kj\n")
        for e in edges:
            fh.write(f"{e['j']},{e['k']},{e['name_j']},{e['name_k']},"
                     f"{e['beta_jk']!r},{e['beta_kj']!r}\n")
    if cfg.get("plot"):
        plots.save_adjacency(graph.adjacency, out.with_suffix(".adjacency.png"),
                             names=names, title="estimated graph")
    print(f"estimate: {len(edges)} edges among {data.d} nodes -> {out}")
    return 0


def cmd_test(cfg):
    data = _load_input(cfg)
    inf_cfg = _inference_config(cfg)
    alpha = cfg["alpha"]
    names = data.column_names or tuple(f"x{j}" for j in range(data.d))
    out = Path(cfg["output"])
    if cfg.get("edge"):
        j, k = _parse_edge(cfg["edge"])
        if not (0 <= j < data.d and 0 <= k < data.d):
            raise UsageError(f"edge ({j},{k}) out of range for d={data.d}")
        t = edge_test(data, j, k, alpha=alpha, config=inf_cfg)
        payload = {
            "schema_version": SCHEMA_VERSION,
            "config": _jsonable(cfg),
            "edge": list(t.edge),
            "s_hat": t.s_hat,
            "sigma_hat": t.sigma_hat,
            "z": t.z,
            "p_value": t.p_value,
            "reject": t.reject,
            "degenerate": t.degenerate,
            "lambda": t.lambda_used,
        }
        _write_json(out, payload)
        print(f"test edge ({t.edge[0]},{t.edge[1]}): p={t.p_value:.4g} "
              f"reject={t.reject} -> {out}")
        return 0
    if cfg["correction"] == "stability":
        result = stability_select(data, alpha=alpha,
                                  n_subsamples=cfg["subsamples"],
                                  keep_threshold=cfg["keep_threshold"],
                                  seed=cfg["seed"] or 0, config=inf_cfg)
    else:
        result = test_all_edges(data, alpha=alpha, correction=cfg["correction"],
                                config=inf_cfg)
    records = [
        {"j": t.edge[0], "k": t.edge[1], "s_hat": t.s_hat, "sigma_hat": t.sigma_hat,
         "z": t.z, "p_value": t.p_value, "reject": t.reject,
         "degenerate": t.degenerate}
        for t in result.edge_tests
    ]
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": _jsonable(cfg),
        "method": result.method,
        "alpha": result.alpha,
        "metadata": _jsonable(result.metadata),
        "p_matrix": result.p_matrix.tolist(),
        "adjacency": result.adjacency.astype(int).tolist(),
        "edges": records,
        "errors": _jsonable(result.errors),
    }
    _write_json(out, payload)
    if cfg.get("plot"):
        plots.save_pvalue_heatmap(result.p_matrix, out.with_suffix(".pvalues.png"),
                                  names=names)
        plots.save_adjacency(result.adjacency, out.with_suffix(".adjacency.png"),
                             names=names, title=f"{result.method} selection")
    kept = int(result.adjacency.sum() // 2)
    print(f"test ({result.method}): {kept} edges kept at alpha={alpha} -> {out}")
    return 0


def cmd_simulate(cfg):
    _require(cfg, "model", "n", "output")
    model = cfg["model"]
    seed = cfg["seed"] or 0
    n = cfg["n"]
    if n is None or n < 2:
        raise UsageError("--n must be at least 2")
    gibbs = GibbsConfig(burn_in=cfg["burn_in"], thin=cfg["thin"], seed=seed)
    if model == "gaussian":
        if cfg["d"] is None:
            raise UsageError("gaussian model needs --d")
        spec = GaussianSpec(cfg["d"], cfg["mu"])
        data = sample_gaussian(build_precision(spec), n, seed=seed)
        truth = gaussian_truth_edges(spec)
    elif model == "ising":
        if cfg["grid"] is None:
            raise UsageError("ising model needs --grid R C")
        spec = IsingSpec(cfg["grid"][0], cfg["grid"][1], cfg["mu"])
        data = sample_ising(spec, n, gibbs)
        truth = ising_truth_edges(spec)
    elif model == "mixed":
        if cfg["grid"] is None:
            raise UsageError("mixed model needs --grid R C")
        spec = MixedSpec(cfg["grid"][0], cfg["grid"][1], cfg["mu"])
        data = sample_mixed(spec, n, gibbs)
        truth = mixed_truth_edges(spec)
    else:
        raise UsageError(f"unknown model {model!r}")
    out = Path(cfg["output"])
    save_csv(data, out)
    truth_path = Path(cfg["truth"]) if cfg.get("truth") else out.with_suffix(".truth.csv")
    with open(truth_path, "w", encoding="utf-8") as fh:
        fh.write("j,k\n")
        for j, k in truth:
            fh.write(f"{j},{k}\n")
    print(f"simulate {model}: n={data.n} d={data.d} mu={cfg['mu']} -> {out} "
          f"(truth: {truth_path}, {len(truth)} edges)")
    return 0


def _power_replicate(model, mu, n, d, grid, edge, alpha, inf_cfg, gibbs_base, rep_seed):
    if model == "gaussian":
        spec = GaussianSpec(d, mu)
        data = sample_gaussian(build_precision(spec), n, seed=rep_seed)
    elif model == "ising":
        spec = IsingSpec(grid[0], grid[1], mu)
        data = sample_ising(spec, n, GibbsConfig(gibbs_base.burn_in, gibbs_base.thin,
                                                 seed=rep_seed))
    else:
        spec = MixedSpec(grid[0], grid[1], mu)
        data = sample_mixed(spec, n, GibbsConfig(gibbs_base.burn_in, gibbs_base.thin,
                                                 seed=rep_seed))
    return edge_test(data, edge[0], edge[1], alpha=alpha, config=inf_cfg)


def default_power_edge(model, d, grid):
    """A true edge of the design (also the designated pair at mu=0).

    (0, 1) is an edge in every design: circulant neighbors for gaussian,
    lattice neighbors for the grids (the cross-layer edge when the mixed
    grid is 1x1).
    """
    return (0, 1)


def cmd_power(cfg):
    _require(cfg, "model", "n", "output")
    model = cfg["model"]
    n = cfg["n"]
    replicates = cfg["replicates"]
    alpha = cfg["alpha"]
    seed = cfg["seed"] or 0
    if n is None:
        raise UsageError("--n is required")
    if replicates < 1:
        raise UsageError("--replicates must be positive")
    mus = [float(m) for m in cfg["mu_grid"].split(",")]
    if model == "gaussian":
        if cfg["d"] is None:
            raise UsageError("gaussian model needs --d")
        d, grid = cfg["d"], None
    else:
        if cfg["grid"] is None:
            raise UsageError(f"{model} model needs --grid R C")
        grid = cfg["grid"]
        d = grid[0] * grid[1] * (2 if model == "mixed" else 1)
    edge = _parse_edge(cfg["edge"]) if cfg.get("edge") else default_power_edge(model, d, grid)
    inf_cfg = _inference_config(cfg)
    gibbs = GibbsConfig(burn_in=cfg["burn_in"], thin=cfg["thin"], seed=seed)
    rows = []
    for mu in sorted(mus):
        rejections = 0
        valid = 0
        for rep in range(replicates):
            rep_seed = [seed, int(round(mu * 1e6)), rep]
            try:
                t = _power_replicate(model, mu, n, d, grid, edge, alpha, inf_cfg,
                                     gibbs, rep_seed)
            except NumericalError:
                continue
            if t.degenerate:
                continue
            valid += 1
            rejections += int(t.reject)
        rate = rejections / valid if valid else float("nan")
        stderr = float(np.sqrt(rate * (1 - rate) / valid)) if valid else float("nan")
        rows.append({"mu": mu, "n": n, "d": d, "model": model,
                     "replicates": valid, "rejection_rate": rate,
                     "monte_carlo_stderr": stderr, "alpha": alpha})
    out = Path(cfg["output"])
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("mu,n,d,model,replicates,rejection_rate,monte_carlo_stderr\n")
        for r in rows:
            fh.write(f"{r['mu']!r},{r['n']},{r['d']},{r['model']},{r['replicates']},"
                     f"{r['rejection_rate']!r},{r['monte_carlo_stderr']!r}\n")
    if cfg.get("plot"):
        plots.save_power_curve(rows, out.with_suffix(".png"))
    for r in rows:
        print(f"power mu={r['mu']}: rate={r['rejection_rate']:.4f} "
              f"(+/- {r['monte_carlo_stderr']:.4f}, {r['replicates']} reps)")
    print(f"power table -> {out}")
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def build_parser():
    parser = argparse.ArgumentParser(
        prog="segraph",
        description="Graph estimation and edge-level score tests for "
                    "semiparametric exponential-family graphical models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--seed", type=int, default=None)

    def add_estimation_flags(p):
        p.add_argument("--input", default=None)
        p.add_argument("--output", default=None)
        p.add_argument("--lambda", dest="lam", type=float, default=None,
                       help="fixed penalty level; omit to select by CV")
        p.add_argument("--cv-folds", dest="cv_folds", type=int, default=10)
        p.add_argument("--cv-grid", dest="cv_grid", type=int, default=50)
        p.add_argument("--cv-rule", dest="cv_rule", choices=("min", "1se"),
                       default="min",
                       help="pick the CV-loss minimizer or the sparsest "
                            "lambda within one standard error of it")
        p.add_argument("--penalty", choices=FAMILIES, default="capped-l1")
        p.add_argument("--standardize", action="store_true",
                       help="center and scale columns before analysis")
        p.add_argument("--plot", action="store_true",
                       help="render figures next to the output")

    p_est = sub.add_parser("estimate", help="node-wise penalized graph estimate")
    add_estimation_flags(p_est)
    p_est.add_argument("--symmetrize", choices=("AND", "OR"), default="AND")
    add_common(p_est)
    p_est.set_defaults(func=cmd_estimate)

    p_test = sub.add_parser("test", help="edge p-values by the pairwise score test")
    add_estimation_flags(p_test)
    p_test.add_argument("--alpha", type=float, default=0.05)
    p_test.add_argument("--correction", choices=("none", "bonferroni", "stability"),
                        default="bonferroni")
    p_test.add_argument("--lambda-d", dest="lambda_d", type=float, default=0.2)
    p_test.add_argument("--edge", default=None, help="test a single edge 'j,k'")
    p_test.add_argument("--subsamples", type=int, default=100)
    p_test.add_argument("--keep-threshold", dest="keep_threshold", type=int, default=90)
    add_common(p_test)
    p_test.set_defaults(func=cmd_test)

    def add_sampler_flags(p):
        p.add_argument("--model", choices=("gaussian", "ising", "mixed"), default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--d", type=int, default=None)
        p.add_argument("--grid", type=int, nargs=2, default=None, metavar=("R", "C"))
        p.add_argument("--burn-in", dest="burn_in", type=int, default=1000)
        p.add_argument("--thin", type=int, default=10)

    p_sim = sub.add_parser("simulate", help="sample a dataset plus ground truth")
    add_sampler_flags(p_sim)
    p_sim.add_argument("--mu", type=float, default=0.2)
    p_sim.add_argument("--output", default=None)
    p_sim.add_argument("--truth", default=None)
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_pow = sub.add_parser("power", help="Monte-Carlo rejection-rate table")
    add_sampler_flags(p_pow)
    p_pow.add_argument("--mu", dest="mu_grid", default="0,0.1,0.25",
                       help="comma-separated signal strengths")
    p_pow.add_argument("--replicates", type=int, default=100)
    p_pow.add_argument("--alpha", type=float, default=0.05)
    p_pow.add_argument("--edge", default=None, help="designated edge 'j,k'")
    p_pow.add_argument("--output", default=None)
    p_pow.add_argument("--lambda", dest="lam", type=float, default=None)
    p_pow.add_argument("--cv-folds", dest="cv_folds", type=int, default=10)
    p_pow.add_argument("--cv-grid", dest="cv_grid", type=int, default=50)
    p_pow.add_argument("--cv-rule", dest="cv_rule", choices=("min", "1se"),
                       default="min")
    p_pow.add_argument("--penalty", choices=FAMILIES, default="capped-l1")
    p_pow.add_argument("--lambda-d", dest="lambda_d", type=float, default=0.2)
    p_pow.add_argument("--plot", action="store_true")
    add_common(p_pow)
    p_pow.set_defaults(func=cmd_power)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    defaults = {a.dest: a.default for a in parser._actions}
    for sp in parser._subparsers._group_actions[0].choices.values():
        defaults.update({a.dest: a.default for a in sp._actions})
    try:
        cfg = _merge_config(args, defaults)
        return args.func(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
