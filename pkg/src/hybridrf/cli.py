"""Command-line interface to the sweeps, benchmarks, and cost model.

Exit codes: 0 on success, 1 on a handled error (bad config values, singular
diagonals, degenerate distributions, unwritable output), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bench import (
    ClusterBenchConfig,
    DistMetricRecord,
    MseVerifyConfig,
    PointwiseConfig,
    approx_softmax_distribution,
    cluster_benchmark,
    ks_distance,
    mse_verify,
    negative_mass_fraction,
    pointwise_sweep,
    render_records,
    wasserstein1,
)
from .closed_form import flops_matched_mn, flops_model, hybrid_feature_length
from .clustering import SyntheticClusterConfig
from .errors import DegenerateDistributionError
from .estimators import BaseEstimatorSpec, make_angular_hybrid
from .rng import Seed, derive_seed, generator

CONFIG_DOC = """\
The optional --config file holds one JSON object with settings for the
subcommand it is passed to.  All keys are optional; unknown keys are errors.
All randomness derives from --seed; config files carry no seeds.

pointwise:     {"r_values": [1.0, 1.25, 1.5], "theta_count": 13, "d": 64,
                "trials": 10000, "m_regular": 128, "sigma": 1.0,
                "chunk_size": 8192,
                "estimators": ["trig", "pospp", "anghyb", "gausshyb"]}
mse-verify:    {"r_values": [0.5, 1.0, 1.5], "theta_count": 5, "d": 8,
                "trials": 100000, "m": 1, "n": 1, "sigma": 1.0,
                "chunk_size": 8192,
                "families": ["trig", "pos_plus", "pos_plusplus",
                             "anghyb-shared", "anghyb-independent",
                             "gausshyb"]}
cluster-bench: {"rf_counts": [50, 100, 200], "reps": 20, "eval_count": 256,
                "dataset_id": "synthetic-2x2", "coeff": "zero_one",
                "a_real_only": true, "big": 1000.0, "small": 0.001,
                "dataset": {"d": 50, "points_per_cluster": 1000,
                            "sigma": 0.1, "sign_adjust": true,
                            "s_target": 0.08, "norm_control": 1.0}}
softmax-dist:  {"n_keys": 128, "n_queries": 8, "d": 16, "m": 64, "n": 8,
                "estimators": ["trig", "pospp", "anghyb"],
                "embeddings": null}
               "embeddings" may name a JSON file {"queries": [[...]],
               "keys": [[...]]} of equal-width rows; otherwise Gaussian
               embeddings scaled by d**-0.25 are drawn from --seed.
flops:         {"d": 64, "m": 16, "n": 8, "p": 1, "t_list": [2, 2],
                "l_list": [1], "target": null}

Set HYBRIDRF_WORKERS (default 1) to parallelize independent cells; outputs
are byte-identical for any worker count.
"""

_TUPLE_KEYS = {"r_values", "estimators", "families", "rf_counts", "t_list", "l_list"}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return {k: tuple(v) if k in _TUPLE_KEYS and isinstance(v, list) else v for k, v in data.items()}


def _take(config: dict, allowed: set[str], command: str) -> dict:
    unknown = set(config) - allowed
    if unknown:
        raise ValueError(f"unknown {command} config keys: {sorted(unknown)}")
    return config


def _write(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _cmd_pointwise(args) -> int:
    config = _take(
        _load_config(args.config),
        {"r_values", "theta_count", "d", "trials", "m_regular", "sigma", "chunk_size", "estimators"},
        "pointwise",
    )
    cfg = PointwiseConfig(seed=Seed(args.seed), **config)
    records = pointwise_sweep(cfg)
    _write(render_records(records, args.format), args.out)
    return 0


def _cmd_mse_verify(args) -> int:
    config = _take(
        _load_config(args.config),
        {"r_values", "theta_count", "d", "trials", "m", "n", "sigma", "chunk_size", "families"},
        "mse-verify",
    )
    cfg = MseVerifyConfig(seed=Seed(args.seed), **config)
    records = mse_verify(cfg)
    _write(render_records(records, args.format), args.out)
    finite = [r.ratio for r in records if np.isfinite(r.ratio)]
    if finite:
        worst = max(abs(v - 1.0) for v in finite)
        print(f"max |empirical/closed-form - 1| over finite cells: {worst:.4f}", file=sys.stderr)
    return 0


def _cmd_cluster_bench(args) -> int:
    config = _take(
        _load_config(args.config),
        {"rf_counts", "reps", "eval_count", "dataset_id", "coeff", "a_real_only", "big", "small", "dataset"},
        "cluster-bench",
    )
    root = Seed(args.seed)
    dataset = None
    if "dataset" in config:
        ds = dict(config.pop("dataset"))
        allowed = {"d", "points_per_cluster", "sigma", "sign_adjust", "s_target", "norm_control"}
        _take(ds, allowed, "cluster-bench dataset")
        dataset = SyntheticClusterConfig(seed=derive_seed(root, "dataset"), **ds)
    cfg = ClusterBenchConfig(seed=root, dataset=dataset, **config)
    records = cluster_benchmark(cfg)
    _write(render_records(records, args.format), args.out)
    return 0


def _load_embeddings(path: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        data = json.load(fh)
    queries = np.asarray(data["queries"], dtype=np.float64)
    keys = np.asarray(data["keys"], dtype=np.float64)
    if queries.ndim != 2 or keys.ndim != 2 or queries.shape[1] != keys.shape[1]:
        raise ValueError("embeddings must provide 2-D 'queries' and 'keys' of equal width")
    return queries, keys


def _cmd_softmax_dist(args) -> int:
    config = _take(
        _load_config(args.config),
        {"n_keys", "n_queries", "d", "m", "n", "estimators", "embeddings"},
        "softmax-dist",
    )
    root = Seed(args.seed)
    n_keys = config.get("n_keys", 128)
    n_queries = config.get("n_queries", 8)
    d = config.get("d", 16)
    m = config.get("m", 64)
    n = config.get("n", 8)
    estimators = config.get("estimators", ("trig", "pospp", "anghyb"))
    if config.get("embeddings"):
        queries, keys = _load_embeddings(config["embeddings"])
    else:
        gen = generator(derive_seed(root, "embeddings"))
        scale = float(d) ** -0.25
        queries = scale * gen.standard_normal((n_queries, d))
        keys = scale * gen.standard_normal((n_keys, d))
    specs = {}
    for est in estimators:
        if est == "trig":
            specs[est] = BaseEstimatorSpec("trig", m, derive_seed(root, "dist-trig"))
        elif est == "pospp":
            specs[est] = BaseEstimatorSpec("pos_plusplus", m, derive_seed(root, "dist-pospp"))
        elif est == "anghyb":
            specs[est] = make_angular_hybrid(m, n, "shared", derive_seed(root, "dist-anghyb"))
        else:
            raise ValueError(f"unknown estimator {est!r}; expected trig, pospp, or anghyb")
    support = np.arange(keys.shape[0], dtype=np.float64)
    records = []
    for qi in range(queries.shape[0]):
        exact = approx_softmax_distribution(queries[qi], keys, "exact")
        for est in estimators:
            try:
                p = approx_softmax_distribution(queries[qi], keys, specs[est])
                rec = DistMetricRecord(
                    query_id=qi,
                    estimator_id=est,
                    wasserstein1=wasserstein1(p, exact, support),
                    ks=ks_distance(p, exact),
                    negative_mass_fraction=negative_mass_fraction(p),
                )
            except DegenerateDistributionError as exc:
                print(
                    f"warning: query {qi} estimator {est}: {exc} "
                    f"(raw_sum={exc.raw_sum!r}, negative_count={exc.negative_count})",
                    file=sys.stderr,
                )
                rec = DistMetricRecord(
                    query_id=qi,
                    estimator_id=est,
                    wasserstein1=float("nan"),
                    ks=float("nan"),
                    negative_mass_fraction=float("nan"),
                )
            records.append(rec)
    _write(render_records(records, args.format, record_cls=DistMetricRecord), args.out)
    return 0


def _cmd_flops(args) -> int:
    config = _take(
        _load_config(args.config), {"d", "m", "n", "p", "t_list", "l_list", "target"}, "flops"
    )
    d = config.get("d", 64)
    m = config.get("m", 16)
    n = config.get("n", 8)
    p = config.get("p", 1)
    t_list = list(config.get("t_list", (2,) * (p + 1)))
    l_list = list(config.get("l_list", (1,) * p))
    model = flops_model(d, m, n, p, t_list, l_list)
    out = {
        "d": d,
        "m": m,
        "n": n,
        "p": p,
        "hybrid_cost": model.hybrid_cost,
        "regular_cost": model.regular_cost,
        "cost_ratio": model.hybrid_cost / model.regular_cost,
        "feature_length": hybrid_feature_length(m, n, t_list, l_list),
    }
    if config.get("target") is not None:
        matched_m, matched_n = flops_matched_mn(int(config["target"]), d, p)
        out["matched_m"] = matched_m
        out["matched_n"] = matched_n
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return 0


_COMMANDS = {
    "pointwise": (_cmd_pointwise, "accuracy sweep over (estimator, radius, angle) cells"),
    "mse-verify": (_cmd_mse_verify, "compare Monte Carlo MSEs with the closed forms"),
    "cluster-bench": (_cmd_cluster_bench, "clustered vs. regular estimators on synthetic clusters"),
    "softmax-dist": (_cmd_softmax_dist, "distribution metrics of approximate attention weights"),
    "flops": (_cmd_flops, "projection cost model and budget matching"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridrf",
        description="Hybrid random-feature softmax estimators: sweeps and benchmarks.",
        epilog=CONFIG_DOC,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
        p.add_argument("--out", default="-", help="output path, or - for stdout (default -)")
        p.add_argument(
            "--format", choices=("csv", "json"), default="csv", help="record format (default csv)"
        )
        p.add_argument("--config", default=None, help="JSON config file (see below)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command][0](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
