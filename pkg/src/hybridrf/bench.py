"""Benchmark harness: sweeps, cluster benchmarks, distribution metrics, export.

All reductions that feed reported numbers go through a fixed adjacent-pair
summation tree and all randomness through seeds derived from the run's root
seed with stable labels, so a given configuration produces byte-identical
output files on every run and under any worker count.  Parallelism (the
``HYBRIDRF_WORKERS`` environment variable) only maps independent, separately
seeded cells; results are collected in submission order.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .clustering import (
    ClusterModel,
    SyntheticClusterConfig,
    build_A_complex,
    build_A_real,
    generate_synthetic_clusters,
    kmeans,
)
from .closed_form import (
    flops_matched_mn,
    mse_gaussian_hybrid_same_length,
    rel_err_angular_hybrid,
    rel_err_same_length,
    sm_exact,
)
from .errors import DegenerateDistributionError
from .estimators import (
    BaseEstimatorSpec,
    HybridSpec,
    base_features,
    hybrid_features,
    sample_estimates,
    make_angular_hybrid,
    make_gaussian_hybrid,
)
from .features import cexp_features, pos_plusplus_features, trig_features
from .rng import Seed, derive_seed, generator, sample_ensemble

__all__ = [
    "SweepRecord",
    "ClusterBenchRecord",
    "DistMetricRecord",
    "PointwiseConfig",
    "ClusterBenchConfig",
    "pairwise_sum",
    "pairwise_mean",
    "quantile_linear",
    "EmpiricalMse",
    "empirical_mse",
    "pointwise_sweep",
    "MseVerifyRecord",
    "MseVerifyConfig",
    "mse_verify",
    "cluster_benchmark",
    "approx_softmax_distribution",
    "negative_mass_fraction",
    "wasserstein1",
    "ks_distance",
    "render_records",
    "export",
    "workers_from_env",
    "ordered_map",
]


# ---------------------------------------------------------------------------
# deterministic reductions


def pairwise_sum(values) -> float:
    """Sum by a fixed adjacent-pair binary tree (odd element carried upward).

    The tree shape depends only on the length, so the result is bitwise
    reproducible for a given input ordering no matter how the caller chunked
    or parallelized the work that produced the values.
    """
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        return 0.0
    while arr.size > 1:
        half = arr.size // 2
        merged = arr[: 2 * half : 2] + arr[1 : 2 * half : 2]
        if arr.size % 2:
            merged = np.concatenate([merged, arr[-1:]])
        arr = merged
    return float(arr[0])


def pairwise_mean(values) -> float:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("mean of empty array")
    return pairwise_sum(arr) / arr.size


def quantile_linear(values, q: float) -> float:
    """Quantile with linear interpolation between order statistics."""
    return float(np.quantile(np.asarray(values, dtype=np.float64), q, method="linear"))


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class SweepRecord:
    """One pointwise-sweep cell: estimator at a (theta, r) input pair."""

    theta: float
    r: float
    estimator_id: str
    trials: int
    mean_estimate: float
    q05: float
    q95: float
    empirical_rel_err: float
    closedform_rel_err: float
    exact_sm: float


@dataclass(frozen=True)
class ClusterBenchRecord:
    """MSE summary over repetitions for one estimator at one feature budget."""

    dataset_id: str
    rf_count: int
    estimator_id: str
    mean_mse: float
    min_mse: float
    max_mse: float


@dataclass(frozen=True)
class DistMetricRecord:
    """Distance of one approximate softmax distribution from the exact one."""

    query_id: int
    estimator_id: str
    wasserstein1: float
    ks: float
    negative_mass_fraction: float


# ---------------------------------------------------------------------------
# empirical MSE


class EmpiricalMse(NamedTuple):
    mse: float
    mse_variance: float
    mean: float


def empirical_mse(
    x: np.ndarray,
    y: np.ndarray,
    spec,
    trials: int,
    seed: Seed,
    chunk_size: int = 8192,
) -> EmpiricalMse:
    """Monte Carlo MSE of an estimator at one pair, with its own sampling variance.

    ``spec`` is a base or hybrid spec (fast vectorized path), or a callable
    ``spec(trial_seed) -> spec`` evaluated one realization at a time for
    estimator constructions the vectorized driver does not cover.
    """
    if trials < 2:
        raise ValueError(f"trials must be >= 2 to estimate a variance, got {trials}")
    if callable(spec) and not isinstance(spec, (BaseEstimatorSpec, HybridSpec)):
        from .estimators import sm_hat_base, sm_hat_hybrid

        values = np.empty(trials)
        for t in range(trials):
            s = spec(derive_seed(seed, f"trial-{t:08d}"))
            rec = (
                sm_hat_hybrid(x, y, s) if isinstance(s, HybridSpec) else sm_hat_base(x, y, s)
            )
            values[t] = rec.value
    else:
        values = sample_estimates(x, y, spec, trials, seed, chunk_size)
    sm = float(sm_exact(x, y))
    sq_err = (values - sm) ** 2
    mse = pairwise_mean(sq_err)
    dev = sq_err - mse
    var_sq_err = pairwise_sum(dev * dev) / (trials - 1)
    return EmpiricalMse(mse=mse, mse_variance=var_sq_err / trials, mean=pairwise_mean(values))


# ---------------------------------------------------------------------------
# pointwise sweep


@dataclass(frozen=True)
class PointwiseConfig:
    """Grid and budgets for the pointwise accuracy sweep.

    The regular estimators (trig and two-sided positive) run at ``m_regular``
    projections; the hybrids run at the (m, n) whose projection cost matches
    ``m_regular`` under the cost model, subject to m n >= m_regular.
    """

    seed: Seed
    r_values: tuple = (1.0, 1.25, 1.5)
    theta_count: int = 13
    d: int = 64
    trials: int = 10000
    m_regular: int = 128
    sigma: float = 1.0
    chunk_size: int = 8192
    estimators: tuple = ("trig", "pospp", "anghyb", "gausshyb")

    def __post_init__(self) -> None:
        if len(self.r_values) == 0 or len(self.estimators) == 0:
            raise ValueError("pointwise grid is empty")
        if any(r <= 0 for r in self.r_values):
            raise ValueError("all radii must be > 0")
        if self.theta_count < 2:
            raise ValueError(f"theta_count must be >= 2, got {self.theta_count}")
        if self.d < 2:
            raise ValueError(f"d must be >= 2 to realize an angle, got {self.d}")
        if self.trials < 2:
            raise ValueError(f"trials must be >= 2, got {self.trials}")
        if self.m_regular < 1:
            raise ValueError(f"m_regular must be >= 1, got {self.m_regular}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        unknown = set(self.estimators) - {"trig", "pospp", "anghyb", "gausshyb"}
        if unknown:
            raise ValueError(f"unknown estimators in config: {sorted(unknown)}")


def _pair_at(theta: float, r: float, d: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.zeros(d)
    y = np.zeros(d)
    x[0] = r
    y[0] = r * np.cos(theta)
    y[1] = r * np.sin(theta)
    return x, y


def _pointwise_cell(cfg: PointwiseConfig, est: str, ri: int, ti: int, thetas) -> SweepRecord:
    theta = float(thetas[ti])
    r = float(cfg.r_values[ri])
    m_h, n_h = flops_matched_mn(cfg.m_regular, cfg.d)
    cell_seed = derive_seed(cfg.seed, f"cell-{est}-{ri}-{ti}")
    spec_seed = derive_seed(cell_seed, "spec")
    mc_seed = derive_seed(cell_seed, "mc")
    x, y = _pair_at(theta, r, cfg.d)
    if est == "trig":
        spec = BaseEstimatorSpec("trig", cfg.m_regular, spec_seed)
        est_id = f"trig-m{cfg.m_regular}"
        cf_rel = float(rel_err_same_length(theta, r, cfg.m_regular, "trig"))
    elif est == "pospp":
        spec = BaseEstimatorSpec("pos_plusplus", cfg.m_regular, spec_seed)
        est_id = f"pospp-m{cfg.m_regular}"
        cf_rel = float(rel_err_same_length(theta, r, cfg.m_regular, "pos_plusplus"))
    elif est == "anghyb":
        spec = make_angular_hybrid(m_h, n_h, "shared", spec_seed)
        est_id = f"anghyb-m{m_h}-n{n_h}-shared"
        cf_rel = float(rel_err_angular_hybrid(theta, r, m_h, n_h))
    else:
        spec = make_gaussian_hybrid(m_h, n_h, cfg.sigma, r, "shared", spec_seed)
        est_id = f"gausshyb-m{m_h}-n{n_h}-shared"
        sm_cf = float(np.exp(r * r * np.cos(theta)))
        cf_rel = float(
            np.sqrt(mse_gaussian_hybrid_same_length(theta, r, cfg.sigma, m_h, n_h)) / sm_cf
        )
    values = sample_estimates(x, y, spec, cfg.trials, mc_seed, cfg.chunk_size)
    sm = float(sm_exact(x, y))
    rel = float(np.sqrt(pairwise_mean((values - sm) ** 2)) / sm)
    return SweepRecord(
        theta=theta,
        r=r,
        estimator_id=est_id,
        trials=cfg.trials,
        mean_estimate=pairwise_mean(values),
        q05=quantile_linear(values, 0.05),
        q95=quantile_linear(values, 0.95),
        empirical_rel_err=rel,
        closedform_rel_err=cf_rel,
        exact_sm=sm,
    )


def pointwise_sweep(cfg: PointwiseConfig) -> list[SweepRecord]:
    """Run the pointwise accuracy sweep over (estimator, r, theta) cells."""
    thetas = np.linspace(0.0, np.pi, cfg.theta_count)
    cells = [
        (est, ri, ti)
        for est in cfg.estimators
        for ri in range(len(cfg.r_values))
        for ti in range(cfg.theta_count)
    ]
    return ordered_map(lambda c: _pointwise_cell(cfg, c[0], c[1], c[2], thetas), cells)


# ---------------------------------------------------------------------------
# MSE verification sweep


@dataclass(frozen=True)
class MseVerifyRecord:
    """Empirical vs. closed-form MSE of one estimator at one (theta, r) pair."""

    estimator_id: str
    theta: float
    r: float
    m: int
    n: int
    trials: int
    empirical_mse: float
    closedform_mse: float
    ratio: float


@dataclass(frozen=True)
class MseVerifyConfig:
    """Grid for checking the Monte Carlo MSEs against the closed forms.

    ``families`` mixes base families with hybrid ids ("anghyb-shared",
    "anghyb-independent", "gausshyb").  ``ratio`` in the output is
    empirical/closed-form, or nan where the closed form is exactly zero.
    """

    seed: Seed
    r_values: tuple = (0.5, 1.0, 1.5)
    theta_count: int = 5
    d: int = 8
    trials: int = 100000
    m: int = 1
    n: int = 1
    sigma: float = 1.0
    chunk_size: int = 8192
    families: tuple = (
        "trig",
        "pos_plus",
        "pos_plusplus",
        "anghyb-shared",
        "anghyb-independent",
        "gausshyb",
    )

    def __post_init__(self) -> None:
        if len(self.r_values) == 0 or len(self.families) == 0:
            raise ValueError("verification grid is empty")
        if any(r <= 0 for r in self.r_values):
            raise ValueError("all radii must be > 0")
        if self.theta_count < 2:
            raise ValueError(f"theta_count must be >= 2, got {self.theta_count}")
        if self.d < 2:
            raise ValueError(f"d must be >= 2 to realize an angle, got {self.d}")
        if self.trials < 2:
            raise ValueError(f"trials must be >= 2, got {self.trials}")
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be >= 1")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        known = {"trig", "pos_plus", "pos_plusplus", "anghyb-shared", "anghyb-independent", "gausshyb"}
        unknown = set(self.families) - known
        if unknown:
            raise ValueError(f"unknown families in config: {sorted(unknown)}")


def _mse_verify_cell(cfg: MseVerifyConfig, fam: str, ri: int, ti: int, thetas) -> MseVerifyRecord:
    from .closed_form import (
        mse_angular_hybrid,
        mse_gaussian_hybrid_same_length,
        mse_pos_plus,
        mse_pos_plusplus,
        mse_trig,
    )

    theta = float(thetas[ti])
    r = float(cfg.r_values[ri])
    x, y = _pair_at(theta, r, cfg.d)
    cell_seed = derive_seed(cfg.seed, f"verify-{fam}-{ri}-{ti}")
    spec_seed = derive_seed(cell_seed, "spec")
    mc_seed = derive_seed(cell_seed, "mc")
    if fam in ("trig", "pos_plus", "pos_plusplus"):
        spec = BaseEstimatorSpec(fam, cfg.m, spec_seed)
        cf = {"trig": mse_trig, "pos_plus": mse_pos_plus, "pos_plusplus": mse_pos_plusplus}[fam](
            x, y, cfg.m
        )
    elif fam.startswith("anghyb"):
        sharing = fam.split("-", 1)[1]
        spec = make_angular_hybrid(cfg.m, cfg.n, sharing, spec_seed)
        cf = mse_angular_hybrid(x, y, cfg.m, cfg.n, sharing)
    else:
        spec = make_gaussian_hybrid(cfg.m, cfg.n, cfg.sigma, r, "shared", spec_seed)
        cf = mse_gaussian_hybrid_same_length(theta, r, cfg.sigma, cfg.m, cfg.n)
    result = empirical_mse(x, y, spec, cfg.trials, mc_seed, cfg.chunk_size)
    cf = float(cf)
    ratio = result.mse / cf if cf > 0.0 else float("nan")
    return MseVerifyRecord(
        estimator_id=fam,
        theta=theta,
        r=r,
        m=cfg.m,
        n=cfg.n,
        trials=cfg.trials,
        empirical_mse=result.mse,
        closedform_mse=cf,
        ratio=ratio,
    )


def mse_verify(cfg: MseVerifyConfig) -> list[MseVerifyRecord]:
    """Compare Monte Carlo MSEs to the closed forms over a (family, r, theta) grid."""
    thetas = np.linspace(0.0, np.pi, cfg.theta_count)
    cells = [
        (fam, ri, ti)
        for fam in cfg.families
        for ri in range(len(cfg.r_values))
        for ti in range(cfg.theta_count)
    ]
    return ordered_map(lambda c: _mse_verify_cell(cfg, c[0], c[1], c[2], thetas), cells)


# ---------------------------------------------------------------------------
# cluster benchmark


# Default synthetic-data regime for cluster_benchmark; see ClusterBenchConfig.
_BENCH_NORM_CONTROL = 3.5
_BENCH_S_TARGET = 0.05


@dataclass(frozen=True)
class ClusterBenchConfig:
    """Settings for the clustered-data MSE benchmark.

    One dataset and one cluster model per run; ``reps`` independent feature
    redraws per feature budget; the exact kernel and all estimates are
    evaluated on a seeded subsample of ``eval_count`` queries x ``eval_count``
    keys.

    When no explicit ``dataset`` is given, the default synthetic regime uses
    point norm 3.5 and sign-matched target 0.05: long enough inputs that the
    two-sided positive baseline pays its full exponential variance penalty,
    and a low enough irreducible mass that the clustered estimator's
    advantage survives its own feature-draw spread.
    """

    seed: Seed
    rf_counts: tuple = (50, 100, 200)
    reps: int = 20
    eval_count: int = 256
    dataset_id: str = "synthetic-2x2"
    coeff: str = "zero_one"
    a_real_only: bool = True
    big: float = 1e3
    small: float = 1e-3
    dataset: SyntheticClusterConfig | None = None

    def __post_init__(self) -> None:
        if len(self.rf_counts) == 0:
            raise ValueError("rf_counts is empty")
        if any(m < 1 for m in self.rf_counts):
            raise ValueError("rf_counts entries must be >= 1")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.eval_count < 1:
            raise ValueError(f"eval_count must be >= 1, got {self.eval_count}")
        if self.coeff not in ("zero_one",):
            raise ValueError(f"unsupported coefficient scheme {self.coeff!r}")


def _subsample(gen: np.random.Generator, n: int, count: int) -> np.ndarray:
    if count >= n:
        return np.arange(n)
    return np.sort(gen.choice(n, size=count, replace=False))


def _regular_mse(q, k, family: str, m: int, rep_seed: Seed, sm_mat: np.ndarray) -> float:
    ens = sample_ensemble(q.shape[1], m, "iid", derive_seed(rep_seed, f"regular-{family}"))
    feat = {"trig": trig_features, "pospp": pos_plusplus_features}[family]
    est = feat(q, ens) @ feat(k, ens).T
    return pairwise_mean((est - sm_mat) ** 2)


def _clustered_mse(
    q,
    k,
    model: ClusterModel,
    m: int,
    rep_seed: Seed,
    sm_mat: np.ndarray,
    a_real_only: bool,
    big: float,
    small: float,
) -> float:
    labels_q = np.asarray(model.assign(q, "query"))
    labels_k = np.asarray(model.assign(k, "key"))
    est = np.zeros((q.shape[0], k.shape[0]))
    for i in range(model.n_q):
        rows = np.where(labels_q == i)[0]
        if rows.size == 0:
            continue
        for j in range(model.n_k):
            cols = np.where(labels_k == j)[0]
            if cols.size == 0:
                continue
            ci = model.query.centers[i]
            cj = model.key.centers[j]
            a = (
                build_A_real(ci, cj, big=big)
                if a_real_only
                else build_A_complex(ci, cj, big=big, small=small)
            )
            ens = sample_ensemble(q.shape[1], m, "iid", derive_seed(rep_seed, f"base-{i}-{j}"))
            fq = cexp_features(q[rows], a, "query", ens)
            fk = cexp_features(k[cols], a, "key", ens)
            est[np.ix_(rows, cols)] = np.real(fq @ fk.T)
    return pairwise_mean((est - sm_mat) ** 2)


def cluster_benchmark(cfg: ClusterBenchConfig) -> list[ClusterBenchRecord]:
    """Benchmark clustered vs. regular estimators on synthetic clustered data.

    The dataset is generated once and clustered once (k = 2 per side); each
    repetition redraws every feature ensemble from a derived seed.  Per
    feature budget, reports mean/min/max MSE across repetitions for the
    regular trigonometric and two-sided positive estimators and for the
    indicator-gated clustered estimator (one complex-exponential base per
    cluster pair).
    """
    ds_cfg = cfg.dataset or SyntheticClusterConfig(
        seed=derive_seed(cfg.seed, "dataset"),
        norm_control=_BENCH_NORM_CONTROL,
        s_target=_BENCH_S_TARGET,
    )
    data = generate_synthetic_clusters(ds_cfg)
    model = ClusterModel(
        query=kmeans(data.queries, 2, derive_seed(cfg.seed, "kmeans-query")),
        key=kmeans(data.keys, 2, derive_seed(cfg.seed, "kmeans-key")),
    )
    gen = generator(derive_seed(cfg.seed, "eval"))
    q = data.queries[_subsample(gen, data.queries.shape[0], cfg.eval_count)]
    k = data.keys[_subsample(gen, data.keys.shape[0], cfg.eval_count)]
    sm_mat = np.exp(q @ k.T)

    jobs = [(rf, est_id) for rf in cfg.rf_counts for est_id in ("trig", "pospp", "clustered")]

    def run(job):
        rf, est_id = job
        mses = []
        for t in range(cfg.reps):
            rep_seed = derive_seed(cfg.seed, f"rep-{t:04d}")
            if est_id == "clustered":
                mses.append(
                    _clustered_mse(
                        q, k, model, rf, rep_seed, sm_mat, cfg.a_real_only, cfg.big, cfg.small
                    )
                )
            else:
                mses.append(_regular_mse(q, k, est_id, rf, rep_seed, sm_mat))
        return ClusterBenchRecord(
            dataset_id=cfg.dataset_id,
            rf_count=rf,
            estimator_id=f"{est_id}-m{rf}",
            mean_mse=pairwise_mean(mses),
            min_mse=float(np.min(mses)),
            max_mse=float(np.max(mses)),
        )

    return ordered_map(run, jobs)


# ---------------------------------------------------------------------------
# softmax distributions and their metrics


def approx_softmax_distribution(query: np.ndarray, keys: np.ndarray, spec) -> np.ndarray:
    """Normalized estimated attention weights of one query over a set of keys.

    ``spec`` is a base spec, a hybrid spec, or the string ``"exact"``.
    Individual entries may legitimately come out negative; a non-positive
    normalizer makes the distribution meaningless and raises
    DegenerateDistributionError with diagnostics attached.
    """
    query = np.asarray(query, dtype=np.float64)
    keys = np.asarray(keys, dtype=np.float64)
    if query.ndim != 1 or keys.ndim != 2 or keys.shape[1] != query.shape[0]:
        raise ValueError("query must be (d,) and keys (N, d)")
    if isinstance(spec, str):
        if spec != "exact":
            raise ValueError(f"unknown estimator {spec!r}; expected 'exact' or a spec")
        raw = np.exp(keys @ query)
    elif isinstance(spec, HybridSpec):
        fq = hybrid_features(query, "query", spec)
        fk = hybrid_features(keys, "key", spec)
        raw = np.real(fk @ fq)
    else:
        fq = base_features(query, "query", spec)
        fk = base_features(keys, "key", spec)
        raw = np.real(fk @ fq)
    total = pairwise_sum(raw)
    if total <= 0.0:
        raise DegenerateDistributionError(
            f"estimated attention weights sum to {total!r}; cannot normalize",
            raw_sum=total,
            negative_count=int(np.sum(raw < 0.0)),
        )
    return raw / total


def negative_mass_fraction(p: np.ndarray) -> float:
    """Fraction of total absolute mass carried by negative entries."""
    p = np.asarray(p, dtype=np.float64)
    denom = float(np.sum(np.abs(p)))
    if denom == 0.0:
        return 0.0
    return float(np.sum(np.abs(p[p < 0.0])) / denom)


def _check_dist_pair(p, q, support=None):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 1 or p.shape != q.shape or p.size == 0:
        raise ValueError("p and q must be non-empty 1-D arrays of equal length")
    if support is not None:
        support = np.asarray(support, dtype=np.float64)
        if support.shape != p.shape:
            raise ValueError("support must match the distributions' length")
        if np.any(np.diff(support) < 0):
            raise ValueError("support must be non-decreasing")
    return p, q, support


def wasserstein1(p, q, support) -> float:
    """First Wasserstein distance of two distributions on a common 1-D support.

    Integral of |CDF_p - CDF_q| against the support spacing; e.g. p = (.5, .5)
    vs q = (0, 1) on support (0, 1) gives 0.5.
    """
    p, q, support = _check_dist_pair(p, q, support)
    cdf_gap = np.abs(np.cumsum(p - q))[:-1]
    return float(np.sum(cdf_gap * np.diff(support)))


def ks_distance(p, q) -> float:
    """Kolmogorov-Smirnov distance: max absolute CDF gap."""
    p, q, _ = _check_dist_pair(p, q)
    return float(np.max(np.abs(np.cumsum(p - q))))


# ---------------------------------------------------------------------------
# export and parallel mapping


def render_records(records: Sequence, fmt: str, record_cls=None) -> str:
    """Render records as CSV (fixed header, shortest-roundtrip floats) or JSON text.

    Field order comes from the record dataclass; pass ``record_cls`` to render
    a well-formed empty table when there are no records.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    if record_cls is None:
        if not records:
            raise ValueError("cannot infer the schema of zero records; pass record_cls")
        record_cls = type(records[0])
    if fmt == "json":
        return json.dumps([asdict(r) for r in records], indent=2) + "\n"
    names = [f.name for f in fields(record_cls)]
    lines = [",".join(names)]
    for r in records:
        row = asdict(r)
        lines.append(",".join(_csv_cell(row[name]) for name in names))
    return "\n".join(lines) + "\n"


def export(records: Sequence, path: str, fmt: str, record_cls=None) -> None:
    """Write :func:`render_records` output to a file."""
    text = render_records(records, fmt, record_cls)
    with open(path, "w") as fh:
        fh.write(text)


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    if any(ch in text for ch in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def workers_from_env() -> int:
    """Worker count from HYBRIDRF_WORKERS (default 1)."""
    raw = os.environ.get("HYBRIDRF_WORKERS", "1")
    try:
        workers = int(raw)
    except ValueError as exc:
        raise ValueError(f"HYBRIDRF_WORKERS must be an integer, got {raw!r}") from exc
    if workers < 1:
        raise ValueError(f"HYBRIDRF_WORKERS must be >= 1, got {workers}")
    return workers


def ordered_map(fn: Callable, items: Sequence) -> list:
    """Map preserving input order, threading only when HYBRIDRF_WORKERS > 1.

    Every item carries its own derived seeds, so the result — and any file
    exported from it — is identical whatever the worker count.
    """
    workers = workers_from_env()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
