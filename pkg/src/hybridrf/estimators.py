"""Softmax-kernel estimators: bases, mixing coefficients, hybrids, Monte Carlo.

A :class:`BaseEstimatorSpec` names one random-feature softmax estimator; a
:class:`HybridSpec` combines p+1 of them, the last acting as the residual
that absorbs whatever coefficient mass 1 - sum(lambda_k) is left.  Every
estimate is a plain (non-conjugated) dot product of query-side and key-side
feature vectors; complex intermediates are legitimate and only the real part
is the estimate, with the imaginary magnitude reported as a diagnostic.

``hybrid_features`` linearizes a hybrid into a single feature map whose dot
product reproduces the mixture estimate exactly, including an imaginary
channel when the fixed coefficient offsets exceed one.  ``sample_estimates``
is the vectorized Monte Carlo driver used by the verification suite: trials
are processed in seeded chunks with a documented draw order so results are
reproducible and independent of any outer parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .closed_form import gaussian_rho  # noqa: F401  (re-exported convenience)
from .features import (
    DiagMatrix,
    GaussianLambdaParams,
    cexp_features,
    cluster_lambda_features,
    gaussian_lambda_features,
    pos_plus_features,
    pos_plusplus_features,
    sign_features,
    trig_features,
)
from .rng import (
    SCHEMES,
    ProjectionEnsemble,
    Seed,
    derive_seed,
    generator,
    orthonormalize_blocks,
    sample_ensemble,
)

__all__ = [
    "BASE_FAMILIES",
    "LAMBDA_KINDS",
    "BaseEstimatorSpec",
    "LambdaSpec",
    "HybridSpec",
    "EstimateRecord",
    "FlopsCounter",
    "realize_ensemble",
    "base_features",
    "lambda_features",
    "lambda_hat",
    "sm_hat_base",
    "sm_hat_hybrid",
    "hybrid_features",
    "hybrid_feature_dim",
    "make_angular_hybrid",
    "make_gaussian_hybrid",
    "make_clustered_hybrid",
    "sample_estimates",
    "sample_lambdas",
]

BASE_FAMILIES = ("trig", "pos_plus", "pos_plusplus", "cexp")
LAMBDA_KINDS = ("angular", "gaussian", "zero_one", "constant", "cluster_gaussian")


# ---------------------------------------------------------------------------
# specs


@dataclass(frozen=True)
class BaseEstimatorSpec:
    """One random-feature softmax estimator: family, feature count, draws."""

    family: str
    m: int
    seed: Seed
    scheme: str = "iid"
    diag: DiagMatrix | None = None

    def __post_init__(self) -> None:
        if self.family not in BASE_FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {BASE_FAMILIES}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.family == "cexp" and self.diag is None:
            raise ValueError("cexp requires a DiagMatrix")
        if self.family != "cexp" and self.diag is not None:
            raise ValueError(f"family {self.family!r} takes no DiagMatrix")

    @property
    def t(self) -> int:
        """Number of m-sized sub-blocks in the feature vector (its length is t*m)."""
        return 2 if self.family in ("trig", "pos_plusplus") else 1


@dataclass(frozen=True)
class LambdaSpec:
    """One mixing-coefficient estimator lam_hat = a + gamma(x)·mu(y)."""

    kind: str
    n: int = 1
    seed: Seed | None = None
    params: GaussianLambdaParams | None = None
    model: object | None = None
    pair: tuple[int, int] | None = None
    diag: DiagMatrix | None = None
    tau: float = 1.0
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in LAMBDA_KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}; expected one of {LAMBDA_KINDS}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        needs_seed = self.kind in ("angular", "gaussian", "cluster_gaussian")
        if needs_seed and self.seed is None:
            raise ValueError(f"coefficient kind {self.kind!r} requires a seed")
        if self.kind == "gaussian" and self.params is None:
            raise ValueError("gaussian coefficient requires GaussianLambdaParams")
        if self.kind == "zero_one" and (self.model is None or self.pair is None):
            raise ValueError("zero_one coefficient requires a cluster model and a (query, key) pair")
        if self.kind == "cluster_gaussian":
            if self.diag is None:
                raise ValueError("cluster_gaussian coefficient requires a DiagMatrix")
            if not self.tau > 0:
                raise ValueError(f"tau must be > 0, got {self.tau}")

    @property
    def a(self) -> float:
        """Fixed offset of the coefficient estimator."""
        if self.kind == "angular":
            return 0.5
        if self.kind == "gaussian":
            assert self.params is not None
            return 0.0 if self.params.is_general else 1.0 / self.params.rho
        if self.kind == "constant":
            return self.value
        return 0.0

    @property
    def l(self) -> int:
        """Number of n-sized sub-blocks in the coefficient feature vector."""
        if self.kind == "gaussian":
            return 2
        return 1

    @property
    def feature_len(self) -> int:
        if self.kind in ("zero_one", "constant"):
            return 1
        return self.l * self.n


@dataclass(frozen=True)
class HybridSpec:
    """p weighted bases plus one residual base, mixed by p coefficient estimators.

    ``bases[:-1]`` are weighted by their coefficients; ``bases[-1]`` receives
    the leftover weight 1 - sum(lam_hat).  ``sharing='shared'`` reuses one
    projection ensemble for both bases of a two-base hybrid (they must agree
    on m, scheme and seed); coefficient ensembles are always independent of
    base ensembles, which the seed-disjointness check enforces.
    """

    bases: tuple[BaseEstimatorSpec, ...]
    lambdas: tuple[LambdaSpec, ...]
    sharing: str = "independent"

    def __post_init__(self) -> None:
        if len(self.bases) < 2:
            raise ValueError("a hybrid needs at least two bases (one weighted + residual)")
        if len(self.lambdas) != len(self.bases) - 1:
            raise ValueError(
                f"expected {len(self.bases) - 1} coefficients for {len(self.bases)} bases, "
                f"got {len(self.lambdas)}"
            )
        if self.sharing not in ("independent", "shared"):
            raise ValueError(f"sharing must be 'independent' or 'shared', got {self.sharing!r}")
        if self.sharing == "shared":
            if len(self.bases) != 2:
                raise ValueError("shared mode is defined for exactly two bases")
            b0, b1 = self.bases
            if b0.m != b1.m or b0.scheme != b1.scheme or b0.seed != b1.seed:
                raise ValueError("shared bases must agree on m, scheme and seed")
        base_seeds = {b.seed.value for b in self.bases}
        lam_seeds = {ls.seed.value for ls in self.lambdas if ls.seed is not None}
        if base_seeds & lam_seeds:
            raise ValueError("coefficient seeds must be disjoint from base seeds")

    @property
    def p(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class EstimateRecord:
    """One kernel estimate: its real value, leftover imaginary magnitude, and width."""

    value: float
    imag_residual: float
    feature_dim: int


@dataclass
class FlopsCounter:
    """Tally of projection fused multiply-adds and elementwise ops actually executed."""

    fma: int = 0
    elementwise: int = 0


# ---------------------------------------------------------------------------
# realized ensembles and single-pair evaluation


@lru_cache(maxsize=512)
def _realize(d: int, m: int, scheme: str, seed: Seed) -> ProjectionEnsemble:
    return sample_ensemble(d, m, scheme, seed)


def realize_ensemble(d: int, m: int, scheme: str, seed: Seed) -> ProjectionEnsemble:
    """Materialize (and memoize) the projection ensemble a spec refers to."""
    return _realize(d, m, scheme, seed)


def base_features(u: np.ndarray, side: str, spec: BaseEstimatorSpec) -> np.ndarray:
    """Feature vector of one base estimator for input u on the given side."""
    u = np.asarray(u)
    ens = realize_ensemble(u.shape[-1], spec.m, spec.scheme, spec.seed)
    if spec.family == "trig":
        return trig_features(u, ens)
    if spec.family == "pos_plus":
        return pos_plus_features(u, ens)
    if spec.family == "pos_plusplus":
        return pos_plusplus_features(u, ens)
    assert spec.diag is not None
    return cexp_features(u, spec.diag, side, ens)


def lambda_features(u: np.ndarray, side: str, spec: LambdaSpec) -> np.ndarray:
    """Feature vector of one coefficient estimator (imaginary prefactors included)."""
    u = np.asarray(u)
    if spec.kind == "angular":
        ens = realize_ensemble(u.shape[-1], spec.n, "iid", spec.seed)
        return 1j * sign_features(u, ens)
    if spec.kind == "gaussian":
        ens = realize_ensemble(u.shape[-1], spec.n, "iid", spec.seed)
        return gaussian_lambda_features(u, spec.params, side, ens)
    if spec.kind == "cluster_gaussian":
        ens = realize_ensemble(u.shape[-1], spec.n, "iid", spec.seed)
        return cluster_lambda_features(u, spec.diag, spec.tau, side, ens)
    if spec.kind == "zero_one":
        i, j = spec.pair
        target = i if side == "query" else j
        assigned = spec.model.assign(u, side)
        return np.where(np.asarray(assigned) == target, 1.0, 0.0)[..., np.newaxis]
    if spec.kind == "constant":
        return np.zeros(u.shape[:-1] + (1,))
    raise AssertionError(spec.kind)


def _plain_dot(q: np.ndarray, k: np.ndarray) -> np.ndarray:
    # non-conjugated even for complex features: the estimators are built on
    # transposes, not Hermitian inner products
    return np.sum(q * k, axis=-1)


def lambda_hat(x: np.ndarray, y: np.ndarray, spec: LambdaSpec) -> float:
    """Coefficient estimate a + gamma(x)·mu(y) (real part)."""
    return float(np.real(_lambda_hat_complex(x, y, spec)))


def _lambda_hat_complex(x: np.ndarray, y: np.ndarray, spec: LambdaSpec) -> complex:
    val = _plain_dot(lambda_features(x, "query", spec), lambda_features(y, "key", spec))
    return complex(spec.a + val)


def sm_hat_base(x: np.ndarray, y: np.ndarray, spec: BaseEstimatorSpec) -> EstimateRecord:
    """Softmax-kernel estimate of one base estimator at a single pair."""
    val = complex(_plain_dot(base_features(x, "query", spec), base_features(y, "key", spec)))
    return EstimateRecord(value=val.real, imag_residual=abs(val.imag), feature_dim=spec.t * spec.m)


def sm_hat_hybrid(
    x: np.ndarray,
    y: np.ndarray,
    spec: HybridSpec,
    diagnostics: dict | None = None,
) -> EstimateRecord:
    """Softmax-kernel estimate of a hybrid at a single pair.

    Accumulates sum_k lam_hat_k * SM_hat_k + (1 - sum_k lam_hat_k) * SM_hat_res
    in complex arithmetic; the returned value is the real part.  When a
    ``diagnostics`` dict is supplied it receives the coefficient estimates and
    how many fell outside [0, 1] (legal, but worth watching).
    """
    lam = np.array([_lambda_hat_complex(x, y, ls) for ls in spec.lambdas])
    base_vals = np.array(
        [
            complex(_plain_dot(base_features(x, "query", b), base_features(y, "key", b)))
            for b in spec.bases
        ]
    )
    residual_weight = 1.0 - np.sum(lam)
    total = np.sum(lam * base_vals[:-1]) + residual_weight * base_vals[-1]
    if diagnostics is not None:
        lam_real = np.real(lam)
        diagnostics["lambda_values"] = tuple(float(v) for v in lam_real)
        diagnostics["lambda_out_of_range"] = int(np.sum((lam_real < 0.0) | (lam_real > 1.0)))
        diagnostics["residual_weight"] = float(np.real(residual_weight))
    return EstimateRecord(
        value=float(np.real(total)),
        imag_residual=float(abs(np.imag(total))),
        feature_dim=hybrid_feature_dim(spec),
    )


# ---------------------------------------------------------------------------
# linearized composite features


def hybrid_feature_dim(spec: HybridSpec) -> int:
    """Length of the linearized feature vector of a hybrid."""
    res = spec.bases[-1]
    dim = sum(b.t * b.m for b in spec.bases[:-1]) + res.t * res.m
    for k, ls in enumerate(spec.lambdas):
        dim += ls.feature_len * spec.bases[k].t * spec.bases[k].m
        dim += ls.feature_len * res.t * res.m
    return dim


def _outer_flat(lam: np.ndarray, phi: np.ndarray) -> np.ndarray:
    out = np.einsum("...i,...j->...ij", lam, phi)
    return out.reshape(out.shape[:-2] + (out.shape[-2] * out.shape[-1],))


def hybrid_features(
    u: np.ndarray, side: str, spec: HybridSpec, counter: FlopsCounter | None = None
) -> np.ndarray:
    """Single feature map whose plain dot product equals the hybrid estimate.

    Four blocks, concatenated in this order:

    1. per weighted base k: sqrt(a_k) * phi_k(u)
    2. per weighted base k: gamma_k(u) (x) phi_k(u), outer product flattened
       coefficient-major
    3. sqrt(1 - sum_k a_k) * phi_res(u) — the square root goes imaginary when
       the offsets exceed one, which is expected and handled, never an error
    4. per coefficient k: i * gamma_k(u) (x) phi_res(u)

    Dotting query side with key side reproduces
    sum_k lam_hat_k SM_hat_k + (1 - sum_k lam_hat_k) SM_hat_res exactly: block
    2 supplies the data-dependent part of each lam_hat_k, and block 4's
    imaginary prefactor turns into the subtraction of that same part from the
    residual weight.
    """
    u = np.asarray(u)
    d = u.shape[-1]
    phi = [base_features(u, side, b) for b in spec.bases]
    lam_feats = [lambda_features(u, side, ls) for ls in spec.lambdas]
    offsets = np.array([ls.a for ls in spec.lambdas], dtype=np.float64)

    blocks: list[np.ndarray] = []
    for k in range(spec.p):
        blocks.append(np.emath.sqrt(offsets[k]) * phi[k])
    for k in range(spec.p):
        blocks.append(_outer_flat(lam_feats[k], phi[k]))
    blocks.append(np.emath.sqrt(1.0 - float(np.sum(offsets))) * phi[-1])
    for k in range(spec.p):
        blocks.append(1j * _outer_flat(lam_feats[k], phi[-1]))
    out = np.concatenate([np.asarray(b, dtype=np.complex128) for b in blocks], axis=-1)

    if counter is not None:
        distinct = {(b.m, b.scheme, b.seed.value) for b in spec.bases}
        counter.fma += sum(m * d for (m, _, _) in distinct)
        counter.fma += sum(ls.n * d for ls in spec.lambdas if ls.seed is not None)
        counter.elementwise += out.shape[-1]
    return out


# ---------------------------------------------------------------------------
# canonical constructions


def make_angular_hybrid(
    m: int, n: int, sharing: str, seed: Seed, scheme: str = "iid"
) -> HybridSpec:
    """Two-sided positive base weighted by the angular coefficient, trig residual."""
    if sharing == "shared":
        s = derive_seed(seed, "base-shared")
        seeds = (s, s)
    else:
        seeds = (derive_seed(seed, "base-0"), derive_seed(seed, "base-1"))
    bases = (
        BaseEstimatorSpec("pos_plusplus", m, seeds[0], scheme),
        BaseEstimatorSpec("trig", m, seeds[1], scheme),
    )
    lam = LambdaSpec(kind="angular", n=n, seed=derive_seed(seed, "lambda-0"))
    return HybridSpec(bases=bases, lambdas=(lam,), sharing=sharing)


def make_gaussian_hybrid(
    m: int, n: int, sigma: float, r: float, sharing: str, seed: Seed, scheme: str = "iid"
) -> HybridSpec:
    """Two-sided positive base weighted by the Gaussian coefficient, trig residual."""
    if sharing == "shared":
        s = derive_seed(seed, "base-shared")
        seeds = (s, s)
    else:
        seeds = (derive_seed(seed, "base-0"), derive_seed(seed, "base-1"))
    bases = (
        BaseEstimatorSpec("pos_plusplus", m, seeds[0], scheme),
        BaseEstimatorSpec("trig", m, seeds[1], scheme),
    )
    params = GaussianLambdaParams.from_sigma_r(sigma, r, n)
    lam = LambdaSpec(kind="gaussian", n=n, seed=derive_seed(seed, "lambda-0"), params=params)
    return HybridSpec(bases=bases, lambdas=(lam,), sharing=sharing)


def make_clustered_hybrid(
    model,
    m: int,
    seed: Seed,
    coeff: str = "zero_one",
    n: int = 8,
    a_real_only: bool = True,
    big: float = 1e3,
    small: float = 1e-3,
    tau: float = 1.0,
) -> HybridSpec:
    """Hybrid adapted to clustered queries/keys via per-cluster-pair diagonals.

    One complex-exponential base per (query cluster i, key cluster j) pair, in
    row-major pair order.  ``coeff='zero_one'`` gates the pairs with indicator
    coefficients (the last pair base serves as the residual, which the
    indicators' unit sum makes exact); ``coeff='gaussian'`` weights every pair
    with a positive-exponential bump of width tau and routes leftover mass to
    a two-sided positive residual base.
    """
    from .clustering import build_A_complex, build_A_real

    if coeff not in ("zero_one", "gaussian"):
        raise ValueError(f"coeff must be 'zero_one' or 'gaussian', got {coeff!r}")
    counts_q = np.bincount(model.query.assignments, minlength=model.n_q)
    counts_k = np.bincount(model.key.assignments, minlength=model.n_k)
    if np.any(counts_q == 0) or np.any(counts_k == 0):
        raise ValueError("cluster model has an empty cluster")

    pairs = [(i, j) for i in range(model.n_q) for j in range(model.n_k)]
    diags = {}
    for i, j in pairs:
        ci = model.query.centers[i]
        cj = model.key.centers[j]
        diags[i, j] = (
            build_A_real(ci, cj, big=big)
            if a_real_only
            else build_A_complex(ci, cj, big=big, small=small)
        )
    pair_bases = tuple(
        BaseEstimatorSpec("cexp", m, derive_seed(seed, f"base-{i}-{j}"), diag=diags[i, j])
        for i, j in pairs
    )
    if coeff == "zero_one":
        lambdas = tuple(
            LambdaSpec(kind="zero_one", model=model, pair=pair) for pair in pairs[:-1]
        )
        return HybridSpec(bases=pair_bases, lambdas=lambdas, sharing="independent")
    residual = BaseEstimatorSpec("pos_plusplus", m, derive_seed(seed, "base-residual"))
    lambdas = tuple(
        LambdaSpec(
            kind="cluster_gaussian",
            n=n,
            seed=derive_seed(seed, f"lambda-{i}-{j}"),
            diag=diags[i, j],
            tau=tau,
        )
        for i, j in pairs
    )
    return HybridSpec(bases=pair_bases + (residual,), lambdas=lambdas, sharing="independent")


# ---------------------------------------------------------------------------
# Monte Carlo driver


@dataclass
class _Component:
    """One ensemble drawn per chunk: its draws and the vectors it projects."""

    m: int
    scheme: str
    seed_value: int
    targets_real: list = field(default_factory=list)
    targets_cplx: list = field(default_factory=list)

    def column(self, vec: np.ndarray) -> tuple[str, int]:
        if np.iscomplexobj(vec):
            group, pool = "cplx", self.targets_cplx
        else:
            group, pool = "real", self.targets_real
        for idx, existing in enumerate(pool):
            if existing.shape == vec.shape and np.array_equal(existing, vec):
                return group, idx
        pool.append(np.asarray(vec))
        return group, len(pool) - 1


def _component_for(components: list[_Component], m: int, scheme: str, seed: Seed) -> _Component:
    for comp in components:
        if comp.m == m and comp.scheme == scheme and comp.seed_value == seed.value:
            return comp
    comp = _Component(m=m, scheme=scheme, seed_value=seed.value)
    components.append(comp)
    return comp


def _base_evaluator(
    x: np.ndarray, y: np.ndarray, spec: BaseEstimatorSpec, comp: _Component
) -> Callable:
    """Closure turning a chunk's projections for ``comp`` into per-trial estimates."""
    s_bar = 0.5 * (float(np.dot(x, x)) + float(np.dot(y, y)))
    if spec.family == "trig":
        group, col = comp.column(x - y)
        pref = np.exp(s_bar)
        return lambda proj: pref * np.mean(np.cos(proj[group][..., col]), axis=-1)
    if spec.family == "pos_plus":
        group, col = comp.column(x + y)
        return lambda proj: np.mean(np.exp(proj[group][..., col] - s_bar), axis=-1)
    if spec.family == "pos_plusplus":
        group, col = comp.column(x + y)
        return lambda proj: np.exp(-s_bar) * np.mean(np.cosh(proj[group][..., col]), axis=-1)
    assert spec.diag is not None
    vq = x * spec.diag.entries
    vk = y * spec.diag.inverse_entries
    sq = 0.5 * (np.sum(vq * vq) + np.sum(vk * vk))
    group, col = comp.column(vq + vk)
    return lambda proj: np.mean(np.exp(proj[group][..., col] - sq), axis=-1)


def _lambda_evaluator(
    x: np.ndarray, y: np.ndarray, spec: LambdaSpec, comp: _Component | None
) -> Callable:
    if spec.kind == "angular":
        gq, cq = comp.column(x)
        gk, ck = comp.column(y)

        def ev(proj):
            sx = np.where(proj[gq][..., cq] >= 0.0, 1.0, -1.0)
            sy = np.where(proj[gk][..., ck] >= 0.0, 1.0, -1.0)
            return 0.5 - 0.5 * np.mean(sx * sy, axis=-1)

        return ev
    if spec.kind == "gaussian":
        params = spec.params
        if params.is_general:
            target = (x + np.asarray(params.m_matrix) @ y) / params.c_scale
            group, col = comp.column(target)
            return lambda proj: np.mean(np.cos(proj[group][..., col]), axis=-1)
        group, col = comp.column(params.sigma * (x - y))
        rho = params.rho
        return lambda proj: 1.0 / rho - np.mean(np.cos(proj[group][..., col]), axis=-1) / rho
    if spec.kind == "cluster_gaussian":
        vq = x * spec.diag.entries
        vk = y * spec.diag.inverse_entries
        sq = (np.sum(vq * vq) + np.sum(vk * vk)) / (spec.tau * spec.tau)
        group, col = comp.column(vq - vk)
        tau = spec.tau
        return lambda proj: np.mean(np.exp(proj[group][..., col] / tau - sq), axis=-1)
    if spec.kind == "zero_one":
        i, j = spec.pair
        hit = float(spec.model.assign(x, "query") == i and spec.model.assign(y, "key") == j)
        return lambda proj: hit
    if spec.kind == "constant":
        val = spec.value
        return lambda proj: val
    raise AssertionError(spec.kind)


def _orthonormal_rows_batch(normals: np.ndarray, d: int) -> np.ndarray:
    """Blockwise orthonormalization of a (trials, m, d) slab of Gaussian rows."""
    s, m, _ = normals.shape
    n_full, rem = divmod(m, d)
    parts = []
    if n_full:
        full = normals[:, : n_full * d].reshape(s * n_full, d, d)
        parts.append(orthonormalize_blocks(full).reshape(s, n_full * d, d))
    if rem:
        parts.append(orthonormalize_blocks(normals[:, n_full * d :]))
    return parts[0] if len(parts) == 1 else np.concatenate(parts, axis=1)


_SLAB_VALUES = 2_000_000  # ~16 MB of float64 draws materialized at a time


def _draw_component(
    gen: np.random.Generator,
    comp: _Component,
    c: int,
    d: int,
    capture: list | None,
) -> dict[str, np.ndarray]:
    """Draw one component's chunk of ensembles and project its target vectors.

    Draw order (the reproducibility contract): all c*m*d row normals in
    trial-major order, then — block-orthogonal only — c*m chi-square row
    lengths.  Rows are consumed slab-by-slab so only projections stay
    resident.
    """
    t_real = np.stack(comp.targets_real, axis=-1) if comp.targets_real else None
    t_cplx = np.stack(comp.targets_cplx, axis=-1) if comp.targets_cplx else None
    proj: dict[str, np.ndarray] = {}
    if t_real is not None:
        proj["real"] = np.empty((c, comp.m, t_real.shape[-1]))
    if t_cplx is not None:
        proj["cplx"] = np.empty((c, comp.m, t_cplx.shape[-1]), dtype=np.complex128)
    slab = max(1, _SLAB_VALUES // (comp.m * d))
    rows_kept = [] if capture is not None else None
    for start in range(0, c, slab):
        stop = min(start + slab, c)
        rows = gen.standard_normal((stop - start, comp.m, d))
        if comp.scheme == "block-orthogonal":
            rows = _orthonormal_rows_batch(rows, d)
        if t_real is not None:
            proj["real"][start:stop] = rows @ t_real
        if t_cplx is not None:
            proj["cplx"][start:stop] = rows @ t_cplx
        if rows_kept is not None:
            rows_kept.append(rows)
    if comp.scheme == "block-orthogonal":
        lengths = np.sqrt(gen.chisquare(d, size=(c, comp.m)))
        for arr in proj.values():
            arr *= lengths[..., np.newaxis]
    if rows_kept is not None:
        rows = np.concatenate(rows_kept, axis=0)
        if comp.scheme == "block-orthogonal":
            rows = rows * lengths[..., np.newaxis]
        capture.append(rows)
    return proj


def _mc_components(
    x: np.ndarray, y: np.ndarray, spec: BaseEstimatorSpec | HybridSpec
) -> tuple[list[_Component], Callable]:
    """Build the chunk draw plan and the per-chunk evaluator for a spec."""
    components: list[_Component] = []
    if isinstance(spec, BaseEstimatorSpec):
        comp = _component_for(components, spec.m, spec.scheme, spec.seed)
        ev = _base_evaluator(x, y, spec, comp)
        return components, lambda projs: np.real(ev(projs[id(comp)]))

    base_evs = []
    for b in spec.bases:
        comp = _component_for(components, b.m, b.scheme, b.seed)
        base_evs.append((id(comp), _base_evaluator(x, y, b, comp)))
    lam_evs = []
    for ls in spec.lambdas:
        if ls.kind in ("zero_one", "constant"):
            lam_evs.append((None, _lambda_evaluator(x, y, ls, None)))
        else:
            comp = _component_for(components, ls.n, "iid", ls.seed)
            lam_evs.append((id(comp), _lambda_evaluator(x, y, ls, comp)))

    def evaluate(projs: dict[int, dict[str, np.ndarray]]) -> np.ndarray:
        base_vals = [ev(projs[key]) for key, ev in base_evs]
        lam_total = 0.0
        total = 0.0
        for k, (key, ev) in enumerate(lam_evs):
            # evaluators return the full coefficient estimate, offset included
            lam = ev(projs[key]) if key is not None else ev(None)
            lam_total = lam_total + lam
            total = total + lam * base_vals[k]
        total = total + (1.0 - lam_total) * base_vals[-1]
        return np.real(total)

    return components, evaluate


def _sample_values(
    x: np.ndarray,
    y: np.ndarray,
    components: list[_Component],
    evaluate: Callable,
    trials: int,
    seed: Seed,
    chunk_size: int,
    d: int,
    capture: dict | None,
) -> np.ndarray:
    out = np.empty(trials)
    n_chunks = (trials + chunk_size - 1) // chunk_size
    for j in range(n_chunks):
        start = j * chunk_size
        c = min(chunk_size, trials - start)
        gen = generator(derive_seed(seed, f"chunk-{j:08d}"))
        projs: dict[int, dict[str, np.ndarray]] = {}
        for comp in components:
            rows_sink = None
            if capture is not None and j == 0:
                rows_sink = capture.setdefault("rows", {}).setdefault(
                    (comp.m, comp.scheme, comp.seed_value), []
                )
            projs[id(comp)] = _draw_component(gen, comp, c, d, rows_sink)
        out[start : start + c] = evaluate(projs)
    return out


def sample_estimates(
    x: np.ndarray,
    y: np.ndarray,
    spec: BaseEstimatorSpec | HybridSpec,
    trials: int,
    seed: Seed,
    chunk_size: int = 8192,
    _capture: dict | None = None,
) -> np.ndarray:
    """Draw ``trials`` independent realizations of an estimator at one pair.

    Trials are partitioned into chunks of ``chunk_size``; chunk j uses the
    generator seeded by ``derive_seed(seed, f"chunk-{j:08d}")`` and draws, in
    order: each base ensemble in spec order (a shared or repeated ensemble is
    drawn once, at its first appearance), then each coefficient ensemble in
    spec order.  The result is a (trials,) float64 array of estimates —
    identical bytes for identical (x, y, spec, trials, seed, chunk_size)
    regardless of where or how the caller parallelizes around it.

    ``_capture``: testing hook; receives the raw per-trial projection rows of
    chunk 0 keyed by (m, scheme, seed value) so per-trial estimates can be
    re-derived through the feature maps directly.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-D vectors of equal dimension")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    components, evaluate = _mc_components(x, y, spec)
    values = _sample_values(
        x, y, components, evaluate, trials, seed, chunk_size, x.shape[0], _capture
    )
    if _capture is not None and "rows" in _capture:
        _capture["rows"] = {
            key: np.concatenate(slabs, axis=0) for key, slabs in _capture["rows"].items()
        }
    return values


def sample_lambdas(
    x: np.ndarray,
    y: np.ndarray,
    spec: LambdaSpec,
    trials: int,
    seed: Seed,
    chunk_size: int = 8192,
) -> np.ndarray:
    """Draw ``trials`` independent realizations of a coefficient estimator.

    Same chunking and seeding contract as :func:`sample_estimates`.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-D vectors of equal dimension")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    components: list[_Component] = []
    if spec.kind in ("zero_one", "constant"):
        ev = _lambda_evaluator(x, y, spec, None)
        return np.full(trials, ev(None))
    comp = _component_for(components, spec.n, "iid", spec.seed)
    ev = _lambda_evaluator(x, y, spec, comp)
    return _sample_values(
        x,
        y,
        components,
        lambda projs: np.real(ev(projs[id(comp)])),
        trials,
        seed,
        chunk_size,
        x.shape[0],
        None,
    )
