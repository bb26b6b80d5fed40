"""Acceptance suite: twelve end-to-end checks, one pass/fail line each.

Every stochastic check runs against frozen seeds, so each test is
deterministic; tolerances are stated inline next to each assertion.  Two
statistical-design notes:

* test_c02: at heavy-tailed cells (positive families near theta = 0 with
  r >= 1) the squared error of a single-feature estimate has a relative
  fourth moment so large that a plain million-draw average of it is
  meaningless — its own standard error is orders of magnitude above the 3%
  tolerance.  Those cells therefore estimate the same MSE with importance
  sampling: the estimate depends on the projection only through its component
  along x + y, so that one-dimensional component is drawn from a widened
  Gaussian and reweighted by the exact density ratio, with the realized rows
  still evaluated through the production feature maps.  An exact
  fourth-moment computation routes each cell; the routing is asserted so the
  split itself is frozen.
* Monte Carlo tolerances were sized from the estimators' exact moments so
  that each frozen-seed assertion sits many standard errors inside its bound.
"""

import numpy as np
import pytest

from hybridrf.bench import (
    ClusterBenchConfig,
    cluster_benchmark,
    empirical_mse,
    pairwise_mean,
)
from hybridrf.closed_form import (
    endpoint_limit_scale,
    flops_matched_mn,
    flops_model,
    max_rel_error_bound,
    mse_angular_hybrid,
    mse_angular_hybrid_same_length,
    mse_gaussian_hybrid_same_length,
    mse_pos_plus,
    mse_pos_plusplus,
    mse_trig,
    lambda_moments_gaussian,
    rel_err_angular_hybrid,
    rel_err_same_length,
    sm_exact,
    w_scale,
)
from hybridrf.clustering import build_A_complex, build_A_real, cluster_loss
from hybridrf.estimators import (
    BaseEstimatorSpec,
    FlopsCounter,
    HybridSpec,
    LambdaSpec,
    hybrid_features,
    make_angular_hybrid,
    make_gaussian_hybrid,
    sample_estimates,
    sample_lambdas,
    sm_hat_base,
    sm_hat_hybrid,
)
from hybridrf.features import (
    DiagMatrix,
    GaussianLambdaParams,
    cexp_features,
    pos_plus_features,
    pos_plusplus_features,
)
from hybridrf.rng import ProjectionEnsemble, Seed, derive_seed, generator, sample_ensemble


def pair_at(theta: float, r: float, d: int = 8, ry: float | None = None):
    """Same-plane pair with |x| = r, |y| = ry or r, angle theta; exact at endpoints."""
    x = np.zeros(d)
    x[0] = r
    if ry is None:
        if theta == 0.0:
            return x, x.copy()
        if theta == np.pi:
            return x, -x
    s = r if ry is None else ry
    y = np.zeros(d)
    y[0] = s * np.cos(theta)
    y[1] = s * np.sin(theta)
    return x, y


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# 1. unbiasedness


def test_c01_unbiased_within_four_standard_errors():
    root = Seed(11)
    trials = 1_000_000
    d = 8
    gen = generator(derive_seed(root, "pairs"))
    for i in range(20):
        dx = gen.standard_normal(d)
        dy = gen.standard_normal(d)
        rx, ry = gen.uniform(0.2, 1.2, size=2)
        x = rx * _unit(dx)
        y = ry * _unit(dy)
        diag = DiagMatrix(np.exp(gen.uniform(-0.05, 0.05, size=d)))
        assert max(np.linalg.norm(x), np.linalg.norm(y)) <= 1.5
        sm = float(sm_exact(x, y))
        pair_seed = derive_seed(root, f"pair-{i:02d}")
        specs = {
            "trig": BaseEstimatorSpec("trig", 1, derive_seed(pair_seed, "base")),
            "pos_plus": BaseEstimatorSpec("pos_plus", 1, derive_seed(pair_seed, "base")),
            "pos_plusplus": BaseEstimatorSpec("pos_plusplus", 1, derive_seed(pair_seed, "base")),
            "cexp": BaseEstimatorSpec("cexp", 1, derive_seed(pair_seed, "base"), diag=diag),
            "anghyb": make_angular_hybrid(1, 1, "shared", derive_seed(pair_seed, "hyb")),
            "gausshyb": make_gaussian_hybrid(1, 1, 1.0, 1.0, "shared", derive_seed(pair_seed, "hyb")),
        }
        for family, spec in specs.items():
            values = sample_estimates(x, y, spec, trials, derive_seed(pair_seed, family), 65536)
            se = float(values.std(ddof=1)) / np.sqrt(trials)
            t = abs(float(values.mean()) - sm) / se
            assert t <= 4.0, f"pair {i}, {family}: mean off by {t:.2f} standard errors"


# ---------------------------------------------------------------------------
# 2. closed-form MSE agreement (base families)


def _raw_moments(family: str, sbar: float, spread: float):
    """Exact first four raw moments of one single-feature estimate.

    ``sbar`` is (|x|^2 + |y|^2)/2; ``spread`` is the variance of the scalar
    projection the estimate depends on: |x - y|^2 for the trigonometric
    family, |x + y|^2 for the positive families.
    """
    e = np.exp
    if family == "trig":
        return (
            e(sbar - spread / 2),
            e(2 * sbar) * (1 + e(-2 * spread)) / 2,
            e(3 * sbar) * (3 * e(-spread / 2) + e(-4.5 * spread)) / 4,
            e(4 * sbar) * (3 + 4 * e(-2 * spread) + e(-8 * spread)) / 8,
        )
    if family == "pos_plus":
        return tuple(e(k * k * spread / 2 - k * sbar) for k in (1, 2, 3, 4))
    return (
        e(spread / 2 - sbar),
        e(-2 * sbar) * (e(2 * spread) + 1) / 2,
        e(-3 * sbar) * (e(4.5 * spread) + 3 * e(spread / 2)) / 4,
        e(-4 * sbar) * (e(8 * spread) + 4 * e(2 * spread) + 3) / 8,
    )


def _plain_mse_rel_se(family: str, x: np.ndarray, y: np.ndarray, trials: int) -> float:
    """A-priori relative standard error of the plain Monte Carlo MSE estimate."""
    sbar = float(x @ x + y @ y) / 2.0
    diff = x - y if family == "trig" else x + y
    spread = float(diff @ diff)
    sm = float(sm_exact(x, y))
    _, mu2, mu3, mu4 = _raw_moments(family, sbar, spread)
    var = mu2 - sm * sm
    fourth = mu4 - 4 * mu3 * sm + 6 * mu2 * sm * sm - 3 * sm**4
    return float(np.sqrt((fourth / (var * var) - 1.0) / trials))


def _importance_weighted_mse(
    family: str, x: np.ndarray, y: np.ndarray, trials: int, seed: Seed, widen: float = 6.0
) -> float:
    """Unbiased MSE of a single-feature positive estimate via reweighted draws.

    The estimate depends on the Gaussian row only through t = w·(x+y), so tis
    drawn from N(0, widen·v) (v = |x+y|^2), each draw is weighted by the exact
    density ratio, and the corresponding rows t (x+y)/v are pushed through the
    real feature maps.
    """
    z = x + y
    v = float(z @ z)
    sm = float(sm_exact(x, y))
    feat = {"pos_plus": pos_plus_features, "pos_plusplus": pos_plusplus_features}[family]
    batch = 65536
    sq_err = []
    done = 0
    for j in range((trials + batch - 1) // batch):
        count = min(batch, trials - done)
        done += count
        t = generator(derive_seed(seed, f"is-{j:08d}")).standard_normal(count) * np.sqrt(widen * v)
        weight = np.sqrt(widen) * np.exp(-0.5 * t * t * (1.0 / v - 1.0 / (widen * v)))
        rows = np.outer(t, z) / v
        ens = ProjectionEnsemble.from_rows(rows, derive_seed(seed, f"rows-{j:08d}"))
        prod = feat(x, ens) * feat(y, ens)
        per_draw = prod * count if family == "pos_plus" else (prod[:count] + prod[count:]) * count
        sq_err.append(weight * (per_draw - sm) ** 2)
    return pairwise_mean(np.concatenate(sq_err))


def test_c02_base_mse_matches_closed_forms_within_3pct():
    root = Seed(7000)
    trials = 1_000_000
    closed_forms = {"trig": mse_trig, "pos_plus": mse_pos_plus, "pos_plusplus": mse_pos_plusplus}
    thetas = (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4, np.pi)
    reweighted_cells = 0
    for family, cf_fn in closed_forms.items():
        for ri, r in enumerate((0.5, 1.0, 1.5)):
            for ti, theta in enumerate(thetas):
                x, y = pair_at(theta, r)
                cell = derive_seed(root, f"c2-{family}-{ri}-{ti}")
                cf = float(cf_fn(x, y, 1))
                label = f"{family} theta={theta:.3f} r={r}"
                if cf == 0.0:
                    # per-draw exact configuration: the empirical MSE is pure
                    # floating-point residue
                    spec = BaseEstimatorSpec(family, 1, derive_seed(cell, "spec"))
                    emp = empirical_mse(x, y, spec, trials, derive_seed(cell, "mc"), 65536).mse
                    assert emp <= 1e-25, f"{label}: exact cell has mse {emp}"
                    continue
                if _plain_mse_rel_se(family, x, y, trials) <= 0.005:
                    spec = BaseEstimatorSpec(family, 1, derive_seed(cell, "spec"))
                    emp = empirical_mse(x, y, spec, trials, derive_seed(cell, "mc"), 65536).mse
                else:
                    assert family != "trig"  # only positive estimates are 1-D in w·(x+y)
                    reweighted_cells += 1
                    emp = _importance_weighted_mse(family, x, y, trials, derive_seed(cell, "is"))
                assert abs(emp / cf - 1.0) <= 0.03, f"{label}: ratio {emp / cf:.4f}"
    assert reweighted_cells == 21  # frozen routing of the heavy-tailed cells
    # the closed forms scale as 1/m; spot-check a multi-feature configuration
    # at low-kurtosis cells where a plain million-trial average resolves 3%
    for family, theta, r in (("trig", np.pi / 2, 1.0), ("pos_plusplus", 3 * np.pi / 4, 0.5)):
        x, y = pair_at(theta, r)
        cell = derive_seed(root, f"c2-m4-{family}")
        spec = BaseEstimatorSpec(family, 4, derive_seed(cell, "spec"))
        emp = empirical_mse(x, y, spec, trials, derive_seed(cell, "mc"), 65536).mse
        cf = float(closed_forms[family](x, y, 4))
        assert abs(emp / cf - 1.0) <= 0.03, f"m=4 {family}: ratio {emp / cf:.4f}"


# ---------------------------------------------------------------------------
# 3. angular hybrid MSE, including the shared-projection correction


def test_c03_angular_hybrid_mse_with_sharing_correction():
    trials = 1_000_000
    # same-length inputs: sharing does not change the MSE
    root = Seed(21)
    x, y = pair_at(2 * np.pi / 3, 1.0)
    spec_seed = derive_seed(root, "spec")
    mc_seed = derive_seed(root, "mc")
    for m, n in ((1, 1), (4, 4)):
        for sharing in ("shared", "independent"):
            spec = make_angular_hybrid(m, n, sharing, spec_seed)
            cf = float(mse_angular_hybrid(x, y, m, n, sharing))
            emp = empirical_mse(x, y, spec, trials, mc_seed, 65536).mse
            assert abs(emp / cf - 1.0) <= 0.03, f"(m={m}, n={n}, {sharing}): {emp / cf:.4f}"

    # unequal lengths: the shared mode's covariance correction is material
    root = Seed(24)
    x, y = pair_at(2.0, 1.3, ry=0.6)
    spec_seed = derive_seed(root, "spec")
    mc_seed = derive_seed(root, "mc")
    for m, n in ((1, 4), (4, 4)):
        cf_shared = float(mse_angular_hybrid(x, y, m, n, "shared"))
        cf_independent = float(mse_angular_hybrid(x, y, m, n, "independent"))
        for sharing, cf, tol in (("shared", cf_shared, 0.05), ("independent", cf_independent, 0.03)):
            spec = make_angular_hybrid(m, n, sharing, spec_seed)
            emp = empirical_mse(x, y, spec, trials, mc_seed, 65536).mse
            assert abs(emp / cf - 1.0) <= tol, f"(m={m}, n={n}, {sharing}): {emp / cf:.4f}"
            # the two closed forms differ enough here that agreeing with one
            # rules out the other — the correction is genuinely detected
            other = cf_independent if sharing == "shared" else cf_shared
            assert abs(emp / other - 1.0) > 0.08


# ---------------------------------------------------------------------------
# 4. endpoint exactness


def test_c04_endpoint_exactness():
    for r in (0.5, 1.0, 1.5):
        for s in range(3):
            seed = derive_seed(Seed(33), f"c4-{r}-{s}")
            x, same = pair_at(0.0, r)
            _, opposite = pair_at(np.pi, r)
            sm_same = float(sm_exact(x, same))
            sm_opp = float(sm_exact(x, opposite))

            trig = BaseEstimatorSpec("trig", 2, derive_seed(seed, "trig"))
            assert abs(sm_hat_base(x, same, trig).value / sm_same - 1.0) <= 1e-12

            pospp = BaseEstimatorSpec("pos_plusplus", 2, derive_seed(seed, "pospp"))
            assert abs(sm_hat_base(x, opposite, pospp).value / sm_opp - 1.0) <= 1e-12

            hyb = make_angular_hybrid(2, 3, "independent", derive_seed(seed, "hyb"))
            assert abs(sm_hat_hybrid(x, same, hyb).value / sm_same - 1.0) <= 1e-12
            assert abs(sm_hat_hybrid(x, opposite, hyb).value / sm_opp - 1.0) <= 1e-12

        for m, n in ((1, 1), (2, 4)):
            assert mse_angular_hybrid_same_length(0.0, r, m, n) == 0.0
            assert mse_angular_hybrid_same_length(np.pi, r, m, n) == 0.0


# ---------------------------------------------------------------------------
# 5. reflection symmetry and shared supremum


def test_c05_reflection_symmetry_and_suprema():
    thetas = np.linspace(0.0, np.pi, 100)
    for r in (0.5, 1.0, 1.5):
        for m in (1, 4, 16):
            trig_err = rel_err_same_length(thetas, r, m, "trig")
            pospp_err = rel_err_same_length(np.pi - thetas, r, m, "pos_plusplus")
            # the mirror identity is algebraic; only sin/cos rounding remains
            np.testing.assert_allclose(trig_err, pospp_err, rtol=5e-14, atol=1e-30)
            sup = np.sqrt(1.0 / (2.0 * m)) * w_scale(r)
            np.testing.assert_allclose(trig_err.max(), sup, rtol=1e-10)
            np.testing.assert_allclose(
                rel_err_same_length(thetas, r, m, "pos_plusplus").max(), sup, rtol=1e-10
            )


# ---------------------------------------------------------------------------
# 6. max-relative-error bound and its endpoint limits


def test_c06_max_error_bound_and_endpoint_limits():
    eps = 1e-6
    thetas = np.linspace(eps, np.pi - eps, 1000)
    for r in (1.0, 1.5, 2.0):
        for m in (1, 4, 16):
            for n in (1, 4, 16):
                errs = rel_err_angular_hybrid(thetas, r, m, n)
                bound = max_rel_error_bound(r, m, n)
                assert np.all(errs <= bound * (1 + 1e-12)), (r, m, n)
                # near either endpoint the MSE vanishes linearly in the
                # offset, so the relative error scales with its square root
                scale = endpoint_limit_scale(r, m, n)
                low = float(rel_err_angular_hybrid(eps, r, m, n)) / np.sqrt(eps)
                high = float(rel_err_angular_hybrid(np.pi - eps, r, m, n)) / np.sqrt(eps)
                assert abs(low / scale - 1.0) <= 1e-3, (r, m, n, low / scale)
                assert abs(high / scale - 1.0) <= 1e-3, (r, m, n, high / scale)


# ---------------------------------------------------------------------------
# 7. linearized composite features


def test_c07_linearized_features_match_direct_estimates():
    gen = generator(derive_seed(Seed(55), "cases"))
    d = 6
    families = ("trig", "pos_plus", "pos_plusplus", "cexp")
    for case in range(100):
        p = 1 + case % 2
        case_seed = derive_seed(Seed(55), f"case-{case:03d}")
        x = float(gen.uniform(0.3, 1.4)) * _unit(gen.standard_normal(d))
        y = float(gen.uniform(0.3, 1.4)) * _unit(gen.standard_normal(d))
        sharing = "shared" if (p == 1 and case % 3 == 0) else "independent"
        ms = [int(v) for v in gen.integers(1, 5, size=p + 1)]
        base_seeds = [derive_seed(case_seed, f"base-{k}") for k in range(p + 1)]
        if sharing == "shared":
            ms[1] = ms[0]
            base_seeds[1] = base_seeds[0]
        bases = []
        for k in range(p + 1):
            family = str(gen.choice(families))
            diag = None
            if family == "cexp":
                diag = DiagMatrix(np.exp(gen.uniform(-0.3, 0.3, size=d)))
            bases.append(BaseEstimatorSpec(family, ms[k], base_seeds[k], diag=diag))
        lambdas = []
        for k in range(p):
            kind = str(gen.choice(("angular", "gaussian", "constant")))
            n = int(gen.integers(1, 5))
            if kind == "angular":
                lambdas.append(LambdaSpec("angular", n=n, seed=derive_seed(case_seed, f"lam-{k}")))
            elif kind == "gaussian":
                params = GaussianLambdaParams.from_sigma_r(
                    float(gen.uniform(0.5, 2.0)), float(gen.uniform(0.5, 1.5)), n
                )
                lambdas.append(
                    LambdaSpec(
                        "gaussian", n=n, seed=derive_seed(case_seed, f"lam-{k}"), params=params
                    )
                )
            else:
                lambdas.append(LambdaSpec("constant", value=float(gen.uniform(0.0, 1.0))))
        spec = HybridSpec(bases=tuple(bases), lambdas=tuple(lambdas), sharing=sharing)
        direct = sm_hat_hybrid(x, y, spec).value
        linear = float(np.real(np.sum(hybrid_features(x, "query", spec) * hybrid_features(y, "key", spec))))
        assert abs(linear - direct) <= 1e-10 * abs(direct), f"case {case}: {linear} vs {direct}"


# ---------------------------------------------------------------------------
# 8. Gaussian coefficient moments; sharing immaterial at equal lengths


def test_c08_gaussian_coefficient_moments_and_sharing():
    trials = 1_000_000
    x, y = pair_at(np.pi / 2, 1.0)
    delta = float(np.linalg.norm(x - y))

    root = Seed(31)
    for sigma in (1.0, 2.0):
        for n in (1, 8):
            params = GaussianLambdaParams.from_sigma_r(sigma, 1.0, n)
            lspec = LambdaSpec("gaussian", n=n, seed=derive_seed(root, "lam"), params=params)
            lams = sample_lambdas(x, y, lspec, trials, derive_seed(root, "mc"), 65536)
            e_sq, e_comp_sq = lambda_moments_gaussian(delta, sigma, params.rho, n)
            emp_sq = pairwise_mean(lams * lams)
            emp_comp = pairwise_mean((1.0 - lams) ** 2)
            assert abs(emp_sq / e_sq - 1.0) <= 0.03, (sigma, n, emp_sq / e_sq)
            assert abs(emp_comp / e_comp_sq - 1.0) <= 0.03, (sigma, n, emp_comp / e_comp_sq)

    root = Seed(41)
    cf = float(mse_gaussian_hybrid_same_length(np.pi / 2, 1.0, 1.0, 4, 4))
    results = {}
    for sharing in ("shared", "independent"):
        spec = make_gaussian_hybrid(4, 4, 1.0, 1.0, sharing, derive_seed(root, "spec"))
        results[sharing] = empirical_mse(x, y, spec, trials, derive_seed(root, f"mc-{sharing}"), 65536)
        got = results[sharing]
        assert abs(got.mse - cf) <= 5.0 * np.sqrt(got.mse_variance), (sharing, got.mse / cf)
    gap = abs(results["shared"].mse - results["independent"].mse)
    noise = np.sqrt(results["shared"].mse_variance + results["independent"].mse_variance)
    assert gap <= 5.0 * noise, f"sharing changed the equal-length MSE: {gap / noise:.2f} sigma"


# ---------------------------------------------------------------------------
# 9. cluster diagonal construction


def test_c09_cluster_diagonals_and_center_exactness():
    root = Seed(61)
    d = 10
    gen = generator(derive_seed(root, "centers"))
    for _ in range(1000):
        ci = gen.standard_normal(d)
        cj = gen.standard_normal(d)
        assert cluster_loss(build_A_complex(ci, cj), ci, cj) <= 1e-18

    # at the centers the complex-exponential estimate is constant: every
    # single draw equals the exact kernel value
    for k in range(50):
        ci = gen.standard_normal(d)
        cj = gen.standard_normal(d)
        a = build_A_complex(ci, cj)
        ens = sample_ensemble(d, 8, "iid", derive_seed(root, f"ens-{k:02d}"))
        per_draw = cexp_features(ci, a, "query", ens) * cexp_features(cj, a, "key", ens) * 8
        sm = float(sm_exact(ci, cj))
        assert np.max(np.abs(per_draw - sm)) <= 1e-10 * sm

    # the real diagonal is coordinatewise optimal: nudging any entry by 1%
    # in either direction strictly increases the residual loss
    for _ in range(50):
        ci = gen.standard_normal(d)
        cj = gen.standard_normal(d)
        a = build_A_real(ci, cj)
        base_loss = cluster_loss(a, ci, cj)
        for coord in range(d):
            for factor in (1.01, 0.99):
                entries = a.entries.copy()
                entries[coord] *= factor
                assert cluster_loss(DiagMatrix(entries), ci, cj) > base_loss


# ---------------------------------------------------------------------------
# 10. clustered estimator dominates on clustered data


def test_c10_clustered_estimator_ordering_on_synthetic_clusters():
    root = Seed(2026)
    wins = 0
    for b in range(20):
        cfg = ClusterBenchConfig(
            seed=derive_seed(root, f"batch-{b:02d}"),
            rf_counts=(50, 100, 200) if b == 0 else (200,),
        )
        by_id = {rec.estimator_id: rec for rec in cluster_benchmark(cfg)}
        if b == 0:
            for rf in (50, 100, 200):
                clustered = by_id[f"clustered-m{rf}"].mean_mse
                assert clustered < by_id[f"pospp-m{rf}"].mean_mse, f"rf={rf}"
                assert clustered < by_id[f"trig-m{rf}"].mean_mse, f"rf={rf}"
        if by_id["clustered-m200"].max_mse < by_id["pospp-m200"].min_mse:
            wins += 1
    assert wins >= 15, f"max-below-min ordering held in only {wins}/20 batches"


# ---------------------------------------------------------------------------
# 11. projection cost: instrumented counts vs. the model


def test_c11_flops_counter_matches_model_and_cost_ratio():
    d = 64
    m, n = flops_matched_mn(128, d)
    assert (m, n) == (64, 64)
    model = flops_model(d, m, n, 1, (2, 2), (1,))
    spec = make_angular_hybrid(m, n, "shared", Seed(3))
    counter = FlopsCounter()
    hybrid_features(np.full(d, 0.1), "query", spec, counter=counter)
    assert abs(counter.fma - model.hybrid_cost) <= 0.10 * model.hybrid_cost
    assert model.hybrid_cost / model.regular_cost <= 1.0 / 5.0


# ---------------------------------------------------------------------------
# 12. harness determinism


def test_c12_outputs_byte_identical_across_runs_and_workers(tmp_path, monkeypatch):
    import json

    from hybridrf.cli import main

    pointwise_cfg = tmp_path / "pointwise.json"
    pointwise_cfg.write_text(
        json.dumps(
            {
                "r_values": [1.0, 1.25],
                "theta_count": 5,
                "d": 16,
                "trials": 2000,
                "m_regular": 16,
                "estimators": ["trig", "pospp", "anghyb", "gausshyb"],
            }
        )
    )
    cluster_cfg = tmp_path / "cluster.json"
    cluster_cfg.write_text(
        json.dumps(
            {
                "rf_counts": [8, 16],
                "reps": 3,
                "eval_count": 32,
                "dataset": {"d": 12, "points_per_cluster": 40, "norm_control": 2.0},
            }
        )
    )
    for command, cfg in (("pointwise", pointwise_cfg), ("cluster-bench", cluster_cfg)):
        outputs = []
        for tag, workers in (("a", "1"), ("b", "1"), ("c", "3")):
            monkeypatch.setenv("HYBRIDRF_WORKERS", workers)
            out = tmp_path / f"{command}-{tag}.csv"
            code = main([command, "--seed", "9", "--config", str(cfg), "--out", str(out)])
            assert code == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2], f"{command} output varied"
