"""Exact kernels, closed-form mean-squared errors and cost models.

Everything here is deterministic analysis: the exact softmax kernel, the
per-estimator MSE formulas the Monte Carlo suite is validated against, the
mixing-coefficient moments, the hybrid-estimator error curves with their
endpoint limits and uniform bound, and the projection-cost model used for
feature-budget matching.

Angle/radius ("same-length") variants assume both inputs lie on the radius-r
sphere separated by angle theta; general-position variants take raw vectors.
All scalar formulas broadcast over ndarray inputs.  MSE values are returned
as computed — never clamped — so a formula bug shows up as a negative
variance instead of being masked.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .errors import OutOfDomainError

__all__ = [
    "sm_exact",
    "sm_exact_same_length",
    "theta_between",
    "mse_trig",
    "mse_pos_plus",
    "mse_pos_plusplus",
    "mse_trig_same_length",
    "mse_pos_plusplus_same_length",
    "rel_err_same_length",
    "w_scale",
    "lambda_moments_angular",
    "lambda_moments_gaussian",
    "gaussian_rho",
    "shared_correction",
    "mse_general_hybrid",
    "mse_angular_hybrid",
    "mse_angular_hybrid_same_length",
    "mse_gaussian_hybrid_same_length",
    "rel_err_angular_hybrid",
    "max_rel_error_bound",
    "endpoint_limit_scale",
    "FlopsModel",
    "flops_model",
    "hybrid_feature_length",
    "flops_matched_mn",
]


# ---------------------------------------------------------------------------
# exact kernel and geometry helpers


def sm_exact(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact softmax kernel exp(x·y), broadcasting over leading axes."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return np.exp(np.sum(x * y, axis=-1))


def sm_exact_same_length(theta, r):
    """Softmax kernel of two radius-r vectors at angle theta: exp(r^2 cos theta)."""
    theta = np.asarray(theta, dtype=np.float64)
    return np.exp(r * r * np.cos(theta))


def theta_between(x: np.ndarray, y: np.ndarray) -> float:
    """Angle between two nonzero vectors, clamped against rounding."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise ValueError("angle is undefined for a zero vector")
    c = float(np.dot(x, y)) / (nx * ny)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def _norms(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    delta_sq = np.sum((x - y) ** 2, axis=-1)
    z_sq = np.sum((x + y) ** 2, axis=-1)
    return delta_sq, z_sq


def _check_m(m: int, name: str = "m") -> None:
    if m < 1:
        raise ValueError(f"{name} must be >= 1, got {m}")


# ---------------------------------------------------------------------------
# base-estimator MSEs


def mse_trig(x: np.ndarray, y: np.ndarray, m: int) -> np.ndarray:
    """MSE of the m-feature trigonometric softmax estimator at (x, y)."""
    _check_m(m)
    delta_sq, z_sq = _norms(x, y)
    # e^{|z|^2} SM^{-2} = e^{|x|^2 + |y|^2}
    return np.exp((delta_sq + z_sq) / 2.0) * (1.0 - np.exp(-delta_sq)) ** 2 / (2.0 * m)


def mse_pos_plus(x: np.ndarray, y: np.ndarray, m: int) -> np.ndarray:
    """MSE of the m-feature one-sided positive softmax estimator at (x, y)."""
    _check_m(m)
    _, z_sq = _norms(x, y)
    sm = sm_exact(x, y)
    return np.exp(z_sq) * sm * sm * (1.0 - np.exp(-z_sq)) / m


def mse_pos_plusplus(x: np.ndarray, y: np.ndarray, m: int) -> np.ndarray:
    """MSE of the m-feature two-sided positive softmax estimator at (x, y)."""
    _check_m(m)
    _, z_sq = _norms(x, y)
    sm = sm_exact(x, y)
    return np.exp(z_sq) * sm * sm * (1.0 - np.exp(-z_sq)) ** 2 / (2.0 * m)


def mse_trig_same_length(theta, r: float, m: int):
    """mse_trig for radius-r inputs at angle theta."""
    _check_m(m)
    theta = np.asarray(theta, dtype=np.float64)
    s2 = np.sin(theta / 2.0) ** 2
    return np.exp(2.0 * r * r) * (1.0 - np.exp(-4.0 * r * r * s2)) ** 2 / (2.0 * m)


def mse_pos_plusplus_same_length(theta, r: float, m: int):
    """mse_pos_plusplus for radius-r inputs at angle theta."""
    _check_m(m)
    theta = np.asarray(theta, dtype=np.float64)
    c2 = np.cos(theta / 2.0) ** 2
    return (
        np.exp(8.0 * r * r * c2 - 2.0 * r * r)
        * (1.0 - np.exp(-4.0 * r * r * c2)) ** 2
        / (2.0 * m)
    )


def rel_err_same_length(theta, r: float, m: int, family: str):
    """Relative error sqrt(MSE)/SM of a base estimator on the radius-r sphere.

    trig peaks at theta = pi, the two-sided positive family at theta = 0, and
    each is the other's reflection theta -> pi - theta; both share supremum
    sqrt(1/(2m)) * w_scale(r).
    """
    _check_m(m)
    theta = np.asarray(theta, dtype=np.float64)
    if family == "trig":
        s = np.sin(theta / 2.0) ** 2
    elif family == "pos_plusplus":
        s = np.cos(theta / 2.0) ** 2
    else:
        raise ValueError(f"unknown family {family!r}; expected 'trig' or 'pos_plusplus'")
    g = 4.0 * r * r * s
    return np.exp(g / 2.0) * (1.0 - np.exp(-g)) / np.sqrt(2.0 * m)


def w_scale(r: float) -> float:
    """Error scale e^{2 r^2} (1 - e^{-4 r^2}) shared by all same-length suprema."""
    return float(np.exp(2.0 * r * r) * (1.0 - np.exp(-4.0 * r * r)))


# ---------------------------------------------------------------------------
# mixing-coefficient moments


def lambda_moments_angular(theta, n: int):
    """Second moments of the n-projection angular mixing coefficient.

    Returns (E[lam^2], E[(1-lam)^2], E[lam (1-lam)]) for the sign-projection
    estimator of lam = theta / pi.  The three moments always sum (with the
    cross term doubled) to one.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    theta = np.asarray(theta, dtype=np.float64)
    t = theta / np.pi
    e_sq = t * (t - t / n + 1.0 / n)
    e_comp_sq = (1.0 - t) * (1.0 - t + t / n)
    e_cross = t * (1.0 - t) * (1.0 - 1.0 / n)
    return e_sq, e_comp_sq, e_cross


def gaussian_rho(sigma: float, r: float) -> float:
    """Normalizer rho = 1 - exp(-2 sigma^2 r^2) of the Gaussian mixing coefficient."""
    return float(1.0 - np.exp(-2.0 * sigma * sigma * r * r))


def lambda_moments_gaussian(delta_norm, sigma: float, rho: float, n: int):
    """Second moments of the n-feature Gaussian mixing coefficient.

    ``delta_norm`` is |x - y|.  With q = exp(-sigma^2 |x-y|^2 / 2) the
    estimator has mean (1-q)/rho and variance (1-q^2)^2 / (2 n rho^2);
    returns (E[lam^2], E[(1-lam)^2]).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    delta_norm = np.asarray(delta_norm, dtype=np.float64)
    q = np.exp(-0.5 * sigma * sigma * delta_norm * delta_norm)
    var = (1.0 - q * q) ** 2 / (2.0 * n * rho * rho)
    mean = (1.0 - q) / rho
    e_sq = mean * mean + var
    e_comp_sq = (1.0 - mean) ** 2 + var
    return e_sq, e_comp_sq


# ---------------------------------------------------------------------------
# hybrid-estimator MSEs


def mse_general_hybrid(e_lam_sq, e_comp_sq, mse_weighted, mse_residual, correction=0.0):
    """MSE of a two-base hybrid from coefficient moments and base MSEs.

    E[lam^2] * MSE(weighted base) + E[(1-lam)^2] * MSE(residual base),
    minus the sharing correction (zero when ensembles are independent).
    The coefficient ensemble is always independent of the base ensembles.
    """
    return e_lam_sq * mse_weighted + e_comp_sq * mse_residual - correction


def shared_correction(x: np.ndarray, y: np.ndarray, m: int, e_cross) -> np.ndarray:
    """Covariance term removed from the hybrid MSE when the two bases share draws.

    Equals (2/m) SM(x,y)^2 (1 - cos(|x|^2 - |y|^2)) E[lam (1-lam)]; it
    vanishes for equal-length inputs, where sharing and independence agree.
    """
    _check_m(m)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sm = sm_exact(x, y)
    gap = np.sum(x * x, axis=-1) - np.sum(y * y, axis=-1)
    return 2.0 * sm * sm * (1.0 - np.cos(gap)) * e_cross / m


def mse_angular_hybrid(x: np.ndarray, y: np.ndarray, m: int, n: int, sharing: str) -> np.ndarray:
    """MSE of the angular hybrid (two-sided positive base + trig residual)."""
    if sharing not in ("shared", "independent"):
        raise ValueError(f"sharing must be 'shared' or 'independent', got {sharing!r}")
    theta = theta_between(x, y)
    e_sq, e_comp_sq, e_cross = lambda_moments_angular(theta, n)
    correction = shared_correction(x, y, m, e_cross) if sharing == "shared" else 0.0
    return mse_general_hybrid(
        e_sq, e_comp_sq, mse_pos_plusplus(x, y, m), mse_trig(x, y, m), correction
    )


def mse_angular_hybrid_same_length(theta, r: float, m: int, n: int):
    """Angular-hybrid MSE on the radius-r sphere (sharing mode is immaterial there)."""
    e_sq, e_comp_sq, _ = lambda_moments_angular(theta, n)
    return mse_general_hybrid(
        e_sq,
        e_comp_sq,
        mse_pos_plusplus_same_length(theta, r, m),
        mse_trig_same_length(theta, r, m),
    )


def mse_gaussian_hybrid_same_length(theta, r: float, sigma: float, m: int, n: int):
    """Gaussian-coefficient hybrid MSE on the radius-r sphere."""
    theta = np.asarray(theta, dtype=np.float64)
    delta_norm = 2.0 * r * np.abs(np.sin(theta / 2.0))
    rho = gaussian_rho(sigma, r)
    e_sq, e_comp_sq = lambda_moments_gaussian(delta_norm, sigma, rho, n)
    return mse_general_hybrid(
        e_sq,
        e_comp_sq,
        mse_pos_plusplus_same_length(theta, r, m),
        mse_trig_same_length(theta, r, m),
    )


def rel_err_angular_hybrid(theta, r: float, m: int, n: int):
    """Relative error sqrt(MSE)/SM of the angular hybrid on the radius-r sphere."""
    return np.sqrt(mse_angular_hybrid_same_length(theta, r, m, n)) / sm_exact_same_length(
        np.asarray(theta, dtype=np.float64), r
    )


def max_rel_error_bound(r: float, m: int, n: int) -> float:
    """Uniform-in-theta bound on the angular-hybrid relative error, valid for r >= 1.

    (e^{2 r^2} / (sqrt(2 m) r)) (1 - e^{-4 r^2})
    sqrt(1/pi - 1/(n pi) + 1/(n sqrt(pi))).
    """
    _check_m(m)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if r < 1.0:
        raise OutOfDomainError(f"the uniform bound requires r >= 1, got r={r}")
    bracket = 1.0 / np.pi - 1.0 / (n * np.pi) + 1.0 / (n * np.sqrt(np.pi))
    return float(
        np.exp(2.0 * r * r)
        * (1.0 - np.exp(-4.0 * r * r))
        * np.sqrt(bracket)
        / (np.sqrt(2.0 * m) * r)
    )


def endpoint_limit_scale(r: float, m: int, n: int) -> float:
    """Common value of lim rel_err/sqrt(theta) at 0 and lim rel_err/sqrt(pi-theta) at pi.

    Both endpoint limits of the angular hybrid equal
    sqrt(1/(2 pi m n)) * w_scale(r).
    """
    _check_m(m)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return float(np.sqrt(1.0 / (2.0 * np.pi * m * n)) * w_scale(r))


# ---------------------------------------------------------------------------
# cost model


class FlopsModel(NamedTuple):
    """Projection FMA counts for a hybrid and the regular estimator it replaces."""

    hybrid_cost: int
    regular_cost: int


def flops_model(
    d: int, m: int, n: int, p: int, t_list: Sequence[int], l_list: Sequence[int]
) -> FlopsModel:
    """Per-input projection cost of a p-coefficient hybrid vs. an (m*n)-feature regular map.

    Counts fused multiply-adds in the projection matrix-vector products only:
    the hybrid computes one m-row base projection (sub-maps and the residual
    reuse it) plus one n-row projection per mixing coefficient, so
    hybrid_cost = (m + p n) d, while a regular map with the same m*n feature
    budget costs regular_cost = m n d.  Elementwise transcendentals and
    scalings are excluded on both sides; t_list/l_list describe the block
    structure and must be consistent with p.
    """
    for name, v in (("d", d), ("m", m), ("n", n), ("p", p)):
        if v < 1:
            raise ValueError(f"{name} must be >= 1, got {v}")
    if len(t_list) != p + 1:
        raise ValueError(f"t_list must have p+1={p + 1} entries, got {len(t_list)}")
    if len(l_list) != p:
        raise ValueError(f"l_list must have p={p} entries, got {len(l_list)}")
    if any(t < 1 for t in t_list) or any(l < 1 for l in l_list):
        raise ValueError("t_list and l_list entries must be >= 1")
    return FlopsModel(hybrid_cost=(m + p * n) * d, regular_cost=m * n * d)


def hybrid_feature_length(m: int, n: int, t_list: Sequence[int], l_list: Sequence[int]) -> int:
    """Length of the linearized hybrid feature vector.

    Per weighted base k: t_k m direct coordinates plus l_k t_k n m coordinates
    for the coefficient/base outer product; the residual base contributes
    t_{p+1} m directly plus l_k t_{p+1} n m per coefficient.
    """
    p = len(l_list)
    if len(t_list) != p + 1:
        raise ValueError(f"t_list must have one more entry than l_list, got {len(t_list)} vs {p}")
    t_res = t_list[-1]
    direct = sum(t_list[k] * m for k in range(p)) + t_res * m
    outer = sum(l_list[k] * t_list[k] * n * m for k in range(p))
    outer += sum(l_list[k] * t_res * n * m for k in range(p))
    return direct + outer


def flops_matched_mn(target: int, d: int, p: int = 1) -> tuple[int, int]:
    """Pick (m, n) for a hybrid whose projection cost matches a regular target-feature map.

    Minimizes |(m + p n) d - target d| subject to m n >= target (the hybrid
    never carries less statistical budget than the map it replaces); ties
    prefer larger m n, then smaller m.
    """
    if target < 1 or d < 1 or p < 1:
        raise ValueError("target, d and p must all be >= 1")
    best: tuple[int, int, int, int] | None = None
    limit = 2 * target + 2
    for m in range(1, limit):
        n_floor = (target + m - 1) // m
        # cost gap |m + p n - target| is monotone in n on either side of its
        # minimum, so only the feasibility floor and the integers bracketing
        # the unconstrained optimum matter
        n_star = (target - m) / p
        candidates = {
            n_floor,
            max(n_floor, int(np.floor(n_star))),
            max(n_floor, int(np.ceil(n_star))),
        }
        for n in candidates:
            if n < 1:
                continue
            gap = abs((m + p * n) - target)
            key = (gap, -(m * n), m)
            if best is None or key < best[:3]:
                best = (gap, -(m * n), m, n)
    assert best is not None
    return best[2], best[3]
