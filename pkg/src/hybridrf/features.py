"""Random feature maps: every estimator in the package is a dot product of these.

All maps accept a single input of shape (d,) or a batch of shape (..., d) and
return (..., L) with L the documented feature length.  Feature vectors are
plain ndarrays; ``float64`` dtype means a real map, ``complex128`` a complex
one.  Exponential maps fuse the Gaussian prefactor into the exponent
(``exp(w·u - |u|^2/2)`` rather than a product of exponentials) so the
intermediate never over- or underflows for moderate inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError
from .rng import ProjectionEnsemble

__all__ = [
    "DiagMatrix",
    "GaussianLambdaParams",
    "trig_features",
    "pos_plus_features",
    "pos_plusplus_features",
    "cexp_features",
    "sign_features",
    "gaussian_lambda_features",
    "cluster_lambda_features",
]


@dataclass(frozen=True)
class DiagMatrix:
    """A diagonal matrix stored as its d diagonal entries (complex allowed).

    Every entry must be nonzero so that the inverse — the entrywise
    reciprocal, which for a diagonal matrix equals the inverse transpose —
    always exists.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries)
        if entries.ndim != 1 or entries.size == 0:
            raise ValueError("DiagMatrix entries must be a non-empty 1-D array")
        if np.iscomplexobj(entries):
            entries = entries.astype(np.complex128)
        else:
            entries = entries.astype(np.float64)
        if np.any(entries == 0):
            raise SingularMatrixError("DiagMatrix has a zero diagonal entry and is not invertible")
        entries = entries.copy()
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    @property
    def inverse_entries(self) -> np.ndarray:
        return 1.0 / self.entries

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries)


@dataclass(frozen=True)
class GaussianLambdaParams:
    """Parameters of the Gaussian mixing-coefficient estimator.

    The normalized bipolar form uses ``lambda(x, y) =
    (1 - exp(-sigma^2 |x-y|^2 / 2)) / rho`` with ``rho = 1 - exp(-2 sigma^2
    r^2)``, the value of the numerator at antipodal same-length inputs, so
    the coefficient spans [0, 1] on the radius-r sphere.  The general form
    ``lambda(x, y) = exp(-|x + M y|^2 / (2 c^2))`` is supported by feeding
    ``x / c`` (query side) and ``-M y / c`` (key side) through the same
    trigonometric machinery.
    """

    sigma: float
    rho: float
    r: float
    n: int
    m_matrix: np.ndarray | None = None
    c_scale: float | None = None

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if not self.r > 0:
            raise ValueError(f"r must be > 0, got {self.r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if (self.m_matrix is None) != (self.c_scale is None):
            raise ValueError("general form needs both m_matrix and c_scale")
        if self.c_scale is not None and not self.c_scale > 0:
            raise ValueError(f"c_scale must be > 0, got {self.c_scale}")

    @classmethod
    def from_sigma_r(cls, sigma: float, r: float, n: int) -> "GaussianLambdaParams":
        rho = 1.0 - float(np.exp(-2.0 * sigma * sigma * r * r))
        return cls(sigma=sigma, rho=rho, r=r, n=n)

    @property
    def is_general(self) -> bool:
        return self.m_matrix is not None


def _check_dim(u: np.ndarray, ens: ProjectionEnsemble) -> np.ndarray:
    u = np.asarray(u)
    if u.shape[-1] != ens.d:
        raise ValueError(f"input dimension {u.shape[-1]} != ensemble dimension {ens.d}")
    return u


def _sq_norm(u: np.ndarray) -> np.ndarray:
    return np.sum(u * u, axis=-1, keepdims=True)


def trig_features(u: np.ndarray, ens: ProjectionEnsemble) -> np.ndarray:
    """Trigonometric features: (1/sqrt(m)) e^{|u|^2/2} (sin(w_i·u)..., cos(w_i·u)...)."""
    u = _check_dim(u, ens)
    proj = u @ ens.rows.T
    pref = np.exp(_sq_norm(u) / 2.0) / np.sqrt(ens.m)
    return np.concatenate([np.sin(proj), np.cos(proj)], axis=-1) * pref


def pos_plus_features(u: np.ndarray, ens: ProjectionEnsemble) -> np.ndarray:
    """One-sided positive features: (1/sqrt(m)) exp(w_i·u - |u|^2/2)."""
    u = _check_dim(u, ens)
    proj = u @ ens.rows.T
    return np.exp(proj - _sq_norm(u) / 2.0) / np.sqrt(ens.m)


def pos_plusplus_features(u: np.ndarray, ens: ProjectionEnsemble) -> np.ndarray:
    """Two-sided positive features: (1/sqrt(2m)) (exp(w_i·u - |u|^2/2)..., exp(-w_i·u - |u|^2/2)...)."""
    u = _check_dim(u, ens)
    proj = u @ ens.rows.T
    half = _sq_norm(u) / 2.0
    return np.concatenate([np.exp(proj - half), np.exp(-proj - half)], axis=-1) / np.sqrt(2.0 * ens.m)


def cexp_features(u: np.ndarray, a: DiagMatrix, side: str, ens: ProjectionEnsemble) -> np.ndarray:
    """Complex exponential features parameterized by a diagonal matrix A.

    Query side applies M = A, key side M = (A^T)^{-1} (the entrywise inverse
    for a diagonal).  Coordinates are (1/sqrt(m)) exp(w_i·(Mu) - (Mu)^2/2),
    with (Mu)^2 the complex (non-conjugated) square sum(M_kk^2 u_k^2), so the
    plain dot product of a query/key pair is an unbiased softmax estimate.
    """
    u = _check_dim(u, ens)
    if a.d != ens.d:
        raise ValueError(f"DiagMatrix dimension {a.d} != ensemble dimension {ens.d}")
    if side == "query":
        diag = a.entries
    elif side == "key":
        diag = a.inverse_entries
    else:
        raise ValueError(f"side must be 'query' or 'key', got {side!r}")
    v = u * diag
    proj = v @ ens.rows.T.astype(v.dtype)
    sq = np.sum(v * v, axis=-1, keepdims=True)
    return np.exp(proj - sq / 2.0).astype(np.complex128) / np.sqrt(ens.m)


def sign_features(u: np.ndarray, ens: ProjectionEnsemble) -> np.ndarray:
    """Sign random projections: (1/sqrt(2n)) sgn(tau_i·u) with sgn(0) = +1."""
    u = _check_dim(u, ens)
    proj = u @ ens.rows.T
    return np.where(proj >= 0.0, 1.0, -1.0) / np.sqrt(2.0 * ens.m)


def gaussian_lambda_features(
    u: np.ndarray, params: GaussianLambdaParams, side: str, ens: ProjectionEnsemble
) -> np.ndarray:
    """Feature map of the Gaussian mixing coefficient.

    Normalized bipolar form: (i/sqrt(n rho)) (sin(sigma tau_i·u)...,
    cos(sigma tau_i·u)...) — identical on both sides; the imaginary prefactor
    realizes the subtraction in lambda = 1/rho - (Gaussian kernel)/rho when
    query and key vectors are dotted.  The general (M, c) form feeds
    ``u / c`` (query) or ``-M u / c`` (key) through plain (1/sqrt(n))
    (sin, cos) features with no imaginary prefactor.
    """
    if side not in ("query", "key"):
        raise ValueError(f"side must be 'query' or 'key', got {side!r}")
    u = _check_dim(u, ens)
    n = ens.m
    if params.is_general:
        if side == "key":
            u = -(u @ np.asarray(params.m_matrix).T)
        t = u / params.c_scale
        proj = t @ ens.rows.T
        return np.concatenate([np.sin(proj), np.cos(proj)], axis=-1).astype(np.complex128) / np.sqrt(n)
    proj = (params.sigma * u) @ ens.rows.T
    scale = 1j / np.sqrt(n * params.rho)
    return np.concatenate([np.sin(proj), np.cos(proj)], axis=-1) * scale


def cluster_lambda_features(
    u: np.ndarray, a: DiagMatrix, tau: float, side: str, ens: ProjectionEnsemble
) -> np.ndarray:
    """Positive-exponential mixing-coefficient features for clustered data.

    With v = Au on the query side and w = A^{-1}u on the key side, the
    coordinates are (1/sqrt(n)) exp(+w_i·v/tau - v^2/tau^2) and
    (1/sqrt(n)) exp(-w_i·w/tau - w^2/tau^2); the dot product of a pair is an
    unbiased estimate of exp(-(Ax + A^{-1}y)^2 / (2 tau^2)), a bump of width
    tau around input pairs whose rescaled sum vanishes — i.e. around the
    cluster pair A was built for.  Squares are non-conjugated so complex
    diagonals are supported; a real diagonal yields a real map.
    """
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    u = _check_dim(u, ens)
    if a.d != ens.d:
        raise ValueError(f"DiagMatrix dimension {a.d} != ensemble dimension {ens.d}")
    if side == "query":
        v = u * a.entries
        sign = 1.0
    elif side == "key":
        v = u * a.inverse_entries
        sign = -1.0
    else:
        raise ValueError(f"side must be 'query' or 'key', got {side!r}")
    proj = v @ ens.rows.T.astype(v.dtype)
    sq = np.sum(v * v, axis=-1, keepdims=True)
    return np.exp(sign * proj / tau - sq / (tau * tau)) / np.sqrt(ens.m)
