"""Deterministic Gaussian projection ensembles and reproducible seed derivation.

All randomness in the package flows through two primitives:

* :func:`derive_seed` — a documented, portable integer mixing function that
  turns a root :class:`Seed` plus a stream label into a new independent
  :class:`Seed`.  The mixing uses the SplitMix64 finalizer over an FNV-1a
  hash of the label, i.e. pure 64-bit integer arithmetic, so derived seed
  values are identical on every platform.
* :func:`generator` — a counter-based bit generator (Philox) keyed by a
  seed value.  Distinct keys give independent streams, which makes parallel
  trials reproducible regardless of scheduling: give each chunk of work its
  own derived seed and the draws cannot depend on worker count.

Projection ensembles are the m Gaussian direction vectors consumed by every
random feature map.  The ``block-orthogonal`` scheme orthogonalizes each
consecutive d-row block (modified Gram-Schmidt) and rescales every row to an
independently drawn chi(d) length, so each row keeps the exact N(0, I_d)
marginal while rows within a block are exactly orthogonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF

# SplitMix64 constants (golden-gamma increment and the two finalizer
# multipliers), plus FNV-1a 64-bit offset/prime for label hashing.
_GAMMA = 0x9E3779B97F4A7C15
_MIX_MUL1 = 0xBF58476D1CE4E5B9
_MIX_MUL2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

SCHEMES = ("iid", "block-orthogonal")


@dataclass(frozen=True)
class Seed:
    """A 64-bit unsigned seed; equal seeds always reproduce equal draws."""

    value: int

    def __post_init__(self) -> None:
        v = int(self.value)
        if not 0 <= v <= _MASK64:
            raise ValueError(f"seed value must fit in 64 unsigned bits, got {self.value}")
        object.__setattr__(self, "value", v)


def _mix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit avalanche mix."""
    x &= _MASK64
    x ^= x >> 30
    x = (x * _MIX_MUL1) & _MASK64
    x ^= x >> 27
    x = (x * _MIX_MUL2) & _MASK64
    x ^= x >> 31
    return x


def _fnv1a(label: str) -> int:
    h = _FNV_OFFSET
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def derive_seed(root: Seed, stream: str) -> Seed:
    """Derive an independent child seed for a named stream.

    The mixing is ``mix64(mix64(root + GAMMA) ^ mix64(fnv1a(stream)))`` with
    mix64 the SplitMix64 finalizer.  It is deterministic, portable (integer
    ops only), and injective-in-practice: distinct labels or distinct roots
    collide only with ~2^-64 probability.
    """
    return Seed(_mix64(_mix64(root.value + _GAMMA) ^ _mix64(_fnv1a(stream))))


def generator(seed: Seed) -> np.random.Generator:
    """Counter-based generator (Philox 4x64) keyed by the seed value."""
    return np.random.Generator(np.random.Philox(key=seed.value))


@dataclass(frozen=True)
class ProjectionEnsemble:
    """m Gaussian direction vectors omega_i in R^d.

    ``rows`` has shape (m, d) and is read-only.  ``seed`` records provenance
    when the ensemble was drawn through :func:`sample_ensemble`; ensembles
    assembled from explicit rows (tests, batched internals) carry the seed
    of the stream the rows were cut from.
    """

    rows: np.ndarray
    d: int
    m: int
    scheme: str
    seed: Seed

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.shape != (self.m, self.d):
            raise ValueError(f"rows shape {rows.shape} != (m={self.m}, d={self.d})")
        if not np.all(np.isfinite(rows)):
            raise ValueError("ensemble rows must be finite")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        rows = rows.copy()
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_rows(cls, rows: np.ndarray, seed: Seed, scheme: str = "iid") -> "ProjectionEnsemble":
        rows = np.asarray(rows, dtype=np.float64)
        m, d = rows.shape
        return cls(rows=rows, d=d, m=m, scheme=scheme, seed=seed)


def orthonormalize_blocks(blocks: np.ndarray) -> np.ndarray:
    """Row-orthonormalize a batch of blocks with modified Gram-Schmidt.

    ``blocks`` has shape (nb, b, d) with b <= d; rows of random Gaussian
    blocks are almost surely independent, so the procedure is well posed.
    Two MGS passes push pairwise row dots to machine precision.
    """
    nb, b, d = blocks.shape
    if b > d:
        raise ValueError(f"cannot orthonormalize {b} rows in dimension {d}")
    q = np.array(blocks, dtype=np.float64, copy=True)
    for _ in range(2):
        for i in range(b):
            v = q[:, i, :]
            for j in range(i):
                proj = np.einsum("nd,nd->n", q[:, j, :], v)
                v = v - proj[:, None] * q[:, j, :]
            norms = np.linalg.norm(v, axis=1)
            if np.any(norms == 0.0):
                raise ValueError("degenerate Gaussian block during orthonormalization")
            q[:, i, :] = v / norms[:, None]
    return q


def _block_orthogonal_rows(gaussian_rows: np.ndarray, lengths: np.ndarray, d: int) -> np.ndarray:
    """Turn iid Gaussian rows into block-orthogonal rows with chi(d) lengths."""
    m = gaussian_rows.shape[0]
    out = np.empty_like(gaussian_rows)
    n_full = m // d
    if n_full:
        full = gaussian_rows[: n_full * d].reshape(n_full, d, d)
        out[: n_full * d] = orthonormalize_blocks(full).reshape(n_full * d, d)
    rem = m - n_full * d
    if rem:
        tail = gaussian_rows[n_full * d :].reshape(1, rem, d)
        out[n_full * d :] = orthonormalize_blocks(tail).reshape(rem, d)
    return out * lengths[:, None]


def sample_ensemble(d: int, m: int, scheme: str, seed: Seed) -> ProjectionEnsemble:
    """Draw a projection ensemble.

    Draw order is fixed and documented: m*d standard normals first (the iid
    rows), then — for the block-orthogonal scheme only — m chi-square(d)
    variates for the row lengths.  Identical inputs therefore give
    bit-identical ensembles on every run and under any worker count.
    """
    if d < 1 or m < 1:
        raise ValueError(f"d and m must be >= 1, got d={d}, m={m}")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    rng = generator(seed)
    rows = rng.standard_normal((m, d))
    if scheme == "block-orthogonal":
        lengths = np.sqrt(rng.chisquare(d, size=m))
        rows = _block_orthogonal_rows(rows, lengths, d)
    return ProjectionEnsemble(rows=rows, d=d, m=m, scheme=scheme, seed=seed)
