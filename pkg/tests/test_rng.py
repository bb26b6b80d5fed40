"""Seed derivation, generators, and projection-ensemble draws.

Everything downstream (estimator trials, the benchmark harness, the CLI's
byte-identity guarantee) rests on two contracts checked here: derive_seed is
a pure function of (root seed, label), and sample_ensemble is a pure function
of (d, m, scheme, seed).
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridrf.rng import (
    SCHEMES,
    ProjectionEnsemble,
    Seed,
    derive_seed,
    generator,
    orthonormalize_blocks,
    sample_ensemble,
)


class TestSeed:
    def test_rejects_out_of_range_values(self):
        with pytest.raises(ValueError):
            Seed(-1)
        with pytest.raises(ValueError):
            Seed(2**64)

    def test_boundary_values_accepted(self):
        assert Seed(0).value == 0
        assert Seed(2**64 - 1).value == 2**64 - 1

    def test_is_hashable_and_frozen(self):
        s = Seed(7)
        assert hash(s) == hash(Seed(7))
        with pytest.raises(AttributeError):
            s.value = 8


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(Seed(1), "alpha") == derive_seed(Seed(1), "alpha")

    def test_distinct_labels_distinct_streams(self):
        seen = {derive_seed(Seed(1), f"stream-{i}").value for i in range(1000)}
        assert len(seen) == 1000

    def test_distinct_roots_distinct_streams(self):
        a = derive_seed(Seed(1), "x")
        b = derive_seed(Seed(2), "x")
        assert a != b

    def test_chains_compose(self):
        s = derive_seed(derive_seed(Seed(3), "outer"), "inner")
        assert isinstance(s, Seed)

    @given(st.integers(min_value=0, max_value=2**64 - 1), st.text(max_size=64))
    @settings(max_examples=200, deadline=None)
    def test_result_always_in_range(self, value, label):
        out = derive_seed(Seed(value), label)
        assert 0 <= out.value <= 2**64 - 1


class TestGenerator:
    def test_same_seed_same_stream(self):
        a = generator(Seed(42)).standard_normal(100)
        b = generator(Seed(42)).standard_normal(100)
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self):
        a = generator(Seed(42)).standard_normal(100)
        b = generator(Seed(43)).standard_normal(100)
        assert not np.array_equal(a, b)


class TestProjectionEnsemble:
    def test_rows_are_read_only(self):
        ens = sample_ensemble(4, 3, "iid", Seed(0))
        with pytest.raises(ValueError):
            ens.rows[0, 0] = 1.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ProjectionEnsemble(rows=np.zeros((2, 3)), d=3, m=3, scheme="iid", seed=Seed(0))

    def test_nonfinite_rows_rejected(self):
        rows = np.array([[1.0, np.inf]])
        with pytest.raises(ValueError):
            ProjectionEnsemble.from_rows(rows, Seed(0))

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ValueError):
            ProjectionEnsemble.from_rows(np.zeros((1, 2)), Seed(0), scheme="sobol")

    def test_from_rows_infers_shape(self):
        ens = ProjectionEnsemble.from_rows(np.ones((5, 2)), Seed(9))
        assert (ens.m, ens.d) == (5, 2)
        assert ens.seed == Seed(9)


class TestSampleEnsemble:
    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_shape_and_determinism(self, scheme):
        a = sample_ensemble(6, 10, scheme, Seed(5))
        b = sample_ensemble(6, 10, scheme, Seed(5))
        assert a.rows.shape == (10, 6)
        np.testing.assert_array_equal(a.rows, b.rows)

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ValueError):
            sample_ensemble(4, 4, "latin", Seed(0))

    def test_iid_entries_look_standard_normal(self):
        # fixed seed; KS against the exact marginal
        from scipy import stats

        ens = sample_ensemble(16, 4000, "iid", Seed(77))
        _, p = stats.kstest(ens.rows.ravel(), "norm")
        assert p > 0.01

    def test_block_orthogonal_blocks_are_orthogonal(self):
        d = 8
        ens = sample_ensemble(d, 20, "block-orthogonal", Seed(3))
        unit = ens.rows / np.linalg.norm(ens.rows, axis=1, keepdims=True)
        for start in range(0, 20, d):
            block = unit[start : start + d]
            gram = block @ block.T
            np.testing.assert_allclose(gram, np.eye(len(block)), atol=1e-10)

    def test_block_orthogonal_row_lengths_are_chi(self):
        # squared row lengths must follow chi-square(d), the iid marginal
        from scipy import stats

        d = 6
        ens = sample_ensemble(d, 3000, "block-orthogonal", Seed(8))
        sq = np.sum(ens.rows**2, axis=1)
        _, p = stats.kstest(sq, "chi2", args=(d,))
        assert p > 0.01

    @given(st.integers(min_value=2, max_value=12), st.integers(min_value=1, max_value=30))
    @settings(max_examples=40, deadline=None)
    def test_any_geometry_round_trips(self, d, m):
        ens = sample_ensemble(d, m, "block-orthogonal", Seed(1))
        assert ens.rows.shape == (m, d)
        assert np.all(np.isfinite(ens.rows))


class TestOrthonormalizeBlocks:
    def test_rows_become_orthonormal(self):
        gen = generator(Seed(12))
        blocks = gen.standard_normal((5, 4, 7))
        q = orthonormalize_blocks(blocks)
        for b in q:
            np.testing.assert_allclose(b @ b.T, np.eye(4), atol=1e-12)

    def test_more_rows_than_dim_rejected(self):
        with pytest.raises(ValueError):
            orthonormalize_blocks(np.zeros((1, 5, 4)))
