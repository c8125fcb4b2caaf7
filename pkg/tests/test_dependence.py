import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import assert_close_rel, central_difference
from ddr.dependence import (
    dcorr,
    dcov_gradient,
    dcov_u_fast,
    dcov_u_naive,
    dcov_value_and_gradient,
    pairwise_distances,
)
from ddr.errors import InsufficientSampleError


class TestPairwiseDistances:
    def test_three_four_five(self):
        d = pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0]]))
        assert d.d[0, 1] == pytest.approx(5.0)
        assert d.d[1, 0] == pytest.approx(5.0)

    def test_identical_rows(self):
        d = pairwise_distances(np.ones((4, 3)))
        np.testing.assert_array_equal(d.d, np.zeros((4, 4)))

    def test_single_row(self):
        d = pairwise_distances(np.array([[1.0, 2.0]]))
        assert d.n == 1
        np.testing.assert_array_equal(d.d, np.zeros((1, 1)))

    def test_metric_properties_on_random_sample(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((12, 3))
        d = pairwise_distances(x).d
        np.testing.assert_allclose(d, d.T)
        assert np.all(np.diag(d) == 0.0)
        assert np.all(d >= 0.0)
        for i, j, k in rng.integers(0, 12, size=(50, 3)):
            assert d[i, k] <= d[i, j] + d[j, k] + 1e-12


class TestNaiveEstimator:
    def test_constant_response_is_exactly_zero(self):
        rng = np.random.default_rng(1)
        z = rng.standard_normal((6, 2))
        y = np.full((6, 1), 3.7)
        assert dcov_u_naive(z, y) == 0.0

    def test_constant_embedding_is_exactly_zero(self):
        rng = np.random.default_rng(2)
        y = rng.standard_normal((6, 1))
        assert dcov_u_naive(np.ones((6, 2)), y) == 0.0

    def test_matches_fast_on_seeded_instance(self):
        rng = np.random.default_rng(3)
        z = rng.standard_normal((6, 2))
        y = z[:, :1]
        assert dcov_u_naive(z, y) == pytest.approx(dcov_u_fast(z, y), abs=1e-12)

    def test_rejects_small_samples(self):
        with pytest.raises(InsufficientSampleError):
            dcov_u_naive(np.zeros((3, 1)), np.zeros((3, 1)))


class TestFastEstimator:
    def test_equivalence_oracle_100_instances(self):
        """The O(n^2) form must match the 4-subset enumeration exactly."""
        rng = np.random.default_rng(1234)
        for _ in range(100):
            n = int(rng.integers(5, 11))
            d = int(rng.integers(1, 4))
            q = int(rng.integers(1, 4))
            z = rng.standard_normal((n, d))
            y = rng.standard_normal((n, q))
            naive = dcov_u_naive(z, y)
            fast = dcov_u_fast(z, y)
            assert abs(fast - naive) <= 1e-9 * (1.0 + abs(naive))

    def test_constant_response_zero(self):
        rng = np.random.default_rng(4)
        assert dcov_u_fast(rng.standard_normal((8, 2)), np.zeros((8, 1))) == 0.0

    def test_rejects_small_samples(self):
        with pytest.raises(InsufficientSampleError):
            dcov_u_fast(np.zeros((2, 1)), np.zeros((2, 1)))

    @given(scale=st.floats(-7.0, 7.0, allow_nan=False))
    @settings(max_examples=40, deadline=None)
    def test_homogeneity(self, scale):
        rng = np.random.default_rng(5)
        z = rng.standard_normal((10, 2))
        y = rng.standard_normal((10, 1))
        base = dcov_u_fast(z, y)
        assert dcov_u_fast(scale * z, y) == pytest.approx(
            abs(scale) * base, rel=1e-12, abs=1e-12
        )

    @given(
        shift=st.lists(
            st.floats(-50.0, 50.0, allow_nan=False), min_size=2, max_size=2
        )
    )
    @settings(max_examples=40, deadline=None)
    def test_translation_invariance(self, shift):
        rng = np.random.default_rng(6)
        z = rng.standard_normal((9, 2))
        y = rng.standard_normal((9, 1))
        base = dcov_u_fast(z, y)
        assert dcov_u_fast(z + np.array(shift), y) == pytest.approx(
            base, rel=1e-9, abs=1e-12
        )

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        z = rng.standard_normal((11, 3))
        y = rng.standard_normal((11, 2))
        assert dcov_u_fast(z, y) == pytest.approx(dcov_u_fast(y, z), rel=1e-12)

    def test_unbiased_at_tiny_n(self):
        """Monte-Carlo mean over independent draws at n=5 is within 3 SE of 0."""
        rng = np.random.default_rng(8)
        reps = 10_000
        vals = np.empty(reps)
        for i in range(reps):
            vals[i] = dcov_u_fast(
                rng.standard_normal((5, 1)), rng.standard_normal((5, 1))
            )
        se = vals.std(ddof=1) / np.sqrt(reps)
        assert abs(vals.mean()) <= 3.0 * se


class TestGradient:
    def test_constant_response_zero_gradient(self):
        rng = np.random.default_rng(9)
        z = rng.standard_normal((8, 2))
        grad = dcov_gradient(z, np.full((8, 1), 2.0))
        np.testing.assert_array_equal(grad, np.zeros_like(z))

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(10)
        z = rng.standard_normal((12, 2))
        y = rng.standard_normal((12, 1))
        grad = dcov_gradient(z, y)
        fd = central_difference(lambda zz: dcov_u_fast(zz, y), z)
        assert_close_rel(grad, fd, 1e-5, "dcov gradient")

    def test_duplicated_rows_keep_gradient_finite(self):
        rng = np.random.default_rng(11)
        z = rng.standard_normal((8, 2))
        z[3] = z[5]
        y = rng.standard_normal((8, 1))
        value, grad = dcov_value_and_gradient(z, y)
        assert np.isfinite(value)
        assert np.isfinite(grad).all()

    def test_value_agrees_with_fast(self):
        rng = np.random.default_rng(12)
        z = rng.standard_normal((10, 3))
        y = rng.standard_normal((10, 2))
        value, _ = dcov_value_and_gradient(z, y)
        assert value == pytest.approx(dcov_u_fast(z, y), rel=1e-12)


class TestDcorr:
    def test_perfect_dependence(self):
        rng = np.random.default_rng(13)
        z = rng.standard_normal((20, 2))
        assert dcorr(z, z) == pytest.approx(1.0)

    def test_constant_response_convention(self):
        rng = np.random.default_rng(14)
        assert dcorr(rng.standard_normal((10, 1)), np.ones((10, 1))) == 0.0

    def test_independent_samples_near_zero(self):
        rng = np.random.default_rng(15)
        z = rng.standard_normal((2000, 1))
        y = rng.standard_normal((2000, 1))
        assert abs(dcorr(z, y)) <= 0.05

    def test_clamped_to_unit_interval(self):
        rng = np.random.default_rng(16)
        z = rng.standard_normal((30, 1))
        assert -1.0 <= dcorr(z, -z) <= 1.0
