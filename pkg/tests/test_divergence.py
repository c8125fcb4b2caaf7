import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddr.divergence import (
    LOG2,
    divergence_by_name,
    fdiv_eval,
    logistic_ratio_loss,
    sigmoid,
    softplus,
    variational_divergence,
)
from ddr.errors import DimensionError, DomainError

ALL = [divergence_by_name(k) for k in ("kl", "js", "chi2")]


class TestTableValues:
    def test_kl_generator_at_one(self):
        kl = divergence_by_name("kl")
        assert fdiv_eval(kl, "f", 1.0) == 0.0

    def test_kl_conjugate_at_one(self):
        kl = divergence_by_name("kl")
        assert fdiv_eval(kl, "f_star", 1.0) == pytest.approx(1.0)

    def test_chi2_derivative_at_minimum(self):
        chi2 = divergence_by_name("chi2")
        assert fdiv_eval(chi2, "f_prime", 1.0) == 0.0

    def test_point_values(self):
        kl, js, chi2 = ALL[0], ALL[1], ALL[2]
        assert fdiv_eval(kl, "f", math.e) == pytest.approx(math.e)
        assert fdiv_eval(kl, "f_prime", math.e) == pytest.approx(2.0)
        assert fdiv_eval(chi2, "f", 3.0) == pytest.approx(4.0)
        assert fdiv_eval(chi2, "f_star", 2.0) == pytest.approx(3.0)
        assert fdiv_eval(js, "f", 1.0) == pytest.approx(0.0)
        assert fdiv_eval(js, "f_star", 0.0) == pytest.approx(0.0)

    def test_generators_vanish_at_one(self):
        for spec in ALL:
            assert fdiv_eval(spec, "f", 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_generators_convex_on_grid(self):
        xs = np.linspace(0.05, 5.0, 60)
        for spec in ALL:
            vals = spec.f(xs)
            mid = spec.f((xs[:-1] + xs[1:]) / 2.0)
            assert np.all(mid <= (vals[:-1] + vals[1:]) / 2.0 + 1e-12)

    def test_js_conjugate_domain_error(self):
        js = divergence_by_name("js")
        with pytest.raises(DomainError):
            fdiv_eval(js, "f_star", LOG2)
        with pytest.raises(DomainError):
            fdiv_eval(js, "f_star", 1.0)

    def test_kl_ratio_domain_error(self):
        kl = divergence_by_name("kl")
        with pytest.raises(DomainError):
            fdiv_eval(kl, "f", -1.0)

    def test_unknown_name(self):
        with pytest.raises(DomainError):
            divergence_by_name("hellinger")


class TestFenchelYoung:
    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_equality_at_conjugate_pair(self, spec):
        """f*(f'(x)) == x f'(x) - f(x) on a grid (tight Fenchel-Young)."""
        for x in np.linspace(0.1, 4.0, 40):
            lhs = spec.f_star(spec.f_prime(x))
            rhs = x * spec.f_prime(x) - spec.f(x)
            assert lhs == pytest.approx(rhs, abs=1e-12)

    @pytest.mark.parametrize("spec", ALL, ids=lambda s: s.kind)
    def test_inequality_off_the_pair(self, spec):
        rng = np.random.default_rng(0)
        for _ in range(200):
            x = rng.uniform(0.1, 4.0)
            t = spec.f_prime(rng.uniform(0.1, 4.0))
            assert spec.f_star(t) >= t * x - spec.f(x) - 1e-12


class TestVariationalDivergence:
    def test_kl_optimum_at_equal_distributions(self):
        kl = divergence_by_name("kl")
        d = np.full(16, kl.f_prime(1.0))
        assert variational_divergence(kl, d, d) == pytest.approx(0.0)

    def test_chi2_zero_discriminator(self):
        chi2 = divergence_by_name("chi2")
        z = np.zeros(10)
        assert variational_divergence(chi2, z, z) == 0.0

    def test_length_mismatch(self):
        kl = divergence_by_name("kl")
        with pytest.raises(DimensionError):
            variational_divergence(kl, np.zeros(3), np.zeros(4))

    def test_star_domain_enforced(self):
        js = divergence_by_name("js")
        with pytest.raises(DomainError):
            variational_divergence(js, np.zeros(4), np.array([0.0, 0.0, 0.0, 1.0]))

    def test_gaussian_kl_oracle(self):
        """With the analytic optimal discriminator, the estimate recovers
        the closed-form KL(N(1,1) || N(0,1)) = 1/2 within Monte-Carlo error."""
        kl = divergence_by_name("kl")
        rng = np.random.default_rng(99)
        n = 200_000
        z = rng.standard_normal(n) + 1.0
        w = rng.standard_normal(n)
        log_ratio = lambda t: t - 0.5  # log r(t) = m t - m^2/2 with m = 1
        d_on_z = kl.f_prime(np.exp(log_ratio(z)))
        d_on_w = kl.f_prime(np.exp(log_ratio(w)))
        est = variational_divergence(kl, d_on_z, d_on_w)
        terms_z = d_on_z
        terms_w = kl.f_star(d_on_w)
        se = math.sqrt(terms_z.var() / n + terms_w.var() / n)
        assert abs(est - 0.5) <= 3.0 * se

    def test_nonnegative_at_optimum_same_distribution(self):
        """D = f'(exact ratio) = f'(1) on identical laws -> estimate ~ 0."""
        rng = np.random.default_rng(7)
        for spec in ALL:
            d = np.full(5000, float(spec.f_prime(1.0)))
            assert variational_divergence(spec, d, d) == pytest.approx(0.0, abs=1e-12)


class TestLogisticRatioLoss:
    def test_symmetric_point(self):
        loss, _, _ = logistic_ratio_loss(np.zeros(8), np.zeros(8))
        assert loss == pytest.approx(2.0 * math.log(2.0))

    def test_gradients_at_zero(self):
        n = 5
        _, gz, gw = logistic_ratio_loss(np.zeros(n), np.zeros(n))
        np.testing.assert_allclose(gz, 0.5 / n)
        np.testing.assert_allclose(gw, -0.5 / n)

    def test_stable_at_extreme_logits(self):
        loss, gz, gw = logistic_ratio_loss(np.array([700.0]), np.array([-700.0]))
        assert np.isfinite(loss)
        assert np.isfinite(gz).all() and np.isfinite(gw).all()

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(3)
        dz = rng.standard_normal(6)
        dw = rng.standard_normal(6)
        _, gz, gw = logistic_ratio_loss(dz, dw)
        h = 1e-6
        for i in range(6):
            up = dz.copy()
            up[i] += h
            down = dz.copy()
            down[i] -= h
            fd = (logistic_ratio_loss(up, dw)[0] - logistic_ratio_loss(down, dw)[0]) / (2 * h)
            assert gz[i] == pytest.approx(fd, rel=1e-6, abs=1e-10)

    @given(
        a=st.floats(-30, 30, allow_nan=False),
        b=st.floats(-30, 30, allow_nan=False),
    )
    @settings(max_examples=60, deadline=None)
    def test_convex_in_discriminator_values(self, a, b):
        mid, _, _ = logistic_ratio_loss(
            np.array([(a + b) / 2.0]), np.array([(a + b) / 2.0])
        )
        la, _, _ = logistic_ratio_loss(np.array([a]), np.array([a]))
        lb, _, _ = logistic_ratio_loss(np.array([b]), np.array([b]))
        assert mid <= (la + lb) / 2.0 + 1e-12

    def test_population_minimizer_is_negative_log_ratio(self):
        """On the analytic two-Gaussian case, D = -log r beats D + eps."""
        rng = np.random.default_rng(11)
        n = 100_000
        m = 1.5
        z = rng.standard_normal(n) + m  # mu = N(m, 1)
        w = rng.standard_normal(n)  # gamma = N(0, 1)
        d_star_z = -(m * z - m * m / 2.0)
        d_star_w = -(m * w - m * m / 2.0)
        base, _, _ = logistic_ratio_loss(d_star_z, d_star_w)
        for eps in (-0.1, 0.1):
            bumped, _, _ = logistic_ratio_loss(d_star_z + eps, d_star_w + eps)
            assert base <= bumped


class TestStableHelpers:
    def test_softplus_matches_naive_in_safe_range(self):
        t = np.linspace(-30, 30, 101)
        np.testing.assert_allclose(softplus(t), np.log1p(np.exp(t)), rtol=1e-12)

    def test_sigmoid_matches_naive_in_safe_range(self):
        t = np.linspace(-30, 30, 101)
        np.testing.assert_allclose(sigmoid(t), 1 / (1 + np.exp(-t)), rtol=1e-12)
