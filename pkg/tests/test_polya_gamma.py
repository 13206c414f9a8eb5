import mpmath
import numpy as np
import pytest

from netpop.polya_gamma import pg_mean, pg_variance, sample_polya_gamma

mpmath.mp.dps = 40


def laplace_transform(b, c, t):
    """E[exp(-omega * t)] for omega ~ PG(b, c), in extended precision.

    Exponential tilting of the PG(b, 0) transform 1/cosh(sqrt(t/2))**b.
    """
    b, c, t = mpmath.mpf(b), mpmath.mpf(c), mpmath.mpc(t)
    # cosh(sqrt(x)) is entire in x, so finite differences may step into
    # slightly negative t; the imaginary part there is identically zero.
    val = (mpmath.cosh(c / 2) / mpmath.cosh(mpmath.sqrt(c * c / 4 + t / 2))) ** b
    return mpmath.re(val)


def oracle_moments(b, c):
    m1 = -mpmath.diff(lambda t: laplace_transform(b, c, t), 0, 1)
    m2 = mpmath.diff(lambda t: laplace_transform(b, c, t), 0, 2)
    return float(m1), float(m2 - m1 * m1)


class TestMomentFormulas:
    @pytest.mark.parametrize("b", [1, 3, 7.5, 50, 200])
    @pytest.mark.parametrize("c", [0.0, 1e-6, 0.1, 1.0, 3.0, 25.0])
    def test_match_laplace_oracle(self, b, c):
        mean, var = oracle_moments(b, c)
        assert pg_mean(b, c) == pytest.approx(mean, rel=1e-9)
        assert pg_variance(b, c) == pytest.approx(var, rel=1e-7)

    def test_known_tilt_free_values(self):
        # PG(1, 0) is an infinite sum of Gamma(1)/(2 pi^2 (k-1/2)^2) terms:
        # mean 1/4, variance 1/24.
        assert pg_mean(1, 0) == pytest.approx(0.25, rel=1e-12)
        assert pg_variance(1, 0) == pytest.approx(1 / 24, rel=1e-12)

    def test_mean_scales_linearly_in_b(self):
        assert pg_mean(13, 2.0) == pytest.approx(13 * pg_mean(1, 2.0), rel=1e-12)
        assert pg_variance(13, 2.0) == pytest.approx(13 * pg_variance(1, 2.0), rel=1e-12)

    def test_negative_tilt_is_symmetric(self):
        assert pg_mean(2, -1.5) == pytest.approx(pg_mean(2, 1.5), rel=1e-12)
        assert pg_variance(2, -1.5) == pytest.approx(pg_variance(2, 1.5), rel=1e-12)

    def test_huge_tilt_is_finite(self):
        assert np.isfinite(pg_mean(3, 1e4))
        assert np.isfinite(pg_variance(3, 1e4))
        assert pg_variance(3, 1e4) >= 0

    def test_array_broadcast(self):
        b = np.array([1.0, 2.0])
        c = np.array([[0.5], [1.5]])
        out = pg_mean(b, c)
        assert out.shape == (2, 2)
        assert out[1, 0] == pytest.approx(pg_mean(1, 1.5))


class TestSampler:
    N = 200_000

    @pytest.mark.parametrize("c", [0.1, 1.0, 3.0])
    def test_exact_path_mean(self, c):
        rng = np.random.default_rng(11)
        draws = sample_polya_gamma(np.ones(self.N), c, rng)
        assert abs(draws.mean() / pg_mean(1, c) - 1) < 0.01

    def test_exact_path_variance_untilted(self):
        rng = np.random.default_rng(12)
        draws = sample_polya_gamma(np.ones(self.N), 0.0, rng)
        assert abs(draws.var() / pg_variance(1, 0) - 1) < 0.03

    @pytest.mark.parametrize("b,c", [(7, 0.7), (50, 2.0)])
    def test_summed_path_moments(self, b, c):
        rng = np.random.default_rng(13)
        draws = sample_polya_gamma(np.full(60_000, float(b)), c, rng)
        assert abs(draws.mean() / pg_mean(b, c) - 1) < 0.01
        assert abs(draws.var() / pg_variance(b, c) - 1) < 0.05

    @pytest.mark.parametrize("b,c", [(51, 1.0), (200, 0.3), (1000, 4.0)])
    def test_gaussian_path_moments(self, b, c):
        rng = np.random.default_rng(14)
        draws = sample_polya_gamma(np.full(60_000, float(b)), c, rng)
        assert abs(draws.mean() / pg_mean(b, c) - 1) < 0.01
        assert abs(draws.var() / pg_variance(b, c) - 1) < 0.05

    def test_zero_b_gives_zero(self):
        rng = np.random.default_rng(0)
        out = sample_polya_gamma(np.array([0.0, 1.0, 0.0]), 0.5, rng)
        assert out[0] == 0.0 and out[2] == 0.0 and out[1] > 0.0

    def test_draws_are_positive(self):
        rng = np.random.default_rng(15)
        b = np.tile([1.0, 4.0, 80.0], 400)
        draws = sample_polya_gamma(b, 2.0, rng)
        assert np.all(draws[b > 0] > 0)

    def test_negative_b_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            sample_polya_gamma(np.array([-1.0]), 0.0, np.random.default_rng(0))

    def test_fractional_small_b_rejected(self):
        with pytest.raises(ValueError, match="integer"):
            sample_polya_gamma(np.array([2.5]), 0.0, np.random.default_rng(0))

    def test_fractional_large_b_allowed(self):
        out = sample_polya_gamma(np.array([77.5]), 0.0, np.random.default_rng(0))
        assert out[0] > 0

    def test_scalar_returns_float(self):
        out = sample_polya_gamma(1.0, 0.5, np.random.default_rng(0))
        assert isinstance(out, float)

    def test_broadcast_shape(self):
        rng = np.random.default_rng(16)
        out = sample_polya_gamma(np.ones((3, 1)), np.zeros((1, 4)), rng)
        assert out.shape == (3, 4)

    def test_determinism(self):
        a = sample_polya_gamma(np.ones(50), 1.2, np.random.default_rng(99))
        b = sample_polya_gamma(np.ones(50), 1.2, np.random.default_rng(99))
        np.testing.assert_array_equal(a, b)

    def test_tilted_draws_shrink(self):
        # Larger |c| tilts mass toward zero, so sample means must decrease.
        rng = np.random.default_rng(17)
        small = sample_polya_gamma(np.ones(40_000), 0.2, rng).mean()
        big = sample_polya_gamma(np.ones(40_000), 4.0, rng).mean()
        assert big < small
