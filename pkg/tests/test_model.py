import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.special import expit

from netpop.model import (
    FAMILY_LINK,
    PROB_EPS,
    ClusterParams,
    Hyperparams,
    compute_theta,
    edge_log_likelihood,
    graph_log_likelihood,
    theta_of_gram,
)


class TestHyperparams:
    def test_defaults(self):
        hp = Hyperparams()
        assert hp.n_clusters == 15
        assert hp.latent_dim == 10
        assert hp.family == "binomial"
        assert hp.link == "logit"
        assert hp.alpha == pytest.approx(1 / 15)
        assert hp.prior_h1 == 0.5

    def test_alpha_tracks_cluster_count(self):
        assert Hyperparams(n_clusters=4).alpha == pytest.approx(0.25)
        assert Hyperparams(n_clusters=4, alpha=2.0).alpha == 2.0

    def test_family_link_pairing_is_fixed(self):
        assert FAMILY_LINK == {"binomial": "logit", "poisson": "exp"}
        assert Hyperparams(family="poisson").link == "exp"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_clusters": 0},
            {"latent_dim": 0},
            {"alpha": 0.0},
            {"alpha": -1.0},
            {"prior_h1": 0.0},
            {"prior_h1": 1.0},
            {"family": "gaussian"},
            {"entity_mixing_scale": 0.0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            Hyperparams(**kwargs)

    def test_with_family(self):
        hp = Hyperparams(n_clusters=3).with_family("poisson")
        assert hp.family == "poisson"
        assert hp.n_clusters == 3


class TestComputeTheta:
    def test_logit_matches_expit_of_gram(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((4, 2))
        np.testing.assert_allclose(compute_theta(X, "logit"), expit(X @ X.T))

    def test_logit_clipped_away_from_bounds(self):
        theta = theta_of_gram(np.array([-1e4, 1e4]), "logit")
        assert theta[0] == PROB_EPS
        assert theta[1] == 1 - PROB_EPS

    def test_exp_link(self):
        np.testing.assert_allclose(
            theta_of_gram(np.array([0.0, 1.0]), "exp"), [1.0, np.e]
        )

    def test_exp_overflow_raises(self):
        with pytest.raises(FloatingPointError):
            theta_of_gram(np.array([800.0]), "exp")
        with pytest.raises(FloatingPointError):
            compute_theta(np.full((2, 1), 30.0), "exp")

    def test_unknown_link_rejected(self):
        with pytest.raises(ValueError, match="link"):
            theta_of_gram(np.array([0.0]), "probit")


class TestEdgeLogLikelihood:
    @given(st.integers(0, 12), st.integers(0, 8), st.floats(0.01, 0.99))
    @settings(max_examples=60, deadline=None)
    def test_binomial_matches_scipy(self, trials, successes, theta):
        successes = min(successes, trials)
        got = edge_log_likelihood(
            np.array([float(successes)]),
            np.array([theta]),
            "binomial",
            trials=np.array([float(trials)]),
        )
        want = stats.binom.logpmf(successes, trials, theta)
        np.testing.assert_allclose(got[0], want, rtol=1e-12, atol=1e-12)

    @given(st.integers(0, 20), st.floats(0.05, 30.0))
    @settings(max_examples=60, deadline=None)
    def test_poisson_matches_scipy(self, count, rate):
        got = edge_log_likelihood(np.array([float(count)]), np.array([rate]), "poisson")
        want = stats.poisson.logpmf(count, rate)
        np.testing.assert_allclose(got[0], want, rtol=1e-12, atol=1e-12)

    def test_binomial_requires_trials(self):
        with pytest.raises(ValueError, match="trial"):
            edge_log_likelihood(np.array([1.0]), np.array([0.4]), "binomial")

    def test_unknown_family_rejected(self):
        with pytest.raises(ValueError, match="family"):
            edge_log_likelihood(np.array([1.0]), np.array([0.4]), "gaussian")

    def test_graph_log_likelihood_sums_edges(self):
        w = np.array([1.0, 0.0, 2.0])
        n = np.array([2.0, 1.0, 3.0])
        theta = np.array([0.3, 0.6, 0.5])
        total = graph_log_likelihood(w, theta, "binomial", trials=n)
        parts = edge_log_likelihood(w, theta, "binomial", trials=n)
        assert total == pytest.approx(parts.sum())


class TestClusterParams:
    def make(self, seed=0, V=4, R=2, H=3, link="logit"):
        rng = np.random.default_rng(seed)
        return ClusterParams(rng.standard_normal((H, V, R)), link)

    def test_theta_matches_direct_computation(self):
        cp = self.make()
        X = cp.positions[1]
        gram = X @ X.T
        i, j = np.tril_indices(4, -1)
        np.testing.assert_allclose(cp.theta_edges(1), theta_of_gram(gram[i, j], "logit"))

    def test_cache_invalidation_on_mark_dirty(self):
        cp = self.make()
        before = cp.theta_edges(0).copy()
        cp.positions[0][:] = 0.0
        np.testing.assert_array_equal(cp.theta_edges(0), before)  # stale by design
        cp.mark_dirty(0)
        np.testing.assert_allclose(cp.theta_edges(0), 0.5)

    def test_all_theta_edges_shape(self):
        cp = self.make(V=5, H=2)
        assert cp.all_theta_edges().shape == (2, 10)

    def test_copy_is_independent(self):
        cp = self.make()
        dup = cp.copy()
        dup.positions[0][:] = 0.0
        dup.mark_dirty(0)
        assert not np.allclose(cp.theta_edges(0), dup.theta_edges(0))
