"""Estimator-style front end over the sampler and tests.

GraphPopulationTester follows the familiar fit/predict surface: construct
with hyperparameters, ``fit`` on a PopulationDataset (or a dataset
directory path), then query the three test reports.  Parameters are plain
constructor attributes so ``get_params`` / ``set_params`` and ``clone``
work as usual.
"""

from __future__ import annotations

from pathlib import Path

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .data import PopulationDataset, load_dataset
from .hypotheses import (
    EdgeTestResult,
    EntityTestResult,
    PopulationTestResult,
    edge_statistic,
    entity_tests,
    population_test,
)
from .model import Hyperparams
from .sampler import McmcConfig, Trace, run_chain


def as_dataset(data) -> PopulationDataset:
    """Accept a PopulationDataset or a dataset directory path."""
    if isinstance(data, PopulationDataset):
        return data
    if isinstance(data, (str, Path)):
        return load_dataset(data)
    raise TypeError(
        "expected a PopulationDataset or a dataset directory path, "
        f"got {type(data).__name__}"
    )


class GraphPopulationTester(BaseEstimator):
    """Two-sample tester for populations of weighted graphs.

    Fits the latent-space mixture by Gibbs sampling and exposes the
    population-, entity-, and edge-level test reports computed from the
    retained trace.

    Parameters mirror the model and chain knobs: ``variant`` picks the
    fixed or mixed-membership mixing structure, ``family`` the edge-weight
    distribution (binomial needs node counts on every graph), and
    ``random_state`` seeds the whole chain.
    """

    def __init__(
        self,
        n_clusters: int = 15,
        latent_dim: int = 10,
        alpha: float | None = None,
        prior_h1: float = 0.5,
        family: str = "binomial",
        variant: str = "fixed",
        n_samples: int = 1300,
        burn_in: int = 200,
        thin: int = 10,
        entity_mixing_scale: float = 1.0,
        random_state: int = 0,
    ):
        self.n_clusters = n_clusters
        self.latent_dim = latent_dim
        self.alpha = alpha
        self.prior_h1 = prior_h1
        self.family = family
        self.variant = variant
        self.n_samples = n_samples
        self.burn_in = burn_in
        self.thin = thin
        self.entity_mixing_scale = entity_mixing_scale
        self.random_state = random_state

    def _hyperparams(self) -> Hyperparams:
        return Hyperparams(
            n_clusters=self.n_clusters,
            latent_dim=self.latent_dim,
            alpha=self.alpha,
            prior_h1=self.prior_h1,
            family=self.family,
            entity_mixing_scale=self.entity_mixing_scale,
        )

    def _mcmc_config(self) -> McmcConfig:
        return McmcConfig(
            n_samples=self.n_samples,
            burn_in=self.burn_in,
            seed=self.random_state,
            model_variant=self.variant,
            thin=self.thin,
        )

    def fit(self, X, y=None, out_dir=None) -> "GraphPopulationTester":
        """Run the chain on a dataset; y is ignored (labels live in X)."""
        dataset = as_dataset(X)
        self.trace_ = run_chain(dataset, self._hyperparams(), self._mcmc_config(), out_dir)
        self.n_nodes_ = dataset.n_nodes
        self.posterior_prob_h1_ = float(self.trace_.test_indicator.mean())
        return self

    def _check_fitted(self) -> Trace:
        if not hasattr(self, "trace_"):
            raise NotFittedError(
                "this GraphPopulationTester is not fitted yet; call fit first"
            )
        return self.trace_

    def population_test(self, decision_threshold: float = 0.95) -> PopulationTestResult:
        return population_test(self._check_fitted(), decision_threshold)

    def entity_tests(self, pairs=None) -> list[EntityTestResult]:
        return entity_tests(self._check_fitted(), pairs, prior_h1=self.prior_h1)

    def edge_test(self, significance: float = 0.1, squared: bool = True) -> EdgeTestResult:
        return edge_statistic(self._check_fitted(), significance=significance, squared=squared)

    def predict(self, decision_threshold: float = 0.95) -> bool:
        """True when the fitted chain rejects the shared-profile null."""
        return self.population_test(decision_threshold).reject_null
