"""Mixture-of-latent-space model for edge probabilities and likelihoods.

Each mixture component h carries a latent position matrix X of shape
(V, R).  The edge parameter matrix is an elementwise link applied to the
Gram matrix X @ X.T: the logistic link pairs with the binomial edge-weight
family, the exponential link with the Poisson family.  Those pairings are
fixed; mixing them is a validation error.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, gammaln, xlog1py, xlogy

FAMILY_LINK = {"binomial": "logit", "poisson": "exp"}

# Logistic-link probabilities are clipped to this open interval so the
# Bernoulli/binomial log-likelihood stays finite for saturated Gram values.
PROB_EPS = 1e-12


@dataclass(frozen=True)
class Hyperparams:
    """Model-level constants shared by the sampler and the tests.

    ``alpha=None`` resolves to 1/n_clusters, the symmetric Dirichlet
    concentration used throughout.  ``entity_mixing_scale`` multiplies the
    population weights in the Dirichlet prior of per-entity mixing vectors
    (mixed-membership variant only).
    """

    n_clusters: int = 15
    latent_dim: int = 10
    alpha: float | None = None
    prior_h1: float = 0.5
    family: str = "binomial"
    entity_mixing_scale: float = 1.0

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be a positive integer")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be a positive integer")
        if self.alpha is None:
            object.__setattr__(self, "alpha", 1.0 / self.n_clusters)
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.prior_h1 < 1:
            raise ValueError("prior_h1 must lie strictly between 0 and 1")
        if self.family not in FAMILY_LINK:
            raise ValueError(
                f"family must be one of {sorted(FAMILY_LINK)}, got {self.family!r}"
            )
        if not self.entity_mixing_scale > 0:
            raise ValueError("entity_mixing_scale must be positive")

    @property
    def link(self) -> str:
        return FAMILY_LINK[self.family]

    def with_family(self, family: str) -> "Hyperparams":
        return replace(self, family=family)


def compute_theta(positions: np.ndarray, link: str) -> np.ndarray:
    """Edge parameters from latent positions: link applied to X @ X.T.

    The logistic link saturates smoothly; its output is clipped into
    [PROB_EPS, 1 - PROB_EPS].  The exponential link has no such cap, so a
    Gram value large enough to overflow exp raises rather than silently
    producing inf rates.
    """
    positions = np.asarray(positions, dtype=np.float64)
    gram = positions @ positions.T
    if link == "logit":
        return np.clip(expit(gram), PROB_EPS, 1.0 - PROB_EPS)
    if link == "exp":
        if np.any(gram > 700.0):
            raise FloatingPointError(
                "latent positions give exp-link rates beyond float range"
            )
        return np.exp(gram)
    raise ValueError(f"unknown link: {link!r}")


def theta_of_gram(gram: np.ndarray, link: str) -> np.ndarray:
    """Same link application for a precomputed Gram value array."""
    if link == "logit":
        return np.clip(expit(gram), PROB_EPS, 1.0 - PROB_EPS)
    if link == "exp":
        if np.any(np.asarray(gram) > 700.0):
            raise FloatingPointError(
                "latent positions give exp-link rates beyond float range"
            )
        return np.exp(gram)
    raise ValueError(f"unknown link: {link!r}")


def edge_log_likelihood(
    weights: np.ndarray,
    theta: np.ndarray,
    family: str,
    trials: np.ndarray | None = None,
) -> np.ndarray:
    """Per-edge log-likelihood of edge weights under edge parameters.

    Binomial includes the log C(n, k) normalizer; Poisson includes the
    -log k! term, so values are comparable across families.  Shapes
    broadcast; ``trials`` is required for the binomial family.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if family == "binomial":
        if trials is None:
            raise ValueError("binomial likelihood requires per-edge trial counts")
        trials = np.asarray(trials, dtype=np.float64)
        theta = np.clip(theta, PROB_EPS, 1.0 - PROB_EPS)
        return (
            gammaln(trials + 1.0)
            - gammaln(weights + 1.0)
            - gammaln(trials - weights + 1.0)
            + xlogy(weights, theta)
            + xlog1py(trials - weights, -theta)
        )
    if family == "poisson":
        return xlogy(weights, theta) - theta - gammaln(weights + 1.0)
    raise ValueError(f"family must be one of {sorted(FAMILY_LINK)}, got {family!r}")


def graph_log_likelihood(
    edge_weights: np.ndarray,
    theta_edges: np.ndarray,
    family: str,
    trials: np.ndarray | None = None,
) -> np.ndarray:
    """Total log-likelihood over the trailing edge axis."""
    return edge_log_likelihood(edge_weights, theta_edges, family, trials).sum(axis=-1)


@dataclass
class ClusterParams:
    """Mutable per-cluster latent positions with cached edge parameters.

    ``positions`` has shape (H, V, R).  ``theta_edges`` caches the linked
    Gram values on the canonical edge vector, refreshed lazily per cluster
    via a version counter so sweeps that only move a few clusters do not
    pay for relinking all of them.
    """

    positions: np.ndarray
    link: str
    _theta: np.ndarray = field(init=False, repr=False)
    _version: np.ndarray = field(init=False, repr=False)
    _cached_version: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.positions.ndim != 3:
            raise ValueError("positions must have shape (n_clusters, V, R)")
        H, V, _ = self.positions.shape
        from .data import n_edges

        self._theta = np.zeros((H, n_edges(V)))
        self._version = np.ones(H, dtype=np.int64)
        self._cached_version = np.zeros(H, dtype=np.int64)

    @property
    def n_clusters(self) -> int:
        return self.positions.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[1]

    def mark_dirty(self, cluster: int) -> None:
        self._version[cluster] += 1

    def theta_edges(self, cluster: int) -> np.ndarray:
        """Edge-vector parameters for one cluster, recomputed if stale."""
        if self._cached_version[cluster] != self._version[cluster]:
            from .data import edge_pairs

            i, j = edge_pairs(self.n_nodes)
            X = self.positions[cluster]
            gram = np.einsum("er,er->e", X[i], X[j])
            self._theta[cluster] = theta_of_gram(gram, self.link)
            self._cached_version[cluster] = self._version[cluster]
        return self._theta[cluster]

    def all_theta_edges(self) -> np.ndarray:
        """(H, L) matrix of edge parameters, refreshing every stale row."""
        for h in range(self.n_clusters):
            self.theta_edges(h)
        return self._theta

    def copy(self) -> "ClusterParams":
        out = ClusterParams(self.positions.copy(), self.link)
        out._theta = self._theta.copy()
        out._version = self._version.copy()
        out._cached_version = self._cached_version.copy()
        return out
