"""Population, entity-pair, and edge-level two-sample tests.

All three tests compare two populations of graphs through the fitted
mixture: the population test asks whether the two cluster-usage profiles
come from one shared distribution, the entity test asks the same question
for a pair of entities, and the edge statistic localizes a detected
difference to individual edges.

The population and entity tests share one functional form: a Bayes factor
between "one Dirichlet-multinomial generated both count vectors" and "each
got its own", evaluated in log space via the multivariate beta function.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit, gammaln
from scipy.stats import binom, poisson

from ._util import atomic_write_text, canonical_json, format_float


def log_multivariate_beta(x: np.ndarray) -> np.ndarray:
    """log B(x) = sum_i log Gamma(x_i) - log Gamma(sum_i x_i), last axis.

    Entries are sorted before summation so the result is bit-identical
    under permutation of the inputs, which downstream posterior odds rely
    on for exact permutation invariance.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] == 0:
        raise ValueError("log_multivariate_beta needs a non-empty vector")
    if np.any(x <= 0):
        raise ValueError("log_multivariate_beta needs strictly positive entries")
    xs = np.sort(x, axis=-1)
    return gammaln(xs).sum(axis=-1) - gammaln(xs.sum(axis=-1))


def posterior_prob_h1(m1, m2, alpha, prior_h1: float = 0.5):
    """Posterior probability that two count vectors have separate profiles.

    m1 and m2 are per-cluster assignment counts for the two groups, alpha
    the Dirichlet concentration vector.  Under the null one Dirichlet
    generated both; under the alternative each group has its own.  The
    marginal-likelihood ratio reduces to multivariate beta functions:

        odds = B(alpha + m1) B(alpha + m2) / (B(alpha) B(alpha + m1 + m2))

    and the returned value is expit(log odds + log prior odds).  Broadcasts
    over leading axes; the cluster axis is last.
    """
    m1 = np.asarray(m1, dtype=np.float64)
    m2 = np.asarray(m2, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if m1.shape[-1] != m2.shape[-1] or m1.shape[-1] != alpha.shape[-1]:
        raise ValueError("count vectors and alpha must have equal lengths")
    if np.any(m1 < 0) or np.any(m2 < 0):
        raise ValueError("counts must be non-negative")
    if not 0 < prior_h1 < 1:
        raise ValueError("prior_h1 must lie strictly between 0 and 1")
    log_alt = (
        log_multivariate_beta(alpha + m1)
        + log_multivariate_beta(alpha + m2)
        - log_multivariate_beta(alpha)
    )
    # m1 + m2 first: float addition commutes, so swapping the two count
    # vectors gives a bit-identical result.
    log_null = log_multivariate_beta(alpha + (m1 + m2))
    log_prior_odds = np.log(prior_h1) - np.log1p(-prior_h1)
    out = expit(log_alt - log_null + log_prior_odds)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PopulationTestResult:
    p_h1: float
    n_iterations: int
    decision_threshold: float = 0.95

    @property
    def reject_null(self) -> bool:
        return self.p_h1 > self.decision_threshold

    def to_json(self, config_hash: str | None = None) -> str:
        payload = {
            "p_h1": self.p_h1,
            "n_iterations": self.n_iterations,
            "decision_threshold": self.decision_threshold,
            "reject_null": self.reject_null,
        }
        if config_hash is not None:
            payload["config_hash"] = config_hash
        return canonical_json(payload)


def population_test(trace, decision_threshold: float = 0.95) -> PopulationTestResult:
    """Fraction of retained sweeps whose test indicator chose two profiles."""
    indicator = np.asarray(trace.test_indicator)
    if indicator.size == 0:
        raise ValueError("population_test needs a non-empty trace")
    if not 0 < decision_threshold < 1:
        raise ValueError("decision_threshold must lie in (0, 1)")
    return PopulationTestResult(
        p_h1=float(indicator.mean()),
        n_iterations=int(indicator.size),
        decision_threshold=decision_threshold,
    )


@dataclass(frozen=True)
class EntityTestResult:
    entity_a: int
    entity_b: int
    p_h1: float


def entity_test_value(counts_a, counts_b, beta, prior_h1: float = 0.5):
    """One-iteration entity-pair test: the closed-form posterior with
    concentration beta in place of the prior pseudo-counts.

    counts_a and counts_b are the per-cluster assignment counts of the two
    entities' graphs at one sweep; beta is the concentration (a population
    simplex draw).  An entity with no graphs has an all-zero count vector
    and the comparison is undefined.
    """
    counts_a = np.asarray(counts_a, dtype=np.float64)
    counts_b = np.asarray(counts_b, dtype=np.float64)
    if np.any(counts_a.sum(axis=-1) == 0) or np.any(counts_b.sum(axis=-1) == 0):
        raise ValueError("entity test undefined for an entity with zero graphs")
    return posterior_prob_h1(counts_a, counts_b, beta, prior_h1)


def _pair_concentration(beta: np.ndarray, pop_a: int, pop_b: int) -> np.ndarray:
    """Concentration for an entity pair: own population's simplex when the
    pair shares one, the mean of the two simplices across populations."""
    if pop_a == pop_b:
        return beta[..., pop_a - 1, :]
    return 0.5 * (beta[..., 0, :] + beta[..., 1, :])


def entity_tests(
    trace,
    pairs: Sequence[tuple[int, int]] | None = None,
    prior_h1: float = 0.5,
) -> list[EntityTestResult]:
    """Posterior-mean entity-pair tests over the retained sweeps.

    ``pairs=None`` tests every cross-population pair.  Each sweep evaluates
    the pair with that sweep's cluster counts and population simplex; the
    reported p_h1 averages those values.
    """
    entity_ids = list(trace.entity_ids)
    index = {e: k for k, e in enumerate(entity_ids)}
    pops = np.asarray(trace.entity_populations)
    if pairs is None:
        first = [e for e, p in zip(entity_ids, pops) if p == 1]
        second = [e for e, p in zip(entity_ids, pops) if p == 2]
        pairs = [(a, b) for a in first for b in second]
    counts = np.asarray(trace.entity_counts, dtype=np.float64)  # (S, N, H)
    beta = np.asarray(trace.beta, dtype=np.float64)  # (S, 2, H)
    if counts.shape[0] == 0:
        raise ValueError("entity_tests needs a non-empty trace")

    results = []
    for a, b in pairs:
        ka, kb = index[a], index[b]
        conc = _pair_concentration(beta, pops[ka], pops[kb])
        vals = entity_test_value(counts[:, ka], counts[:, kb], conc, prior_h1)
        results.append(EntityTestResult(a, b, float(np.mean(vals))))
    return results


@dataclass(frozen=True)
class EdgeTestResult:
    statistic: np.ndarray
    theta_bar_diff: np.ndarray
    flagged: np.ndarray
    significance: float


def _binomial_divergence(theta_pops, theta_ref, trials, pop_weights, squared):
    """sum_y p_y sum_a (P(a|theta_y) - P(a|ref))^d / P(a|ref), full support."""
    L = theta_ref.shape[0]
    out = np.zeros(L)
    trials = np.asarray(trials)
    for n in np.unique(trials):
        sel = trials == n
        a = np.arange(int(n) + 1)[:, None]
        ref = binom.pmf(a, int(n), theta_ref[sel][None, :])
        acc = np.zeros(int(sel.sum()))
        for y in range(theta_pops.shape[0]):
            py = binom.pmf(a, int(n), theta_pops[y][sel][None, :])
            dev = py - ref
            term = (dev * dev if squared else dev) / ref
            acc += pop_weights[y] * term.sum(axis=0)
        out[sel] = acc
    return out


def _poisson_divergence(theta_pops, theta_ref, pop_weights, squared, tail=1e-9):
    """Same divergence for Poisson rates, support truncated per edge where
    the tail mass under the reference rate drops below ``tail``."""
    kmax = np.asarray(poisson.isf(tail, theta_ref), dtype=np.int64)
    kmax = np.maximum(kmax, 1)
    a = np.arange(int(kmax.max()) + 1)[:, None]
    keep = a <= kmax[None, :]
    ref = poisson.pmf(a, theta_ref[None, :])
    out = np.zeros(theta_ref.shape[0])
    for y in range(theta_pops.shape[0]):
        py = poisson.pmf(a, theta_pops[y][None, :])
        dev = py - ref
        term = np.where(keep, (dev * dev if squared else dev) / ref, 0.0)
        out += pop_weights[y] * term.sum(axis=0)
    return out


def edge_statistic_values(
    theta_by_pop: np.ndarray,
    family: str,
    trials: np.ndarray | None = None,
    pop_weights: np.ndarray | None = None,
    squared: bool = True,
) -> np.ndarray:
    """Edge-difference statistic p_l in [0, 1] from per-population edge
    parameters.

    theta_by_pop has shape (2, L).  The reference parameter is the plain
    average of the two populations.  The squared form (default) is an
    adjusted Cramer's-V-style quantity, p_l = min(1, sqrt(chi^2-like
    divergence)); the unsquared flag keeps the raw signed relative
    deviations, floored at 0, for comparison only.
    """
    theta_by_pop = np.asarray(theta_by_pop, dtype=np.float64)
    if theta_by_pop.ndim != 2 or theta_by_pop.shape[0] != 2:
        raise ValueError("theta_by_pop must have shape (2, n_edges)")
    if pop_weights is None:
        pop_weights = np.array([0.5, 0.5])
    pop_weights = np.asarray(pop_weights, dtype=np.float64)
    theta_ref = theta_by_pop.mean(axis=0)
    if family == "binomial":
        if trials is None:
            raise ValueError("binomial edge statistic needs per-edge trial counts")
        trials = np.asarray(trials)
        if np.any(trials < 1):
            raise ValueError("binomial trial counts must be >= 1")
        value = _binomial_divergence(theta_by_pop, theta_ref, trials, pop_weights, squared)
    elif family == "poisson":
        value = _poisson_divergence(theta_by_pop, theta_ref, pop_weights, squared)
    else:
        raise ValueError(f"unknown family: {family!r}")
    if squared:
        return np.minimum(1.0, np.sqrt(np.maximum(value, 0.0)))
    return np.clip(value, 0.0, 1.0)


def edge_statistic(
    trace,
    family: str | None = None,
    significance: float = 0.1,
    trials: np.ndarray | None = None,
    squared: bool = True,
) -> EdgeTestResult:
    """Edge-level test from a trace's per-population edge-parameter snapshots.

    Snapshot averages give theta_bar per population; the statistic flags
    edge l when p_l exceeds 1 - significance.
    """
    if not 0 < significance < 1:
        raise ValueError("significance must lie in (0, 1)")
    snapshots = np.asarray(trace.theta_bar)  # (S_thin, 2, L)
    if snapshots.size == 0:
        raise ValueError("trace has no edge-parameter snapshots")
    if family is None:
        family = trace.family
    if trials is None:
        trials = getattr(trace, "edge_trials", None)
    pop_weights = np.asarray(trace.population_weights, dtype=np.float64)
    theta_by_pop = snapshots.mean(axis=0)
    stat = edge_statistic_values(theta_by_pop, family, trials, pop_weights, squared)
    return EdgeTestResult(
        statistic=stat,
        theta_bar_diff=theta_by_pop[0] - theta_by_pop[1],
        flagged=stat > 1.0 - significance,
        significance=significance,
    )


def write_population_test(result: PopulationTestResult, path, config_hash=None) -> None:
    atomic_write_text(Path(path), result.to_json(config_hash))


def write_entity_tests(results: Sequence[EntityTestResult], path) -> None:
    lines = ["entity_a,entity_b,p_h1"]
    for r in results:
        lines.append(f"{r.entity_a},{r.entity_b},{format_float(r.p_h1)}")
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def write_edge_tests(result: EdgeTestResult, n_nodes: int, path) -> None:
    from .data import edge_pairs

    i, j = edge_pairs(n_nodes)
    lines = ["edge_index,i,j,p_l,theta_bar_diff,flagged"]
    for l in range(result.statistic.shape[0]):
        lines.append(
            f"{l},{i[l]},{j[l]},{format_float(result.statistic[l])},"
            f"{format_float(result.theta_bar_diff[l])},{str(bool(result.flagged[l])).lower()}"
        )
    atomic_write_text(Path(path), "\n".join(lines) + "\n")
