"""Five-step Gibbs sweep over cluster assignments, mixing weights, latent
positions, the two-profile test indicator, and population profiles.

One sweep updates, in order:

1. per-graph cluster assignments (log-sum-exp over clusters),
2. per-entity mixing vectors (mixed-membership variant only),
3. per-cluster latent positions — conjugate Gaussian rows after
   Polya-Gamma augmentation for the binomial family, adaptive random-walk
   Metropolis for the Poisson family,
4. the test indicator, a Bernoulli draw on the posterior probability that
   the two populations use clusters differently,
5. population profiles beta, shared across populations whenever the
   indicator currently says "same".

Randomness is drawn from counter-based substreams keyed by (iteration,
step, unit), so results do not depend on evaluation order or worker
count.  Iteration 0 / step 0 is reserved for initialization.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from ._util import atomic_write_text, canonical_json, config_hash, format_float, substream
from .data import PopulationDataset, edge_pairs, n_edges, vectorize
from .diagnostics import effective_sample_size
from .hypotheses import posterior_prob_h1
from .model import ClusterParams, Hyperparams
from .polya_gamma import sample_polya_gamma

MODEL_VARIANTS = ("fixed", "mixed")

MH_TARGET_ACCEPT = 0.35
MH_INITIAL_STEP = 0.25

_EXP_OVERFLOW = 700.0


@dataclass(frozen=True)
class McmcConfig:
    """Chain-level knobs.  n_samples counts total sweeps including burn-in;
    every post-burn-in sweep is recorded and edge-parameter snapshots are
    taken every ``thin`` of them."""

    n_samples: int = 1300
    burn_in: int = 200
    seed: int = 0
    model_variant: str = "fixed"
    thin: int = 10

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if self.n_samples <= self.burn_in:
            raise ValueError("n_samples must exceed burn_in")
        if self.thin < 1:
            raise ValueError("thin must be a positive integer")
        if self.model_variant not in MODEL_VARIANTS:
            raise ValueError(f"model_variant must be one of {MODEL_VARIANTS}")
        if not 0 <= self.seed < 2 ** 63:
            raise ValueError("seed must be a non-negative 63-bit integer")


class _Data:
    """Dataset flattened to per-graph edge vectors in canonical edge order."""

    def __init__(self, dataset: PopulationDataset, hp: Hyperparams):
        graphs = sorted(dataset.graphs, key=lambda g: (g.entity_id, g.time_index))
        self.entity_ids = list(dataset.entity_ids)
        index = {e: k for k, e in enumerate(self.entity_ids)}
        self.n_nodes = dataset.n_nodes
        self.n_edges = dataset.n_edges
        self.edge_i, self.edge_j = edge_pairs(self.n_nodes)
        self.weights = np.stack([vectorize(g) for g in graphs]).astype(np.float64)
        self.entity_of_graph = np.array([index[g.entity_id] for g in graphs])
        self.pop_of_entity = np.array(
            [dataset.labels[e] for e in self.entity_ids], dtype=np.int64
        )
        self.pop_of_graph = self.pop_of_entity[self.entity_of_graph]
        if hp.family == "binomial":
            if not dataset.has_node_counts():
                raise ValueError(
                    "binomial family needs node_counts on every graph "
                    "(edge trials are undefined without them)"
                )
            self.trials = np.stack([g.trials() for g in graphs]).astype(np.float64)
            if np.any(self.weights > self.trials):
                raise ValueError("edge weight exceeds its trial count")
            self.co_weights = self.trials - self.weights
        else:
            self.trials = None
            self.co_weights = None

    @property
    def n_graphs(self) -> int:
        return self.weights.shape[0]

    @property
    def n_entities(self) -> int:
        return len(self.entity_ids)

    def entity_counts(self, assignments: np.ndarray, n_clusters: int) -> np.ndarray:
        m = np.zeros((self.n_entities, n_clusters), dtype=np.int64)
        np.add.at(m, (self.entity_of_graph, assignments), 1)
        return m

    def population_counts(self, assignments: np.ndarray, n_clusters: int) -> np.ndarray:
        m = np.zeros((2, n_clusters), dtype=np.int64)
        np.add.at(m, (self.pop_of_graph - 1, assignments), 1)
        return m


def _log_dirichlet(rng: np.random.Generator, conc: np.ndarray) -> np.ndarray:
    """Log-scale Dirichlet draw over the last axis.

    Uses Gamma(a) = Gamma(a + 1) * U^(1/a) so the log draw stays finite for
    concentrations far below 1, where a direct Gamma draw underflows to 0.
    """
    conc = np.asarray(conc, dtype=np.float64)
    g = rng.gamma(conc + 1.0)
    u = rng.random(conc.shape)
    log_g = np.log(g) + np.log(u) / conc
    return log_g - logsumexp(log_g, axis=-1, keepdims=True)


def _normalized_exp(log_simplex: np.ndarray) -> np.ndarray:
    p = np.exp(log_simplex)
    return p / p.sum(axis=-1, keepdims=True)


@dataclass
class SamplerState:
    """Full Markov-chain state.  ``pi`` is None for the fixed variant."""

    assignments: np.ndarray
    beta: np.ndarray
    log_beta: np.ndarray
    test_indicator: int
    params: ClusterParams
    variant: str
    iteration: int = 0
    pi: np.ndarray | None = None
    log_pi: np.ndarray | None = None
    mh_step: np.ndarray | None = None
    mh_accepted: int = 0
    mh_proposed: int = 0

    def check_invariants(self, n_graphs: int | None = None) -> None:
        H = self.params.n_clusters
        if np.any(self.assignments < 0) or np.any(self.assignments >= H):
            raise AssertionError("cluster assignment out of range")
        if n_graphs is not None and self.assignments.shape != (n_graphs,):
            raise AssertionError("one assignment per graph observation required")
        if self.beta.shape != (2, H):
            raise AssertionError("beta must have one simplex row per population")
        if np.any(self.beta < 0) or np.any(np.abs(self.beta.sum(axis=1) - 1) > 1e-12):
            raise AssertionError("beta rows must be simplices")
        if self.test_indicator == 0 and not np.array_equal(self.beta[0], self.beta[1]):
            raise AssertionError("shared-profile state requires identical beta rows")
        if self.test_indicator not in (0, 1):
            raise AssertionError("test indicator must be 0 or 1")
        if self.variant == "mixed":
            if self.pi is None:
                raise AssertionError("mixed variant requires per-entity mixing")
            if np.any(self.pi < 0) or np.any(np.abs(self.pi.sum(axis=1) - 1) > 1e-12):
                raise AssertionError("pi rows must be simplices")


def init_state(data: _Data, hp: Hyperparams, cfg: McmcConfig) -> SamplerState:
    """Prior draw of the full state; deterministic given cfg.seed."""
    rng = substream(cfg.seed, 0, 0)
    H, R, V = hp.n_clusters, hp.latent_dim, data.n_nodes
    alpha_vec = np.full(H, hp.alpha)

    params = ClusterParams(rng.standard_normal((H, V, R)), hp.link)
    assignments = rng.integers(0, H, size=data.n_graphs)
    test_indicator = int(rng.random() < hp.prior_h1)
    if test_indicator == 0:
        row = _log_dirichlet(rng, alpha_vec)
        log_beta = np.stack([row, row])
    else:
        log_beta = _log_dirichlet(rng, np.tile(alpha_vec, (2, 1)))
    beta = _normalized_exp(log_beta)

    state = SamplerState(
        assignments=assignments,
        beta=beta,
        log_beta=log_beta,
        test_indicator=test_indicator,
        params=params,
        variant=cfg.model_variant,
    )
    if cfg.model_variant == "mixed":
        conc = hp.entity_mixing_scale * beta[data.pop_of_entity - 1]
        state.log_pi = _log_dirichlet(rng, conc)
        state.pi = _normalized_exp(state.log_pi)
    if hp.family == "poisson":
        state.mh_step = np.full((H, V), MH_INITIAL_STEP)
    return state


def allocation_log_probs(state: SamplerState, data: _Data, hp: Hyperparams) -> np.ndarray:
    """Normalized per-graph log allocation probabilities, shape (G, H).

    Mixing prior: the entity's own mixing vector for the mixed variant, the
    entity's population profile for the fixed variant.  Likelihood terms
    constant across clusters are dropped before normalization.
    """
    theta = state.params.all_theta_edges()
    log_theta = np.log(theta)
    if hp.family == "binomial":
        loglik = data.weights @ log_theta.T + data.co_weights @ np.log1p(-theta).T
    else:
        loglik = data.weights @ log_theta.T - theta.sum(axis=1)[None, :]
    if state.variant == "mixed":
        prior = state.log_pi[data.entity_of_graph]
    else:
        prior = state.log_beta[data.pop_of_graph - 1]
    logp = prior + loglik
    norm = logsumexp(logp, axis=1, keepdims=True)
    if not np.all(np.isfinite(norm)):
        raise AssertionError("allocation probabilities vanished for some graph")
    return logp - norm


def step_cluster_assignments(
    state: SamplerState, data: _Data, hp: Hyperparams, rng: np.random.Generator
) -> None:
    logp = allocation_log_probs(state, data, hp)
    gumbel = rng.gumbel(size=logp.shape)
    state.assignments = np.argmax(logp + gumbel, axis=1)


def step_entity_mixing(
    state: SamplerState, data: _Data, hp: Hyperparams, rng: np.random.Generator
) -> None:
    counts = data.entity_counts(state.assignments, hp.n_clusters)
    conc = hp.entity_mixing_scale * state.beta[data.pop_of_entity - 1] + counts
    state.log_pi = _log_dirichlet(rng, conc)
    state.pi = _normalized_exp(state.log_pi)


def _scatter_symmetric(vec: np.ndarray, ei, ej, n_nodes: int) -> np.ndarray:
    out = np.zeros((n_nodes, n_nodes))
    out[ei, ej] = vec
    out[ej, ei] = vec
    return out


def _update_positions_binomial(
    state: SamplerState, data: _Data, hp: Hyperparams, cluster: int,
    members: np.ndarray, rng: np.random.Generator,
) -> None:
    """Conjugate row updates after Polya-Gamma augmentation.

    PG variables are additive in the trial count, so per-(graph, edge)
    draws collapse to one draw per edge with the cluster's pooled trials.
    Given them, each node row has a Gaussian full conditional with
    precision I + sum_u omega_vu x_u x_u^T.
    """
    V, R = data.n_nodes, hp.latent_dim
    X = state.params.positions[cluster]
    successes = data.weights[members].sum(axis=0)
    pooled = data.trials[members].sum(axis=0)
    psi = np.einsum("er,er->e", X[data.edge_i], X[data.edge_j])
    omega = sample_polya_gamma(pooled, psi, rng)
    kappa = successes - 0.5 * pooled
    W = _scatter_symmetric(omega, data.edge_i, data.edge_j, V)
    K = _scatter_symmetric(kappa, data.edge_i, data.edge_j, V)
    noise = rng.standard_normal((V, R))
    eye = np.eye(R)
    for v in range(V):
        precision = eye + X.T @ (W[v][:, None] * X)
        shift = X.T @ K[v]
        try:
            chol = np.linalg.cholesky(precision)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(
                f"non-positive-definite precision updating cluster {cluster}, "
                f"node {v}"
            ) from exc
        mean = solve_triangular(
            chol.T, solve_triangular(chol, shift, lower=True), lower=False
        )
        X[v] = mean + solve_triangular(chol.T, noise[v], lower=False)
    state.params.mark_dirty(cluster)


def _poisson_row_logpost(
    x_v: np.ndarray, v: int, X: np.ndarray, A_row: np.ndarray, n_graphs: int
) -> float:
    """Log posterior of one node row given the rest, constants dropped."""
    psi = X @ x_v
    with np.errstate(over="ignore"):
        rates = np.exp(np.minimum(psi, _EXP_OVERFLOW))
    data_term = A_row @ psi - n_graphs * (rates.sum() - rates[v])
    return data_term - 0.5 * (x_v @ x_v)


def _update_positions_poisson(
    state: SamplerState, data: _Data, hp: Hyperparams, cluster: int,
    members: np.ndarray, rng: np.random.Generator, adapting: bool,
) -> None:
    """Per-row random-walk Metropolis with burn-in step-size adaptation."""
    V, R = data.n_nodes, hp.latent_dim
    X = state.params.positions[cluster]
    totals = data.weights[members].sum(axis=0)
    A = _scatter_symmetric(totals, data.edge_i, data.edge_j, V)
    n_graphs = members.size
    noise = rng.standard_normal((V, R))
    log_u = np.log(rng.random(V))
    gain = 1.0 / max(1, state.iteration) ** 0.6
    for v in range(V):
        current = X[v].copy()
        proposal = current + state.mh_step[cluster, v] * noise[v]
        lp_current = _poisson_row_logpost(current, v, X, A[v], n_graphs)
        lp_proposal = _poisson_row_logpost(proposal, v, X, A[v], n_graphs)
        accept = (not np.isfinite(lp_current)) or log_u[v] < lp_proposal - lp_current
        if accept:
            X[v] = proposal
        if adapting:
            state.mh_step[cluster, v] *= np.exp(gain * (float(accept) - MH_TARGET_ACCEPT))
        else:
            state.mh_accepted += int(accept)
            state.mh_proposed += 1
    state.params.mark_dirty(cluster)


def step_latent_positions(
    state: SamplerState, data: _Data, hp: Hyperparams, cfg: McmcConfig,
) -> None:
    """Update X cluster by cluster; empty clusters resample from the prior."""
    adapting = state.iteration <= cfg.burn_in
    for h in range(hp.n_clusters):
        rng = substream(cfg.seed, state.iteration, 3, h)
        members = np.nonzero(state.assignments == h)[0]
        if members.size == 0:
            state.params.positions[h] = rng.standard_normal((data.n_nodes, hp.latent_dim))
            state.params.mark_dirty(h)
            continue
        if hp.family == "binomial":
            _update_positions_binomial(state, data, hp, h, members, rng)
        else:
            _update_positions_poisson(state, data, hp, h, members, rng, adapting)


def step_test_indicator(
    state: SamplerState, data: _Data, hp: Hyperparams, rng: np.random.Generator
) -> float:
    """Draw the indicator from its posterior; returns the probability used."""
    counts = data.population_counts(state.assignments, hp.n_clusters)
    alpha_vec = np.full(hp.n_clusters, hp.alpha)
    p_h1 = posterior_prob_h1(counts[0], counts[1], alpha_vec, hp.prior_h1)
    state.test_indicator = int(rng.random() < p_h1)
    return p_h1


def step_population_mixing(
    state: SamplerState, data: _Data, hp: Hyperparams, rng: np.random.Generator
) -> None:
    counts = data.population_counts(state.assignments, hp.n_clusters)
    alpha_vec = np.full(hp.n_clusters, hp.alpha)
    if state.test_indicator == 0:
        row = _log_dirichlet(rng, alpha_vec + counts.sum(axis=0))
        state.log_beta = np.stack([row, row])
    else:
        state.log_beta = _log_dirichlet(rng, alpha_vec + counts)
    state.beta = _normalized_exp(state.log_beta)


def run_sweep(state: SamplerState, data: _Data, hp: Hyperparams, cfg: McmcConfig) -> None:
    """One full Gibbs sweep at state.iteration (steps 1-5 in order)."""
    it = state.iteration
    step_cluster_assignments(state, data, hp, substream(cfg.seed, it, 1))
    if cfg.model_variant == "mixed":
        step_entity_mixing(state, data, hp, substream(cfg.seed, it, 2))
    step_latent_positions(state, data, hp, cfg)
    step_test_indicator(state, data, hp, substream(cfg.seed, it, 4))
    step_population_mixing(state, data, hp, substream(cfg.seed, it, 5))


@dataclass
class TraceRecord:
    """Per-sweep view of the recorded chain quantities."""

    iteration: int
    test_indicator: int
    cluster_counts_by_population: np.ndarray
    beta: np.ndarray
    theta_bar: np.ndarray | None = None


class Trace:
    """Columnar post-burn-in chain record plus run metadata.

    Arrays: test_indicator (S,), cluster_counts (S, 2, H), beta (S, 2, H),
    entity_counts (S, N, H), theta_bar (S_thin, 2, L) with its iteration
    list.  Entity order follows entity_ids; populations are 1-based.
    """

    def __init__(
        self, *, iterations, test_indicator, cluster_counts, beta, entity_counts,
        theta_bar, theta_bar_iterations, entity_ids, entity_populations,
        population_weights, family, variant, n_nodes, edge_trials=None,
        meta=None, complete=True,
    ):
        self.iterations = np.asarray(iterations, dtype=np.int64)
        self.test_indicator = np.asarray(test_indicator, dtype=np.int64)
        self.cluster_counts = np.asarray(cluster_counts, dtype=np.int64)
        self.beta = np.asarray(beta, dtype=np.float64)
        self.entity_counts = np.asarray(entity_counts, dtype=np.int64)
        self.theta_bar = np.asarray(theta_bar, dtype=np.float64)
        self.theta_bar_iterations = np.asarray(theta_bar_iterations, dtype=np.int64)
        self.entity_ids = list(entity_ids)
        self.entity_populations = np.asarray(entity_populations, dtype=np.int64)
        self.population_weights = np.asarray(population_weights, dtype=np.float64)
        self.family = family
        self.variant = variant
        self.n_nodes = int(n_nodes)
        self.edge_trials = None if edge_trials is None else np.asarray(edge_trials)
        self.meta = dict(meta or {})
        self.complete = bool(complete)

    @property
    def n_recorded(self) -> int:
        return int(self.iterations.size)

    def record(self, k: int) -> TraceRecord:
        it = self.iterations[k]
        snap = None
        hits = np.nonzero(self.theta_bar_iterations == it)[0]
        if hits.size:
            snap = self.theta_bar[hits[0]]
        return TraceRecord(
            iteration=int(it),
            test_indicator=int(self.test_indicator[k]),
            cluster_counts_by_population=self.cluster_counts[k],
            beta=self.beta[k],
            theta_bar=snap,
        )

    def save(self, out_dir: str | Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        lines = ["iteration,test_indicator,pop,cluster,count"]
        for k, it in enumerate(self.iterations):
            t = self.test_indicator[k]
            for pop in range(2):
                row = self.cluster_counts[k, pop]
                for h in np.nonzero(row)[0]:
                    lines.append(f"{it},{t},{pop + 1},{h + 1},{row[h]}")
        atomic_write_text(out_dir / "trace.csv", "\n".join(lines) + "\n")

        lines = ["iteration,pop,cluster,value"]
        for k, it in enumerate(self.iterations):
            for pop in range(2):
                for h in range(self.beta.shape[2]):
                    lines.append(f"{it},{pop + 1},{h + 1},{format_float(self.beta[k, pop, h])}")
        atomic_write_text(out_dir / "beta.csv", "\n".join(lines) + "\n")

        lines = ["iteration,entity_id,cluster,count"]
        for k, it in enumerate(self.iterations):
            for n, entity in enumerate(self.entity_ids):
                row = self.entity_counts[k, n]
                for h in np.nonzero(row)[0]:
                    lines.append(f"{it},{entity},{h + 1},{row[h]}")
        atomic_write_text(out_dir / "entity_counts.csv", "\n".join(lines) + "\n")

        lines = ["iteration,pop,edge_index,value"]
        for k, it in enumerate(self.theta_bar_iterations):
            for pop in range(2):
                for l in range(self.theta_bar.shape[2]):
                    lines.append(f"{it},{pop + 1},{l},{format_float(self.theta_bar[k, pop, l])}")
        atomic_write_text(out_dir / "theta_bar.csv", "\n".join(lines) + "\n")

        if self.edge_trials is not None:
            lines = ["edge_index,trials"]
            for l, n in enumerate(self.edge_trials):
                lines.append(f"{l},{n}")
            atomic_write_text(out_dir / "edge_trials.csv", "\n".join(lines) + "\n")

        meta = dict(self.meta)
        meta.update(
            complete=self.complete,
            family=self.family,
            variant=self.variant,
            n_nodes=self.n_nodes,
            n_clusters=int(self.beta.shape[2]) if self.beta.size else 0,
            entity_ids=self.entity_ids,
            entity_populations=[int(p) for p in self.entity_populations],
            population_weights=[float(w) for w in self.population_weights],
        )
        atomic_write_text(out_dir / "trace_meta.json", canonical_json(meta))

    @classmethod
    def load(cls, out_dir: str | Path) -> "Trace":
        import csv as _csv
        import json

        out_dir = Path(out_dir)
        meta = json.loads((out_dir / "trace_meta.json").read_text())
        H = meta["n_clusters"]
        entity_ids = meta["entity_ids"]
        ent_index = {e: n for n, e in enumerate(entity_ids)}
        L = n_edges(meta["n_nodes"])

        def rows(name):
            with (out_dir / name).open(newline="") as fh:
                yield from _csv.DictReader(fh)

        per_iter: dict[int, dict] = {}
        for r in rows("trace.csv"):
            it = int(r["iteration"])
            rec = per_iter.setdefault(
                it, {"t": int(r["test_indicator"]), "counts": np.zeros((2, H), np.int64)}
            )
            rec["counts"][int(r["pop"]) - 1, int(r["cluster"]) - 1] = int(r["count"])
        iterations = sorted(per_iter)
        idx = {it: k for k, it in enumerate(iterations)}
        S = len(iterations)

        beta = np.zeros((S, 2, H))
        for r in rows("beta.csv"):
            beta[idx[int(r["iteration"])], int(r["pop"]) - 1, int(r["cluster"]) - 1] = float(
                r["value"]
            )
        entity_counts = np.zeros((S, len(entity_ids), H), np.int64)
        for r in rows("entity_counts.csv"):
            entity_counts[
                idx[int(r["iteration"])], ent_index[int(r["entity_id"])], int(r["cluster"]) - 1
            ] = int(r["count"])

        tb_per_iter: dict[int, np.ndarray] = {}
        for r in rows("theta_bar.csv"):
            it = int(r["iteration"])
            tb_per_iter.setdefault(it, np.zeros((2, L)))[
                int(r["pop"]) - 1, int(r["edge_index"])
            ] = float(r["value"])
        tb_iters = sorted(tb_per_iter)

        edge_trials = None
        if (out_dir / "edge_trials.csv").exists():
            edge_trials = np.zeros(L, np.int64)
            for r in rows("edge_trials.csv"):
                edge_trials[int(r["edge_index"])] = int(r["trials"])

        return cls(
            iterations=iterations,
            test_indicator=[per_iter[it]["t"] for it in iterations],
            cluster_counts=np.stack([per_iter[it]["counts"] for it in iterations])
            if iterations
            else np.zeros((0, 2, H), np.int64),
            beta=beta,
            entity_counts=entity_counts,
            theta_bar=np.stack([tb_per_iter[it] for it in tb_iters])
            if tb_iters
            else np.zeros((0, 2, L)),
            theta_bar_iterations=tb_iters,
            entity_ids=entity_ids,
            entity_populations=meta["entity_populations"],
            population_weights=meta["population_weights"],
            family=meta["family"],
            variant=meta["variant"],
            n_nodes=meta["n_nodes"],
            edge_trials=edge_trials,
            meta=meta,
            complete=meta.get("complete", True),
        )


def run_chain(
    dataset: PopulationDataset,
    hp: Hyperparams,
    cfg: McmcConfig,
    out_dir: str | Path | None = None,
) -> Trace:
    """Run the full chain and return the post-burn-in trace.

    With ``out_dir`` the trace is persisted there; if a sweep raises, the
    partial trace is flushed with ``complete: false`` before the error
    propagates.
    """
    data = _Data(dataset, hp)
    state = init_state(data, hp, cfg)
    H = hp.n_clusters

    recorded: dict[str, list] = {
        "iterations": [], "test_indicator": [], "cluster_counts": [],
        "beta": [], "entity_counts": [],
    }
    theta_bar: list[np.ndarray] = []
    theta_bar_iterations: list[int] = []
    timings = {"sweeps": 0.0}
    started = time.perf_counter()

    def build_trace(complete: bool) -> Trace:
        pop_sizes = np.bincount(data.pop_of_graph, minlength=3)[1:3]
        edge_trials = None
        if data.trials is not None:
            edge_trials = np.maximum(1, np.rint(data.trials.mean(axis=0))).astype(np.int64)
        meta = {
            "config": {
                "n_samples": cfg.n_samples, "burn_in": cfg.burn_in, "seed": cfg.seed,
                "model_variant": cfg.model_variant, "thin": cfg.thin,
                "n_clusters": hp.n_clusters, "latent_dim": hp.latent_dim,
                "alpha": hp.alpha, "prior_h1": hp.prior_h1, "family": hp.family,
                "entity_mixing_scale": hp.entity_mixing_scale,
            },
            "seed": cfg.seed,
            "config_hash": config_hash(
                hp=vars(hp), cfg={
                    "n_samples": cfg.n_samples, "burn_in": cfg.burn_in,
                    "seed": cfg.seed, "model_variant": cfg.model_variant,
                    "thin": cfg.thin,
                },
            ),
            "timings": dict(timings, total=time.perf_counter() - started),
            "ess": {
                "test_indicator": effective_sample_size(
                    np.asarray(recorded["test_indicator"], dtype=np.float64)
                )
            },
        }
        if hp.family == "poisson" and state.mh_proposed:
            meta["mh_acceptance"] = state.mh_accepted / state.mh_proposed
        return Trace(
            iterations=recorded["iterations"],
            test_indicator=recorded["test_indicator"],
            cluster_counts=np.asarray(recorded["cluster_counts"], np.int64).reshape(-1, 2, H),
            beta=np.asarray(recorded["beta"], np.float64).reshape(-1, 2, H),
            entity_counts=np.asarray(recorded["entity_counts"], np.int64).reshape(
                -1, data.n_entities, H
            ),
            theta_bar=np.asarray(theta_bar).reshape(-1, 2, data.n_edges),
            theta_bar_iterations=theta_bar_iterations,
            entity_ids=data.entity_ids,
            entity_populations=data.pop_of_entity,
            population_weights=pop_sizes / pop_sizes.sum(),
            family=hp.family,
            variant=cfg.model_variant,
            n_nodes=data.n_nodes,
            edge_trials=edge_trials,
            meta=meta,
            complete=complete,
        )

    try:
        for it in range(1, cfg.n_samples + 1):
            tick = time.perf_counter()
            state.iteration = it
            run_sweep(state, data, hp, cfg)
            timings["sweeps"] += time.perf_counter() - tick
            if it <= cfg.burn_in:
                continue
            recorded["iterations"].append(it)
            recorded["test_indicator"].append(state.test_indicator)
            recorded["cluster_counts"].append(
                data.population_counts(state.assignments, H)
            )
            recorded["beta"].append(state.beta.copy())
            recorded["entity_counts"].append(data.entity_counts(state.assignments, H))
            if (it - cfg.burn_in - 1) % cfg.thin == 0:
                theta = state.params.all_theta_edges()
                theta_bar.append(state.beta @ theta)
                theta_bar_iterations.append(it)
    except Exception:
        if out_dir is not None:
            build_trace(complete=False).save(out_dir)
        raise

    trace = build_trace(complete=True)
    if out_dir is not None:
        trace.save(out_dir)
    return trace
