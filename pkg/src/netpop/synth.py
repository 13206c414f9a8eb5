"""Synthetic populations of count-weighted graphs with planted structure.

Node occurrence counts follow a multivariate Zipf process: one success
probability p ~ Beta(1, lambda) shared by a whole count vector, each
coordinate then Geometric(p) on {0, 1, 2, ...}.  Edge weights are binomial
draws with trials min(count_i, count_j) and a planted per-edge probability,
so every dataset satisfies the weight <= min-count bound by construction.

Planted structure is a baseline probability plus rectangular blocks;
overlapping blocks are applied in order, later entries winning.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import substream
from .data import (
    GraphObservation,
    NodeVocabulary,
    PopulationDataset,
    edge_pairs,
)


@dataclass(frozen=True)
class StructureSpec:
    """Planted edge-probability structure on V nodes.

    Each block is ((row_start, row_stop), (col_start, col_stop), prob) with
    half-open node ranges; the block raises both (i, j) and (j, i).
    """

    n_nodes: int
    blocks: tuple = ()
    baseline_prob: float = 0.05

    def __post_init__(self):
        object.__setattr__(
            self,
            "blocks",
            tuple(
                ((int(r0), int(r1)), (int(c0), int(c1)), float(p))
                for (r0, r1), (c0, c1), p in self.blocks
            ),
        )
        if self.n_nodes < 2:
            raise ValueError("structure needs at least 2 nodes")
        if not 0 <= self.baseline_prob <= 1:
            raise ValueError("baseline_prob must lie in [0, 1]")
        for (r0, r1), (c0, c1), p in self.blocks:
            if not (0 <= r0 < r1 <= self.n_nodes and 0 <= c0 < c1 <= self.n_nodes):
                raise ValueError("block ranges must lie within 0..V")
            if not 0 <= p <= 1:
                raise ValueError("block probabilities must lie in [0, 1]")

    def theta(self) -> np.ndarray:
        """Symmetric zero-diagonal matrix of planted edge probabilities."""
        t = np.full((self.n_nodes, self.n_nodes), self.baseline_prob)
        for (r0, r1), (c0, c1), p in self.blocks:
            t[r0:r1, c0:c1] = p
            t[c0:c1, r0:r1] = p
        np.fill_diagonal(t, 0.0)
        return t

    def to_dict(self) -> dict:
        return {
            "V": self.n_nodes,
            "baseline_prob": self.baseline_prob,
            "blocks": [
                {"rows": [r0, r1], "cols": [c0, c1], "prob": p}
                for (r0, r1), (c0, c1), p in self.blocks
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StructureSpec":
        return cls(
            n_nodes=int(d["V"]),
            blocks=tuple(
                ((b["rows"][0], b["rows"][1]), (b["cols"][0], b["cols"][1]), b["prob"])
                for b in d.get("blocks", ())
            ),
            baseline_prob=float(d.get("baseline_prob", 0.05)),
        )


@dataclass(frozen=True)
class SyntheticConfig:
    entities_per_population: int = 50
    time_points: int = 1
    n_nodes: int = 20
    zipf_lambda: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.entities_per_population < 1:
            raise ValueError("entities_per_population must be positive")
        if self.time_points < 1:
            raise ValueError("time_points must be positive")
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be at least 2")
        if not self.zipf_lambda > 0:
            raise ValueError("zipf_lambda must be positive")


def geometric_counts(p: float, n_nodes: int, rng: np.random.Generator) -> np.ndarray:
    """Independent Geometric(p) coordinates on {0, 1, 2, ...}."""
    if not 0 < p <= 1:
        raise ValueError("success probability must lie in (0, 1]")
    return rng.geometric(p, size=n_nodes) - 1


def sample_zipf_counts(n_nodes: int, zipf_lambda: float, rng: np.random.Generator) -> np.ndarray:
    """One multivariate Zipf count vector: shared p ~ Beta(1, lambda)."""
    if not zipf_lambda > 0:
        raise ValueError("zipf_lambda must be positive")
    p = max(rng.beta(1.0, zipf_lambda), 1e-12)
    return geometric_counts(p, n_nodes, rng)


def generate_graph(
    counts: np.ndarray,
    theta: np.ndarray,
    rng: np.random.Generator,
    entity_id: int = 0,
    time_index: int = 0,
) -> GraphObservation:
    """Binomial edge weights with trials min(count_i, count_j)."""
    counts = np.asarray(counts)
    theta = np.asarray(theta, dtype=np.float64)
    V = counts.shape[0]
    if theta.shape != (V, V):
        raise ValueError("theta must be V x V for the count vector")
    if not np.array_equal(theta, theta.T) or np.any(np.diagonal(theta) != 0):
        raise ValueError("theta must be symmetric with a zero diagonal")
    if np.any(theta < 0) or np.any(theta > 1):
        raise ValueError("theta entries must lie in [0, 1]")
    i, j = edge_pairs(V)
    trials = np.minimum(counts[i], counts[j])
    weights_vec = rng.binomial(trials, theta[i, j])
    weights = np.zeros((V, V), dtype=np.int64)
    weights[i, j] = weights_vec
    weights[j, i] = weights_vec
    return GraphObservation(entity_id, time_index, weights, counts)


def _vocabulary(n_nodes: int) -> NodeVocabulary:
    return NodeVocabulary(tuple(f"n{v:03d}" for v in range(n_nodes)))


def generate_homogeneous(
    spec1: StructureSpec, spec2: StructureSpec, cfg: SyntheticConfig
) -> PopulationDataset:
    """One graph per entity; population y uses spec_y's planted structure.

    Entity n of population y gets its own RNG stream keyed by (y, n), so
    the dataset is a deterministic function of (specs, config) and changing
    the entity count leaves earlier entities' graphs untouched.
    """
    if spec1.n_nodes != spec2.n_nodes or spec1.n_nodes != cfg.n_nodes:
        raise ValueError("structure specs and config disagree on n_nodes")
    if cfg.time_points != 1:
        raise ValueError("homogeneous generation uses a single time point")
    thetas = (spec1.theta(), spec2.theta())
    graphs = []
    labels = {}
    entity = 1
    for pop in (1, 2):
        for n in range(cfg.entities_per_population):
            rng = substream(cfg.seed, pop, n)
            counts = sample_zipf_counts(cfg.n_nodes, cfg.zipf_lambda, rng)
            graphs.append(generate_graph(counts, thetas[pop - 1], rng, entity, 0))
            labels[entity] = pop
            entity += 1
    return PopulationDataset(_vocabulary(cfg.n_nodes), tuple(graphs), labels)


def generate_heterogeneous(
    specs_by_population: tuple[list[StructureSpec], list[StructureSpec]],
    cfg: SyntheticConfig,
    time_locked: bool = False,
) -> PopulationDataset:
    """time_points graphs per entity, each drawn under one of the
    population's regime structures.

    Free mixing (default): a per-entity simplex over regimes is drawn from
    the flat Dirichlet and each time point samples its regime from it,
    mirroring the mixed-membership generative story.  time_locked instead
    ties regime t mod K to time index t for every entity.
    """
    if cfg.time_points < 2:
        raise ValueError("heterogeneous generation needs time_points >= 2")
    if len(specs_by_population) != 2 or not all(specs_by_population):
        raise ValueError("need a non-empty regime list per population")
    for regimes in specs_by_population:
        for s in regimes:
            if s.n_nodes != cfg.n_nodes:
                raise ValueError("regime specs and config disagree on n_nodes")
    thetas = [[s.theta() for s in regimes] for regimes in specs_by_population]

    graphs = []
    labels = {}
    entity = 1
    for pop in (1, 2):
        k_regimes = len(thetas[pop - 1])
        for n in range(cfg.entities_per_population):
            rng = substream(cfg.seed, pop, n)
            if time_locked:
                regimes = np.arange(cfg.time_points) % k_regimes
            else:
                mixing = rng.dirichlet(np.ones(k_regimes))
                regimes = rng.choice(k_regimes, size=cfg.time_points, p=mixing)
            for t in range(cfg.time_points):
                counts = sample_zipf_counts(cfg.n_nodes, cfg.zipf_lambda, rng)
                graphs.append(
                    generate_graph(counts, thetas[pop - 1][regimes[t]], rng, entity, t)
                )
            labels[entity] = pop
            entity += 1
    return PopulationDataset(_vocabulary(cfg.n_nodes), tuple(graphs), labels)


def default_homogeneous_specs(n_nodes: int = 20) -> tuple[StructureSpec, StructureSpec]:
    """Two structures differing at the ends, overlapping in the middle.

    Population 1 elevates the leading block, population 2 the trailing
    block, both share a moderate middle block; everything else sits at the
    sparse baseline.
    """
    lead = n_nodes * 2 // 5
    mid0, mid1 = n_nodes * 3 // 10, n_nodes * 7 // 10
    trail = n_nodes - lead
    shared = (((mid0, mid1), (mid0, mid1), 0.30),)
    spec1 = StructureSpec(
        n_nodes,
        (((0, lead), (0, lead), 0.55),) + shared,
        baseline_prob=0.05,
    )
    spec2 = StructureSpec(
        n_nodes,
        (((trail, n_nodes), (trail, n_nodes), 0.55),) + shared,
        baseline_prob=0.05,
    )
    return spec1, spec2


def default_heterogeneous_specs(
    n_nodes: int = 20,
) -> tuple[list[StructureSpec], list[StructureSpec]]:
    """Two regimes per population: a strong and a weak expression of the
    population's block, sharing the middle block."""
    spec1, spec2 = default_homogeneous_specs(n_nodes)
    lead = n_nodes * 2 // 5
    trail = n_nodes - lead
    mid0, mid1 = n_nodes * 3 // 10, n_nodes * 7 // 10
    shared = (((mid0, mid1), (mid0, mid1), 0.30),)
    weak1 = StructureSpec(
        n_nodes, (((0, lead), (0, lead), 0.85),) + shared, baseline_prob=0.02
    )
    weak2 = StructureSpec(
        n_nodes, (((trail, n_nodes), (trail, n_nodes), 0.85),) + shared, baseline_prob=0.02
    )
    return [spec1, weak1], [spec2, weak2]


def simulation_to_dict(
    kind: str,
    cfg: SyntheticConfig,
    populations,
    time_locked: bool = False,
) -> dict:
    if kind == "homogeneous":
        pops = [[populations[0].to_dict()], [populations[1].to_dict()]]
    else:
        pops = [[s.to_dict() for s in regimes] for regimes in populations]
    return {
        "kind": kind,
        "config": {
            "entities_per_population": cfg.entities_per_population,
            "time_points": cfg.time_points,
            "V": cfg.n_nodes,
            "zipf_lambda": cfg.zipf_lambda,
            "seed": cfg.seed,
        },
        "populations": pops,
        "time_locked": time_locked,
    }


def simulation_from_dict(d: dict, **overrides) -> PopulationDataset:
    """Generate a dataset from the JSON run-config schema.

    Recognized overrides: entities_per_population, time_points, seed.
    """
    kind = d.get("kind")
    if kind not in ("homogeneous", "heterogeneous"):
        raise ValueError("simulation kind must be homogeneous or heterogeneous")
    raw = dict(d.get("config", {}))
    cfg = SyntheticConfig(
        entities_per_population=int(
            overrides.get("entities_per_population")
            or raw.get("entities_per_population", 50)
        ),
        time_points=int(overrides.get("time_points") or raw.get("time_points", 1)),
        n_nodes=int(raw.get("V", 20)),
        zipf_lambda=float(raw.get("zipf_lambda", 1.0)),
        seed=int(
            raw.get("seed", 0) if overrides.get("seed") is None else overrides["seed"]
        ),
    )
    pops = [
        [StructureSpec.from_dict(s) for s in regimes] for regimes in d["populations"]
    ]
    if len(pops) != 2:
        raise ValueError("simulation config needs exactly 2 populations")
    if kind == "homogeneous":
        if any(len(r) != 1 for r in pops):
            raise ValueError("homogeneous simulation takes one structure per population")
        return generate_homogeneous(pops[0][0], pops[1][0], cfg)
    return generate_heterogeneous(
        (pops[0], pops[1]), cfg, time_locked=bool(d.get("time_locked", False))
    )


def load_simulation_config(path: str | Path) -> dict:
    with Path(path).open() as fh:
        return json.load(fh)
