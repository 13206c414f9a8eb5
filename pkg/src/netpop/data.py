"""Datasets of count-weighted graphs.

A dataset couples a node vocabulary with a collection of symmetric,
integer-weighted graph observations.  Each observation belongs to an entity
(a user, a subject) at a time index, and each entity carries a population
label in {1, 2}.  Optional per-node occurrence totals bound how large an
edge weight can be and double as the trial counts of the binomial
edge-weight family.

Directory format (all files UTF-8, comma-separated, LF endings):

``nodes.txt``
    one node label per line; line number - 1 is the node index.
``graphs.csv``
    header ``entity_id,time_index,i,j,weight``; ``i``, ``j`` are node
    indices with ``i > j``; rows are sparse, absent edges have weight 0.
``labels.csv``
    header ``entity_id,population``; population is 1 or 2.
``node_counts.csv`` (optional)
    header ``entity_id,time_index,node,count``; absent rows mean 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

N_POPULATIONS = 2


class DatasetError(ValueError):
    """A dataset file or in-memory dataset violates the format contract."""


def n_edges(n_nodes: int) -> int:
    return n_nodes * (n_nodes - 1) // 2


def edge_pairs(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Node index pairs (i, j) with i > j, in canonical edge order.

    Edge ``l`` runs over the lower triangle row by row: (1,0), (2,0),
    (2,1), (3,0), ...  This is the ordering used by every length-L edge
    vector in the package.
    """
    return np.tril_indices(n_nodes, k=-1)


@dataclass(frozen=True)
class NodeVocabulary:
    """Ordered node labels; the index space shared by all graphs."""

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 2:
            raise DatasetError("vocabulary needs at least 2 nodes")
        if len(set(self.labels)) != len(self.labels):
            raise DatasetError("node labels must be unique")

    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return n_edges(self.n_nodes)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DatasetError(f"unknown node name: {label!r}") from None


def _as_readonly_int_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise DatasetError(f"{name} must be integer-valued")
        arr = arr.astype(np.int64)
    else:
        arr = arr.astype(np.int64, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class GraphObservation:
    """One symmetric count-weighted graph for an entity at a time index.

    ``weights`` is V x V, symmetric, with a zero diagonal.  ``node_counts``
    (optional) gives per-node occurrence totals; when present every weight
    is bounded by the smaller count of its two endpoints, and that bound is
    the binomial trial count of the edge.
    """

    entity_id: int
    time_index: int
    weights: np.ndarray
    node_counts: np.ndarray | None = None

    def __post_init__(self):
        w = _as_readonly_int_array(self.weights, "weights")
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DatasetError("weights must be a square matrix")
        if w.shape[0] < 2:
            raise DatasetError("graphs need at least 2 nodes")
        if np.any(w < 0):
            raise DatasetError("weights must be non-negative")
        if np.any(np.diagonal(w) != 0):
            raise DatasetError("weights must have a zero diagonal")
        if not np.array_equal(w, w.T):
            raise DatasetError("weights must be symmetric")
        object.__setattr__(self, "weights", w)
        if self.time_index < 0:
            raise DatasetError("time_index must be non-negative")
        if self.node_counts is not None:
            nc = _as_readonly_int_array(self.node_counts, "node_counts")
            if nc.shape != (w.shape[0],):
                raise DatasetError("node_counts must have one entry per node")
            if np.any(nc < 0):
                raise DatasetError("node_counts must be non-negative")
            bound = np.minimum.outer(nc, nc)
            if np.any(w > bound):
                raise DatasetError(
                    f"entity {self.entity_id} t={self.time_index}: edge weight "
                    "exceeds the smaller node count of its endpoints"
                )
            object.__setattr__(self, "node_counts", nc)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    def trials(self) -> np.ndarray:
        """Per-edge binomial trial counts min(node_counts_i, node_counts_j)."""
        if self.node_counts is None:
            raise DatasetError("graph has no node_counts; trials are undefined")
        i, j = edge_pairs(self.n_nodes)
        return np.minimum(self.node_counts[i], self.node_counts[j])

    def __eq__(self, other):
        if not isinstance(other, GraphObservation):
            return NotImplemented
        if (self.entity_id, self.time_index) != (other.entity_id, other.time_index):
            return False
        if not np.array_equal(self.weights, other.weights):
            return False
        if (self.node_counts is None) != (other.node_counts is None):
            return False
        return self.node_counts is None or np.array_equal(
            self.node_counts, other.node_counts
        )


def vectorize(g: GraphObservation | np.ndarray) -> np.ndarray:
    """Lower-triangle edge vector of a graph (length V(V-1)/2)."""
    w = g.weights if isinstance(g, GraphObservation) else np.asarray(g)
    return w[edge_pairs(w.shape[0])].copy()

def devectorize(values: np.ndarray, n_nodes: int) -> np.ndarray:
    """Rebuild the symmetric zero-diagonal matrix from an edge vector."""
    values = np.asarray(values)
    if values.shape != (n_edges(n_nodes),):
        raise DatasetError(
            f"edge vector must have length {n_edges(n_nodes)} for {n_nodes} nodes"
        )
    out = np.zeros((n_nodes, n_nodes), dtype=values.dtype)
    i, j = edge_pairs(n_nodes)
    out[i, j] = values
    out[j, i] = values
    return out


@dataclass(frozen=True, eq=False)
class PopulationDataset:
    """A labeled collection of graph observations over one vocabulary."""

    vocabulary: NodeVocabulary
    graphs: tuple[GraphObservation, ...]
    labels: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        object.__setattr__(self, "labels", dict(self.labels))
        if not self.graphs:
            raise DatasetError("dataset has no graphs")
        V = self.vocabulary.n_nodes
        seen_times: dict[int, set[int]] = {}
        for g in self.graphs:
            if g.n_nodes != V:
                raise DatasetError("all graphs must share the vocabulary size")
            if g.entity_id not in self.labels:
                raise DatasetError(f"unlabeled entity: {g.entity_id}")
            times = seen_times.setdefault(g.entity_id, set())
            if g.time_index in times:
                raise DatasetError(
                    f"entity {g.entity_id} has duplicate time index {g.time_index}"
                )
            times.add(g.time_index)
        for entity, pop in self.labels.items():
            if pop not in range(1, N_POPULATIONS + 1):
                raise DatasetError(
                    f"population label must be in 1..{N_POPULATIONS}, got {pop}"
                )
            if entity not in seen_times:
                raise DatasetError(f"labeled entity {entity} has no graphs")

    @property
    def n_nodes(self) -> int:
        return self.vocabulary.n_nodes

    @property
    def n_edges(self) -> int:
        return self.vocabulary.n_edges

    @property
    def n_populations(self) -> int:
        return N_POPULATIONS

    @property
    def entity_ids(self) -> tuple[int, ...]:
        return tuple(sorted({g.entity_id for g in self.graphs}))

    def population_of(self, entity_id: int) -> int:
        return self.labels[entity_id]

    def entities_in(self, population: int) -> tuple[int, ...]:
        return tuple(e for e in self.entity_ids if self.labels[e] == population)

    def has_node_counts(self) -> bool:
        return all(g.node_counts is not None for g in self.graphs)

    def subset(self, entity_ids: Iterable[int]) -> "PopulationDataset":
        keep = set(entity_ids)
        graphs = tuple(g for g in self.graphs if g.entity_id in keep)
        labels = {e: p for e, p in self.labels.items() if e in keep}
        return PopulationDataset(self.vocabulary, graphs, labels)

    def __eq__(self, other):
        if not isinstance(other, PopulationDataset):
            return NotImplemented
        return (
            self.vocabulary == other.vocabulary
            and dict(self.labels) == dict(other.labels)
            and sorted(self.graphs, key=lambda g: (g.entity_id, g.time_index))
            == sorted(other.graphs, key=lambda g: (g.entity_id, g.time_index))
        )

    def save(self, path: str | Path) -> None:
        save_dataset(self, path)


def _read_rows(path: Path, expected_header: list[str]) -> list[dict[str, str]]:
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != expected_header:
            raise DatasetError(
                f"{path.name}: expected header {','.join(expected_header)}, "
                f"got {reader.fieldnames}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if None in row or any(v is None for v in row.values()):
                raise DatasetError(f"{path.name}:{lineno}: wrong number of fields")
            rows.append(row)
        return rows


def _parse_int(value: str, what: str, where: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise DatasetError(f"{where}: {what} must be an integer, got {value!r}") from None


def load_dataset(path: str | Path) -> PopulationDataset:
    """Load and validate a dataset directory.

    Raises :class:`DatasetError` on a missing file, an out-of-range node
    index, duplicate rows with conflicting values, an unlabeled entity, or
    a weight exceeding its node-count bound.
    """
    path = Path(path)
    for required in ("nodes.txt", "graphs.csv", "labels.csv"):
        if not (path / required).exists():
            raise DatasetError(f"missing file: {path / required}")

    with (path / "nodes.txt").open("r", encoding="utf-8") as fh:
        labels = [line.rstrip("\n") for line in fh]
    while labels and labels[-1] == "":
        labels.pop()
    vocab = NodeVocabulary(tuple(labels))
    V = vocab.n_nodes

    populations: dict[int, int] = {}
    for row in _read_rows(path / "labels.csv", ["entity_id", "population"]):
        entity = _parse_int(row["entity_id"], "entity_id", "labels.csv")
        pop = _parse_int(row["population"], "population", "labels.csv")
        if entity in populations and populations[entity] != pop:
            raise DatasetError(f"labels.csv: conflicting labels for entity {entity}")
        populations[entity] = pop

    weights: dict[tuple[int, int], np.ndarray] = {}
    for row in _read_rows(path / "graphs.csv", ["entity_id", "time_index", "i", "j", "weight"]):
        entity = _parse_int(row["entity_id"], "entity_id", "graphs.csv")
        t = _parse_int(row["time_index"], "time_index", "graphs.csv")
        i = _parse_int(row["i"], "i", "graphs.csv")
        j = _parse_int(row["j"], "j", "graphs.csv")
        w = _parse_int(row["weight"], "weight", "graphs.csv")
        if not 0 <= j < i < V:
            raise DatasetError(
                f"graphs.csv: edge ({i},{j}) out of range or not lower-triangular"
            )
        if w < 0:
            raise DatasetError("graphs.csv: negative weight")
        mat = weights.setdefault((entity, t), np.zeros((V, V), dtype=np.int64))
        if mat[i, j] and mat[i, j] != w:
            raise DatasetError(
                f"graphs.csv: conflicting duplicate rows for entity {entity} "
                f"t={t} edge ({i},{j})"
            )
        mat[i, j] = w
        mat[j, i] = w

    node_counts: dict[tuple[int, int], np.ndarray] | None = None
    counts_path = path / "node_counts.csv"
    if counts_path.exists():
        node_counts = {}
        for row in _read_rows(counts_path, ["entity_id", "time_index", "node", "count"]):
            entity = _parse_int(row["entity_id"], "entity_id", "node_counts.csv")
            t = _parse_int(row["time_index"], "time_index", "node_counts.csv")
            node = _parse_int(row["node"], "node", "node_counts.csv")
            count = _parse_int(row["count"], "count", "node_counts.csv")
            if not 0 <= node < V:
                raise DatasetError(f"node_counts.csv: node index {node} out of range")
            if count < 0:
                raise DatasetError("node_counts.csv: negative count")
            if (entity, t) not in weights:
                raise DatasetError(
                    f"node_counts.csv: counts for unknown graph entity {entity} t={t}"
                )
            vec = node_counts.setdefault((entity, t), np.zeros(V, dtype=np.int64))
            if vec[node] and vec[node] != count:
                raise DatasetError(
                    f"node_counts.csv: conflicting duplicate rows for entity {entity} "
                    f"t={t} node {node}"
                )
            vec[node] = count

    graphs = []
    for (entity, t), mat in sorted(weights.items()):
        nc = None
        if node_counts is not None:
            nc = node_counts.get((entity, t), np.zeros(V, dtype=np.int64))
        graphs.append(GraphObservation(entity, t, mat, nc))

    return PopulationDataset(vocab, tuple(graphs), populations)


def save_dataset(dataset: PopulationDataset, path: str | Path) -> None:
    """Write a dataset directory in the format read by :func:`load_dataset`."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    with (path / "nodes.txt").open("w", encoding="utf-8", newline="\n") as fh:
        for label in dataset.vocabulary.labels:
            fh.write(label + "\n")

    graphs = sorted(dataset.graphs, key=lambda g: (g.entity_id, g.time_index))
    with (path / "graphs.csv").open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("entity_id,time_index,i,j,weight\n")
        for g in graphs:
            i_arr, j_arr = edge_pairs(g.n_nodes)
            vals = vectorize(g)
            if not np.any(vals):
                # An explicit zero row anchors an empty graph's existence,
                # which sparse edge rows alone could not record.
                fh.write(f"{g.entity_id},{g.time_index},1,0,0\n")
                continue
            for i, j, w in zip(i_arr[vals > 0], j_arr[vals > 0], vals[vals > 0]):
                fh.write(f"{g.entity_id},{g.time_index},{i},{j},{w}\n")

    with (path / "labels.csv").open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("entity_id,population\n")
        for entity in sorted(dataset.labels):
            fh.write(f"{entity},{dataset.labels[entity]}\n")

    if any(g.node_counts is not None for g in dataset.graphs):
        if not dataset.has_node_counts():
            raise DatasetError("cannot save: only some graphs have node_counts")
        with (path / "node_counts.csv").open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("entity_id,time_index,node,count\n")
            for g in graphs:
                for node in np.nonzero(g.node_counts)[0]:
                    fh.write(
                        f"{g.entity_id},{g.time_index},{node},{g.node_counts[node]}\n"
                    )


def binarize_threshold(
    dataset: PopulationDataset, threshold: float, mode: str = "ratio"
) -> PopulationDataset:
    """Threshold every edge to 0/1, producing a binary dataset.

    ``mode="ratio"`` computes p_ij = weight / min(node_counts_i,
    node_counts_j) per edge (0 when the denominator is 0) and keeps the
    edge iff p_ij > threshold, strictly.  ``mode="raw"`` compares the raw
    weight against the threshold instead, for data whose counts carry no
    occurrence bound.  Output node counts are all 1, so the binary data
    fits the binomial family with a single trial per edge.
    """
    if mode not in ("ratio", "raw"):
        raise ValueError(f"mode must be 'ratio' or 'raw', got {mode!r}")
    if mode == "ratio":
        if not 0 <= threshold < 1:
            raise ValueError("ratio threshold must be in [0, 1)")
        if not dataset.has_node_counts():
            raise DatasetError("binarize_threshold(mode='ratio') requires node_counts")
    elif threshold < 0:
        raise ValueError("raw threshold must be non-negative")

    ones = np.ones(dataset.n_nodes, dtype=np.int64)
    out = []
    for g in dataset.graphs:
        w = g.weights.astype(np.float64)
        if mode == "ratio":
            denom = np.minimum.outer(g.node_counts, g.node_counts)
            with np.errstate(invalid="ignore", divide="ignore"):
                p = np.where(denom > 0, w / np.maximum(denom, 1), 0.0)
        else:
            p = w
        binary = (p > threshold).astype(np.int64)
        np.fill_diagonal(binary, 0)
        out.append(GraphObservation(g.entity_id, g.time_index, binary, ones))
    return PopulationDataset(dataset.vocabulary, tuple(out), dataset.labels)
