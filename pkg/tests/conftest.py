import numpy as np
import pytest

from netpop.data import GraphObservation, NodeVocabulary, PopulationDataset


def make_dataset(
    n_entities_per_pop=3,
    n_nodes=6,
    time_points=1,
    with_counts=True,
    seed=0,
    max_count=6,
):
    """Small random-but-valid dataset for plumbing tests."""
    rng = np.random.default_rng(seed)
    graphs, labels = [], {}
    entity = 1
    for pop in (1, 2):
        for _ in range(n_entities_per_pop):
            for t in range(time_points):
                counts = rng.integers(1, max_count + 1, size=n_nodes)
                i, j = np.tril_indices(n_nodes, -1)
                trials = np.minimum(counts[i], counts[j])
                vals = rng.binomial(trials, 0.4)
                w = np.zeros((n_nodes, n_nodes), dtype=np.int64)
                w[i, j] = vals
                w[j, i] = vals
                graphs.append(
                    GraphObservation(entity, t, w, counts if with_counts else None)
                )
            labels[entity] = pop
            entity += 1
    vocab = NodeVocabulary(tuple(f"n{v}" for v in range(n_nodes)))
    return PopulationDataset(vocab, tuple(graphs), labels)


@pytest.fixture
def small_dataset():
    return make_dataset()


@pytest.fixture
def small_dataset_no_counts():
    return make_dataset(with_counts=False)
