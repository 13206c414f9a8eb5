"""Bayesian two-sample testing for populations of count-weighted graphs.

Fit a mixture of low-rank latent-space models to two labeled populations
of graphs by Gibbs sampling, then ask at three resolutions whether the
populations differ: overall (population test), per entity pair, and per
edge.
"""

from .data import (
    DatasetError,
    GraphObservation,
    NodeVocabulary,
    PopulationDataset,
    binarize_threshold,
    devectorize,
    edge_pairs,
    load_dataset,
    save_dataset,
    vectorize,
)
from .diagnostics import effective_sample_size
from .estimator import GraphPopulationTester
from .harness import (
    CurvePoint,
    ExperimentPlan,
    aggregate_power_rows,
    run_power_curve,
    run_threshold_sweep,
)
from .hypotheses import (
    EdgeTestResult,
    EntityTestResult,
    PopulationTestResult,
    edge_statistic,
    edge_statistic_values,
    entity_test_value,
    entity_tests,
    log_multivariate_beta,
    population_test,
    posterior_prob_h1,
)
from .model import ClusterParams, Hyperparams, compute_theta, edge_log_likelihood
from .polya_gamma import pg_mean, pg_variance, sample_polya_gamma
from .sampler import McmcConfig, SamplerState, Trace, TraceRecord, init_state, run_chain
from .synth import (
    StructureSpec,
    SyntheticConfig,
    default_heterogeneous_specs,
    default_homogeneous_specs,
    generate_graph,
    generate_heterogeneous,
    generate_homogeneous,
    sample_zipf_counts,
)

__version__ = "0.1.0"

__all__ = [
    "DatasetError",
    "GraphObservation",
    "NodeVocabulary",
    "PopulationDataset",
    "binarize_threshold",
    "devectorize",
    "edge_pairs",
    "load_dataset",
    "save_dataset",
    "vectorize",
    "effective_sample_size",
    "GraphPopulationTester",
    "CurvePoint",
    "ExperimentPlan",
    "aggregate_power_rows",
    "run_power_curve",
    "run_threshold_sweep",
    "EdgeTestResult",
    "EntityTestResult",
    "PopulationTestResult",
    "edge_statistic",
    "edge_statistic_values",
    "entity_test_value",
    "entity_tests",
    "log_multivariate_beta",
    "population_test",
    "posterior_prob_h1",
    "ClusterParams",
    "Hyperparams",
    "compute_theta",
    "edge_log_likelihood",
    "pg_mean",
    "pg_variance",
    "sample_polya_gamma",
    "McmcConfig",
    "SamplerState",
    "Trace",
    "TraceRecord",
    "init_state",
    "run_chain",
    "StructureSpec",
    "SyntheticConfig",
    "default_heterogeneous_specs",
    "default_homogeneous_specs",
    "generate_graph",
    "generate_heterogeneous",
    "generate_homogeneous",
    "sample_zipf_counts",
]
