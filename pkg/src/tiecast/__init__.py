"""Tie-strength (edge weight) prediction from network topology."""

__version__ = "0.1.0"

from .errors import DivergenceError, DomainError, ParseError, TiecastError
from .graph import (
    GraphStats,
    MergeRule,
    NormalizeOptions,
    WeightedGraph,
    WeightSpace,
    common_neighbors,
    load_edge_list,
    map_weights,
    neighbors,
    read_edge_list,
    stats,
    strength,
    write_edge_list,
)
from .partition import Partition, make_partitions, split
from .baselines import BaselineKind, predict_baseline, score
from .model import (
    FeatureRow,
    ModelParams,
    TrainingTrace,
    build_feature_matrix,
    connection_inclination,
    fit_value,
    gradient,
    loss,
    predict,
    ridge_oracle,
    train,
)
from .evaluation import (
    DistributionSummary,
    EvalReport,
    h_diff,
    inclination_distributions,
    pcc,
    rmse,
    w_diff,
    weight_distribution,
)
from .experiment import (
    FromModel,
    UniformMapped,
    compare_methods,
    gen_synthetic,
    perturbation_curves,
    run_protocol,
    scaling_bench,
    sweep_k,
)
