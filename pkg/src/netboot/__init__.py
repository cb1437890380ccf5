"""Subsampling bootstrap for network statistics.

Confidence intervals for statistics of a single observed graph from node,
row or node-pair subsamples, a double bootstrap for choosing the sampling
fraction, and the statistics it is applied to: normalized triangle density,
number of communities and coefficients of regression with network cohesion.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .bootstrap import (
    BootstrapRun,
    QSelection,
    bootstrap_ci,
    choose_q,
    coverage_experiment,
    percentile_ci,
    percentile_indices,
)
from .community import BetheHessianK, EcvAucK, KEstimate, auc, bethe_hessian_k, ecv_auc_k
from .errors import (
    NetbootError,
    InvalidNode,
    SelfLoopRejected,
    ParseError,
    InvalidFraction,
    InfeasibleDensity,
    EmptySample,
    InvalidRank,
    Undefined,
    NoEdges,
    UndefinedAUC,
    SelectionFailed,
    InvalidInput,
    DegenerateDesign,
    ConfigError,
    DegenerateRunWarning,
    MaxIterationsWarning,
)
from .generators import SbmParams, generate_er, generate_sbm
from .graph import Graph, build_graph, laplacian, read_edge_list, write_edge_list
from .regression import (
    CohesionBeta,
    CohesionDesign,
    CohesionFit,
    beta_uncertainty,
    fit_cohesion,
    fit_cohesion_lasso,
    naive_node_bootstrap,
    stability_selection,
)
from .statistics import (
    EdgeDensity,
    StatisticValue,
    TriangleDensity,
    edge_density,
    get_statistic,
    normalized_triangle_density,
    partial_triangle_density,
    triangle_count,
)
from .subsampling import (
    PartialGraph,
    SamplingPlan,
    complete_low_rank,
    node_sample,
    pair_sample,
    p_to_q,
    q_to_p,
    row_sample,
    subsample,
)
