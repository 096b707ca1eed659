"""Anomaly detection in time series of vertex-matched graphs.

Graphs observed over time are embedded jointly into a shared latent space
(either through the omnibus matrix or through a common invariant subspace),
and anomalies are flagged either by Shewhart-style control charts on the
latent displacement statistics or by parametric-bootstrap p-values.
"""

from .embedding import (
    LatentPositions,
    MaseResult,
    OmniResult,
    ase,
    mase_embed,
    omni_embed,
    omnibus_matrix,
    select_dim,
    singular_values,
)
from .series import (
    EdgeListError,
    GraphSeries,
    inject_clique,
    largest_joint_component,
    load_edge_list,
    normalize_weights,
)
from .simulate import (
    LatentSeries,
    PowerRow,
    PowerTable,
    membership_positions,
    power_experiment,
    rdpg_sample,
    sample_series,
    scenario1,
    scenario_mmsbm,
)
from .stats import (
    ControlChart,
    DetectionReport,
    StatSeries,
    bootstrap_null,
    c4,
    chart_graph,
    chart_vertex,
    compute_stats,
    detect_chart,
    detect_pvalue,
    empirical_pvalue,
    graph_stat,
    reciprocal_ranks,
    rr_gap,
    vertex_stat,
)

__version__ = "0.1.0"

__all__ = [
    "EdgeListError",
    "GraphSeries",
    "LatentPositions",
    "LatentSeries",
    "MaseResult",
    "OmniResult",
    "ControlChart",
    "DetectionReport",
    "PowerRow",
    "PowerTable",
    "StatSeries",
    "ase",
    "bootstrap_null",
    "c4",
    "chart_graph",
    "chart_vertex",
    "compute_stats",
    "detect_chart",
    "detect_pvalue",
    "empirical_pvalue",
    "graph_stat",
    "inject_clique",
    "largest_joint_component",
    "load_edge_list",
    "mase_embed",
    "membership_positions",
    "normalize_weights",
    "omni_embed",
    "omnibus_matrix",
    "power_experiment",
    "rdpg_sample",
    "reciprocal_ranks",
    "rr_gap",
    "sample_series",
    "scenario1",
    "scenario_mmsbm",
    "select_dim",
    "singular_values",
    "vertex_stat",
]
