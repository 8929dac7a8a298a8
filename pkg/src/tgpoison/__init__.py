"""Perturbation toolkit for continuous-time dynamic graphs.

Two-phase training-set poisoning: rank and remove the most temporally
important interactions, then replace them with adversarial negatives that
keep the stream's timestamp distribution, activity windows, and per-node
degree balance intact. Ships the full strategy catalog, ADD/REM baselines,
an independent constraint auditor, and a scaling benchmark.
"""

from .audit import ALL_CHECKS, AuditReport, AuditThresholds, audit
from .drift import DRIFT_KINDS, DriftMetric, binarize_topk, drift
from .errors import (
    InfeasibleSamplingError,
    MalformedStreamError,
    PlanMismatchError,
    TgPoisonError,
    TimelineMismatchError,
    UnsupportedStrategyError,
)
from .estimators import EdgeSparsifier, TemporalGraphPoisoner
from .graphs import (
    ActivityIndex,
    DatasetFormat,
    DegreeLedger,
    StaticAggregate,
    TemporalEdge,
    TemporalGraph,
    active_nodes,
    aggregate_until,
    chronological_split,
    from_edges,
    parse_edge_stream,
    read_format,
    serialize_edge_stream,
    write_format,
)
from .manifest import (
    dumps_records,
    insertion_records,
    parse_manifest,
    read_manifest,
    removal_records,
    write_manifest,
)
from .pipeline import (
    AttackConfig,
    BenchmarkResult,
    RunResult,
    benchmark,
    catalog,
    run_attack,
    run_baseline,
)
from .sampling import (
    InsertedEdge,
    InsertionPlan,
    KdeModel,
    SamplerParams,
    fit_kde,
    insertion_positioning,
    timestamp_selector,
)
from .sparsify import (
    RemovalPlan,
    SparsifyStrategy,
    compute_budget,
    rank_timestamps,
    score_edges,
    select_removals,
    strategy_catalog,
    strategy_from_name,
)
from .synthetic import replicated_stream, uniform_stream
from .tpr import (
    TprParams,
    TprTimeline,
    brute_force_tpr,
    compute_combined_ter,
    compute_ter,
    compute_tpr_stream,
    edge_rank_scores,
)

__version__ = "0.1.0"
