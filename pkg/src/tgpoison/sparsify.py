"""Attack step 1: pick exactly a budget of edges to remove.

Three strategy families share one selection surface:

* EdgeHeuristic - static scores (degree sum, preferential attachment,
  Jaccard, PageRank, seeded random) computed on the aggregate of everything
  up to each edge's own timestamp. The aggregate is grown incrementally in
  one time-ordered pass, so scoring is amortized over the stream.
* EdgeRank - per-edge temporal influence attribution from the streaming
  score timeline, either the per-timestamp view or the local/global blend.
* TimestampDrift - rank distinct timestamps by snapshot drift and consume
  whole timestamps until the budget forces a partial pick.

All rankings are stable: ties break by stream order, so identical inputs and
seeds always produce identical plans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .drift import DRIFT_KINDS, DriftMetric, drift
from .errors import UnsupportedStrategyError
from .graphs import TemporalGraph, _FLOOR_EPS
from .tpr import TprParams, TprTimeline, compute_tpr_stream, edge_rank_scores

EDGE_HEURISTICS = ("Degree", "Jaccard", "PageRank", "Preference", "Random")
EDGE_RANK_VARIANTS = ("TER", "Combined-TER")

# Static PageRank settings used on aggregates (power method).
PAGERANK_DAMPING = 0.85
PAGERANK_MAX_ITER = 100
PAGERANK_TOL = 1e-9


def compute_budget(edge_count: int, p: float) -> int:
    """Perturbation budget: floor(p * edge_count)."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"perturbation rate must be in [0, 1], got {p}")
    return int(math.floor(p * edge_count + _FLOOR_EPS))


@dataclass(frozen=True)
class SparsifyStrategy:
    """One populated strategy family plus its knobs.

    ``use_raw_snapshots`` switches the score timeline feeding the EdgeRank
    and drift families from per-timestamp normalized vectors (the default)
    to raw accumulated scores.
    """

    family: str
    heuristic: str | None = None
    metric: DriftMetric | None = None
    variant: str | None = None
    seed: int | None = None
    tpr: TprParams = field(default_factory=TprParams)
    combined_weight: float = 0.5
    use_raw_snapshots: bool = False
    name: str = ""

    def __post_init__(self):
        if self.family == "EdgeHeuristic":
            if self.heuristic not in EDGE_HEURISTICS:
                raise ValueError(f"unknown edge heuristic {self.heuristic!r}")
            if self.metric is not None or self.variant is not None:
                raise ValueError("EdgeHeuristic strategy must not carry metric/variant parameters")
            if self.heuristic == "Random" and self.seed is None:
                raise ValueError("Random heuristic requires a seed")
        elif self.family == "TimestampDrift":
            if self.metric is None:
                raise ValueError("TimestampDrift strategy requires a drift metric")
            if self.heuristic is not None or self.variant is not None:
                raise ValueError("TimestampDrift strategy must not carry heuristic/variant parameters")
        elif self.family == "EdgeRank":
            if self.variant not in EDGE_RANK_VARIANTS:
                raise ValueError(f"unknown edge-rank variant {self.variant!r}")
            if self.heuristic is not None or self.metric is not None:
                raise ValueError("EdgeRank strategy must not carry heuristic/metric parameters")
        else:
            raise ValueError(f"unknown strategy family {self.family!r}")
        if not self.name:
            object.__setattr__(self, "name", self._default_name())

    def _default_name(self) -> str:
        if self.family == "EdgeHeuristic":
            return self.heuristic
        if self.family == "EdgeRank":
            return self.variant
        return _DRIFT_TAGS[self.metric.kind]


# Catalog names for the drift family; the top-k support metric is sold under
# the plain "TPR-Jaccard" tag.
_DRIFT_TAGS = {kind: f"TPR-{'Jaccard' if kind == 'JaccardTopK' else kind}" for kind in DRIFT_KINDS}
_DRIFT_NAMES = {tag: kind for kind, tag in _DRIFT_TAGS.items()}


def strategy_catalog() -> tuple[str, ...]:
    """All registered sparsification strategy names."""
    return EDGE_HEURISTICS + EDGE_RANK_VARIANTS + tuple(_DRIFT_NAMES)


def strategy_from_name(
    name: str,
    *,
    seed: int = 0,
    tpr: TprParams | None = None,
    topk: int | None = None,
    epsilon: float = 1e-12,
    combined_weight: float = 0.5,
    use_raw_snapshots: bool = False,
) -> SparsifyStrategy:
    """Resolve a catalog name into a configured strategy."""
    tpr = tpr or TprParams()
    if name in EDGE_HEURISTICS:
        return SparsifyStrategy(
            family="EdgeHeuristic",
            heuristic=name,
            seed=seed if name == "Random" else None,
            tpr=tpr,
            combined_weight=combined_weight,
        )
    if name in EDGE_RANK_VARIANTS:
        return SparsifyStrategy(
            family="EdgeRank",
            variant=name,
            tpr=tpr,
            combined_weight=combined_weight,
            use_raw_snapshots=use_raw_snapshots,
        )
    if name in _DRIFT_NAMES:
        metric = DriftMetric(kind=_DRIFT_NAMES[name], topk=topk, epsilon=epsilon)
        return SparsifyStrategy(
            family="TimestampDrift",
            metric=metric,
            tpr=tpr,
            combined_weight=combined_weight,
            use_raw_snapshots=use_raw_snapshots,
        )
    raise UnsupportedStrategyError(f"unknown strategy {name!r}; see strategy_catalog()")


@dataclass(frozen=True)
class RemovalPlan:
    """Chosen removals in rank order, with provenance.

    ``removed_indices`` point into the training stream; every index lies in
    the attacker-visible prefix. ``budget`` is the effective budget after
    capping at the visible stream size (``capped`` records whether the cap
    was hit - surfaced as an error upstream).
    """

    removed_indices: tuple[int, ...]
    scores: tuple[float, ...]
    budget: int
    requested_budget: int
    strategy: str
    family: str
    knowledge: float
    capped: bool = False

    def __post_init__(self):
        if len(self.removed_indices) != self.budget:
            raise ValueError(
                f"plan size {len(self.removed_indices)} does not match budget {self.budget}"
            )
        if len(self.scores) != len(self.removed_indices):
            raise ValueError("scores must align with removed indices")

    def __len__(self) -> int:
        return len(self.removed_indices)


def pagerank_scores(
    sources: np.ndarray,
    targets: np.ndarray,
    n: int,
    damping: float = PAGERANK_DAMPING,
    max_iter: int = PAGERANK_MAX_ITER,
    tol: float = PAGERANK_TOL,
) -> np.ndarray:
    """Power-method PageRank on a directed multigraph given as edge arrays."""
    pr = np.full(n, 1.0 / n)
    if len(sources) == 0:
        return pr
    outdeg = np.bincount(sources, minlength=n).astype(np.float64)
    dangling = outdeg == 0.0
    safe_out = np.where(dangling, 1.0, outdeg)
    for _ in range(max_iter):
        share = pr / safe_out
        nxt = np.zeros(n)
        np.add.at(nxt, targets, share[sources])
        nxt = (1.0 - damping) / n + damping * (nxt + pr[dangling].sum() / n)
        delta = np.abs(nxt - pr).sum()
        pr = nxt
        if delta < tol:
            break
    return pr


def score_edges(graph: TemporalGraph, strategy: SparsifyStrategy) -> np.ndarray:
    """Per-edge importance under an EdgeHeuristic or EdgeRank strategy.

    Heuristic scores are evaluated against the aggregate of all interactions
    up to (and including) each edge's own timestamp.
    """
    if strategy.family == "EdgeRank":
        timeline = compute_tpr_stream(graph, strategy.tpr, normalize=not strategy.use_raw_snapshots)
        weight = 1.0 if strategy.variant == "TER" else strategy.combined_weight
        return edge_rank_scores(graph, timeline, weight=weight)
    if strategy.family != "EdgeHeuristic":
        raise UnsupportedStrategyError(f"score_edges does not handle family {strategy.family!r}")

    m = graph.edge_count
    if strategy.heuristic == "Random":
        rng = np.random.default_rng(strategy.seed)
        return rng.random(m)
    if strategy.heuristic == "Jaccard" and graph.bipartite:
        raise UnsupportedStrategyError(
            "Jaccard neighborhoods are undefined on bipartite graphs"
        )

    n = graph.id_space_size
    scores = np.zeros(m)
    if m == 0:
        return scores
    src = graph.sources.tolist()
    tgt = graph.targets.tolist()
    ts = graph.timestamps
    group_ends = np.searchsorted(ts, np.unique(ts), side="right")

    heuristic = strategy.heuristic
    degree = np.zeros(n, dtype=np.int64)
    neighbor_sets: list[set[int]] | None = None
    if heuristic == "Jaccard":
        neighbor_sets = [set() for _ in range(n)]

    lo = 0
    for hi in group_ends.tolist():
        for i in range(lo, hi):  # grow the aggregate with the whole timestamp group
            degree[src[i]] += 1
            degree[tgt[i]] += 1
            if neighbor_sets is not None:
                neighbor_sets[src[i]].add(tgt[i])
                neighbor_sets[tgt[i]].add(src[i])
        if heuristic == "Degree":
            for i in range(lo, hi):
                scores[i] = degree[src[i]] + degree[tgt[i]]
        elif heuristic == "Preference":
            for i in range(lo, hi):
                scores[i] = degree[src[i]] * degree[tgt[i]]
        elif heuristic == "Jaccard":
            for i in range(lo, hi):
                a, b = neighbor_sets[src[i]], neighbor_sets[tgt[i]]
                union = len(a | b)
                scores[i] = len(a & b) / union if union else 0.0
        elif heuristic == "PageRank":
            pr = pagerank_scores(graph.sources[:hi], graph.targets[:hi], n)
            for i in range(lo, hi):
                scores[i] = pr[src[i]] + pr[tgt[i]]
        lo = hi
    return scores


def ranked_order(scores: np.ndarray) -> np.ndarray:
    """Edge indices by descending score; ties keep stream order."""
    return np.argsort(-np.asarray(scores), kind="stable")


def rank_timestamps(timeline: TprTimeline, metric: DriftMetric) -> list[tuple[float, float]]:
    """Timestamps ranked by drift against the previous snapshot.

    The first timestamp has no predecessor; it gets drift 0 and sorts after
    other timestamps of equal drift. Remaining ties break toward the earlier
    timestamp.
    """
    t_count = len(timeline)
    if t_count < 2:
        raise ValueError(f"need at least 2 distinct timestamps to rank drift, got {t_count}")
    deltas = [0.0]
    for i in range(1, t_count):
        deltas.append(drift(timeline.scores[i - 1], timeline.scores[i], metric))
    order = sorted(
        range(t_count),
        key=lambda i: (-deltas[i], 1 if i == 0 else 0, timeline.timestamps[i]),
    )
    return [(float(timeline.timestamps[i]), float(deltas[i])) for i in order]


def select_removals(
    train: TemporalGraph,
    strategy: SparsifyStrategy,
    p: float,
    knowledge: float = 1.0,
    *,
    budget_basis: str = "train",
) -> RemovalPlan:
    """Produce the removal plan for one strategy at perturbation rate p.

    The attacker sees (and may remove from) only the first
    ``floor(knowledge * |E_train|)`` edges. ``budget_basis`` selects whether
    the budget is ``floor(p * |E_train|)`` (default) or relative to the
    visible prefix (used by knowledge-ablation sweeps); either way the
    effective budget is capped at the visible stream size.
    """
    if not (0.0 < knowledge <= 1.0):
        raise ValueError(f"knowledge fraction must be in (0, 1], got {knowledge}")
    if budget_basis not in ("train", "visible"):
        raise ValueError(f"budget_basis must be 'train' or 'visible', got {budget_basis!r}")
    n_train = train.edge_count
    visible_n = int(math.floor(knowledge * n_train + _FLOOR_EPS))
    visible = train.slice_edges(0, visible_n)
    requested = compute_budget(n_train if budget_basis == "train" else visible_n, p)
    budget = min(requested, visible_n)
    capped = requested > visible_n

    if budget == 0:
        return RemovalPlan((), (), 0, requested, strategy.name, strategy.family, knowledge, capped)

    if strategy.family in ("EdgeHeuristic", "EdgeRank"):
        scores = score_edges(visible, strategy)
        order = ranked_order(scores)[:budget]
        return RemovalPlan(
            tuple(int(i) for i in order),
            tuple(float(scores[i]) for i in order),
            budget,
            requested,
            strategy.name,
            strategy.family,
            knowledge,
            capped,
        )

    # TimestampDrift: consume whole timestamps in drift-rank order, then fill
    # the remainder from the first timestamp that would overflow the budget.
    timeline = compute_tpr_stream(visible, strategy.tpr, normalize=not strategy.use_raw_snapshots)
    ranking = rank_timestamps(timeline, strategy.metric)
    combined = edge_rank_scores(visible, timeline, weight=strategy.combined_weight)
    ts_arr = visible.timestamps
    chosen: list[int] = []
    deltas: list[float] = []
    remaining = budget
    for t, delta in ranking:
        lo = int(np.searchsorted(ts_arr, t, side="left"))
        hi = int(np.searchsorted(ts_arr, t, side="right"))
        idxs = list(range(lo, hi))
        if len(idxs) <= remaining:
            take = idxs
        else:
            by_combined = sorted(idxs, key=lambda i: (-combined[i], i))
            take = sorted(by_combined[:remaining])
        chosen.extend(take)
        deltas.extend([delta] * len(take))
        remaining -= len(take)
        if remaining == 0:
            break
    return RemovalPlan(
        tuple(chosen),
        tuple(deltas),
        budget,
        requested,
        strategy.name,
        strategy.family,
        knowledge,
        capped,
    )
