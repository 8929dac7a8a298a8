"""Streaming temporal PageRank, per-timestamp snapshots, and edge-rank scores.

The streaming pass keeps a score vector ``r`` and an active-mass vector ``s``
and applies a constant-time update per edge, so a full timeline costs
O(|E| + |V|·|T|) including one snapshot per distinct timestamp. The walk
enumerator in :func:`brute_force_tpr` recomputes the same quantity from the
decay-weighted temporal-walk semantics and is the validation oracle for the
streaming pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TimelineMismatchError
from .graphs import TemporalGraph

# Hard guards for the walk enumerator; it is exponential by design.
_MAX_ORACLE_NODES = 8
_MAX_ORACLE_EDGES = 12
_MAX_ORACLE_WALK = 6


@dataclass(frozen=True)
class TprParams:
    """Jump probability alpha in (0,1) and transition decay beta in [0,1]."""

    alpha: float = 0.85
    beta: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")


@dataclass(frozen=True)
class TprTimeline:
    """One node-importance vector per distinct timestamp.

    ``scores[i]`` is the snapshot taken after the last edge of
    ``timestamps[i]``; normalized rows sum to 1 unless all-zero. Raw
    (unnormalized) snapshots are retained only when requested.
    """

    timestamps: np.ndarray  # (T,)
    scores: np.ndarray  # (T, V)
    normalized: bool = True
    raw_scores: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.timestamps)

    def snapshot_at(self, timestamp: float) -> np.ndarray:
        i = int(np.searchsorted(self.timestamps, timestamp))
        if i >= len(self.timestamps) or self.timestamps[i] != timestamp:
            raise TimelineMismatchError(f"timestamp {timestamp} not in timeline")
        return self.scores[i]

    def final_snapshot(self) -> np.ndarray:
        if not len(self.timestamps):
            raise TimelineMismatchError("empty timeline has no final snapshot")
        return self.scores[-1]

    def to_csv(self) -> str:
        """timestamp x node score matrix, for the debug export flag."""
        lines = ["timestamp," + ",".join(f"n{i}" for i in range(self.scores.shape[1] if len(self) else 0))]
        for t, row in zip(self.timestamps, self.scores):
            lines.append(f"{t!r}," + ",".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"


def compute_tpr_stream(
    graph: TemporalGraph,
    params: TprParams = TprParams(),
    *,
    normalize: bool = True,
    store_raw: bool = False,
) -> TprTimeline:
    """Single pass over the stream, snapshotting after each distinct timestamp."""
    alpha, beta = params.alpha, params.beta
    n = graph.id_space_size
    m = graph.edge_count
    if m == 0:
        empty = np.empty((0, n))
        return TprTimeline(np.empty(0), empty, normalized=normalize, raw_scores=empty if store_raw else None)

    r = [0.0] * n
    s = [0.0] * n
    src = graph.sources.tolist()
    tgt = graph.targets.tolist()
    ts = graph.timestamps
    snaps: list[np.ndarray] = []
    boundaries = np.flatnonzero(np.diff(ts)).tolist() + [m - 1]
    bset = set(boundaries)
    one_minus_alpha = 1.0 - alpha
    for i in range(m):
        u = src[i]
        v = tgt[i]
        r[u] += one_minus_alpha
        s[u] += one_minus_alpha
        su = s[u]
        r[v] += alpha * su
        if beta < 1.0:
            s[v] += alpha * (1.0 - beta) * su
            s[u] = su * beta
        else:
            s[v] += alpha * su
            s[u] = 0.0
        if i in bset:
            snaps.append(np.array(r))

    raw = np.vstack(snaps)
    timestamps = ts[np.asarray(boundaries)]
    if normalize:
        sums = raw.sum(axis=1, keepdims=True)
        scores = np.divide(raw, np.where(sums > 0, sums, 1.0))
    else:
        scores = raw
    return TprTimeline(timestamps, scores, normalized=normalize, raw_scores=raw if store_raw else None)


def brute_force_tpr(graph: TemporalGraph, params: TprParams, max_walk_len: int) -> np.ndarray:
    """Normalized node scores by exhaustive temporal-walk enumeration.

    Every interaction seeds a walk start at its source; a walk may ride any
    later out-edge of its current node, decaying by beta for each out-event it
    skips (total-transfer semantics when beta is exactly 1). Walks are
    truncated at ``max_walk_len`` edges. Only meant for tiny instances.
    """
    n = graph.id_space_size
    m = graph.edge_count
    if graph.node_count > _MAX_ORACLE_NODES or m > _MAX_ORACLE_EDGES or max_walk_len > _MAX_ORACLE_WALK:
        raise ValueError(
            f"instance too large for enumeration: |V|={graph.node_count}, |E|={m}, L={max_walk_len} "
            f"(limits {_MAX_ORACLE_NODES}/{_MAX_ORACLE_EDGES}/{_MAX_ORACLE_WALK})"
        )
    alpha, beta = params.alpha, params.beta
    src = graph.sources.tolist()
    tgt = graph.targets.tolist()
    out_pos: dict[int, list[int]] = {}
    for i, u in enumerate(src):
        out_pos.setdefault(u, []).append(i)

    r = np.zeros(n)
    for u, events in out_pos.items():
        r[u] += (1.0 - alpha) * len(events)  # zero-length walk occurrences

    if max_walk_len < 1 or m == 0:
        total = r.sum()
        return r / total if total > 0 else r

    if beta < 1.0:
        def decay(skipped: int) -> float:
            return beta ** skipped
        cont = 1.0 - beta
    else:
        def decay(skipped: int) -> float:
            return 1.0 if skipped == 0 else 0.0
        cont = 1.0

    def extend(node: int, pos: int, length: int, mass: float) -> None:
        if length > max_walk_len:
            return
        events = out_pos.get(node)
        if not events:
            return
        skipped = 0
        for q in events:
            if q <= pos:
                continue
            w = mass * decay(skipped) * alpha
            skipped += 1
            if w == 0.0:
                continue
            r[tgt[q]] += w
            extend(tgt[q], q, length + 1, w * cont)

    for i, u in enumerate(src):
        # seed born at out-event i of u; may ride this or any later out-edge of u
        skipped = 0
        for q in out_pos[u]:
            if q < i:
                continue
            w = (1.0 - alpha) * decay(skipped) * alpha
            skipped += 1
            if w == 0.0:
                continue
            r[tgt[q]] += w
            extend(tgt[q], q, 2, w * cont)

    total = r.sum()
    return r / total if total > 0 else r


def _check_timeline(graph: TemporalGraph, timeline: TprTimeline) -> None:
    expected = graph.distinct_timestamps()
    if len(expected) != len(timeline.timestamps) or not np.array_equal(expected, timeline.timestamps):
        raise TimelineMismatchError("timeline timestamps do not match the graph's distinct timestamps")


def compute_ter(graph: TemporalGraph, timeline: TprTimeline) -> dict[float, float]:
    """Per-timestamp edge-rank: sum over that timestamp's source nodes of
    snapshot score divided by whole-stream outgoing degree."""
    _check_timeline(graph, timeline)
    out_deg = np.bincount(graph.sources, minlength=graph.id_space_size)
    ter: dict[float, float] = {}
    ts = graph.timestamps
    starts = np.searchsorted(ts, timeline.timestamps, side="left")
    ends = np.searchsorted(ts, timeline.timestamps, side="right")
    for snap, t, lo, hi in zip(timeline.scores, timeline.timestamps, starts, ends):
        nodes_t = np.unique(graph.sources[lo:hi])
        ter[float(t)] = float(np.sum(snap[nodes_t] / out_deg[nodes_t]))
    return ter


def edge_rank_scores(
    graph: TemporalGraph,
    timeline: TprTimeline,
    *,
    weight: float = 1.0,
) -> np.ndarray:
    """Per-edge influence scores blending two attribution views.

    local:  source score in the snapshot at the edge's own timestamp,
    global: source score in the final snapshot, both normalized by the
    source's whole-stream out-degree. ``weight`` = 1 reduces to the pure
    per-timestamp attribution, 0 to the final-snapshot attribution.
    """
    if not (0.0 <= weight <= 1.0):
        raise ValueError(f"blend weight must be in [0, 1], got {weight}")
    _check_timeline(graph, timeline)
    if graph.edge_count == 0:
        return np.empty(0)
    out_deg = np.bincount(graph.sources, minlength=graph.id_space_size)
    snap_idx = np.searchsorted(timeline.timestamps, graph.timestamps)
    local = timeline.scores[snap_idx, graph.sources] / out_deg[graph.sources]
    final = timeline.final_snapshot()
    global_ = final[graph.sources] / out_deg[graph.sources]
    return weight * local + (1.0 - weight) * global_


def compute_combined_ter(
    graph: TemporalGraph,
    timeline: TprTimeline,
    weight: float = 0.5,
) -> np.ndarray:
    """Blended local/global per-edge scores (default equal weight)."""
    return edge_rank_scores(graph, timeline, weight=weight)
