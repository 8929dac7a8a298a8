"""Attack step 2: replace removed edges with plausible adversarial negatives.

For every removed edge the selector emits one new edge that

* draws its timestamp from a Gaussian kernel density fit of the visible
  stream's timestamps (temporal plausibility),
* connects two nodes active inside the window ``[t - W, t]`` (activity),
* is novel - the pair never interacted in either direction in the visible
  stream and is not repeated among insertions,
* keeps every node's per-direction degree balance within the capacity cap
  (degree preservation), by compensating the nodes that lost edges first.

When a pass cannot fill the budget, a recovery round refits the kernel
density model and draws a fresh set of candidate timestamps without relaxing
any constraint.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, replace

import numpy as np

from .errors import InfeasibleSamplingError, PlanMismatchError
from .graphs import ActivityIndex, DegreeLedger, TemporalGraph, _FLOOR_EPS
from .sparsify import RemovalPlan

_BANDWIDTH_RANGE_FLOOR = 1e-6
_BANDWIDTH_ABS_FLOOR = 1e-9


@dataclass(frozen=True)
class KdeModel:
    """Gaussian kernel density over empirical timestamps, clamped to range."""

    sample: np.ndarray
    bandwidth: float
    clamp: tuple[float, float]

    def draw(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        centers = self.sample[rng.integers(0, len(self.sample), size)]
        values = centers + rng.normal(0.0, self.bandwidth, size)
        return np.clip(values, self.clamp[0], self.clamp[1])

    def draw_one(self, rng: np.random.Generator) -> float:
        return float(self.draw(rng, 1)[0])


def fit_kde(timestamps: np.ndarray) -> KdeModel:
    """Scott's-rule Gaussian KDE with a floored bandwidth for degenerate samples."""
    sample = np.asarray(timestamps, dtype=np.float64)
    if len(sample) == 0:
        raise ValueError("cannot fit a timestamp density on an empty sample")
    lo, hi = float(sample.min()), float(sample.max())
    bandwidth = float(np.std(sample)) * len(sample) ** (-1.0 / 5.0)
    floor = max(_BANDWIDTH_RANGE_FLOOR * (hi - lo), _BANDWIDTH_ABS_FLOOR)
    return KdeModel(sample=sample, bandwidth=max(bandwidth, floor), clamp=(lo, hi))


@dataclass(frozen=True)
class SamplerParams:
    """Insertion knobs: activity window, per-node capacity and retry budget."""

    window: float
    node_capacity: int = 1
    max_attempts: int = 5
    rng_seed: int = 0
    draws_per_slot: int = 20

    def __post_init__(self):
        if self.window <= 0:
            raise ValueError(f"window must be positive, got {self.window}")
        if self.node_capacity < 1:
            raise ValueError(f"node capacity must be >= 1, got {self.node_capacity}")
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1, got {self.max_attempts}")
        if self.draws_per_slot < 1:
            raise ValueError(f"draws_per_slot must be >= 1, got {self.draws_per_slot}")


@dataclass(frozen=True)
class InsertedEdge:
    """One adversarial edge plus full provenance."""

    source: int
    target: int
    timestamp: float
    compensates: int  # index of the removed edge this insertion offsets
    attempt: int  # which timestamp draw produced it (1-based, within its round)
    round: int  # 0 = primary pass, >= 1 = recovery rounds
    recovered: bool


@dataclass(frozen=True)
class InsertionPlan:
    """Emitted insertions, in order, plus the budget they were asked to meet."""

    inserted: tuple[InsertedEdge, ...]
    budget: int
    rounds_used: int = 0

    def __len__(self) -> int:
        return len(self.inserted)

    @property
    def complete(self) -> bool:
        return len(self.inserted) == self.budget


def _pair_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a <= b else (b, a)


def timestamp_selector(
    train: TemporalGraph,
    removal: RemovalPlan,
    params: SamplerParams,
) -> InsertionPlan:
    """Pick one novel, window-valid, degree-balancing edge per removed edge.

    Nodes are served in structural-priority order: largest outstanding
    deletion deficit first, ties broken by higher original degree then lower
    node id. Partner choice prefers nodes that still owe in-degree and, among
    those, the one whose latest activity is temporally farthest from the
    sampled timestamp (the least likely interaction).
    """
    budget = len(removal.removed_indices)
    if budget == 0:
        return InsertionPlan((), 0)

    visible_n = int(math.floor(removal.knowledge * train.edge_count + _FLOOR_EPS))
    visible = train.slice_edges(0, visible_n)
    if max(removal.removed_indices) >= visible_n:
        raise PlanMismatchError("removal plan points outside the attacker-visible stream")

    n = train.id_space_size
    cap = params.node_capacity
    ledger = DegreeLedger.from_graph(visible)
    for idx in removal.removed_indices:
        ledger.record_deletion(int(train.sources[idx]), int(train.targets[idx]))

    # FIFO queues of removal indices per source node, for provenance pairing.
    owed: dict[int, list[int]] = {}
    for idx in sorted(removal.removed_indices):
        owed.setdefault(int(train.sources[idx]), []).append(idx)

    activity = ActivityIndex(visible)
    known_pairs: set[tuple[int, int]] = set(
        _pair_key(int(u), int(v)) for u, v in zip(visible.sources, visible.targets)
    )

    total_deficit = (
        ledger.deletions_out + ledger.deletions_in - ledger.insertions_out - ledger.insertions_in
    )
    original_degree = ledger.original_out + ledger.original_in
    order = sorted(
        range(n),
        key=lambda v: (-int(total_deficit[v]), -int(original_degree[v]), v),
    )
    order = [v for v in order if ledger.deletions_out[v] > 0]

    boundary = train.partition_boundary
    rng = np.random.default_rng(params.rng_seed)
    inserted: list[InsertedEdge] = []
    new_pairs: set[tuple[int, int]] = set()
    starved = {"source_inactive": 0, "no_active_candidates": 0, "novelty": 0, "capacity": 0}
    rounds_used = 0

    # hot-loop state as plain lists: outstanding in-degree owed per node, and
    # per-node sorted event times for the temporal-distance partner choice
    in_need = (ledger.deletions_in - ledger.insertions_in).tolist()
    out_need = (ledger.deletions_out - ledger.insertions_out).tolist()
    events = {node: ev.tolist() for node, ev in visible.node_events().items()}
    pool_lists: dict[int, list[int]] = {}  # keyed by identity of memoized windows

    def pool_for(lo: float, t: float) -> list[int]:
        arr = activity.active_in(lo, t)
        key = id(arr)
        plist = pool_lists.get(key)
        if plist is None:
            if boundary is not None:
                plist = [c for c in arr.tolist() if c >= boundary]
            else:
                plist = arr.tolist()
            pool_lists[key] = plist
        return plist

    def select_best(candidates: list[int], t: float) -> int:
        # temporally farthest last activity; ties toward the lower node id
        best = candidates[0]
        best_gap = -1.0
        for c in candidates:
            ev = events[c]
            last = ev[bisect_right(ev, t) - 1]
            gap = t - last
            if gap > best_gap:
                best, best_gap = c, gap
        return best

    def emit(v: int, target: int, t: float, attempt: int, round_no: int) -> None:
        inserted.append(
            InsertedEdge(
                source=v,
                target=target,
                timestamp=t,
                compensates=owed[v].pop(0),
                attempt=attempt,
                round=round_no,
                recovered=round_no > 0,
            )
        )
        ledger.record_insertion(v, target)
        in_need[target] -= 1
        out_need[v] -= 1
        new_pairs.add(_pair_key(v, target))

    def try_swap(v: int, t: float, attempt: int, round_no: int, eligible: list[int]) -> bool:
        # backtracking repair: v cannot serve any still-needy target directly,
        # so retarget one earlier insertion (s -> w) to a needy z that s CAN
        # serve, and let v take over w; every constraint is re-checked
        needy_left = sorted((z for z in range(n) if in_need[z] > 0), key=lambda z: (-in_need[z], z))
        eligible_set = set(eligible)
        for z in needy_left:
            z_events = events.get(z)
            if not z_events:
                continue
            for idx, e in enumerate(inserted):
                s, w = e.source, e.target
                if w not in eligible_set or s == z:
                    continue
                key_sz = _pair_key(s, z)
                if key_sz in known_pairs or key_sz in new_pairs:
                    continue
                i = bisect_right(z_events, e.timestamp)
                if not i or z_events[i - 1] < e.timestamp - params.window:
                    continue  # z inactive in the old edge's window
                inserted[idx] = replace(e, target=z, round=round_no, recovered=True)
                new_pairs.discard(_pair_key(s, w))
                new_pairs.add(key_sz)
                ledger.insertions_in[w] -= 1
                ledger.insertions_in[z] += 1
                in_need[w] += 1
                in_need[z] -= 1
                emit(v, w, t, attempt, round_no)
                return True
        return False

    def try_insert(v: int, round_no: int, allow_fallback: bool) -> bool:
        kde = kde_model  # bound per round
        # prefer partners that still owe in-degree; partners that are merely
        # within capacity are a last resort, allowed only in recovery rounds
        # and preceded by a backtracking attempt to keep degrees balanced
        fallback: tuple[int, float, int] | None = None
        for attempt in range(1, params.draws_per_slot + 1):
            t = kde.draw_one(rng)
            lo = t - params.window
            if not activity.is_active(v, lo, t):
                starved["source_inactive"] += 1
                continue
            pool = pool_for(lo, t)
            if not pool:
                starved["no_active_candidates"] += 1
                continue
            novel = [
                c
                for c in pool
                if c != v
                and _pair_key(v, c) not in known_pairs
                and _pair_key(v, c) not in new_pairs
            ]
            if not novel:
                starved["novelty"] += 1
                continue
            needy = [c for c in novel if in_need[c] > 0]
            if needy:
                emit(v, select_best(needy, t), t, attempt, round_no)
                return True
            if allow_fallback and fallback is None:
                eligible = [c for c in novel if in_need[c] > -cap]
                if eligible:
                    if try_swap(v, t, attempt, round_no, eligible):
                        return True
                    fallback = (attempt, t, select_best(eligible, t))
                else:
                    starved["capacity"] += 1
        if fallback is not None:
            attempt, t, target = fallback
            emit(v, target, t, attempt, round_no)
            return True
        return False

    kde_model = fit_kde(visible.timestamps)
    for round_no in range(params.max_attempts + 1):
        if round_no > 0:
            kde_model = fit_kde(visible.timestamps)  # recovery: fresh candidate times
        rounds_used = round_no
        allow_fallback = round_no >= 1  # primary pass stays strict
        for v in order:
            while out_need[v] > 0 and len(inserted) < budget:
                if not try_insert(v, round_no, allow_fallback):
                    break
        if len(inserted) == budget:
            break

    plan = InsertionPlan(tuple(inserted), budget, rounds_used=rounds_used)
    if not plan.complete:
        diagnosis = max(starved, key=lambda k: starved[k])
        raise InfeasibleSamplingError(
            f"insertion budget unmet: {len(inserted)}/{budget} after "
            f"{params.max_attempts} recovery rounds (dominant starvation: {diagnosis}, counts {starved})",
            partial_plan=plan,
            diagnosis=diagnosis,
        )
    return plan


def insertion_positioning(
    train: TemporalGraph,
    removal: RemovalPlan,
    insertion: InsertionPlan,
) -> TemporalGraph:
    """Apply both plans: drop removals, merge insertions in timestamp order.

    Inserted edges carry zero-filled features and label 0. At equal
    timestamps surviving original edges keep their relative order and
    insertions follow them (stable merge).
    """
    if len(removal.removed_indices) != len(insertion.inserted):
        raise PlanMismatchError(
            f"{len(removal.removed_indices)} removals vs {len(insertion.inserted)} insertions"
        )
    if not removal.removed_indices:
        return train
    if max(removal.removed_indices) >= train.edge_count:
        raise PlanMismatchError("removal index outside the training stream")

    kept = train.without_edges(removal.removed_indices)
    src = np.concatenate([kept.sources, np.array([e.source for e in insertion.inserted], dtype=np.int64)])
    tgt = np.concatenate([kept.targets, np.array([e.target for e in insertion.inserted], dtype=np.int64)])
    ts = np.concatenate([kept.timestamps, np.array([e.timestamp for e in insertion.inserted])])
    feats = None
    if train.features is not None:
        feats = np.vstack(
            [kept.features, np.zeros((len(insertion.inserted), train.features.shape[1]))]
        )
    labels = None
    if train.labels is not None:
        labels = np.concatenate(
            [kept.labels, np.zeros(len(insertion.inserted), dtype=np.int64)]
        )
    order = np.argsort(ts, kind="stable")
    return TemporalGraph(
        src[order],
        tgt[order],
        ts[order],
        feats[order] if feats is not None else None,
        labels[order] if labels is not None else None,
        bipartite=train.bipartite,
        node_ids=train.node_ids,
        partition_boundary=train.partition_boundary,
        sort=False,
        validate=False,
    )
