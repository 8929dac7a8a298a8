"""Independent verification of the unnoticeability constraints.

The auditor re-derives every number from the raw (original, poisoned,
manifest) triple: it never trusts the pipeline's in-memory state or the
manifest's own claims beyond the identity of the perturbed edges, and it
shares no selection or sampling logic with the attack. All comparisons run
in original dataset-id space so the two graphs need not share an internal
id mapping.

Checks:

* budget - removed and inserted counts each within floor(p * |E|),
* timestamps - two-sample Kolmogorov-Smirnov statistic between inserted and
  original timestamps under a configurable threshold,
* activity - both endpoints of every insertion active in [t - W, t],
* degrees - per-node, per-direction degree deltas within the capacity cap,
  plus a total-variation distance between degree histograms,
* novelty - no inserted pair ever interacted (either direction), no
  duplicate insertions,
* partitions - insertions respect bipartite node roles.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .graphs import TemporalGraph, _FLOOR_EPS

ALL_CHECKS = ("c1", "c2", "c3", "c4", "novelty", "bipartite")


@dataclass(frozen=True)
class AuditThresholds:
    """Configured limits the report is judged against."""

    p: float | None = None
    budget: int | None = None  # explicit budget wins over p
    ks_threshold: float = 0.1
    window: float | None = None
    capacity: int = 1

    def resolve_budget(self, edge_count: int) -> int | None:
        if self.budget is not None:
            return self.budget
        if self.p is not None:
            return int(math.floor(self.p * edge_count + _FLOOR_EPS))
        return None


@dataclass(frozen=True)
class BudgetCheck:
    budget: int | None
    removed: int
    inserted: int
    passed: bool


@dataclass(frozen=True)
class TimestampCheck:
    ks_statistic: float | None
    threshold: float
    passed: bool


@dataclass(frozen=True)
class ActivityCheck:
    violations: int
    total_inserted: int
    window: float | None
    passed: bool


@dataclass(frozen=True)
class DegreeCheck:
    max_out_delta: int
    max_in_delta: int
    histogram_distance: float
    capacity: int
    passed: bool


@dataclass(frozen=True)
class AuditReport:
    c1: BudgetCheck
    c2: TimestampCheck
    c3: ActivityCheck
    c4: DegreeCheck
    novelty_violations: int
    bipartite_violations: int
    consistency_errors: tuple[str, ...]
    checks: tuple[str, ...]

    @property
    def passed(self) -> bool:
        if self.consistency_errors:
            return False
        verdicts = {
            "c1": self.c1.passed,
            "c2": self.c2.passed,
            "c3": self.c3.passed,
            "c4": self.c4.passed,
            "novelty": self.novelty_violations == 0,
            "bipartite": self.bipartite_violations == 0,
        }
        return all(verdicts[name] for name in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": list(self.checks),
            "c1": {
                "budget": self.c1.budget,
                "removed": self.c1.removed,
                "inserted": self.c1.inserted,
                "passed": self.c1.passed,
            },
            "c2": {
                "ks_statistic": self.c2.ks_statistic,
                "threshold": self.c2.threshold,
                "passed": self.c2.passed,
            },
            "c3": {
                "violations": self.c3.violations,
                "total_inserted": self.c3.total_inserted,
                "window": self.c3.window,
                "passed": self.c3.passed,
            },
            "c4": {
                "max_out_delta": self.c4.max_out_delta,
                "max_in_delta": self.c4.max_in_delta,
                "histogram_distance": self.c4.histogram_distance,
                "capacity": self.c4.capacity,
                "passed": self.c4.passed,
            },
            "novelty_violations": self.novelty_violations,
            "bipartite_violations": self.bipartite_violations,
            "consistency_errors": list(self.consistency_errors),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        d = self.to_dict()
        lines = [f"audit: {'PASS' if self.passed else 'FAIL'} (checks: {', '.join(self.checks)})"]
        lines.append(
            f"  c1 budget    : removed={d['c1']['removed']} inserted={d['c1']['inserted']} "
            f"budget={d['c1']['budget']} -> {'ok' if self.c1.passed else 'VIOLATED'}"
        )
        ks = "n/a" if self.c2.ks_statistic is None else f"{self.c2.ks_statistic:.4f}"
        lines.append(
            f"  c2 timestamps: ks={ks} threshold={self.c2.threshold} -> "
            f"{'ok' if self.c2.passed else 'VIOLATED'}"
        )
        lines.append(
            f"  c3 activity  : violations={self.c3.violations}/{self.c3.total_inserted} "
            f"window={self.c3.window} -> {'ok' if self.c3.passed else 'VIOLATED'}"
        )
        lines.append(
            f"  c4 degrees   : max|out|={self.c4.max_out_delta} max|in|={self.c4.max_in_delta} "
            f"hist_tv={self.c4.histogram_distance:.4f} cap={self.c4.capacity} -> "
            f"{'ok' if self.c4.passed else 'VIOLATED'}"
        )
        lines.append(f"  novelty      : violations={self.novelty_violations}")
        lines.append(f"  partitions   : violations={self.bipartite_violations}")
        for err in self.consistency_errors:
            lines.append(f"  inconsistency: {err}")
        return "\n".join(lines) + "\n"


def _original_triples(graph: TemporalGraph) -> list[tuple[int, int, float]]:
    ids = graph.node_ids
    return list(
        zip(
            (int(ids[s]) for s in graph.sources),
            (int(ids[t]) for t in graph.targets),
            (float(t) for t in graph.timestamps),
        )
    )


def _tv_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Total-variation distance between two degree histograms."""
    top = int(max(a.max(initial=0), b.max(initial=0))) + 1
    ha = np.bincount(a, minlength=top).astype(float)
    hb = np.bincount(b, minlength=top).astype(float)
    if ha.sum():
        ha /= ha.sum()
    if hb.sum():
        hb /= hb.sum()
    return float(0.5 * np.abs(ha - hb).sum())


def audit(
    original: TemporalGraph,
    poisoned: TemporalGraph,
    removals: list[dict],
    insertions: list[dict],
    thresholds: AuditThresholds,
    checks: tuple[str, ...] = ALL_CHECKS,
) -> AuditReport:
    """Re-derive every constraint number from raw data and report verdicts.

    Inconsistencies between the manifest and the actual edge difference are
    reported in the result, never raised.
    """
    unknown = set(checks) - set(ALL_CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")

    errors: list[str] = []
    orig_triples = Counter(_original_triples(original))
    pois_triples = Counter(_original_triples(poisoned))

    expected = Counter(orig_triples)
    for r in removals:
        key = (int(r["source"]), int(r["target"]), float(r["timestamp"]))
        if expected[key] <= 0:
            errors.append(f"manifest removes edge absent from original: {key}")
        else:
            expected[key] -= 1
    for r in insertions:
        key = (int(r["source"]), int(r["target"]), float(r["timestamp"]))
        expected[key] += 1
    diff = Counter(expected)
    diff.subtract(pois_triples)
    missing = [k for k, c in diff.items() if c > 0]
    extra = [k for k, c in diff.items() if c < 0]
    for k in missing[:5]:
        errors.append(f"edge expected in poisoned stream but absent: {k}")
    for k in extra[:5]:
        errors.append(f"edge present in poisoned stream but unexplained: {k}")
    if len(missing) > 5 or len(extra) > 5:
        errors.append(f"...{len(missing)} missing / {len(extra)} unexplained edges in total")

    # C1 - budget
    budget = thresholds.resolve_budget(original.edge_count)
    c1_pass = True
    if budget is not None:
        c1_pass = len(removals) <= budget and len(insertions) <= budget
    c1 = BudgetCheck(budget=budget, removed=len(removals), inserted=len(insertions), passed=c1_pass)

    # C2 - inserted timestamps follow the original distribution
    if insertions:
        ins_ts = np.array([float(r["timestamp"]) for r in insertions])
        stat = float(ks_2samp(ins_ts, original.timestamps, method="asymp").statistic)
        c2 = TimestampCheck(stat, thresholds.ks_threshold, stat <= thresholds.ks_threshold)
    else:
        c2 = TimestampCheck(None, thresholds.ks_threshold, True)

    # Activity events per (role, original id), from the original stream only.
    bipartite = original.bipartite
    src_events: dict[int, list[float]] = {}
    tgt_events: dict[int, list[float]] = {}
    ids = original.node_ids
    for s, t, ts in zip(original.sources.tolist(), original.targets.tolist(), original.timestamps.tolist()):
        src_events.setdefault(int(ids[s]), []).append(ts)
        tgt_events.setdefault(int(ids[t]), []).append(ts)
    if not bipartite:  # one shared role
        for node, ev in tgt_events.items():
            src_events.setdefault(node, []).extend(ev)
    src_events = {k: np.asarray(sorted(v)) for k, v in src_events.items()}
    tgt_events = src_events if not bipartite else {k: np.asarray(sorted(v)) for k, v in tgt_events.items()}

    def active(events: dict[int, np.ndarray], node: int, lo: float, hi: float) -> bool:
        ev = events.get(node)
        if ev is None:
            return False
        i = int(np.searchsorted(ev, lo, side="left"))
        return i < len(ev) and ev[i] <= hi

    # C3 - both endpoints active within the window before the timestamp
    c3_violations = 0
    if thresholds.window is not None:
        w = thresholds.window
        for r in insertions:
            t = float(r["timestamp"])
            if not active(src_events, int(r["source"]), t - w, t) or not active(
                tgt_events, int(r["target"]), t - w, t
            ):
                c3_violations += 1
    c3 = ActivityCheck(
        violations=c3_violations,
        total_inserted=len(insertions),
        window=thresholds.window,
        passed=c3_violations == 0,
    )

    # C4 - per-node degree deltas in original-id space
    def degree_counters(graph: TemporalGraph) -> tuple[Counter, Counter]:
        gids = graph.node_ids
        out = Counter(int(gids[s]) for s in graph.sources)
        inc = Counter(int(gids[t]) for t in graph.targets)
        return out, inc

    orig_out, orig_in = degree_counters(original)
    pois_out, pois_in = degree_counters(poisoned)
    out_nodes = set(orig_out) | set(pois_out)
    in_nodes = set(orig_in) | set(pois_in)
    max_out = max((abs(pois_out.get(v, 0) - orig_out.get(v, 0)) for v in out_nodes), default=0)
    max_in = max((abs(pois_in.get(v, 0) - orig_in.get(v, 0)) for v in in_nodes), default=0)
    hist_out = _tv_distance(
        np.array([orig_out.get(v, 0) for v in sorted(out_nodes)], dtype=np.int64),
        np.array([pois_out.get(v, 0) for v in sorted(out_nodes)], dtype=np.int64),
    )
    hist_in = _tv_distance(
        np.array([orig_in.get(v, 0) for v in sorted(in_nodes)], dtype=np.int64),
        np.array([pois_in.get(v, 0) for v in sorted(in_nodes)], dtype=np.int64),
    )
    c4 = DegreeCheck(
        max_out_delta=int(max_out),
        max_in_delta=int(max_in),
        histogram_distance=max(hist_out, hist_in),
        capacity=thresholds.capacity,
        passed=max(max_out, max_in) <= thresholds.capacity,
    )

    # Novelty - inserted pairs are new to the graph and not repeated
    def pair_key(u: int, v: int) -> tuple[int, int]:
        if bipartite:
            return (u, v)  # roles disambiguate; direction is fixed
        return (u, v) if u <= v else (v, u)

    known = set(pair_key(u, v) for u, v, _ in orig_triples)
    novelty_violations = 0
    seen: set[tuple[int, int]] = set()
    for r in insertions:
        key = pair_key(int(r["source"]), int(r["target"]))
        if key in known or key in seen:
            novelty_violations += 1
        seen.add(key)

    # Partition roles (bipartite only)
    bipartite_violations = 0
    if bipartite:
        user_ids = set(int(ids[i]) for i in range(original.partition_boundary or 0))
        item_ids = set(int(ids[i]) for i in range((original.partition_boundary or 0), original.id_space_size))
        for r in insertions:
            if int(r["source"]) not in user_ids or int(r["target"]) not in item_ids:
                bipartite_violations += 1

    return AuditReport(
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
        novelty_violations=novelty_violations,
        bipartite_violations=bipartite_violations,
        consistency_errors=tuple(errors),
        checks=tuple(checks),
    )
