"""End-to-end orchestration: ingest, split, sparsify, sample, position, audit, write.

A run reads a CSV edge stream plus its descriptor, splits it 70/15/15 by
time, poisons only the training slice, and writes the poisoned stream, the
untouched val/test slices, a JSON-lines manifest, the audit report, and a
locked config snapshot under ``out/<dataset>/<strategy>/p<rate>/``. Partial
outputs of failed runs land in a ``quarantine/`` subdirectory instead.
"""

from __future__ import annotations

import configparser
import json
import math
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import manifest as manifest_mod
from .audit import AuditReport, AuditThresholds, audit
from .errors import InfeasibleSamplingError, UnsupportedStrategyError
from .graphs import (
    DatasetFormat,
    TemporalGraph,
    chronological_split,
    parse_edge_stream,
    read_format,
    serialize_edge_stream,
)
from .sampling import InsertionPlan, SamplerParams, fit_kde, insertion_positioning, timestamp_selector
from .sparsify import (
    RemovalPlan,
    compute_budget,
    select_removals,
    strategy_catalog,
    strategy_from_name,
)
from .synthetic import replicated_stream, uniform_stream
from .tpr import TprParams, compute_tpr_stream

BASELINE_NAMES = ("Random", "Preference", "Jaccard", "Degree", "PageRank")
WINDOW_PRESETS = {"short": 400.0, "long": 1800.0}

# Parameters the source material leaves open, with the defaults this toolkit
# ships; they are echoed into every config.lock with paper_specified=false.
_UNSPECIFIED_PARAMS = (
    "alpha",
    "beta",
    "window",
    "capacity",
    "max_attempts",
    "draws_per_slot",
    "topk",
    "epsilon",
    "combined_weight",
    "ks_threshold",
    "raw_snapshots",
)

_ADD_ENUMERATION_LIMIT = 5_000_000


@dataclass
class AttackConfig:
    """Declarative description of one attack run."""

    dataset: Path
    descriptor: Path | DatasetFormat
    outdir: Path = Path("out")
    strategy: str = "TPR-Cosine"
    p: float = 0.3
    knowledge: float = 1.0
    seed: int = 0
    alpha: float = 0.85
    beta: float = 0.5
    window: float | str = "short"
    capacity: int = 1
    max_attempts: int = 5
    draws_per_slot: int = 20
    topk: int | None = None
    epsilon: float = 1e-12
    combined_weight: float = 0.5
    ks_threshold: float = 0.1
    ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
    raw_snapshots: bool = False
    dump_timeline: bool = False

    def resolved_window(self) -> float:
        if isinstance(self.window, str):
            if self.window not in WINDOW_PRESETS:
                raise ValueError(
                    f"unknown window preset {self.window!r}; presets: {sorted(WINDOW_PRESETS)}"
                )
            return WINDOW_PRESETS[self.window]
        return float(self.window)

    def validate(self) -> None:
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"perturbation rate must be in [0, 1], got {self.p}")
        if not (0.0 < self.knowledge <= 1.0):
            raise ValueError(f"knowledge must be in (0, 1], got {self.knowledge}")
        if self.resolved_window() <= 0:
            raise ValueError("window must be positive")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "AttackConfig":
        parser = configparser.ConfigParser()
        if not parser.read(str(path)):
            raise FileNotFoundError(path)
        sec = parser["attack"] if "attack" in parser else parser["DEFAULT"]
        kwargs: dict = {}
        if "dataset" in sec:
            kwargs["dataset"] = Path(sec["dataset"])
        if "descriptor" in sec:
            kwargs["descriptor"] = Path(sec["descriptor"])
        for key, cast in (
            ("outdir", Path),
            ("strategy", str),
            ("p", float),
            ("knowledge", float),
            ("seed", int),
            ("alpha", float),
            ("beta", float),
            ("capacity", int),
            ("max_attempts", int),
            ("draws_per_slot", int),
            ("topk", int),
            ("epsilon", float),
            ("combined_weight", float),
            ("ks_threshold", float),
        ):
            if key in sec:
                kwargs[key] = cast(sec[key])
        if "window" in sec:
            raw = sec["window"]
            kwargs["window"] = raw if raw in WINDOW_PRESETS else float(raw)
        if "ratios" in sec:
            parts = [float(x) for x in sec["ratios"].split(",")]
            kwargs["ratios"] = tuple(parts)
        kwargs.update(overrides)
        return cls(**kwargs)

    def locked(self, extra: dict | None = None) -> dict:
        """Fully resolved parameter snapshot with provenance annotations."""
        values = {
            "dataset": str(self.dataset),
            "strategy": self.strategy,
            "p": self.p,
            "knowledge": self.knowledge,
            "seed": self.seed,
            "ratios": list(self.ratios),
            "alpha": self.alpha,
            "beta": self.beta,
            "window": self.resolved_window(),
            "capacity": self.capacity,
            "max_attempts": self.max_attempts,
            "draws_per_slot": self.draws_per_slot,
            "topk": self.topk,
            "epsilon": self.epsilon,
            "combined_weight": self.combined_weight,
            "ks_threshold": self.ks_threshold,
            "raw_snapshots": self.raw_snapshots,
        }
        lock = {
            key: {"value": value, "paper_specified": key not in _UNSPECIFIED_PARAMS}
            for key, value in values.items()
        }
        if extra:
            lock.update(extra)
        return lock


@dataclass(frozen=True)
class RunResult:
    outdir: Path
    poisoned_train: TemporalGraph
    removal: RemovalPlan
    insertion: InsertionPlan
    report: AuditReport
    manifest_path: Path
    records: list[dict]

    @property
    def audit_passed(self) -> bool:
        return self.report.passed


def catalog() -> dict[str, tuple[str, ...]]:
    """Registered attack strategies and baselines."""
    return {
        "strategies": strategy_catalog(),
        "baselines": tuple(f"ADD-{b}" for b in BASELINE_NAMES)
        + tuple(f"REM-{b}" for b in BASELINE_NAMES),
    }


def _load(config: AttackConfig) -> tuple[TemporalGraph, DatasetFormat]:
    fmt = config.descriptor if isinstance(config.descriptor, DatasetFormat) else read_format(config.descriptor)
    with open(config.dataset) as fh:
        graph = parse_edge_stream(fh, fmt)
    return graph, fmt

def _run_dir(config: AttackConfig, fmt: DatasetFormat, strategy_tag: str) -> Path:
    return Path(config.outdir) / fmt.name / strategy_tag / f"p{config.p:g}"


def _write_outputs(
    run_dir: Path,
    config: AttackConfig,
    fmt: DatasetFormat,
    poisoned_train: TemporalGraph,
    val: TemporalGraph,
    test: TemporalGraph,
    records: list[dict],
    report: AuditReport,
    lock_extra: dict,
) -> Path:
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "train_poisoned.csv", "w") as fh:
        serialize_edge_stream(poisoned_train, fh)
    with open(run_dir / "val.csv", "w") as fh:
        serialize_edge_stream(val, fh)
    with open(run_dir / "test.csv", "w") as fh:
        serialize_edge_stream(test, fh)
    manifest_path = run_dir / "manifest.jsonl"
    manifest_mod.write_manifest(manifest_path, records)
    (run_dir / "audit.json").write_text(report.to_json())
    (run_dir / "config.lock").write_text(
        json.dumps(config.locked(lock_extra), sort_keys=True, indent=2) + "\n"
    )
    return manifest_path


def _quarantine(run_dir: Path, stage: str, error: Exception, records: list[dict]) -> None:
    qdir = run_dir / "quarantine"
    qdir.mkdir(parents=True, exist_ok=True)
    manifest_mod.write_manifest(qdir / "partial_manifest.jsonl", records)
    (qdir / "error.json").write_text(
        json.dumps({"stage": stage, "error": str(error)}, sort_keys=True, indent=2) + "\n"
    )


def run_attack(config: AttackConfig) -> RunResult:
    """Full two-phase attack on the training slice of the dataset.

    Only the training slice is ever modified; val and test are written back
    untouched. The returned report comes from the independent auditor run on
    the raw outputs.
    """
    config.validate()
    if config.strategy not in strategy_catalog():
        raise UnsupportedStrategyError(
            f"unknown strategy {config.strategy!r}; see the catalog command"
        )
    graph, fmt = _load(config)
    train, val, test = chronological_split(graph, config.ratios)
    run_dir = _run_dir(config, fmt, config.strategy)

    strategy = strategy_from_name(
        config.strategy,
        seed=config.seed,
        tpr=TprParams(alpha=config.alpha, beta=config.beta),
        topk=config.topk,
        epsilon=config.epsilon,
        combined_weight=config.combined_weight,
        use_raw_snapshots=config.raw_snapshots,
    )
    removal = select_removals(train, strategy, config.p, config.knowledge)
    if removal.capped:
        warnings.warn(
            f"budget {removal.requested_budget} exceeds the attacker-visible stream; "
            f"removing all {removal.budget} visible edges"
        )
    records = manifest_mod.removal_records(removal, train)

    params = SamplerParams(
        window=config.resolved_window(),
        node_capacity=config.capacity,
        max_attempts=config.max_attempts,
        rng_seed=config.seed,
        draws_per_slot=config.draws_per_slot,
    )
    try:
        insertion = timestamp_selector(train, removal, params)
    except InfeasibleSamplingError as exc:
        if exc.partial_plan is not None:
            records += manifest_mod.insertion_records(exc.partial_plan, train, removal.strategy)
        _quarantine(run_dir, "negative-sampling", exc, records)
        raise
    records += manifest_mod.insertion_records(insertion, train, removal.strategy)

    poisoned_train = insertion_positioning(train, removal, insertion)
    thresholds = AuditThresholds(
        p=config.p,
        ks_threshold=config.ks_threshold,
        window=config.resolved_window(),
        capacity=config.capacity,
    )
    report = audit(
        train,
        poisoned_train,
        [r for r in records if r["op"] == "remove"],
        [r for r in records if r["op"] == "insert"],
        thresholds,
    )
    lock_extra = {
        "budget": {"value": removal.budget, "paper_specified": True},
        "budget_capped": {"value": removal.capped, "paper_specified": False},
    }
    manifest_path = _write_outputs(
        run_dir, config, fmt, poisoned_train, val, test, records, report, lock_extra
    )
    if config.dump_timeline:
        timeline = compute_tpr_stream(train, TprParams(config.alpha, config.beta))
        (run_dir / "timeline.csv").write_text(timeline.to_csv())
    return RunResult(run_dir, poisoned_train, removal, insertion, report, manifest_path, records)


# -- baselines ---------------------------------------------------------------


def _plain_neighbor_sets(train: TemporalGraph) -> list[set[int]]:
    sets: list[set[int]] = [set() for _ in range(train.id_space_size)]
    for u, v in zip(train.sources.tolist(), train.targets.tolist()):
        sets[u].add(v)
        sets[v].add(u)
    return sets


def _baseline_pair_score(name: str, u: int, v: int, neigh: list[set[int]], pr: np.ndarray | None) -> float:
    if name == "Degree":
        return float(len(neigh[u]) + len(neigh[v]))
    if name == "Preference":
        return float(len(neigh[u]) * len(neigh[v]))
    if name == "Jaccard":
        union = len(neigh[u] | neigh[v])
        return float(len(neigh[u] & neigh[v]) / union) if union else 0.0
    if name == "PageRank":
        return float(pr[u] + pr[v])
    raise AssertionError(name)


def run_baseline(config: AttackConfig, mode: str) -> RunResult:
    """ADD or REM heuristic baseline run with the applicable audit subset.

    REM removes the budget's worth of lowest-scoring existing edges and is
    audited against the budget constraint only; ADD inserts the lowest-scoring
    novel pairs with density-sampled timestamps (no removals).
    """
    mode = mode.upper()
    if mode not in ("ADD", "REM"):
        raise ValueError(f"baseline mode must be ADD or REM, got {mode!r}")
    config.validate()
    name = config.strategy
    if name not in BASELINE_NAMES:
        raise UnsupportedStrategyError(
            f"unknown baseline {name!r}; choose from {BASELINE_NAMES}"
        )
    graph, fmt = _load(config)
    if name == "Jaccard" and graph.bipartite:
        raise UnsupportedStrategyError("Jaccard neighborhoods are undefined on bipartite graphs")
    train, val, test = chronological_split(graph, config.ratios)
    tag = f"{mode}-{name}"
    run_dir = _run_dir(config, fmt, tag)
    budget = compute_budget(train.edge_count, config.p)
    rng = np.random.default_rng(config.seed)

    neigh = _plain_neighbor_sets(train)
    pr = None
    if name == "PageRank":
        from .sparsify import pagerank_scores

        pr = pagerank_scores(train.sources, train.targets, train.id_space_size)

    records: list[dict]
    if mode == "REM":
        if name == "Random":
            chosen = np.sort(rng.choice(train.edge_count, size=budget, replace=False))
            scores = np.zeros(budget)
        else:
            per_edge = np.array(
                [
                    _baseline_pair_score(name, u, v, neigh, pr)
                    for u, v in zip(train.sources.tolist(), train.targets.tolist())
                ]
            )
            chosen = np.argsort(per_edge, kind="stable")[:budget]  # lowest first
            scores = per_edge[chosen]
        plan = RemovalPlan(
            tuple(int(i) for i in chosen),
            tuple(float(s) for s in scores),
            budget,
            budget,
            tag,
            "Baseline",
            config.knowledge,
        )
        if budget == train.edge_count:
            warnings.warn("REM baseline removed the entire training stream")
        poisoned_train = train.without_edges(plan.removed_indices) if budget else train
        records = manifest_mod.removal_records(plan, train)
        insertion = InsertionPlan((), 0)
        checks = ("c1",)
    else:
        pairs = _add_candidates(train, name, budget, rng, neigh, pr)
        kde = fit_kde(train.timestamps)
        ts = np.sort(kde.draw(rng, len(pairs)))
        ids = train.node_ids
        records = [
            {
                "op": "insert",
                "source": int(ids[u]),
                "target": int(ids[v]),
                "timestamp": float(t),
                "score": float(s),
                "rank": rank,
                "strategy": tag,
            }
            for rank, ((u, v, s), t) in enumerate(zip(pairs, ts))
        ]
        src = np.concatenate([train.sources, np.array([p[0] for p in pairs], dtype=np.int64)])
        tgt = np.concatenate([train.targets, np.array([p[1] for p in pairs], dtype=np.int64)])
        tss = np.concatenate([train.timestamps, ts])
        feats = None
        if train.features is not None:
            feats = np.vstack([train.features, np.zeros((len(pairs), train.features.shape[1]))])
        labels = None
        if train.labels is not None:
            labels = np.concatenate([train.labels, np.zeros(len(pairs), dtype=np.int64)])
        order = np.argsort(tss, kind="stable")
        poisoned_train = TemporalGraph(
            src[order],
            tgt[order],
            tss[order],
            feats[order] if feats is not None else None,
            labels[order] if labels is not None else None,
            bipartite=train.bipartite,
            node_ids=train.node_ids,
            partition_boundary=train.partition_boundary,
            sort=False,
            validate=False,
        )
        plan = RemovalPlan((), (), 0, 0, tag, "Baseline", config.knowledge)
        insertion = InsertionPlan((), len(pairs))
        checks = ("c1", "c2", "novelty", "bipartite")

    thresholds = AuditThresholds(
        p=config.p,
        ks_threshold=config.ks_threshold,
        window=config.resolved_window(),
        capacity=config.capacity,
    )
    report = audit(
        train,
        poisoned_train,
        [r for r in records if r["op"] == "remove"],
        [r for r in records if r["op"] == "insert"],
        thresholds,
        checks=checks,
    )
    manifest_path = _write_outputs(
        run_dir,
        config,
        fmt,
        poisoned_train,
        val,
        test,
        records,
        report,
        {"mode": {"value": mode, "paper_specified": True}},
    )
    return RunResult(run_dir, poisoned_train, plan, insertion, report, manifest_path, records)


def _add_candidates(
    train: TemporalGraph,
    name: str,
    budget: int,
    rng: np.random.Generator,
    neigh: list[set[int]],
    pr: np.ndarray | None,
) -> list[tuple[int, int, float]]:
    """Budget-many novel (source, target, score) pairs, lowest score first."""
    if budget == 0:
        return []
    interacted = set()
    for u, v in zip(train.sources.tolist(), train.targets.tolist()):
        interacted.add((u, v) if u <= v else (v, u))
    active = np.unique(np.concatenate([train.sources, train.targets]))
    if train.bipartite:
        boundary = train.partition_boundary
        left = [int(x) for x in active if x < boundary]
        right = [int(x) for x in active if x >= boundary]
        universe = len(left) * len(right)
    else:
        left = [int(x) for x in active]
        right = left
        universe = len(left) * (len(left) - 1) // 2

    if name == "Random":
        chosen: list[tuple[int, int, float]] = []
        seen: set[tuple[int, int]] = set()
        attempts = 0
        limit = max(100_000, budget * 200)
        while len(chosen) < budget and attempts < limit:
            attempts += 1
            u = int(left[rng.integers(0, len(left))])
            v = int(right[rng.integers(0, len(right))])
            if u == v:
                continue
            key = (u, v) if u <= v else (v, u)
            if key in seen or key in interacted:
                continue
            seen.add(key)
            if train.bipartite:
                chosen.append((u, v, 0.0))
            else:
                chosen.append((key[0], key[1], 0.0))
        if len(chosen) < budget:
            raise InfeasibleSamplingError(
                f"could not find {budget} novel pairs by rejection sampling", diagnosis="novelty"
            )
        return chosen

    if universe > _ADD_ENUMERATION_LIMIT:
        raise UnsupportedStrategyError(
            f"ADD-{name} requires enumerating {universe} candidate pairs; too many for desk scale"
        )
    scored: list[tuple[float, int, int]] = []
    if train.bipartite:
        for u in left:
            for v in right:
                key = (u, v)
                if key in interacted:
                    continue
                scored.append((_baseline_pair_score(name, u, v, neigh, pr), u, v))
    else:
        for i, u in enumerate(left):
            for v in left[i + 1 :]:
                key = (u, v) if u <= v else (v, u)
                if key in interacted:
                    continue
                scored.append((_baseline_pair_score(name, u, v, neigh, pr), u, v))
    scored.sort(key=lambda x: (x[0], x[1], x[2]))
    if len(scored) < budget:
        raise InfeasibleSamplingError(
            f"only {len(scored)} novel pairs exist, budget is {budget}", diagnosis="novelty"
        )
    return [(u, v, s) for s, u, v in scored[:budget]]


# -- benchmark ---------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkResult:
    rows: tuple[dict, ...]  # one per (stage, size)
    slopes: dict[str, float]

    def to_text(self) -> str:
        lines = [f"{'stage':<10} {'edges':>8} {'seconds':>10}"]
        for row in self.rows:
            lines.append(f"{row['stage']:<10} {row['edges']:>8} {row['seconds']:>10.4f}")
        for stage, slope in self.slopes.items():
            lines.append(f"slope[{stage}] = {slope:.3f}")
        return "\n".join(lines) + "\n"


def benchmark(
    sizes: Sequence[int],
    *,
    seed: int = 0,
    n_nodes: int = 400,
    n_timestamps: int = 100,
    p: float = 0.3,
    window: float = 2000.0,
    repeats: int = 3,
) -> BenchmarkResult:
    """Time the streaming scorer and the insertion selector across sizes.

    Streams are replicated time-shifted copies of the smallest size whenever
    sizes are exact multiples, so the node space stays fixed while |E| grows.
    Slopes are least-squares fits in log-log space.
    """
    sizes = list(sizes)
    if not sizes:
        raise ValueError("nothing to benchmark: empty size list")
    if len(sizes) < 2:
        raise ValueError("need at least two input sizes to fit a scaling slope")
    base = uniform_stream(sizes[0], n_nodes=n_nodes, n_timestamps=n_timestamps, seed=seed)
    streams = []
    for size in sizes:
        if size % sizes[0] == 0:
            streams.append(replicated_stream(base, size // sizes[0]))
        else:
            streams.append(uniform_stream(size, n_nodes=n_nodes, n_timestamps=n_timestamps, seed=seed))

    rows: list[dict] = []
    times: dict[str, list[float]] = {"tpr": [], "selector": []}
    for size, stream in zip(sizes, streams):
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            compute_tpr_stream(stream, TprParams())
            best = min(best, time.perf_counter() - t0)
        rows.append({"stage": "tpr", "edges": size, "seconds": best})
        times["tpr"].append(best)

        removal = select_removals(stream, strategy_from_name("Degree"), p)
        params = SamplerParams(window=window, rng_seed=seed)
        t0 = time.perf_counter()
        timestamp_selector(stream, removal, params)
        elapsed = time.perf_counter() - t0
        rows.append({"stage": "selector", "edges": size, "seconds": elapsed})
        times["selector"].append(elapsed)

    slopes = {}
    logs = np.log(np.asarray(sizes, dtype=float))
    for stage, series in times.items():
        slopes[stage] = float(np.polyfit(logs, np.log(np.asarray(series)), 1)[0])
    return BenchmarkResult(tuple(rows), slopes)
