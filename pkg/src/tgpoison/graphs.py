"""Continuous-time dynamic graphs: loading, validation, splits, and activity queries.

A graph is a time-ordered stream of interactions (source, target, timestamp),
stored columnar for cheap slicing and serialization. Bipartite datasets keep
two disjoint internal id ranges (sources first, targets after), mirroring the
`user_id,item_id,timestamp,state_label,f1,...` CSV layout used by the public
interaction datasets.
"""

from __future__ import annotations

import configparser
import io
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .errors import MalformedStreamError

_FLOOR_EPS = 1e-9  # guards ``floor(p * n)`` against float representation error


@dataclass(frozen=True)
class TemporalEdge:
    """A single timestamped interaction."""

    source: int
    target: int
    timestamp: float
    features: tuple[float, ...] | None = None
    label: int | None = None

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError(f"self-loop not allowed: node {self.source}")
        if not math.isfinite(self.timestamp) or self.timestamp < 0:
            raise ValueError(f"timestamp must be finite and non-negative, got {self.timestamp}")


@dataclass(frozen=True)
class DatasetFormat:
    """Dataset descriptor: name, bipartite flag, and feature column count."""

    name: str
    bipartite: bool = False
    feature_count: int = 0


def read_format(path: str | Path) -> DatasetFormat:
    """Read an INI-style dataset descriptor with a single ``[dataset]`` section."""
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read or "dataset" not in parser:
        raise MalformedStreamError(f"descriptor {path} missing [dataset] section")
    sec = parser["dataset"]
    return DatasetFormat(
        name=sec.get("name", Path(path).stem),
        bipartite=sec.getboolean("bipartite", fallback=False),
        feature_count=sec.getint("features", fallback=0),
    )


def write_format(fmt: DatasetFormat, path: str | Path) -> None:
    parser = configparser.ConfigParser()
    parser["dataset"] = {
        "name": fmt.name,
        "bipartite": str(fmt.bipartite).lower(),
        "features": str(fmt.feature_count),
    }
    with open(path, "w") as fh:
        parser.write(fh)


class TemporalGraph:
    """Immutable time-sorted interaction stream over a fixed node-id space.

    Internal node ids are dense integers; ``node_ids`` maps them back to the
    original dataset ids. For bipartite graphs the first ``partition_boundary``
    internal ids are source-partition nodes and the rest target-partition.
    """

    __slots__ = (
        "sources",
        "targets",
        "timestamps",
        "features",
        "labels",
        "bipartite",
        "node_ids",
        "partition_boundary",
        "_node_events",
    )

    def __init__(
        self,
        sources: np.ndarray,
        targets: np.ndarray,
        timestamps: np.ndarray,
        features: np.ndarray | None = None,
        labels: np.ndarray | None = None,
        *,
        bipartite: bool = False,
        node_ids: np.ndarray | None = None,
        partition_boundary: int | None = None,
        sort: bool = True,
        validate: bool = True,
    ):
        sources = np.asarray(sources, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.int64)
        timestamps = np.asarray(timestamps, dtype=np.float64)
        if features is not None:
            features = np.asarray(features, dtype=np.float64)
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)

        if validate and len(timestamps):
            if np.any(sources == targets):
                i = int(np.argmax(sources == targets))
                raise ValueError(f"self-loop at edge {i}: node {sources[i]}")
            if not np.all(np.isfinite(timestamps)) or np.any(timestamps < 0):
                raise ValueError("timestamps must be finite and non-negative")

        if sort and len(timestamps) and np.any(np.diff(timestamps) < 0):
            warnings.warn("edge stream not sorted by timestamp; re-sorting stably")
            order = np.argsort(timestamps, kind="stable")
            sources = sources[order]
            targets = targets[order]
            timestamps = timestamps[order]
            if features is not None:
                features = features[order]
            if labels is not None:
                labels = labels[order]

        if node_ids is None:
            n = int(max(sources.max(initial=-1), targets.max(initial=-1))) + 1
            node_ids = np.arange(n, dtype=np.int64)
        else:
            node_ids = np.asarray(node_ids, dtype=np.int64)

        for arr in (sources, targets, timestamps, node_ids, features, labels):
            if arr is not None:
                arr.setflags(write=False)

        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "timestamps", timestamps)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "bipartite", bool(bipartite))
        object.__setattr__(self, "node_ids", node_ids)
        object.__setattr__(self, "partition_boundary", partition_boundary)
        object.__setattr__(self, "_node_events", None)

    def __setattr__(self, name, value):
        raise AttributeError("TemporalGraph is immutable")

    # -- basic accessors ----------------------------------------------------

    @property
    def edge_count(self) -> int:
        return len(self.timestamps)

    @property
    def node_count(self) -> int:
        """Number of distinct node ids appearing in the stream."""
        if not len(self.sources):
            return 0
        return int(len(np.unique(np.concatenate([self.sources, self.targets]))))

    @property
    def id_space_size(self) -> int:
        """Size of the dense internal id space (>= node_count)."""
        return len(self.node_ids)

    @property
    def partition(self) -> tuple[np.ndarray, np.ndarray] | None:
        """(source-partition ids, target-partition ids) for bipartite graphs."""
        if not self.bipartite or self.partition_boundary is None:
            return None
        b = self.partition_boundary
        return np.arange(b), np.arange(b, self.id_space_size)

    def __len__(self) -> int:
        return self.edge_count

    def edge(self, i: int) -> TemporalEdge:
        feats = tuple(self.features[i]) if self.features is not None else None
        label = int(self.labels[i]) if self.labels is not None else None
        return TemporalEdge(int(self.sources[i]), int(self.targets[i]), float(self.timestamps[i]), feats, label)

    def __iter__(self) -> Iterator[TemporalEdge]:
        return (self.edge(i) for i in range(self.edge_count))

    def distinct_timestamps(self) -> np.ndarray:
        return np.unique(self.timestamps)

    # -- derived streams ----------------------------------------------------

    def _like(self, idx) -> "TemporalGraph":
        return TemporalGraph(
            self.sources[idx],
            self.targets[idx],
            self.timestamps[idx],
            self.features[idx] if self.features is not None else None,
            self.labels[idx] if self.labels is not None else None,
            bipartite=self.bipartite,
            node_ids=self.node_ids,
            partition_boundary=self.partition_boundary,
            sort=False,
            validate=False,
        )

    def slice_edges(self, lo: int, hi: int) -> "TemporalGraph":
        """Contiguous sub-stream [lo, hi) sharing this graph's node-id space."""
        return self._like(slice(lo, hi))

    def without_edges(self, indices: Sequence[int]) -> "TemporalGraph":
        """Copy of the stream with the given edge indices dropped."""
        mask = np.ones(self.edge_count, dtype=bool)
        mask[np.asarray(list(indices), dtype=np.int64)] = False
        return self._like(mask)

    def node_events(self) -> dict[int, np.ndarray]:
        """Per-node sorted event timestamps (both endpoint roles), cached."""
        cached = self._node_events
        if cached is None:
            cached = {}
            for node_arr in (self.sources, self.targets):
                for i, node in enumerate(node_arr.tolist()):
                    cached.setdefault(node, []).append(self.timestamps[i])
            cached = {n: np.asarray(sorted(ts)) for n, ts in cached.items()}
            object.__setattr__(self, "_node_events", cached)
        return cached


def from_edges(
    edges: Iterable[tuple | TemporalEdge],
    *,
    bipartite: bool = False,
    feature_count: int = 0,
) -> TemporalGraph:
    """Build a graph from (source, target, timestamp[, features[, label]]) tuples.

    Ids are taken verbatim as internal ids for unipartite input; bipartite input
    treats source and target id columns as disjoint spaces and offsets targets.
    """
    rows = []
    for e in edges:
        if isinstance(e, TemporalEdge):
            rows.append((e.source, e.target, e.timestamp, e.features, e.label))
        else:
            src, tgt, ts = e[0], e[1], e[2]
            feats = e[3] if len(e) > 3 else None
            label = e[4] if len(e) > 4 else None
            rows.append((src, tgt, ts, feats, label))
    if not rows:
        return TemporalGraph(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0), bipartite=bipartite,
                             node_ids=np.empty(0, np.int64), partition_boundary=0 if bipartite else None)
    src = np.array([r[0] for r in rows], dtype=np.int64)
    tgt = np.array([r[1] for r in rows], dtype=np.int64)
    ts = np.array([r[2] for r in rows], dtype=np.float64)
    feats = None
    if feature_count or any(r[3] is not None for r in rows):
        width = feature_count or max(len(r[3]) for r in rows if r[3] is not None)
        feats = np.zeros((len(rows), width))
        for i, r in enumerate(rows):
            if r[3] is not None:
                feats[i, : len(r[3])] = r[3]
    labels = np.array([r[4] if r[4] is not None else 0 for r in rows], dtype=np.int64)
    boundary = None
    node_ids = None
    if bipartite:
        boundary = int(src.max()) + 1
        node_ids = np.concatenate([np.arange(boundary), np.arange(int(tgt.max()) + 1)])
        tgt = tgt + boundary
    return TemporalGraph(src, tgt, ts, feats, labels, bipartite=bipartite,
                         node_ids=node_ids, partition_boundary=boundary)


# -- CSV edge streams -------------------------------------------------------


def parse_edge_stream(stream: TextIO | str, fmt: DatasetFormat) -> TemporalGraph:
    """Parse a header-bearing ``user_id,item_id,timestamp,state_label,f...`` stream.

    Node ids are densified in first-appearance order; bipartite formats map the
    two id columns into disjoint internal ranges. Rows out of time order are
    accepted and re-sorted with a warning.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    header = stream.readline()
    if not header:
        raise MalformedStreamError("empty stream")
    src_raw: list[int] = []
    tgt_raw: list[int] = []
    ts: list[float] = []
    labels: list[int] = []
    feats: list[list[float]] = []
    n_cols = None
    for lineno, line in enumerate(stream, start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if n_cols is None:
            n_cols = len(parts)
            if n_cols < 3:
                raise MalformedStreamError("expected at least source,target,timestamp columns", lineno)
        elif len(parts) != n_cols:
            raise MalformedStreamError(f"expected {n_cols} columns, got {len(parts)}", lineno)
        try:
            u = int(float(parts[0]))
            v = int(float(parts[1]))
            t = float(parts[2])
            lab = int(float(parts[3])) if len(parts) > 3 else 0
            fs = [float(x) for x in parts[4:]]
        except ValueError as exc:
            raise MalformedStreamError(str(exc), lineno) from None
        src_raw.append(u)
        tgt_raw.append(v)
        ts.append(t)
        labels.append(lab)
        feats.append(fs)
    if not ts:
        raise MalformedStreamError("stream has a header but no data rows")
    if fmt.feature_count and len(feats[0]) != fmt.feature_count:
        warnings.warn(
            f"descriptor declares {fmt.feature_count} features but stream has {len(feats[0])}"
        )

    src_map: dict[int, int] = {}
    tgt_map: dict[int, int] = {}
    if fmt.bipartite:
        for u in src_raw:
            if u not in src_map:
                src_map[u] = len(src_map)
        for v in tgt_raw:
            if v not in tgt_map:
                tgt_map[v] = len(tgt_map)
        boundary = len(src_map)
        sources = np.array([src_map[u] for u in src_raw], dtype=np.int64)
        targets = np.array([boundary + tgt_map[v] for v in tgt_raw], dtype=np.int64)
        node_ids = np.array(list(src_map) + list(tgt_map), dtype=np.int64)
    else:
        shared = src_map
        for u, v in zip(src_raw, tgt_raw):
            if u not in shared:
                shared[u] = len(shared)
            if v not in shared:
                shared[v] = len(shared)
        boundary = None
        sources = np.array([shared[u] for u in src_raw], dtype=np.int64)
        targets = np.array([shared[v] for v in tgt_raw], dtype=np.int64)
        node_ids = np.array(list(shared), dtype=np.int64)

    features = np.array(feats) if feats and len(feats[0]) else None
    return TemporalGraph(
        sources,
        targets,
        np.array(ts),
        features,
        np.array(labels, dtype=np.int64),
        bipartite=fmt.bipartite,
        node_ids=node_ids,
        partition_boundary=boundary,
    )


def serialize_edge_stream(graph: TemporalGraph, stream: TextIO | None = None) -> str | None:
    """Write the stream back in the input CSV layout with full float precision."""
    out = stream or io.StringIO()
    width = graph.features.shape[1] if graph.features is not None else 0
    header = "user_id,item_id,timestamp,state_label"
    if width:
        header += "," + ",".join(f"f{i + 1}" for i in range(width))
    out.write(header + "\n")
    ids = graph.node_ids
    for i in range(graph.edge_count):
        u = int(ids[graph.sources[i]])
        v = int(ids[graph.targets[i]])
        label = int(graph.labels[i]) if graph.labels is not None else 0
        row = f"{u},{v},{float(graph.timestamps[i])!r},{label}"
        if width:
            row += "," + ",".join(repr(float(x)) for x in graph.features[i])
        out.write(row + "\n")
    if stream is None:
        return out.getvalue()
    return None


# -- splits, aggregates, activity -------------------------------------------


def chronological_split(
    graph: TemporalGraph, ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
) -> tuple[TemporalGraph, TemporalGraph, TemporalGraph]:
    """Split the stream into train/val/test prefixes by time order.

    Train takes the first ``floor(r_train * |E|)`` edges, val the next
    ``floor(r_val * |E|)``, test the remainder. All three share the node-id space.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")
    if graph.edge_count == 0:
        raise ValueError("cannot split an empty graph")
    n = graph.edge_count
    n_train = int(math.floor(ratios[0] * n + _FLOOR_EPS))
    n_val = int(math.floor(ratios[1] * n + _FLOOR_EPS))
    if n_train == 0 or n_val == 0 or n_train + n_val >= n:
        warnings.warn(f"degenerate split sizes for |E|={n}: {(n_train, n_val, n - n_train - n_val)}")
    return (
        graph.slice_edges(0, n_train),
        graph.slice_edges(n_train, n_train + n_val),
        graph.slice_edges(n_train + n_val, n),
    )


@dataclass(frozen=True)
class StaticAggregate:
    """Static view of all interactions with timestamp <= cutoff.

    ``neighbors`` is an undirected multiset adjacency; degree counts include
    interaction multiplicity.
    """

    cutoff: float
    neighbors: dict[int, Counter]
    out_degree: np.ndarray
    in_degree: np.ndarray

    @property
    def edge_count(self) -> int:
        return int(self.out_degree.sum())

    def degree(self, node: int) -> int:
        return int(self.out_degree[node] + self.in_degree[node])

    def neighbor_set(self, node: int) -> set[int]:
        return set(self.neighbors.get(node, ()))


def aggregate_until(graph: TemporalGraph, cutoff: float) -> StaticAggregate:
    """Aggregate exactly the edges with timestamp <= cutoff."""
    hi = int(np.searchsorted(graph.timestamps, cutoff, side="right"))
    n = graph.id_space_size
    out_deg = np.bincount(graph.sources[:hi], minlength=n)
    in_deg = np.bincount(graph.targets[:hi], minlength=n)
    neighbors: dict[int, Counter] = {}
    for u, v in zip(graph.sources[:hi].tolist(), graph.targets[:hi].tolist()):
        neighbors.setdefault(u, Counter())[v] += 1
        neighbors.setdefault(v, Counter())[u] += 1
    return StaticAggregate(cutoff=cutoff, neighbors=neighbors, out_degree=out_deg, in_degree=in_deg)


def active_nodes(graph: TemporalGraph, t: float, window: float) -> set[int]:
    """Nodes with an interaction in the closed interval [t - window, t]."""
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    lo = int(np.searchsorted(graph.timestamps, t - window, side="left"))
    hi = int(np.searchsorted(graph.timestamps, t, side="right"))
    if lo >= hi:
        return set()
    return set(graph.sources[lo:hi].tolist()) | set(graph.targets[lo:hi].tolist())


class ActivityIndex:
    """Windowed activity queries over a fixed stream.

    Shared primitive for both the sampler and the auditor. Window queries
    quantize to edge-position ranges, so resolved active sets are memoized.
    """

    def __init__(self, graph: TemporalGraph):
        self._graph = graph
        self._events = graph.node_events()
        self._window_cache: dict[tuple[int, int], np.ndarray] = {}

    def active_in(self, lo: float, hi: float) -> np.ndarray:
        """Sorted internal ids of nodes active in the closed interval [lo, hi]."""
        ts = self._graph.timestamps
        a = int(np.searchsorted(ts, lo, side="left"))
        b = int(np.searchsorted(ts, hi, side="right"))
        if a >= b:
            return np.empty(0, dtype=np.int64)
        cached = self._window_cache.get((a, b))
        if cached is None:
            cached = np.unique(np.concatenate([self._graph.sources[a:b], self._graph.targets[a:b]]))
            self._window_cache[(a, b)] = cached
        return cached

    def is_active(self, node: int, lo: float, hi: float) -> bool:
        ev = self._events.get(node)
        if ev is None:
            return False
        i = int(np.searchsorted(ev, lo, side="left"))
        return i < len(ev) and ev[i] <= hi

    def last_event_at_or_before(self, node: int, t: float) -> float | None:
        ev = self._events.get(node)
        if ev is None:
            return None
        i = int(np.searchsorted(ev, t, side="right"))
        return float(ev[i - 1]) if i else None


class DegreeLedger:
    """Per-node deletion/insertion balance, tracked per direction."""

    def __init__(self, original_out: np.ndarray, original_in: np.ndarray):
        n = len(original_out)
        self.original_out = np.asarray(original_out, dtype=np.int64)
        self.original_in = np.asarray(original_in, dtype=np.int64)
        self.deletions_out = np.zeros(n, dtype=np.int64)
        self.deletions_in = np.zeros(n, dtype=np.int64)
        self.insertions_out = np.zeros(n, dtype=np.int64)
        self.insertions_in = np.zeros(n, dtype=np.int64)

    @classmethod
    def from_graph(cls, graph: TemporalGraph) -> "DegreeLedger":
        n = graph.id_space_size
        return cls(
            np.bincount(graph.sources, minlength=n),
            np.bincount(graph.targets, minlength=n),
        )

    def record_deletion(self, source: int, target: int) -> None:
        self.deletions_out[source] += 1
        self.deletions_in[target] += 1

    def record_insertion(self, source: int, target: int) -> None:
        self.insertions_out[source] += 1
        self.insertions_in[target] += 1

    def net_out(self, node: int) -> int:
        return int(self.insertions_out[node] - self.deletions_out[node])

    def net_in(self, node: int) -> int:
        return int(self.insertions_in[node] - self.deletions_in[node])
