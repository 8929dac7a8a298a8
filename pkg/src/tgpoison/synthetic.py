"""Synthetic interaction streams for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .graphs import TemporalGraph


def uniform_stream(
    n_edges: int,
    n_nodes: int = 200,
    n_timestamps: int = 250,
    *,
    bipartite: bool = False,
    feature_count: int = 0,
    seed: int = 0,
    t_max: float = 10_000.0,
) -> TemporalGraph:
    """Random stream with activity spread across the whole time range.

    Endpoints are uniform (bipartite streams split the node space in half);
    timestamps are drawn from ``n_timestamps`` distinct grid values so
    per-timestamp machinery sees realistic bursts.
    """
    rng = np.random.default_rng(seed)
    grid = np.sort(rng.uniform(0.0, t_max, n_timestamps))
    ts = np.sort(rng.choice(grid, size=n_edges, replace=True))
    if bipartite:
        half = n_nodes // 2
        src = rng.integers(0, half, n_edges)
        tgt = rng.integers(half, n_nodes, n_edges)
        boundary = half
    else:
        src = rng.integers(0, n_nodes, n_edges)
        tgt = rng.integers(0, n_nodes - 1, n_edges)
        tgt = np.where(tgt >= src, tgt + 1, tgt)  # avoid self-loops
        boundary = None
    feats = rng.normal(size=(n_edges, feature_count)) if feature_count else None
    return TemporalGraph(
        src,
        tgt,
        ts,
        feats,
        np.zeros(n_edges, dtype=np.int64),
        bipartite=bipartite,
        node_ids=np.arange(n_nodes, dtype=np.int64),
        partition_boundary=boundary,
        sort=False,
    )


def replicated_stream(base: TemporalGraph, copies: int, gap: float = 1.0) -> TemporalGraph:
    """Concatenate time-shifted copies of a stream; |E| scales, |V| does not."""
    if copies < 1:
        raise ValueError("need at least one copy")
    span = float(base.timestamps[-1] - base.timestamps[0]) + gap if base.edge_count else gap
    srcs, tgts, tss = [], [], []
    for c in range(copies):
        srcs.append(base.sources)
        tgts.append(base.targets)
        tss.append(base.timestamps + c * span)
    return TemporalGraph(
        np.concatenate(srcs),
        np.concatenate(tgts),
        np.concatenate(tss),
        bipartite=base.bipartite,
        node_ids=base.node_ids,
        partition_boundary=base.partition_boundary,
        sort=False,
    )
