"""Input validation helpers shared by the estimator layer and the CLI."""

from __future__ import annotations

from .graphs import TemporalGraph


def check_temporal_graph(X, *, allow_empty: bool = False) -> TemporalGraph:
    if not isinstance(X, TemporalGraph):
        raise TypeError(
            f"expected a TemporalGraph, got {type(X).__name__}; "
            "load one with parse_edge_stream or from_edges"
        )
    if not allow_empty and X.edge_count == 0:
        raise ValueError("graph has no edges")
    return X


def check_fraction(name: str, value: float, *, low_open: bool = False) -> float:
    value = float(value)
    lo_ok = value > 0.0 if low_open else value >= 0.0
    if not (lo_ok and value <= 1.0):
        interval = "(0, 1]" if low_open else "[0, 1]"
        raise ValueError(f"{name} must be in {interval}, got {value}")
    return value


def check_positive(name: str, value) -> float:
    if value is None or float(value) <= 0:
        raise ValueError(f"{name} must be a positive number, got {value}")
    return float(value)
