"""Distance metrics between consecutive node-importance snapshots.

Nine vector metrics quantify how much node importance shifts between two
timestamps. Pairwise distances lean on ``scipy.spatial.distance`` and
``scipy.stats`` where a standard routine exists; the aggregation-order
variants and the divergence smoothing rules are spelled out here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import distance as sp_distance
from scipy.special import rel_entr, xlogy
from scipy.stats import wasserstein_distance

DRIFT_KINDS = (
    "MSS",
    "MSS2",
    "Cosine",
    "JaccardTopK",
    "Euclidean",
    "JSD",
    "KL",
    "Chebyshev",
    "Wasserstein",
)


@dataclass(frozen=True)
class DriftMetric:
    """A drift metric choice plus its metric-specific knobs.

    ``topk`` applies to JaccardTopK only (default: 10% of the vector length,
    at least 1). ``epsilon`` smooths the KL denominator only.
    """

    kind: str
    topk: int | None = None
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ValueError(f"unknown drift metric {self.kind!r}; choose from {DRIFT_KINDS}")
        if self.topk is not None and self.topk < 1:
            raise ValueError(f"topk must be >= 1, got {self.topk}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    def resolve_topk(self, length: int) -> int:
        if self.topk is not None:
            return self.topk
        return max(1, math.ceil(0.1 * length))


def binarize_topk(vector: np.ndarray, k: int) -> set[int]:
    """Indices of the k highest scores; ties broken toward lower index."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    vector = np.asarray(vector, dtype=np.float64)
    if k > len(vector):
        warnings.warn(f"k={k} exceeds vector length {len(vector)}; returning all indices")
        k = len(vector)
    order = np.argsort(-vector, kind="stable")
    return set(int(i) for i in order[:k])


def _normalize(vec: np.ndarray) -> np.ndarray:
    total = vec.sum()
    return vec / total


def drift(prev: np.ndarray, curr: np.ndarray, metric: DriftMetric) -> float:
    """Distance between two same-length snapshot vectors, per the chosen metric.

    Two all-zero vectors are defined to have drift 0 under every metric; a
    single all-zero vector is an error for the divergences that need
    probability inputs (KL, JSD).
    """
    prev = np.asarray(prev, dtype=np.float64)
    curr = np.asarray(curr, dtype=np.float64)
    if prev.shape != curr.shape or prev.ndim != 1:
        raise ValueError(f"expected equal-length 1-d vectors, got {prev.shape} vs {curr.shape}")
    if np.array_equal(prev, curr):
        return 0.0
    pz = not prev.any()
    cz = not curr.any()
    if pz and cz:
        return 0.0

    kind = metric.kind
    if kind == "MSS":
        return float(np.mean(np.abs(curr - prev)))
    if kind == "MSS2":
        return float(abs(curr.mean() - prev.mean()))
    if kind == "Euclidean":
        return float(sp_distance.euclidean(prev, curr))
    if kind == "Chebyshev":
        return float(sp_distance.chebyshev(prev, curr))
    if kind == "Cosine":
        if pz or cz:
            return 1.0  # no shared direction with the zero vector
        return float(max(0.0, sp_distance.cosine(prev, curr)))
    if kind == "JaccardTopK":
        k = metric.resolve_topk(len(prev))
        a = binarize_topk(prev, k)
        b = binarize_topk(curr, k)
        union = a | b
        if not union:
            return 0.0
        return 1.0 - len(a & b) / len(union)
    if kind in ("JSD", "KL"):
        if pz or cz:
            raise ValueError(f"{kind} undefined when exactly one snapshot is all-zero")
        p = _normalize(prev)
        q = _normalize(curr)
        if kind == "JSD":
            m = 0.5 * (p + q)
            return float(0.5 * rel_entr(p, m).sum() + 0.5 * rel_entr(q, m).sum())
        # KL: epsilon smooths the denominator only; 0 * log 0 contributes 0
        val = float(np.sum(xlogy(p, p / (q + metric.epsilon))))
        return max(0.0, val)
    if kind == "Wasserstein":
        if pz or cz:
            raise ValueError("Wasserstein undefined when exactly one snapshot is all-zero")
        idx = np.arange(len(prev), dtype=np.float64)
        return float(wasserstein_distance(idx, idx, _normalize(prev), _normalize(curr)))
    raise AssertionError(f"unhandled metric {kind}")
