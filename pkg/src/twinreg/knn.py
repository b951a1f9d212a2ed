"""Exact Euclidean nearest-neighbor search and plain k-NN regression.

A scipy cKDTree narrows the candidate set; final ordering always comes
from recomputed squared distances with ties broken by ascending row id,
so results are identical to a brute-force distance sort.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

ALL = "ALL"  # sentinel: use every available point


def is_all(k) -> bool:
    return isinstance(k, str) and k.upper() == "ALL"


class KnnIndex:
    """Immutable exact index over a fixed point set."""

    def __init__(self, points: np.ndarray):
        points = np.ascontiguousarray(points, dtype=float)
        if points.ndim != 2 or points.shape[0] == 0:
            raise ValueError("points must be a nonempty [n, d] matrix")
        if not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        self.points = points
        self.n, self.d = points.shape
        self._tree = cKDTree(points)


def build_index(points: np.ndarray) -> KnnIndex:
    return KnnIndex(points)


def query(index: KnnIndex, x, k, exclude_index: int | None = None) -> np.ndarray:
    """Row ids of the k nearest points, closest first.

    k may be ALL; ties are broken by ascending row id and k is clipped to
    the number of available points. exclude_index is never returned.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (index.d,):
        raise ValueError(f"query must have shape ({index.d},), got {x.shape}")
    available = index.n - (1 if exclude_index is not None else 0)
    if is_all(k) or k >= available:
        candidates = np.arange(index.n)
    else:
        if k < 1:
            raise ValueError("k must be >= 1 or ALL")
        # over-query, then take every point within the kth tree distance so
        # boundary ties are resolved by our own rule, not the tree's
        k_tree = min(k + (1 if exclude_index is not None else 0), index.n)
        d_tree, _ = index._tree.query(x, k=k_tree)
        radius = float(np.max(d_tree)) * (1.0 + 1e-9) + 1e-300
        candidates = np.asarray(index._tree.query_ball_point(x, radius), dtype=int)

    diff = index.points[candidates] - x
    sq = np.einsum("ij,ij->i", diff, diff)
    order = np.lexsort((candidates, sq))
    ids = candidates[order]
    if exclude_index is not None:
        ids = ids[ids != exclude_index]
    if not is_all(k):
        ids = ids[:k]
    return ids


def knn_predict(index: KnnIndex, targets: np.ndarray, x, k) -> float:
    """Unweighted mean of the targets of the k nearest points."""
    targets = np.asarray(targets, dtype=float)
    if targets.shape[0] != index.n:
        raise ValueError("targets length must match index size")
    ids = query(index, x, k)
    return float(np.mean(targets[ids]))
