"""Build paired datasets for difference prediction.

Each pair row is the concatenation x_i || x_j with target y_i - y_j,
either over all ordered pairs or restricted to nearest neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import knn
from .errors import InsufficientDataError

ALL_PAIRS = "all_pairs"
NN_PAIRS = "nn_pairs"


@dataclass
class PairedDataset:
    pair_x: np.ndarray  # [P, 2d]
    pair_y: np.ndarray  # [P]
    pair_ids: np.ndarray  # [P, 2] source (i, j) row ids
    mode: str
    k: object = None  # int or knn.ALL, only for NN_PAIRS

    def __len__(self) -> int:
        return self.pair_x.shape[0]


def _as_xy(train_x, train_y):
    x = np.asarray(train_x, dtype=float)
    y = np.asarray(train_y, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError("expected x [n, d] and y [n]")
    return x, y


def _pairs_from_ids(x, y, ii, jj):
    pair_x = np.hstack([x[ii], x[jj]])
    pair_y = y[ii] - y[jj]
    return pair_x, pair_y, np.column_stack([ii, jj])


def all_pairs(train_x, train_y) -> PairedDataset:
    """All n^2 ordered pairs, self-pairs (target 0) included."""
    x, y = _as_xy(train_x, train_y)
    n = x.shape[0]
    if n < 2:
        raise InsufficientDataError("need at least 2 points to build pairs")
    ii = np.repeat(np.arange(n), n)
    jj = np.tile(np.arange(n), n)
    pair_x, pair_y, pair_ids = _pairs_from_ids(x, y, ii, jj)
    return PairedDataset(pair_x, pair_y, pair_ids, ALL_PAIRS)


def nn_pairs(train_x, train_y, k, include_reversed: bool = True) -> PairedDataset:
    """Pairs of each point with its k nearest neighbors (self excluded).

    With include_reversed both orientations are emitted, matching the
    symmetrized estimator used at inference; duplicates that arise from
    mutual neighbors are retained.
    """
    x, y = _as_xy(train_x, train_y)
    n = x.shape[0]
    if n < 2:
        raise InsufficientDataError("need at least 2 points to build pairs")
    index = knn.build_index(x)
    ii_list, jj_list = [], []
    for i in range(n):
        neigh = knn.query(index, x[i], k, exclude_index=i)
        ii_list.append(np.full(neigh.shape[0], i))
        jj_list.append(neigh)
    ii = np.concatenate(ii_list)
    jj = np.concatenate(jj_list)
    if include_reversed:
        ii, jj = np.concatenate([ii, jj]), np.concatenate([jj, ii])
    pair_x, pair_y, pair_ids = _pairs_from_ids(x, y, ii, jj)
    return PairedDataset(pair_x, pair_y, pair_ids, NN_PAIRS, k=k)


def make_inference_pairs(x_query, anchors_x) -> np.ndarray:
    """Rows x_query || anchor_j, anchor order preserved."""
    x_query = np.asarray(x_query, dtype=float)
    anchors_x = np.asarray(anchors_x, dtype=float)
    if anchors_x.ndim != 2 or anchors_x.shape[0] == 0:
        raise ValueError("anchors_x must be a nonempty [m, d] matrix")
    m = anchors_x.shape[0]
    return np.hstack([np.tile(x_query, (m, 1)), anchors_x])
