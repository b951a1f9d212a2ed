"""Twin-network difference regression with anchor-ensemble prediction.

A trained difference network plus the training anchors form the model;
predictions average anchor-adjusted targets over all anchors, the
nearest ones, or a random subset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import knn, nn, pairing
from .errors import InsufficientDataError

_LOOP_SEED = 0  # fixed so prediction is a pure function of (model, x, k)
DEFAULT_LOOP_TRIPLES = 64


@dataclass(frozen=True)
class AllPairsMode:
    """Train on every ordered pair of training points."""


@dataclass(frozen=True)
class NnPairsMode:
    """Train only on nearest-neighbor pairs."""

    k: object  # int or knn.ALL
    include_reversed: bool = True


@dataclass
class TwinModel:
    f_params: nn.MLPParams
    anchors_x: np.ndarray
    anchors_y: np.ndarray
    anchor_index: knn.KnnIndex
    train_mode: object
    stats: object = None  # StandardizationStats carried for serialization

    @property
    def n_anchors(self) -> int:
        return self.anchors_x.shape[0]


@dataclass
class PredictionResult:
    value: float
    anchor_count: int
    ensemble_std: float
    loop_violation: float  # nan when fewer than 2 anchors


def _validation_pairs(model_anchors_x, anchors_y, val, pair_mode):
    """Pair each validation point with its anchors, one orientation."""
    index = knn.build_index(model_anchors_x)
    if isinstance(pair_mode, NnPairsMode) and not knn.is_all(pair_mode.k):
        k = pair_mode.k
    else:
        k = knn.ALL
    rows, targets = [], []
    for xv, yv in zip(val.x, val.y):
        ids = knn.query(index, xv, k)
        rows.append(pairing.make_inference_pairs(xv, model_anchors_x[ids]))
        targets.append(yv - anchors_y[ids])
    return np.vstack(rows), np.concatenate(targets)


def train_twin(train, val, pair_mode, config: nn.TrainConfig, stats=None) -> TwinModel:
    """Fit the difference network and freeze it with its anchors."""
    if train.x.shape[0] < 2:
        raise InsufficientDataError("twin training needs at least 2 points")
    if val.x.shape[0] == 0:
        raise InsufficientDataError("validation set must be nonempty")

    if isinstance(pair_mode, AllPairsMode):
        paired = pairing.all_pairs(train.x, train.y)
    elif isinstance(pair_mode, NnPairsMode):
        paired = pairing.nn_pairs(
            train.x, train.y, pair_mode.k,
            include_reversed=pair_mode.include_reversed,
        )
    else:
        raise ValueError(f"unknown pair mode: {pair_mode!r}")

    val_x, val_y = _validation_pairs(train.x, train.y, val, pair_mode)
    params, _ = nn.fit(paired.pair_x, paired.pair_y, val_x, val_y, config)
    return TwinModel(
        f_params=params,
        anchors_x=np.array(train.x, dtype=float),
        anchors_y=np.array(train.y, dtype=float),
        anchor_index=knn.build_index(train.x),
        train_mode=pair_mode,
        stats=stats,
    )


def _sym_batch(params: nn.MLPParams, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Antisymmetrized difference prediction for row-aligned point pairs."""
    fwd = nn.forward_batch(params, np.hstack([a, b]))
    rev = nn.forward_batch(params, np.hstack([b, a]))
    return 0.5 * fwd - 0.5 * rev


def sym_diff(model: TwinModel, a, b) -> float:
    """0.5*F(a||b) - 0.5*F(b||a); antisymmetric by construction."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return 0.5 * nn.forward(model.f_params, np.concatenate([a, b])) \
        - 0.5 * nn.forward(model.f_params, np.concatenate([b, a]))


def _anchor_estimates(model, x, ids, symmetrized=True):
    anchors = model.anchors_x[ids]
    fwd = nn.forward_batch(model.f_params, pairing.make_inference_pairs(x, anchors))
    if symmetrized:
        m = anchors.shape[0]
        rev = nn.forward_batch(
            model.f_params, np.hstack([anchors, np.tile(x, (m, 1))])
        )
        diffs = 0.5 * fwd - 0.5 * rev
    else:
        diffs = fwd
    return diffs + model.anchors_y[ids]


def _query_loop_violation(model, x, ids, n_triples):
    """Mean loop defect over sampled triples (x, a_i, a_j)."""
    m = ids.shape[0]
    if m < 2 or n_triples == 0:
        return float("nan")
    rng = np.random.default_rng(_LOOP_SEED)
    i = rng.integers(0, m, size=n_triples)
    j = rng.integers(0, m - 1, size=n_triples)
    j = np.where(j >= i, j + 1, j)  # distinct anchor pair
    a = model.anchors_x[ids[i]]
    b = model.anchors_x[ids[j]]
    xs = np.tile(np.asarray(x, dtype=float), (n_triples, 1))
    total = (
        _sym_batch(model.f_params, xs, a)
        + _sym_batch(model.f_params, a, b)
        + _sym_batch(model.f_params, b, xs)
    )
    return float(np.mean(np.abs(total)))


def _predict_with_ids(model, x, ids, symmetrized, n_loop_triples):
    x = np.asarray(x, dtype=float)
    estimates = _anchor_estimates(model, x, ids, symmetrized)
    m = ids.shape[0]
    std = float(np.std(estimates, ddof=1)) if m > 1 else 0.0
    return PredictionResult(
        value=float(np.mean(estimates)),
        anchor_count=m,
        ensemble_std=std,
        loop_violation=_query_loop_violation(model, x, ids, n_loop_triples),
    )


def predict_full(model: TwinModel, x, symmetrized: bool = True,
                 n_loop_triples: int = DEFAULT_LOOP_TRIPLES) -> PredictionResult:
    """Ensemble prediction over every training anchor."""
    ids = np.arange(model.n_anchors)
    return _predict_with_ids(model, x, ids, symmetrized, n_loop_triples)


def predict_nn(model: TwinModel, x, k, symmetrized: bool = True,
               n_loop_triples: int = DEFAULT_LOOP_TRIPLES) -> PredictionResult:
    """Ensemble prediction over the k nearest anchors; k = ALL recovers
    the full-anchor prediction exactly."""
    if knn.is_all(k):
        ids = np.arange(model.n_anchors)
    else:
        ids = knn.query(model.anchor_index, np.asarray(x, dtype=float), k)
    return _predict_with_ids(model, x, ids, symmetrized, n_loop_triples)


def predict_random_anchors(model: TwinModel, x, m: int, seed: int,
                           symmetrized: bool = True,
                           n_loop_triples: int = DEFAULT_LOOP_TRIPLES) -> PredictionResult:
    """Ensemble prediction over a seeded random anchor subset."""
    if m < 1:
        raise ValueError("m must be >= 1")
    m = min(m, model.n_anchors)
    rng = np.random.default_rng(seed)
    ids = rng.choice(model.n_anchors, size=m, replace=False)
    return _predict_with_ids(model, x, ids, symmetrized, n_loop_triples)


def predict_values(model: TwinModel, xs, k=knn.ALL, symmetrized: bool = True) -> np.ndarray:
    """Point predictions only, for whole test sets; matches the per-query
    PredictionResult values."""
    xs = np.asarray(xs, dtype=float)
    return np.array([
        _predict_with_ids(
            model, x,
            np.arange(model.n_anchors) if knn.is_all(k)
            else knn.query(model.anchor_index, x, k),
            symmetrized, 0,
        ).value
        for x in xs
    ])


def loop_violation(model: TwinModel, points, n_triples: int, seed: int) -> float:
    """Mean |F-loop sum| over seeded random triples drawn from points."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 3:
        raise ValueError("need at least 3 points for loop triples")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, points.shape[0], size=(n_triples, 3))
    a, b, c = points[idx[:, 0]], points[idx[:, 1]], points[idx[:, 2]]
    total = (
        _sym_batch(model.f_params, a, b)
        + _sym_batch(model.f_params, b, c)
        + _sym_batch(model.f_params, c, a)
    )
    return float(np.mean(np.abs(total)))


FORMAT_VERSION = 1


def save_model(model: TwinModel, path) -> None:
    """Binary dump of parameters, anchors, stats and train mode."""
    mode = model.train_mode
    if isinstance(mode, AllPairsMode):
        mode_json = {"mode": "all_pairs"}
    else:
        mode_json = {
            "mode": "nn_pairs",
            "k": "ALL" if knn.is_all(mode.k) else int(mode.k),
            "include_reversed": mode.include_reversed,
        }
    extra = {}
    if model.stats is not None:
        extra["stats_mean"] = model.stats.mean
        extra["stats_std"] = model.stats.std
    np.savez(
        path,
        version=FORMAT_VERSION,
        meta=json.dumps(mode_json),
        w1=model.f_params.w1, b1=model.f_params.b1,
        w2=model.f_params.w2, b2=model.f_params.b2,
        w3=model.f_params.w3, b3=model.f_params.b3,
        anchors_x=model.anchors_x, anchors_y=model.anchors_y,
        **extra,
    )


def load_model(path) -> TwinModel:
    from .data import StandardizationStats

    with np.load(path, allow_pickle=False) as z:
        version = int(z["version"])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        meta = json.loads(str(z["meta"]))
        if meta["mode"] == "all_pairs":
            mode = AllPairsMode()
        else:
            k = meta["k"] if meta["k"] == "ALL" else int(meta["k"])
            mode = NnPairsMode(k=k, include_reversed=meta["include_reversed"])
        params = nn.MLPParams(
            w1=z["w1"], b1=z["b1"], w2=z["w2"], b2=z["b2"],
            w3=z["w3"], b3=float(z["b3"]),
        )
        stats = None
        if "stats_mean" in z:
            stats = StandardizationStats(mean=z["stats_mean"], std=z["stats_std"])
        anchors_x = z["anchors_x"]
        anchors_y = z["anchors_y"]
    return TwinModel(
        f_params=params,
        anchors_x=anchors_x,
        anchors_y=anchors_y,
        anchor_index=knn.build_index(anchors_x),
        train_mode=mode,
        stats=stats,
    )
