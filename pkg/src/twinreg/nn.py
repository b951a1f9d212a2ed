"""Feed-forward network with manual backprop and Adadelta training.

Architecture is fixed: two hidden layers of 128 relu units and a single
linear output. Everything runs in float64 so gradient checks stay tight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, TrainingDivergedError

HIDDEN = 128

PARAM_FIELDS = ("w1", "b1", "w2", "b2", "w3", "b3")


@dataclass
class MLPParams:
    """Weights and biases; also doubles as the gradient container."""

    w1: np.ndarray  # [HIDDEN, d_in]
    b1: np.ndarray  # [HIDDEN]
    w2: np.ndarray  # [HIDDEN, HIDDEN]
    b2: np.ndarray  # [HIDDEN]
    w3: np.ndarray  # [HIDDEN]
    b3: float

    @property
    def d_in(self) -> int:
        return self.w1.shape[1]

    def copy(self) -> "MLPParams":
        return MLPParams(
            self.w1.copy(), self.b1.copy(), self.w2.copy(),
            self.b2.copy(), self.w3.copy(), float(self.b3),
        )


@dataclass
class AdadeltaState:
    """Running averages of squared gradients and squared updates."""

    accum_grad: MLPParams
    accum_update: MLPParams
    rho: float = 0.95
    epsilon: float = 1e-6
    lr_scale: float = 1.0


@dataclass
class TrainConfig:
    batch_size: int = 16
    max_epochs: int = 2000
    early_stop_patience: int = 50
    lr_reduce_patience: int = 25
    min_delta: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.lr_reduce_patience >= self.early_stop_patience:
            raise ValueError("lr_reduce_patience must be < early_stop_patience")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    epochs_run: int = 0
    lr_reductions: int = 0
    best_epoch: int = 0


def init_params(d_in: int, seed: int) -> MLPParams:
    """Glorot-uniform weights, zero biases; deterministic per seed."""
    if d_in < 1:
        raise DimensionError(f"d_in must be >= 1, got {d_in}")
    rng = np.random.default_rng(seed)

    def glorot(fan_out, fan_in, shape):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    return MLPParams(
        w1=glorot(HIDDEN, d_in, (HIDDEN, d_in)),
        b1=np.zeros(HIDDEN),
        w2=glorot(HIDDEN, HIDDEN, (HIDDEN, HIDDEN)),
        b2=np.zeros(HIDDEN),
        w3=glorot(1, HIDDEN, (HIDDEN,)),
        b3=0.0,
    )


def zeros_like_params(d_in: int) -> MLPParams:
    return MLPParams(
        w1=np.zeros((HIDDEN, d_in)),
        b1=np.zeros(HIDDEN),
        w2=np.zeros((HIDDEN, HIDDEN)),
        b2=np.zeros(HIDDEN),
        w3=np.zeros(HIDDEN),
        b3=0.0,
    )


def forward_batch(params: MLPParams, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a [B, d_in] batch, returns [B]."""
    if x.ndim != 2 or x.shape[1] != params.d_in:
        raise DimensionError(
            f"expected [B, {params.d_in}] input, got {x.shape}"
        )
    h1 = np.maximum(x @ params.w1.T + params.b1, 0.0)
    h2 = np.maximum(h1 @ params.w2.T + params.b2, 0.0)
    return h2 @ params.w3 + params.b3


def forward(params: MLPParams, x: np.ndarray) -> float:
    """Scalar output for a single input vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != params.d_in:
        raise DimensionError(f"expected vector of length {params.d_in}, got {x.shape}")
    return float(forward_batch(params, x[None, :])[0])


def loss_and_gradient(params: MLPParams, batch_x: np.ndarray, batch_y: np.ndarray):
    """MSE loss over the batch and its exact gradient.

    Returns (loss, grad) where grad has MLPParams shapes.
    """
    batch_x = np.asarray(batch_x, dtype=float)
    batch_y = np.asarray(batch_y, dtype=float)
    if batch_x.ndim != 2 or batch_x.shape[0] == 0:
        raise ValueError("batch must be a nonempty 2-d array")
    if batch_x.shape[1] != params.d_in or batch_y.shape[0] != batch_x.shape[0]:
        raise DimensionError("batch shapes do not match parameters")

    b = batch_x.shape[0]
    z1 = batch_x @ params.w1.T + params.b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ params.w2.T + params.b2
    h2 = np.maximum(z2, 0.0)
    pred = h2 @ params.w3 + params.b3

    err = pred - batch_y
    loss = float(np.mean(err * err))

    dpred = (2.0 / b) * err
    dw3 = h2.T @ dpred
    db3 = float(np.sum(dpred))
    dh2 = np.outer(dpred, params.w3)
    dz2 = np.where(z2 > 0.0, dh2, 0.0)
    dw2 = dz2.T @ h1
    db2 = dz2.sum(axis=0)
    dh1 = dz2 @ params.w2
    dz1 = np.where(z1 > 0.0, dh1, 0.0)
    dw1 = dz1.T @ batch_x
    db1 = dz1.sum(axis=0)

    grad = MLPParams(w1=dw1, b1=db1, w2=dw2, b2=db2, w3=dw3, b3=db3)
    return loss, grad


def init_adadelta(d_in: int, rho: float = 0.95, epsilon: float = 1e-6) -> AdadeltaState:
    return AdadeltaState(
        accum_grad=zeros_like_params(d_in),
        accum_update=zeros_like_params(d_in),
        rho=rho,
        epsilon=epsilon,
        lr_scale=1.0,
    )


def adadelta_step(params: MLPParams, state: AdadeltaState, grad: MLPParams):
    """One Adadelta update. Mutates params and state in place and returns them."""
    rho, eps, lr = state.rho, state.epsilon, state.lr_scale
    for name in PARAM_FIELDS:
        g = getattr(grad, name)
        eg = getattr(state.accum_grad, name)
        eu = getattr(state.accum_update, name)
        theta = getattr(params, name)
        if name == "b3":
            eg = rho * eg + (1.0 - rho) * g * g
            delta = -lr * np.sqrt(eu + eps) / np.sqrt(eg + eps) * g
            eu = rho * eu + (1.0 - rho) * delta * delta
            setattr(state.accum_grad, name, float(eg))
            setattr(state.accum_update, name, float(eu))
            setattr(params, name, float(theta + delta))
        else:
            eg *= rho
            eg += (1.0 - rho) * g * g
            delta = -lr * np.sqrt(eu + eps) / np.sqrt(eg + eps) * g
            eu *= rho
            eu += (1.0 - rho) * delta * delta
            theta += delta
    return params, state


def _mse(params: MLPParams, x: np.ndarray, y: np.ndarray) -> float:
    err = forward_batch(params, x) - y
    return float(np.mean(err * err))


def fit(train_x, train_y, val_x, val_y, config: TrainConfig):
    """Train with mini-batches, LR halving and early stopping.

    Returns the parameters from the best validation epoch together with
    the full training history. Deterministic for a fixed config.
    """
    train_x = np.asarray(train_x, dtype=float)
    train_y = np.asarray(train_y, dtype=float)
    val_x = np.asarray(val_x, dtype=float)
    val_y = np.asarray(val_y, dtype=float)
    if train_x.shape[0] == 0 or val_x.shape[0] == 0:
        raise ValueError("train and validation sets must be nonempty")

    n, d_in = train_x.shape
    params = init_params(d_in, config.seed)
    state = init_adadelta(d_in)
    rng = np.random.default_rng(config.seed)

    history = TrainHistory()
    best_val = np.inf          # strict best, decides the returned snapshot
    patience_ref = np.inf      # min_delta-gated best, drives the callbacks
    best_params = params.copy()
    since_improve = 0
    since_lr = 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grad = loss_and_gradient(params, train_x[idx], train_y[idx])
            loss_sum += loss * idx.shape[0]
            adadelta_step(params, state, grad)
        train_loss = loss_sum / n
        val_loss = _mse(params, val_x, val_y)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise TrainingDivergedError(epoch)

        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        history.epochs_run = epoch

        if val_loss < best_val:
            best_val = val_loss
            best_params = params.copy()
            history.best_epoch = epoch
        # patience counters use the min_delta threshold, snapshots do not
        if patience_ref - val_loss > config.min_delta:
            patience_ref = val_loss
            since_improve = 0
            since_lr = 0
        else:
            since_improve += 1
            since_lr += 1

        if since_lr >= config.lr_reduce_patience:
            state.lr_scale *= 0.5
            history.lr_reductions += 1
            since_lr = 0
        if since_improve >= config.early_stop_patience:
            break

    return best_params, history
