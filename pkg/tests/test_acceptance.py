"""Acceptance criteria, one test per criterion, with pass/fail lines.

Run with -s to see the per-criterion report while the suite executes.
"""

import json
import math
import time

import numpy as np
import pytest

from twinreg import bench, cli, data, knn, nn, twin
from test_nn import draw_kink_free
from test_twin import difference_stub, make_model, zero_model


def report(num, desc, ok, elapsed):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num}] {status} ({elapsed:.1f}s) {desc}")
    assert ok, f"criterion {num} failed: {desc}"


# --- criterion 1: gradient oracle -----------------------------------------

def fd_gradient(params, x, y, h=1e-6):
    """Central-difference gradient of the batch MSE.

    Each entry perturbation is propagated layer by layer, and the central
    difference of the loss is evaluated through the algebraically exact
    expansion loss(p+dp) - loss(p+dm) = mean((dp-dm) * (dp+dm+2(p-y))),
    which avoids the catastrophic cancellation of subtracting two nearly
    equal loss values.
    """
    b = x.shape[0]
    z1 = x @ params.w1.T + params.b1
    h1 = np.clip(z1, 0.0, None)
    z2 = h1 @ params.w2.T + params.b2
    h2 = np.clip(z2, 0.0, None)
    pred = h2 @ params.w3 + params.b3
    resid = pred - y

    def central(dp, dm):
        # dp/dm: prediction shift under the +h / -h perturbation
        rr = resid[:, None] if dp.ndim == 2 else resid
        return np.mean((dp - dm) * (dp + dm + 2 * rr), axis=0) / (2 * h)

    grad = nn.zeros_like_params(params.d_in)

    grad.b3 = float(central(np.full(b, h), np.full(b, -h)))
    grad.w3[:] = central(h * h2, -h * h2)

    for i in range(nn.HIDDEN):
        z2col = z2[:, i]
        h2col = h2[:, i]
        # b2[i]: z2[:, i] shifts by +/- h
        dp = params.w3[i] * (np.clip(z2col + h, 0.0, None) - h2col)
        dm = params.w3[i] * (np.clip(z2col - h, 0.0, None) - h2col)
        grad.b2[i] = float(central(dp, dm))
        # w2[i, j] for all j at once: z2[:, i] shifts by +/- h * h1[:, j]
        base = z2col[:, None]
        dp = params.w3[i] * (np.clip(base + h * h1, 0.0, None) - h2col[:, None])
        dm = params.w3[i] * (np.clip(base - h * h1, 0.0, None) - h2col[:, None])
        grad.w2[i, :] = central(dp, dm)

    ones = np.ones(b)
    for i in range(nn.HIDDEN):
        z1col = z1[:, i]
        h1col = h1[:, i]
        w2col = params.w2[:, i]
        for j in range(params.d_in + 1):
            dx = ones if j == params.d_in else x[:, j]  # bias or weight
            h1p = np.clip(z1col + h * dx, 0.0, None)
            h1m = np.clip(z1col - h * dx, 0.0, None)
            dp = (np.clip(z2 + np.outer(h1p - h1col, w2col), 0.0, None)
                  - h2) @ params.w3
            dm = (np.clip(z2 + np.outer(h1m - h1col, w2col), 0.0, None)
                  - h2) @ params.w3
            g = float(central(dp, dm))
            if j == params.d_in:
                grad.b1[i] = g
            else:
                grad.w1[i, j] = g
    return grad


def test_criterion_1_gradient_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for d_in in (2, 4, 12):
        for draw in range(20):
            params, x, y = draw_kink_free(1000 + draw, d_in)
            _, analytic = nn.loss_and_gradient(params, x, y)
            numeric = fd_gradient(params, x, y)
            for name in nn.PARAM_FIELDS:
                a = np.asarray(getattr(analytic, name))
                f = np.asarray(getattr(numeric, name))
                rel = np.abs(a - f) / np.maximum(np.abs(f), 1e-6)
                worst = max(worst, float(np.max(rel)))
    elapsed = time.perf_counter() - t0
    report(1, f"gradient vs central differences, max rel err {worst:.2e}, "
              f"runtime<60s", worst < 1e-4 and elapsed < 60, elapsed)


# --- criterion 2: k-NN oracle equivalence ----------------------------------

def test_criterion_2_knn_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    pts = rng.normal(size=(100, 5))
    targets = rng.normal(size=100)
    index = knn.build_index(pts)
    ok = True
    for q in range(200):
        x = rng.normal(size=5)
        k = int(rng.integers(1, 20))
        dist = np.sqrt(((pts - x) ** 2).sum(axis=1))
        oracle_ids = np.array(
            sorted(range(100), key=lambda i: (dist[i], i))[:k])
        ids = knn.query(index, x, k)
        ok &= np.array_equal(ids, oracle_ids)
        ok &= knn.knn_predict(index, targets, x, k) == np.mean(targets[oracle_ids])
    elapsed = time.perf_counter() - t0
    report(2, "query/knn_predict equal brute-force oracle on 200 queries",
           ok and elapsed < 10, elapsed)


# --- criterion 3: k-NN reduction with zero network --------------------------

def test_criterion_3_knn_reduction():
    t0 = time.perf_counter()
    rng = np.random.default_rng(33)
    ax = rng.normal(size=(200, 3))
    ay = rng.normal(size=200)
    model = zero_model(3, ax, ay)
    worst = 0.0
    for k in (1, 3, 5, knn.ALL):
        for _ in range(25):
            x = rng.normal(size=3)
            diff = abs(twin.predict_nn(model, x, k).value
                       - knn.knn_predict(model.anchor_index, ay, x, k))
            worst = max(worst, diff)
    elapsed = time.perf_counter() - t0
    report(3, f"zero-network predict_nn equals knn_predict, max diff {worst:.1e}",
           worst < 1e-12 and elapsed < 10, elapsed)


# --- criterion 4: convergence identity --------------------------------------

def test_criterion_4_convergence_identity():
    t0 = time.perf_counter()
    ds = data.gen_tf(150, seed=4)
    tr, va, te = data.split(ds, data.SplitSpec(seed=4))
    tr, va, te, _ = data.standardize(tr, va, te)
    cfg = nn.TrainConfig(max_epochs=10, seed=4)
    model = twin.train_twin(tr, va, twin.AllPairsMode(), cfg)
    rng = np.random.default_rng(44)
    worst = 0.0
    for _ in range(100):
        x = rng.normal(size=2)
        worst = max(worst, abs(twin.predict_nn(model, x, knn.ALL).value
                               - twin.predict_full(model, x).value))
    elapsed = time.perf_counter() - t0
    report(4, f"predict_nn(ALL) vs predict_full on trained model, "
              f"max diff {worst:.1e}", worst < 1e-12 and elapsed < 60, elapsed)


# --- criterion 5: antisymmetry and loop closure ------------------------------

def test_criterion_5_antisymmetry_and_loops():
    t0 = time.perf_counter()
    rng = np.random.default_rng(55)
    model = make_model(nn.init_params(4, 55), rng.normal(size=(5, 2)),
                       rng.normal(size=5))
    bitwise = True
    for _ in range(1000):
        a, b = rng.normal(size=(2, 2))
        bitwise &= twin.sym_diff(model, a, b) == -twin.sym_diff(model, b, a)
    stub = make_model(difference_stub(2), np.zeros((3, 2)), np.zeros(3))
    violation = twin.loop_violation(stub, rng.normal(size=(50, 2)), 200, seed=5)
    elapsed = time.perf_counter() - t0
    report(5, f"bitwise antisymmetry on 1000 pairs, stub loop violation "
              f"{violation:.1e}", bitwise and violation < 1e-12, elapsed)


# --- criterion 6: TF desk-scale benchmark ------------------------------------

DESK_CONFIG = dict(
    dataset={"generator": "tf", "n": 1000, "seed": 0},
    methods=[
        {"name": "TNNR"},
        {"name": "NNTNNR_TRAIN_INFER", "k_list": [16, 32, 64]},
    ],
    n_splits=5,
    base_seed=0,
    train_overrides={
        "batch_size": 256,
        "max_epochs": 500,
        "early_stop_patience": 10,
        "lr_reduce_patience": 5,
        "min_delta": 3e-5,
    },
)


def test_criterion_6_tf_desk_scale():
    t0 = time.perf_counter()
    rows = bench.run_experiment(bench.ExperimentConfig(**DESK_CONFIG))
    tnnr = sorted(r.test_rmse for r in rows if r.method == "TNNR")
    med_tnnr = float(np.median(tnnr))
    best_k, best_med = None, math.inf
    for k in (16, 32, 64):
        med = float(np.median([
            r.test_rmse for r in rows
            if r.method == "NNTNNR_TRAIN_INFER" and r.k_or_m == k]))
        if med < best_med:
            best_k, best_med = k, med
    elapsed = time.perf_counter() - t0
    ok = med_tnnr < 0.05 and best_med <= med_tnnr and elapsed < 1800
    report(6, f"TF 5-split: median TNNR rmse {med_tnnr:.4f} (<0.05), best "
              f"NNTNNR k={best_k} rmse {best_med:.4f} (<= TNNR), "
              f"runtime<30min", ok, elapsed)


# --- criterion 7: constant-target sanity -------------------------------------

def test_criterion_7_constant_target():
    t0 = time.perf_counter()
    c = 5.0
    rng = np.random.default_rng(7)
    ds = data.Dataset(rng.normal(size=(100, 2)), np.full(100, c), "const")
    tr, va, te = data.split(ds, data.SplitSpec(seed=7))
    tr, va, te, _ = data.standardize(tr, va, te)
    cfg = nn.TrainConfig(max_epochs=100, seed=7)
    model = twin.train_twin(tr, va, twin.AllPairsMode(), cfg)
    preds = twin.predict_values(model, te.x, knn.ALL)
    err = bench.rmse(preds, te.y)
    elapsed = time.perf_counter() - t0
    report(7, f"constant-target TNNR test rmse {err:.2e} < 1e-2*(1+|c|)",
           err < 1e-2 * (1 + abs(c)) and elapsed < 120, elapsed)


# --- criterion 8: end-to-end determinism -------------------------------------

def strip_timing_columns(path):
    lines = []
    for line in open(path, encoding="utf-8").read().splitlines():
        cells = line.split(",")
        del cells[5:7]  # mean_train_s, mean_infer_s
        lines.append(",".join(cells))
    return "\n".join(lines)


def test_criterion_8_run_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg = {
        "dataset": {"generator": "tf", "n": 120, "seed": 0},
        "methods": [
            {"name": "KNN", "k_list": [1, 4]},
            {"name": "TNNR"},
            {"name": "NNTNNR_INFER", "k_list": [4, "ALL"]},
        ],
        "n_splits": 2,
        "base_seed": 0,
        "train_overrides": {"max_epochs": 8},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"agg_{tag}.csv"
        assert cli.main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
        # timing columns occupy the same positions in both emitted CSVs
        outs.append((strip_timing_columns(out),
                     strip_timing_columns(str(out) + ".rows.csv")))
    elapsed = time.perf_counter() - t0
    report(8, "two `run` executions byte-identical (timing columns excluded)",
           outs[0] == outs[1], elapsed)


# --- criterion 9: formula oracles --------------------------------------------

def test_criterion_9_formula_oracles():
    t0 = time.perf_counter()
    ok = True
    tf = data.gen_tf(1000, seed=9)
    for (x1, x2), y in zip(tf.x, tf.y):
        ok &= y == x1 ** 3 + x1 ** 2 - x1 - 1 + x1 * x2 + math.sin(x2)
    rcl = data.gen_rcl(1000, seed=9, noise_std=0.0)
    for (v0, w, t, r, l, c), y in zip(rcl.x, rcl.y):
        ok &= y == v0 * math.cos(w * t) / math.sqrt(r ** 2 + (w * l - 1 / (w * c)) ** 2)
    wsb = data.gen_wsb(1000, seed=9, noise_std=0.0)
    for (u, r1, r2, r3), y in zip(wsb.x, wsb.y):
        ok &= y == u * (r2 / (r1 + r2) - r3 / (r2 + r3))
    elapsed = time.perf_counter() - t0
    report(9, "1000 noise-free samples per generator match scalar formulas "
              "exactly", ok and elapsed < 5, elapsed)
