"""Benchmark harness: run methods across seeded splits, aggregate, emit CSV."""

from __future__ import annotations

import csv
import json
import time
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np

from . import data, knn, nn, twin
from .errors import TrainingDivergedError

METHODS = (
    "KNN", "ANN", "ANN_ENSEMBLE", "TNNR",
    "NNTNNR_INFER", "NNTNNR_TRAIN_INFER", "TNNR_RANDOM_ANCHORS",
)

DEFAULT_K_SWEEP = [1, 2, 4, 8, 16, 32, 64, "ALL"]

ANN_MAX_EPOCHS = 2000
TNNR_MAX_EPOCHS = 10000


@dataclass
class ExperimentConfig:
    dataset: dict                 # {"generator": ..., "n": ..., ...} or {"csv": path}
    methods: list                 # [{"name": "KNN", "k_list": [...]}, ...]
    n_splits: int = 25
    base_seed: int = 0
    train_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        for m in self.methods:
            if m["name"] not in METHODS:
                raise ValueError(f"unknown method {m['name']!r}")
            if m["name"] in ("KNN", "NNTNNR_INFER", "NNTNNR_TRAIN_INFER"):
                if not m.get("k_list"):
                    raise ValueError(f"{m['name']} needs a nonempty k_list")
            if m["name"] == "TNNR_RANDOM_ANCHORS" and not m.get("m_list"):
                raise ValueError("TNNR_RANDOM_ANCHORS needs a nonempty m_list")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ResultRow:
    dataset: str
    method: str
    k_or_m: object      # int, "ALL" or "NA"
    split_seed: int
    test_rmse: float
    train_seconds: float
    inference_seconds: float
    failed: bool = False


@dataclass
class AggregateRow:
    dataset: str
    method: str
    k_or_m: object
    mean_rmse: float
    sem_rmse: float
    mean_train_seconds: float
    mean_inference_seconds: float
    gain_vs_tnnr: float | None = None
    n_rows: int = 0


def rmse(pred, truth) -> float:
    """Root mean square error."""
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape or pred.ndim != 1 or pred.shape[0] == 0:
        raise ValueError("pred and truth must be equal-length nonempty vectors")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def _resolve_dataset(spec: dict) -> data.Dataset:
    if "csv" in spec:
        return data.load_csv(spec["csv"], target_column=spec.get("target"))
    kwargs = {k: v for k, v in spec.items() if k not in ("generator", "n", "seed")}
    return data.generate(spec["generator"], n=spec.get("n"),
                         seed=spec.get("seed", 0), **kwargs)


def _train_config(seed: int, max_epochs: int, overrides: dict) -> nn.TrainConfig:
    kwargs = {"seed": seed, "max_epochs": max_epochs}
    kwargs.update(overrides)
    kwargs["seed"] = seed  # the split, not the override, owns the seed
    return nn.TrainConfig(**kwargs)


def _ann_member_seed(split_seed: int, member: int) -> int:
    return split_seed * 1009 + member


class _SplitRunner:
    """Runs every selected method on one standardized split; the all-pairs
    twin model is trained once and shared by the methods that reuse it."""

    def __init__(self, name, train, val, test, stats, split_seed, overrides):
        self.name = name
        self.train = train
        self.val = val
        self.test = test
        self.stats = stats
        self.split_seed = split_seed
        self.overrides = overrides
        self._all_pairs_model = None
        self._all_pairs_train_s = None

    def row(self, method, k_or_m, test_rmse, train_s, infer_s, failed=False):
        return ResultRow(self.name, method, k_or_m, self.split_seed,
                         test_rmse, train_s, infer_s, failed)

    def fail_row(self, method, k_or_m):
        return self.row(method, k_or_m, float("nan"), 0.0, 0.0, failed=True)

    def all_pairs_model(self):
        if self._all_pairs_model is None:
            cfg = _train_config(self.split_seed, TNNR_MAX_EPOCHS, self.overrides)
            t0 = time.perf_counter()
            self._all_pairs_model = twin.train_twin(
                self.train, self.val, twin.AllPairsMode(), cfg, stats=self.stats)
            self._all_pairs_train_s = time.perf_counter() - t0
        return self._all_pairs_model, self._all_pairs_train_s

    def run_knn(self, spec):
        t0 = time.perf_counter()
        index = knn.build_index(self.train.x)
        train_s = time.perf_counter() - t0
        for k in spec["k_list"]:
            t0 = time.perf_counter()
            preds = np.array([
                knn.knn_predict(index, self.train.y, x, k) for x in self.test.x
            ])
            infer_s = time.perf_counter() - t0
            yield self.row("KNN", k, rmse(preds, self.test.y), train_s, infer_s)

    def _ann_ensemble(self, size):
        cfgs = [
            _train_config(_ann_member_seed(self.split_seed, j),
                          ANN_MAX_EPOCHS, self.overrides)
            for j in range(size)
        ]
        t0 = time.perf_counter()
        members = [
            nn.fit(self.train.x, self.train.y, self.val.x, self.val.y, cfg)[0]
            for cfg in cfgs
        ]
        train_s = time.perf_counter() - t0
        t0 = time.perf_counter()
        preds = np.mean(
            [nn.forward_batch(p, self.test.x) for p in members], axis=0)
        infer_s = time.perf_counter() - t0
        return preds, train_s, infer_s

    def run_ann(self, spec):
        try:
            preds, train_s, infer_s = self._ann_ensemble(1)
        except TrainingDivergedError:
            yield self.fail_row("ANN", "NA")
            return
        yield self.row("ANN", "NA", rmse(preds, self.test.y), train_s, infer_s)

    def run_ann_ensemble(self, spec):
        size = spec["size"]
        try:
            preds, train_s, infer_s = self._ann_ensemble(size)
        except TrainingDivergedError:
            yield self.fail_row("ANN_ENSEMBLE", size)
            return
        yield self.row("ANN_ENSEMBLE", size, rmse(preds, self.test.y),
                       train_s, infer_s)

    def run_tnnr(self, spec):
        try:
            model, train_s = self.all_pairs_model()
        except TrainingDivergedError:
            yield self.fail_row("TNNR", "ALL")
            return
        t0 = time.perf_counter()
        preds = twin.predict_values(model, self.test.x, knn.ALL)
        infer_s = time.perf_counter() - t0
        yield self.row("TNNR", "ALL", rmse(preds, self.test.y), train_s, infer_s)

    def run_nntnnr_infer(self, spec):
        try:
            model, train_s = self.all_pairs_model()
        except TrainingDivergedError:
            for k in spec["k_list"]:
                yield self.fail_row("NNTNNR_INFER", k)
            return
        for k in spec["k_list"]:
            t0 = time.perf_counter()
            preds = twin.predict_values(model, self.test.x, k)
            infer_s = time.perf_counter() - t0
            yield self.row("NNTNNR_INFER", k, rmse(preds, self.test.y),
                           train_s, infer_s)

    def run_nntnnr_train_infer(self, spec):
        for k in spec["k_list"]:
            cfg = _train_config(self.split_seed, TNNR_MAX_EPOCHS, self.overrides)
            try:
                t0 = time.perf_counter()
                model = twin.train_twin(
                    self.train, self.val, twin.NnPairsMode(k), cfg,
                    stats=self.stats)
                train_s = time.perf_counter() - t0
            except TrainingDivergedError:
                yield self.fail_row("NNTNNR_TRAIN_INFER", k)
                continue
            t0 = time.perf_counter()
            preds = twin.predict_values(model, self.test.x, k)
            infer_s = time.perf_counter() - t0
            yield self.row("NNTNNR_TRAIN_INFER", k, rmse(preds, self.test.y),
                           train_s, infer_s)

    def run_tnnr_random_anchors(self, spec):
        try:
            model, train_s = self.all_pairs_model()
        except TrainingDivergedError:
            for m in spec["m_list"]:
                yield self.fail_row("TNNR_RANDOM_ANCHORS", m)
            return
        for m in spec["m_list"]:
            t0 = time.perf_counter()
            preds = np.array([
                twin.predict_random_anchors(
                    model, x, m, seed=self.split_seed * 131 + qi,
                    n_loop_triples=0).value
                for qi, x in enumerate(self.test.x)
            ])
            infer_s = time.perf_counter() - t0
            yield self.row("TNNR_RANDOM_ANCHORS", m, rmse(preds, self.test.y),
                           train_s, infer_s)

    def run(self, spec):
        runner = {
            "KNN": self.run_knn,
            "ANN": self.run_ann,
            "ANN_ENSEMBLE": self.run_ann_ensemble,
            "TNNR": self.run_tnnr,
            "NNTNNR_INFER": self.run_nntnnr_infer,
            "NNTNNR_TRAIN_INFER": self.run_nntnnr_train_infer,
            "TNNR_RANDOM_ANCHORS": self.run_tnnr_random_anchors,
        }[spec["name"]]
        yield from runner(spec)


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Train and evaluate every selected method on every split."""
    ds = _resolve_dataset(config.dataset)
    rows = []
    for i in range(config.n_splits):
        split_seed = config.base_seed + i
        train, val, test = data.split(ds, data.SplitSpec(seed=split_seed))
        train, val, test, stats = data.standardize(train, val, test)
        runner = _SplitRunner(ds.name, train, val, test, stats,
                              split_seed, config.train_overrides)
        for spec in config.methods:
            rows.extend(runner.run(spec))
    return rows


def aggregate(rows: list[ResultRow]) -> list[AggregateRow]:
    """Group by (dataset, method, k) and compute mean / standard error,
    plus relative gain against the TNNR baseline of the same dataset."""
    if not rows:
        raise ValueError("no rows to aggregate")
    usable = [r for r in rows if not r.failed]
    n_failed = len(rows) - len(usable)
    if n_failed:
        warnings.warn(f"skipping {n_failed} failed rows")

    groups: dict = {}
    for r in usable:
        groups.setdefault((r.dataset, r.method, str(r.k_or_m)), []).append(r)

    aggs = []
    for (dataset, method, _), members in groups.items():
        vals = np.array([m.test_rmse for m in members])
        sem = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
        aggs.append(AggregateRow(
            dataset=dataset,
            method=method,
            k_or_m=members[0].k_or_m,
            mean_rmse=float(np.mean(vals)),
            sem_rmse=sem,
            mean_train_seconds=float(np.mean([m.train_seconds for m in members])),
            mean_inference_seconds=float(np.mean([m.inference_seconds for m in members])),
            n_rows=len(members),
        ))

    baselines = {a.dataset: a.mean_rmse for a in aggs if a.method == "TNNR"}
    for a in aggs:
        base = baselines.get(a.dataset)
        if base is None:
            warnings.warn(f"no TNNR baseline for {a.dataset}; gain omitted")
        elif base > 0:
            a.gain_vs_tnnr = 1.0 - a.mean_rmse / base
    return aggs


ROWS_HEADER = ["dataset", "method", "k", "split_seed", "test_rmse",
               "train_seconds", "inference_seconds", "failed"]
AGG_HEADER = ["dataset", "method", "k", "mean_rmse", "sem_rmse",
              "mean_train_s", "mean_infer_s", "gain_vs_tnnr"]


def _fmt_k(k) -> str:
    return str(k)


def _parse_k(s: str):
    return s if s in ("ALL", "NA") else int(s)


def write_rows(rows: list[ResultRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROWS_HEADER)
        for r in rows:
            writer.writerow([
                r.dataset, r.method, _fmt_k(r.k_or_m), r.split_seed,
                repr(r.test_rmse), repr(r.train_seconds),
                repr(r.inference_seconds), int(r.failed),
            ])


def read_rows(path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ROWS_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [
            ResultRow(row[0], row[1], _parse_k(row[2]), int(row[3]),
                      float(row[4]), float(row[5]), float(row[6]),
                      bool(int(row[7])))
            for row in reader
        ]


def emit_results(aggregates: list[AggregateRow], path, config=None) -> None:
    """Write the aggregate CSV plus a JSON sidecar with the resolved config."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGG_HEADER)
        for a in aggregates:
            writer.writerow([
                a.dataset, a.method, _fmt_k(a.k_or_m),
                repr(a.mean_rmse), repr(a.sem_rmse),
                repr(a.mean_train_seconds), repr(a.mean_inference_seconds),
                "" if a.gain_vs_tnnr is None else repr(a.gain_vs_tnnr),
            ])
    if config is not None:
        with open(f"{path}.config.json", "w", encoding="utf-8") as fh:
            json.dump(config.to_dict(), fh, indent=2, sort_keys=True)


def read_aggregates(path) -> list[AggregateRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != AGG_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [
            AggregateRow(row[0], row[1], _parse_k(row[2]), float(row[3]),
                         float(row[4]), float(row[5]), float(row[6]),
                         None if row[7] == "" else float(row[7]))
            for row in reader
        ]
