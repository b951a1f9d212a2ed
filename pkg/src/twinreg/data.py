"""Synthetic dataset generators, CSV ingestion, splitting, standardization."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import IngestionError, InsufficientDataError

# Sampling ranges for the equation-generated datasets. The defaults are
# deliberate choices recorded in exported metadata; all are overridable.
TF_RANGES = {"x1": (-2.0, 2.0), "x2": (-2.0, 2.0)}
RCL_RANGES = {
    "v0": (1.0, 10.0),
    "omega": (10.0, 1000.0),
    "t": (0.0, 0.1),
    "r": (1.0, 100.0),
    "l": (0.01, 1.0),
    "c": (1e-4, 1e-2),
}
WSB_RANGES = {
    "u": (1.0, 10.0),
    "r1": (1.0, 100.0),
    "r2": (1.0, 100.0),
    "r3": (1.0, 100.0),
}


@dataclass
class Dataset:
    x: np.ndarray  # [n, d]
    y: np.ndarray  # [n]
    name: str
    feature_kinds: list = field(default_factory=list)  # "continuous"/"discrete"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if not self.feature_kinds:
            self.feature_kinds = ["continuous"] * self.x.shape[1]

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


@dataclass
class StandardizationStats:
    mean: np.ndarray  # [d]
    std: np.ndarray   # [d], zero-std features replaced by 1

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def invert(self, x: np.ndarray) -> np.ndarray:
        return x * self.std + self.mean


@dataclass
class SplitSpec:
    train_frac: float = 0.70
    val_frac: float = 0.10
    test_frac: float = 0.20
    seed: int = 0

    def __post_init__(self):
        if abs(self.train_frac + self.val_frac + self.test_frac - 1.0) > 1e-12:
            raise ValueError("split fractions must sum to 1")


def _sample(rng, ranges, n):
    cols = [rng.uniform(lo, hi, size=n) for lo, hi in ranges.values()]
    return np.column_stack(cols)


# Target formulas are evaluated per sample with scalar libm calls so that
# regenerated values are bit-identical to any scalar re-evaluation (numpy's
# vectorized sin/cos can differ by an ulp between SIMD lanes).

def tf_formula(x1, x2):
    return x1 ** 3 + x1 ** 2 - x1 - 1 + x1 * x2 + math.sin(x2)


def gen_tf(n: int, seed: int, ranges=None) -> Dataset:
    """Two-feature polynomial/trig test function, zero noise."""
    rng = np.random.default_rng(seed)
    x = _sample(rng, ranges or TF_RANGES, n)
    y = np.array([tf_formula(x1, x2) for x1, x2 in x])
    return Dataset(x, y, "TF")


def rcl_formula(v0, omega, t, r, l, c):
    return v0 * math.cos(omega * t) / math.sqrt(r ** 2 + (omega * l - 1.0 / (omega * c)) ** 2)


def gen_rcl(n: int, seed: int, noise_std: float = 0.1, ranges=None) -> Dataset:
    """RCL circuit current from component values, Gaussian target noise."""
    rng = np.random.default_rng(seed)
    x = _sample(rng, ranges or RCL_RANGES, n)
    y = np.array([rcl_formula(*row) for row in x])
    if noise_std > 0:
        y = y + rng.normal(0.0, noise_std, size=n)
    return Dataset(x, y, "RCL")


def wsb_formula(u, r1, r2, r3, corrected=False):
    # as printed by default; the corrected variant balances at r2 == r3
    if corrected:
        return u * (r2 / (r1 + r2) - r3 / (r1 + r3))
    return u * (r2 / (r1 + r2) - r3 / (r2 + r3))


def gen_wsb(n: int, seed: int, noise_std: float = 0.1, ranges=None,
            corrected: bool = False) -> Dataset:
    """Wheatstone bridge voltage, Gaussian target noise."""
    rng = np.random.default_rng(seed)
    x = _sample(rng, ranges or WSB_RANGES, n)
    y = np.array([wsb_formula(*row, corrected=corrected) for row in x])
    if noise_std > 0:
        y = y + rng.normal(0.0, noise_std, size=n)
    return Dataset(x, y, "WSB")


GENERATORS = {
    "tf": gen_tf,
    "rcl": gen_rcl,
    "wsb": gen_wsb,
}

DEFAULT_SIZES = {"tf": 1000, "rcl": 4000, "wsb": 200}


def generate(name: str, n=None, seed: int = 0, **kwargs) -> Dataset:
    key = name.lower()
    if key not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    if n is None:
        n = DEFAULT_SIZES[key]
    return GENERATORS[key](n, seed, **kwargs)


def load_csv(path, target_column=None) -> Dataset:
    """Read a numeric CSV with one header row into a Dataset.

    The target is the last column unless target_column names another one.
    Any missing or non-numeric cell aborts with the offending data row.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise IngestionError(f"{path}: empty file")
            rows = list(reader)
    except OSError as exc:
        raise IngestionError(f"{path}: {exc}") from exc

    if not rows:
        raise IngestionError(f"{path}: no data rows")
    width = len(header)
    if target_column is None:
        target_idx = width - 1
    else:
        if target_column not in header:
            raise IngestionError(f"{path}: no column named {target_column!r}")
        target_idx = header.index(target_column)

    values = np.empty((len(rows), width))
    for r, row in enumerate(rows, start=1):
        if len(row) != width:
            raise IngestionError(f"{path}: row {r} has {len(row)} cells, expected {width}")
        for c, cell in enumerate(row):
            try:
                values[r - 1, c] = float(cell)
            except ValueError:
                raise IngestionError(
                    f"{path}: row {r}, column {header[c]!r}: not numeric: {cell!r}"
                ) from None
    if not np.all(np.isfinite(values)):
        bad = int(np.argwhere(~np.isfinite(values))[0][0]) + 1
        raise IngestionError(f"{path}: row {bad} contains a non-finite value")

    feature_idx = [i for i in range(width) if i != target_idx]
    x = values[:, feature_idx]
    kinds = [
        "discrete" if np.all(x[:, j] == np.round(x[:, j])) else "continuous"
        for j in range(x.shape[1])
    ]
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return Dataset(x, values[:, target_idx], name, feature_kinds=kinds)


def save_csv(ds: Dataset, path, metadata=None) -> None:
    """Write a Dataset as CSV (round-trip exact via repr floats); optional
    JSON metadata sidecar at <path>.meta.json."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(ds.d)] + ["y"])
        for xi, yi in zip(ds.x, ds.y):
            writer.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])
    if metadata is not None:
        with open(f"{path}.meta.json", "w", encoding="utf-8") as fh:
            json.dump(metadata, fh, indent=2, sort_keys=True)


def split(ds: Dataset, spec: SplitSpec):
    """Seeded 70/10/20 partition into (train, val, test)."""
    n = ds.n
    if n < 10:
        raise InsufficientDataError(f"need at least 10 points to split, got {n}")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    n_train = int(np.floor(spec.train_frac * n))
    n_val = int(np.floor(spec.val_frac * n))
    parts = (
        perm[:n_train],
        perm[n_train:n_train + n_val],
        perm[n_train + n_val:],
    )
    return tuple(
        Dataset(ds.x[idx], ds.y[idx], ds.name, feature_kinds=list(ds.feature_kinds))
        for idx in parts
    )


def standardize(train: Dataset, val: Dataset, test: Dataset):
    """Per-feature affine transform fitted on the training split only.

    Targets are left untouched so errors stay in original units.
    """
    mean = train.x.mean(axis=0)
    std = train.x.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    stats = StandardizationStats(mean=mean, std=std)

    def apply(ds):
        return Dataset(stats.apply(ds.x), ds.y, ds.name,
                       feature_kinds=list(ds.feature_kinds))

    return apply(train), apply(val), apply(test), stats
