"""Dataset ingestion, normalization, splits, and synthetic generators."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateError, IngestionError
from .numerics.rng import make_rng

__all__ = [
    "DatasetTable",
    "NormRecord",
    "SplitData",
    "denormalize",
    "gen_control_chart",
    "load_csv",
    "normalize",
    "split_dataset",
    "write_csv",
]


@dataclass
class NormRecord:
    """Invertible record of how features were rescaled."""

    mode: str  # minmax01 | zscore | none
    shift: object = None  # global min, or per-feature mean
    scale: object = None  # global max-min, or per-feature std

    def to_dict(self):
        out = {"mode": self.mode}
        if self.shift is not None:
            out["shift"] = np.asarray(self.shift, dtype=np.float64).ravel().tolist()
            out["scale"] = np.asarray(self.scale, dtype=np.float64).ravel().tolist()
        return out

    @classmethod
    def from_dict(cls, d):
        shift = d.get("shift")
        scale = d.get("scale")
        if shift is not None:
            shift = np.asarray(shift, dtype=np.float64)
            scale = np.asarray(scale, dtype=np.float64)
            if shift.size == 1:
                shift = float(shift[0])
                scale = float(scale[0])
        return cls(d["mode"], shift, scale)


@dataclass
class DatasetTable:
    features: np.ndarray  # (N, d) float64, finite
    labels: object = None  # optional (N,) int64, ignored by training
    norm: NormRecord = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise IngestionError("features must be a 2-D table")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if len(self.labels) != len(self.features):
                raise IngestionError("label count does not match row count")
        if self.norm is None:
            self.norm = NormRecord("none")


def _split_line(line, sep):
    return [c.strip() for c in line.split(sep)]


def load_csv(path, has_label_column=False):
    """Parse a comma- or tab-separated numeric table.

    The delimiter is taken from the first data line (tab wins if present).
    With has_label_column the first column becomes integer labels. Any
    ragged row, non-numeric cell, or non-finite value is rejected with an
    error naming the 1-based row (and column).
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in raw.splitlines() if ln.strip() != ""]
    if not lines:
        raise IngestionError(f"{path}: empty file")
    sep = "\t" if "\t" in lines[0] else ","
    width = None
    rows = []
    for i, ln in enumerate(lines, start=1):
        cells = _split_line(ln, sep)
        if width is None:
            width = len(cells)
            if width < (2 if has_label_column else 1):
                raise IngestionError(f"{path}: row 1 has too few columns ({width})")
        elif len(cells) != width:
            raise IngestionError(
                f"{path}: ragged row {i}: {len(cells)} cells, expected {width}"
            )
        vals = []
        for j, cell in enumerate(cells, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise IngestionError(
                    f"{path}: non-numeric cell at row {i}, col {j}: {cell!r}"
                ) from None
            if not np.isfinite(v):
                raise IngestionError(
                    f"{path}: non-finite value at row {i}, col {j}: {cell!r}"
                )
            vals.append(v)
        rows.append(vals)
    table = np.asarray(rows, dtype=np.float64)
    labels = None
    if has_label_column:
        raw_labels = table[:, 0]
        if not np.all(raw_labels == np.round(raw_labels)):
            bad = int(np.argmax(raw_labels != np.round(raw_labels))) + 1
            raise IngestionError(f"{path}: non-integer label at row {bad}")
        labels = raw_labels.astype(np.int64)
        table = table[:, 1:]
    return DatasetTable(table, labels)


def write_csv(path, features, labels=None):
    """Write rows with shortest round-trip float formatting."""
    X = np.asarray(features, dtype=np.float64)
    lines = []
    for i in range(len(X)):
        cells = [repr(float(v)) for v in X[i]]
        if labels is not None:
            cells.insert(0, str(int(labels[i])))
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def normalize(table, mode):
    """Rescale features; the returned table carries the inversion record."""
    X = table.features
    if len(X) == 0:
        raise IngestionError("cannot normalize an empty table")
    if mode == "none":
        return DatasetTable(X.copy(), table.labels, NormRecord("none"))
    if mode == "minmax01":
        lo = float(X.min())
        hi = float(X.max())
        if hi - lo == 0.0:
            raise DegenerateError("constant table: minmax01 scale is zero")
        Y = (X - lo) / (hi - lo)
        return DatasetTable(Y, table.labels, NormRecord("minmax01", lo, hi - lo))
    if mode == "zscore":
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        if np.any(sd == 0.0):
            col = int(np.argmax(sd == 0.0)) + 1
            raise DegenerateError(f"constant feature column {col}: zscore scale is zero")
        Y = (X - mu) / sd
        return DatasetTable(Y, table.labels, NormRecord("zscore", mu, sd))
    raise ConfigError(f"unknown normalization mode: {mode!r}")


def denormalize(features, record):
    """Invert normalize() on a feature array."""
    X = np.asarray(features, dtype=np.float64)
    if record.mode == "none":
        return X.copy()
    if record.mode in ("minmax01", "zscore"):
        return X * record.scale + record.shift
    raise ConfigError(f"unknown normalization mode: {record.mode!r}")


@dataclass
class SplitData:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def split_dataset(X, val_fraction, test_fraction, seed):
    """Seeded shuffle split into train/val/test by fractions of N."""
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if n == 0:
        raise IngestionError("empty dataset")
    perm = make_rng(seed, 3).permutation(n)
    n_test = int(round(n * test_fraction))
    n_val = int(round(n * val_fraction))
    if n - n_test - n_val < 1:
        raise ConfigError("val/test fractions leave no training rows")
    test = X[perm[:n_test]]
    val = X[perm[n_test : n_test + n_val]]
    train = X[perm[n_test + n_val :]]
    return SplitData(train, val, test)


_CHART_CLASSES = ("constant", "cyclic", "increasing", "decreasing", "up_shift", "down_shift")


def gen_control_chart(n_per_class, d=60, seed=0):
    """Six-class synthetic control-chart series (classes labeled 0..5).

    Baseline 30 with uniform noise of amplitude 2 times U(-3,3); the classes
    add a sine cycle, linear trends of either sign, or step shifts at a
    random changepoint in the middle third.
    """
    if n_per_class < 1 or d < 3:
        raise ConfigError("need n_per_class >= 1 and d >= 3")
    rng = make_rng(seed, 5)
    t = np.arange(d, dtype=np.float64)
    rows = []
    labels = []
    for cls in range(6):
        for _ in range(n_per_class):
            y = 30.0 + 2.0 * rng.uniform(-3.0, 3.0, size=d)
            if cls == 1:
                a = rng.uniform(10.0, 15.0)
                period = rng.uniform(10.0, 15.0)
                y = y + a * np.sin(2.0 * np.pi * t / period)
            elif cls in (2, 3):
                g = rng.uniform(0.2, 0.5)
                y = y + (g if cls == 2 else -g) * t
            elif cls in (4, 5):
                mag = rng.uniform(7.5, 20.0)
                t3 = rng.uniform(d / 3.0, 2.0 * d / 3.0)
                step = (t >= t3).astype(np.float64)
                y = y + (mag if cls == 4 else -mag) * step
            rows.append(y)
            labels.append(cls)
    return np.asarray(rows), np.asarray(labels, dtype=np.int64)
