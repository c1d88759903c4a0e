"""Benchmark functions, grid datasets, output noise, scaling and CSV I/O."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import DatasetFormatError, DimensionError, ScalingError

MAX_GRID_ROWS = 1_000_000


def griewank(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    i = np.arange(1, x.shape[1] + 1)
    return 1.0 + (x ** 2).sum(axis=1) / 4000.0 - np.prod(np.cos(x / np.sqrt(i)), axis=1)


def schwefel(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return 418.9829 * x.shape[1] - (x * np.sin(np.sqrt(np.abs(x)))).sum(axis=1)


def styblinski_tang(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    return 0.5 * (x ** 4 - 16.0 * x ** 2 + 5.0 * x).sum(axis=1)


@dataclass(frozen=True)
class Benchmark:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    interval: tuple[float, float]


BENCHMARKS = {
    "griewank": Benchmark("griewank", griewank, (-5.0, 5.0)),
    "schwefel": Benchmark("schwefel", schwefel, (-50.0, 50.0)),
    "styblinski_tang": Benchmark("styblinski_tang", styblinski_tang, (-5.0, 5.0)),
}


def get_benchmark(name: str) -> Benchmark:
    key = name.strip().lower().replace("-", "_").replace(" ", "_")
    if key == "styblinskitang":
        key = "styblinski_tang"
    try:
        return BENCHMARKS[key]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}") from None


def benchmark_eval(name: str, x) -> float:
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if x.shape[1] < 1:
        raise DimensionError("benchmark input needs at least one coordinate")
    return float(get_benchmark(name).fn(x)[0])


@dataclass
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        self.targets = np.asarray(self.targets, dtype=np.float64).reshape(-1)
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise DimensionError(
                f"{self.inputs.shape[0]} input rows but {self.targets.shape[0]} targets")
        if self.targets.shape[0] < 1:
            raise DimensionError("dataset must have at least one row")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise DatasetFormatError("dataset contains non-finite values")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]


def grid_points(interval: tuple[float, float], g: int, d: int) -> np.ndarray:
    lo, hi = float(interval[0]), float(interval[1])
    if g < 2:
        raise ValueError(f"grid needs at least 2 points per axis, got {g}")
    if not lo < hi:
        raise ValueError(f"interval must satisfy lo < hi, got [{lo}, {hi}]")
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if g ** d > MAX_GRID_ROWS:
        raise ValueError(f"grid of {g}^{d} points exceeds the cap of {MAX_GRID_ROWS} rows")
    axis = np.linspace(lo, hi, g)
    # row-major: the last coordinate varies fastest
    return np.array(list(itertools.product(axis, repeat=d)), dtype=np.float64).reshape(-1, d)


def grid_sample(name: str, interval: tuple[float, float] | None = None, g: int = 20,
                d: int = 2) -> Dataset:
    bench = get_benchmark(name)
    interval = tuple(interval) if interval is not None else bench.interval
    x = grid_points(interval, g, d)
    meta = {"source": "benchmark", "benchmark": bench.name, "interval": list(interval),
            "grid": g, "dimension": d, "noise": 0.0, "seed": None}
    return Dataset(x, bench.fn(x), meta)


@dataclass(frozen=True)
class NoiseSpec:
    delta: float
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.delta) or self.delta < 0:
            raise ValueError(f"noise factor must be finite and >= 0, got {self.delta}")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream; the seed fully determines every draw."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(master: int, *keys) -> int:
    """Deterministic 63-bit child seed for ``master`` and a tuple of integer keys."""
    ints = [int(master)] + [int(k) for k in keys]
    return int(np.random.SeedSequence(ints).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def standard_normal(seed: int, size: int) -> np.ndarray:
    """Box-Muller normals from PCG64 uniforms, consumed in pairs."""
    rng = make_rng(seed)
    pairs = (size + 1) // 2
    u = rng.random(2 * pairs)
    radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    angle = 2.0 * math.pi * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:size]


def add_output_noise(ds: Dataset, spec: NoiseSpec) -> Dataset:
    meta = dict(ds.meta, noise=spec.delta, seed=spec.seed)
    if spec.delta == 0:
        return replace(ds, targets=ds.targets.copy(), meta=meta)
    noisy = ds.targets + spec.delta * standard_normal(spec.seed, ds.n)
    return Dataset(ds.inputs.copy(), noisy, meta)


@dataclass
class MinMaxScaler:
    """Per-column affine map from ``[data_min, data_max]`` onto ``[lo, hi]``."""

    data_min: np.ndarray
    data_max: np.ndarray
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        self.data_min = np.asarray(self.data_min, dtype=np.float64).reshape(-1)
        self.data_max = np.asarray(self.data_max, dtype=np.float64).reshape(-1)

    @classmethod
    def fit(cls, values, lo: float = 0.0, hi: float = 1.0,
            names: Sequence[str] | None = None) -> "MinMaxScaler":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        mn, mx = values.min(axis=0), values.max(axis=0)
        for j in np.flatnonzero(mx <= mn):
            label = names[j] if names is not None else f"column {j}"
            raise ScalingError(f"{label} is constant ({mn[j]!r}); cannot min-max scale")
        return cls(mn, mx, lo, hi)

    def encode(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        unit = (values - self.data_min) / (self.data_max - self.data_min)
        return self.lo + unit * (self.hi - self.lo)

    def decode(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        unit = (values - self.lo) / (self.hi - self.lo)
        return self.data_min + unit * (self.data_max - self.data_min)

    def to_dict(self) -> dict:
        return {"data_min": self.data_min.tolist(), "data_max": self.data_max.tolist(),
                "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d: dict) -> "MinMaxScaler":
        return cls(d["data_min"], d["data_max"], d["lo"], d["hi"])


def normalize_inputs(ds: Dataset) -> tuple[Dataset, MinMaxScaler]:
    scaler = MinMaxScaler.fit(ds.inputs, 0.0, 1.0,
                              names=[f"x{j}" for j in range(ds.d)])
    scaled = np.clip(scaler.encode(ds.inputs), 0.0, 1.0)
    return Dataset(scaled, ds.targets.copy(), dict(ds.meta, normalized=True)), scaler


def load_csv_dataset(path, feature_columns: Sequence[str] | None = None,
                     target_column: str | None = None) -> Dataset:
    """Read a headed CSV. Defaults: last column is the target, the rest are features."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetFormatError(f"{path}: empty file, expected a header row") from None
        rows = [r for r in reader if any(cell.strip() for cell in r)]
    if target_column is None:
        target_column = header[-1]
    if feature_columns is None:
        feature_columns = [h for h in header if h != target_column]
    columns = list(feature_columns) + [target_column]
    missing = [c for c in columns if c not in header]
    if missing:
        raise DatasetFormatError(f"{path}: missing column(s) {missing}; header is {header}")
    idx = [header.index(c) for c in columns]
    data = np.empty((len(rows), len(columns)))
    for r, row in enumerate(rows):
        for k, (c, j) in enumerate(zip(columns, idx)):
            cell = row[j].strip() if j < len(row) else ""
            try:
                if not cell:
                    raise ValueError
                data[r, k] = float(cell)
            except ValueError:
                what = "blank cell" if not cell else f"non-numeric value {cell!r}"
                raise DatasetFormatError(
                    f"{path}: {what} at data row {r + 1} (line {r + 2}), column {c!r}") from None
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    meta = {"source": "csv", "path": str(path), "features": list(feature_columns),
            "target": target_column}
    return Dataset(data[:, :-1], data[:, -1], meta)


def fmt(v: float) -> str:
    """Shortest repr that round-trips a float exactly."""
    return repr(float(v))


def write_dataset_csv(ds: Dataset, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(ds.d)] + ["y"])
        for x, y in zip(ds.inputs, ds.targets):
            w.writerow([fmt(v) for v in x] + [fmt(y)])
    return path
