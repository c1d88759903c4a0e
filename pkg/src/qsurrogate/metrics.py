"""R2 scoring, the QNN-vs-ANN noise x sample-size sweep, and CSV emission."""
from __future__ import annotations

import csv
import io
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .ann import MlpConfig, mlp_fit, mlp_predict_many
from .circuit import QnnArchitecture
from .data import NoiseSpec, add_output_noise, derive_seed, fmt, grid_sample
from .errors import DimensionError
from .qnn import TrainConfig, fit, predict_many


def r2_score(y, y_hat) -> float:
    """Coefficient of determination; unbounded below, reported as-is."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
    if y.shape != y_hat.shape:
        raise DimensionError(f"r2_score got {y.size} targets and {y_hat.size} predictions")
    if y.size < 2:
        raise ValueError("r2_score needs at least two points")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ZeroDivisionError("r2_score is undefined for constant targets")
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / ss_tot


@dataclass(frozen=True)
class SweepCell:
    """One (grid size, noise factor, seed) run. ``error`` is set when the cell failed."""

    noise_factor: float
    grid_size: int
    r2_qnn: float
    r2_ann: float
    delta_r2: float
    seed: int
    runtime_qnn: float = field(default=0.0, compare=False)
    runtime_ann: float = field(default=0.0, compare=False)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class HeatmapRow:
    noise_factor: float
    grid_size: int
    r2_qnn: float
    r2_ann: float
    delta_r2: float
    seed_count: int
    failed_count: int = 0


@dataclass
class SweepSpec:
    benchmark: str = "griewank"
    interval: tuple[float, float] | None = None
    dimension: int = 2
    qnn_arch: QnnArchitecture = field(default_factory=lambda: QnnArchitecture(2, 2, 20))
    qnn_cfg: TrainConfig = field(default_factory=TrainConfig)
    ann_cfg: MlpConfig = field(default_factory=MlpConfig)


def _noise_key(delta: float) -> int:
    # integer key for seed derivation; noise factors are quoted to a few decimals
    return int(round(delta * 1_000_000))


def cell_seeds(master: int, g: int, delta: float, replicate: int) -> tuple[int, int, int]:
    """(noise, qnn init, ann init) seeds for one replicate of one cell."""
    base = (master, g, _noise_key(delta), replicate)
    return tuple(derive_seed(*base, k) for k in range(3))


def run_cell(spec: SweepSpec, g: int, delta: float, master: int, replicate: int) -> SweepCell:
    noise_seed, qnn_seed, ann_seed = cell_seeds(master, g, delta, replicate)
    try:
        clean = grid_sample(spec.benchmark, spec.interval, g, spec.dimension)
        noisy = add_output_noise(clean, NoiseSpec(delta, noise_seed))
        t0 = time.perf_counter()
        qnn_model, _ = fit(spec.qnn_arch, noisy.inputs, noisy.targets,
                           replace(spec.qnn_cfg, init_seed=qnn_seed))
        r2_q = r2_score(clean.targets, predict_many(qnn_model, clean.inputs))
        t1 = time.perf_counter()
        ann_model, _ = mlp_fit(noisy.inputs, noisy.targets, cfg=replace(spec.ann_cfg, seed=ann_seed))
        r2_a = r2_score(clean.targets, mlp_predict_many(ann_model, clean.inputs))
        t2 = time.perf_counter()
    except Exception as exc:  # a failed cell must not abort the sweep
        return SweepCell(delta, g, math.nan, math.nan, math.nan, replicate,
                         error=f"{type(exc).__name__}: {exc}")
    return SweepCell(delta, g, r2_q, r2_a, r2_q - r2_a, replicate, t1 - t0, t2 - t1)


def _run_cell_args(args):
    return run_cell(*args)


def run_sweep(spec: SweepSpec, grid_sizes: Sequence[int], noise_factors: Sequence[float],
              replicates: int = 5, master_seed: int = 0, cells: Sequence[tuple[int, float]] | None = None,
              workers: int = 1) -> list[SweepCell]:
    """Train both models on identical noisy grids and score them against the clean targets.

    ``cells`` restricts the sweep to explicit (g, delta) pairs. Results come back
    ordered by (g, delta, replicate) regardless of ``workers``.
    """
    if cells is None:
        if not grid_sizes or not noise_factors:
            raise ValueError("sweep axes must be non-empty")
        cells = [(g, d) for g in grid_sizes for d in noise_factors]
    cells = list(dict.fromkeys((int(g), float(d)) for g, d in cells))
    if not cells:
        raise ValueError("sweep has no cells")
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    jobs = [(spec, g, d, master_seed, r) for g, d in cells for r in range(replicates)]
    if workers <= 1:
        return [run_cell(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell_args, jobs))


def aggregate(cells: Sequence[SweepCell]) -> list[HeatmapRow]:
    """Per-(g, delta) medians over the successful replicates; delta is median_qnn - median_ann."""
    groups: dict[tuple[int, float], list[SweepCell]] = {}
    for c in cells:
        groups.setdefault((c.grid_size, c.noise_factor), []).append(c)
    rows = []
    for (g, d), group in sorted(groups.items()):
        ok = [c for c in group if not c.failed]
        if ok:
            q = statistics.median(c.r2_qnn for c in ok)
            a = statistics.median(c.r2_ann for c in ok)
            rows.append(HeatmapRow(d, g, q, a, q - a, len(ok), len(group) - len(ok)))
        else:
            rows.append(HeatmapRow(d, g, math.nan, math.nan, math.nan, 0, len(group)))
    return rows


def median_delta(cells: Sequence[SweepCell]) -> float:
    """Median of the per-replicate deltas over all successful cells given."""
    ok = [c.delta_r2 for c in cells if not c.failed]
    if not ok:
        raise ValueError("no successful cells to summarise")
    return statistics.median(ok)


HEATMAP_COLUMNS = ("noise_factor", "grid_size", "r2_qnn", "r2_ann", "delta_r2", "seed_count",
                   "failed_count")


def _write_csv(path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def emit_heatmap_csv(cells: Sequence[SweepCell], path) -> Path:
    if not cells:
        raise ValueError("no sweep cells to emit")
    rows = aggregate(cells)
    return _write_csv(path, HEATMAP_COLUMNS,
                      [[fmt(r.noise_factor), r.grid_size, fmt(r.r2_qnn), fmt(r.r2_ann),
                        fmt(r.delta_r2), r.seed_count, r.failed_count] for r in rows])


def emit_surface_csv(inputs, y_true, y_pred, path, y_noisy=None) -> Path:
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    cols = [np.asarray(y_true, dtype=np.float64).reshape(-1)]
    header = [f"x{j}" for j in range(x.shape[1])] + ["y_true"]
    if y_noisy is not None:
        cols.append(np.asarray(y_noisy, dtype=np.float64).reshape(-1))
        header.append("y_noisy")
    cols.append(np.asarray(y_pred, dtype=np.float64).reshape(-1))
    header.append("y_pred")
    if any(c.size != x.shape[0] for c in cols):
        raise DimensionError("surface columns must all have one entry per input row")
    data = np.column_stack([x] + cols)
    return _write_csv(path, header, [[fmt(v) for v in row] for row in data])


def summary_table(cells: Sequence[SweepCell]) -> str:
    lines = [f"{'g':>4} {'noise':>6} {'R2 qnn':>8} {'R2 ann':>8} {'delta':>8} {'seeds':>5} {'failed':>6}"]
    for r in aggregate(cells):
        lines.append(f"{r.grid_size:>4} {r.noise_factor:>6.2f} {r.r2_qnn:>8.4f} {r.r2_ann:>8.4f} "
                     f"{r.delta_r2:>8.4f} {r.seed_count:>5} {r.failed_count:>6}")
    return "\n".join(lines)
