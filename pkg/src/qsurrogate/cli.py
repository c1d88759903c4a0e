"""Command-line entry point: gen-data, fit, predict, sweep, survival.

Every command accepts ``--config FILE``, an INI file whose section named after
the command supplies defaults for that command's flags (key = flag name with
underscores). Explicit flags override the file; unknown keys are rejected.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ann import MlpConfig, MlpModel, mlp_fit, mlp_predict_many
from .circuit import AnsatzSchedule, QnnArchitecture
from .data import (BENCHMARKS, NoiseSpec, add_output_noise, derive_seed, fmt, get_benchmark,
                   grid_sample, load_csv_dataset, write_dataset_csv)
from .errors import ConfigError, QSurrogateError
from .hardware import get_profile, required_two_qubit_error, survival_table
from .metrics import (SweepCell, SweepSpec, emit_heatmap_csv, emit_surface_csv, r2_score,
                      run_sweep, summary_table)
from .qnn import MEASUREMENTS, TrainConfig, fit, load_model, mse_loss, predict_many, save_model

# component keys for forking the single --seed
NOISE_STREAM = 1
QNN_STREAM = 2
ANN_STREAM = 3


class _Formatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _cell(text: str) -> tuple[int, float]:
    try:
        g, d = text.split(":")
        return int(g), float(d)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cells look like GRID:NOISE (e.g. 10:0.5), got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="INI file; its section for this command supplies flag defaults")
    p.add_argument("--seed", type=int, default=0,
                   help="master seed, forked per component (noise, QNN init, ANN init)")


def _add_source(p: argparse.ArgumentParser, default_grid: int = 20) -> None:
    p.add_argument("--benchmark", choices=sorted(BENCHMARKS), default="griewank",
                   help="benchmark function used when no --data file is given")
    p.add_argument("--interval", type=float, nargs=2, metavar=("LO", "HI"), default=None,
                   help="sampling interval per axis; None uses the benchmark's own interval")
    p.add_argument("--grid", type=int, default=default_grid, help="grid points per axis")
    p.add_argument("--dim", type=int, default=2, help="input dimension of the benchmark")


def _add_qnn(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("QNN")
    g.add_argument("--layers", type=int, default=20, help="number of circuit layers")
    g.add_argument("--replication", type=int, default=2, help="qubits per input feature")
    g.add_argument("--schedule", choices=[s.value for s in AnsatzSchedule], default="alternating",
                   help="ansatz schedule across layers")
    g.add_argument("--no-reupload", dest="reupload", action="store_false", default=True,
                   help="encode features only in the first layer")
    g.add_argument("--feature-scale", type=float, default=1.0, help="multiplier on encoded angles")
    g.add_argument("--measurement", choices=MEASUREMENTS, default="zstring",
                   help="observable: Z on every qubit, or the mean of single-qubit Z")
    g.add_argument("--max-evals", type=int, default=3000, help="COBYLA evaluation budget")
    g.add_argument("--rhobeg", type=float, default=1.0, help="COBYLA initial trust radius")
    g.add_argument("--rhoend", type=float, default=1e-4, help="COBYLA final trust radius")


def _add_ann(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("ANN")
    g.add_argument("--epochs", type=int, default=MlpConfig.epochs, help="full-batch ADAM steps")
    g.add_argument("--learning-rate", type=float, default=MlpConfig.learning_rate,
                   help="ADAM step size")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="qsurrogate", formatter_class=_Formatter,
                                     description="Quantum and classical surrogate models for noisy black-box data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    subs = {}

    p = sub.add_parser("gen-data", formatter_class=_Formatter, help="sample a benchmark grid to CSV",
                       description="Sample a benchmark on a regular grid, add Gaussian output noise, write CSV.")
    _add_source(p)
    p.add_argument("--noise", type=float, default=0.0, help="output noise standard deviation")
    p.add_argument("--out", type=Path, default=Path("data.csv"), help="output CSV path")
    _add_common(p)
    subs["gen-data"] = p

    p = sub.add_parser("fit", formatter_class=_Formatter, help="train a QNN or ANN surrogate",
                       description="Train a surrogate on a dataset CSV and save it as JSON.")
    p.add_argument("--data", type=Path, required=False, default=None, help="dataset CSV (required)")
    p.add_argument("--features", type=lambda s: s.split(","), default=None,
                   help="comma-separated feature columns; None uses all but the target")
    p.add_argument("--target", default=None, help="target column; None uses the last column")
    p.add_argument("--model", choices=["qnn", "ann"], default="qnn", help="surrogate family")
    p.add_argument("--out", type=Path, default=Path("model.json"), help="output model JSON path")
    _add_qnn(p)
    _add_ann(p)
    _add_common(p)
    subs["fit"] = p

    p = sub.add_parser("predict", formatter_class=_Formatter, help="evaluate a saved model",
                       description="Evaluate a saved model on a dataset CSV or benchmark grid; write a surface CSV.")
    p.add_argument("--model", type=Path, default=None, help="model JSON (required)")
    p.add_argument("--data", type=Path, default=None,
                   help="dataset CSV; its target column becomes y_true; None samples a benchmark grid")
    p.add_argument("--features", type=lambda s: s.split(","), default=None,
                   help="comma-separated feature columns; None uses all but the target")
    p.add_argument("--target", default=None, help="target column; None uses the last column")
    _add_source(p)
    p.add_argument("--noise", type=float, default=0.0,
                   help="with a benchmark grid: also emit y_noisy at this noise level")
    p.add_argument("--out", type=Path, default=Path("surface.csv"), help="output surface CSV path")
    _add_common(p)
    subs["predict"] = p

    p = sub.add_parser("sweep", formatter_class=_Formatter, help="QNN vs ANN noise/sample-size sweep",
                       description="Train both models on noisy grids and compare R2 against the clean function.")
    p.add_argument("--benchmark", choices=sorted(BENCHMARKS), default="griewank", help="benchmark function")
    p.add_argument("--interval", type=float, nargs=2, metavar=("LO", "HI"), default=None,
                   help="sampling interval per axis; None uses the benchmark's own interval")
    p.add_argument("--dim", type=int, default=2, help="input dimension of the benchmark")
    p.add_argument("--grid-sizes", type=_int_list, default=[10, 20, 30, 40, 50],
                   help="comma-separated grid sizes")
    p.add_argument("--noise-factors", type=_float_list, default=[0.1, 0.2, 0.3, 0.4, 0.5],
                   help="comma-separated noise factors")
    p.add_argument("--cells", type=_cell, nargs="+", default=None, metavar="G:NOISE",
                   help="run only these (grid, noise) cells instead of the full product")
    p.add_argument("--replicates", type=int, default=5, help="seeds per cell; the median is reported")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", type=Path, default=Path("heatmap.csv"), help="heatmap CSV path")
    p.add_argument("--raw-out", type=Path, default=None, help="optional per-replicate CSV path")
    _add_qnn(p)
    _add_ann(p)
    _add_common(p)
    subs["sweep"] = p

    p = sub.add_parser("survival", formatter_class=_Formatter, help="hardware survival-rate analysis",
                       description="'table' prints survival rates for a profile; 'solve' finds the "
                                   "two-qubit error giving a target survival rate.")
    p.add_argument("mode", nargs="?", choices=["table", "solve"], default="table", help="analysis mode")
    p.add_argument("--profile", default="ibmq_belem", help="hardware profile name from the registry")
    p.add_argument("--profiles-file", type=Path, default=None,
                   help="alternative profile registry INI; None uses the bundled one")
    p.add_argument("--readout", type=float, default=None,
                   help="readout error; overrides the profile (required if the profile has none)")
    p.add_argument("--qubits", type=_int_list, default=[2, 4, 8, 16, 32], help="qubit counts")
    p.add_argument("--layers", type=_int_list, default=[4, 8, 12, 16, 20], help="layer counts")
    p.add_argument("--target", type=float, default=None, help="solve: target survival rate")
    p.add_argument("--ratio", type=float, default=2.0, help="solve: readout error / two-qubit error")
    p.add_argument("--e-single", type=float, default=None,
                   help="solve: single-qubit error; None uses the profile's")
    p.add_argument("--out", type=Path, default=None, help="optional CSV output path")
    p.add_argument("--config", type=Path, default=None,
                   help="INI file; its section for this command supplies flag defaults")
    subs["survival"] = p
    return parser, subs


def _convert(action: argparse.Action, raw: str):
    raw = raw.strip()
    if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
        truth = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}
        if raw.lower() not in truth:
            raise ConfigError(f"{action.dest}: expected a boolean, got {raw!r}")
        value = truth[raw.lower()]
        # store_false flags (e.g. --no-reupload) keep the dest's meaning
        return value
    conv = action.type or str
    try:
        if action.nargs in ("+", "*") or isinstance(action.nargs, int):
            value = [conv(t) for t in raw.split()]
            if isinstance(action.nargs, int) and len(value) != action.nargs:
                raise ConfigError(f"{action.dest}: expected {action.nargs} values, got {raw!r}")
        else:
            value = conv(raw)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise ConfigError(f"{action.dest}: {exc}") from None
    if action.choices is not None and value not in action.choices:
        raise ConfigError(f"{action.dest}: {value!r} not one of {sorted(action.choices)}")
    return value


def apply_config(sub: argparse.ArgumentParser, command: str, path: Path) -> None:
    """Install the config section for ``command`` as parser defaults."""
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    unknown_sections = set(cp.sections()) - {"gen-data", "fit", "predict", "sweep", "survival"}
    if unknown_sections:
        raise ConfigError(f"{path}: unknown section(s) {sorted(unknown_sections)}")
    if not cp.has_section(command):
        return
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config", "mode")}
    defaults = {}
    for key, raw in cp.items(command):
        dest = key.replace("-", "_")
        if dest not in actions:
            raise ConfigError(f"{path}: unknown key {key!r} in [{command}]; known: {sorted(actions)}")
        defaults[dest] = _convert(actions[dest], raw)
    sub.set_defaults(**defaults)


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is not None:
        apply_config(subs[args.command], args.command, args.config)
        args = parser.parse_args(argv)
    return args


# --- commands -----------------------------------------------------------------

def _arch(args, n_features: int) -> QnnArchitecture:
    return QnnArchitecture(n_features, args.replication, args.layers, args.schedule,
                           args.reupload, args.feature_scale)


def _qnn_cfg(args) -> TrainConfig:
    return TrainConfig(max_evals=args.max_evals, rhobeg=args.rhobeg, rhoend=args.rhoend,
                       init_seed=derive_seed(args.seed, QNN_STREAM), measurement=args.measurement)


def _ann_cfg(args) -> MlpConfig:
    return MlpConfig(epochs=args.epochs, learning_rate=args.learning_rate,
                     seed=derive_seed(args.seed, ANN_STREAM))


def cmd_gen_data(args) -> int:
    ds = grid_sample(args.benchmark, args.interval, args.grid, args.dim)
    ds = add_output_noise(ds, NoiseSpec(args.noise, derive_seed(args.seed, NOISE_STREAM)))
    write_dataset_csv(ds, args.out)
    print(f"wrote {args.out}: n={ds.n} d={ds.d} benchmark={ds.meta['benchmark']} "
          f"interval={ds.meta['interval']} grid={args.grid} noise={args.noise} seed={args.seed}")
    return 0


def cmd_fit(args) -> int:
    if args.data is None:
        raise ConfigError("fit needs --data (a dataset CSV)")
    ds = load_csv_dataset(args.data, args.features, args.target)
    t0 = time.perf_counter()
    if args.model == "qnn":
        model, result = fit(_arch(args, ds.d), ds.inputs, ds.targets, _qnn_cfg(args))
        pred = predict_many(model, ds.inputs)
        loss = mse_loss(model, ds.inputs, ds.targets)
    else:
        model, result = mlp_fit(ds.inputs, ds.targets, cfg=_ann_cfg(args))
        pred = mlp_predict_many(model, ds.inputs)
        loss = result.best_value
    elapsed = time.perf_counter() - t0
    save_model(model, args.out)
    print(f"model={args.model} r2={r2_score(ds.targets, pred):.6f} loss={loss:.6g} "
          f"evals={result.n_evaluations} status={result.status.value} time={elapsed:.2f}s out={args.out}")
    return 0


def cmd_predict(args) -> int:
    if args.model is None:
        raise ConfigError("predict needs --model (a model JSON)")
    model = load_model(args.model)
    y_noisy = None
    if args.data is not None:
        ds = load_csv_dataset(args.data, args.features, args.target)
    else:
        ds = grid_sample(args.benchmark, args.interval, args.grid, args.dim)
        if args.noise > 0:
            y_noisy = add_output_noise(ds, NoiseSpec(args.noise, derive_seed(args.seed, NOISE_STREAM))).targets
    if isinstance(model, MlpModel):
        pred = mlp_predict_many(model, ds.inputs)
    else:
        pred = predict_many(model, ds.inputs)
    emit_surface_csv(ds.inputs, ds.targets, pred, args.out, y_noisy=y_noisy)
    msg = f"wrote {args.out}: {ds.n} rows"
    if ds.n >= 2 and np.ptp(ds.targets) > 0:
        msg += f", r2={r2_score(ds.targets, pred):.6f}"
    print(msg)
    return 0


def _write_raw(cells: list[SweepCell], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["noise_factor", "grid_size", "replicate", "r2_qnn", "r2_ann", "delta_r2", "error"])
        for c in cells:
            w.writerow([fmt(c.noise_factor), c.grid_size, c.seed, fmt(c.r2_qnn), fmt(c.r2_ann),
                        fmt(c.delta_r2), c.error or ""])


def cmd_sweep(args) -> int:
    get_benchmark(args.benchmark)
    spec = SweepSpec(args.benchmark, tuple(args.interval) if args.interval else None, args.dim,
                     _arch(args, args.dim), _qnn_cfg(args), _ann_cfg(args))
    for g in args.grid_sizes if args.cells is None else [g for g, _ in args.cells]:
        if g < 2:
            raise ConfigError(f"grid sizes must be >= 2, got {g}")
    cells = run_sweep(spec, args.grid_sizes, args.noise_factors, args.replicates, args.seed,
                      args.cells, args.workers)
    emit_heatmap_csv(cells, args.out)
    if args.raw_out is not None:
        _write_raw(cells, args.raw_out)
    print(summary_table(cells))
    failed = [c for c in cells if c.failed]
    for c in failed:
        print(f"cell g={c.grid_size} noise={c.noise_factor} replicate={c.seed} failed: {c.error}",
              file=sys.stderr)
    print(f"wrote {args.out}")
    return 1 if failed else 0


def cmd_survival(args) -> int:
    profile = get_profile(args.profile, args.readout, args.profiles_file)
    rows = []
    if args.mode == "solve":
        if args.target is None:
            raise ConfigError("survival solve needs --target")
        e_single = args.e_single if args.e_single is not None else profile.e_single
        header = ["qubits", "layers", "target", "e_single", "ratio", "e_two", "e_readout", "fraction_of_profile"]
        for n in args.qubits:
            for L in args.layers:
                e_two = required_two_qubit_error(args.target, n, L, e_single, args.ratio)
                frac = e_two / profile.e_two if profile.e_two > 0 else math.nan
                rows.append([n, L, args.target, e_single, args.ratio, e_two, args.ratio * e_two, frac])
                print(f"qubits={n} layers={L} target={args.target}: e_two={e_two:.6g} "
                      f"({100 * e_two:.3f}%), e_readout={args.ratio * e_two:.6g}, "
                      f"{100 * frac:.1f}% of {args.profile}'s two-qubit error")
    else:
        table = survival_table(profile, args.qubits, args.layers)
        header = ["qubits"] + [f"L{L}" for L in args.layers]
        print(f"survival rates for {args.profile} (rows: qubits, columns: layers)")
        print("qubits " + " ".join(f"{L:>7}" for L in args.layers))
        for n, row in zip(args.qubits, table):
            print(f"{n:>6} " + " ".join(f"{v:7.4f}" for v in row))
            rows.append([n] + list(row))
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with args.out.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([[fmt(v) if isinstance(v, float) else v for v in r] for r in rows])
    return 0


COMMANDS = {"gen-data": cmd_gen_data, "fit": cmd_fit, "predict": cmd_predict,
            "sweep": cmd_sweep, "survival": cmd_survival}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except (QSurrogateError, ValueError, ArithmeticError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
