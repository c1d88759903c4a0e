"""Quantum surrogate model: circuit -> Z-string expectation -> rescaled output."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuit import QnnArchitecture, assemble_qnn
from .data import MinMaxScaler
from .errors import DimensionError
from .optimize import OptResult, cobyla_minimize
from .sim import CircuitSpec, CompiledCircuit, run_circuit_batch, z_string_signs

FORMAT_VERSION = 1
MEASUREMENTS = ("zstring", "mean_z")


class InputClampWarning(UserWarning):
    """Inputs fell outside the training domain and were clamped to [0, 1]."""


@dataclass
class TrainConfig:
    max_evals: int = 3000
    rhobeg: float = 1.0
    rhoend: float = 1e-4
    init_seed: int = 0
    init_range: tuple[float, float] = (-math.pi, math.pi)
    measurement: str = "zstring"

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError(f"max_evals must be >= 1, got {self.max_evals}")
        if self.measurement not in MEASUREMENTS:
            raise ValueError(f"measurement must be one of {MEASUREMENTS}, got {self.measurement!r}")
        lo, hi = self.init_range
        if not lo < hi:
            raise ValueError(f"init_range must satisfy lo < hi, got {self.init_range}")


@dataclass
class SurrogateModel:
    arch: QnnArchitecture
    theta: np.ndarray
    input_scaler: MinMaxScaler
    output_scaler: MinMaxScaler
    measurement: str = "zstring"
    spec: CircuitSpec = field(init=False, repr=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        self.spec = assemble_qnn(self.arch)
        if self.theta.shape[0] != self.spec.n_params:
            raise DimensionError(
                f"theta has {self.theta.shape[0]} entries, circuit needs {self.spec.n_params}")
        self._observable = observable_weights(self.spec.n_qubits, self.measurement)

    def to_dict(self) -> dict:
        return {
            "format": "qsurrogate.qnn",
            "version": FORMAT_VERSION,
            "arch": self.arch.to_dict(),
            "measurement": self.measurement,
            "theta": self.theta.tolist(),
            "input_scaler": self.input_scaler.to_dict(),
            "output_scaler": self.output_scaler.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SurrogateModel":
        if d.get("format") != "qsurrogate.qnn":
            raise ValueError(f"not a QNN model document (format={d.get('format')!r})")
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported QNN model version {d.get('version')!r}")
        return cls(QnnArchitecture.from_dict(d["arch"]), d["theta"],
                   MinMaxScaler.from_dict(d["input_scaler"]),
                   MinMaxScaler.from_dict(d["output_scaler"]), d["measurement"])


def observable_weights(n_qubits: int, measurement: str) -> np.ndarray:
    """Diagonal of the measured observable in the computational basis."""
    if measurement == "zstring":
        return z_string_signs(n_qubits, range(n_qubits))
    if measurement == "mean_z":
        return np.mean([z_string_signs(n_qubits, [q]) for q in range(n_qubits)], axis=0)
    raise ValueError(f"unknown measurement {measurement!r}")


def _scaled_inputs(model: SurrogateModel, inputs) -> np.ndarray:
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if x.shape[1] != model.arch.n_features:
        raise DimensionError(f"model expects {model.arch.n_features} features, got {x.shape[1]}")
    scaled = model.input_scaler.encode(x)
    clipped = np.clip(scaled, 0.0, 1.0)
    if not np.array_equal(clipped, scaled):
        warnings.warn("inputs outside the training domain were clamped", InputClampWarning,
                      stacklevel=3)
    return clipped


def raw_outputs(model: SurrogateModel, inputs) -> np.ndarray:
    """Expectation values in [-1, 1] for every row of ``inputs`` (raw units)."""
    amps = run_circuit_batch(model.spec, _scaled_inputs(model, inputs), model.theta)
    return (amps.real ** 2 + amps.imag ** 2) @ model._observable


def predict_many(model: SurrogateModel, inputs) -> np.ndarray:
    return model.output_scaler.decode(raw_outputs(model, inputs))


def predict(model: SurrogateModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"predict takes one input vector, got shape {x.shape}")
    return float(predict_many(model, x.reshape(1, -1))[0])


def mse_loss(model: SurrogateModel, inputs, targets) -> float:
    """Mean squared error in the normalised target space [-1, 1]."""
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if targets.size == 0:
        raise ValueError("mse_loss needs at least one row")
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if inputs.shape[0] != targets.size:
        raise DimensionError(f"{inputs.shape[0]} input rows but {targets.size} targets")
    resid = raw_outputs(model, inputs) - model.output_scaler.encode(targets)
    return float(np.mean(resid ** 2))


def initial_theta(n_params: int, cfg: TrainConfig) -> np.ndarray:
    lo, hi = cfg.init_range
    return np.random.Generator(np.random.PCG64(cfg.init_seed)).uniform(lo, hi, n_params)


def fit(arch: QnnArchitecture, inputs, targets, cfg: TrainConfig | None = None
        ) -> tuple[SurrogateModel, OptResult]:
    cfg = cfg or TrainConfig()
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if targets.size == 0:
        raise ValueError("cannot fit on an empty dataset")
    if inputs.shape[0] != targets.size:
        raise DimensionError(f"{inputs.shape[0]} input rows but {targets.size} targets")
    if inputs.shape[1] != arch.n_features:
        raise DimensionError(f"architecture expects {arch.n_features} features, got {inputs.shape[1]}")

    in_scaler = MinMaxScaler.fit(inputs, 0.0, 1.0, names=[f"x{j}" for j in range(inputs.shape[1])])
    out_scaler = MinMaxScaler.fit(targets, -1.0, 1.0, names=["target"])
    spec = assemble_qnn(arch)
    compiled = CompiledCircuit(spec, in_scaler.encode(inputs))
    weights = observable_weights(spec.n_qubits, cfg.measurement)
    y = out_scaler.encode(targets)

    def objective(theta):
        amps = compiled.states(theta)
        pred = (amps.real ** 2 + amps.imag ** 2) @ weights
        return float(np.mean((pred - y) ** 2))

    theta0 = initial_theta(spec.n_params, cfg)
    result = cobyla_minimize(objective, theta0, cfg.rhobeg, cfg.rhoend, cfg.max_evals)
    model = SurrogateModel(arch, result.best_point, in_scaler, out_scaler, cfg.measurement)
    return model, result


def save_model(model, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model.to_dict(), indent=1) + "\n", encoding="utf-8")
    return path


def load_model(path):
    """Load a QNN or MLP model document, dispatching on its ``format`` field."""
    from .ann import MlpModel

    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model file not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("format") == "qsurrogate.mlp":
        return MlpModel.from_dict(doc)
    return SurrogateModel.from_dict(doc)
