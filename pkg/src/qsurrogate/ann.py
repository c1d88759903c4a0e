"""Minimal MLP baseline: d -> 10 (sigmoid) -> 3 (tanh) -> 1 (linear), trained with ADAM."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import MinMaxScaler
from .errors import DimensionError
from .optimize import OptResult, adam_minimize

HIDDEN = (10, 3)
FORMAT_VERSION = 1


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_scaler: MinMaxScaler
    output_scaler: MinMaxScaler

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64).reshape(-1) for b in self.biases]
        dims = self.layer_dims
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[k], dims[k + 1]) or b.shape != (dims[k + 1],):
                raise DimensionError(f"layer {k} has weight {w.shape} and bias {b.shape}")
        if not all(np.all(np.isfinite(a)) for a in self.weights + self.biases):
            raise ValueError("MLP parameters must be finite")

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    def flat(self) -> np.ndarray:
        return flatten(self.weights, self.biases)

    def to_dict(self) -> dict:
        return {
            "format": "qsurrogate.mlp",
            "version": FORMAT_VERSION,
            "layer_dims": self.layer_dims,
            "activations": ["sigmoid", "tanh", "identity"],
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "input_scaler": self.input_scaler.to_dict(),
            "output_scaler": self.output_scaler.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        if d.get("format") != "qsurrogate.mlp" or d.get("version") != FORMAT_VERSION:
            raise ValueError(f"not a supported MLP model document: {d.get('format')!r} v{d.get('version')!r}")
        return cls([np.array(w, dtype=np.float64).reshape(a, b) for w, a, b in
                    zip(d["weights"], d["layer_dims"][:-1], d["layer_dims"][1:])],
                   d["biases"], MinMaxScaler.from_dict(d["input_scaler"]),
                   MinMaxScaler.from_dict(d["output_scaler"]))


def layer_shapes(d_in: int) -> list[tuple[int, int]]:
    dims = [d_in, *HIDDEN, 1]
    return list(zip(dims[:-1], dims[1:]))


def n_parameters(d_in: int) -> int:
    return sum(a * b + b for a, b in layer_shapes(d_in))


def flatten(weights, biases) -> np.ndarray:
    return np.concatenate([np.concatenate([w.ravel(), b.ravel()]) for w, b in zip(weights, biases)])


def unflatten(vec: np.ndarray, d_in: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    weights, biases, k = [], [], 0
    for a, b in layer_shapes(d_in):
        weights.append(vec[k:k + a * b].reshape(a, b))
        k += a * b
        biases.append(vec[k:k + b])
        k += b
    if k != vec.size:
        raise DimensionError(f"parameter vector has {vec.size} entries, expected {k}")
    return weights, biases


def _forward(weights, biases, x):
    """Normalised-space forward pass; returns output (B,) and the activations."""
    z1 = x @ weights[0] + biases[0]
    a1 = sigmoid(z1)
    z2 = a1 @ weights[1] + biases[1]
    a2 = np.tanh(z2)
    out = (a2 @ weights[2] + biases[2]).reshape(-1)
    return out, (x, a1, a2)


def loss_and_grad(vec: np.ndarray, x: np.ndarray, y: np.ndarray, d_in: int):
    """Mean squared error and its gradient by backpropagation."""
    weights, biases = unflatten(vec, d_in)
    out, (a0, a1, a2) = _forward(weights, biases, x)
    n = y.size
    resid = out - y
    loss = float(np.mean(resid ** 2))
    delta3 = (2.0 / n) * resid[:, None]
    g_w3 = a2.T @ delta3
    g_b3 = delta3.sum(axis=0)
    delta2 = (delta3 @ weights[2].T) * (1.0 - a2 ** 2)
    g_w2 = a1.T @ delta2
    g_b2 = delta2.sum(axis=0)
    delta1 = (delta2 @ weights[1].T) * a1 * (1.0 - a1)
    g_w1 = a0.T @ delta1
    g_b1 = delta1.sum(axis=0)
    return loss, flatten([g_w1, g_w2, g_w3], [g_b1, g_b2, g_b3])


def mlp_raw(model: MlpModel, inputs) -> np.ndarray:
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if x.shape[1] != model.n_inputs:
        raise DimensionError(f"model expects {model.n_inputs} features, got {x.shape[1]}")
    out, _ = _forward(model.weights, model.biases, model.input_scaler.encode(x))
    return out


def mlp_predict_many(model: MlpModel, inputs) -> np.ndarray:
    return model.output_scaler.decode(mlp_raw(model, inputs))


def mlp_forward(model: MlpModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"mlp_forward takes one input vector, got shape {x.shape}")
    return float(mlp_predict_many(model, x.reshape(1, -1))[0])


def init_parameters(d_in: int, seed: int) -> np.ndarray:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    for a, b in layer_shapes(d_in):
        limit = np.sqrt(6.0 / (a + b))
        weights.append(rng.uniform(-limit, limit, (a, b)))
        biases.append(np.zeros(b))
    return flatten(weights, biases)


@dataclass
class MlpConfig:
    epochs: int = 5000
    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0


def mlp_fit(inputs, targets, epochs: int = 5000, learning_rate: float = 0.05,
            seed: int = 0, cfg: MlpConfig | None = None) -> tuple[MlpModel, OptResult]:
    cfg = cfg or MlpConfig(epochs=epochs, learning_rate=learning_rate, seed=seed)
    x_raw = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y_raw = np.asarray(targets, dtype=np.float64).reshape(-1)
    if y_raw.size == 0:
        raise ValueError("cannot fit on an empty dataset")
    if x_raw.shape[0] != y_raw.size:
        raise DimensionError(f"{x_raw.shape[0]} input rows but {y_raw.size} targets")
    d_in = x_raw.shape[1]
    in_scaler = MinMaxScaler.fit(x_raw, 0.0, 1.0, names=[f"x{j}" for j in range(d_in)])
    out_scaler = MinMaxScaler.fit(y_raw, -1.0, 1.0, names=["target"])
    x = in_scaler.encode(x_raw)
    y = out_scaler.encode(y_raw)

    def gradient(vec):
        return loss_and_grad(vec, x, y, d_in)[1]

    def objective(vec):
        weights, biases = unflatten(vec, d_in)
        out, _ = _forward(weights, biases, x)
        return float(np.mean((out - y) ** 2))

    result = adam_minimize(gradient, objective, init_parameters(d_in, cfg.seed),
                           cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, cfg.epochs)
    weights, biases = unflatten(result.best_point, d_in)
    return MlpModel(weights, biases, in_scaler, out_scaler), result
