"""Exact statevector simulation for the RX/RY/RZ/H/CNOT/CZ gate set.

Qubit 0 is the least-significant bit of the basis index, so basis state
``|q_{n-1} ... q_1 q_0>`` has index ``sum(q_k << k)``.

Gates are applied in place through strided views of the amplitude array.
Every routine works on a batch of states stored as a ``(B, 2**n)`` array;
single-state helpers wrap a batch of one.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import BindingError, CapacityError, DimensionError

MAX_QUBITS = 24

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class GateKind(str, enum.Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    H = "H"
    CNOT = "CNOT"
    CZ = "CZ"

    @property
    def is_rotation(self) -> bool:
        return self in (GateKind.RX, GateKind.RY, GateKind.RZ)

    @property
    def n_qubits(self) -> int:
        return 2 if self in (GateKind.CNOT, GateKind.CZ) else 1


@dataclass(frozen=True)
class Fixed:
    angle: float


@dataclass(frozen=True)
class Feature:
    index: int
    scale: float = 1.0


@dataclass(frozen=True)
class Param:
    index: int


Binding = Union[Fixed, Feature, Param]


@dataclass(frozen=True)
class GateOp:
    """One gate. Two-qubit gates list ``(control, target)``."""

    kind: GateKind
    qubits: tuple[int, ...]
    binding: Binding | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.n_qubits:
            raise BindingError(f"{self.kind.value} acts on {self.kind.n_qubits} qubit(s), got {self.qubits}")
        if self.kind.n_qubits == 2 and self.qubits[0] == self.qubits[1]:
            raise BindingError(f"{self.kind.value} needs distinct qubits, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise BindingError(f"negative qubit index in {self.qubits}")
        if self.kind.is_rotation and self.binding is None:
            raise BindingError(f"{self.kind.value} requires a binding")
        if not self.kind.is_rotation and self.binding is not None:
            raise BindingError(f"{self.kind.value} takes no binding")


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    gates: tuple[GateOp, ...]
    n_params: int = field(init=False)
    n_features: int = field(init=False)

    def __init__(self, n_qubits: int, gates: Sequence[GateOp]):
        object.__setattr__(self, "n_qubits", int(n_qubits))
        object.__setattr__(self, "gates", tuple(gates))
        _check_qubit_count(self.n_qubits)
        params: list[int] = []
        feats: set[int] = set()
        for g in self.gates:
            if any(q >= self.n_qubits for q in g.qubits):
                raise BindingError(f"gate {g} exceeds {self.n_qubits} qubits")
            if isinstance(g.binding, Param):
                params.append(g.binding.index)
            elif isinstance(g.binding, Feature):
                feats.add(g.binding.index)
        if len(params) != len(set(params)):
            raise BindingError("parameter indices must be used by exactly one gate")
        if params and sorted(params) != list(range(len(params))):
            raise BindingError("parameter indices must be contiguous from 0")
        if feats and sorted(feats) != list(range(len(feats))):
            raise BindingError("feature indices must be contiguous from 0")
        object.__setattr__(self, "n_params", len(params))
        object.__setattr__(self, "n_features", len(feats))


@dataclass
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise DimensionError(
                f"expected {1 << self.n_qubits} amplitudes, got shape {self.amplitudes.shape}")

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amplitudes.copy())


def _check_qubit_count(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


def new_zero_state(n_qubits: int) -> Statevector:
    _check_qubit_count(n_qubits)
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(n_qubits, amps)


def zero_states(n_qubits: int, batch: int) -> np.ndarray:
    _check_qubit_count(n_qubits)
    amps = np.zeros((batch, 1 << n_qubits), dtype=np.complex128)
    amps[:, 0] = 1.0
    return amps


def _pair_view(amps: np.ndarray, qubit: int, n_qubits: int):
    """Views on the |0> and |1> halves of ``qubit``, shape (B, hi, lo)."""
    v = amps.reshape(amps.shape[0], 1 << (n_qubits - qubit - 1), 2, 1 << qubit)
    return v[:, :, 0, :], v[:, :, 1, :]


def _tensor_view(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    return amps.reshape((amps.shape[0],) + (2,) * n_qubits)


def _index(n_qubits: int, assign: dict[int, int]) -> tuple:
    idx = [slice(None)] * (n_qubits + 1)
    for q, bit in assign.items():
        idx[n_qubits - q] = bit
    return tuple(idx)


def apply_gate_batch(amps: np.ndarray, n_qubits: int, gate: GateOp, angle=None) -> np.ndarray:
    """Apply ``gate`` in place to every row of ``amps``.

    ``angle`` is a scalar or a length-B array for rotation gates.
    """
    kind = gate.kind
    if kind.is_rotation:
        if angle is None:
            raise BindingError(f"{kind.value} on qubit {gate.qubits[0]} needs a resolved angle")
        half = np.asarray(angle, dtype=np.float64) * 0.5
        if half.ndim:
            half = half.reshape(-1, 1, 1)
        c, s = np.cos(half), np.sin(half)
        a0, a1 = _pair_view(amps, gate.qubits[0], n_qubits)
        if kind is GateKind.RX:
            t0 = a0.copy()
            a0 *= c
            a0 += -1j * s * a1
            a1 *= c
            a1 += -1j * s * t0
        elif kind is GateKind.RY:
            t0 = a0.copy()
            a0 *= c
            a0 -= s * a1
            a1 *= c
            a1 += s * t0
        else:
            phase = np.exp(-1j * half)
            a0 *= phase
            a1 *= np.conj(phase)
    elif kind is GateKind.H:
        a0, a1 = _pair_view(amps, gate.qubits[0], n_qubits)
        t0 = a0.copy()
        a0 += a1
        a0 *= _INV_SQRT2
        a1 -= t0
        a1 *= -_INV_SQRT2
    elif kind is GateKind.CNOT:
        ctrl, tgt = gate.qubits
        view = _tensor_view(amps, n_qubits)
        i0 = _index(n_qubits, {ctrl: 1, tgt: 0})
        i1 = _index(n_qubits, {ctrl: 1, tgt: 1})
        tmp = view[i0].copy()
        view[i0] = view[i1]
        view[i1] = tmp
    elif kind is GateKind.CZ:
        view = _tensor_view(amps, n_qubits)
        view[_index(n_qubits, {gate.qubits[0]: 1, gate.qubits[1]: 1})] *= -1
    return amps


def apply_gate(state: Statevector, gate: GateOp, resolved_angle: float | None = None) -> Statevector:
    if any(q >= state.n_qubits for q in gate.qubits):
        raise BindingError(f"gate {gate} exceeds {state.n_qubits} qubits")
    apply_gate_batch(state.amplitudes.reshape(1, -1), state.n_qubits, gate, resolved_angle)
    return state


def resolve_angle(binding: Binding, features: np.ndarray, params: np.ndarray):
    """Angle for a binding; ``features`` is (B, d) so feature angles are per row."""
    if isinstance(binding, Fixed):
        return binding.angle
    if isinstance(binding, Param):
        return params[binding.index]
    return binding.scale * features[:, binding.index]


def _check_lengths(spec: CircuitSpec, n_features: int, n_params: int) -> None:
    if n_features != spec.n_features:
        raise DimensionError(f"circuit expects {spec.n_features} features, got {n_features}")
    if n_params != spec.n_params:
        raise DimensionError(f"circuit expects {spec.n_params} parameters, got {n_params}")


def run_circuit_batch(spec: CircuitSpec, features, params) -> np.ndarray:
    """Run ``spec`` for every row of ``features`` (shape (B, d)); returns (B, 2**n)."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if spec.n_features == 0 and features.size == 0:
        features = features.reshape(max(features.shape[0], 1), 0)
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    _check_lengths(spec, features.shape[1], params.shape[0])
    if (1 << spec.n_qubits) * 4 <= features.shape[0]:
        return CompiledCircuit(spec, features).states(params)
    amps = zero_states(spec.n_qubits, features.shape[0])
    for gate in spec.gates:
        angle = resolve_angle(gate.binding, features, params) if gate.binding is not None else None
        apply_gate_batch(amps, spec.n_qubits, gate, angle)
    return amps


def _hadamard_on(n_qubits: int, qubits) -> np.ndarray:
    """Dense right-multiplier applying H to ``qubits`` (symmetric, so no transpose)."""
    block = np.eye(1 << n_qubits, dtype=np.complex128)
    for q in qubits:
        apply_gate_batch(block, n_qubits, GateOp(GateKind.H, (q,)))
    return block


class CompiledCircuit:
    """A circuit bound to a fixed feature matrix, for many parameter evaluations.

    Consecutive feature-bound RX/RZ gates on distinct qubits collapse into a
    per-row diagonal phase (RX via Hadamard conjugation). Everything between
    them collapses into one dense ``2**n x 2**n`` matrix per parameter vector.
    Amplitudes are row vectors, so the stored matrices are right-multipliers.
    """

    def __init__(self, spec: CircuitSpec, features):
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        _check_lengths(spec, features.shape[1], spec.n_params)
        self.spec = spec
        self.batch = features.shape[0]
        n = spec.n_qubits
        bits = (np.arange(1 << n)[:, None] >> np.arange(n)[None, :]) & 1
        zsign = 1.0 - 2.0 * bits  # (2**n, n)
        # program: list of ("gates", [GateOp...]) / ("fixed", matrix) / ("diag", (B, 2**n))
        self._program: list[tuple[str, object]] = []
        gates = list(spec.gates)
        i = 0
        while i < len(gates):
            g = gates[i]
            if isinstance(g.binding, Feature) and g.kind in (GateKind.RX, GateKind.RZ):
                layer = [g]
                used = {g.qubits[0]}
                j = i + 1
                while (j < len(gates) and isinstance(gates[j].binding, Feature)
                       and gates[j].kind is g.kind and gates[j].qubits[0] not in used):
                    layer.append(gates[j])
                    used.add(gates[j].qubits[0])
                    j += 1
                phase = np.zeros((self.batch, 1 << n))
                for lg in layer:
                    q = lg.qubits[0]
                    phase += np.outer(lg.binding.scale * features[:, lg.binding.index], zsign[:, q])
                diag = np.exp(-0.5j * phase)
                if g.kind is GateKind.RX:
                    h = _hadamard_on(n, sorted(used))
                    self._program += [("fixed", h), ("diag", diag), ("fixed", h)]
                else:
                    self._program.append(("diag", diag))
                i = j
            elif isinstance(g.binding, Feature):
                raise BindingError(f"cannot compile feature-bound {g.kind.value}")
            else:
                if self._program and self._program[-1][0] == "gates":
                    self._program[-1][1].append(g)
                else:
                    self._program.append(("gates", [g]))
                i += 1

    def _dense(self, gates, params) -> np.ndarray:
        n = self.spec.n_qubits
        block = np.eye(1 << n, dtype=np.complex128)
        for g in gates:
            apply_gate_batch(block, n, g, resolve_angle(g.binding, None, params)
                             if g.binding is not None else None)
        return block

    def states(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=np.float64).reshape(-1)
        if params.shape[0] != self.spec.n_params:
            raise DimensionError(f"circuit expects {self.spec.n_params} parameters, got {params.shape[0]}")
        amps = zero_states(self.spec.n_qubits, self.batch)
        pending = None
        for kind, item in self._program:
            if kind == "diag":
                if pending is not None:
                    amps = amps @ pending
                    pending = None
                amps = amps * item
                continue
            mat = item if kind == "fixed" else self._dense(item, params)
            pending = mat if pending is None else pending @ mat
        if pending is not None:
            amps = amps @ pending
        return amps


def run_circuit(spec: CircuitSpec, features, params) -> Statevector:
    features = np.asarray(features, dtype=np.float64).reshape(1, -1)
    amps = run_circuit_batch(spec, features, params)
    return Statevector(spec.n_qubits, amps[0])


def z_string_signs(n_qubits: int, qubits) -> np.ndarray:
    """+1/-1 per basis index: parity of the bits in ``qubits``."""
    qubits = sorted(set(int(q) for q in qubits))
    if not qubits:
        raise ValueError("Z-string needs at least one qubit")
    if qubits[0] < 0 or qubits[-1] >= n_qubits:
        raise ValueError(f"qubits {qubits} out of range for {n_qubits} qubits")
    mask = sum(1 << q for q in qubits)
    idx = np.arange(1 << n_qubits) & mask
    parity = np.zeros(idx.shape, dtype=np.int64)
    while mask:
        parity ^= idx & 1
        idx >>= 1
        mask >>= 1
    return 1.0 - 2.0 * parity


def expectation_z_string_batch(amps: np.ndarray, n_qubits: int, qubits) -> np.ndarray:
    probs = amps.real ** 2 + amps.imag ** 2
    return probs @ z_string_signs(n_qubits, qubits)


def expectation_z_string(state: Statevector, qubits) -> float:
    return float(expectation_z_string_batch(state.amplitudes.reshape(1, -1), state.n_qubits, qubits)[0])


def parameter_shift_gradient(spec: CircuitSpec, qubits, features, params) -> np.ndarray:
    """Exact gradient of the Z-string expectation with respect to every trainable angle."""
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    features = np.asarray(features, dtype=np.float64).reshape(1, -1)
    _check_lengths(spec, features.shape[1], params.shape[0])
    signs = z_string_signs(spec.n_qubits, qubits)
    grad = np.empty(spec.n_params)
    shifted = params.copy()
    for k in range(spec.n_params):
        shifted[k] = params[k] + math.pi / 2
        plus = run_circuit_batch(spec, features, shifted)
        shifted[k] = params[k] - math.pi / 2
        minus = run_circuit_batch(spec, features, shifted)
        shifted[k] = params[k]
        e_plus = (np.abs(plus[0]) ** 2) @ signs
        e_minus = (np.abs(minus[0]) ** 2) @ signs
        grad[k] = 0.5 * (e_plus - e_minus)
    return grad
