"""Layered QNN circuits: RX angle-encoding feature map plus two ansatz blocks.

The "circuit 11" block (RY/RZ layers with staggered CNOT ladders) and the
"circuit 9" block (H wall, CZ chain, RX layer) are laid out with the
exact gate order and CNOT orientation of the 4-qubit reference drawing.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

from .errors import ArchitectureError
from .sim import CircuitSpec, Feature, GateKind, GateOp, Param


class AnsatzSchedule(str, enum.Enum):
    ALTERNATING = "alternating"
    CIRCUIT11_ONLY = "circuit11"
    CIRCUIT9_ONLY = "circuit9"


@dataclass(frozen=True)
class QnnArchitecture:
    n_features: int
    replication: int = 1
    n_layers: int = 1
    schedule: AnsatzSchedule = AnsatzSchedule.ALTERNATING
    reupload: bool = True
    feature_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "schedule", AnsatzSchedule(self.schedule))
        if self.n_features < 1:
            raise ArchitectureError(f"n_features must be >= 1, got {self.n_features}")
        if self.replication < 1:
            raise ArchitectureError(f"replication must be >= 1, got {self.replication}")
        if self.n_layers < 1:
            raise ArchitectureError(f"n_layers must be >= 1, got {self.n_layers}")
        if self.n_qubits < 2:
            raise ArchitectureError(f"need at least 2 qubits, got {self.n_qubits}")
        if not math.isfinite(self.feature_scale):
            raise ArchitectureError("feature_scale must be finite")

    @property
    def n_qubits(self) -> int:
        return self.n_features * self.replication

    def layer_ansatz(self, layer: int) -> AnsatzSchedule:
        """Ansatz used by 1-based ``layer``."""
        if self.schedule is AnsatzSchedule.ALTERNATING:
            return AnsatzSchedule.CIRCUIT11_ONLY if layer % 2 == 1 else AnsatzSchedule.CIRCUIT9_ONLY
        return self.schedule

    def expected_n_params(self) -> int:
        n = self.n_qubits
        c11 = circuit11_param_count(n)
        total = 0
        for layer in range(1, self.n_layers + 1):
            total += c11 if self.layer_ansatz(layer) is AnsatzSchedule.CIRCUIT11_ONLY else n
        return total

    def n_encodings(self) -> int:
        layers_with_fm = self.n_layers if self.reupload else 1
        return layers_with_fm * self.n_qubits

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "replication": self.replication,
            "n_layers": self.n_layers,
            "schedule": self.schedule.value,
            "reupload": self.reupload,
            "feature_scale": self.feature_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QnnArchitecture":
        return cls(**d)


def circuit11_param_count(n_qubits: int) -> int:
    return 2 * n_qubits + 2 * max(n_qubits - 2, 0)


def build_feature_map(n_qubits: int, n_features: int, feature_scale: float = 1.0) -> list[GateOp]:
    if n_features < 1 or n_qubits % n_features:
        raise ArchitectureError(
            f"{n_qubits} qubits cannot carry {n_features} features with integral replication")
    return [GateOp(GateKind.RX, (q,), Feature(q % n_features, feature_scale)) for q in range(n_qubits)]


def _require_two(n_qubits: int) -> None:
    if n_qubits < 2:
        raise ArchitectureError(f"ansatz blocks need at least 2 qubits, got {n_qubits}")


def build_circuit11(n_qubits: int, param_offset: int = 0) -> tuple[list[GateOp], int]:
    _require_two(n_qubits)
    gates: list[GateOp] = []
    p = param_offset
    # RY column then RZ column over all qubits, numbered column-wise
    for kind in (GateKind.RY, GateKind.RZ):
        for q in range(n_qubits):
            gates.append(GateOp(kind, (q,), Param(p)))
            p += 1
    for tgt in range(0, n_qubits - 1, 2):
        gates.append(GateOp(GateKind.CNOT, (tgt + 1, tgt)))
    interior = range(1, n_qubits - 1)
    for kind in (GateKind.RY, GateKind.RZ):
        for q in interior:
            gates.append(GateOp(kind, (q,), Param(p)))
            p += 1
    for tgt in range(1, n_qubits - 1, 2):
        gates.append(GateOp(GateKind.CNOT, (tgt + 1, tgt)))
    return gates, p - param_offset


def build_circuit9(n_qubits: int, param_offset: int = 0) -> tuple[list[GateOp], int]:
    _require_two(n_qubits)
    gates = [GateOp(GateKind.H, (q,)) for q in range(n_qubits)]
    for hi in range(n_qubits - 1, 0, -1):
        gates.append(GateOp(GateKind.CZ, (hi, hi - 1)))
    gates += [GateOp(GateKind.RX, (q,), Param(param_offset + q)) for q in range(n_qubits)]
    return gates, n_qubits


def assemble_qnn(arch: QnnArchitecture) -> CircuitSpec:
    n = arch.n_qubits
    fm = build_feature_map(n, arch.n_features, arch.feature_scale)
    gates: list[GateOp] = []
    offset = 0
    for layer in range(1, arch.n_layers + 1):
        if layer == 1 or arch.reupload:
            gates += fm
        if arch.layer_ansatz(layer) is AnsatzSchedule.CIRCUIT11_ONLY:
            block, used = build_circuit11(n, offset)
        else:
            block, used = build_circuit9(n, offset)
        gates += block
        offset += used
    spec = CircuitSpec(n, gates)
    if (arch.schedule is AnsatzSchedule.ALTERNATING and arch.reupload and n >= 4
            and spec.n_params < 2 * arch.n_encodings()):
        warnings.warn(
            f"{spec.n_params} parameters is below twice the {arch.n_encodings()} feature encodings",
            stacklevel=2)
    return spec


def satisfies_min_param_rule(arch: QnnArchitecture, spec: CircuitSpec | None = None) -> bool:
    spec = spec or assemble_qnn(arch)
    return spec.n_params >= 2 * arch.n_encodings()


def layer_gate_counts(n_qubits: int, ansatz: AnsatzSchedule) -> tuple[int, int]:
    """(single-qubit, two-qubit) gates in one reuploading layer, feature map included."""
    if ansatz is AnsatzSchedule.CIRCUIT11_ONLY:
        block, _ = build_circuit11(n_qubits)
    else:
        block, _ = build_circuit9(n_qubits)
    twos = sum(1 for g in block if g.kind.n_qubits == 2)
    return n_qubits + len(block) - twos, twos
