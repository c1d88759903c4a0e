import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qsurrogate.circuit import QnnArchitecture, assemble_qnn, build_circuit11
from qsurrogate.errors import BindingError, CapacityError, DimensionError
from qsurrogate.sim import (CircuitSpec, CompiledCircuit, Feature, Fixed, GateKind, GateOp, Param,
                            Statevector, apply_gate, expectation_z_string, new_zero_state,
                            parameter_shift_gradient, run_circuit, run_circuit_batch, zero_states)

S2 = 1 / math.sqrt(2)


def dense_gate(kind, angle=0.0):
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return {
        GateKind.RX: np.array([[c, -1j * s], [-1j * s, c]]),
        GateKind.RY: np.array([[c, -s], [s, c]]),
        GateKind.RZ: np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)]),
        GateKind.H: np.array([[1, 1], [1, -1]]) * S2,
    }[kind]


def oracle_apply(amps, n, gate, angle=0.0):
    """Independent reference: build the full 2^n matrix with Kronecker products."""
    dim = 1 << n
    if gate.kind.n_qubits == 1:
        q = gate.qubits[0]
        full = np.array([[1.0]])
        for k in reversed(range(n)):  # qubit 0 is the least significant factor
            full = np.kron(full, dense_gate(gate.kind, angle) if k == q else np.eye(2))
        return full @ amps
    a, b = gate.qubits
    out = amps.copy()
    for i in range(dim):
        if gate.kind is GateKind.CNOT and (i >> a) & 1:
            out[i] = amps[i ^ (1 << b)]
        if gate.kind is GateKind.CZ and (i >> a) & 1 and (i >> b) & 1:
            out[i] = -amps[i]
    return out


@pytest.mark.parametrize("n", [1, 2, 4])
def test_zero_state(n):
    s = new_zero_state(n)
    assert s.amplitudes.shape == (1 << n,)
    assert s.amplitudes[0] == 1 and np.count_nonzero(s.amplitudes) == 1


def test_capacity_limits():
    with pytest.raises(CapacityError):
        new_zero_state(0)
    with pytest.raises(CapacityError):
        new_zero_state(25)


@pytest.mark.parametrize("gate,angle,expected", [
    (GateOp(GateKind.RX, (0,), Fixed(math.pi)), math.pi, [0, -1j]),
    (GateOp(GateKind.H, (0,)), None, [S2, S2]),
    (GateOp(GateKind.RY, (0,), Fixed(math.pi)), math.pi, [0, 1]),
])
def test_single_qubit_gates_on_zero(gate, angle, expected):
    s = apply_gate(new_zero_state(1), gate, angle)
    np.testing.assert_allclose(s.amplitudes, expected, atol=1e-15)


def test_cnot_flips_target_when_control_set():
    # |q1 q0> = |10> is basis index 2; CNOT(control=1, target=0) gives |11> = index 3
    s = Statevector(2, np.eye(4)[2])
    apply_gate(s, GateOp(GateKind.CNOT, (1, 0)))
    np.testing.assert_array_equal(s.amplitudes, np.eye(4)[3])


def test_cnot_idle_when_control_clear():
    s = Statevector(2, np.eye(4)[1])
    apply_gate(s, GateOp(GateKind.CNOT, (1, 0)))
    np.testing.assert_array_equal(s.amplitudes, np.eye(4)[1])


@pytest.mark.parametrize("bad", [
    lambda: GateOp(GateKind.RX, (0,)),
    lambda: GateOp(GateKind.H, (0,), Fixed(0.1)),
    lambda: GateOp(GateKind.CNOT, (1, 1)),
    lambda: GateOp(GateKind.CZ, (0,)),
])
def test_gate_validation(bad):
    with pytest.raises(BindingError):
        bad()


def test_spec_rejects_out_of_range_qubit():
    with pytest.raises(BindingError):
        CircuitSpec(2, [GateOp(GateKind.H, (2,))])


def test_spec_rejects_shared_parameters():
    with pytest.raises(BindingError):
        CircuitSpec(2, [GateOp(GateKind.RX, (0,), Param(0)), GateOp(GateKind.RY, (1,), Param(0))])


def test_spec_rejects_gapped_parameters():
    with pytest.raises(BindingError):
        CircuitSpec(1, [GateOp(GateKind.RX, (0,), Param(1))])


def test_rotation_without_angle_is_rejected():
    with pytest.raises(BindingError):
        apply_gate(new_zero_state(1), GateOp(GateKind.RZ, (0,), Param(0)))


def test_run_circuit_examples():
    spec = CircuitSpec(1, [GateOp(GateKind.RX, (0,), Feature(0))])
    np.testing.assert_allclose(run_circuit(spec, [0.0], []).amplitudes, [1, 0])
    spec = CircuitSpec(1, [GateOp(GateKind.RX, (0,), Param(0))])
    np.testing.assert_allclose(run_circuit(spec, [], [math.pi]).amplitudes, [0, -1j], atol=1e-15)


def test_run_circuit_length_checks():
    spec = CircuitSpec(1, [GateOp(GateKind.RX, (0,), Param(0))])
    with pytest.raises(DimensionError):
        run_circuit(spec, [], [0.1, 0.2])
    spec = CircuitSpec(1, [GateOp(GateKind.RX, (0,), Feature(0))])
    with pytest.raises(DimensionError):
        run_circuit(spec, [0.1, 0.2], [])


def test_zero_features_make_feature_map_identity():
    rng = np.random.default_rng(3)
    spec = assemble_qnn(QnnArchitecture(2, 2, 1))
    theta = rng.uniform(-math.pi, math.pi, spec.n_params)
    ansatz, _ = build_circuit11(4)
    bare = CircuitSpec(4, ansatz)
    np.testing.assert_allclose(run_circuit(spec, [0.0, 0.0], theta).amplitudes,
                               run_circuit(bare, [], theta).amplitudes, atol=1e-14)


@pytest.mark.parametrize("qubits,expected", [([0], 1.0), ([0, 1, 2], 1.0)])
def test_expectation_on_zero_state(qubits, expected):
    assert expectation_z_string(new_zero_state(3), qubits) == expected


def test_expectation_examples():
    assert expectation_z_string(Statevector(1, [0, 1]), [0]) == -1.0
    s = apply_gate(new_zero_state(1), GateOp(GateKind.H, (0,)))
    assert abs(expectation_z_string(s, [0])) < 1e-15


def random_gate(rng, n):
    kinds = [GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.H]
    if n > 1:
        kinds += [GateKind.CNOT, GateKind.CZ]
    kind = kinds[rng.integers(len(kinds))]
    if kind.n_qubits == 2:
        a, b = rng.choice(n, 2, replace=False)
        return GateOp(kind, (a, b)), None
    q = int(rng.integers(n))
    if kind.is_rotation:
        ang = float(rng.uniform(-2 * math.pi, 2 * math.pi))
        return GateOp(kind, (q,), Fixed(ang)), ang
    return GateOp(kind, (q,)), None


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_gates_match_kronecker_oracle(n):
    rng = np.random.default_rng(n)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps /= np.linalg.norm(amps)
    for _ in range(40):
        gate, ang = random_gate(rng, n)
        expected = oracle_apply(amps, n, gate, ang or 0.0)
        s = apply_gate(Statevector(n, amps.copy()), gate, ang)
        np.testing.assert_allclose(s.amplitudes, expected, atol=1e-13)
        amps = expected


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_norm_preserved(n, seed):
    rng = np.random.default_rng(seed)
    s = new_zero_state(n)
    for _ in range(50):
        gate, ang = random_gate(rng, n)
        apply_gate(s, gate, ang)
    assert abs(s.norm_squared() - 1.0) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_gate_then_inverse_restores_state(seed):
    rng = np.random.default_rng(seed)
    n = 3
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    amps /= np.linalg.norm(amps)
    gate, ang = random_gate(rng, n)
    s = apply_gate(Statevector(n, amps.copy()), gate, ang)
    inverse = GateOp(gate.kind, gate.qubits, Fixed(-ang)) if ang is not None else gate
    apply_gate(s, inverse, -ang if ang is not None else None)
    np.testing.assert_allclose(s.amplitudes, amps, atol=1e-12)


def test_batched_angles_match_rowwise():
    rng = np.random.default_rng(0)
    spec = assemble_qnn(QnnArchitecture(2, 1, 3))
    feats = rng.uniform(0, 1, (6, 2))
    theta = rng.uniform(-3, 3, spec.n_params)
    batch = run_circuit_batch(spec, feats, theta)
    for row, f in zip(batch, feats):
        np.testing.assert_allclose(row, run_circuit(spec, f, theta).amplitudes, atol=1e-14)


@pytest.mark.parametrize("schedule", ["alternating", "circuit11", "circuit9"])
def test_compiled_circuit_matches_gate_by_gate(schedule):
    rng = np.random.default_rng(1)
    spec = assemble_qnn(QnnArchitecture(2, 2, 4, schedule))
    feats = rng.uniform(0, 1, (80, 2))
    theta = rng.uniform(-3, 3, spec.n_params)
    direct = zero_states(4, 80)
    from qsurrogate.sim import apply_gate_batch, resolve_angle
    for g in spec.gates:
        apply_gate_batch(direct, 4, g, resolve_angle(g.binding, feats, theta) if g.binding else None)
    np.testing.assert_allclose(CompiledCircuit(spec, feats).states(theta), direct, atol=1e-12)


def test_parameter_shift_single_rotation():
    spec = CircuitSpec(1, [GateOp(GateKind.RY, (0,), Param(0))])
    np.testing.assert_allclose(parameter_shift_gradient(spec, [0], [], [0.0]), [0.0], atol=1e-15)
    np.testing.assert_allclose(parameter_shift_gradient(spec, [0], [], [math.pi / 2]), [-1.0], atol=1e-15)


def finite_difference(spec, qubits, x, theta, h=1e-5):
    grad = np.empty(theta.size)
    for k in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        grad[k] = (expectation_z_string(run_circuit(spec, x, tp), qubits)
                   - expectation_z_string(run_circuit(spec, x, tm), qubits)) / (2 * h)
    return grad


@pytest.mark.parametrize("d,r,layers,schedule", [
    (2, 2, 1, "alternating"), (1, 3, 2, "alternating"), (2, 1, 3, "circuit9"), (3, 1, 2, "circuit11"),
])
def test_parameter_shift_matches_finite_differences(d, r, layers, schedule):
    rng = np.random.default_rng(d * 10 + layers)
    spec = assemble_qnn(QnnArchitecture(d, r, layers, schedule))
    x = rng.uniform(0, 1, d)
    theta = rng.uniform(-math.pi, math.pi, spec.n_params)
    qubits = range(spec.n_qubits)
    ps = parameter_shift_gradient(spec, qubits, x, theta)
    assert np.max(np.abs(ps - finite_difference(spec, qubits, x, theta))) <= 1e-6
