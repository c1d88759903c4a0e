"""Analytic error budgeting: gate counts, survival rates and required error rates.

A circuit "survives" when no gate or readout fails; with independent
failures that probability is the product of per-operation success rates.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .circuit import AnsatzSchedule, layer_gate_counts
from .errors import ConfigError, InfeasibleError


@dataclass(frozen=True)
class HardwareProfile:
    e_single: float
    e_two: float
    e_readout: float | None
    label: str = ""

    def __post_init__(self):
        for name in ("e_single", "e_two", "e_readout"):
            v = getattr(self, name)
            if v is None and name == "e_readout":
                continue
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")

    def with_readout(self, e_readout: float) -> "HardwareProfile":
        return replace(self, e_readout=e_readout)


@dataclass(frozen=True)
class GateBudget:
    singles_per_layer: float
    twos_per_layer: float
    readouts: int


def load_profiles(path=None) -> dict[str, HardwareProfile]:
    parser = configparser.ConfigParser()
    if path is None:
        parser.read_string(resources.files("qsurrogate").joinpath("profiles.ini").read_text("utf-8"))
    else:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    profiles = {}
    for name in parser.sections():
        sec = parser[name]
        try:
            readout = sec.get("e_readout", "").strip()
            profiles[name] = HardwareProfile(float(sec["e_single"]), float(sec["e_two"]),
                                             float(readout) if readout else None, name)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"profile [{name}]: {exc}") from None
    return profiles


def get_profile(name: str, e_readout: float | None = None, path=None) -> HardwareProfile:
    profiles = load_profiles(path)
    if name not in profiles:
        raise ConfigError(f"unknown hardware profile {name!r}; known: {sorted(profiles)}")
    prof = profiles[name]
    return prof.with_readout(e_readout) if e_readout is not None else prof


def gate_budget(n_qubits: int, schedule: AnsatzSchedule | str = AnsatzSchedule.ALTERNATING) -> GateBudget:
    """Per-layer gate counts (feature map included) averaged over the ansatz schedule."""
    if n_qubits < 2:
        raise ValueError(f"gate budget needs at least 2 qubits, got {n_qubits}")
    schedule = AnsatzSchedule(schedule)
    if schedule is AnsatzSchedule.ALTERNATING:
        kinds = [AnsatzSchedule.CIRCUIT11_ONLY, AnsatzSchedule.CIRCUIT9_ONLY]
    else:
        kinds = [schedule]
    counts = [layer_gate_counts(n_qubits, k) for k in kinds]
    singles = sum(c[0] for c in counts) / len(counts)
    twos = sum(c[1] for c in counts) / len(counts)
    return GateBudget(singles, twos, n_qubits)


def survival_rate(profile: HardwareProfile, n_qubits: int, n_layers: int,
                  schedule: AnsatzSchedule | str = AnsatzSchedule.ALTERNATING) -> float:
    if n_layers < 1:
        raise ValueError(f"n_layers must be >= 1, got {n_layers}")
    if profile.e_readout is None:
        raise ConfigError(f"profile {profile.label or '?'} has no readout error; supply one")
    b = gate_budget(n_qubits, schedule)
    return float((1.0 - profile.e_single) ** (b.singles_per_layer * n_layers)
                 * (1.0 - profile.e_two) ** (b.twos_per_layer * n_layers)
                 * (1.0 - profile.e_readout) ** b.readouts)


def survival_table(profile: HardwareProfile, qubits, layers) -> np.ndarray:
    qubits, layers = list(qubits), list(layers)
    if not qubits or not layers:
        raise ValueError("survival table needs non-empty qubit and layer lists")
    return np.array([[survival_rate(profile, n, L) for L in layers] for n in qubits])


def required_two_qubit_error(target_survival: float, n_qubits: int, n_layers: int,
                             e_single_fixed: float, readout_ratio: float,
                             tol: float = 1e-10) -> float:
    """Two-qubit error giving ``target_survival`` when readout error = ratio * two-qubit error."""
    if not 0.0 < target_survival < 1.0:
        raise ValueError(f"target survival must lie in (0, 1), got {target_survival}")
    if readout_ratio < 0:
        raise ValueError(f"readout ratio must be >= 0, got {readout_ratio}")
    hi_bound = min(1.0, 0.5 / readout_ratio) if readout_ratio > 0 else 1.0

    def excess(e_two):
        e_two = min(e_two, np.nextafter(1.0, 0.0))
        prof = HardwareProfile(e_single_fixed, e_two, min(readout_ratio * e_two, np.nextafter(1.0, 0.0)))
        return survival_rate(prof, n_qubits, n_layers) - target_survival

    lo, hi = 0.0, hi_bound
    if excess(lo) < 0:
        raise InfeasibleError(
            f"survival {target_survival} unreachable even with error-free two-qubit gates "
            f"(single-qubit error {e_single_fixed})")
    if excess(hi) > 0:
        raise InfeasibleError(f"no two-qubit error below {hi_bound} lowers survival to {target_survival}")
    # survival decreases monotonically in e_two
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
