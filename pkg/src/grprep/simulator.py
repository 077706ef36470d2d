"""Reference simulator: applies a layered rotation circuit to |0...0> by prefix expansion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit_ir import Circuit, ControlPattern, GateLayer
from .errors import RegionOverlapError, ValidationError
from .state_model import SparseState

DROP = 1e-15


@dataclass(frozen=True)
class PrefixState:
    """Running coarse state after ``k`` layers: sorted prefixes and amplitudes."""

    k: int
    prefixes: np.ndarray
    amplitudes: np.ndarray

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.prefixes.tolist(), self.amplitudes.tolist()))

    def probability(self, pattern: ControlPattern) -> float:
        hit = (self.prefixes & pattern.mask) == pattern.value
        a = self.amplitudes[hit]
        return float(np.dot(a, a))


def covering_angle(layer: GateLayer, prefix: int | str) -> float:
    """Angle of the unique gate whose region holds ``prefix``; 0 if none."""
    found = [theta for p, theta in layer.gates.items() if p.matches(prefix)]
    if len(found) > 1:
        raise RegionOverlapError(f"prefix {prefix} covered by {len(found)} gates in layer {layer.k}")
    return found[0] if found else 0.0


def _apply_layer(layer: GateLayer, prefixes: np.ndarray, amps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    theta = layer.covering_angles(prefixes) if len(layer) else np.zeros(len(prefixes))
    half = theta / 2.0
    kids = np.concatenate([prefixes << 1, (prefixes << 1) | 1])
    kamps = np.concatenate([amps * np.cos(half), amps * np.sin(half)])
    keep = kamps > DROP
    kids, kamps = kids[keep], kamps[keep]
    order = np.argsort(kids, kind="stable")
    return kids[order], kamps[order]


def simulate_prefix(circuit: Circuit, depth: int) -> PrefixState:
    """State on the first ``depth`` qubits after layers ``0..depth-1``."""
    if not 0 <= depth <= circuit.n:
        raise ValidationError(f"depth {depth} outside [0, {circuit.n}]")
    prefixes = np.zeros(1, dtype=np.int64)
    amps = np.ones(1)
    for layer in circuit.layers[:depth]:
        prefixes, amps = _apply_layer(layer, prefixes, amps)
    return PrefixState(depth, prefixes, amps)


def simulate(circuit: Circuit) -> SparseState:
    final = simulate_prefix(circuit, circuit.n)
    return SparseState(circuit.n, final.as_dict())


def overlap(a: SparseState, b: SparseState) -> float:
    if a.n != b.n:
        raise ValidationError(f"dimension mismatch: {a.n} vs {b.n} qubits")
    small, big = (a, b) if a.d <= b.d else (b, a)
    return math.fsum(amp * big.entries.get(i, 0.0) for i, amp in small.entries.items())
