"""Exact gate merging: control stripping on unreachable branches, equal-angle
neighbor merges, and the per-layer singles-vs-UCR decision."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .circuit_ir import (
    Circuit,
    ControlPattern,
    CostReport,
    GateLayer,
    cost_report,
)
from .state_model import BaselineCircuit, PreparationTree

ANGLE_TOL = 1e-9
STRIP = "strip"
NEIGHBOR = "neighbor"


def trit_key(k: int, mask: int, value: int) -> str:
    return str(ControlPattern(k, mask, value))


_SPREAD = [sum(((b >> i) & 1) << (2 * i) for i in range(8)) for b in range(256)]


def _spread(x: int) -> int:
    out, shift = 0, 0
    while x:
        out |= _SPREAD[x & 0xFF] << shift
        x >>= 8
        shift += 16
    return out


def order_key(k: int, mask: int, value: int) -> int:
    """Integer whose order equals the trit-string order ('0' < '1' < 'e')."""
    free = ((1 << k) - 1) & ~mask
    return _spread(value) | (_spread(free) << 1)


class SupportIndex:
    """Membership queries of pattern regions against a support set S_k."""

    def __init__(self, k: int, support: Iterable[int]):
        self.k = k
        self.full = (1 << k) - 1
        self.array = np.array(sorted(int(s) for s in support), dtype=np.int64)
        self.members = set(self.array.tolist())
        self._memo: dict[tuple[int, int], bool] = {}

    def __len__(self) -> int:
        return len(self.array)

    def intersects(self, mask: int, value: int) -> bool:
        """True iff S_k meets the region of pattern (mask, value)."""
        key = (mask, value)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._intersects(mask, value)
            self._memo[key] = hit
        return hit

    def _intersects(self, mask: int, value: int) -> bool:
        free = self.full & ~mask
        if (1 << bin(free).count("1")) <= min(64, len(self.array)):
            sub = 0
            while True:
                if (value | sub) in self.members:
                    return True
                sub = (sub - free) & free
                if sub == 0:
                    return False
        return bool(np.any((self.array & mask) == value))

    def inside(self, mask: int, value: int) -> np.ndarray:
        """Supported prefixes inside the region, ascending."""
        return self.array[(self.array & mask) == value]


@dataclass(frozen=True)
class MergeEvent:
    """One accepted move; patterns are kept as (mask, value) pairs."""

    k: int
    kind: str
    sources: tuple[tuple[int, int], ...]
    result: tuple[int, int]

    @property
    def before(self) -> tuple[str, ...]:
        return tuple(trit_key(self.k, *p) for p in self.sources)

    @property
    def after(self) -> str:
        return trit_key(self.k, *self.result)

    def to_dict(self) -> dict:
        return {"k": self.k, "kind": self.kind, "before": list(self.before), "after": self.after}


@dataclass
class ExactResult:
    optimized: Circuit
    cost: CostReport
    merge_log: list[MergeEvent] = field(default_factory=list)


def strip_controls_sequential(
    pattern: ControlPattern,
    support: SupportIndex | Iterable[int],
    occupied: Iterable[ControlPattern] = (),
) -> ControlPattern:
    """Strip controls left to right while the flipped sibling is unreachable.

    A control is removed iff the sibling region obtained by flipping it holds
    no supported prefix and overlaps none of the ``occupied`` regions (the
    other gates of the layer).  The angle is untouched.
    """
    if not isinstance(support, SupportIndex):
        support = SupportIndex(pattern.k, support)
    others = [p for p in occupied if p != pattern]
    masks = np.array([p.mask for p in others], dtype=np.int64)
    values = np.array([p.value for p in others], dtype=np.int64)
    mask, value = _strip_fast(pattern.k, pattern.mask, pattern.value, support, masks, values)
    return ControlPattern(pattern.k, mask, value)


def _strip_fast(
    k: int,
    mask: int,
    value: int,
    support: SupportIndex,
    masks: np.ndarray,
    values: np.ndarray,
    log: list[MergeEvent] | None = None,
) -> tuple[int, int]:
    # A blocked position stays blocked once later positions are stripped (the
    # sibling region only grows), so one left-to-right sweep reaches the same
    # fixpoint as restarting the scan after every accepted strip.
    for t in range(k):
        bit = 1 << (k - 1 - t)
        if not mask & bit:
            continue
        sib_value = value ^ bit
        if support.intersects(mask, sib_value):
            continue
        if len(masks) and np.any(((values ^ sib_value) & masks & mask) == 0):
            continue
        new_mask, new_value = mask & ~bit, value & ~bit
        if log is not None:
            log.append(MergeEvent(k, STRIP, ((mask, value),), (new_mask, new_value)))
        mask, value = new_mask, new_value
    return mask, value


def merge_neighbors(
    layer: GateLayer, tol: float = ANGLE_TOL, log: list[MergeEvent] | None = None
) -> GateLayer:
    """Fuse equal-angle gates whose patterns differ in one concrete trit, to fixpoint."""
    gates = {(p.mask, p.value): theta for p, theta in layer.gates.items()}
    gates = _merge_fast(layer.k, gates, tol, log)
    return GateLayer(layer.k, {ControlPattern(layer.k, m, v): t for (m, v), t in gates.items()})


def _merge_fast(
    k: int, gates: dict[tuple[int, int], float], tol: float, log: list[MergeEvent] | None
) -> dict[tuple[int, int], float]:
    changed = True
    while changed:
        changed = False
        for key in sorted(gates, key=lambda kv: order_key(k, *kv)):
            if key not in gates:
                continue
            mask, value = key
            theta = gates[key]
            for t in range(k):
                bit = 1 << (k - 1 - t)
                if not mask & bit:
                    continue
                partner = (mask, value ^ bit)
                other = gates.get(partner)
                if other is None or abs(other - theta) > tol:
                    continue
                del gates[key], gates[partner]
                merged = (mask & ~bit, value & ~bit)
                gates[merged] = theta
                if log is not None:
                    pair = tuple(sorted([key, partner], key=lambda kv: order_key(k, *kv)))
                    log.append(MergeEvent(k, NEIGHBOR, pair, merged))
                changed = True
                break
    return gates


def optimize_layer(
    layer: GateLayer,
    support: SupportIndex,
    log: list[MergeEvent] | None = None,
    disjoint: bool = True,
) -> GateLayer:
    """Strip then merge one layer; the cost decision is applied by the caller.

    With ``disjoint=False`` a control is stripped on the support test alone,
    so two gates may end up sharing an unreachable region.
    """
    k = layer.k
    keys = sorted(((p.mask, p.value) for p in layer.gates), key=lambda kv: order_key(k, *kv))
    angles = {(p.mask, p.value): t for p, t in layer.gates.items()}
    # Only gates with an 'e' need the overlap guard: a concrete gate covers a
    # single supported prefix, which a strippable sibling region cannot hold.
    full = (1 << k) - 1
    grown_masks = np.zeros(2 * len(keys), dtype=np.int64)
    grown_values = np.zeros(2 * len(keys), dtype=np.int64)
    n_grown = 0
    for mask, value in keys:
        if mask != full:
            grown_masks[n_grown], grown_values[n_grown] = mask, value
            n_grown += 1
    stripped: dict[tuple[int, int], float] = {}
    for mask, value in keys:
        new = _strip_fast(
            k, mask, value, support, grown_masks[:n_grown] if disjoint else grown_masks[:0],
            grown_values[:n_grown], log,
        )
        if new[0] != mask or new[1] != value:
            grown_masks[n_grown], grown_values[n_grown] = new
            n_grown += 1
        stripped[new] = angles[(mask, value)]
    merged = _merge_fast(k, stripped, ANGLE_TOL, log)
    return GateLayer(k, {ControlPattern(k, m, v): t for (m, v), t in merged.items()})


def optimize_exact(
    baseline: BaselineCircuit | Circuit, tree: PreparationTree, disjoint: bool = True
) -> ExactResult:
    """Strip, merge and cost every layer without changing the prepared state.

    ``disjoint=False`` drops the guard that keeps gate regions disjoint on
    unreachable branches; the result then cannot be serialized or fed to
    the approximate optimizer, but its CNOT counts follow the bare
    unreachable-sibling rule.
    """
    circuit = baseline.to_circuit() if isinstance(baseline, BaselineCircuit) else baseline
    log: list[MergeEvent] = []
    layers = []
    for layer in circuit.layers:
        support = SupportIndex(layer.k, tree.support(layer.k).tolist())
        layers.append(optimize_layer(layer, support, log, disjoint))
    optimized = Circuit(circuit.n, layers)
    return ExactResult(optimized, cost_report(optimized), log)
