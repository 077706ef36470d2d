"""Control patterns over {0, 1, e}, layered circuits and the CNOT cost model.

A pattern of length ``k`` is a ``(mask, value)`` pair of ``k``-bit integers,
most significant bit first: trit position ``t`` (0-based, from the left)
lives at bit ``k - 1 - t``.  A set mask bit means the qubit is a control;
``value`` holds the required control values and is zero wherever the mask
is zero.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .errors import ParseError, PatternError, RegionOverlapError, ValidationError

# An angle at or below this magnitude is a virtual (never applied) gate.
ZERO_ANGLE = 1e-12


@dataclass(frozen=True, slots=True)
class ControlPattern:
    k: int
    mask: int
    value: int

    def __post_init__(self) -> None:
        full = (1 << self.k) - 1
        if self.k < 0 or self.mask & ~full or self.value & ~self.mask:
            raise PatternError(f"non-canonical pattern (k={self.k}, mask={self.mask}, value={self.value})")

    @classmethod
    def concrete(cls, k: int, bits: int) -> "ControlPattern":
        return cls(k, (1 << k) - 1, bits)

    @classmethod
    def from_string(cls, trits: str) -> "ControlPattern":
        mask = value = 0
        for ch in trits:
            mask <<= 1
            value <<= 1
            if ch == "1":
                mask |= 1
                value |= 1
            elif ch == "0":
                mask |= 1
            elif ch != "e":
                raise PatternError(f"invalid trit {ch!r} in {trits!r}")
        return cls(len(trits), mask, value)

    def __str__(self) -> str:
        out = []
        for t in range(self.k):
            bit = 1 << (self.k - 1 - t)
            out.append(("1" if self.value & bit else "0") if self.mask & bit else "e")
        return "".join(out)

    def __repr__(self) -> str:
        return f"ControlPattern({str(self)!r})"

    @property
    def n_controls(self) -> int:
        return bin(self.mask).count("1")

    @property
    def region_size(self) -> int:
        return 1 << (self.k - self.n_controls)

    def _bit(self, t: int) -> int:
        if not 0 <= t < self.k:
            raise PatternError(f"position {t} outside pattern of length {self.k}")
        return 1 << (self.k - 1 - t)

    def matches(self, bits: int | str) -> bool:
        """True iff the concrete bit string lies in the region B(pattern)."""
        if isinstance(bits, str):
            if len(bits) != self.k:
                raise PatternError(f"length mismatch: {bits!r} vs pattern of length {self.k}")
            bits = int(bits, 2) if bits else 0
        return (bits & self.mask) == self.value

    def strip(self, t: int) -> "ControlPattern":
        bit = self._bit(t)
        if not self.mask & bit:
            raise PatternError(f"position {t} of {self} is already 'e'")
        return ControlPattern(self.k, self.mask & ~bit, self.value & ~bit)

    def flip(self, t: int) -> "ControlPattern":
        bit = self._bit(t)
        if not self.mask & bit:
            raise PatternError(f"position {t} of {self} is already 'e'")
        return ControlPattern(self.k, self.mask, self.value ^ bit)

    def control_positions(self) -> list[int]:
        return [t for t in range(self.k) if self.mask & (1 << (self.k - 1 - t))]

    def intersects(self, other: "ControlPattern") -> bool:
        return ((self.value ^ other.value) & self.mask & other.mask) == 0

    def region(self) -> Iterator[int]:
        """Enumerate B(pattern) in increasing order."""
        free = ((1 << self.k) - 1) & ~self.mask
        sub = 0
        while True:
            yield self.value | sub
            sub = (sub - free) & free
            if sub == 0:
                return


class GateLayer:
    """Rotations targeting qubit ``k + 1``, keyed by their control pattern.

    Zero-angle entries are dropped on construction.  Region disjointness is
    checked by :meth:`validate` rather than on every construction.
    """

    def __init__(self, k: int, gates: Mapping[ControlPattern, float] | None = None):
        self.k = k
        self.gates: dict[ControlPattern, float] = {}
        for pattern, theta in (gates or {}).items():
            if pattern.k != k:
                raise PatternError(f"pattern {pattern} has length {pattern.k}, layer depth is {k}")
            theta = float(theta)
            if not math.isfinite(theta) or theta < -ZERO_ANGLE or theta > math.pi + 1e-9:
                raise ValidationError(f"angle {theta} for {pattern} outside [0, pi]")
            if theta > ZERO_ANGLE:
                self.gates[pattern] = min(theta, math.pi)

    def __len__(self) -> int:
        return len(self.gates)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GateLayer) and self.k == other.k and self.gates == other.gates

    def items(self) -> list[tuple[ControlPattern, float]]:
        return sorted(self.gates.items(), key=lambda kv: str(kv[0]))

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(masks, values, angles) as aligned arrays."""
        g = len(self.gates)
        masks = np.fromiter((p.mask for p in self.gates), dtype=np.int64, count=g)
        values = np.fromiter((p.value for p in self.gates), dtype=np.int64, count=g)
        angles = np.fromiter(self.gates.values(), dtype=float, count=g)
        return masks, values, angles

    def overlapping_pair(self) -> tuple[ControlPattern, ControlPattern] | None:
        patterns = list(self.gates)
        masks, values, _ = self.arrays()
        for i in range(len(patterns) - 1):
            clash = ((values[i + 1:] ^ values[i]) & masks[i + 1:] & masks[i]) == 0
            if clash.any():
                j = i + 1 + int(np.argmax(clash))
                return patterns[i], patterns[j]
        return None

    def validate(self) -> None:
        pair = self.overlapping_pair()
        if pair is not None:
            raise RegionOverlapError(f"layer {self.k}: regions of {pair[0]} and {pair[1]} overlap")

    def covering_angles(self, prefixes: np.ndarray) -> np.ndarray:
        """Angle of the gate covering each prefix (0 where uncovered).

        Raises RegionOverlapError if some prefix is covered twice.
        """
        prefixes = np.asarray(prefixes, dtype=np.int64)
        out = np.zeros(len(prefixes))
        hits = np.zeros(len(prefixes), dtype=np.int64)
        by_mask: dict[int, tuple[list[int], list[float]]] = {}
        for p, theta in self.gates.items():
            vals, thetas = by_mask.setdefault(p.mask, ([], []))
            vals.append(p.value)
            thetas.append(theta)
        for mask, (vals, thetas) in by_mask.items():
            order = np.argsort(vals)
            keys = np.asarray(vals, dtype=np.int64)[order]
            angs = np.asarray(thetas)[order]
            proj = prefixes & mask
            pos = np.minimum(np.searchsorted(keys, proj), len(keys) - 1)
            found = keys[pos] == proj
            out[found] = angs[pos[found]]
            hits += found
        if (hits > 1).any():
            bad = int(prefixes[np.argmax(hits > 1)])
            raise RegionOverlapError(f"layer {self.k}: prefix {bad} covered by two gates")
        return out


@dataclass
class Circuit:
    """Grover-Rudolph circuit: ``layers[k]`` rotates qubit ``k + 1``."""

    n: int
    layers: list[GateLayer]

    def __post_init__(self) -> None:
        if len(self.layers) != self.n:
            raise ValidationError(f"expected {self.n} layers, got {len(self.layers)}")
        for k, layer in enumerate(self.layers):
            if layer.k != k:
                raise ValidationError(f"layer {k} reports depth {layer.k}")

    @classmethod
    def empty(cls, n: int) -> "Circuit":
        return cls(n, [GateLayer(k) for k in range(n)])

    @property
    def gate_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def validate(self) -> None:
        for layer in self.layers:
            layer.validate()


class Mode(str, enum.Enum):
    SINGLES = "singles"
    UCR = "ucr"


@dataclass(frozen=True)
class LayerCost:
    k: int
    mode: Mode
    cnots: int


@dataclass(frozen=True)
class CostReport:
    layers: tuple[LayerCost, ...]

    @property
    def total(self) -> int:
        return sum(lc.cnots for lc in self.layers)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "layers": [{"k": lc.k, "mode": lc.mode.value, "cnots": lc.cnots} for lc in self.layers],
        }


def single_rotation_cnots(n_ctrl: int) -> int:
    """CNOTs for one multi-controlled y-rotation with ``n_ctrl`` controls."""
    if n_ctrl < 0:
        raise ValueError("control count must be nonnegative")
    if n_ctrl == 0:
        return 0
    if n_ctrl == 1:
        return 2
    return 16 * n_ctrl - 24


def singles_cost(layer: GateLayer) -> int:
    return sum(single_rotation_cnots(p.n_controls) for p in layer.gates)


def layer_cost_decision(layer: GateLayer) -> tuple[Mode, int]:
    if layer.k == 0:
        return Mode.SINGLES, 0
    singles = singles_cost(layer)
    ucr = 1 << layer.k
    # ties go to the uniformly controlled rotation
    if singles < ucr:
        return Mode.SINGLES, singles
    return Mode.UCR, ucr


def cost_report(circuit: Circuit) -> CostReport:
    out = []
    for layer in circuit.layers:
        mode, cnots = layer_cost_decision(layer)
        out.append(LayerCost(layer.k, mode, cnots))
    return CostReport(tuple(out))


def circuit_singles_cost(circuit: Circuit) -> int:
    return sum(singles_cost(layer) for layer in circuit.layers)


def circuit_ucr_cost(circuit: Circuit) -> int:
    """Every nonempty layer as a full uniformly controlled rotation."""
    return sum(1 << layer.k for layer in circuit.layers if layer.k > 0 and len(layer))


# ------------------------------------------------------------- serialization

def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "n": circuit.n,
        "layers": [
            {"k": layer.k, "gates": [{"pattern": str(p), "theta": t} for p, t in layer.items()]}
            for layer in circuit.layers
        ],
    }


def serialize_circuit(circuit: Circuit) -> str:
    return json.dumps(circuit_to_dict(circuit), indent=1)


def circuit_from_dict(obj: dict) -> Circuit:
    try:
        n = int(obj["n"])
        raw_layers = obj["layers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed circuit JSON: {exc}") from exc
    if n < 1:
        raise ParseError(f"qubit count must be positive, got {n}")
    layers = [GateLayer(k) for k in range(n)]
    seen_k = set()
    for raw in raw_layers:
        try:
            k = int(raw["k"])
            gates = raw["gates"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed layer entry: {exc}") from exc
        if not 0 <= k < n or k in seen_k:
            raise ParseError(f"bad or repeated layer index {k}")
        seen_k.add(k)
        table: dict[ControlPattern, float] = {}
        for g in gates:
            try:
                pattern = ControlPattern.from_string(str(g["pattern"]))
                theta = float(g["theta"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"malformed gate in layer {k}: {exc}") from exc
            if pattern.k != k:
                raise PatternError(f"pattern {pattern} in layer {k} has wrong length")
            if pattern in table:
                raise ParseError(f"duplicate pattern {pattern} in layer {k}")
            table[pattern] = theta
        layers[k] = GateLayer(k, table)
        layers[k].validate()
    return Circuit(n, layers)


def parse_circuit(text: str) -> Circuit:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"circuit is not valid JSON: {exc}") from exc
    return circuit_from_dict(obj)
