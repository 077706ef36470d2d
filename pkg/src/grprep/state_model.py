"""Sparse target states, the coarse-grained preparation tree and baseline angles.

Basis indices are read most-significant-bit first: for ``n = 3`` the index
``1`` is the bit string ``001`` and qubit 1 is the leftmost bit.  A depth-``k``
prefix is stored as the integer formed by its ``k`` bits, so the children of
prefix ``p`` are ``2p`` and ``2p + 1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .circuit_ir import Circuit, ControlPattern, GateLayer, ZERO_ANGLE
from .errors import (
    DuplicateIndexError,
    EmptySupportError,
    IndexOutOfRangeError,
    NegativeAmplitudeError,
    ParseError,
    ValidationError,
)

NORM_TOL = 1e-12


def format_bits(value: int, k: int) -> str:
    return format(value, f"0{k}b") if k else ""


@dataclass(frozen=True)
class SparseState:
    """Normalized real state with strictly positive stored amplitudes."""

    n: int
    entries: Mapping[int, float]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"qubit count must be positive, got {self.n}")
        if not self.entries:
            raise EmptySupportError("state has no nonzero amplitude")
        size = 1 << self.n
        for idx, amp in self.entries.items():
            if not 0 <= idx < size:
                raise IndexOutOfRangeError(f"index {idx} outside [0, 2^{self.n})")
            if not amp > 0:
                raise NegativeAmplitudeError(f"stored amplitude {amp!r} at {idx} is not positive")
        norm = math.fsum(a * a for a in self.entries.values())
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"state is not normalized (norm^2 = {norm!r})")
        object.__setattr__(self, "entries", dict(sorted(self.entries.items())))

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def dimension(self) -> int:
        return 1 << self.n

    @property
    def density(self) -> float:
        """Fraction of nonzero amplitudes, d / 2^n."""
        return self.d / self.dimension

    def indices(self) -> np.ndarray:
        return np.fromiter(self.entries.keys(), dtype=np.int64, count=self.d)

    def amplitudes(self) -> np.ndarray:
        return np.fromiter(self.entries.values(), dtype=float, count=self.d)

    def amplitude(self, index: int) -> float:
        return self.entries.get(index, 0.0)

    def to_dense(self) -> np.ndarray:
        vec = np.zeros(self.dimension)
        vec[self.indices()] = self.amplitudes()
        return vec

    def bitstrings(self) -> dict[str, float]:
        return {format_bits(i, self.n): a for i, a in self.entries.items()}


def normalize_and_validate(raw: Iterable[tuple[int, float]], n: int) -> SparseState:
    """Build a SparseState from (index, amplitude) pairs.

    Zero amplitudes are dropped and the rest divided by their 2-norm.
    """
    if n < 1:
        raise ValidationError(f"qubit count must be positive, got {n}")
    size = 1 << n
    seen: dict[int, float] = {}
    for idx, amp in raw:
        idx = int(idx)
        amp = float(amp)
        if idx in seen:
            raise DuplicateIndexError(f"index {idx} given twice")
        if not 0 <= idx < size:
            raise IndexOutOfRangeError(f"index {idx} outside [0, 2^{n})")
        if not math.isfinite(amp):
            raise ValidationError(f"amplitude at {idx} is not finite")
        if amp < 0:
            raise NegativeAmplitudeError(f"amplitude {amp} at {idx} is negative")
        seen[idx] = amp
    kept = {i: a for i, a in seen.items() if a > 0}
    if not kept:
        raise EmptySupportError("no positive amplitude given")
    norm = math.sqrt(math.fsum(a * a for a in kept.values()))
    return SparseState(n, {i: a / norm for i, a in kept.items()})


@dataclass(frozen=True)
class PreparationTree:
    """Coarse-grained amplitudes for every depth ``k = 0..n``.

    ``levels[k]`` maps supported ``k``-bit prefixes to their amplitude; its
    keys form the support set ``S_k``.
    """

    n: int
    levels: tuple[dict[int, float], ...]
    _support: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)
    _amps: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        sup, amps = [], []
        for level in self.levels:
            keys = np.fromiter(level.keys(), dtype=np.int64, count=len(level))
            vals = np.fromiter(level.values(), dtype=float, count=len(level))
            order = np.argsort(keys)
            sup.append(keys[order])
            amps.append(vals[order])
        object.__setattr__(self, "_support", tuple(sup))
        object.__setattr__(self, "_amps", tuple(amps))

    def support(self, k: int) -> np.ndarray:
        """Sorted array of the prefixes in S_k."""
        return self._support[k]

    def level_amplitudes(self, k: int) -> np.ndarray:
        """Amplitudes aligned with :meth:`support`."""
        return self._amps[k]

    def amplitude(self, k: int, prefix: int) -> float:
        return self.levels[k].get(prefix, 0.0)

    def probability(self, k: int, prefix: int) -> float:
        a = self.levels[k].get(prefix, 0.0)
        return a * a

    def is_supported(self, k: int, prefix: int) -> bool:
        return prefix in self.levels[k]


def build_preparation_tree(state: SparseState) -> PreparationTree:
    n = state.n
    levels: list[dict[int, float]] = [dict() for _ in range(n + 1)]
    levels[n] = dict(state.entries)
    for k in range(n, 0, -1):
        sq: dict[int, float] = {}
        for prefix, amp in levels[k].items():
            parent = prefix >> 1
            sq[parent] = sq.get(parent, 0.0) + amp * amp
        levels[k - 1] = {p: math.sqrt(v) for p, v in sq.items()}
    return PreparationTree(n, tuple(levels))


@dataclass(frozen=True)
class BaselineCircuit:
    """Uncompressed Grover-Rudolph angles.

    ``layers[k]`` maps every prefix of S_k to its rotation angle, including
    zero angles, which are kept for the approximate optimizer's bookkeeping
    but never become gates.
    """

    n: int
    layers: tuple[dict[int, float], ...]

    def angle(self, k: int, prefix: int) -> float:
        return self.layers[k].get(prefix, 0.0)

    def is_active(self, k: int, prefix: int) -> bool:
        return abs(self.layers[k].get(prefix, 0.0)) > ZERO_ANGLE

    def active_gates(self, k: int) -> dict[int, float]:
        return {p: t for p, t in self.layers[k].items() if abs(t) > ZERO_ANGLE}

    def to_circuit(self) -> Circuit:
        layers = []
        for k, layer in enumerate(self.layers):
            gates = {ControlPattern.concrete(k, p): t for p, t in sorted(layer.items())}
            layers.append(GateLayer(k, gates))
        return Circuit(self.n, layers)


def compute_baseline_angles(tree: PreparationTree) -> BaselineCircuit:
    layers = []
    for k in range(tree.n):
        children = tree.levels[k + 1]
        layer = {}
        for prefix, amp in tree.levels[k].items():
            ratio = children.get(prefix << 1, 0.0) / amp
            theta = 2.0 * math.acos(min(1.0, max(0.0, ratio)))
            layer[prefix] = min(math.pi, max(0.0, theta))
        layers.append(dict(sorted(layer.items())))
    return BaselineCircuit(tree.n, tuple(layers))


def prefix_probability(tree: PreparationTree, pattern: ControlPattern) -> float:
    """Probability mass of the depth-k region B(pattern)."""
    k = pattern.k
    if k > tree.n:
        raise ValidationError(f"pattern length {k} exceeds n = {tree.n}")
    sup = tree.support(k)
    hit = (sup & pattern.mask) == pattern.value
    amps = tree.level_amplitudes(k)[hit]
    return float(np.dot(amps, amps))


def path_probability(baseline: BaselineCircuit, prefix: int, k: int) -> float:
    """Probability of a concrete depth-k prefix as the product of branch factors."""
    prob = 1.0
    for level in range(k):
        bit = (prefix >> (k - 1 - level)) & 1
        theta = baseline.angle(level, prefix >> (k - level))
        half = theta / 2.0
        prob *= math.sin(half) ** 2 if bit else math.cos(half) ** 2
    return prob


# ---------------------------------------------------------------- file formats

def parse_state_text(text: str) -> SparseState:
    """Parse ``n=<int>`` followed by ``<bitstring> <amplitude>`` lines."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].replace(" ", "").startswith("n="):
        raise ParseError("state text must start with a 'n=<int>' header")
    try:
        n = int(lines[0].replace(" ", "")[2:])
    except ValueError as exc:
        raise ParseError(f"bad header {lines[0]!r}") from exc
    raw = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<bits> <amplitude>', got {ln!r}")
        bits, amp = parts
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise ParseError(f"{bits!r} is not a {n}-bit string")
        try:
            raw.append((int(bits, 2), float(amp)))
        except ValueError as exc:
            raise ParseError(f"bad amplitude in {ln!r}") from exc
    return normalize_and_validate(raw, n)


def parse_state_json(text: str) -> SparseState:
    try:
        obj = json.loads(text)
        n = int(obj["n"])
        raw = [(int(i), float(a)) for i, a in obj["entries"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed state JSON: {exc}") from exc
    return normalize_and_validate(raw, n)


def parse_state(text: str) -> SparseState:
    if text.lstrip().startswith("{"):
        return parse_state_json(text)
    return parse_state_text(text)


def dump_state_text(state: SparseState) -> str:
    lines = [f"n={state.n}"]
    lines += [f"{format_bits(i, state.n)} {a!r}" for i, a in state.entries.items()]
    return "\n".join(lines) + "\n"


def dump_state_json(state: SparseState) -> str:
    return json.dumps({"n": state.n, "entries": [[i, a] for i, a in state.entries.items()]})
