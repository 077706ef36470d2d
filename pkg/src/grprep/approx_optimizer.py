"""Fidelity-budgeted greedy merging on top of the exact optimization.

Every active gate owns a cluster: the supported baseline prefixes its region
has absorbed, with their baseline angles and probabilities.  The overlap
estimate is ``1 - sum(L_C)`` over active clusters, and every merge is
scored by how it changes that sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .circuit_ir import Circuit, ControlPattern, CostReport, GateLayer, ZERO_ANGLE, cost_report
from .errors import ValidationError
from .exact_optimizer import NEIGHBOR, STRIP, SupportIndex, optimize_exact, order_key, trit_key
from .state_model import BaselineCircuit, PreparationTree

DEFAULT_INTERVALS = 20


def cluster_angle(x: float, y: float) -> float:
    """Merged angle maximizing ``x cos(t/2) + y sin(t/2)``."""
    if x == 0.0 and y == 0.0:
        raise ValueError("cluster sums are both zero")
    return min(math.pi, max(0.0, 2.0 * math.atan2(y, x)))


def cluster_loss(angles: Iterable[float], probs: Iterable[float], theta: float) -> float:
    # 1 - cos(a/2) written as 2 sin^2(a/4): exact zero for equal angles
    return math.fsum(2.0 * p * math.sin((a - theta) / 4.0) ** 2 for a, p in zip(angles, probs))


@dataclass
class Cluster:
    k: int
    prefixes: list[int]
    angles: list[float]
    probs: list[float]
    # keep a known angle (an existing gate's) instead of re-deriving it
    theta_hint: float | None = field(default=None, repr=False)
    x: float = field(init=False)
    y: float = field(init=False)
    theta: float = field(init=False)
    loss: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.prefixes:
            raise ValidationError("a cluster needs at least one source with positive probability")
        self.x = math.fsum(p * math.cos(a / 2.0) for a, p in zip(self.angles, self.probs))
        self.y = math.fsum(p * math.sin(a / 2.0) for a, p in zip(self.angles, self.probs))
        self.theta = cluster_angle(self.x, self.y) if self.theta_hint is None else self.theta_hint
        self.loss = cluster_loss(self.angles, self.probs, self.theta)

    @property
    def weight(self) -> float:
        return math.fsum(self.probs)

    def loss_at(self, theta: float) -> float:
        return cluster_loss(self.angles, self.probs, theta)


def merge_clusters(a: Cluster, b: Cluster) -> Cluster:
    if a.k != b.k:
        raise ValidationError(f"cannot merge clusters of layers {a.k} and {b.k}")
    return Cluster(a.k, a.prefixes + b.prefixes, a.angles + b.angles, a.probs + b.probs)


def strip_extend(a: Cluster, absorbed: Iterable[tuple[int, float, float]]) -> Cluster:
    """Add the sibling region's (prefix, baseline angle, probability) sources.

    Zero-probability entries are implicit and dropped.
    """
    extra = [(s, t, p) for s, t, p in absorbed if p > 0]
    if not extra:
        return a
    return Cluster(
        a.k,
        a.prefixes + [s for s, _, _ in extra],
        a.angles + [t for _, t, _ in extra],
        a.probs + [p for _, _, p in extra],
    )


def estimator_update(f_est: float, loss_a: float, loss_b: float | None, loss_c: float) -> float:
    """New estimate after replacing clusters A (and B) by C; ``loss_b=None`` for a strip."""
    return f_est + loss_a + (loss_b or 0.0) - loss_c


def thresholds(f_min: float, intervals: int) -> list[float]:
    step = (1.0 - f_min) / intervals
    out = [1.0 - s * step for s in range(1, intervals)]
    return out + [f_min]


@dataclass
class Candidate:
    k: int
    kind: str
    sources: tuple[tuple[int, int], ...]
    result: tuple[int, int]
    cluster: Cluster
    delta: float
    sibling: tuple[int, int] | None = None

    @property
    def theta(self) -> float:
        return self.cluster.theta

    def sort_key(self) -> tuple:
        return (-self.delta, self.k, order_key(self.k, *self.result), self.kind)


@dataclass(frozen=True)
class ApproxMove:
    k: int
    kind: str
    before: tuple[str, ...]
    after: str
    theta: float
    f_est: float
    threshold: float

    def to_dict(self) -> dict:
        return {
            "k": self.k, "kind": self.kind, "before": list(self.before), "after": self.after,
            "theta": self.theta, "f_est": self.f_est, "threshold": self.threshold,
        }


@dataclass
class ApproxResult:
    optimized: Circuit
    clusters: list[dict[ControlPattern, Cluster]]
    f_est: float
    cost: CostReport
    accepted_merges: list[ApproxMove]

    def recomputed_estimate(self) -> float:
        return 1.0 - math.fsum(c.loss for layer in self.clusters for c in layer.values())


class _Layer:
    def __init__(self, k: int, support: SupportIndex, baseline: BaselineCircuit, tree: PreparationTree):
        self.k = k
        self.support = support
        self.baseline = baseline
        self.tree = tree
        self.clusters: dict[tuple[int, int], Cluster] = {}
        self.dirty = True
        self.candidates: list[Candidate] = []
        self._arrays: tuple[np.ndarray, np.ndarray] | None = None

    def sources_in(self, mask: int, value: int) -> list[tuple[int, float, float]]:
        if not self.support.intersects(mask, value):
            return []
        return [
            (s, self.baseline.angle(self.k, s), self.tree.probability(self.k, s))
            for s in self.support.inside(mask, value).tolist()
        ]

    def add(self, key: tuple[int, int], cluster: Cluster) -> None:
        self.clusters[key] = cluster
        self._arrays = None
        self.dirty = True

    def remove(self, key: tuple[int, int]) -> None:
        del self.clusters[key]
        self._arrays = None
        self.dirty = True

    def _gate_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._arrays is None:
            keys = list(self.clusters)
            self._arrays = (
                np.array([m for m, _ in keys], dtype=np.int64),
                np.array([v for _, v in keys], dtype=np.int64),
            )
        return self._arrays

    def region_free(self, mask: int, value: int) -> bool:
        """True iff no active gate of this layer overlaps the region."""
        masks, values = self._gate_arrays()
        return not np.any(((values ^ value) & masks & mask) == 0)

    def blocked_bits(self, mask: int, value: int) -> set[int]:
        """Bits whose flipped sibling region overlaps some other active gate.

        Gate g meets the sibling across bit b iff (v_g ^ value) & m_g & mask
        equals b; zero would mean g overlaps the gate itself, i.e. g is it.
        """
        masks, values = self._gate_arrays()
        diff = (values ^ value) & masks & mask
        single = diff[(diff != 0) & ((diff & (diff - 1)) == 0)]
        return set(single.tolist())

    def regenerate(self) -> None:
        k = self.k
        out: list[Candidate] = []
        for key in sorted(self.clusters, key=lambda kv: order_key(k, *kv)):
            mask, value = key
            a = self.clusters[key]
            blocked = self.blocked_bits(mask, value)
            for t in range(k):
                bit = 1 << (k - 1 - t)
                if not mask & bit:
                    continue
                merged_key = (mask & ~bit, value & ~bit)
                partner = (mask, value ^ bit)
                b = self.clusters.get(partner)
                if b is not None:
                    if value & bit:
                        continue  # pair already generated from the 0-side gate
                    c = merge_clusters(a, b)
                    out.append(Candidate(k, NEIGHBOR, (key, partner), merged_key, c, a.loss + b.loss - c.loss))
                    continue
                if bit in blocked:
                    continue
                c = strip_extend(a, self.sources_in(mask, partner[1]))
                out.append(Candidate(k, STRIP, (key,), merged_key, c, a.loss - c.loss, partner))
        self.candidates = out
        self.dirty = False

    def to_gate_layer(self) -> GateLayer:
        gates = {ControlPattern(self.k, m, v): c.theta for (m, v), c in self.clusters.items()}
        return GateLayer(self.k, gates)


class ApproxOptimizer:
    """Greedy threshold sweep; usable step by step for testing."""

    def __init__(
        self,
        baseline: BaselineCircuit,
        tree: PreparationTree,
        start: Circuit | None = None,
        allowed_layers: Sequence[int] | None = None,
    ):
        self.n = baseline.n
        self.baseline = baseline
        self.tree = tree
        if start is None:
            start = optimize_exact(baseline, tree).optimized
        self.allowed = set(range(self.n)) if allowed_layers is None else set(allowed_layers)
        self.layers: list[_Layer] = []
        for gl in start.layers:
            layer = _Layer(gl.k, SupportIndex(gl.k, tree.support(gl.k).tolist()), baseline, tree)
            for p, theta in gl.gates.items():
                sources = layer.sources_in(p.mask, p.value)
                if not sources:
                    raise ValidationError(f"gate {p} in layer {gl.k} covers no supported prefix")
                kept = [src for src in sources if src[2] > 0]
                cluster = Cluster(gl.k, [s for s, _, _ in kept], [t for _, t, _ in kept], [q for _, _, q in kept], theta)
                layer.add((p.mask, p.value), cluster)
            self.layers.append(layer)
        self.f_est = 1.0 - math.fsum(c.loss for layer in self.layers for c in layer.clusters.values())
        self.moves: list[ApproxMove] = []

    def candidates(self) -> list[Candidate]:
        out = []
        for layer in self.layers:
            if layer.k not in self.allowed:
                continue
            if layer.dirty:
                layer.regenerate()
            out.extend(layer.candidates)
        out.sort(key=Candidate.sort_key)
        return out

    def still_valid(self, cand: Candidate) -> bool:
        layer = self.layers[cand.k]
        if any(src not in layer.clusters for src in cand.sources):
            return False
        if cand.kind == STRIP:
            return layer.region_free(cand.sources[0][0], cand.sibling[1])
        return True

    def apply(self, cand: Candidate, threshold: float) -> None:
        layer = self.layers[cand.k]
        old = [layer.clusters[s] for s in cand.sources]
        for s in cand.sources:
            layer.remove(s)
        layer.add(cand.result, cand.cluster)
        self.f_est = estimator_update(
            self.f_est, old[0].loss, old[1].loss if len(old) > 1 else None, cand.cluster.loss
        )
        self.moves.append(ApproxMove(
            cand.k, cand.kind, tuple(trit_key(cand.k, *s) for s in cand.sources),
            trit_key(cand.k, *cand.result), cand.cluster.theta, self.f_est, threshold,
        ))

    def greedy_pass(self, threshold: float) -> int:
        accepted = 0
        for cand in self.candidates():
            if not self.still_valid(cand):
                continue
            if self.f_est + cand.delta >= threshold:
                self.apply(cand, threshold)
                accepted += 1
        return accepted

    def run(self, f_min: float, intervals: int) -> None:
        for threshold in thresholds(f_min, intervals):
            self.greedy_pass(threshold)
        while self.greedy_pass(f_min):
            pass

    def circuit(self) -> Circuit:
        return Circuit(self.n, [layer.to_gate_layer() for layer in self.layers])

    def result(self) -> ApproxResult:
        circuit = self.circuit()
        clusters = [
            {ControlPattern(layer.k, m, v): c for (m, v), c in layer.clusters.items()}
            for layer in self.layers
        ]
        return ApproxResult(circuit, clusters, self.f_est, cost_report(circuit), list(self.moves))


def optimize_approx(
    baseline: BaselineCircuit,
    tree: PreparationTree,
    f_min: float,
    intervals: int = DEFAULT_INTERVALS,
    allowed_layers: Sequence[int] | None = None,
) -> ApproxResult:
    """Exact optimization followed by the greedy sweep down to ``f_min``."""
    if not 0.0 < f_min <= 1.0:
        raise ValidationError(f"f_min must lie in (0, 1], got {f_min}")
    if intervals < 1:
        raise ValidationError(f"need at least one interval, got {intervals}")
    opt = ApproxOptimizer(baseline, tree, allowed_layers=allowed_layers)
    opt.run(f_min, intervals)
    return opt.result()
