"""Closed-form overlaps: the single-merge formula and the post-hoc lower bound."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .circuit_ir import Circuit, ControlPattern
from .state_model import BaselineCircuit, PreparationTree, SparseState, build_preparation_tree


def single_merge_overlap(theta_x: float, theta_y: float, theta_c: float, p_x: float, p_y: float) -> float:
    """Overlap of the states before and after merging two gates into angle ``theta_c``."""
    return 1.0 - (
        (1.0 - math.cos((theta_x - theta_c) / 2.0)) * p_x
        + (1.0 - math.cos((theta_y - theta_c) / 2.0)) * p_y
    )


def branch_factor(theta: float, bit: int) -> float:
    return math.sin(theta / 2.0) if bit else math.cos(theta / 2.0)


@dataclass(frozen=True)
class AmplificationTable:
    """Amplification factors indexed by depth and supported prefix.

    ``rows[k][s]`` is the product of final-over-baseline branch factors along
    the path to prefix ``s``; a supported leaf ``x`` reads its depth-k value
    at ``s = x >> (n - k)``.
    """

    n: int
    rows: tuple[dict[int, float], ...]

    def factor(self, k: int, prefix: int) -> float:
        return self.rows[k][prefix]

    def leaf_factor(self, leaf: int, k: int) -> float:
        return self.rows[k][leaf >> (self.n - k)]


def amplification_table(
    baseline: BaselineCircuit, final: Circuit, state: SparseState | PreparationTree
) -> AmplificationTable:
    tree = state if isinstance(state, PreparationTree) else build_preparation_tree(state)
    n = tree.n
    rows: list[dict[int, float]] = [{0: 1.0}]
    for k in range(n):
        sup = tree.support(k)
        final_angles = final.layers[k].covering_angles(sup) if len(final.layers[k]) else np.zeros(len(sup))
        nxt: dict[int, float] = {}
        children = tree.levels[k + 1]
        for s, theta_f in zip(sup.tolist(), final_angles.tolist()):
            theta_b = baseline.angle(k, s)
            r = rows[k][s]
            for bit in (0, 1):
                child = (s << 1) | bit
                if child in children:
                    nxt[child] = r * branch_factor(theta_f, bit) / branch_factor(theta_b, bit)
        rows.append(nxt)
    return AmplificationTable(n, tuple(rows))


def lower_bound(
    clusters: Iterable[Mapping[ControlPattern, object]] | Iterable[object],
    table: AmplificationTable,
) -> float:
    """``1 - sum_C R_C L_C`` with ``R_C`` the largest factor over the cluster's sources.

    ``clusters`` is either the per-layer mappings of an ApproxResult or a flat
    iterable of cluster objects (anything with ``k``, ``prefixes`` and ``loss``).
    """
    flat = []
    for item in clusters:
        if isinstance(item, Mapping):
            flat.extend(item.values())
        else:
            flat.append(item)
    penalty = []
    for c in flat:
        if c.loss == 0.0:
            continue
        r_c = max(table.rows[c.k][s] for s in c.prefixes)
        penalty.append(r_c * c.loss)
    return 1.0 - math.fsum(penalty)
