from __future__ import annotations

import math

import numpy as np
import pytest

from grprep.approx_optimizer import ApproxOptimizer, Cluster, optimize_approx
from grprep.circuit_ir import Circuit, ControlPattern, GateLayer
from grprep.fidelity_bound import (
    amplification_table,
    branch_factor,
    lower_bound,
    single_merge_overlap,
)
from grprep.simulator import overlap, simulate
from grprep.state_model import normalize_and_validate

from conftest import pipeline_inputs, random_state

P = ControlPattern.from_string


def test_single_merge_overlap_examples():
    assert single_merge_overlap(1.1, 1.1, 1.1, 0.3, 0.2) == 1.0
    assert single_merge_overlap(0.7, 0.0, 0.7, 0.4, 0.0) == 1.0
    assert single_merge_overlap(math.pi / 2, 0.0, math.pi / 4, 0.25, 0.25) == pytest.approx(0.96194, abs=1e-5)


def test_single_merge_matches_simulator():
    # P(00) = P(01) = 0.25, P(10) = 0.5
    head = [GateLayer(0, {P(""): math.pi / 2}), GateLayer(1, {P("0"): math.pi / 2})]
    before = Circuit(3, head + [GateLayer(2, {P("00"): math.pi / 2, P("10"): 1.0})])
    after = Circuit(3, head + [GateLayer(2, {P("0e"): math.pi / 4, P("10"): 1.0})])
    got = overlap(simulate(before), simulate(after))
    assert got == pytest.approx(single_merge_overlap(math.pi / 2, 0.0, math.pi / 4, 0.25, 0.25), abs=1e-12)


def test_table_identity_when_unchanged():
    rng = np.random.default_rng(0)
    s = random_state(rng, 9, 30)
    tree, base = pipeline_inputs(s)
    table = amplification_table(base, base.to_circuit(), s)
    assert all(v == pytest.approx(1.0) for row in table.rows for v in row.values())
    assert table.rows[0] == {0: 1.0}


def test_table_ratio_example():
    s = normalize_and_validate([(i, 1.0) for i in range(4)], 2)
    tree, base = pipeline_inputs(s)
    final = base.to_circuit()
    final.layers[0] = GateLayer(0, {P(""): math.pi / 3})
    table = amplification_table(base, final, tree)
    assert table.factor(1, 0) == pytest.approx(math.cos(math.pi / 6) / math.cos(math.pi / 4))
    assert table.factor(1, 0) == pytest.approx(1.22474, abs=1e-5)
    assert table.factor(1, 1) == pytest.approx(math.sin(math.pi / 6) / math.sin(math.pi / 4))
    assert table.leaf_factor(0b01, 2) == pytest.approx(table.factor(1, 0))


def test_table_multiplicative_and_preserved_paths():
    rng = np.random.default_rng(1)
    s = random_state(rng, 10, 25)
    tree, base = pipeline_inputs(s)
    res = optimize_approx(base, tree, 0.85, 10)
    table = amplification_table(base, res.optimized, tree)
    for k in range(tree.n):
        angles = res.optimized.layers[k].covering_angles(tree.support(k))
        for s_k, theta_f in zip(tree.support(k).tolist(), angles.tolist()):
            for bit in (0, 1):
                child = 2 * s_k + bit
                if child in tree.levels[k + 1]:
                    ratio = branch_factor(theta_f, bit) / branch_factor(base.angle(k, s_k), bit)
                    assert table.factor(k + 1, child) == pytest.approx(table.factor(k, s_k) * ratio, rel=1e-12)


def test_lower_bound_trivial_cases():
    s = normalize_and_validate([(1, 1.0), (3, 1.0), (4, 1.0)], 3)
    tree, base = pipeline_inputs(s)
    res = optimize_approx(base, tree, 1.0, 5)
    table = amplification_table(base, res.optimized, tree)
    assert lower_bound(res.clusters, table) == 1.0
    # one lossy cluster in the last layer: every R at that depth is 1
    rng = np.random.default_rng(3)
    s = random_state(rng, 6, 40)
    tree, base = pipeline_inputs(s)
    opt = ApproxOptimizer(base, tree, allowed_layers=[5])
    opt.run(0.9, 5)
    res = opt.result()
    table = amplification_table(base, res.optimized, tree)
    assert lower_bound(res.clusters, table) == pytest.approx(res.f_est, abs=1e-12)
    flat = [c for layer in res.clusters for c in layer.values()]
    assert lower_bound(flat, table) == lower_bound(res.clusters, table)


def test_lower_bound_single_cluster_collapses():
    c = Cluster(2, [0, 1], [0.3, 1.4], [0.2, 0.3])
    s = normalize_and_validate([(i, 1.0) for i in range(8)], 3)
    tree, base = pipeline_inputs(s)
    table = amplification_table(base, base.to_circuit(), tree)
    assert lower_bound([c], table) == pytest.approx(1 - c.loss)


def test_bound_holds_random():
    rng = np.random.default_rng(12)
    margins = []
    for _ in range(20):
        s = random_state(rng, 12, 8)
        tree, base = pipeline_inputs(s)
        res = optimize_approx(base, tree, 0.9, 20)
        f_lb = lower_bound(res.clusters, amplification_table(base, res.optimized, tree))
        f_true = overlap(simulate(res.optimized), s)
        assert f_true >= f_lb - 1e-10
        margins.append(f_true - f_lb)
    assert min(margins) >= -1e-10
