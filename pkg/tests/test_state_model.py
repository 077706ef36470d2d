from __future__ import annotations

import math

import numpy as np
import pytest

from grprep.circuit_ir import ControlPattern
from grprep.errors import (
    DuplicateIndexError,
    EmptySupportError,
    IndexOutOfRangeError,
    NegativeAmplitudeError,
    ParseError,
)
from grprep.simulator import overlap, simulate
from grprep.state_model import (
    SparseState,
    build_preparation_tree,
    compute_baseline_angles,
    dump_state_json,
    dump_state_text,
    normalize_and_validate,
    parse_state,
    path_probability,
    prefix_probability,
)

from conftest import SQRT3, dense_prefix_probs, random_state, small_state


def test_normalize_equal_weights():
    s = small_state()
    assert s.bitstrings() == pytest.approx({"001": SQRT3, "011": SQRT3, "100": SQRT3})
    assert s.d == 3 and s.density == pytest.approx(3 / 8)


def test_normalize_identity_and_zero_drop():
    s = normalize_and_validate([(0, 0.6), (1, 0.8)], 1)
    assert s.entries == pytest.approx({0: 0.6, 1: 0.8})
    s = normalize_and_validate([(0, 2.0), (2, 0.0)], 2)
    assert s.entries == {0: 1.0} and s.d == 1


@pytest.mark.parametrize(
    "raw, n, err",
    [
        ([(0, 1.0), (0, 1.0)], 2, DuplicateIndexError),
        ([(0, 1.0), (1, -0.5)], 2, NegativeAmplitudeError),
        ([(0, 0.0)], 2, EmptySupportError),
        ([], 2, EmptySupportError),
        ([(4, 1.0)], 2, IndexOutOfRangeError),
    ],
)
def test_normalize_errors(raw, n, err):
    with pytest.raises(err):
        normalize_and_validate(raw, n)


def test_state_rejects_unnormalized():
    with pytest.raises(ValueError):
        SparseState(2, {0: 0.5})


def test_tree_example(example):
    _, tree, _ = example
    assert tree.levels[0] == pytest.approx({0: 1.0})
    assert tree.levels[1] == pytest.approx({0: math.sqrt(2 / 3), 1: SQRT3})
    assert tree.levels[2] == pytest.approx({0: SQRT3, 1: SQRT3, 2: SQRT3})
    assert tree.levels[1][0] == pytest.approx(0.81650, abs=1e-5)


def test_tree_single_basis_state():
    tree = build_preparation_tree(normalize_and_validate([(0b101, 1.0)], 3))
    assert [tree.levels[k] for k in range(4)] == [{0: 1.0}, {1: 1.0}, {0b10: 1.0}, {0b101: 1.0}]


def test_tree_uniform():
    tree = build_preparation_tree(normalize_and_validate([(i, 1.0) for i in range(4)], 2))
    assert tree.levels[1] == pytest.approx({0: 2**-0.5, 1: 2**-0.5})


def test_tree_matches_dense_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 9))
        s = random_state(rng, n, int(rng.integers(1, 2**n + 1)))
        tree = build_preparation_tree(s)
        for k in range(n + 1):
            got = {p: a * a for p, a in tree.levels[k].items()}
            assert got == pytest.approx(dense_prefix_probs(s, k), abs=1e-12)
            for p, a in tree.levels[k].items():
                if k < n:
                    kids = tree.amplitude(k + 1, 2 * p) ** 2 + tree.amplitude(k + 1, 2 * p + 1) ** 2
                    assert a == pytest.approx(math.sqrt(kids), abs=1e-12)
            assert sum(a * a for a in tree.levels[k].values()) == pytest.approx(1.0, abs=1e-10)


def test_baseline_example(example):
    _, _, base = example
    assert base.layers[0] == pytest.approx({0: 1.23096}, abs=1e-5)
    assert base.layers[0][0] == pytest.approx(2 * math.acos(math.sqrt(2 / 3)))
    assert base.layers[1] == pytest.approx({0: math.pi / 2, 1: 0.0})
    assert base.layers[2] == pytest.approx({0: math.pi, 1: math.pi, 2: 0.0})
    assert not base.is_active(2, 2) and base.active_gates(1) == pytest.approx({0: math.pi / 2})


def test_baseline_basis_and_uniform():
    base = compute_baseline_angles(build_preparation_tree(normalize_and_validate([(3, 1.0)], 2)))
    assert base.layers[0] == pytest.approx({0: math.pi}) and base.layers[1] == pytest.approx({1: math.pi})
    n = 4
    base = compute_baseline_angles(build_preparation_tree(normalize_and_validate([(i, 1.0) for i in range(2**n)], n)))
    for layer in base.layers:
        assert all(t == pytest.approx(math.pi / 2) for t in layer.values())


def test_baseline_round_trip():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(1, 10))
        s = random_state(rng, n, int(rng.integers(1, min(40, 2**n) + 1)))
        base = compute_baseline_angles(build_preparation_tree(s))
        assert overlap(simulate(base.to_circuit()), s) >= 1 - 1e-10


def test_prefix_probability(example):
    _, tree, base = example
    assert prefix_probability(tree, ControlPattern.from_string("0e")) == pytest.approx(2 / 3)
    assert prefix_probability(tree, ControlPattern.from_string("")) == pytest.approx(1.0)
    assert prefix_probability(tree, ControlPattern.from_string("11")) == 0.0
    for k in range(4):
        for p in range(2**k):
            assert prefix_probability(tree, ControlPattern.concrete(k, p)) == pytest.approx(
                path_probability(base, p, k), abs=1e-12
            )


def test_path_probability_matches_tree_random():
    rng = np.random.default_rng(5)
    s = random_state(rng, 10, 60)
    tree = build_preparation_tree(s)
    base = compute_baseline_angles(tree)
    for k in range(11):
        for p in tree.support(k).tolist():
            assert path_probability(base, p, k) == pytest.approx(tree.probability(k, p), abs=1e-10)


def test_state_formats_round_trip(example):
    s, _, _ = example
    for text in (dump_state_text(s), dump_state_json(s)):
        back = parse_state(text)
        assert back.n == s.n and back.entries == pytest.approx(s.entries)


@pytest.mark.parametrize("text", ["", "n=2\n0 1.0", "n=2\n01 x", "x=2\n01 1", "{bad json", '{"n": 2}'])
def test_state_parse_errors(text):
    with pytest.raises(ParseError):
        parse_state(text)
