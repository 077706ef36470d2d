from __future__ import annotations

import math

import numpy as np
import pytest

from grprep.state_model import (
    SparseState,
    build_preparation_tree,
    compute_baseline_angles,
    normalize_and_validate,
)


def small_state() -> SparseState:
    """Three equal-weight basis states 001, 011, 100."""
    return normalize_and_validate([(1, 1.0), (3, 1.0), (4, 1.0)], 3)


def pipeline_inputs(state: SparseState):
    tree = build_preparation_tree(state)
    return tree, compute_baseline_angles(tree)


def dense_prefix_probs(state: SparseState, k: int) -> dict[int, float]:
    """Brute-force coarse probabilities by summing over suffixes."""
    vec = state.to_dense()
    probs = (vec**2).reshape(1 << k, -1).sum(axis=1)
    return {p: float(v) for p, v in enumerate(probs) if v > 0}


def random_state(rng: np.random.Generator, n: int, d: int) -> SparseState:
    idx = rng.choice(1 << n, size=d, replace=False)
    amps = 1.0 - rng.random(d)
    return normalize_and_validate(zip(idx.tolist(), amps.tolist()), n)


@pytest.fixture
def example():
    state = small_state()
    tree, baseline = pipeline_inputs(state)
    return state, tree, baseline


SQRT3 = 1.0 / math.sqrt(3.0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
