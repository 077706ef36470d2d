"""
Trading fidelity for CNOTs
==========================

Start from the exactly merged circuit of a random 16-qubit state and let
the greedy sweep spend a fidelity budget.  Three numbers come out for each
budget: the running estimate the optimizer tracked, the overlap obtained by
simulating the circuit, and the certified lower bound.
"""
from __future__ import annotations

from grprep import (
    ApproxOptimizer,
    amplification_table,
    build_preparation_tree,
    compute_baseline_angles,
    lower_bound,
    optimize_exact,
    overlap,
    random_instance,
    simulate,
)

state = random_instance(16, 300, seed=7)
tree = build_preparation_tree(state)
baseline = compute_baseline_angles(tree)
exact = optimize_exact(baseline, tree)
print("exact cost:", exact.cost.total)

print(f"{'F_min':>6} {'cnots':>6} {'f_est':>8} {'f_true':>8} {'f_lb':>8} {'merges':>7}")
for f_min in (0.99, 0.95, 0.9, 0.8):
    opt = ApproxOptimizer(baseline, tree, start=exact.optimized)
    opt.run(f_min, 20)
    res = opt.result()
    f_true = overlap(simulate(res.optimized), state)
    f_lb = lower_bound(res.clusters, amplification_table(baseline, res.optimized, tree))
    print(f"{f_min:>6} {res.cost.total:>6} {res.f_est:>8.4f} {f_true:>8.4f} {f_lb:>8.4f} {len(res.accepted_merges):>7}")

# the bound sits below the true overlap by construction; the estimate is
# usually below it too but is not guaranteed to be

# which layers absorbed the merges at the loosest budget
by_layer: dict[int, int] = {}
for move in res.accepted_merges:
    by_layer[move.k] = by_layer.get(move.k, 0) + 1
print("merges per layer at F_min=0.8:", dict(sorted(by_layer.items())))
