"""
A three-qubit walk-through
==========================

Prepare (|001> + |011> + |100>)/sqrt(3), look at the gates the baseline
construction emits, then let the exact pass remove what it can.
"""
from __future__ import annotations

import math

from grprep import (
    Circuit,
    GateLayer,
    build_preparation_tree,
    compute_baseline_angles,
    cost_report,
    normalize_and_validate,
    optimize_exact,
    overlap,
    serialize_circuit,
    simulate,
)

# the target state: three basis states, equal weights
state = normalize_and_validate([(0b001, 1.0), (0b011, 1.0), (0b100, 1.0)], 3)
print("target:", {k: round(v, 6) for k, v in state.bitstrings().items()})

# one rotation per supported prefix; a prefix whose subtree has a single
# child gets angle 0 or pi
tree = build_preparation_tree(state)
baseline = compute_baseline_angles(tree)
base_circuit = baseline.to_circuit()
for layer in base_circuit.layers:
    print(f"layer {layer.k}:", {str(p): round(t, 4) for p, t in layer.gates.items()})
print("baseline cost:", cost_report(base_circuit).to_dict())

# the exact pass strips controls that only separate a supported prefix from
# an unsupported one, and fuses neighbors with equal angles
exact = optimize_exact(baseline, tree)
for event in exact.merge_log:
    print("  ", event.to_dict())
print("optimized cost:", exact.cost.to_dict())
print(serialize_circuit(exact.optimized))

# nothing was approximated, so the overlap is 1 to rounding
print("overlap with target:", overlap(simulate(exact.optimized), state))

# for contrast: move the layer-1 rotation from pi/2 to pi/3.  Only the
# prefix 0 branch (probability 2/3) is affected
layers = list(exact.optimized.layers)
layers[1] = GateLayer(1, {p: math.pi / 3 for p in layers[1].gates})
detuned = Circuit(3, layers)
print("overlap after detuning:", round(overlap(simulate(detuned), state), 6))
print("closed form 2/3 cos(pi/12) + 1/3:", round(2 / 3 * math.cos(math.pi / 12) + 1 / 3, 6))
