"""
Exact merging across sparsities
===============================

Random 14-qubit states at several densities.  For each we compare the
baseline priced gate by gate, the same baseline with every layer priced
as a uniformly controlled rotation, and the exactly merged circuit.
"""
from __future__ import annotations

import numpy as np

from grprep.harness import d_from_density, random_instance, run_pipeline

n = 14
reps = 5

print(f"{'density':>8} {'d':>5} {'singles':>9} {'merged':>9} {'UCR':>9} {'exact':>9}")
for density in (1e-3, 1e-2, 5e-2, 2e-1):
    d = d_from_density(n, density)
    rows = []
    for seed in range(reps):
        rec = run_pipeline(random_instance(n, d, seed))
        rows.append((rec.cnots_unmerged_singles, rec.cnots_merged_singles, rec.cnots_ucr_only, rec.cnots_after_exact))
    means = np.mean(rows, axis=0)
    print(f"{density:>8g} {d:>5d} " + " ".join(f"{m:>9.0f}" for m in means))

# sparse states: merging alone removes most controls and the UCR price is
# far too high; dense states: UCR wins on the deep layers and the
# optimized circuit picks it there
