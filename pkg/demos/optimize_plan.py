"""
Optimizing an edge-drop plan
============================

Projected gradient ascent on the spectral-change loss for a planted
partition graph, compared with spreading the same budget uniformly, then a
hard view sampled from the optimized plan.
"""

import numpy as np

from ciaug import RpgParams, generate_rpg
from ciaug.augment import apply_plan, gumbel_sample, optimize_plan, pgd_optimize, init_plan
from ciaug.augment import spectral_change_loss, uniform_plan
from ciaug.community import community_change_ratio, spectral_clustering

g = generate_rpg(RpgParams(seed=3))
budget, k = 0.2 * g.m, 6
print(f"graph: n={g.n}, m={g.m}, budget={budget:.1f} edges")

# one PGD run, showing the loss trajectory
_, history = pgd_optimize(g, init_plan(g, "edge-drop", budget, seed=0), k, iterations=20, return_history=True)
print("loss every 4th iteration:", " ".join(f"{h:.2e}" for h in history[::4]))

ci = optimize_plan(g, "edge-drop", budget, k)
uni = uniform_plan(g, "edge-drop", budget)
print(f"spectral change  ci={spectral_change_loss(g, ci, k):.5f}  uniform={spectral_change_loss(g, uni, k):.5f}")

# where the optimized plan spends its budget
inter = g.labels[ci.support[:, 0]] != g.labels[ci.support[:, 1]]
print(f"mean drop prob.  inter-class={ci.values[inter].mean():.3f}  intra-class={ci.values[~inter].mean():.3f}")

###############################################################################
# Sample hard views and compare their clusterings with the original

base = spectral_clustering(g, 8, seed=0)
for name, plan in (("ci", ci), ("uniform", uni)):
    view = apply_plan(g, plan, gumbel_sample(plan.values, 0.1, seed=1)).graph
    ratio = community_change_ratio(base, spectral_clustering(view, 8, seed=0))
    print(f"{name:8s} dropped {g.m - view.m:3d} edges, community change {ratio:.3f}")
