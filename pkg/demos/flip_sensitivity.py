"""
How much does one edge flip move the spectrum?
==============================================

First-order eigenvalue changes for single edge flips against the exact
change, and the spectral-distance interval that brackets their total.
"""

import itertools

import numpy as np

from ciaug import generate_er
from ciaug.graph import normalized_laplacian, normalized_laplacian_from_adjacency
from ciaug.perturbation import eigenvalue_change_single_flip, perturbation_bounds
from ciaug.spectral import eig_sym_dense

g = generate_er(12, 0.4, seed=3)
a = g.adjacency()
sp = eig_sym_dense(normalized_laplacian(g))

# a small weight change on one edge: estimate vs exact
i, j = g.edges[0]
for dw in (1e-2, 1e-3, 1e-4):
    est = eigenvalue_change_single_flip(sp, i, j, dw, g.degrees()).per_eigenvalue_changes
    b = a.copy()
    b[i, j] += dw
    b[j, i] += dw
    exact = np.linalg.eigvalsh(normalized_laplacian_from_adjacency(b)) - sp.eigenvalues
    print(f"dw={dw:.0e}  max |estimate - exact| = {np.abs(est - exact).max():.2e}")

###############################################################################
# Every pair of nodes: the estimated total change sits between the bounds

present = g.edge_set()
rows = []
for i, j in itertools.combinations(range(g.n), 2):
    dw = -1.0 if (i, j) in present else 1.0
    total = eigenvalue_change_single_flip(sp, i, j, dw, g.degrees()).total_absolute_change
    lo, hi = perturbation_bounds(sp, i, j)
    rows.append((lo, total, hi))
rows = np.array(rows)
print("pairs inside the bounds:", int(np.sum((rows[:, 0] <= rows[:, 1] + 1e-9) & (rows[:, 1] <= rows[:, 2] + 1e-9))), "of", len(rows))
print("first five (lower, estimate, upper):")
print(np.round(rows[:5], 3))
