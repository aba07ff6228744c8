"""
Graph spectra, two ways
=======================

Normalized Laplacian eigenvalues of a random graph from the dense solver and
from the restarted Lanczos solver, then the node/feature bipartite spectrum
read off a singular value decomposition.
"""

import numpy as np

from ciaug import generate_er
from ciaug.graph import bipartite_adjacency, normalized_laplacian, normalized_laplacian_from_adjacency
from ciaug.spectral import eig_sym_dense, lanczos_lowest_k, truncated_svd_normalized

g = generate_er(200, 0.05, seed=0)
print(f"ER graph: n={g.n}, m={g.m}")

# dense reference
dense = eig_sym_dense(normalized_laplacian(g))
print("dense   :", np.round(dense.eigenvalues[:6], 6))

# Lanczos only needs matrix-vector products
lap = normalized_laplacian(g, sparse=True)
pair = lanczos_lowest_k(lambda v: lap @ v, g.n, 6, seed=0)
print("lanczos :", np.round(pair.eigenvalues, 6) + 0.0)
print("max diff:", np.abs(pair.eigenvalues - dense.eigenvalues[:6]).max())

###############################################################################
# Features as a bipartite graph: eigenvalues are one minus singular values

rng = np.random.default_rng(1)
x = rng.uniform(0.05, 1.0, (10, 7))
svd = truncated_svd_normalized(x, 7)
full = np.linalg.eigvalsh(normalized_laplacian_from_adjacency(bipartite_adjacency(x)))
print("1 - s   :", np.round(1 - svd.singular_values, 6))
print("dense   :", np.round(full[:7], 6) + 0.0)
