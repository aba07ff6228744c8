"""Spectral clustering and community-change metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import connected_components
from sklearn.cluster import KMeans

from .graph import Graph, normalized_laplacian_from_adjacency
from .spectral import lowest_eigenpairs


@dataclass(frozen=True, eq=False)
class CommunityAssignment:
    """Hard cluster labels in ``[0, k)`` for every node."""

    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)


def spectral_clustering(
    g: Graph, k: int, seed: int = 0, n_init: int = 10, max_iter: int = 100, min_component: int | None = None
) -> CommunityAssignment:
    """Normalized spectral clustering with k-means on row-normalized eigenvectors.

    The ``k`` lowest eigenvectors are computed over the nodes that belong to a
    component of at least ``min_component`` nodes. Every connected component
    owns a zero eigenvalue, so isolated nodes and small fragments (common after
    edge or node dropping) would otherwise each claim an embedding dimension
    and starve the real communities. Excluded nodes get a zero embedding row.

    Parameters
    ----------
    min_component : int, optional
        Smallest component that takes part in the decomposition. Defaults to
        ``max(2, n_active // (2 k))``, i.e. half an average cluster.

    Raises
    ------
    ValueError
        If ``k`` exceeds the number of nodes.
    """
    if not 1 <= k <= g.n:
        raise ValueError(f"k={k} out of range [1, {g.n}]")
    active = np.flatnonzero(g.degrees() > 0)
    if min_component is None:
        min_component = max(2, len(active) // (2 * k))
    if len(active) and min_component > 2:
        _, comp = connected_components(g.adjacency(sparse=True)[active][:, active], directed=False)
        sizes = np.bincount(comp)
        active = active[sizes[comp] >= min_component]
    emb = np.zeros((g.n, k))
    if len(active):
        sub = g.adjacency(sparse=True)[active][:, active]
        kk = min(k, len(active))
        lap = normalized_laplacian_from_adjacency(sub, sparse=True)
        emb[active, :kk] = lowest_eigenpairs(lap, kk, seed=seed).eigenvectors
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    emb = np.divide(emb, norms, out=np.zeros_like(emb), where=norms > 0)
    km = KMeans(n_clusters=k, init="k-means++", n_init=n_init, max_iter=max_iter, random_state=seed)
    labels = km.fit_predict(emb)
    return CommunityAssignment(labels, k)


def _contingency(a: np.ndarray, b: np.ndarray, ka: int, kb: int) -> np.ndarray:
    table = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def community_change_ratio(a: CommunityAssignment, b: CommunityAssignment) -> float:
    """Fraction of nodes whose community differs under the best label matching.

    The matching between the two label sets is the maximum-agreement
    assignment on their contingency table, so the result is invariant to
    relabeling either side.

    Examples
    --------
    >>> community_change_ratio(CommunityAssignment([0, 0, 1], 2), CommunityAssignment([1, 1, 0], 2))
    0.0
    """
    if a.n != b.n:
        raise ValueError(f"assignments cover {a.n} and {b.n} nodes")
    if a.n == 0:
        return 0.0
    table = _contingency(a.labels, b.labels, a.k, b.k)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(1.0 - table[rows, cols].sum() / a.n)


def normalized_cut(g: Graph, assignment: CommunityAssignment) -> float:
    """``sum_c cut(c) / vol(c)`` over the non-empty clusters.

    Raises
    ------
    ValueError
        If a non-empty cluster has zero volume.
    """
    if assignment.n != g.n:
        raise ValueError("assignment size does not match graph")
    lab = assignment.labels
    deg = g.degrees()
    vol = np.bincount(lab, deg, minlength=assignment.k)
    i, j = g.edges[:, 0], g.edges[:, 1]
    crossing = lab[i] != lab[j]
    w = g.weights[crossing]
    cut = np.bincount(lab[i][crossing], w, minlength=assignment.k) + np.bincount(lab[j][crossing], w, minlength=assignment.k)
    present = np.bincount(lab, minlength=assignment.k) > 0
    if np.any(vol[present] <= 0):
        raise ValueError("a cluster has zero volume")
    return float(np.sum(cut[present] / vol[present]))
