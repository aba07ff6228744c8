"""Graph data model and the normalized-Laplacian constructions built on it."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, weighted, simple graph with optional node features.

    Edges are stored canonically as ``i < j`` pairs sorted lexicographically,
    aligned with ``weights``. Instances are immutable: all arrays are made
    read-only on construction.

    Parameters
    ----------
    n : int
        Number of nodes.
    edges : array_like, shape (m, 2)
        Endpoint pairs. Either orientation is accepted.
    weights : array_like, shape (m,), optional
        Nonnegative edge weights, default 1.
    features : array_like, shape (n, d), optional
        Nonnegative feature matrix.
    labels : array_like, shape (n,), optional
        Planted class labels (generators fill this in).
    """

    n: int
    edges: np.ndarray
    weights: np.ndarray = None
    features: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 0:
            raise ValueError("node count must be nonnegative")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        m = len(edges)
        if self.weights is None:
            weights = np.ones(m)
        else:
            weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(weights) != m:
            raise ValueError(f"{m} edges but {len(weights)} weights")
        if m:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError(f"edge index out of range [0, {n})")
            if np.any(edges[:, 0] == edges[:, 1]):
                k = int(np.flatnonzero(edges[:, 0] == edges[:, 1])[0])
                raise ValueError(f"self-loop at node {edges[k, 0]}")
            if np.any(weights < 0) or not np.all(np.isfinite(weights)):
                raise ValueError("edge weights must be finite and nonnegative")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        order = np.lexsort((hi, lo))
        edges = np.stack([lo[order], hi[order]], axis=1)
        weights = weights[order]
        if m > 1:
            dup = np.all(edges[1:] == edges[:-1], axis=1)
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise ValueError(f"duplicate edge ({edges[k, 0]}, {edges[k, 1]})")

        features = self.features
        if features is not None:
            features = np.array(features, dtype=float)
            if features.ndim != 2 or features.shape[0] != n:
                raise ValueError(f"features must have shape ({n}, d)")
            if np.any(features < 0) or not np.all(np.isfinite(features)):
                raise ValueError("feature entries must be finite and nonnegative")
            features = _frozen(features)
        labels = self.labels
        if labels is not None:
            labels = np.array(labels, dtype=np.int64).reshape(-1)
            if len(labels) != n:
                raise ValueError(f"labels must have length {n}")
            labels = _frozen(labels)

        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", _frozen(edges))
        object.__setattr__(self, "weights", _frozen(weights.copy()))
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return len(self.edges)

    @classmethod
    def from_adjacency(cls, adjacency, features=None, labels=None, tol=0.0) -> "Graph":
        """Build a graph from a symmetric (dense or sparse) adjacency matrix.

        Entries ``<= tol`` are treated as absent edges.
        """
        a = sp.triu(sp.csr_matrix(adjacency), k=1).tocoo()
        keep = a.data > tol
        edges = np.stack([a.row[keep], a.col[keep]], axis=1)
        return cls(a.shape[0], edges, a.data[keep], features=features, labels=labels)

    def with_weights(self, weights) -> "Graph":
        """Same support with new weights; zero-weight edges are dropped."""
        weights = np.asarray(weights, dtype=float)
        keep = weights > 0
        return Graph(self.n, self.edges[keep], weights[keep], self.features, self.labels)

    def with_features(self, features) -> "Graph":
        return Graph(self.n, self.edges, self.weights, features, self.labels)

    def adjacency(self, sparse: bool = False):
        """Symmetric weighted adjacency matrix."""
        i, j = self.edges.T
        a = sp.coo_matrix(
            (np.concatenate([self.weights, self.weights]), (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(self.n, self.n),
        ).tocsr()
        return a if sparse else a.toarray()

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n)
        np.add.at(d, self.edges[:, 0], self.weights)
        np.add.at(d, self.edges[:, 1], self.weights)
        return d

    def neighbors(self) -> list[np.ndarray]:
        """Neighbor index arrays for every node (positive-weight edges only)."""
        keep = self.weights > 0
        i, j = self.edges[keep].T
        src = np.concatenate([i, j])
        dst = np.concatenate([j, i])
        order = np.argsort(src, kind="stable")
        splits = np.searchsorted(src[order], np.arange(1, self.n))
        return np.split(dst[order], splits)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in self.edges}

    def relabel(self, perm) -> "Graph":
        """Return the graph with node ``v`` renamed to ``perm[v]``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        feats = None if self.features is None else self.features[inv]
        labels = None if self.labels is None else self.labels[inv]
        return Graph(self.n, perm[self.edges], self.weights, feats, labels)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.shape == b.shape and np.array_equal(a, b)

        return (
            self.n == other.n
            and same(self.edges, other.edges)
            and same(self.weights, other.weights)
            and same(self.features, other.features)
            and same(self.labels, other.labels)
        )

    __hash__ = None


@dataclass(frozen=True)
class BipartiteFeatureGraph:
    """Node/feature bipartite graph whose adjacency is ``[[0, X], [X^T, 0]]``.

    Nodes ``0..n-1`` are the original nodes and ``n..n+d-1`` are feature nodes.
    """

    base: Graph
    n: int
    d: int

    def node_rows(self) -> slice:
        return slice(0, self.n)

    def feature_rows(self) -> slice:
        return slice(self.n, self.n + self.d)


def _inv_sqrt_degree(d: np.ndarray) -> np.ndarray:
    out = np.zeros_like(d, dtype=float)
    pos = d > 0
    out[pos] = 1.0 / np.sqrt(d[pos])
    return out


def normalized_laplacian_from_adjacency(a, sparse: bool = False):
    """``I - D^{-1/2} A D^{-1/2}`` with the pseudo-inverse convention at degree 0.

    Isolated nodes get an all-zero row and column, so they contribute the
    eigenvalue 0. The result is exactly symmetric for symmetric input.
    """
    if sp.issparse(a):
        a = sp.csr_matrix(a, dtype=float)
        d = np.asarray(a.sum(axis=1)).ravel()
        s = _inv_sqrt_degree(d)
        scaled = sp.diags(s) @ a @ sp.diags(s)
        # symmetrize bitwise: triple products are not associative in floating point
        scaled = (scaled + scaled.T) * 0.5
        lap = sp.diags((d > 0).astype(float)) - scaled
        return lap.tocsr() if sparse else lap.toarray()
    a = np.asarray(a, dtype=float)
    d = a.sum(axis=1)
    s = _inv_sqrt_degree(d)
    lap = -(a * np.outer(s, s))
    lap[np.diag_indices_from(lap)] += (d > 0).astype(float)
    return sp.csr_matrix(lap) if sparse else lap


def normalized_laplacian(g: Graph, sparse: bool = False):
    """Normalized Laplacian of ``g`` (dense ndarray unless ``sparse``)."""
    return normalized_laplacian_from_adjacency(g.adjacency(sparse=True), sparse=sparse)


def complement_adjacency(g: Graph) -> np.ndarray:
    """All unordered pairs ``(i, j)``, ``i < j``, that are not edges of ``g``.

    Returns an int array of shape ``(n(n-1)/2 - m, 2)`` in lexicographic order.
    """
    i, j = np.triu_indices(g.n, k=1)
    present = np.zeros((g.n, g.n), dtype=bool)
    present[g.edges[:, 0], g.edges[:, 1]] = True
    keep = ~present[i, j]
    return np.stack([i[keep], j[keep]], axis=1)


def build_feature_bipartite(g: Graph) -> BipartiteFeatureGraph:
    """Feature bipartite graph of ``g``; edge ``(i, n+j)`` carries ``X[i, j]``."""
    if g.features is None:
        raise ValueError("graph has no features")
    x = g.features
    n, d = x.shape
    rows, cols = np.nonzero(x)
    base = Graph(n + d, np.stack([rows, cols + n], axis=1), x[rows, cols])
    return BipartiteFeatureGraph(base, n, d)


def bipartite_adjacency(x: np.ndarray) -> np.ndarray:
    """Dense ``[[0, X], [X^T, 0]]``."""
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    out = np.zeros((n + d, n + d))
    out[:n, n:] = x
    out[n:, :n] = x.T
    return out
