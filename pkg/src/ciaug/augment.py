"""Budgeted perturbation plans and their spectral-change optimization.

A plan holds continuous flip values in ``[0, 1]`` on a support (edges, absent
pairs, nodes or nonzero feature cells) under an L1 budget. The relaxed graph
weights each support element by its value; the loss is the squared distance
between the ``K`` lowest normalized-Laplacian eigenvalues of the relaxed and
original graphs. Gradients come in closed form from the eigenvalue
derivatives in :mod:`ciaug.perturbation`, and plans are optimized by projected
gradient steps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, logit

from .graph import Graph, complement_adjacency, normalized_laplacian_from_adjacency, bipartite_adjacency
from .perturbation import eigenvalue_derivatives
from .spectral import (
    DENSE_THRESHOLD,
    SpectralPair,
    bipartite_spectrum,
    eig_sym_dense,
    lowest_eigenpairs,
)

FEASIBILITY_TOL = 1e-9


class Mode(str, enum.Enum):
    EDGE_DROP = "edge-drop"
    EDGE_ADD = "edge-add"
    NODE_DROP = "node-drop"
    FEATURE_MASK = "feature-mask"

    @property
    def maximize(self) -> bool:
        """Edge adding minimizes spectral change; every other mode maximizes it."""
        return self is not Mode.EDGE_ADD


@dataclass(frozen=True, eq=False)
class PerturbationPlan:
    """Continuous flip values on a support, with an L1 budget.

    ``support`` is ``(s, 2)`` for edge and feature modes (``(node, feature)``
    cells for feature masking) and ``(s,)`` node indices for node dropping.
    """

    mode: Mode
    support: np.ndarray
    values: np.ndarray
    budget: float

    def __post_init__(self):
        mode = Mode(self.mode)
        support = np.asarray(self.support, dtype=np.int64)
        if mode is Mode.NODE_DROP:
            support = support.reshape(-1)
        else:
            support = support.reshape(-1, 2)
        values = np.array(self.values, dtype=float).reshape(-1)
        if len(values) != len(support):
            raise ValueError(f"{len(support)} support entries but {len(values)} values")
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        support.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "budget", float(self.budget))

    def __len__(self):
        return len(self.values)

    def with_values(self, values) -> "PerturbationPlan":
        return PerturbationPlan(self.mode, self.support, values, self.budget)

    def is_feasible(self, tol: float = FEASIBILITY_TOL) -> bool:
        v = self.values
        return bool(np.all(v >= -tol) and np.all(v <= 1 + tol) and v.sum() <= self.budget + tol)

    def to_dict(self) -> dict:
        support = self.support.tolist()
        if self.mode is Mode.NODE_DROP:
            support = [[i] for i in support]
        return {"mode": self.mode.value, "support": support, "values": self.values.tolist(), "budget": self.budget}

    @classmethod
    def from_dict(cls, obj: dict) -> "PerturbationPlan":
        mode = Mode(obj["mode"])
        support = obj["support"]
        if mode is Mode.NODE_DROP:
            support = [s[0] if isinstance(s, (list, tuple)) else s for s in support]
        return cls(mode, np.array(support, dtype=np.int64), obj["values"], obj["budget"])


@dataclass(frozen=True, eq=False)
class AugmentedView:
    """A sampled augmentation of a graph together with how it was produced."""

    graph: Graph
    mode: Mode
    mask: np.ndarray
    seed: Optional[int] = None


# --------------------------------------------------------------------------
# supports and plan construction


def default_support(g: Graph, mode: Union[Mode, str]) -> np.ndarray:
    mode = Mode(mode)
    if mode is Mode.EDGE_DROP:
        return g.edges.copy()
    if mode is Mode.EDGE_ADD:
        return complement_adjacency(g)
    if mode is Mode.NODE_DROP:
        return np.arange(g.n)
    if g.features is None:
        raise ValueError("feature masking needs node features")
    rows, cols = np.nonzero(g.features)
    return np.stack([rows, cols], axis=1)


def init_plan(g: Graph, mode, budget: float, seed: int = 0, jitter: float = 0.01, support=None) -> PerturbationPlan:
    """Starting point for optimization: ``min(0.5, budget / s)`` with seeded jitter.

    The loss is stationary at the origin (and, for edge dropping, along any
    uniform rescaling of the weights), so the jitter is what breaks symmetry.
    """
    mode = Mode(mode)
    support = default_support(g, mode) if support is None else support
    s = len(support)
    if s == 0 or budget <= 0:
        return PerturbationPlan(mode, support, np.zeros(s), max(budget, 0.0))
    rng = np.random.default_rng(seed)
    base = min(0.5, budget / s)
    values = base * (1.0 + jitter * rng.uniform(-1.0, 1.0, size=s))
    return PerturbationPlan(mode, support, project_budget(values, budget), budget)


def uniform_plan(g: Graph, mode, budget: float, support=None) -> PerturbationPlan:
    """Equal flip probability ``min(1, budget / s)`` on every support element."""
    mode = Mode(mode)
    support = default_support(g, mode) if support is None else support
    s = len(support)
    values = np.full(s, min(1.0, budget / s) if s else 0.0)
    return PerturbationPlan(mode, support, values, budget)


# --------------------------------------------------------------------------
# continuous relaxation


@dataclass
class _Relaxed:
    """Relaxed adjacency plus the chain rule from pair weights to plan values."""

    adjacency: Union[np.ndarray, sp.spmatrix]
    pairs: np.ndarray
    chain: callable
    features: Optional[np.ndarray] = None  # feature masking: the relaxed X
    extra: dict = field(default_factory=dict)


def _edge_index(g: Graph, pairs: np.ndarray) -> np.ndarray:
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    keys = g.edges[:, 0] * g.n + g.edges[:, 1]
    want = lo * g.n + hi
    idx = np.searchsorted(keys, want)
    idx = np.minimum(idx, max(len(keys) - 1, 0))
    if len(want) and (len(keys) == 0 or np.any(keys[idx] != want)):
        raise ValueError("edge-drop support contains a pair that is not an edge")
    return idx


def _dense_or_sparse(n: int, rows, cols, vals):
    a = sp.coo_matrix(
        (np.concatenate([vals, vals]), (np.concatenate([rows, cols]), np.concatenate([cols, rows]))), shape=(n, n)
    ).tocsr()
    return a.toarray() if n <= DENSE_THRESHOLD else a


def _relax(g: Graph, plan: PerturbationPlan, values: np.ndarray) -> _Relaxed:
    mode = plan.mode
    if mode is Mode.EDGE_DROP:
        idx = _edge_index(g, plan.support)
        w = g.weights.copy()
        w0 = g.weights[idx]
        np.subtract.at(w, idx, w0 * values)
        w = np.maximum(w, 0.0)
        adj = _dense_or_sparse(g.n, g.edges[:, 0], g.edges[:, 1], w)
        return _Relaxed(adj, g.edges[idx], lambda gp: -w0 * gp)
    if mode is Mode.EDGE_ADD:
        present = set(zip(g.edges[:, 0].tolist(), g.edges[:, 1].tolist()))
        lo = np.minimum(plan.support[:, 0], plan.support[:, 1])
        hi = np.maximum(plan.support[:, 0], plan.support[:, 1])
        if any((a, b) in present for a, b in zip(lo.tolist(), hi.tolist())):
            raise ValueError("edge-add support contains an existing edge")
        rows = np.concatenate([g.edges[:, 0], lo])
        cols = np.concatenate([g.edges[:, 1], hi])
        adj = _dense_or_sparse(g.n, rows, cols, np.concatenate([g.weights, values]))
        return _Relaxed(adj, np.stack([lo, hi], axis=1), lambda gp: gp)
    if mode is Mode.NODE_DROP:
        nodes = plan.support
        if len(nodes) and (nodes.min() < 0 or nodes.max() >= g.n):
            raise ValueError("node-drop support index out of range")
        psi = np.zeros(g.n)
        psi[nodes] = values
        i, j = g.edges[:, 0], g.edges[:, 1]
        pair_drop = 0.5 * (psi[i] + psi[j])
        w = g.weights * (1.0 - pair_drop)
        adj = _dense_or_sparse(g.n, i, j, w)
        half = -0.5 * g.weights

        def chain(gp):
            contrib = gp * half
            full = np.bincount(i, contrib, minlength=g.n) + np.bincount(j, contrib, minlength=g.n)
            return full[nodes]

        return _Relaxed(adj, g.edges, chain)
    # feature masking on the bipartite graph
    if g.features is None:
        raise ValueError("feature masking needs node features")
    x = g.features
    r, c = plan.support[:, 0], plan.support[:, 1]
    if len(r) and np.any(x[r, c] <= 0):
        raise ValueError("feature-mask support contains a zero feature cell")
    x0 = x[r, c]
    xr = x.copy()
    xr[r, c] = x0 * (1.0 - values)
    pairs = np.stack([r, g.n + c], axis=1)
    return _Relaxed(None, pairs, lambda gp: -x0 * gp, features=xr)


def _relaxed_spectrum(g: Graph, relaxed: _Relaxed, k: int, feature_route: str = "svd", seed: int = 0):
    """``(SpectralPair, degrees)`` of the relaxed graph (bipartite for features)."""
    if relaxed.features is not None:
        x = relaxed.features
        degrees = np.concatenate([x.sum(axis=1), x.sum(axis=0)])
        if feature_route == "svd":
            return bipartite_spectrum(x, k), degrees
        return eig_sym_dense(normalized_laplacian_from_adjacency(bipartite_adjacency(x))).truncate(k), degrees
    adj = relaxed.adjacency
    degrees = np.asarray(adj.sum(axis=1)).ravel()
    lap = normalized_laplacian_from_adjacency(adj, sparse=sp.issparse(adj))
    return lowest_eigenpairs(lap, k, seed=seed), degrees


def _check_k(g: Graph, plan: PerturbationPlan, k: int) -> None:
    size = g.n + g.features.shape[1] if plan.mode is Mode.FEATURE_MASK and g.features is not None else g.n
    if not 1 <= k <= size:
        raise ValueError(f"K={k} out of range [1, {size}]")


def reference_eigenvalues(g: Graph, mode, k: int, feature_route: str = "svd") -> np.ndarray:
    """``K`` lowest eigenvalues of the unperturbed graph (bipartite for features)."""
    mode = Mode(mode)
    empty = PerturbationPlan(mode, np.zeros((0,) if mode is Mode.NODE_DROP else (0, 2), dtype=np.int64), [], 0.0)
    _check_k(g, empty, k)
    relaxed = _relax(g, empty, np.zeros(0))
    return _relaxed_spectrum(g, relaxed, k, feature_route)[0].eigenvalues


def loss_and_gradient(
    g: Graph,
    plan: PerturbationPlan,
    k: int,
    values: Optional[np.ndarray] = None,
    reference: Optional[np.ndarray] = None,
    feature_route: str = "svd",
    want_gradient: bool = True,
):
    """Spectral-change loss and its gradient w.r.t. the plan values.

    The gradient is ``2 sum_k (lam'_k - lam_k) d lam'_k / d value`` with the
    eigenvalue derivatives evaluated at the relaxed graph.

    Returns
    -------
    loss : float
    grad : ndarray or None
    """
    _check_k(g, plan, k)
    values = plan.values if values is None else np.asarray(values, dtype=float)
    if reference is None:
        reference = reference_eigenvalues(g, plan.mode, k, feature_route)
    relaxed = _relax(g, plan, values)
    pair, degrees = _relaxed_spectrum(g, relaxed, k, feature_route)
    diff = pair.eigenvalues - reference
    loss = float(diff @ diff)
    if not want_gradient:
        return loss, None
    if len(relaxed.pairs) == 0:
        return loss, np.zeros(len(values))
    dlam = eigenvalue_derivatives(pair, degrees, relaxed.pairs)
    return loss, relaxed.chain(2.0 * dlam @ diff)


def spectral_change_loss(g: Graph, plan: PerturbationPlan, k: int, feature_route: str = "svd") -> float:
    """``||eig_K(relaxed) - eig_K(original)||^2`` for the plan's continuous values.

    Edge drop scales ``w`` by ``1 - v``; edge add inserts weight ``v``; node
    drop scales ``w_ij`` by ``1 - (psi_i + psi_j) / 2``; feature masking scales
    ``x`` by ``1 - v`` inside the node/feature bipartite graph. Feature losses
    use the singular-value route by default (``feature_route="direct"``
    decomposes the bipartite Laplacian instead).
    """
    return loss_and_gradient(g, plan, k, feature_route=feature_route, want_gradient=False)[0]


def analytic_gradient(g: Graph, plan: PerturbationPlan, k: int, feature_route: str = "svd") -> np.ndarray:
    """Closed-form gradient of :func:`spectral_change_loss` over the support."""
    return loss_and_gradient(g, plan, k, feature_route=feature_route)[1]


# --------------------------------------------------------------------------
# projection and optimization


def project_budget(values, budget: float) -> np.ndarray:
    """Euclidean projection onto ``{v in [0, 1]^s : sum(v) <= budget}``.

    Clip to the box; if the budget is still exceeded, find the shift ``t >= 0``
    with ``sum(clip(v - t, 0, 1)) = budget`` by bisection, then polish ``t``
    in closed form on the bracketed active set.

    Examples
    --------
    >>> project_budget([0.5, 0.5], 0.6)
    array([0.3, 0.3])
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    v = np.asarray(values, dtype=float)
    out = np.clip(v, 0.0, 1.0)
    if out.sum() <= budget:
        return out
    if budget == 0:
        return np.zeros_like(out)

    def excess(t):
        return np.clip(v - t, 0.0, 1.0).sum() - budget

    lo, hi = 0.0, float(v.max())
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    shifted = v - hi
    free = (shifted > 0) & (shifted < 1)
    if free.any():
        t = (v[free].sum() + np.count_nonzero(shifted >= 1) - budget) / free.sum()
        if lo - 1e-9 <= t <= hi + 1e-9 and excess(t) <= 1e-12:
            hi = t
    out = np.clip(v - hi, 0.0, 1.0)
    if out.sum() > budget:
        out *= budget / out.sum()
    return out


def pgd_optimize(
    g: Graph,
    plan: PerturbationPlan,
    k: int,
    eta: float = 0.1,
    iterations: int = 20,
    maximize: Optional[bool] = None,
    weight: float = 1.0,
    reference: Optional[np.ndarray] = None,
    feature_route: str = "svd",
    return_history: bool = False,
    normalize: bool = True,
):
    """Projected gradient ascent (or descent) on the spectral-change loss.

    Eigenpairs are recomputed at every iterate. The best feasible iterate seen
    (by loss, ties keep the earliest) is returned, so the result is never worse
    than the starting plan.

    Parameters
    ----------
    maximize : bool, optional
        Defaults to the mode's direction (ascent except for edge adding).
    weight : float
        Multiplies the step, e.g. the topology or feature constraint weight.
    return_history : bool
        Also return the list of losses at each evaluated iterate.
    normalize : bool
        Scale each step so its largest entry is ``eta * weight``. Spectral
        losses on sparse graphs are tiny (often below 1e-4), so raw gradient
        steps of any sensible ``eta`` leave the plan where it started.
    """
    maximize = plan.mode.maximize if maximize is None else maximize
    if reference is None:
        reference = reference_eigenvalues(g, plan.mode, k, feature_route)
    sign = 1.0 if maximize else -1.0
    values = project_budget(plan.values, plan.budget)
    best_values, best_loss = values, None
    history = []
    for step in range(iterations + 1):
        want = step < iterations
        loss, grad = loss_and_gradient(g, plan, k, values, reference, feature_route, want_gradient=want)
        history.append(loss)
        if best_loss is None or sign * loss > sign * best_loss:
            best_values, best_loss = values, loss
        if not want or len(values) == 0:
            break
        if normalize:
            scale = np.abs(grad).max()
            grad = grad / scale if scale > 0 else grad
        values = project_budget(values + sign * eta * weight * grad, plan.budget)
    result = plan.with_values(best_values)
    return (result, history) if return_history else result


def optimize_plan(
    g: Graph,
    mode,
    budget: float,
    k: int,
    eta: float = 0.1,
    iterations: int = 20,
    seed: int = 0,
    weight: float = 1.0,
    reference: Optional[np.ndarray] = None,
    feature_route: str = "svd",
) -> PerturbationPlan:
    """Optimize a plan from the jittered start and from its mirror image.

    The near-uniform start sits at a stationary point of the loss (for edge
    dropping the relaxed graph is a rescaled copy of the original). The jitter
    picks one escape direction; the mirrored jitter ``2 * base - v`` picks the
    opposite one, and the run with the better final loss wins (the jittered
    start on ties).
    """
    mode = Mode(mode)
    start = init_plan(g, mode, budget, seed=seed)
    if len(start) == 0 or budget <= 0:
        return start
    if reference is None:
        reference = reference_eigenvalues(g, mode, k, feature_route)
    base = min(0.5, budget / len(start))
    mirror = start.with_values(project_budget(2.0 * base - start.values, budget))
    sign = 1.0 if mode.maximize else -1.0
    best, best_loss = None, None
    for begin in (start, mirror):
        plan, hist = pgd_optimize(
            g, begin, k, eta, iterations, weight=weight, reference=reference,
            feature_route=feature_route, return_history=True,
        )
        loss = max(hist) if mode.maximize else min(hist)
        if best is None or sign * loss > sign * best_loss:
            best, best_loss = plan, loss
    return best


# --------------------------------------------------------------------------
# sampling and views


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def gumbel_relaxed(values, tau: float, seed=None) -> np.ndarray:
    """Binary-concrete sample ``sigmoid((logit(p) + g1 - g2) / tau)`` per entry.

    ``g1, g2`` are independent standard Gumbel draws ``-log(-log(u))``.
    Probabilities are clamped to ``[1e-9, 1 - 1e-9]``.
    """
    if tau <= 0:
        raise ValueError("temperature must be positive")
    p = np.clip(np.asarray(values, dtype=float), 1e-9, 1.0 - 1e-9)
    rng = _rng(seed)
    tiny = np.finfo(float).tiny
    u = np.clip(rng.random((2,) + p.shape), tiny, 1.0 - 1e-16)
    g = -np.log(-np.log(u))
    return expit((logit(p) + g[0] - g[1]) / tau)


def gumbel_sample(values, tau: float, seed=None) -> np.ndarray:
    """Hard flip mask: the binary-concrete sample thresholded at 0.5.

    Each entry is exactly Bernoulli(p) distributed whatever ``tau`` is.
    """
    return (gumbel_relaxed(values, tau, seed) > 0.5).astype(np.int8)


def apply_plan(g: Graph, plan: PerturbationPlan, mask, seed: Optional[int] = None) -> AugmentedView:
    """Apply a binary flip mask aligned with the plan's support.

    Edge drop removes masked edges, edge add inserts masked pairs with weight
    1, node drop removes every edge incident to a masked node (the node stays,
    isolated), feature masking zeroes masked feature cells.
    """
    mask = np.asarray(mask).reshape(-1).astype(bool)
    if len(mask) != len(plan.support):
        raise ValueError(f"mask has {len(mask)} entries, support has {len(plan.support)}")
    mode = plan.mode
    if mode is Mode.EDGE_DROP:
        idx = _edge_index(g, plan.support)
        keep = np.ones(g.m, dtype=bool)
        keep[idx[mask]] = False
        out = Graph(g.n, g.edges[keep], g.weights[keep], g.features, g.labels)
    elif mode is Mode.EDGE_ADD:
        new = plan.support[mask]
        present = g.edge_set()
        if any((min(a, b), max(a, b)) in present for a, b in new.tolist()):
            raise ValueError("edge-add support contains an existing edge")
        out = Graph(
            g.n,
            np.vstack([g.edges, new]),
            np.concatenate([g.weights, np.ones(len(new))]),
            g.features,
            g.labels,
        )
    elif mode is Mode.NODE_DROP:
        dropped = np.zeros(g.n, dtype=bool)
        dropped[plan.support[mask]] = True
        keep = ~(dropped[g.edges[:, 0]] | dropped[g.edges[:, 1]])
        out = Graph(g.n, g.edges[keep], g.weights[keep], g.features, g.labels)
    else:
        if g.features is None:
            raise ValueError("feature masking needs node features")
        x = g.features.copy()
        cells = plan.support[mask]
        x[cells[:, 0], cells[:, 1]] = 0.0
        out = g.with_features(x)
    return AugmentedView(out, mode, mask.astype(np.int8), seed)


def write_plan_json(plan: PerturbationPlan, target) -> None:
    from .io import _dump

    _dump(plan.to_dict(), target)


def read_plan_json(source) -> PerturbationPlan:
    from .io import _load

    return PerturbationPlan.from_dict(_load(source))
