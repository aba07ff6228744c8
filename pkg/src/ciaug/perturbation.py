"""First-order eigenvalue changes under edge-weight flips, and their bounds.

For ``L = I - D^{-1/2} A D^{-1/2}`` with orthonormal eigenpairs ``(lam_y, u_y)``,
changing the weight of edge ``(i, j)`` by ``dw`` moves ``lam_y`` by::

    dw * ((1 - lam_y) * (u_iy**2 / d_i + u_jy**2 / d_j) - 2 u_iy u_jy / sqrt(d_i d_j))

to first order. In terms of ``y = D^{-1/2} u`` this is the familiar
``-(y^T dA y - mu y^T dD y)`` with ``mu = 1 - lam`` from the generalized problem
``A y = mu D y``. The shorthand ``dw * (2 u_i u_j - lam (u_i**2 + u_j**2))``
(:func:`adjacency_form_flip_change`) drops the degree scaling; it is what the
bounds in :func:`perturbation_bounds` are usually stated for, so both are kept.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .spectral import SpectralPair


@dataclass(frozen=True)
class FlipEstimate:
    per_eigenvalue_changes: np.ndarray

    @property
    def total_absolute_change(self) -> float:
        return float(np.sum(np.abs(self.per_eigenvalue_changes)))


def _inv(d):
    d = np.asarray(d, dtype=float)
    return np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 0.0)


def eigenvalue_derivatives(sp: SpectralPair, degrees: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """``d lam_k / d w_ij`` for every pair (rows) and retained eigenpair (columns).

    Degree-zero endpoints use the pseudo-inverse convention (their ``1/d``
    factors are 0), matching the Laplacian's treatment of isolated nodes.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    u = sp.eigenvectors
    lam = sp.eigenvalues
    inv_d = _inv(degrees)
    i, j = pairs[:, 0], pairs[:, 1]
    ui, uj = u[i], u[j]
    cross = np.sqrt(inv_d[i] * inv_d[j])[:, None]
    return (1.0 - lam)[None, :] * (ui**2 * inv_d[i, None] + uj**2 * inv_d[j, None]) - 2.0 * ui * uj * cross


def eigenvalue_change_single_flip(sp: SpectralPair, i: int, j: int, dw: float, degrees: np.ndarray) -> FlipEstimate:
    """First-order change of every retained eigenvalue when ``w_ij`` moves by ``dw``.

    Parameters
    ----------
    sp : SpectralPair
        Eigenpairs of the unperturbed normalized Laplacian.
    i, j : int
        Distinct endpoints.
    dw : float
        Weight change; ``-w_ij`` drops an edge, ``+1`` adds an unweighted one.
    degrees : ndarray
        Weighted degrees of the unperturbed graph.
    """
    if i == j:
        raise ValueError("flip endpoints must differ")
    return FlipEstimate(dw * eigenvalue_derivatives(sp, degrees, [(i, j)])[0])


def adjacency_form_flip_change(sp: SpectralPair, i: int, j: int, dw: float) -> FlipEstimate:
    """``dw * (2 u_i u_j - lam (u_i**2 + u_j**2))`` for each retained eigenpair.

    This is the generalized-eigenproblem closed form evaluated with the
    Laplacian's orthonormal eigenvectors. It is not the derivative of the
    Laplacian eigenvalues (it ignores the degree scaling) but it is the
    expression whose magnitude the spectral-distance bounds control.
    """
    if i == j:
        raise ValueError("flip endpoints must differ")
    u, lam = sp.eigenvectors, sp.eigenvalues
    return FlipEstimate(dw * (2.0 * u[i] * u[j] - lam * (u[i] ** 2 + u[j] ** 2)))


def spectral_change_estimate(
    sp: SpectralPair, flips: Iterable[tuple[int, int, float]], degrees: np.ndarray
) -> FlipEstimate:
    """Superposition of single-flip first-order changes over distinct pairs."""
    flips = list(flips)
    seen = set()
    for i, j, _ in flips:
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"duplicate flip pair {key}")
        if i == j:
            raise ValueError("flip endpoints must differ")
        seen.add(key)
    if not flips:
        return FlipEstimate(np.zeros(sp.k))
    pairs = np.array([(i, j) for i, j, _ in flips])
    dw = np.array([w for _, _, w in flips], dtype=float)
    return FlipEstimate(dw @ eigenvalue_derivatives(sp, degrees, pairs))


def perturbation_bounds(
    sp: SpectralPair,
    i: int,
    j: int,
    mode: Literal["topology", "bipartite"] = "topology",
    n_nodes: int | None = None,
) -> tuple[float, float]:
    """Spectral-distance bounds on the absolute eigenvalue change of one flip.

    ``upper = ||U_i - U_j||^2 + sum_k |lam_k - 1|`` and, in topology mode,
    ``lower = ||U_i - U_j||^2 - sum_k |lam_k - 1|``. In bipartite mode ``i`` must
    be a node row (``< n_nodes``) and ``j`` a feature row, and ``lower`` is 0.

    With a truncated spectrum only the retained eigenpairs enter, which makes
    the bounds approximate.
    """
    rows = sp.eigenvectors.shape[0]
    if mode == "topology":
        if not (0 <= i < rows and 0 <= j < rows):
            raise IndexError(f"node index out of range [0, {rows})")
    elif mode == "bipartite":
        if n_nodes is None:
            raise ValueError("bipartite mode needs n_nodes")
        if not (0 <= i < n_nodes <= j < rows):
            raise IndexError(f"need 0 <= i < {n_nodes} <= j < {rows}")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    u = sp.eigenvectors
    dist = float(np.sum((u[i] - u[j]) ** 2))
    spread = float(np.sum(np.abs(sp.eigenvalues - 1.0)))
    lower = dist - spread if mode == "topology" else 0.0
    return lower, dist + spread
