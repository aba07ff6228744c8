"""Eigendecompositions of normalized Laplacians and the bipartite SVD route.

The dense path wraps LAPACK (``numpy.linalg.eigh``). The selective path is a
thick-restart Lanczos iteration with full reorthogonalization, so it only needs
matrix-vector products.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .graph import Graph, normalized_laplacian, normalized_laplacian_from_adjacency

#: graphs with at most this many nodes are decomposed densely
DENSE_THRESHOLD = 256


class ConvergenceError(RuntimeError):
    """Raised when Lanczos exhausts its restart budget."""


@dataclass(frozen=True)
class SpectralPair:
    """Ascending eigenvalues with their orthonormal eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def truncate(self, k: int) -> "SpectralPair":
        return SpectralPair(self.eigenvalues[:k], self.eigenvectors[:, :k])


@dataclass(frozen=True)
class SvdTriple:
    """Leading singular triplets of ``D_u^{-1/2} X D_v^{-1/2}``.

    ``row_degrees`` and ``col_degrees`` are the diagonals of ``D_u`` and ``D_v``.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    row_degrees: np.ndarray
    col_degrees: np.ndarray

    def bipartite_pair(self) -> SpectralPair:
        """Eigenpairs ``(1 - s_k, [u_k; v_k] / sqrt(2))`` of the bipartite Laplacian.

        Valid when ``X`` has no all-zero row or column.
        """
        vecs = np.vstack([self.left_vectors, self.right_vectors]) / np.sqrt(2.0)
        return SpectralPair(1.0 - self.singular_values, vecs)


def fix_signs(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip columns so the first component with ``|x| > tol`` is nonnegative."""
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.size == 0:
        return vectors
    big = np.abs(vectors) > tol
    first = np.argmax(big, axis=0)
    lead = vectors[first, np.arange(vectors.shape[1])]
    vectors[:, lead < 0] *= -1.0
    return vectors


def eig_sym_dense(m, symmetry_tol: float = 1e-10) -> SpectralPair:
    """Full eigendecomposition of a symmetric matrix, ascending, sign-fixed."""
    m = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if m.size and np.max(np.abs(m - m.T)) > symmetry_tol:
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh(m)
    return SpectralPair(vals, fix_signs(vecs))


def _thick_restart(apply, n, k, rng, tol, max_restarts, m_max, b, lock):
    """One thick-restart Lanczos run in the orthogonal complement of ``lock``."""
    room = n - lock.shape[1]
    k = min(k, room)
    m_max = min(m_max, room)

    def orthonormal_block(block, basis):
        full = np.hstack([lock, basis])
        # two passes of classical Gram-Schmidt ("twice is enough")
        for _ in range(2):
            block = block - full @ (full.T @ block)
        q, r = np.linalg.qr(block)
        good = np.abs(np.diag(r)) > 1e-10 * max(1.0, np.abs(r).max(initial=0.0))
        q = q[:, good]
        missing = block.shape[1] - q.shape[1]
        # breakdown: continue with fresh random directions
        for _ in range(10):
            if missing == 0 or basis.shape[1] + q.shape[1] >= room:
                break
            full = np.hstack([lock, basis, q])
            extra = rng.standard_normal((n, missing))
            for _ in range(2):
                extra = extra - full @ (full.T @ extra)
            qe, re = np.linalg.qr(extra)
            ok = np.abs(np.diag(re)) > 1e-8
            q = np.hstack([q, qe[:, ok]])
            missing -= int(ok.sum())
        return q

    V = np.zeros((n, 0))
    W = np.zeros((n, 0))
    Q = orthonormal_block(rng.standard_normal((n, b)), V)
    theta = y = res = None
    for _restart in range(max_restarts + 1):
        while Q.shape[1] and V.shape[1] < m_max:
            Q = Q[:, : m_max - V.shape[1]]
            V = np.hstack([V, Q])
            W = np.hstack([W, np.asarray(apply(Q)).reshape(n, -1)])
            Q = orthonormal_block(W[:, -Q.shape[1]:], V) if V.shape[1] < room else Q[:, :0]
        T = V.T @ W
        T = 0.5 * (T + T.T)
        theta_all, s = np.linalg.eigh(T)
        theta = theta_all[:k]
        y = V @ s[:, :k]
        res = np.linalg.norm(W @ s[:, :k] - y * theta, axis=0)
        if np.all(res <= tol) or V.shape[1] >= room:
            return theta, y, res
        keep = min(V.shape[1], k + max(2, k // 2))
        V = V @ s[:, :keep]
        W = W @ s[:, :keep]
        # the pending block is orthogonal to the old basis, hence to the kept Ritz vectors
        Q = orthonormal_block(Q if Q.shape[1] else rng.standard_normal((n, b)), V)
    raise ConvergenceError(f"Lanczos did not converge in {max_restarts} restarts (max residual {res.max():.2e})")


def lanczos_lowest_k(
    apply: Callable[[np.ndarray], np.ndarray],
    n: int,
    k: int,
    seed: int = 0,
    tol: float = 1e-8,
    max_restarts: int | None = None,
    basis_size: int | None = None,
    block_size: int = 1,
) -> SpectralPair:
    """The ``k`` smallest eigenpairs of a symmetric operator.

    Thick-restart Lanczos with full (two-pass) reorthogonalization: the Krylov
    basis is grown, Ritz pairs are extracted by Rayleigh-Ritz, and each restart
    keeps the lowest Ritz vectors plus the pending Lanczos direction.

    A single Krylov sequence sees one copy of each repeated eigenvalue, so after
    convergence the converged vectors are locked and the search is repeated in
    their orthogonal complement. Anything found below the current ``k``-th
    eigenvalue is merged in by a final Rayleigh-Ritz step; this recovers the
    repeated zero eigenvalues of disconnected graphs.

    Parameters
    ----------
    apply : callable
        ``V -> A @ V`` for the symmetric operator ``A``; must accept ``(n, b)`` arrays.
    n : int
        Operator dimension.
    k : int
        Number of eigenpairs, ``1 <= k <= n``.
    seed : int
        Seed of the random start vectors.
    tol : float
        Convergence threshold on ``||A y - theta y||`` per Ritz pair.
    max_restarts : int, optional
        Restart cap per Lanczos run, default ``10 * k``.
    basis_size : int, optional
        Maximum basis size per cycle, default ``max(3k + 20, 40)`` capped at ``n``.
    block_size : int
        Vectors added per Lanczos step.

    Raises
    ------
    ConvergenceError
        If the residuals do not reach ``tol`` within the restart cap.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    max_restarts = 10 * k if max_restarts is None else max_restarts
    b = max(1, min(n, block_size))
    m_max = min(n, max(basis_size or max(3 * k + 20, 40), k + 2 * b))
    rng = np.random.default_rng(seed)

    theta, y, _ = _thick_restart(apply, n, k, rng, tol, max_restarts, m_max, b, np.zeros((n, 0)))
    for _round in range(n):
        if y.shape[1] >= n:
            break
        theta_z, z, _ = _thick_restart(apply, n, k, rng, tol, max_restarts, m_max, b, y)
        if theta_z[0] >= theta[-1] - tol:
            break
        basis = np.hstack([y, z])
        t = basis.T @ np.asarray(apply(basis)).reshape(n, -1)
        vals, s = np.linalg.eigh(0.5 * (t + t.T))
        theta, y = vals[:k], basis @ s[:, :k]
    res = np.linalg.norm(np.asarray(apply(y)).reshape(n, -1) - y * theta, axis=0)
    if np.any(res > tol) and k < n:
        raise ConvergenceError(f"Lanczos residual {res.max():.2e} above tolerance {tol:.0e}")
    # re-orthonormalize the Ritz vectors against accumulated rounding
    q, r = np.linalg.qr(y)
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    return SpectralPair(theta, fix_signs(q))


def lowest_eigenpairs(lap, k: int | None = None, seed: int = 0, dense_threshold: int = DENSE_THRESHOLD) -> SpectralPair:
    """``k`` lowest eigenpairs of a symmetric matrix, dense or Lanczos by size."""
    n = lap.shape[0]
    k = n if k is None else k
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= K <= n, got K={k}, n={n}")
    if n <= dense_threshold or k == n:
        return eig_sym_dense(lap).truncate(k)
    op = sp.csr_matrix(lap)
    return lanczos_lowest_k(lambda v: op @ v, n, k, seed=seed)


def graph_spectrum(g: Graph, k: int | None = None, seed: int = 0, dense_threshold: int = DENSE_THRESHOLD) -> SpectralPair:
    """``k`` lowest eigenpairs of the normalized Laplacian of ``g``."""
    sparse = g.n > dense_threshold
    return lowest_eigenpairs(normalized_laplacian(g, sparse=sparse), k, seed=seed, dense_threshold=dense_threshold)


def normalized_feature_matrix(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(D_u^{-1/2} X D_v^{-1/2}, row degrees, column degrees)`` (pseudo-inverse at 0)."""
    x = np.asarray(x, dtype=float)
    du = x.sum(axis=1)
    dv = x.sum(axis=0)
    su = np.where(du > 0, 1.0 / np.sqrt(np.where(du > 0, du, 1.0)), 0.0)
    sv = np.where(dv > 0, 1.0 / np.sqrt(np.where(dv > 0, dv, 1.0)), 0.0)
    return su[:, None] * x * sv[None, :], du, dv


def truncated_svd_normalized(x: np.ndarray, k: int) -> SvdTriple:
    """``k`` largest singular triplets of the degree-normalized feature matrix.

    Uses LAPACK's SVD and truncates. Left vectors are sign-fixed (first
    significant component nonnegative) and right vectors follow them.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    if np.any(x < 0):
        raise ValueError("feature matrix must be nonnegative")
    n, d = x.shape
    if not 1 <= k <= min(n, d):
        raise ValueError(f"need 1 <= K <= min(n, d) = {min(n, d)}, got {k}")
    b, du, dv = normalized_feature_matrix(x)
    u, s, vt = np.linalg.svd(b, full_matrices=False)
    u, s, v = u[:, :k], s[:k], vt[:k].T
    signed = fix_signs(u)
    flip = np.sign(np.sum(signed * u, axis=0))
    flip[flip == 0] = 1.0
    return SvdTriple(s, u * flip, v * flip, du, dv)


def bipartite_eigenvalues(x: np.ndarray, k: int) -> np.ndarray:
    """``k`` smallest normalized-Laplacian eigenvalues of ``[[0, X], [X^T, 0]]``.

    Computed from the singular values ``s`` of the reduced normalized matrix:
    the spectrum is ``1 - s`` and ``1 + s``, a 0 for every zero row or column
    of ``X`` (isolated bipartite node) and 1 for the remaining dimensions.
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    if not 1 <= k <= n + d:
        raise ValueError(f"need 1 <= K <= n + d = {n + d}, got {k}")
    rows = x.sum(axis=1) > 0
    cols = x.sum(axis=0) > 0
    isolated = n + d - int(rows.sum() + cols.sum())
    s = np.zeros(0)
    if rows.any():
        b, _, _ = normalized_feature_matrix(x[np.ix_(rows, cols)])
        s = np.linalg.svd(b, compute_uv=False)
    ones = n + d - isolated - 2 * len(s)
    spectrum = np.concatenate([np.zeros(isolated), 1.0 - s, np.ones(ones), 1.0 + s])
    return np.sort(spectrum)[:k]


def bipartite_spectrum(x: np.ndarray, k: int) -> SpectralPair:
    """``k`` lowest eigenpairs of the bipartite Laplacian via the SVD.

    Isolated bipartite nodes (zero rows/columns of ``X``) contribute unit
    indicator eigenvectors with eigenvalue 0; every other pair is
    ``(1 - s, [u; v] / sqrt(2))`` from the SVD of the reduced matrix. When
    ``k`` reaches past those pairs into the eigenvalue-1 block the bipartite
    Laplacian is decomposed densely instead.
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    rows = np.flatnonzero(x.sum(axis=1) > 0)
    cols = np.flatnonzero(x.sum(axis=0) > 0)
    iso = np.concatenate([np.setdiff1d(np.arange(n), rows), n + np.setdiff1d(np.arange(d), cols)])
    r = min(len(rows), len(cols))
    if not 1 <= k <= n + d:
        raise ValueError(f"need 1 <= K <= n + d = {n + d}, got {k}")
    if k > len(iso) + r:
        return eig_sym_dense(bipartite_laplacian(x)).truncate(k)
    b, _, _ = normalized_feature_matrix(x[np.ix_(rows, cols)])
    u, s, vt = np.linalg.svd(b, full_matrices=False)
    vecs = np.zeros((n + d, r))
    vecs[rows] = u[:, :r]
    vecs[n + cols] = vt[:r].T
    vecs /= np.sqrt(2.0)
    iso_vecs = np.zeros((n + d, len(iso)))
    iso_vecs[iso, np.arange(len(iso))] = 1.0
    all_vals = np.concatenate([np.zeros(len(iso)), 1.0 - s[:r]])
    all_vecs = np.hstack([iso_vecs, vecs])
    order = np.argsort(all_vals, kind="stable")[:k]
    return SpectralPair(all_vals[order], fix_signs(all_vecs[:, order]))


def bipartite_laplacian(x: np.ndarray) -> np.ndarray:
    from .graph import bipartite_adjacency

    return normalized_laplacian_from_adjacency(bipartite_adjacency(x))
