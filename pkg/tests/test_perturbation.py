import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ciaug import generate_er
from ciaug.graph import normalized_laplacian, normalized_laplacian_from_adjacency
from ciaug.perturbation import (
    adjacency_form_flip_change,
    eigenvalue_change_single_flip,
    eigenvalue_derivatives,
    perturbation_bounds,
    spectral_change_estimate,
)
from ciaug.spectral import eig_sym_dense, graph_spectrum

from conftest import make_graph


def weighted_er(n, p, seed):
    g = generate_er(n, p, seed)
    rng = np.random.default_rng(seed + 1000)
    return make_graph(n, g.edges.tolist(), rng.uniform(0.5, 2.0, g.m).tolist())


def laplacian_derivative(a, i, j, h=1e-6):
    """Central difference of the Laplacian matrix in the weight of ``(i, j)``."""
    e = np.zeros_like(a)
    e[i, j] = e[j, i] = 1.0
    plus = normalized_laplacian_from_adjacency(a + h * e)
    minus = normalized_laplacian_from_adjacency(a - h * e)
    return (plus - minus) / (2 * h)


# ---------------------------------------------------------------- single flips


def test_zero_weight_change_gives_zero(k3):
    sp = graph_spectrum(k3)
    est = eigenvalue_change_single_flip(sp, 0, 1, 0.0, k3.degrees())
    assert np.all(est.per_eigenvalue_changes == 0) and est.total_absolute_change == 0


def test_adjacency_form_on_triangle(k3):
    sp = graph_spectrum(k3)
    est = adjacency_form_flip_change(sp, 0, 1, -1.0)
    assert est.per_eigenvalue_changes[0] == pytest.approx(-2 / 3, abs=1e-12)


def test_small_weight_change_matches_true_shift():
    g = weighted_er(12, 0.5, 3)
    lam, _ = np.linalg.eigh(normalized_laplacian(g))
    assert np.min(np.diff(lam)) > 1e-3  # simple spectrum
    sp = eig_sym_dense(normalized_laplacian(g))
    a = g.adjacency()
    dw = 1e-4
    for i, j in [tuple(g.edges[0]), tuple(g.edges[-1]), (0, 11)]:
        est = eigenvalue_change_single_flip(sp, i, j, dw, g.degrees()).per_eigenvalue_changes
        b = a.copy()
        b[i, j] += dw
        b[j, i] += dw
        true = np.linalg.eigvalsh(normalized_laplacian_from_adjacency(b)) - lam
        np.testing.assert_allclose(est, true, atol=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_derivative_matches_rayleigh_quotient_of_matrix_derivative(seed):
    g = weighted_er(10, 0.6, seed)
    a = g.adjacency()
    sp = eig_sym_dense(normalized_laplacian(g))
    pairs = np.array(list(itertools.combinations(range(10), 2)))
    got = eigenvalue_derivatives(sp, g.degrees(), pairs)
    for row, (i, j) in enumerate(pairs):
        dl = laplacian_derivative(a, i, j)
        oracle = np.einsum("ik,ij,jk->k", sp.eigenvectors, dl, sp.eigenvectors)
        np.testing.assert_allclose(got[row], oracle, atol=1e-7)


def test_flip_rejects_equal_endpoints(k3):
    sp = graph_spectrum(k3)
    with pytest.raises(ValueError):
        eigenvalue_change_single_flip(sp, 1, 1, 1.0, k3.degrees())
    with pytest.raises(ValueError):
        adjacency_form_flip_change(sp, 2, 2, 1.0)


# ---------------------------------------------------------------- superposition


def test_superposition_examples(k3):
    sp = graph_spectrum(k3)
    deg = k3.degrees()
    assert np.all(spectral_change_estimate(sp, [], deg).per_eigenvalue_changes == 0)
    single = eigenvalue_change_single_flip(sp, 0, 1, -1.0, deg).per_eigenvalue_changes
    np.testing.assert_array_equal(spectral_change_estimate(sp, [(0, 1, -1.0)], deg).per_eigenvalue_changes, single)
    other = eigenvalue_change_single_flip(sp, 1, 2, 0.5, deg).per_eigenvalue_changes
    both = spectral_change_estimate(sp, [(0, 1, -1.0), (1, 2, 0.5)], deg).per_eigenvalue_changes
    np.testing.assert_allclose(both, single + other, atol=1e-15)


def test_superposition_rejects_duplicates_and_loops(k3):
    sp = graph_spectrum(k3)
    with pytest.raises(ValueError, match="duplicate"):
        spectral_change_estimate(sp, [(0, 1, 1.0), (1, 0, 1.0)], k3.degrees())
    with pytest.raises(ValueError):
        spectral_change_estimate(sp, [(2, 2, 1.0)], k3.degrees())


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(-3, 3))
def test_estimate_is_linear_in_weight_changes(seed, dws, scale):
    g = weighted_er(8, 0.5, seed)
    sp = eig_sym_dense(normalized_laplacian(g))
    deg = g.degrees()
    pairs = [(0, 1), (2, 5), (3, 7)]
    flips = [(i, j, w) for (i, j), w in zip(pairs, dws)]
    base = spectral_change_estimate(sp, flips, deg).per_eigenvalue_changes
    scaled = spectral_change_estimate(sp, [(i, j, scale * w) for i, j, w in flips], deg).per_eigenvalue_changes
    np.testing.assert_allclose(scaled, scale * base, atol=1e-10)
    parts = sum(eigenvalue_change_single_flip(sp, i, j, w, deg).per_eigenvalue_changes for i, j, w in flips)
    np.testing.assert_allclose(base, parts, atol=1e-10)


# ---------------------------------------------------------------- bounds


def test_triangle_upper_bound(k3):
    lo, hi = perturbation_bounds(graph_spectrum(k3), 0, 1)
    assert hi == pytest.approx(4.0, abs=1e-12)
    assert lo == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_bounds_are_ordered_and_sandwich_the_estimate(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 16))
    g = generate_er(n, 0.4, seed)
    if np.any(g.degrees() == 0):
        extra = [(int(v), int((v + 1) % n)) for v in np.flatnonzero(g.degrees() == 0)]
        g = make_graph(n, sorted(g.edge_set() | {tuple(sorted(p)) for p in extra}))
    sp = eig_sym_dense(normalized_laplacian(g))
    present = g.edge_set()
    for i, j in itertools.combinations(range(n), 2):
        lo, hi = perturbation_bounds(sp, i, j)
        assert lo <= hi
        dw = -1.0 if (i, j) in present else 1.0
        total = eigenvalue_change_single_flip(sp, i, j, dw, g.degrees()).total_absolute_change
        assert lo - 1e-9 <= total <= hi + 1e-9


def test_bipartite_mode_has_zero_lower_bound():
    x = np.random.default_rng(0).uniform(0.1, 1, (4, 3))
    a = np.zeros((7, 7))
    a[:4, 4:] = x
    a[4:, :4] = x.T
    sp = eig_sym_dense(normalized_laplacian_from_adjacency(a))
    lo, hi = perturbation_bounds(sp, 1, 5, mode="bipartite", n_nodes=4)
    assert lo == 0.0 and hi >= 0
    with pytest.raises(IndexError):
        perturbation_bounds(sp, 5, 1, mode="bipartite", n_nodes=4)
    with pytest.raises(ValueError):
        perturbation_bounds(sp, 1, 5, mode="bipartite")


def test_bounds_index_errors(k3):
    sp = graph_spectrum(k3)
    with pytest.raises(IndexError):
        perturbation_bounds(sp, 0, 3)
    with pytest.raises(IndexError):
        perturbation_bounds(sp, -1, 1)
    with pytest.raises(ValueError):
        perturbation_bounds(sp, 0, 1, mode="other")
