"""The ten acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion NN PASS/FAIL`` line (also collected in the
terminal summary) and then asserts. Oracles are built here from dense numpy
decompositions and brute force, independent of the package's own self-checks.
"""

import itertools
import math
import time

import numpy as np
from scipy.stats import pearsonr

from ciaug import RpgParams
from ciaug.augment import Mode, PerturbationPlan, analytic_gradient, default_support, gumbel_sample, project_budget
from ciaug.contrastive import PipelineConfig, info_nce
from ciaug.graph import bipartite_adjacency, normalized_laplacian, normalized_laplacian_from_adjacency
from ciaug.perturbation import eigenvalue_change_single_flip, perturbation_bounds
from ciaug.spectral import eig_sym_dense, lanczos_lowest_k, truncated_svd_normalized
from ciaug.verify import ExperimentConfig, connected_weighted_er, experiment, positive_features, run_experiment
from ciaug import generate_er


def dense_lap(a):
    return normalized_laplacian_from_adjacency(a)


def relaxed_matrix(g, mode, support, values):
    """Relaxed adjacency (bipartite for features), built entry by entry."""
    if mode is Mode.FEATURE_MASK:
        x = g.features.copy()
        for (r, c), v in zip(support, values):
            x[r, c] *= 1 - v
        return bipartite_adjacency(x)
    a = g.adjacency()
    if mode is Mode.EDGE_DROP:
        for (i, j), v in zip(support, values):
            a[i, j] = a[j, i] = a[i, j] * (1 - v)
    elif mode is Mode.EDGE_ADD:
        for (i, j), v in zip(support, values):
            a[i, j] = a[j, i] = v
    else:
        keep = np.ones(g.n)
        keep[support] = 1 - np.asarray(values)
        a = a * (keep[:, None] + keep[None, :]) / 2
    return a


def oracle_loss(g, mode, support, values, k):
    zero = relaxed_matrix(g, mode, support, np.zeros(len(values)))
    before = np.linalg.eigvalsh(dense_lap(zero))[:k]
    after = np.linalg.eigvalsh(dense_lap(relaxed_matrix(g, mode, support, values)))[:k]
    return float(np.sum((after - before) ** 2))


def exact_projection(v, budget):
    """Projection via the piecewise-linear dual: exact root between breakpoints."""
    v = np.asarray(v, dtype=float)
    if np.clip(v, 0, 1).sum() <= budget:
        return np.clip(v, 0, 1)

    def f(t):
        return np.clip(v - t, 0, 1).sum() - budget

    knots = np.unique(np.concatenate([v, v - 1, [0.0]]))
    knots = knots[knots >= 0]
    values = [f(t) for t in knots]
    for a, b, fa, fb in zip(knots[:-1], knots[1:], values[:-1], values[1:]):
        if fa >= 0 >= fb:
            t = a if fa == fb else a + (b - a) * fa / (fa - fb)
            return np.clip(v - t, 0, 1)
    return np.clip(v - knots[-1], 0, 1)


# ---------------------------------------------------------------- 1


def test_criterion_01_gradient_correctness(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    h, k = 1e-5, 6
    worst, used, skipped = 0.0, 0, 0
    for _ in range(20):
        g = connected_weighted_er(12, 0.4, int(rng.integers(2**31)))
        g = g.with_features(positive_features(12, 8, rng))
        for mode in Mode:
            support = default_support(g, mode)
            values = rng.uniform(0.1, 0.4, len(support))
            lam = np.linalg.eigvalsh(dense_lap(relaxed_matrix(g, mode, support, values)))[: k + 1]
            if np.min(np.diff(lam)) <= 1e-3:
                skipped += 1
                continue
            plan = PerturbationPlan(mode, support, values, float(len(support)))
            grad = analytic_gradient(g, plan, k)
            fd = np.empty(len(values))
            for e in range(len(values)):
                up, down = values.copy(), values.copy()
                up[e] += h
                down[e] -= h
                fd[e] = (oracle_loss(g, mode, support, up, k) - oracle_loss(g, mode, support, down, k)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(grad - fd)) / max(np.max(np.abs(fd)), 1e-12)))
            used += 1
    elapsed = time.perf_counter() - start
    passed = worst <= 1e-4 and used > 0 and elapsed < 30
    verdict(1, "gradient_correctness", passed, f"max rel err {worst:.2e} over {used} plans ({skipped} gap-skipped), {elapsed:.1f}s")
    assert passed


# ---------------------------------------------------------------- 2


def test_criterion_02_bipartite_identity(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    val_err = vec_err = 0.0
    for _ in range(20):
        x = rng.uniform(0.01, 1.0, (10, 7))
        lam, vecs = np.linalg.eigh(dense_lap(bipartite_adjacency(x)))
        svd = truncated_svd_normalized(x, 7)
        val_err = max(val_err, float(np.max(np.abs(lam[:7] - (1 - svd.singular_values)))))
        stacked = np.vstack([svd.left_vectors, svd.right_vectors]) / math.sqrt(2)
        for c in range(7):
            vec_err = max(vec_err, min(np.abs(vecs[:, c] - stacked[:, c]).max(), np.abs(vecs[:, c] + stacked[:, c]).max()))
    elapsed = time.perf_counter() - start
    passed = val_err <= 1e-8 and vec_err <= 1e-6 and elapsed < 5
    verdict(2, "bipartite_identity", passed, f"eigenvalue err {val_err:.2e}, eigenvector err {vec_err:.2e}, {elapsed:.2f}s")
    assert passed


# ---------------------------------------------------------------- 3


def test_criterion_03_bounds_sandwich(verdict):
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    worst, flips = -np.inf, 0
    for _ in range(50):
        n = int(rng.integers(5, 21))
        a = generate_er(n, 0.35, int(rng.integers(2**31))).adjacency()
        for v in np.flatnonzero(a.sum(axis=1) == 0):
            # degree-zero endpoints leave the derivative undefined; attach them
            a[v, (v + 1) % n] = a[(v + 1) % n, v] = 1.0
        sp = eig_sym_dense(dense_lap(a))
        deg = a.sum(axis=1)
        spread = np.sum(np.abs(sp.eigenvalues - 1))
        for i, j in itertools.combinations(range(n), 2):
            dw = -1.0 if a[i, j] else 1.0
            total = eigenvalue_change_single_flip(sp, i, j, dw, deg).total_absolute_change
            dist = np.sum((sp.eigenvectors[i] - sp.eigenvectors[j]) ** 2)
            lo, hi = perturbation_bounds(sp, i, j)
            assert abs(lo - (dist - spread)) <= 1e-12 and abs(hi - (dist + spread)) <= 1e-12
            worst = max(worst, lo - total, total - hi)
            flips += 1
    elapsed = time.perf_counter() - start
    passed = worst <= 1e-8 and elapsed < 10
    verdict(3, "bounds_sandwich", passed, f"worst violation {max(worst, 0):.2e} over {flips} flips, {elapsed:.1f}s")
    assert passed


# ---------------------------------------------------------------- 4


def test_criterion_04_first_order_consistency(verdict):
    rng = np.random.default_rng(5)

    def error(a, i, j, dw):
        sp = eig_sym_dense(dense_lap(a))
        est = sp.eigenvalues + eigenvalue_change_single_flip(sp, i, j, dw, a.sum(axis=1)).per_eigenvalue_changes
        b = a.copy()
        b[i, j] += dw
        b[j, i] += dw
        return float(np.max(np.abs(np.linalg.eigvalsh(dense_lap(b)) - est)))

    big = small = 0.0
    for _ in range(20):
        g = connected_weighted_er(12, 0.4, int(rng.integers(2**31)))
        i, j = g.edges[rng.integers(g.m)]
        a = g.adjacency()
        big = max(big, error(a, i, j, 1e-3))
        small = max(small, error(a, i, j, 5e-4))
    ratio = big / small
    passed = ratio >= 3
    verdict(4, "first_order_consistency", passed, f"error shrink factor {ratio:.2f} (max err {big:.2e} -> {small:.2e})")
    assert passed


# ---------------------------------------------------------------- 5


def test_criterion_05_lanczos_accuracy(verdict):
    g = generate_er(200, 0.05, 0)
    lap = normalized_laplacian(g, sparse=True)
    pair = lanczos_lowest_k(lambda v: lap @ v, g.n, 6, seed=0)
    err = float(np.max(np.abs(pair.eigenvalues - np.linalg.eigvalsh(lap.toarray())[:6])))
    passed = err <= 1e-6
    verdict(5, "lanczos_accuracy", passed, f"max eigenvalue err {err:.2e}")
    assert passed


# ---------------------------------------------------------------- 6


def test_criterion_06_projection_oracle(verdict):
    rng = np.random.default_rng(3)
    err = idem = 0.0
    for _ in range(100):
        v = rng.uniform(-0.5, 1.5, 3)
        budget = float(rng.uniform(0, 2.5))
        p = project_budget(v, budget)
        err = max(err, float(np.max(np.abs(p - exact_projection(v, budget)))))
        idem = max(idem, float(np.max(np.abs(project_budget(p, budget) - p))))
    passed = err <= 1e-6 and idem <= 1e-10
    verdict(6, "projection_oracle", passed, f"max err {err:.2e}, idempotence {idem:.2e}")
    assert passed


# ---------------------------------------------------------------- 7


def test_criterion_07_sampling_marginals(verdict):
    worst = 0.0
    for idx, p in enumerate((0.1, 0.3, 0.5, 0.9)):
        worst = max(worst, abs(gumbel_sample(np.full(10_000, p), 0.1, 100 + idx).mean() - p))
    passed = worst <= 0.02
    verdict(7, "sampling_marginals", passed, f"max |freq - p| {worst:.4f}")
    assert passed


# ---------------------------------------------------------------- 8


def test_criterion_08_community_preservation(verdict):
    cfg = ExperimentConfig(
        PipelineConfig(K=6, sigma_e=0.2, modes=("edge-drop",), num_clusters=8, seed=0),
        num_graphs=30,
        rpg=RpgParams(num_class=8, nodes_per_class=30, homophily=0.96, avg_degree=5.0),
    )
    start = time.perf_counter()
    summary = experiment(cfg)
    elapsed = time.perf_counter() - start
    ci = summary.mean_community_change["ci"]
    uniform = summary.mean_community_change["uniform"]
    corr = pearsonr([r.spectral_change for r in summary.rows], [r.community_change for r in summary.rows])[0]
    passed = ci <= 0.5 * uniform and corr < -0.3 and elapsed < 300
    verdict(
        8,
        "community_preservation",
        passed,
        f"ci {ci:.4f} vs uniform {uniform:.4f} (ratio {ci / uniform:.2f}, need <= 0.5); pearson {corr:+.3f} (need < -0.3); {elapsed:.0f}s",
    )
    assert passed


# ---------------------------------------------------------------- 9


def test_criterion_09_info_nce_values(verdict):
    same = info_nce(np.ones((4, 5)), np.ones((4, 5)), 0.2)
    ortho = info_nce(np.eye(2), np.eye(2), 1.0)
    passed = abs(same - math.log(3)) <= 1e-9 and abs(ortho + 1) <= 1e-9
    verdict(9, "info_nce_values", passed, f"identical batch {same:.12f} (log 3), orthogonal pair {ortho:.12f} (-1)")
    assert passed


# ---------------------------------------------------------------- 10


def test_criterion_10_determinism(verdict, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        '{"num_graphs": 4, "seed": 17, "M": 5, "T": 2, "modes": ["edge-drop", "edge-add", "node-drop"],'
        ' "rpg": {"num_class": 4, "nodes_per_class": 15}, "num_clusters": 4}'
    )
    run_experiment(cfg, tmp_path / "a.csv")
    run_experiment(cfg, tmp_path / "b.csv")
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    passed = a == b and len(a) > 0
    verdict(10, "determinism", passed, f"{len(a)} bytes, identical={a == b}")
    assert passed
