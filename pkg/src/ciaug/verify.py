"""Self-checks of the numerical core and the community-preservation experiment."""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .augment import Mode, PerturbationPlan, default_support, gumbel_sample, loss_and_gradient, project_budget
from .augment import spectral_change_loss
from .contrastive import PipelineConfig, metrics_csv, run_pipeline
from .generators import RpgParams, generate_er, generate_rpg
from .graph import Graph, bipartite_adjacency, normalized_laplacian, normalized_laplacian_from_adjacency
from .perturbation import eigenvalue_change_single_flip, perturbation_bounds
from .spectral import eig_sym_dense, lanczos_lowest_k, truncated_svd_normalized

SUITES = ("all", "theorems", "gradients", "sampling")

DEFAULT_TOLERANCES = {
    "bounds_sandwich": 1e-8,
    "bipartite_identity": 1e-8,
    "bipartite_vectors": 1e-6,
    "first_order_ratio": 3.0,
    "lanczos_vs_dense": 1e-6,
    "gradient_fd": 1e-4,
    "projection_kkt": 1e-6,
    "gumbel_marginals": 0.02,
}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: measured={self.measured:.3e} tolerance={self.tolerance:.3e} {self.detail}".rstrip()


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = [c.line() for c in self.checks]
        out.append("OVERALL " + ("PASS" if self.overall else "FAIL"))
        return out


# --------------------------------------------------------------------------
# random instances shared by the checks and the tests


def connected_weighted_er(n: int, p: float, seed: int, weights=(1.0, 2.0)) -> Graph:
    """Weighted ER graph redrawn (seed, seed + 1000, ...) until connected."""
    from scipy.sparse.csgraph import connected_components

    s = seed
    while True:
        g = generate_er(n, p, s, weights=weights)
        if connected_components(g.adjacency(sparse=True), directed=False)[0] == 1:
            return g
        s += 1000


def positive_features(n: int, d: int, rng: np.random.Generator, density: float = 0.6) -> np.ndarray:
    """Nonnegative features with every row and column nonzero."""
    x = rng.uniform(0.2, 1.0, (n, d)) * (rng.random((n, d)) < density)
    x[np.arange(n), rng.integers(0, d, n)] = rng.uniform(0.2, 1.0, n)
    x[rng.integers(0, n, d), np.arange(d)] = rng.uniform(0.2, 1.0, d)
    return x


def relaxed_spectrum_gap(g: Graph, plan: PerturbationPlan, k: int) -> float:
    """Smallest gap among the ``k + 1`` lowest eigenvalues of the relaxed graph."""
    from .augment import _relax

    relaxed = _relax(g, plan, plan.values)
    if relaxed.features is not None:
        adj = bipartite_adjacency(relaxed.features)
    else:
        adj = relaxed.adjacency
        adj = adj.toarray() if hasattr(adj, "toarray") else adj
    lam = np.linalg.eigvalsh(normalized_laplacian_from_adjacency(adj))[: k + 1]
    return float(np.min(np.diff(lam))) if len(lam) > 1 else np.inf


# --------------------------------------------------------------------------
# individual checks


def check_bounds_sandwich(seed: int, tol: float, graphs: int = 50) -> Check:
    rng = np.random.default_rng(seed)
    worst, flips = -np.inf, 0
    for gi in range(graphs):
        n = int(rng.integers(5, 21))
        g = generate_er(n, 0.35, int(rng.integers(2**31)))
        if np.any(g.degrees() == 0):
            # degree-zero endpoints make the added-edge derivative undefined
            extra = [(v, (v + 1) % n) for v in np.flatnonzero(g.degrees() == 0)]
            g = Graph.from_adjacency(g.adjacency() + _pairs_adjacency(n, extra))
        sp = eig_sym_dense(normalized_laplacian(g))
        deg = g.degrees()
        present = g.edge_set()
        for i, j in itertools.combinations(range(n), 2):
            dw = -1.0 if (i, j) in present else 1.0
            total = eigenvalue_change_single_flip(sp, i, j, dw, deg).total_absolute_change
            lo, hi = perturbation_bounds(sp, i, j)
            worst = max(worst, lo - total, total - hi)
            flips += 1
    return Check("bounds_sandwich", worst <= tol, max(worst, 0.0), tol, f"({flips} flips)")


def _pairs_adjacency(n, pairs):
    a = np.zeros((n, n))
    for i, j in pairs:
        a[i, j] = a[j, i] = 1.0
    return a


def check_bipartite_identity(seed: int, tol_val: float, tol_vec: float, count: int = 20):
    rng = np.random.default_rng(seed)
    val_err = vec_err = 0.0
    for _ in range(count):
        x = rng.uniform(0.05, 1.0, (10, 7))
        k = min(x.shape)
        full = eig_sym_dense(normalized_laplacian_from_adjacency(bipartite_adjacency(x)))
        svd = truncated_svd_normalized(x, k)
        val_err = max(val_err, np.max(np.abs(full.eigenvalues[:k] - (1.0 - svd.singular_values))))
        stacked = np.vstack([svd.left_vectors, svd.right_vectors]) / np.sqrt(2.0)
        for c in range(k):
            f = full.eigenvectors[:, c]
            vec_err = max(vec_err, min(np.max(np.abs(f - stacked[:, c])), np.max(np.abs(f + stacked[:, c]))))
    return (
        Check("bipartite_identity", val_err <= tol_val, val_err, tol_val),
        Check("bipartite_vectors", vec_err <= tol_vec, vec_err, tol_vec),
    )


def first_order_errors(g: Graph, pair, dw: float) -> float:
    """Max eigenvalue error of the first-order estimate for one weight change."""
    i, j = pair
    a = g.adjacency()
    sp = eig_sym_dense(normalized_laplacian_from_adjacency(a))
    est = sp.eigenvalues + eigenvalue_change_single_flip(sp, i, j, dw, a.sum(axis=1)).per_eigenvalue_changes
    b = a.copy()
    b[i, j] += dw
    b[j, i] += dw
    exact = np.linalg.eigvalsh(normalized_laplacian_from_adjacency(b))
    return float(np.max(np.abs(exact - est)))


def check_first_order(seed: int, tol_ratio: float, graphs: int = 20) -> Check:
    rng = np.random.default_rng(seed)
    big = small = 0.0
    for gi in range(graphs):
        g = connected_weighted_er(12, 0.4, int(rng.integers(2**31)))
        pair = tuple(g.edges[rng.integers(g.m)])
        big = max(big, first_order_errors(g, pair, 1e-3))
        small = max(small, first_order_errors(g, pair, 5e-4))
    ratio = big / small if small > 0 else np.inf
    return Check("first_order_ratio", ratio >= tol_ratio, ratio, tol_ratio, "(error shrink factor, >=)")


def check_lanczos(seed: int, tol: float) -> Check:
    g = generate_er(200, 0.05, seed)
    lap = normalized_laplacian(g, sparse=True)
    pair = lanczos_lowest_k(lambda v: lap @ v, g.n, 6, seed=seed)
    dense = np.linalg.eigvalsh(lap.toarray())[:6]
    err = float(np.max(np.abs(pair.eigenvalues - dense)))
    return Check("lanczos_vs_dense", err <= tol, err, tol)


def finite_difference_gradient(g: Graph, plan: PerturbationPlan, k: int, h: float = 1e-5) -> np.ndarray:
    out = np.zeros(len(plan))
    for a in range(len(plan)):
        v = plan.values.copy()
        v[a] += h
        up = spectral_change_loss(g, plan.with_values(v), k)
        v[a] -= 2 * h
        down = spectral_change_loss(g, plan.with_values(v), k)
        out[a] = (up - down) / (2 * h)
    return out


def gradient_instances(seed: int, graphs: int = 20, k: int = 6):
    """``(graph, plan)`` pairs over all modes with interior values in [0.1, 0.4]."""
    rng = np.random.default_rng(seed)
    for gi in range(graphs):
        g = connected_weighted_er(12, 0.4, int(rng.integers(2**31)))
        g = g.with_features(positive_features(12, 8, rng))
        for mode in Mode:
            support = default_support(g, mode)
            values = rng.uniform(0.1, 0.4, len(support))
            yield g, PerturbationPlan(mode, support, values, float(len(support)))


def check_gradients(seed: int, tol: float, graphs: int = 20, k: int = 6) -> Check:
    worst, used, skipped = 0.0, 0, 0
    for g, plan in gradient_instances(seed, graphs, k):
        if relaxed_spectrum_gap(g, plan, k) <= 1e-3:
            skipped += 1
            continue
        analytic = loss_and_gradient(g, plan, k)[1]
        fd = finite_difference_gradient(g, plan, k)
        scale = max(np.max(np.abs(fd)), 1e-12)
        worst = max(worst, float(np.max(np.abs(analytic - fd)) / scale))
        used += 1
    return Check("gradient_fd", worst <= tol and used > 0, worst, tol, f"({used} plans, {skipped} skipped for small gaps)")


def kkt_projection(v: np.ndarray, budget: float) -> np.ndarray:
    """Exact projection by enumerating which entries sit at 0, at 1 or in between."""
    best, best_dist = None, np.inf
    s = len(v)
    for labels in itertools.product((0, 1, 2), repeat=s):
        lab = np.array(labels)
        free = lab == 2
        for active in (False, True):
            if active:
                if not free.any():
                    continue
                t = (v[free].sum() + np.count_nonzero(lab == 1) - budget) / free.sum()
                if t < -1e-12:
                    continue
            else:
                t = 0.0
            cand = np.where(lab == 0, 0.0, np.where(lab == 1, 1.0, v - t))
            ok = (
                np.all(cand[free] >= -1e-12)
                and np.all(cand[free] <= 1 + 1e-12)
                and np.all(v[lab == 0] - t <= 1e-12)
                and np.all(v[lab == 1] - t >= 1 - 1e-12)
                and cand.sum() <= budget + 1e-12
            )
            if ok:
                dist = float(np.sum((cand - v) ** 2))
                if dist < best_dist:
                    best, best_dist = cand, dist
    return best


def check_projection(seed: int, tol: float, count: int = 100) -> Check:
    rng = np.random.default_rng(seed)
    err = idem = 0.0
    for _ in range(count):
        v = rng.uniform(-0.5, 1.5, 3)
        budget = float(rng.uniform(0.0, 2.5))
        p = project_budget(v, budget)
        err = max(err, float(np.max(np.abs(p - kkt_projection(v, budget)))))
        idem = max(idem, float(np.max(np.abs(project_budget(p, budget) - p))))
    passed = err <= tol and idem <= 1e-10
    return Check("projection_kkt", passed, err, tol, f"(idempotence {idem:.1e})")


def check_gumbel(seed: int, tol: float, samples: int = 10_000, tau: float = 0.1) -> Check:
    worst = 0.0
    for idx, p in enumerate((0.1, 0.3, 0.5, 0.9)):
        freq = gumbel_sample(np.full(samples, p), tau, seed + idx).mean()
        worst = max(worst, abs(freq - p))
    return Check("gumbel_marginals", worst <= tol, worst, tol)


def run_verify(suite: str = "all", seed: int = 0, tolerances: Optional[dict] = None) -> VerifyReport:
    """Run the named suite; failures are report entries, never exceptions."""
    if suite not in SUITES:
        raise ValueError(f"suite must be one of {SUITES}")
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    jobs: list[tuple[str, Callable[[], object]]] = []
    if suite in ("all", "theorems"):
        jobs += [
            ("bounds_sandwich", lambda: check_bounds_sandwich(seed, tol["bounds_sandwich"])),
            (
                "bipartite_identity",
                lambda: check_bipartite_identity(seed, tol["bipartite_identity"], tol["bipartite_vectors"]),
            ),
            ("first_order_ratio", lambda: check_first_order(seed, tol["first_order_ratio"])),
            ("lanczos_vs_dense", lambda: check_lanczos(seed, tol["lanczos_vs_dense"])),
        ]
    if suite in ("all", "gradients"):
        jobs.append(("gradient_fd", lambda: check_gradients(seed, tol["gradient_fd"])))
    if suite in ("all", "sampling"):
        jobs += [
            ("projection_kkt", lambda: check_projection(seed, tol["projection_kkt"])),
            ("gumbel_marginals", lambda: check_gumbel(seed, tol["gumbel_marginals"])),
        ]
    report = VerifyReport()
    for name, job in jobs:
        try:
            out = job()
        except Exception as exc:  # a crashing check is a failed check
            out = Check(name, False, float("nan"), float(tol.get(name, float("nan"))), f"error: {exc}")
        report.checks.extend(out if isinstance(out, tuple) else [out])
    return report


# --------------------------------------------------------------------------
# community-preservation experiment


@dataclass(frozen=True)
class ExperimentConfig:
    """A pipeline configuration plus the RPG batch and the strategies to compare."""

    pipeline: PipelineConfig
    num_graphs: int = 30
    rpg: RpgParams = RpgParams()
    strategies: tuple = ("ci", "uniform")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        obj = dict(obj)
        num_graphs = int(obj.pop("num_graphs", 30))
        rpg = RpgParams(**obj.pop("rpg", {}))
        strategies = tuple(obj.pop("strategies", ("ci", "uniform")))
        obj.setdefault("modes", ["edge-drop"])
        pipeline = PipelineConfig.from_dict(obj)
        if num_graphs < 2:
            raise ValueError("num_graphs must be >= 2")
        for s in strategies:
            PipelineConfig.from_dict({**obj, "strategy": s})
        if not strategies:
            raise ValueError("at least one strategy is required")
        return cls(pipeline, num_graphs, rpg, strategies)

    def graphs(self) -> list[Graph]:
        seeds = np.random.SeedSequence([self.pipeline.seed, self.rpg.seed]).generate_state(self.num_graphs)
        out = []
        for s in seeds:
            params = RpgParams(self.rpg.num_class, self.rpg.nodes_per_class, self.rpg.homophily, self.rpg.avg_degree, int(s))
            out.append(generate_rpg(params))
        return out


@dataclass(frozen=True)
class ExperimentSummary:
    mean_community_change: dict
    mean_spectral_change: dict
    pearson: float
    rows: list

    def lines(self) -> list[str]:
        out = []
        for s in self.mean_community_change:
            out.append(
                f"# summary strategy={s} mean_community_change={self.mean_community_change[s]:.12g}"
                f" mean_spectral_change={self.mean_spectral_change[s]:.12g}"
            )
        out.append(f"# summary pearson_spectral_vs_community={self.pearson:.12g}")
        return out


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or np.std(x) == 0 or np.std(y) == 0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])


def experiment(cfg: ExperimentConfig) -> ExperimentSummary:
    graphs = cfg.graphs()
    rows = []
    for strategy in cfg.strategies:
        pc = PipelineConfig.from_dict({**cfg.pipeline.to_dict(), "strategy": strategy})
        rows.extend(run_pipeline(graphs, pc))
    order = {s: i for i, s in enumerate(cfg.strategies)}
    rows.sort(key=lambda r: (r.graph_id, order[r.mode], r.iter))
    comm = {s: float(np.mean([r.community_change for r in rows if r.mode == s])) for s in cfg.strategies}
    spec = {s: float(np.mean([r.spectral_change for r in rows if r.mode == s])) for s in cfg.strategies}
    corr = pearson([r.spectral_change for r in rows], [r.community_change for r in rows])
    return ExperimentSummary(comm, spec, corr, rows)


def load_experiment_config(path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from None
    if not isinstance(obj, dict):
        raise ValueError("config must be a JSON object")
    try:
        return ExperimentConfig.from_dict(obj)
    except TypeError as exc:
        raise ValueError(f"invalid config: {exc}") from None


def run_experiment(cfg_path, out_path) -> ExperimentSummary:
    """Run every strategy on the RPG batch and write the metrics CSV plus summary."""
    summary = experiment(load_experiment_config(cfg_path))
    text = metrics_csv(summary.rows) + "\n".join(summary.lines()) + "\n"
    Path(out_path).write_text(text)
    return summary


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start
