"""Parameter-free encoder, InfoNCE and the augmentation pipeline loop."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .augment import (
    Mode,
    PerturbationPlan,
    apply_plan,
    gumbel_sample,
    optimize_plan,
    reference_eigenvalues,
    spectral_change_loss,
    uniform_plan,
)
from .community import community_change_ratio, spectral_clustering
from .graph import Graph
from .spectral import graph_spectrum

CSV_HEADER = (
    "iter",
    "graph_id",
    "mode",
    "loss_ed",
    "loss_ea",
    "loss_nd",
    "loss_fm",
    "spectral_change",
    "community_change",
    "l_gcl",
    "seed",
)

TOPOLOGY_MODES = (Mode.EDGE_DROP, Mode.EDGE_ADD, Mode.NODE_DROP)
STRATEGIES = ("ci", "uniform")


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    node_embeddings: np.ndarray
    graph_embedding: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.node_embeddings, dtype=float)
        pooled = np.asarray(self.graph_embedding, dtype=float)
        if nodes.ndim != 2 or pooled.shape != (nodes.shape[1],):
            raise ValueError("graph embedding must match the node embedding width")
        if len(nodes) and np.max(np.abs(nodes.mean(axis=0) - pooled)) > 1e-10:
            raise ValueError("graph embedding is not the mean of the node embeddings")
        object.__setattr__(self, "node_embeddings", nodes)
        object.__setattr__(self, "graph_embedding", pooled)


def _row_normalize(h: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(h, axis=1, keepdims=True)
    return np.divide(h, norms, out=np.zeros_like(h), where=norms > 0)


def default_inputs(g: Graph, k: int = 6, seed: int = 0) -> np.ndarray:
    """Node features if present, else the ``k`` lowest Laplacian eigenvectors."""
    if g.features is not None:
        return g.features
    return graph_spectrum(g, min(k, g.n), seed=seed).eigenvectors


def propagate_encode(g: Graph, layers: int, inputs: Optional[np.ndarray] = None, k: int = 6) -> EmbeddingSet:
    """``layers`` rounds of closed-neighborhood mean aggregation, then L2 rows.

    Aggregation ignores edge weights: each node averages itself and its
    neighbors. With ``layers=0`` the result is the row-normalized input.

    Eigenvector inputs are only defined up to sign and rotation within repeated
    eigenvalues, so pass explicit ``inputs`` when comparing embeddings across
    graphs (views of one graph should share the original graph's inputs).
    """
    if layers < 0:
        raise ValueError("layers must be nonnegative")
    h = np.array(default_inputs(g, k) if inputs is None else inputs, dtype=float)
    if h.ndim != 2 or len(h) != g.n:
        raise ValueError(f"inputs must have {g.n} rows")
    if layers:
        import scipy.sparse as sp

        adj = g.adjacency(sparse=True)
        adj = (adj != 0).astype(float) + sp.identity(g.n, format="csr")
        counts = np.asarray(adj.sum(axis=1))
        for _ in range(layers):
            h = (adj @ h) / counts
    h = _row_normalize(h)
    return EmbeddingSet(h, readout_mean_rows(h))


def readout_mean_rows(h: np.ndarray) -> np.ndarray:
    if len(h) == 0:
        raise ValueError("cannot read out an empty graph")
    return h.mean(axis=0)


def readout_mean(e: EmbeddingSet) -> np.ndarray:
    """Mean over node rows."""
    return readout_mean_rows(e.node_embeddings)


def info_nce(z1, z2, tau2: float) -> float:
    """Contrastive loss with cosine similarity and the positive excluded below.

    ``-(1/N) sum_n [s_nn - log sum_{m != n} exp(s_nm)]`` with
    ``s_nm = cos(z1_n, z2_m) / tau2``.

    Examples
    --------
    Identical rows leave only ``log(N - 1)``:

    >>> round(info_nce(np.ones((4, 3)), np.ones((4, 3)), 0.5), 9)
    1.098612289
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if z1.ndim != 2 or z1.shape != z2.shape:
        raise ValueError("batches must be equally shaped 2-D arrays")
    if len(z1) < 2:
        raise ValueError("need at least two pairs")
    if tau2 <= 0:
        raise ValueError("temperature must be positive")
    n1 = np.linalg.norm(z1, axis=1)
    n2 = np.linalg.norm(z2, axis=1)
    if np.any(n1 == 0) or np.any(n2 == 0):
        raise ValueError("zero embedding has no cosine similarity")
    s = (z1 / n1[:, None]) @ (z2 / n2[:, None]).T / tau2
    pos = np.diag(s).copy()
    off = s.copy()
    np.fill_diagonal(off, -np.inf)
    return float(-np.mean(pos - logsumexp(off, axis=1)))


@dataclass(frozen=True)
class PipelineConfig:
    """Pipeline settings; JSON configs use these field names.

    ``psi`` (absolute budget per mode) overrides ``sigma_e``. Relative budgets
    are ``sigma_e * m`` for edge perturbation (halved per mode when dropping
    and adding are both active), ``sigma_e * n`` for node dropping and
    ``sigma_e * nnz(X)`` for feature masking.
    """

    alpha: float = 0.8
    beta: float = 1.0
    K: int = 6
    tau: float = 0.1
    tau2: float = 0.2
    eta: float = 0.1
    M: int = 20
    sigma_e: float = 0.2
    psi: Optional[float] = None
    T: int = 1
    L: int = 2
    seed: int = 0
    num_clusters: int = 8
    strategy: str = "ci"
    modes: tuple = tuple(m.value for m in Mode)

    def __post_init__(self):
        for name in ("alpha", "beta", "tau", "tau2", "eta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.sigma_e <= 1.0:
            raise ValueError("sigma_e must lie in [0, 1]")
        if self.psi is not None and self.psi < 0:
            raise ValueError("psi must be nonnegative")
        if self.K < 1 or self.M < 0 or self.T < 1 or self.L < 0 or self.num_clusters < 1:
            raise ValueError("K, T, num_clusters must be >= 1 and M, L >= 0")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        modes = tuple(Mode(m).value for m in self.modes)
        if not modes:
            raise ValueError("at least one mode must be active")
        object.__setattr__(self, "modes", modes)

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(obj)
        if "modes" in kwargs:
            kwargs["modes"] = tuple(kwargs["modes"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["modes"] = list(self.modes)
        return out

    def budget(self, g: Graph, mode: Mode) -> float:
        if self.psi is not None:
            return float(self.psi)
        if mode is Mode.NODE_DROP:
            return self.sigma_e * g.n
        if mode is Mode.FEATURE_MASK:
            return self.sigma_e * float(np.count_nonzero(g.features))
        both = Mode.EDGE_DROP.value in self.modes and Mode.EDGE_ADD.value in self.modes
        return self.sigma_e * g.m / (2.0 if both else 1.0)


@dataclass
class MetricsRow:
    iter: int
    graph_id: int
    mode: str
    loss_ed: Optional[float]
    loss_ea: Optional[float]
    loss_nd: Optional[float]
    loss_fm: Optional[float]
    spectral_change: float
    community_change: float
    l_gcl: float
    seed: int
    masks: dict = field(default_factory=dict, repr=False)

    def csv_fields(self) -> list:
        def fmt(x):
            return "" if x is None else format(float(x), ".12g")

        return [
            str(self.iter),
            str(self.graph_id),
            self.mode,
            fmt(self.loss_ed),
            fmt(self.loss_ea),
            fmt(self.loss_nd),
            fmt(self.loss_fm),
            fmt(self.spectral_change),
            fmt(self.community_change),
            fmt(self.l_gcl),
            str(self.seed),
        ]


def metrics_csv(rows: Sequence[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(row.csv_fields())
    return buf.getvalue()


def write_metrics_csv(rows: Sequence[MetricsRow], path) -> None:
    Path(path).write_text(metrics_csv(rows))


def _seeds(seed: int, t: int, count: int) -> list[int]:
    ss = np.random.SeedSequence([seed, t])
    return [int(x) for x in ss.generate_state(count, dtype=np.uint32)]


def _build_plan(g: Graph, mode: Mode, cfg: PipelineConfig, seed: int, weight: float, reference) -> PerturbationPlan:
    budget = cfg.budget(g, mode)
    if cfg.strategy == "uniform":
        return uniform_plan(g, mode, budget)
    return optimize_plan(g, mode, budget, cfg.K, cfg.eta, cfg.M, seed=seed, weight=weight, reference=reference)


def _sample_topology(g: Graph, plans: dict, cfg: PipelineConfig, seeds: list[int]):
    view, masks = g, {}
    for mode, s in zip(TOPOLOGY_MODES, seeds):
        if mode not in plans:
            continue
        mask = gumbel_sample(plans[mode].values, cfg.tau, s)
        view = apply_plan(view, plans[mode], mask, seed=s).graph
        masks[mode] = mask
    return view, masks


def run_pipeline(graphs: Sequence[Graph], cfg: PipelineConfig) -> list[MetricsRow]:
    """Optimize, sample, encode and score two views of every graph, ``T`` times.

    View 1 chains the active topology modes (drop, then add, then node drop);
    view 2 masks features, or resamples the topology plans with fresh seeds
    when features are absent or feature masking is inactive. The contrastive
    loss is a diagnostic over the whole batch; nothing is trained.

    Each row's ``spectral_change`` is ``||eig_K(view 1) - eig_K(G)||^2`` and its
    ``community_change`` compares spectral clusterings of ``G`` and view 1.
    Randomness for graph ``i`` at iteration ``t`` derives from ``seed ^ i`` and
    ``t`` only.
    """
    if len(graphs) < 2:
        raise ValueError("the contrastive loss needs at least two graphs")
    active = [Mode(m) for m in cfg.modes]
    topo = [m for m in TOPOLOGY_MODES if m in active]
    rows: list[MetricsRow] = []
    cache = []
    for gi, g in enumerate(graphs):
        gseed = cfg.seed ^ gi
        k = min(cfg.K, g.n)
        ref = reference_eigenvalues(g, Mode.EDGE_DROP, k)
        base = spectral_clustering(g, min(cfg.num_clusters, g.n), seed=gseed)
        spec = graph_spectrum(g, k, seed=gseed)
        inputs = g.features if g.features is not None else spec.eigenvectors
        cache.append((gseed, k, ref, base, inputs, spec.eigenvalues))
    for t in range(cfg.T):
        z1, z2, pending = [], [], []
        for gi, g in enumerate(graphs):
            gseed, k, ref, base, inputs, lam = cache[gi]
            seeds = _seeds(gseed, t, 12)
            plans, losses = {}, {}
            for idx, mode in enumerate(topo):
                plan = _build_plan(g, mode, cfg, seeds[idx], cfg.alpha, ref)
                if not plan.is_feasible():
                    raise ValueError(f"infeasible {mode.value} plan for graph {gi}")
                plans[mode] = plan
                losses[mode] = spectral_change_loss(g, plan, k)
            use_features = Mode.FEATURE_MASK in active and g.features is not None and np.count_nonzero(g.features)
            if use_features:
                kf = min(cfg.K, g.n + g.features.shape[1])
                fref = reference_eigenvalues(g, Mode.FEATURE_MASK, kf)
                fplan = _build_plan(g, Mode.FEATURE_MASK, cfg, seeds[3], cfg.beta, fref)
                if not fplan.is_feasible():
                    raise ValueError(f"infeasible feature-mask plan for graph {gi}")
                losses[Mode.FEATURE_MASK] = spectral_change_loss(g, fplan, kf)
            view1, masks = _sample_topology(g, plans, cfg, seeds[4:7])
            if use_features:
                fmask = gumbel_sample(fplan.values, cfg.tau, seeds[7])
                view2 = apply_plan(g, fplan, fmask, seed=seeds[7]).graph
                masks[Mode.FEATURE_MASK] = fmask
            elif plans:
                view2, _ = _sample_topology(g, plans, cfg, seeds[8:11])
            else:
                view2 = g
            eig1 = graph_spectrum(view1, k, seed=gseed).eigenvalues
            spectral = float(np.sum((eig1 - lam) ** 2))
            after = spectral_clustering(view1, base.k, seed=gseed)
            community = community_change_ratio(base, after)
            z1.append(readout_mean(propagate_encode(view1, cfg.L, inputs)))
            z2.append(readout_mean(propagate_encode(view2, cfg.L, inputs)))
            pending.append(
                MetricsRow(
                    t,
                    gi,
                    cfg.strategy,
                    losses.get(Mode.EDGE_DROP),
                    losses.get(Mode.EDGE_ADD),
                    losses.get(Mode.NODE_DROP),
                    losses.get(Mode.FEATURE_MASK),
                    spectral,
                    community,
                    0.0,
                    gseed,
                    {m.value: v for m, v in masks.items()},
                )
            )
        z1, z2 = np.array(z1), np.array(z2)
        usable = (np.linalg.norm(z1, axis=1) > 0) & (np.linalg.norm(z2, axis=1) > 0)
        l_gcl = info_nce(z1[usable], z2[usable], cfg.tau2) if usable.sum() >= 2 else float("nan")
        for row in pending:
            row.l_gcl = l_gcl
        rows.extend(pending)
    return rows
