"""Seeded random graph generators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class RpgParams:
    """Random partition graph parameters.

    ``homophily`` is the expected fraction of edges joining same-class nodes and
    ``avg_degree`` the expected mean degree counting intra- and inter-class
    edges together.
    """

    num_class: int = 8
    nodes_per_class: int = 30
    homophily: float = 0.96
    avg_degree: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.num_class < 1 or self.nodes_per_class < 1:
            raise ValueError("num_class and nodes_per_class must be >= 1")
        if not 0.0 <= self.homophily <= 1.0:
            raise ValueError("homophily must lie in [0, 1]")
        if self.avg_degree <= 0:
            raise ValueError("avg_degree must be positive")

    @property
    def n(self) -> int:
        return self.num_class * self.nodes_per_class


def rpg_probabilities(p: RpgParams) -> tuple[float, float]:
    """Intra- and inter-class edge probabilities of the block model.

    Raises
    ------
    ValueError
        If the requested degree cannot be realized (probability above 1).
    """
    n, c, s = p.n, p.num_class, p.nodes_per_class
    if p.avg_degree > n - 1:
        raise ValueError(f"avg_degree {p.avg_degree} exceeds n - 1 = {n - 1}")
    expected_edges = n * p.avg_degree / 2.0
    intra_pairs = c * s * (s - 1) / 2.0
    inter_pairs = c * (c - 1) * s * s / 2.0
    intra_edges = p.homophily * expected_edges
    inter_edges = expected_edges - intra_edges

    def prob(edges, pairs, what):
        if edges <= 0:
            return 0.0
        if pairs == 0:
            raise ValueError(f"no {what} pairs available for {edges:g} expected edges")
        q = edges / pairs
        if q > 1.0:
            raise ValueError(f"infeasible {what} edge probability {q:.3f} > 1")
        return q

    return prob(intra_edges, intra_pairs, "intra-class"), prob(inter_edges, inter_pairs, "inter-class")


def generate_rpg(p: RpgParams) -> Graph:
    """Two-probability stochastic block model with planted, contiguous classes.

    The returned graph carries the planted class of each node in ``labels``.
    """
    p_in, p_out = rpg_probabilities(p)
    labels = np.repeat(np.arange(p.num_class), p.nodes_per_class)
    rng = np.random.default_rng(p.seed)
    i, j = np.triu_indices(p.n, k=1)
    prob = np.where(labels[i] == labels[j], p_in, p_out)
    keep = rng.random(len(i)) < prob
    return Graph(p.n, np.stack([i[keep], j[keep]], axis=1), labels=labels)


def generate_er(n: int, p: float, seed: int, weights: tuple[float, float] | None = None) -> Graph:
    """Erdos-Renyi G(n, p) graph.

    If ``weights=(lo, hi)`` is given, edge weights are drawn uniformly from that
    interval using the same generator.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    i, j = np.triu_indices(n, k=1)
    keep = rng.random(len(i)) < p
    edges = np.stack([i[keep], j[keep]], axis=1)
    w = None
    if weights is not None:
        w = rng.uniform(weights[0], weights[1], size=len(edges))
    return Graph(n, edges, w)
