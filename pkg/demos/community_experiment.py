"""
Do optimized augmentations preserve communities?
================================================

A reduced run of the community-preservation experiment: planted partition
graphs, edge dropping at a 20% budget, optimized plans against uniform ones.
The full 30-graph configuration lives in ``community_experiment.json`` and
runs with ``ciaug experiment --config demos/community_experiment.json``.
"""

from ciaug import RpgParams
from ciaug.contrastive import PipelineConfig
from ciaug.verify import ExperimentConfig, experiment, timed

cfg = ExperimentConfig(
    PipelineConfig(K=6, sigma_e=0.2, modes=("edge-drop",), num_clusters=8),
    num_graphs=8,
    rpg=RpgParams(),
)
summary, seconds = timed(experiment, cfg)
print("\n".join(summary.lines()))
print(f"({len(summary.rows)} rows in {seconds:.1f}s)")

# per-graph view of the two strategies
by_graph = {}
for row in summary.rows:
    by_graph.setdefault(row.graph_id, {})[row.mode] = (row.spectral_change, row.community_change)
print("graph  ci(spec, comm)        uniform(spec, comm)")
for gid, d in by_graph.items():
    c, u = d["ci"], d["uniform"]
    print(f"{gid:5d}  ({c[0]:.4f}, {c[1]:.3f})   ({u[0]:.4f}, {u[1]:.3f})")
