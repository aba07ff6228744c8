"""Community-invariant spectral augmentation for graph contrastive learning.

The numerical core (normalized Laplacians, selective eigensolvers, eigenvalue
perturbation, budgeted plan optimization, sampling) lives in the submodules;
the most used names are re-exported here.
"""

from .augment import (
    AugmentedView,
    Mode,
    PerturbationPlan,
    analytic_gradient,
    apply_plan,
    gumbel_sample,
    init_plan,
    optimize_plan,
    pgd_optimize,
    project_budget,
    spectral_change_loss,
    uniform_plan,
)
from .community import CommunityAssignment, community_change_ratio, normalized_cut, spectral_clustering
from .contrastive import EmbeddingSet, PipelineConfig, info_nce, propagate_encode, readout_mean, run_pipeline
from .generators import RpgParams, generate_er, generate_rpg
from .graph import BipartiteFeatureGraph, Graph, build_feature_bipartite, normalized_laplacian
from .io import ParseError, parse_edge_list
from .perturbation import (
    FlipEstimate,
    eigenvalue_change_single_flip,
    perturbation_bounds,
    spectral_change_estimate,
)
from .spectral import SpectralPair, SvdTriple, lanczos_lowest_k, lowest_eigenpairs, truncated_svd_normalized
from .verify import VerifyReport, run_experiment, run_verify

__version__ = "0.1.0"
