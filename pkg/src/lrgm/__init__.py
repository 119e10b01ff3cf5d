"""Unseeded low-rank graph matching through Laplace-transform point registration."""
from .assignment import Matching, assign_points, cost_matrix, hungarian
from .graphon import (
    GraphonKind,
    GraphonSpec,
    apply_permutation,
    build_prob_matrix,
    eval_graphon,
    get_graphon,
    graphon1,
    graphon2,
    graphon3,
    kernel_signature,
    sample_adjacency,
    sample_latents,
    sample_permutation,
)
from .laplace import (
    FrequencySample,
    LaplaceObjective,
    LossConfig,
    PointCloud,
    empirical_laplace,
    normalizer,
    quadrature_loss,
    sample_frequencies,
    sample_loss,
)
from .orthogonal import (
    BlockConstraint,
    OrthogonalTransform,
    full_transform,
    init_grid,
    minimize_over_O,
    refine,
    star_init,
)
from .pipeline import (
    MatchResult,
    SignatureMismatch,
    icp_baseline,
    match_graphs,
    procrustes,
    register_points,
    registration_error,
    rmse_metric,
)
from .spectral import Embedding, embed, sym_eigs_topk

__version__ = "0.1.0"
