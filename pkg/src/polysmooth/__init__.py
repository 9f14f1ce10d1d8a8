"""Smoothing of nonnegatively curved polyhedral 3-manifolds, with verification tools."""

__version__ = "0.1.0"

from .complex import PolyhedralComplex, Tet, analyze, cone_angle, is_nonnegatively_curved, singular_strata
from .curvature import CurvatureTensor3, cosectional_decomposition, gauss_tensor, pinching_margin, verify_patch_pinching
from .flow2d import ConformalSphereMetric, init_from_cap, product_pinching, run, step
from .ghdist import FiniteMetricSpace, choose_eps_for_target, gh_exact_small, gh_lower_bound, smoothing_gh_bound
from .patches import closed_edge_patch, cone_slope, open_edge_patch, vertex_patch
from .planning import plan_smoothing
from .tolerances import DEFAULT_TOLERANCES, Tolerances

__all__ = [
    "PolyhedralComplex",
    "Tet",
    "analyze",
    "cone_angle",
    "is_nonnegatively_curved",
    "singular_strata",
    "CurvatureTensor3",
    "cosectional_decomposition",
    "gauss_tensor",
    "pinching_margin",
    "verify_patch_pinching",
    "ConformalSphereMetric",
    "init_from_cap",
    "product_pinching",
    "run",
    "step",
    "FiniteMetricSpace",
    "choose_eps_for_target",
    "gh_exact_small",
    "gh_lower_bound",
    "smoothing_gh_bound",
    "closed_edge_patch",
    "cone_slope",
    "open_edge_patch",
    "vertex_patch",
    "plan_smoothing",
    "DEFAULT_TOLERANCES",
    "Tolerances",
]
