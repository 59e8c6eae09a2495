"""adipal - ADI time stepping for multidimensional diffusion with mixed derivatives."""

__version__ = "0.1.0"

from adipal.adi import SchemeConfig, SchemeKind, integrate, step
from adipal.discretization import GridSpec, apply_full, apply_term, build_split_operator
from adipal.model import DiffusionMatrix, MixedStencilParams, ProblemSpec, gamma_min
from adipal.problems import load_problem, template_problem
from adipal.reference import exact_semidiscrete
from adipal.stability import (
    amplification,
    scaled_eigenvalues,
    stability_sweep,
    theorem1_lower_bound,
    theorem2_lower_bound,
)

__all__ = [
    "SchemeConfig",
    "SchemeKind",
    "step",
    "integrate",
    "GridSpec",
    "build_split_operator",
    "apply_term",
    "apply_full",
    "DiffusionMatrix",
    "MixedStencilParams",
    "ProblemSpec",
    "gamma_min",
    "template_problem",
    "load_problem",
    "exact_semidiscrete",
    "scaled_eigenvalues",
    "amplification",
    "stability_sweep",
    "theorem1_lower_bound",
    "theorem2_lower_bound",
]
