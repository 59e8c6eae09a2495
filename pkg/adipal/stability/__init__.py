"""Von Neumann stability analysis of the ADI schemes and the theta lower bounds."""

from adipal.stability.bounds import (
    THEOREM1,
    THEOREM2,
    BoundResult,
    a_k,
    b_k,
    c_k,
    d_k,
    h_function,
    h_maximum,
    lemma2_bruteforce_min,
    lemma2_condition,
    lemma2_exact_min,
    lemma2_polynomial,
    lower_bound,
    prior_do_bound_k3_gamma1,
    round_half_away,
    solve_ak,
    theorem1_lower_bound,
    theorem2_lower_bound,
)
from adipal.stability.symbol import (
    DEFAULT_RATIOS,
    Lemma1Check,
    ScaledEigenvalues,
    SweepResult,
    SweepSampling,
    amplification,
    angle_grid,
    default_angle_count,
    fourier_mode,
    grid_eigenvalues,
    hv_conditions,
    lemma1_check,
    mesh_ratios,
    mode_amplification_by_stepping,
    scaled_eigenvalues,
    spectral_radius_by_stepping,
    stability_sweep,
    sweep_rows,
    worst_case_equal_angles,
)

__all__ = [
    "THEOREM1",
    "THEOREM2",
    "BoundResult",
    "a_k",
    "b_k",
    "c_k",
    "d_k",
    "h_function",
    "h_maximum",
    "lemma2_bruteforce_min",
    "lemma2_condition",
    "lemma2_exact_min",
    "lemma2_polynomial",
    "lower_bound",
    "prior_do_bound_k3_gamma1",
    "round_half_away",
    "solve_ak",
    "theorem1_lower_bound",
    "theorem2_lower_bound",
    "DEFAULT_RATIOS",
    "Lemma1Check",
    "ScaledEigenvalues",
    "SweepResult",
    "SweepSampling",
    "amplification",
    "angle_grid",
    "default_angle_count",
    "fourier_mode",
    "grid_eigenvalues",
    "hv_conditions",
    "lemma1_check",
    "mesh_ratios",
    "mode_amplification_by_stepping",
    "scaled_eigenvalues",
    "spectral_radius_by_stepping",
    "stability_sweep",
    "sweep_rows",
    "worst_case_equal_angles",
]
