"""Factor count and noise autocorrelation estimation from windowed eigenvalue spectra."""

from ._core import (
    RmtError,
    ar1_mgf,
    detect_changes,
    estimate_window,
    generate_ar1,
    green_function,
    js_divergence,
    kl_divergence,
    model_curve,
    model_density,
    physical_root,
    residual_eigenvalues,
    run_spectrum,
    solve_moment_polynomial,
    sweep,
    synthesize_case,
)

__all__ = [
    "RmtError",
    "ar1_mgf",
    "detect_changes",
    "estimate_window",
    "generate_ar1",
    "green_function",
    "js_divergence",
    "kl_divergence",
    "model_curve",
    "model_density",
    "physical_root",
    "residual_eigenvalues",
    "run_spectrum",
    "solve_moment_polynomial",
    "sweep",
    "synthesize_case",
]
