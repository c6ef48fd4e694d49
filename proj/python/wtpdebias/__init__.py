"""De-biasing open-ended WTP with a dichotomous-choice anchor."""

from ._wtpdebias import (
    WtpError,
    __version__,
    dc_mean,
    debias,
    fit_dc,
    optimize_price,
    run_pipeline,
    run_study,
    sample_true_wtp,
    simulate_dc,
    theoretical_cov,
)

__all__ = [
    "WtpError",
    "__version__",
    "dc_mean",
    "debias",
    "fit_dc",
    "optimize_price",
    "run_pipeline",
    "run_study",
    "sample_true_wtp",
    "simulate_dc",
    "theoretical_cov",
]
