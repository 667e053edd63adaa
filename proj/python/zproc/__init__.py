"""Z-estimators and the Z-process change-point test.

Thin Python layer over the C++ core: estimating-equation solvers, the
whitened partial-sum (Z-) process, Brownian-bridge calibration tables, the
shipped model adapters (i.i.d. Gaussian, OU drift, Cox regression) and the
Monte Carlo harness.
"""

from zproc._core import (
    CritTable,
    EstimatingFunctionSpec,
    InvalidInputError,
    NoConvergenceError,
    NotPositiveDefiniteError,
    NumericsFailure,
    RngStream,
    SingularJacobianError,
    __version__,
    cox_fit,
    cox_run_test,
    cox_simulate,
    cox_zprocess_time,
    gaussian_mean_spec,
    gaussian_meanvar_spec,
    gaussian_simulate,
    information_hat,
    kolmogorov_cdf,
    kolmogorov_quantile,
    mc_moments,
    mc_size_power,
    ou_closed_form_theta,
    ou_drift_spec,
    ou_simulate,
    p_value,
    run_test,
    simulate_sup_bridge,
    solve_z_estimator,
    spec_from_callables,
    z_process,
)

__all__ = [
    "CritTable",
    "EstimatingFunctionSpec",
    "InvalidInputError",
    "NoConvergenceError",
    "NotPositiveDefiniteError",
    "NumericsFailure",
    "RngStream",
    "__version__",
    "cox_fit",
    "cox_run_test",
    "cox_simulate",
    "cox_zprocess_time",
    "gaussian_mean_spec",
    "gaussian_meanvar_spec",
    "gaussian_simulate",
    "information_hat",
    "kolmogorov_cdf",
    "kolmogorov_quantile",
    "mc_moments",
    "mc_size_power",
    "ou_closed_form_theta",
    "ou_drift_spec",
    "ou_simulate",
    "p_value",
    "run_test",
    "simulate_sup_bridge",
    "solve_z_estimator",
    "spec_from_callables",
    "z_process",
]
