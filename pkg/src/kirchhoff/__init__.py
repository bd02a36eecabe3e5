"""Spectral-Galerkin solvers and verification tools for the damped Kirchhoff
equation ``eps u'' + (1+t)^{-p} u' + |A^{1/2}u|^{2 gamma} A u = 0`` and its
parabolic limit."""

from types import ModuleType as _ModuleType

__version__ = "0.1.0"

from .corrector import CorrectorSpec, check_theta_integral_bound, compute_w0, theta, theta_prime
from .error_analysis import (
    ErrorTrajectory,
    SweepResult,
    build_error_trajectory,
    energy_D_rho,
    energy_E_rho,
    energy_F_rho,
    h1cip_holds,
    run_epsilon_sweep,
)
from .hyperbolic import (
    AprioriConstants,
    HyperbolicKirchhoff,
    HyperbolicTrajectory,
    check_apriori_bounds,
    check_decay_estimates,
    compute_apriori_constants,
    conserved_energy_residual,
    empirical_epsilon_threshold,
    energy_D,
    energy_H,
    energy_Q,
    energy_R,
    hyperbolic_solve,
    explicit_epsilon0,
)
from .lemmas import (
    CheckReport,
    SampledFunction,
    oracle_FG_barrier,
    oracle_mprop,
    oracle_ode_envelopes,
    oracle_ode_linear,
    oracle_ode_sqrt,
    run_oracle_suite,
)
from .parabolic import ParabolicKirchhoff, ParabolicTrajectory, check_dv_properties, parabolic_solve
from .problem import DegenerationWarning, IntegrationError, ProblemConfig
from .rates import PowerLawFit, RateFit, fit_power_law
from .spectral import (
    NonlinearityParams,
    SpectralOperator,
    apply_power_A,
    inner,
    kirchhoff_force,
    m_eval,
    sobolev_norm_sq,
)

__all__ = [k for k, v in dict(globals()).items() if not k.startswith("_") and not isinstance(v, _ModuleType)]
