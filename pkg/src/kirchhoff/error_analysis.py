"""Errors between the perturbed and the limit solution.

With ``u_eps`` the hyperbolic and ``u`` the parabolic solution,
``rho = u_eps - u`` and ``r = rho - theta``, where ``theta`` is the
boundary-layer corrector. Everything is sampled on the hyperbolic grid,
which resolves the initial layer; the parabolic solution is read from its
dense output there.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .corrector import CorrectorSpec, theta, theta_prime
from .grids import running_integral
from .hyperbolic import hyperbolic_solve
from .parabolic import parabolic_solve
from .problem import DegenerationWarning, IntegrationError
from .rates import RateFit, fit_power_law

__all__ = [
    "ErrorTrajectory",
    "SweepResult",
    "RateFit",
    "build_error_trajectory",
    "energy_D_rho",
    "energy_E_rho",
    "energy_F_rho",
    "fit_power_law",
    "h1cip_holds",
    "run_epsilon_sweep",
]


@dataclass
class ErrorTrajectory:
    """Error quantities on a common grid.

    ``rho`` holds the rows ``|rho|^2`` and ``|A^{1/2}rho|^2``.
    ``r_prime_integrals["h1"]`` is ``int_0^t |r'|^2 |A^{1/2}u|^{-2 gamma} (1+s)^{-p} ds``
    and ``r_prime_integrals["E"]`` is ``int_0^t |r'|^2 (1+s)^p ds``.
    ``r_prime_integrals["h1_poly"]`` swaps the weight ``|A^{1/2}u|^{-2 gamma}``
    for its decay rate ``(1+s)^{p+1}``; it is exploratory and never checked.
    """

    times: np.ndarray
    epsilon: float
    rho: np.ndarray
    r_prime_integrals: dict
    E_rho: np.ndarray
    F_rho: np.ndarray
    D_rho: np.ndarray
    rho_vectors: np.ndarray = field(repr=False, default=None)
    r_vectors: np.ndarray = field(repr=False, default=None)
    theta_vectors: np.ndarray = field(repr=False, default=None)
    r_prime_vectors: np.ndarray = field(repr=False, default=None)
    rho_prime_vectors: np.ndarray = field(repr=False, default=None)

    @property
    def sup_error(self):
        """``max_t |rho|^2 + |A^{1/2}rho|^2`` over the grid."""
        return float(np.max(self.rho[0] + self.rho[1]))

    @property
    def h1_integral(self):
        return float(self.r_prime_integrals["h1"][-1])

    def reconstruction_residual(self):
        """``max |rho - (r + theta)|``; zero up to rounding by construction."""
        return float(np.max(np.abs(self.rho_vectors - self.r_vectors - self.theta_vectors)))


def _parabolic_velocities(times, states, op, params):
    sigma = (states * states) @ op.eigenvalues
    coef = (1.0 + times) ** params.p * sigma**params.gamma
    return -coef[:, None] * op.eigenvalues * states


def build_error_trajectory(hyp, par, spec=None, op=None, params=None):
    """Assemble :class:`ErrorTrajectory` from solved trajectories.

    ``spec`` defaults to the corrector of the hyperbolic run's data.

    Raises
    ------
    ValueError
        If the parabolic run does not cover the hyperbolic horizon, or the
        two runs use different operators or nonlinearities.
    """
    cfg = hyp.config
    op = cfg.op if op is None else op
    params = cfg.params if params is None else params
    if par.op != op or hyp.config.op != op:
        raise ValueError("trajectories were computed with different operators")
    if par.params != params or cfg.params != params:
        raise ValueError("trajectories were computed with different nonlinearity parameters")
    t = hyp.times
    if par.times[-1] < t[-1] * (1.0 - 1e-12):
        raise ValueError(
            f"horizon mismatch: parabolic run ends at {par.times[-1]:g}, hyperbolic at {t[-1]:g}"
        )
    if spec is None:
        spec = CorrectorSpec.from_config(cfg)
    eps, g, p = cfg.epsilon, params.gamma, params.p
    lam = op.eigenvalues

    # Reuse grid samples when the parabolic run shares the grid.
    if par.times.shape == t.shape and np.array_equal(par.times, t):
        u = par.states
    else:
        u = par.at(t)
    du = _parabolic_velocities(t, u, op, params)
    th, dth = theta(t, spec), theta_prime(t, spec)

    rho = hyp.states - u
    drho = hyp.velocities - du
    r = rho - th
    dr = drho - dth

    one_t = 1.0 + t
    sigma_u = (u * u) @ lam
    sigma_e = (hyp.states * hyp.states) @ lam
    if np.any(sigma_u <= 0):
        raise ValueError("|A^{1/2}u| vanishes on the grid; error energies are undefined")
    m_u = sigma_u**g
    rho_sq = np.sum(rho * rho, axis=1)
    rho_a = (rho * rho) @ lam
    dr_sq = np.sum(dr * dr, axis=1)

    h1 = running_integral(dr_sq / m_u * one_t ** (-p), t)
    e_int = running_integral(dr_sq * one_t**p, t)
    h1_poly = running_integral(dr_sq * one_t, t)
    bracket = np.sum((sigma_e[:, None] ** g * lam * hyp.states - m_u[:, None] * lam * u) * rho, axis=1)
    D = (
        running_integral(bracket * one_t**p, t)
        + eps * np.sum(drho * rho, axis=1) * one_t**p
        + 0.5 * rho_sq * (1.0 - eps * p * one_t ** (p - 1.0))
    )
    return ErrorTrajectory(
        times=t,
        epsilon=eps,
        rho=np.vstack([rho_sq, rho_a]),
        r_prime_integrals={"h1": h1, "E": e_int, "h1_poly": h1_poly},
        E_rho=(eps * dr_sq + m_u * rho_a) * one_t ** (2 * p),
        F_rho=eps * dr_sq / m_u + rho_a,
        D_rho=D,
        rho_vectors=rho,
        r_vectors=r,
        theta_vectors=th,
        r_prime_vectors=dr,
        rho_prime_vectors=drho,
    )


def _at(t, err, values):
    t = float(t)
    if not err.times[0] <= t <= err.times[-1]:
        raise ValueError(f"t={t:g} outside the sampled range [0, {err.times[-1]:g}]")
    return float(np.interp(t, err.times, values))


def energy_E_rho(t, err):
    """``(eps|r'|^2 + |A^{1/2}u|^{2 gamma}|A^{1/2}rho|^2)(1+t)^{2p}`` at ``t`` (interpolated)."""
    return _at(t, err, err.E_rho)


def energy_F_rho(t, err):
    """``eps|r'|^2 / |A^{1/2}u|^{2 gamma} + |A^{1/2}rho|^2`` at ``t``."""
    return _at(t, err, err.F_rho)


def energy_D_rho(t, err):
    """``D_rho`` at ``t``, including its running bracket integral."""
    return _at(t, err, err.D_rho)


def h1cip_holds(op, params):
    """Whether ``A`` is coercive or ``p <= (gamma^2+1)/(gamma^2+2 gamma-1)``."""
    g = params.gamma
    return bool(op.nu > 0 or params.p <= (g * g + 1.0) / (g * g + 2.0 * g - 1.0))


@dataclass
class SweepResult:
    """Per-epsilon error summaries; entries of failed members are NaN."""

    epsilons: np.ndarray
    sup_errors: np.ndarray
    h1_integrals: np.ndarray
    e_integrals: np.ndarray
    fit: RateFit
    h1cip: bool
    failures: dict = field(default_factory=dict)
    degenerate: dict = field(default_factory=dict)
    h1_poly_integrals: np.ndarray = None

    @property
    def ok(self):
        return np.isfinite(self.sup_errors)

    def spread(self, values, power):
        """``max/min`` of ``values / eps**power`` over successful members."""
        scaled = np.asarray(values)[self.ok] / self.epsilons[self.ok] ** power
        if scaled.size == 0 or np.min(scaled) <= 0:
            return float("inf")
        return float(np.max(scaled) / np.min(scaled))

    def sup_ratio_spread(self, power):
        return self.spread(self.sup_errors, power)

    def h1_ratio_spread(self, power):
        return self.spread(self.h1_integrals, power)

    def rows(self):
        for i, eps in enumerate(self.epsilons):
            yield eps, self.sup_errors[i], self.h1_integrals[i], self.e_integrals[i]


def run_epsilon_sweep(base_config, epsilons):
    """Solve the perturbed problem for every ``eps`` and compare with one limit run.

    ``epsilons`` must be strictly decreasing. Solver failures are recorded in
    ``failures`` (message keyed by epsilon) and leave NaN entries; runs
    that leave the decay envelope are listed in ``degenerate``.
    """
    eps_arr = np.asarray(epsilons, dtype=float)
    if eps_arr.ndim != 1 or eps_arr.size == 0:
        raise ValueError("epsilons must be a nonempty list")
    if np.any(np.diff(eps_arr) >= 0):
        raise ValueError("epsilons must be strictly decreasing")
    base_config.require_mildly_degenerate()
    par = parabolic_solve(base_config)
    k = eps_arr.size
    sup, h1, e_int, h1_poly = (np.full(k, np.nan) for _ in range(4))
    failures, degenerate = {}, {}
    for i, eps in enumerate(eps_arr):
        cfg = base_config.with_(epsilon=float(eps))
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerationWarning)
                hyp = hyperbolic_solve(cfg)
            err = build_error_trajectory(hyp, par)
        except (IntegrationError, ValueError) as exc:
            failures[float(eps)] = str(exc)
            continue
        if hyp.degenerate:
            degenerate[float(eps)] = hyp.degeneration_time
        sup[i], h1[i] = err.sup_error, err.h1_integral
        e_int[i] = err.r_prime_integrals["E"][-1]
        h1_poly[i] = err.r_prime_integrals["h1_poly"][-1]
    ok = np.isfinite(sup) & (sup > 0)
    fit = fit_power_law(eps_arr[ok], sup[ok]) if np.count_nonzero(ok) >= 3 else None
    return SweepResult(eps_arr, sup, h1, e_int, fit, h1cip_holds(base_config.op, base_config.params),
                       failures, degenerate, h1_poly)
