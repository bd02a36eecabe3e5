"""Limit problem ``u' + (1+t)^p |A^{1/2}u|^{2 gamma} A u = 0``, ``u(0) = u0``."""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_scalar, check_state
from .grids import output_grid, running_integral
from .problem import DEFAULT_HORIZON, DEFAULT_TOL, IntegrationError, ProblemConfig
from .reports import PropertyReport
from .spectral import NonlinearityParams, SpectralOperator, norms_sq


def parabolic_rhs(t, u, op, params):
    """Return ``-(1+t)^p |A^{1/2}u|^{2 gamma} A u``."""
    u = check_state(u, n=op.n, name="u")
    lam = op.eigenvalues
    sigma = float(np.dot(lam, u * u))
    return -((1.0 + t) ** params.p) * sigma**params.gamma * lam * u


def parabolic_second_derivative(t, u, op, params):
    """Exact ``u''`` obtained by differentiating the equation in time."""
    u = check_state(u, n=op.n, name="u")
    lam = op.eigenvalues
    g, p = params.gamma, params.p
    au = lam * u
    sigma = float(np.dot(au, u))
    au_sq = float(np.dot(au, au))
    if sigma == 0.0:
        return np.zeros_like(u)
    first = -p * (1.0 + t) ** (p - 1.0) * sigma**g * au
    second = (1.0 + t) ** (2.0 * p) * (
        sigma ** (2 * g) * lam * au + 2.0 * g * sigma ** (2 * g - 1) * au_sq * au
    )
    return first + second


def _velocities(times, states, op, params):
    lam = op.eigenvalues
    sigma = (states * states) @ lam
    coef = (1.0 + times) ** params.p * sigma**params.gamma
    return -coef[:, None] * lam * states


@dataclass
class ParabolicTrajectory:
    """Sampled solution of the limit problem.

    ``integrals`` maps a name to the running integral on ``times``:

    * ``"dv1"``: ``int_0^t |A^{1/2}u|^{2(gamma+1)} (1+s)^p ds``, integrated
      alongside the state to the solver tolerance;
    * ``"dv5"``, ``"dv6"``, ``"dv7"``: the higher-order dissipation
      integrals, by the trapezoidal rule on ``times``.
    """

    times: np.ndarray
    states: np.ndarray
    op: SpectralOperator
    params: NonlinearityParams
    tol: float
    integrals: dict = field(default_factory=dict)
    dense: object = None

    def at(self, t):
        """State at time(s) ``t`` from the dense output; shape ``(len(t), N)`` or ``(N,)``."""
        t_arr = np.asarray(t, dtype=float)
        y = self.dense(np.atleast_1d(t_arr))[: self.op.n].T
        return y[0] if t_arr.ndim == 0 else y

    @property
    def velocities(self):
        return _velocities(self.times, self.states, self.op, self.params)

    def norms(self):
        """Rows ``|u|^2, |A^{1/2}u|^2, |Au|^2, |A^{3/2}u|^2, |A^2 u|^2`` per sample."""
        return norms_sq(self.states, self.op, (0.0, 0.5, 1.0, 1.5, 2.0))


def parabolic_solve(config, horizon=None, tol=None, times=None):
    """Integrate the limit problem with an adaptive 8th-order Runge-Kutta pair.

    Parameters
    ----------
    config : ProblemConfig
        Only ``op``, ``params`` and ``u0`` are used; ``horizon`` and ``tol``
        default to the config's values.
    times : array_like, optional
        Output grid. Defaults to :func:`kirchhoff.grids.output_grid`.
    """
    horizon = config.horizon if horizon is None else check_scalar(horizon, "horizon", lo=0, lo_open=True)
    tol = config.tol if tol is None else check_scalar(tol, "tol", lo=0, lo_open=True)
    op, params = config.op, config.params
    lam, g, p = op.eigenvalues, params.gamma, params.p
    n = op.n
    if times is None:
        times = output_grid(horizon)
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0 or times[-1] > horizon * (1 + 1e-12):
        raise ValueError("output grid must start at 0 and stay within the horizon")

    def rhs(t, y):
        u = y[:n]
        sigma = np.dot(lam, u * u)
        du = -((1.0 + t) ** p) * sigma**g * lam * u
        return np.append(du, sigma ** (g + 1) * (1.0 + t) ** p)

    scale = max(float(np.max(np.abs(config.u0))), 1e-300)
    sol = solve_ivp(
        rhs,
        (0.0, float(times[-1])),
        np.append(config.u0, 0.0),
        method="DOP853",
        t_eval=times,
        rtol=tol,
        atol=1e-3 * tol * scale,
        dense_output=True,
    )
    if sol.status != 0:
        raise IntegrationError(f"parabolic integration failed: {sol.message}", sol.t[-1] if sol.t.size else 0.0)

    states = sol.y[:n].T.copy()
    traj = ParabolicTrajectory(times, states, op, params, tol, dense=sol.sol)
    traj.integrals["dv1"] = sol.y[n].copy()

    u_sq, sigma, au2, a32, a2 = traj.norms()
    one_t = 1.0 + times
    traj.integrals["dv5"] = running_integral(sigma ** (2 * g) * au2 * one_t ** (3 * p), times)
    traj.integrals["dv6"] = running_integral(sigma ** (3 * g) * a32 * one_t ** (5 * p), times)
    traj.integrals["dv7"] = running_integral(
        (sigma ** (4 * g) * one_t ** (7 * p) + sigma ** (3 * g) * one_t ** (5 * p)) * a2, times
    )
    return traj


def _max_increase(values):
    """Largest amount by which a sample exceeds the minimum of all earlier ones."""
    if values.size < 2:
        return 0.0
    prior_min = np.minimum.accumulate(values)[:-1]
    return float(max(np.max(values[1:] - prior_min), 0.0))


def _tail_fraction(integral, times):
    total = integral[-1]
    if total <= 0:
        return 0.0
    start = np.interp(times[-1] / 10.0, times, integral)
    return float((total - start) / total)


def check_dv_properties(traj, op=None, params=None, ratio_slack=None, identity_slack=None):
    """Evaluate the standard properties of a solved limit trajectory.

    ``ratio_slack`` (default ``10*tol``) bounds the admissible growth of the
    ratios ``|A^{(k+1)/2}u|^2 / |A^{k/2}u|^2``; ``identity_slack`` (default
    ``100*tol``) bounds the relative residual of the energy identity.
    """
    op = traj.op if op is None else op
    params = traj.params if params is None else params
    g, p = params.gamma, params.p
    t = traj.times
    u_sq, sigma, au2, a32, a2 = traj.norms()
    if not sigma[0] > 0:
        raise ValueError("degenerate initial datum: |A^{1/2}u0| = 0")
    ratio_slack = 10 * traj.tol if ratio_slack is None else ratio_slack
    identity_slack = 100 * traj.tol if identity_slack is None else identity_slack
    one_t = 1.0 + t

    rep = PropertyReport()
    ratio1 = au2 / sigma
    rep.values["dv0_increase_k1"] = _max_increase(ratio1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio2 = np.where(au2 > 0, a32 / au2, 0.0)
    rep.values["dv0_increase_k2"] = _max_increase(ratio2)

    identity = 0.5 * u_sq + traj.integrals["dv1"] - 0.5 * u_sq[0]
    rep.values["dv1_residual"] = float(np.max(np.abs(identity)))
    rep.values["dv1_relative_residual"] = rep.values["dv1_residual"] / (0.5 * u_sq[0])

    lower = sigma * one_t ** ((p + 1) / g)
    upper = sigma * one_t ** ((p + 1) / (g + 1))
    rep.values["gamma3"] = float(lower.min())
    rep.values["gamma4"] = float(upper.max())
    rep.values["dv4_sup"] = float(np.max(sigma ** (g - 1) * au2 * one_t ** (p + 1)))
    if op.nu > 0:
        rep.values["dv3_sup"] = float(lower.max())
    for name in ("dv5", "dv6", "dv7"):
        rep.values[name] = float(traj.integrals[name][-1])
        rep.values[name + "_tail_fraction"] = _tail_fraction(traj.integrals[name], t)

    rep.checks["dv0"] = max(rep.values["dv0_increase_k1"], rep.values["dv0_increase_k2"]) <= ratio_slack
    rep.checks["dv1"] = rep.values["dv1_relative_residual"] <= identity_slack
    rep.checks["dv2_lower_positive"] = rep.values["gamma3"] > 0
    rep.checks["non_stationary"] = bool(np.all(sigma > 0))
    rep.checks["integrals_nondecreasing"] = all(
        np.all(np.diff(traj.integrals[k]) >= 0) for k in ("dv1", "dv5", "dv6", "dv7")
    )
    return rep


class ParabolicKirchhoff(BaseEstimator):
    """Estimator-style wrapper around :func:`parabolic_solve`.

    ``fit(u0)`` solves the limit problem; ``predict(t)`` evaluates the
    solution at arbitrary times in ``[0, horizon]``.

    Examples
    --------
    >>> model = ParabolicKirchhoff(eigenvalues=[1.0], horizon=2.0).fit([1.0])
    >>> round(float(model.predict(1.5)[0]), 6)
    0.5
    """

    def __init__(self, eigenvalues=(1.0,), gamma=1.0, p=0.0, horizon=DEFAULT_HORIZON,
                 tol=DEFAULT_TOL, coercive=None):
        self.eigenvalues = eigenvalues
        self.gamma = gamma
        self.p = p
        self.horizon = horizon
        self.tol = tol
        self.coercive = coercive

    def _config(self, u0):
        op = SpectralOperator(self.eigenvalues, coercive=self.coercive)
        return ProblemConfig(op=op, u0=u0, params=NonlinearityParams(self.gamma, self.p),
                             horizon=self.horizon, tol=self.tol)

    def fit(self, u0, y=None):
        self.config_ = self._config(u0)
        self.trajectory_ = parabolic_solve(self.config_)
        self.n_features_in_ = self.config_.op.n
        return self

    def predict(self, t):
        check_is_fitted(self, "trajectory_")
        return self.trajectory_.at(t)

    def report(self):
        check_is_fitted(self, "trajectory_")
        return check_dv_properties(self.trajectory_)
