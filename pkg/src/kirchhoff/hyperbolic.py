"""Singularly perturbed problem

    eps u'' + (1+t)^{-p} u' + |A^{1/2}u|^{2 gamma} A u = 0,  u(0) = u0, u'(0) = u1,

together with its energy monitors and decay diagnostics.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_state
from .grids import output_grid, running_integral
from .problem import (
    DEFAULT_HORIZON,
    DEFAULT_TOL,
    DegenerationWarning,
    IntegrationError,
    ProblemConfig,
)
from .rates import fit_power_law
from .reports import PropertyReport
from .spectral import NonlinearityParams, SpectralOperator, norms_sq

DEGENERATION_FACTOR = 1e-3


def hyperbolic_rhs(t, u, v, config):
    """First-order form: returns ``(u', v')`` with ``u' = v``."""
    op = config.op
    u = check_state(u, n=op.n, name="u")
    v = check_state(v, n=op.n, name="v")
    lam = op.eigenvalues
    sigma = float(np.dot(lam, u * u))
    dv = -(v / (1.0 + t) ** config.p + sigma**config.gamma * lam * u) / config.epsilon
    return v.copy(), dv


def _accelerations(times, states, velocities, config):
    lam = config.op.eigenvalues
    sigma = (states * states) @ lam
    damp = velocities / ((1.0 + times) ** config.p)[:, None]
    return -(damp + (sigma**config.gamma)[:, None] * lam * states) / config.epsilon


def lower_envelope_constant(config):
    """Comparison constant ``C`` with ``|A^{1/2}u(t)|^2 >= C (1+t)^{-(p+1)/gamma}``.

    Obtained for the limit problem from the ratio bound ``|Au|^2 <=
    (|Au0|^2/|A^{1/2}u0|^2) |A^{1/2}u|^2`` and the Riccati comparison for
    ``w' >= -a (1+t)^p w^{1+gamma}``. Returns 0 for degenerate data.
    """
    sigma0 = config.sigma0
    if sigma0 <= 0:
        return 0.0
    lam, g, p = config.op.eigenvalues, config.gamma, config.p
    au0 = float(np.dot(lam * config.u0, lam * config.u0))
    a = 2.0 * au0 / sigma0
    return min(sigma0, ((p + 1.0) / (a * g)) ** (1.0 / g))


@dataclass
class HyperbolicTrajectory:
    """Sampled solution of the perturbed problem.

    Accelerations are evaluated from the equation at each sample. Running
    integrals on ``times``:

    * ``"dissipation"``: ``2 int_0^t |u'|^2 (1+s)^{-p} ds``, integrated
      alongside the state to the solver tolerance;
    * ``"D4"``: ``int_0^t |u'|^2 (1+s) ds`` (trapezoidal);
    * ``"D"``: ``int_0^t |A^{1/2}u'|^2 / |A^{1/2}u|^2 (1+s)^{2p+1} ds``
      (trapezoidal, only when ``|A^{1/2}u|`` never vanishes).
    """

    times: np.ndarray
    states: np.ndarray
    velocities: np.ndarray
    accelerations: np.ndarray
    config: ProblemConfig
    integrals: dict = field(default_factory=dict)
    dense: object = None
    degeneration_time: float = None

    @property
    def degenerate(self):
        return self.degeneration_time is not None

    def at(self, t):
        """``(u, v)`` at time(s) ``t`` via the solver's dense output."""
        t_arr = np.asarray(t, dtype=float)
        y = self.dense(np.atleast_1d(t_arr))
        n = self.config.op.n
        u, v = y[:n].T, y[n : 2 * n].T
        return (u[0], v[0]) if t_arr.ndim == 0 else (u, v)

    def norms(self):
        """Rows ``|u|^2, |A^{1/2}u|^2, |Au|^2`` per sample."""
        return norms_sq(self.states, self.config.op, (0.0, 0.5, 1.0))


def _jacobian_factory(config):
    lam, g, p, eps = config.op.eigenvalues, config.gamma, config.p, config.epsilon
    n = lam.shape[0]
    jac = np.zeros((2 * n + 1, 2 * n + 1))
    jac[:n, n : 2 * n] = np.eye(n)
    diag_v = np.arange(n, 2 * n)

    def jacobian(t, y):
        u, v = y[:n], y[n : 2 * n]
        au = lam * u
        sigma = np.dot(au, u)
        block = sigma**g * np.diag(lam)
        if sigma > 0:
            block = block + 2.0 * g * sigma ** (g - 1) * np.outer(au, au)
        jac[n : 2 * n, :n] = -block / eps
        jac[diag_v, diag_v] = -1.0 / (eps * (1.0 + t) ** p)
        jac[2 * n, n : 2 * n] = 4.0 * v / (1.0 + t) ** p
        return jac.copy()

    return jacobian


def hyperbolic_solve(config, times=None, stop_on_degeneration=False, warn=True):
    """Integrate the perturbed problem with the L-stable Radau IIA (order 5) method.

    The first step is ``epsilon/100`` and the default output grid samples
    the initial layer ``[0, 10 epsilon]`` with step ``epsilon/50``.

    A :class:`DegenerationWarning` is issued (and ``degeneration_time`` set)
    when ``|A^{1/2}u|^2`` drops below ``1e-3`` times the lower envelope
    :func:`lower_envelope_constant` ``* (1+t)^{-(p+1)/gamma}``. With
    ``stop_on_degeneration`` the integration ends there.

    Raises
    ------
    IntegrationError
        If the integrator fails, with the time reached.
    """
    op = config.op
    lam, g, p, eps = op.eigenvalues, config.gamma, config.p, config.epsilon
    n = op.n
    if times is None:
        times = output_grid(config.horizon, layer=eps)
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0:
        raise ValueError("output grid must start at 0")

    def rhs(t, y):
        u, v = y[:n], y[n : 2 * n]
        sigma = np.dot(lam, u * u)
        damp = (1.0 + t) ** (-p)
        dv = -(damp * v + sigma**g * lam * u) / eps
        return np.concatenate([v, dv, [2.0 * damp * np.dot(v, v)]])

    envelope = lower_envelope_constant(config)
    events = None
    if envelope > 0:
        def degeneration(t, y):
            u = y[:n]
            return np.dot(lam, u * u) - DEGENERATION_FACTOR * envelope * (1.0 + t) ** (-(p + 1) / g)

        degeneration.terminal = bool(stop_on_degeneration)
        degeneration.direction = -1
        events = [degeneration]

    scale = max(float(np.max(np.abs(np.concatenate([config.u0, config.u1])))), 1e-300)
    y0 = np.concatenate([config.u0, config.u1, [0.0]])
    sol = solve_ivp(
        rhs,
        (0.0, float(times[-1])),
        y0,
        method="Radau",
        t_eval=times,
        rtol=config.tol,
        atol=1e-3 * config.tol * scale,
        jac=_jacobian_factory(config),
        first_step=eps / 100.0,
        dense_output=True,
        events=events,
    )
    if sol.status < 0:
        raise IntegrationError(f"hyperbolic integration failed: {sol.message}", sol.t[-1] if sol.t.size else 0.0)

    t_out = sol.t.copy()
    states = sol.y[:n].T.copy()
    velocities = sol.y[n : 2 * n].T.copy()
    traj = HyperbolicTrajectory(
        t_out, states, velocities, _accelerations(t_out, states, velocities, config),
        config, dense=sol.sol,
    )
    traj.integrals["dissipation"] = sol.y[2 * n].copy()

    if events is not None and sol.t_events[0].size:
        traj.degeneration_time = float(sol.t_events[0][0])
    else:
        sigma = (states * states) @ lam
        below = sigma < DEGENERATION_FACTOR * envelope * (1.0 + t_out) ** (-(p + 1) / g)
        if np.any(below):
            traj.degeneration_time = float(t_out[np.argmax(below)])
    if traj.degenerate and warn:
        warnings.warn(
            f"|A^1/2 u_eps|^2 left the expected decay envelope at t={traj.degeneration_time:.6g} "
            f"(epsilon={eps:g} may be too large)",
            DegenerationWarning,
            stacklevel=2,
        )

    one_t = 1.0 + t_out
    v_sq = np.sum(velocities * velocities, axis=1)
    traj.integrals["D4"] = running_integral(v_sq * one_t, t_out)
    sigma = (states * states) @ lam
    if np.all(sigma > 0):
        a_v = (velocities * velocities) @ lam
        traj.integrals["D"] = running_integral(a_v / sigma * one_t ** (2 * p + 1), t_out)
    return traj


def conserved_energy(traj):
    """``eps|u'|^2 + |A^{1/2}u|^{2(gamma+1)}/(gamma+1) + 2 int |u'|^2 (1+s)^{-p}`` per sample."""
    cfg = traj.config
    sigma = (traj.states * traj.states) @ cfg.op.eigenvalues
    v_sq = np.sum(traj.velocities**2, axis=1)
    g = cfg.gamma
    return cfg.epsilon * v_sq + sigma ** (g + 1) / (g + 1) + traj.integrals["dissipation"]


def conserved_energy_residuals(traj):
    """Pointwise deviation from the initial energy, normalised by it."""
    energy = conserved_energy(traj)
    e0 = energy[0]
    return np.abs(energy - e0) / e0 if e0 > 0 else np.abs(energy - e0)


def conserved_energy_residual(traj, config=None):
    """Maximum normalised deviation of the conserved energy over the samples."""
    return float(np.max(conserved_energy_residuals(traj)))


def mechanical_energy(traj):
    """``eps|u'|^2 + |A^{1/2}u|^{2(gamma+1)}/(gamma+1)``; nonincreasing in time."""
    return conserved_energy(traj) - traj.integrals["dissipation"]


# -- a-priori energies ------------------------------------------------------

def _energies_from(t, u, v, acc, d_integral, config):
    lam, g, p, eps = config.op.eigenvalues, config.gamma, config.p, config.epsilon
    sigma = (u * u) @ lam
    if np.any(sigma <= 0):
        raise ValueError("energies are undefined where |A^{1/2}u| vanishes")
    one_t = 1.0 + t
    v_sq = np.sum(v * v, axis=-1)
    a_v = (v * v) @ lam
    au_sq = (u * u) @ (lam * lam)
    sg1 = sigma ** (g + 1)
    q = v_sq * one_t ** (1 - p) / sg1
    d = eps * np.sum(v * acc, axis=-1) / sg1 * one_t ** (2 * p + 1) + d_integral
    r = (eps * np.sum(acc * acc, axis=-1) / sg1 + a_v / sigma) * one_t ** (2 * (p + 1))
    h = (eps * a_v / sigma + sigma ** (g - 1) * au_sq) * one_t ** (p + 1)
    return {"Q": q, "D": d, "R": r, "H": h}


def energies(traj):
    """The four a-priori energies ``Q, D, R, H`` at every sample."""
    if "D" not in traj.integrals:
        raise ValueError("energies are undefined where |A^{1/2}u| vanishes")
    return _energies_from(traj.times, traj.states, traj.velocities, traj.accelerations,
                          traj.integrals["D"], traj.config)


def _sample(t, traj):
    if "D" not in traj.integrals:
        raise ValueError("energies are undefined where |A^{1/2}u| vanishes")
    times = traj.times
    i = int(np.searchsorted(times, t))
    if i < times.size and abs(times[i] - t) <= 1e-14 * (1.0 + t):
        return traj.states[i], traj.velocities[i], traj.accelerations[i], traj.integrals["D"][i]
    if not 0.0 <= t <= times[-1]:
        raise ValueError(f"t={t} lies outside the trajectory")
    cfg = traj.config
    u, v = traj.at(float(t))
    acc = _accelerations(np.array([t]), u[None], v[None], cfg)[0]
    lam, p = cfg.op.eigenvalues, cfg.p
    i0 = i - 1
    f0 = traj.velocities[i0] @ (lam * traj.velocities[i0]) / (traj.states[i0] @ (lam * traj.states[i0]))
    f1 = v @ (lam * v) / (u @ (lam * u))
    piece = 0.5 * (t - times[i0]) * (f0 * (1 + times[i0]) ** (2 * p + 1) + f1 * (1 + t) ** (2 * p + 1))
    return u, v, acc, traj.integrals["D"][i0] + piece


def _energy(name, t, traj, config=None):
    u, v, acc, d_int = _sample(t, traj)
    return float(_energies_from(np.asarray(t, float), u, v, acc, d_int, traj.config)[name])


def energy_Q(t, traj, config=None):
    """``|u'|^2 (1+t)^{1-p} / |A^{1/2}u|^{2(gamma+1)}``."""
    return _energy("Q", t, traj, config)


def energy_D(t, traj, config=None):
    """``eps <u',u''> (1+t)^{2p+1} / |A^{1/2}u|^{2(gamma+1)}`` plus its running integral."""
    return _energy("D", t, traj, config)


def energy_R(t, traj, config=None):
    return _energy("R", t, traj, config)


def energy_H(t, traj, config=None):
    return _energy("H", t, traj, config)


# -- explicit constants -----------------------------------------------------

@dataclass(frozen=True)
class AprioriConstants:
    """Constants of the a-priori estimates, from the data ``(u0, u1, gamma)``.

    ``Q1_0`` and ``H1_0`` are the initial energies evaluated with ``eps = 1``.
    """

    h1: float
    h2: float
    h3: float
    h4: float
    L1: float
    L2: float
    L3: float
    K0: float
    K1: float
    Q1_0: float
    H1_0: float


def compute_apriori_constants(config):
    config.require_mildly_degenerate()
    lam, g = config.op.eigenvalues, config.gamma
    u0, u1 = config.u0, config.u1
    s0 = config.sigma0
    au0_sq = float(np.dot(lam * u0, lam * u0))
    u1_sq = float(np.dot(u1, u1))
    a_u1 = float(np.dot(lam * u1, u1))
    cross = abs(float(np.dot(lam * u0, u1)))

    q1_0 = u1_sq / s0 ** (g + 1)
    h1_0 = a_u1 / s0 + s0 ** (g - 1) * au0_sq
    h1 = 4.0 * (u1_sq + s0 ** (2 * g) * au0_sq) / s0 ** (g + 1)
    h2 = (g - 1) * (np.sqrt(h1) + 1) + np.sqrt(g - 1)
    if g > 1:
        l1 = (3 + 2 * h2 * (np.sqrt(h1) + 1)) * h2**2 / (g - 1) ** 2 + h1_0 + 1
    else:
        l1 = 36 + 2 * a_u1 / s0 + 2 * au0_sq + 0.5 * cross / s0
    k1 = l1 + 1 + h1_0
    l2 = max(4 * k1, q1_0)
    k0 = np.sqrt(l2 * k1) + cross / s0
    h3 = 4 * (4 * g**2 * k0**2 * k1 + l2)
    h4 = h3 + 8 * (k0 + 1) * (3 + 2 * k0) * l2
    l3 = 2 * (
        h4 + l2 / 2
        + 4 * np.sqrt(u1_sq) / s0 ** (g + 1) * (np.sqrt(u1_sq) + s0**g * np.sqrt(au0_sq)) * (k0 + 1)
    )
    return AprioriConstants(*(float(x) for x in (h1, h2, h3, h4, l1, l2, l3, k0, k1, q1_0, h1_0)))


def explicit_epsilon0(config, constants=None):
    """Largest ``eps <= 1`` satisfying the three explicit smallness conditions."""
    c = compute_apriori_constants(config) if constants is None else constants
    g, k0 = config.gamma, c.K0
    ratio = np.sqrt(float(np.dot(config.op.eigenvalues * config.u1, config.u1)) / config.sigma0)
    bounds = [
        1.0,
        1.0 / (8 * (2 + (g + 1) * k0)),
        1.0 / (16 * (k0 + 1) ** 2),
        1.0 / (16 * (k0 + 1) * (1 + (3 + 2 * (g + 1) * k0) ** 2)),
        1.0 / (np.sqrt(c.L3) + np.sqrt(2) * ratio) ** 2,
    ]
    return float(min(bounds))


def empirical_epsilon_threshold(config, max_halvings=20):
    """Largest dyadic ``eps = 2**-k <= 1`` whose solve never degenerates on the horizon.

    Returns ``None`` if every tried value degenerates.
    """
    for k in range(max_halvings + 1):
        eps = 2.0**-k
        try:
            traj = hyperbolic_solve(config.with_(epsilon=eps), stop_on_degeneration=True, warn=False)
        except IntegrationError:
            continue
        if not traj.degenerate:
            return eps
    return None


# -- diagnostics ------------------------------------------------------------

def check_decay_estimates(traj, config=None, fit_window=(1e2, 1e4)):
    """Empirical constants in the decay estimates of a solved trajectory.

    ``fit_window`` selects the time range for the fitted decay exponent of
    ``|A^{1/2}u|^2``; the fit is skipped when fewer than 3 samples fall in it.
    """
    cfg = traj.config if config is None else config
    g, p = cfg.gamma, cfg.p
    t = traj.times
    one_t = 1.0 + t
    u_sq, sigma, au_sq = traj.norms()
    rep = PropertyReport()
    rep.values["D0_sup"] = float(u_sq.max())
    lower = sigma * one_t ** ((p + 1) / g)
    upper = sigma * one_t ** ((p + 1) / (g + 1))
    rep.values["D1_lower_min"] = float(lower.min())
    rep.values["D1_lower_max"] = float(lower.max())
    rep.values["D1_upper_min"] = float(upper.min())
    rep.values["D1_upper_max"] = float(upper.max())
    rep.values["D2_sup"] = float(np.max(sigma ** (g - 1) * au_sq * one_t ** (p + 1)))
    if np.all(sigma > 0):
        v_sq = np.sum(traj.velocities**2, axis=1)
        rep.values["D3_sup"] = float(np.max(v_sq * one_t ** (1 - p) / sigma ** (g + 1)))
    rep.values["D4"] = float(traj.integrals["D4"][-1])
    if fit_window is not None:
        keep = (t >= fit_window[0]) & (t <= fit_window[1])
        if keep.sum() >= 3 and np.all(sigma[keep] > 0):
            fit = fit_power_law(one_t[keep], sigma[keep])
            rep.values["sigma_decay_exponent"] = fit.exponent
    rep.checks["D1_lower_positive"] = rep.values["D1_lower_min"] > 0
    rep.checks["non_degenerate"] = not traj.degenerate
    return rep


def check_apriori_bounds(traj, constants=None, slack=0.05):
    """Compare the monitored energies with the explicit a-priori constants."""
    cfg = traj.config
    c = compute_apriori_constants(cfg) if constants is None else constants
    e = energies(traj)
    lam = cfg.op.eigenvalues
    sigma = (traj.states * traj.states) @ lam
    cross = np.abs(np.sum(traj.velocities * traj.states * lam, axis=1)) / sigma
    rep = PropertyReport()
    rep.values["Q_max"] = float(e["Q"].max())
    rep.values["L2"] = c.L2
    rep.values["H_max"] = float(e["H"].max())
    rep.values["L1"] = c.L1
    rep.values["fond_max"] = float(np.max(cross * (1.0 + traj.times)))
    rep.values["K0"] = c.K0
    rep.checks["SQ"] = rep.values["Q_max"] <= (1 + slack) * c.L2
    rep.checks["SH"] = rep.values["H_max"] <= (1 + slack) * c.L1
    rep.checks["fond"] = rep.values["fond_max"] <= (1 + slack) * c.K0
    return rep


class HyperbolicKirchhoff(BaseEstimator):
    """Estimator-style wrapper around :func:`hyperbolic_solve`.

    ``fit(u0, u1)`` integrates the perturbed problem; ``predict(t)`` returns
    ``u_eps(t)``.
    """

    def __init__(self, eigenvalues=(1.0,), epsilon=1e-3, gamma=1.0, p=0.0,
                 horizon=DEFAULT_HORIZON, tol=DEFAULT_TOL, coercive=None):
        self.eigenvalues = eigenvalues
        self.epsilon = epsilon
        self.gamma = gamma
        self.p = p
        self.horizon = horizon
        self.tol = tol
        self.coercive = coercive

    def fit(self, u0, u1=None):
        op = SpectralOperator(self.eigenvalues, coercive=self.coercive)
        self.config_ = ProblemConfig(op=op, u0=u0, u1=u1, epsilon=self.epsilon,
                                     params=NonlinearityParams(self.gamma, self.p),
                                     horizon=self.horizon, tol=self.tol)
        self.trajectory_ = hyperbolic_solve(self.config_)
        self.n_features_in_ = op.n
        return self

    def predict(self, t):
        check_is_fitted(self, "trajectory_")
        return self.trajectory_.at(t)[0]

    def report(self):
        check_is_fitted(self, "trajectory_")
        return check_decay_estimates(self.trajectory_)
