"""Numeric oracles for comparison lemmas and the monotonicity inequality.

An oracle receives sampled functions, checks the differential hypothesis
pointwise on the grid and then checks the conclusion on the longest initial
stretch of the grid where the hypothesis holds. A report is ``passed`` when
no conclusion violation is found there; hypothesis violations are listed
separately, so a vacuous pass is recognisable (``hypothesis_holds`` False).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ._validation import check_scalar, check_state, check_times
from .spectral import SpectralOperator

SLACK = 1e-9
MPROP_SLACK = 1e-12
FD_SAFETY = 10.0
ORACLES = ("sqrt-comparison", "linear-comparison", "envelopes", "FG-barrier", "mprop")
DEFAULT_SEED = 20240611


@dataclass
class SampledFunction:
    """Samples of a function and of its derivative on an increasing grid.

    If ``derivative_values`` is omitted it is estimated by second-order
    centred differences and ``analytic`` is set to False; oracles then widen
    the hypothesis tolerance by :meth:`derivative_slack`.
    """

    times: np.ndarray
    values: np.ndarray
    derivative_values: np.ndarray = None
    analytic: bool = True

    def __post_init__(self):
        self.times = check_times(self.times)
        self.values = check_state(self.values, n=self.times.shape[0], name="values")
        if self.derivative_values is None:
            self.analytic = False
            self.derivative_values = (
                np.gradient(self.values, self.times, edge_order=2) if self.times.size > 2
                else np.gradient(self.values, self.times)
            )
        else:
            self.derivative_values = check_state(self.derivative_values, n=self.times.shape[0],
                                                 name="derivative_values")

    @classmethod
    def from_callable(cls, times, f, df=None):
        times = np.asarray(times, dtype=float)
        values = np.broadcast_to(np.asarray(f(times), dtype=float), times.shape).copy()
        deriv = None if df is None else np.broadcast_to(np.asarray(df(times), dtype=float), times.shape).copy()
        return cls(times, values, deriv)

    def derivative_slack(self):
        """Per-sample bound on the centred-difference error, ``10 h^2 |f'''| / 6``; zero if analytic."""
        if self.analytic or self.times.size < 4:
            return np.zeros_like(self.values)
        h = np.gradient(self.times)
        third = np.gradient(np.gradient(self.derivative_values, self.times, edge_order=2), self.times, edge_order=2)
        return FD_SAFETY * h * h * np.abs(third) / 6.0


@dataclass
class CheckReport:
    oracle: str
    passed: bool
    hypothesis_holds: bool
    hypothesis_violations: np.ndarray
    conclusion_violations: np.ndarray
    checked_until: float
    values: dict = field(default_factory=dict)

    @property
    def status(self):
        return "PASS" if self.passed else "FAIL"

    @property
    def first_hypothesis_violation(self):
        return float(self.hypothesis_violations[0]) if self.hypothesis_violations.size else None

    def summary(self):
        parts = [f"{self.oracle}: {self.status}"]
        if not self.hypothesis_holds:
            parts.append(f"hypothesis fails at {self.hypothesis_violations.size} samples, "
                         f"first t={self.first_hypothesis_violation:.6g}")
        if self.conclusion_violations.size:
            parts.append(f"conclusion fails at t={self.conclusion_violations[0]:.6g}")
        return "; ".join(parts)


def _same_grid(*funcs):
    t = funcs[0].times
    for f in funcs[1:]:
        if f.times.shape != t.shape or not np.array_equal(f.times, t):
            raise ValueError("sampled functions must share one time grid")
    return t


def _nonnegative(f, name):
    if np.any(f.values < 0):
        raise ValueError(f"{name} must be nonnegative on the grid")


def _judge(name, times, lhs, rhs, hyp_slack, value, bound, extra=None):
    """Hypothesis ``lhs <= rhs`` pointwise, then ``value <= bound`` on the valid prefix."""
    hyp_ok = lhs <= rhs + SLACK * (1.0 + np.abs(lhs) + np.abs(rhs)) + hyp_slack
    bad = np.flatnonzero(~hyp_ok)
    stop = bad[0] if bad.size else times.size
    concl_ok = value[:stop] <= bound[:stop] + SLACK * (1.0 + np.abs(bound[:stop]))
    concl_bad = np.flatnonzero(~concl_ok)
    values = {"max_excess": float(np.max(value[:stop] - bound[:stop])) if stop else float("nan")}
    values.update(extra or {})
    return CheckReport(
        oracle=name,
        passed=not concl_bad.size,
        hypothesis_holds=not bad.size,
        hypothesis_violations=times[bad],
        conclusion_violations=times[concl_bad],
        checked_until=float(times[stop - 1]) if stop else float("nan"),
        values=values,
    )


def oracle_ode_sqrt(f, phi, a):
    """``f' <= -phi sqrt(f)(sqrt(f) - a)`` implies ``f <= max(f(0), a^2)``."""
    a = check_scalar(a, "a", lo=0.0)
    t = _same_grid(f, phi)
    _nonnegative(f, "f")
    _nonnegative(phi, "phi")
    root = np.sqrt(f.values)
    rhs = -phi.values * root * (root - a)
    bound = max(f.values[0], a * a)
    return _judge("sqrt-comparison", t, f.derivative_values, rhs, f.derivative_slack(),
                  f.values, np.full_like(t, bound), {"bound": bound})


def oracle_ode_linear(f, phi, a):
    """``f' <= -phi f (f - a)`` implies ``f <= max(f(0), a)``."""
    a = check_scalar(a, "a", lo=0.0)
    t = _same_grid(f, phi)
    _nonnegative(f, "f")
    _nonnegative(phi, "phi")
    rhs = -phi.values * f.values * (f.values - a)
    bound = max(f.values[0], a)
    return _judge("linear-comparison", t, f.derivative_values, rhs, f.derivative_slack(),
                  f.values, np.full_like(t, bound), {"bound": bound})


def envelope_constants(w0, a, p, gamma):
    """Explicit ``(gamma_1, gamma_2)``: both are ``w0`` and ``((p+1)/(a gamma))^{1/gamma}`` combined by max/min."""
    k = ((p + 1.0) / (a * gamma)) ** (1.0 / gamma)
    return max(w0, k), min(w0, k)


def oracle_ode_envelopes(w, a, p, gamma, direction="upper"):
    """Power-law envelopes for ``w' <= -a(1+t)^p w^{1+gamma}`` (upper) or ``>=`` (lower).

    The conclusion is checked against the explicit constant from
    :func:`envelope_constants`; the empirical sup (upper) or inf (lower)
    of ``w (1+t)^{(p+1)/gamma}`` is reported as ``empirical_constant``.
    """
    a = check_scalar(a, "a", lo=0.0, lo_open=True)
    p = check_scalar(p, "p", lo=0.0, hi=1.0)
    gamma = check_scalar(gamma, "gamma", lo=0.0, lo_open=True)
    if direction not in ("upper", "lower"):
        raise ValueError("direction must be 'upper' or 'lower'")
    t = w.times
    if np.any(w.values <= 0):
        raise ValueError("w must be positive on the grid")
    one_t = 1.0 + t
    drift = -a * one_t**p * w.values ** (1.0 + gamma)
    scaled = w.values * one_t ** ((p + 1.0) / gamma)
    g1, g2 = envelope_constants(float(w.values[0]), a, p, gamma)
    slack = w.derivative_slack()
    if direction == "upper":
        rep = _judge("envelopes", t, w.derivative_values, drift, slack, scaled, np.full_like(t, g1))
        rep.values.update(constant=g1, empirical_constant=float(np.max(scaled)))
    else:
        rep = _judge("envelopes", t, -w.derivative_values, -drift, slack, -scaled, np.full_like(t, -g2))
        rep.values.update(constant=g2, empirical_constant=float(np.min(scaled)))
        rep.values["max_excess"] = -rep.values["max_excess"]
    rep.values["direction"] = direction
    return rep


def fg_barrier(F0, G0, a, b, c):
    """``(sigma_0, barrier)`` with ``sigma_0 = (c + sqrt(ab))/a``."""
    s0 = (c + np.sqrt(a * b)) / a
    return s0, s0 * s0 * (1.0 + b + c * s0) + F0 + G0 + 1.0


def oracle_FG_barrier(F, G, phi, a, b, c):
    """``(F+G)' <= -phi(F + aG^2 - bG - cG^{3/2})`` implies ``F + G <= barrier``."""
    a = check_scalar(a, "a", lo=0.0, lo_open=True)
    b = check_scalar(b, "b", lo=0.0)
    c = check_scalar(c, "c", lo=0.0)
    t = _same_grid(F, G, phi)
    _nonnegative(F, "F")
    _nonnegative(G, "G")
    if np.any(phi.values <= 0):
        raise ValueError("phi must be positive on the grid")
    g = G.values
    rhs = -phi.values * (F.values + a * g * g - b * g - c * g**1.5)
    s0, barrier = fg_barrier(float(F.values[0]), float(G.values[0]), a, b, c)
    total = F.values + G.values
    return _judge("FG-barrier", t, F.derivative_values + G.derivative_values, rhs,
                  F.derivative_slack() + G.derivative_slack(), total, np.full_like(t, barrier),
                  {"sigma0": float(s0), "barrier": float(barrier)})


def oracle_mprop(x, y, op, m):
    """Evaluate both sides of ``<m_x Ax - m_y Ay, x-y> >= (m_x+m_y)/2 |A^{1/2}(x-y)|^2``.

    ``m_x = m(|A^{1/2}x|^2)``. ``m`` must be nondecreasing; this is not checked.
    """
    if not isinstance(op, SpectralOperator):
        op = SpectralOperator(op)
    x = check_state(x, n=op.n, name="x")
    y = check_state(y, n=op.n, name="y")
    lam = op.eigenvalues
    mx, my = float(m(float(np.dot(lam, x * x)))), float(m(float(np.dot(lam, y * y))))
    d = x - y
    lhs = float(np.dot(lam * (mx * x - my * y), d))
    rhs = 0.5 * (mx + my) * float(np.dot(lam, d * d))
    return lhs, rhs, bool(lhs >= rhs - MPROP_SLACK * max(1.0, abs(lhs)))


# Random hypothesis-satisfying instances.

def _random_phi(rng, positive):
    c0 = rng.uniform(0.1, 2.0) if positive else rng.choice([0.0, rng.uniform(0.0, 2.0)])
    c1, om = rng.uniform(0.0, 2.0), rng.uniform(0.1, 5.0)
    phi = lambda t: c0 + c1 * np.sin(om * t) ** 2  # noqa: E731
    return phi


def _integrate(rhs, y0, horizon, n_out=201):
    t = np.linspace(0.0, horizon, n_out)
    sol = solve_ivp(rhs, (0.0, horizon), y0, method="DOP853", t_eval=t, rtol=1e-11, atol=1e-13)
    if sol.status != 0:
        raise RuntimeError(f"instance generation failed: {sol.message}")
    return t, sol.y


def random_sqrt_instance(rng):
    a = rng.choice([0.0, rng.uniform(0.0, 2.0)])
    f0 = rng.uniform(0.01, 4.0)
    mu = rng.choice([0.0, rng.uniform(0.0, 1.0)])
    phi = _random_phi(rng, positive=False)

    def rhs_f(t, f):
        root = np.sqrt(f)
        return -phi(t) * root * (root - a) - mu * f

    # Integrated in log f, which keeps f positive.
    t, y = _integrate(lambda t, y: -phi(t) * (1.0 - a * np.exp(-0.5 * y)) - mu, [np.log(f0)], rng.uniform(1.0, 20.0))
    f = np.exp(y[0])
    return (SampledFunction(t, f, rhs_f(t, f)), SampledFunction.from_callable(t, phi), a)


def random_linear_instance(rng):
    a = rng.choice([0.0, rng.uniform(0.0, 3.0)])
    f0 = rng.uniform(0.01, 4.0)
    mu = rng.choice([0.0, rng.uniform(0.0, 1.0)])
    phi = _random_phi(rng, positive=False)

    def rhs_f(t, f):
        return -phi(t) * f * (f - a) - mu * f

    t, y = _integrate(lambda t, y: -phi(t) * (np.exp(y) - a) - mu, [np.log(f0)], rng.uniform(1.0, 20.0))
    f = np.exp(y[0])
    return (SampledFunction(t, f, rhs_f(t, f)), SampledFunction.from_callable(t, phi), a)


def random_envelope_instance(rng):
    """Exact solution of ``w' = -a'(1+t)^p w^{1+gamma}`` with ``a'`` on the hypothesis side of ``a``."""
    gamma = rng.uniform(0.5, 3.0)
    p = rng.choice([0.0, 1.0, rng.uniform(0.0, 1.0)])
    a = rng.uniform(0.1, 3.0)
    direction = rng.choice(["upper", "lower"])
    factor = rng.choice([1.0, rng.uniform(1.0, 2.0)])
    a_eff = a * factor if direction == "upper" else a / factor
    w0 = rng.uniform(0.05, 5.0)
    t = np.concatenate([[0.0], np.geomspace(1e-3, rng.uniform(10.0, 1e4), 300)])
    z = w0**-gamma + a_eff * gamma * np.expm1((p + 1.0) * np.log1p(t)) / (p + 1.0)
    w = z ** (-1.0 / gamma)
    dw = -a_eff * (1.0 + t) ** p * w ** (1.0 + gamma)
    return SampledFunction(t, w, dw), a, p, gamma, str(direction)


def random_fg_instance(rng):
    """``G' = -phi(aG^2 - bG - cG^{3/2}) + tau phi F``, ``F' = -phi F(1+tau) - mu phi F``."""
    a = rng.uniform(0.1, 3.0)
    b, c = rng.choice([0.0, rng.uniform(0.0, 3.0)]), rng.choice([0.0, rng.uniform(0.0, 3.0)])
    tau, mu = rng.uniform(0.0, 2.0), rng.choice([0.0, rng.uniform(0.0, 1.0)])
    phi = _random_phi(rng, positive=True)

    def rhs(t, y):
        F, G = y[0], max(y[1], 0.0)
        ph = phi(t)
        return [-ph * F * (1.0 + tau + mu), -ph * (a * G * G - b * G - c * G**1.5) + tau * ph * F]

    t, y = _integrate(rhs, [rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)], rng.uniform(1.0, 20.0))
    F, G = np.maximum(y[0], 0.0), np.maximum(y[1], 0.0)
    d = np.array([rhs(ti, [Fi, Gi]) for ti, Fi, Gi in zip(t, F, G)])
    return (SampledFunction(t, F, d[:, 0]), SampledFunction(t, G, d[:, 1]),
            SampledFunction.from_callable(t, phi), a, b, c)


def random_mprop_instance(rng):
    n = int(rng.integers(1, 17))
    kind = rng.choice(["coercive", "noncoercive"])
    if kind == "coercive":
        lam = rng.uniform(0.1, 10.0, n)
    else:
        lam = 1.0 / np.arange(1, n + 1) ** 2 * rng.uniform(0.5, 2.0)
        lam[rng.random(n) < 0.2] = 0.0
    op = SpectralOperator(lam, coercive=kind == "coercive")
    gamma = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
    x = rng.normal(size=n) * rng.uniform(0.1, 3.0)
    y = rng.normal(size=n) * rng.uniform(0.1, 3.0)
    return x, y, op, (lambda r, g=gamma: r**g)


def run_oracle_suite(n_instances=1000, seed=DEFAULT_SEED, oracles=ORACLES):
    """Run every oracle on ``n_instances`` random instances.

    Returns ``{oracle: {"passed": int, "failed": int, "vacuous": int, "failures": [index, ...]}}``.
    """
    rng = np.random.default_rng(seed)
    out = {}
    for name in oracles:
        if name not in ORACLES:
            raise ValueError(f"unknown oracle {name!r}")
        passed = failed = vacuous = 0
        failures = []
        for i in range(n_instances):
            if name == "sqrt-comparison":
                ok, held = _report_flags(oracle_ode_sqrt(*random_sqrt_instance(rng)))
            elif name == "linear-comparison":
                ok, held = _report_flags(oracle_ode_linear(*random_linear_instance(rng)))
            elif name == "envelopes":
                ok, held = _report_flags(oracle_ode_envelopes(*random_envelope_instance(rng)))
            elif name == "FG-barrier":
                ok, held = _report_flags(oracle_FG_barrier(*random_fg_instance(rng)))
            else:
                ok, held = oracle_mprop(*random_mprop_instance(rng))[2], True
            # Generated instances satisfy the hypothesis; a vacuous pass counts as a failure.
            if ok and held:
                passed += 1
            else:
                failed += 1
                vacuous += int(ok and not held)
                failures.append(i)
        out[name] = {"passed": passed, "failed": failed, "vacuous": vacuous, "failures": failures}
    return out


def _report_flags(rep):
    return rep.passed, rep.hypothesis_holds
