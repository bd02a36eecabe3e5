"""Boundary-layer corrector: ``eps theta'' + (1+t)^{-p} theta' = 0``,
``theta(0) = 0``, ``theta'(0) = w0``.

Every quantity is ``w0`` times a scalar profile, so the vector functions
below are thin wrappers around :func:`profile` and its integral.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ._validation import check_scalar, check_state
from .spectral import sobolev_norm_sq

QUAD_ABS_TOL = 1e-12
TAIL_FRACTION = 1e-14


@dataclass(frozen=True)
class CorrectorSpec:
    epsilon: float
    p: float
    w0: np.ndarray

    def __post_init__(self):
        check_scalar(self.epsilon, "epsilon", lo=0.0, lo_open=True)
        check_scalar(self.p, "p", lo=0.0, hi=1.0)
        w0 = check_state(self.w0, name="w0")
        w0.setflags(write=False)
        object.__setattr__(self, "w0", w0)

    @classmethod
    def from_config(cls, config):
        return cls(config.epsilon, config.p, compute_w0(config.u0, config.u1, config.op, config.params))


def compute_w0(u0, u1, op, params):
    """Initial-layer datum ``u1 + |A^{1/2}u0|^{2 gamma} A u0``."""
    u0 = check_state(u0, n=op.n, name="u0")
    u1 = check_state(u1, n=op.n, name="u1")
    lam = op.eigenvalues
    sigma = float(np.dot(lam, u0 * u0))
    return u1 + sigma**params.gamma * lam * u0


def _exponent(t, eps, p):
    """``(1/eps) int_0^t (1+s)^{-p} ds``."""
    if p == 1.0:
        return np.log1p(t) / eps
    return np.expm1((1.0 - p) * np.log1p(t)) / ((1.0 - p) * eps)


def profile(t, epsilon, p):
    """Scalar factor ``g`` with ``theta'(t) = g(t) w0``; ``g(0)=1``, decreasing."""
    return np.exp(-_exponent(np.asarray(t, dtype=float), epsilon, p))


def profile_derivative(t, epsilon, p):
    """``g'(t) = -(1+t)^{-p} g(t) / eps`` by differentiating the closed form."""
    t = np.asarray(t, dtype=float)
    return -((1.0 + t) ** (-p)) * profile(t, epsilon, p) / epsilon


def _quad_split(a, b, epsilon, p):
    """``int_a^b g`` with breakpoints at geometric multiples of the local decay scale."""
    scale = epsilon * (1.0 + a) ** p
    edges = [a]
    step = scale
    while edges[-1] < b and profile(edges[-1], epsilon, p) > 1e-300:
        edges.append(min(a + step, b))
        step *= 4.0
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = quad(profile, lo, hi, args=(epsilon, p), epsabs=QUAD_ABS_TOL / 10, epsrel=1e-13, limit=200)
        total += val
    return total


def profile_integral(t, epsilon, p):
    """``int_0^t g(s) ds`` (vectorised over ``t``)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be nonnegative")
    if p == 0.0:
        return -epsilon * np.expm1(-t_arr / epsilon)
    if p == 1.0:
        if epsilon >= 1.0:
            raise ValueError("closed-form corrector for p=1 requires epsilon < 1")
        return epsilon / (1.0 - epsilon) * -np.expm1((1.0 - 1.0 / epsilon) * np.log1p(t_arr))
    # Cumulative quadrature over the sorted times.
    flat = np.atleast_1d(t_arr).ravel()
    vals = np.empty_like(flat)
    acc = prev = 0.0
    for idx in np.argsort(flat, kind="stable"):
        if flat[idx] > prev:
            acc += _quad_split(prev, flat[idx], epsilon, p)
            prev = flat[idx]
        vals[idx] = acc
    return vals.reshape(t_arr.shape) if t_arr.ndim else float(vals[0])


def _outer(scalar, w0):
    scalar = np.asarray(scalar, dtype=float)
    return scalar[..., None] * w0 if scalar.ndim else float(scalar) * w0


def theta_prime(t, spec):
    """``theta'(t) = w0 exp(-(1/eps) int_0^t (1+s)^{-p} ds)``."""
    return _outer(profile(t, spec.epsilon, spec.p), spec.w0)


def theta_second(t, spec):
    return _outer(profile_derivative(t, spec.epsilon, spec.p), spec.w0)


def theta(t, spec):
    """``theta(t) = int_0^t theta'``; closed form for ``p`` in {0, 1}, quadrature otherwise."""
    return _outer(profile_integral(t, spec.epsilon, spec.p), spec.w0)


def weighted_profile_integral(epsilon, p, delta):
    """``int_0^inf (1+t)^delta g(t) dt`` with a certified tail cut-off.

    For ``eps < 1/(2+2 delta)`` the integrand ``h`` satisfies
    ``(log h)' <= (delta - 1/eps)/(1+t)``, so the tail beyond ``T`` is at
    most ``h(T)(1+T)/(1/eps - delta - 1)``. Integration stops once that bound
    falls below ``1e-14`` of the accumulated total.
    """
    def weighted(t):
        return (1.0 + t) ** delta * profile(t, epsilon, p)

    total = 0.0
    a, b = 0.0, epsilon
    decay = 1.0 / epsilon - delta - 1.0
    while True:
        val, _ = quad(weighted, a, b, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
        tail = weighted(b) * (1.0 + b) / decay
        if tail <= TAIL_FRACTION * total:
            return total
        a, b = b, 2.0 * b + epsilon


def check_theta_integral_bound(spec, delta, j, op):
    """Evaluate ``I = int_0^inf (1+t)^delta |A^{j/2} theta'(t)| dt``.

    Returns ``(I, I / (|A^{j/2} w0| eps))``. Since ``theta' = g w0`` the
    ratio does not depend on ``w0``; for ``w0`` with ``A^{j/2}w0 = 0`` the
    value is 0 and the ratio is reported as that ``w0``-free constant.
    """
    delta = check_scalar(delta, "delta", lo=0.0)
    if j not in (0, 1):
        raise ValueError("j must be 0 or 1")
    eps = spec.epsilon
    if not eps < 1.0 / (2.0 + 2.0 * delta):
        raise ValueError(f"hypothesis eps < 1/(2+2 delta) = {1 / (2 + 2 * delta):g} violated by eps={eps:g}")
    density = weighted_profile_integral(eps, spec.p, delta)
    norm = np.sqrt(sobolev_norm_sq(spec.w0, op, j / 2.0))
    return float(norm * density), float(density / eps)
