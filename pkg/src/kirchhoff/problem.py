from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_scalar, check_state
from .spectral import NonlinearityParams, SpectralOperator

DEFAULT_HORIZON = 1e4
DEFAULT_TOL = 1e-9


class IntegrationError(RuntimeError):
    """The time integrator gave up; ``time`` is the last time reached."""

    def __init__(self, message, time):
        super().__init__(f"{message} (at t={time:.6g})")
        self.time = time


class DegenerationWarning(RuntimeWarning):
    """``|A^{1/2}u_eps|^2`` fell far below the expected lower decay envelope."""


@dataclass(frozen=True)
class ProblemConfig:
    """Data of the Cauchy problem for the perturbed and the limit equation.

    ``u1`` defaults to zero. The limit (parabolic) problem ignores
    ``epsilon`` and ``u1``.
    """

    op: SpectralOperator
    u0: np.ndarray
    u1: np.ndarray = None
    epsilon: float = 1e-3
    params: NonlinearityParams = field(default_factory=NonlinearityParams)
    horizon: float = DEFAULT_HORIZON
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not isinstance(self.op, SpectralOperator):
            object.__setattr__(self, "op", SpectralOperator(self.op))
        u0 = check_state(self.u0, n=self.op.n, name="u0")
        u1 = np.zeros_like(u0) if self.u1 is None else check_state(self.u1, n=self.op.n, name="u1")
        for arr in (u0, u1):
            arr.setflags(write=False)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "u1", u1)
        check_scalar(self.epsilon, "epsilon", lo=0.0, hi=1.0, lo_open=True)
        check_scalar(self.horizon, "horizon", lo=0.0, lo_open=True)
        check_scalar(self.tol, "tol", lo=0.0, lo_open=True)

    @property
    def gamma(self):
        return self.params.gamma

    @property
    def p(self):
        return self.params.p

    @property
    def sigma0(self):
        """``|A^{1/2}u0|^2``."""
        return float(np.dot(self.op.eigenvalues, self.u0 * self.u0))

    def require_mildly_degenerate(self):
        if not self.sigma0 > 0:
            raise ValueError("initial datum must satisfy A^{1/2}u0 != 0")

    def with_(self, **changes):
        return replace(self, **changes)
