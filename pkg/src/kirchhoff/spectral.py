"""Diagonal spectral model of a nonnegative self-adjoint operator.

States are plain 1-D float arrays holding coordinates in the eigenbasis of
``A``; every Sobolev-type norm is then an exact weighted sum.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_same_dim, check_scalar, check_state

PRESETS = ("coercive-uniform", "noncoercive-1/k2")


@dataclass(frozen=True)
class SpectralOperator:
    """Finite diagonal operator ``A = diag(eigenvalues)``.

    Parameters
    ----------
    eigenvalues : array_like
        Nonnegative eigenvalues, one per retained mode.
    coercive : bool, optional
        Whether the truncation models a coercive operator. Defaults to
        ``min(eigenvalues) > 0``. A truncated family whose eigenvalues
        accumulate at 0 (such as ``1/k**2``) is flagged ``coercive=False`` and
        then reports ``nu == 0``, the infimum of the untruncated spectrum.
    """

    eigenvalues: np.ndarray
    coercive: bool = field(default=None)

    def __post_init__(self):
        lam = check_state(self.eigenvalues, name="eigenvalues")
        if np.any(lam < 0):
            raise ValueError("eigenvalues must be nonnegative")
        lam = lam.copy()
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        if self.coercive is None:
            object.__setattr__(self, "coercive", bool(lam.min() > 0))
        elif self.coercive and lam.min() <= 0:
            raise ValueError("an operator with a zero eigenvalue cannot be coercive")

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    @property
    def nu(self):
        """Coercivity constant; 0 for operators flagged noncoercive."""
        return float(self.eigenvalues.min()) if self.coercive else 0.0

    def power(self, alpha):
        """Diagonal of ``A**alpha`` with the convention ``0**0 == 1``."""
        alpha = check_scalar(alpha, "alpha", lo=0.0)
        if alpha == 0.0:
            return np.ones_like(self.eigenvalues)
        return self.eigenvalues**alpha

    @classmethod
    def from_preset(cls, name, n=8):
        """Build one of the named operator families.

        ``"coercive-uniform"`` has evenly spaced eigenvalues ``1, 2, ..., n``;
        ``"noncoercive-1/k2"`` has ``1/k**2`` for ``k = 1..n`` and is flagged
        noncoercive.
        """
        k = np.arange(1, int(n) + 1, dtype=float)
        if name == "coercive-uniform":
            return cls(k, coercive=True)
        if name == "noncoercive-1/k2":
            return cls(1.0 / k**2, coercive=False)
        raise ValueError(f"unknown operator preset {name!r}; choose from {PRESETS}")

    def __eq__(self, other):
        if not isinstance(other, SpectralOperator):
            return NotImplemented
        return self.coercive == other.coercive and np.array_equal(
            self.eigenvalues, other.eigenvalues
        )

    def __hash__(self):
        return hash((self.eigenvalues.tobytes(), self.coercive))


@dataclass(frozen=True)
class NonlinearityParams:
    """Kirchhoff exponent ``gamma >= 1`` and dissipation exponent ``p`` in [0, 1]."""

    gamma: float = 1.0
    p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", check_scalar(self.gamma, "gamma", lo=1.0))
        object.__setattr__(self, "p", check_scalar(self.p, "p", lo=0.0, hi=1.0))


def _as_state(x, op):
    return check_state(x, n=op.n)


def apply_power_A(x, op, alpha):
    """Return ``A**alpha x``."""
    x = _as_state(x, op)
    return op.power(alpha) * x


def sobolev_norm_sq(x, op, alpha=0.5):
    """Return ``|A**alpha x|**2 = sum_k lam_k**(2 alpha) c_k**2``."""
    x = _as_state(x, op)
    return float(np.dot(op.power(2.0 * check_scalar(alpha, "alpha", lo=0.0)), x * x))


def inner(x, y):
    x, y = check_same_dim(x, y)
    return float(np.dot(x, y))


def m_eval(sigma, params):
    """Kirchhoff nonlinearity ``m(sigma) = sigma**gamma``."""
    sigma = check_scalar(sigma, "sigma", lo=0.0)
    return sigma**params.gamma


def kirchhoff_force(u, op, params):
    """``|A^{1/2}u|^{2 gamma} A u``, the nonlocal stiffness term (no validation)."""
    lam = op.eigenvalues
    sigma = float(np.dot(lam, u * u))
    return sigma**params.gamma * lam * u


def norms_sq(states, op, alphas=(0.0, 0.5, 1.0)):
    """Squared norms ``|A**a u|**2`` for each row of ``states``.

    Returns an array of shape ``(len(alphas), n_samples)``.
    """
    states = np.atleast_2d(states)
    weights = np.stack([op.power(2.0 * a) for a in alphas])
    return weights @ (states * states).T
