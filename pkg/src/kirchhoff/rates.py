"""Least-squares power-law fits on log-log axes."""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_same_dim


@dataclass(frozen=True)
class RateFit:
    """``y ~ exp(log_prefactor) * x**exponent`` over ``window``."""

    exponent: float
    log_prefactor: float
    r_squared: float
    window: tuple
    n_samples: int

    @property
    def prefactor(self):
        return float(np.exp(self.log_prefactor))

    def predict(self, x):
        return np.exp(self.log_prefactor) * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(x, y=None, window=None):
    """Fit ``log y = exponent * log x + log_prefactor`` by ordinary least squares.

    Parameters
    ----------
    x, y : array_like
        Positive samples of equal length. With ``y`` omitted, ``x`` is a
        sequence of ``(x, y)`` pairs.
    window : (float, float), optional
        Closed range of ``x`` to keep. Defaults to the full range.

    Raises
    ------
    ValueError
        If any kept value is nonpositive or fewer than 3 samples remain.
    """
    if y is None:
        pairs = np.asarray(x, dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("samples must be a sequence of (x, y) pairs")
        x, y = pairs[:, 0], pairs[:, 1]
    x, y = check_same_dim(x, y)
    if window is not None:
        lo, hi = float(window[0]), float(window[1])
        if not lo < hi:
            raise ValueError(f"degenerate window {window!r}")
        keep = (x >= lo) & (x <= hi)
        x, y = x[keep], y[keep]
    else:
        lo, hi = (float(x.min()), float(x.max())) if x.size else (np.nan, np.nan)
    if x.size < 3:
        raise ValueError(f"need at least 3 samples in the window, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit requires strictly positive x and y")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise ValueError("all x samples coincide; slope is undefined")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    # A constant y is fit exactly; report a perfect score rather than 0/0.
    r2 = 1.0 if ss_tot <= 1e-28 * max(1.0, ly.size) else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return RateFit(float(slope), float(intercept), min(r2, 1.0), (lo, hi), int(x.size))


class PowerLawFit(RegressorMixin, BaseEstimator):
    """Estimator wrapper for :func:`fit_power_law`.

    >>> est = PowerLawFit().fit([1.0, 10.0, 100.0], [3.0, 0.03, 0.0003])
    >>> round(est.exponent_, 12)
    -2.0
    """

    def __init__(self, window=None):
        self.window = window

    def fit(self, X, y):
        x = np.ravel(np.asarray(X, dtype=float))
        self.fit_ = fit_power_law(x, y, self.window)
        self.exponent_ = self.fit_.exponent
        self.log_prefactor_ = self.fit_.log_prefactor
        self.r_squared_ = self.fit_.r_squared
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        return self.fit_.predict(np.ravel(np.asarray(X, dtype=float)))
