"""Input validation helpers shared by the estimators and the functional API."""

import numbers

import numpy as np
from sklearn.utils import check_array


def check_state(x, n=None, name="x"):
    """Return ``x`` as a finite 1-D float array, optionally of length ``n``."""
    arr = check_array(
        np.atleast_1d(np.asarray(x, dtype=float)),
        ensure_2d=False,
        dtype=np.float64,
        ensure_all_finite=True,
        input_name=name,
    )
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {n}")
    return arr


def check_same_dim(x, y):
    x = check_state(x, name="x")
    y = check_state(y, n=x.shape[0], name="y")
    return x, y


def check_scalar(value, name, *, lo=None, hi=None, lo_open=False, hi_open=False):
    """Validate a real scalar against an (optionally open) interval."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if lo is not None and (value < lo or (lo_open and value == lo)):
        op = ">" if lo_open else ">="
        raise ValueError(f"{name} must be {op} {lo}, got {value}")
    if hi is not None and (value > hi or (hi_open and value == hi)):
        op = "<" if hi_open else "<="
        raise ValueError(f"{name} must be {op} {hi}, got {value}")
    return value


def check_times(times, name="times"):
    t = check_state(times, name=name)
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return t
