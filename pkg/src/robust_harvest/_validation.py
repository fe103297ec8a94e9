"""Small argument checks shared by the public operations."""

import math

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import InputError


def as_float_array(value, name):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite")
    return arr


def check_nonnegative(value, name):
    arr = as_float_array(value, name)
    if np.any(arr < 0):
        raise InputError(f"{name} must be >= 0, got {value!r}")
    return arr


def check_unit_interval(value, name):
    arr = as_float_array(value, name)
    if np.any((arr < 0) | (arr > 1)):
        raise InputError(f"{name} must lie in [0, 1], got {value!r}")
    return arr


def check_positive_scalar(value, name, allow_inf=False):
    value = float(value)
    if math.isnan(value) or value <= 0 or (math.isinf(value) and not allow_inf):
        raise InputError(f"{name} must be a positive number, got {value!r}")
    return value


def check_time_population(X):
    """Validate an (n_samples, 2) array of (t, n) query points."""
    return check_array(X, ensure_2d=True, dtype=float, ensure_min_features=2)


def check_1d(values, name):
    arr = np.atleast_1d(as_float_array(values, name))
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional")
    return arr
