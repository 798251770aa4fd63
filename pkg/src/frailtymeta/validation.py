"""Input validation helpers shared by the model modules and estimators."""

import math
import warnings

import numpy as np

from .exceptions import FrailtyDomainError, NumericalClampWarning

# Probabilities within this distance outside [0, 1] are treated as round-off.
PROB_SLACK = 1e-9


def check_finite(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise FrailtyDomainError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(name, value):
    check_finite(name, value)
    if np.any(np.asarray(value, dtype=float) <= 0):
        raise FrailtyDomainError(f"{name} must be > 0, got {value!r}")
    return value


def check_nonnegative(name, value):
    check_finite(name, value)
    if np.any(np.asarray(value, dtype=float) < 0):
        raise FrailtyDomainError(f"{name} must be >= 0, got {value!r}")
    return value


def check_proportion(name, value):
    check_finite(name, value)
    arr = np.asarray(value, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise FrailtyDomainError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def check_count(name, value, minimum=0):
    if isinstance(value, bool) or not float(value).is_integer() or value < minimum:
        raise FrailtyDomainError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def clamp_probability(value, name="probability"):
    """Clamp round-off excursions outside [0, 1], warning when it happens.

    Excursions larger than ``PROB_SLACK`` indicate a real bug or a bad
    input and raise instead.
    """
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)):
        raise FrailtyDomainError(f"{name} is NaN")
    low, high = arr.min(initial=0.0), arr.max(initial=1.0)
    if low < -PROB_SLACK or high > 1 + PROB_SLACK:
        raise FrailtyDomainError(f"{name} outside [0, 1] beyond round-off: {value!r}")
    if low < 0 or high > 1:
        warnings.warn(f"{name} clamped to [0, 1] (was {value!r})",
                      NumericalClampWarning, stacklevel=3)
        arr = np.clip(arr, 0.0, 1.0)
    return float(arr) if arr.ndim == 0 else arr


def as_float(value):
    """Return a Python float for 0-d input, the array otherwise."""
    arr = np.asarray(value, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def isclose_or_nan(a, b, rel=1e-12):
    if a is None or b is None:
        return a is b
    if math.isnan(a) and math.isnan(b):
        return True
    return math.isclose(a, b, rel_tol=rel)
