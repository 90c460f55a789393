"""Input validation helpers shared by the estimators and the CLI."""
import numbers

import numpy as np
from sklearn.utils import check_array


def check_rng(random_state=None):
    """Turn ``None``, an int seed, or a Generator into a ``np.random.Generator``."""
    if random_state is None or isinstance(random_state, (numbers.Integral, np.integer)):
        return np.random.default_rng(random_state)
    if isinstance(random_state, np.random.Generator):
        return random_state
    if isinstance(random_state, np.random.SeedSequence):
        return np.random.default_rng(random_state)
    raise ValueError(f"{random_state!r} cannot be used to seed a numpy Generator")


def check_weights(values, name="weights"):
    """Validate an unnormalized pmf: 1-D, finite, nonnegative, not all zero."""
    arr = check_array(values, ensure_2d=False, dtype=np.float64, input_name=name)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative")
    if not np.any(arr > 0):
        raise ValueError(f"{name} must have at least one positive entry")
    return arr


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, (numbers.Integral, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def uniform_open(rng):
    """One draw from the open interval (0, 1)."""
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u
