"""Input-validation helpers shared across the pipeline."""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Bad configuration or missing prerequisite; maps to CLI exit code 2."""


def check_positive(name, value):
    if value <= 0:
        raise ValidationError(f"{name} must be positive, got {value}")
    return value


def check_unit_interval(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")
    return value


def as_float_matrix(X, name="X"):
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValidationError(f"{name} must be a 2-d array, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValidationError(f"{name} contains non-finite values")
    return X


def check_multi_hot(Y, name="Y"):
    Y = np.asarray(Y)
    if Y.ndim != 2 or not np.isin(Y, (0, 1)).all():
        raise ValidationError(f"{name} must be a 2-d 0/1 matrix")
    return Y
