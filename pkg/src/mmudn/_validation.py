"""Small argument checks shared by the public functions and estimators."""

from __future__ import annotations

import math

import numpy as np


def check_positive(value, name: str, *, allow_inf: bool = False) -> float:
    value = float(value)
    if math.isnan(value) or value <= 0 or (math.isinf(value) and not allow_inf):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_nonnegative(value, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


def check_open_unit(value, name: str) -> float:
    """Require ``0 < value < 1``."""
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
    return value


def check_path_loss_exponent(alpha, name: str = "alpha", *, guard: float = 1e-6) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha <= 2.0 + guard:
        raise ValueError(f"{name} must exceed 2 (got {alpha!r}); the interference integral diverges")
    return alpha


def check_beam_width(theta) -> float:
    theta = float(theta)
    if not 0.0 < theta <= 2 * math.pi * (1 + 1e-12):
        raise ValueError(f"beam width must lie in (0, 2*pi], got {theta!r}")
    return min(theta, 2 * math.pi)


def check_points(points, name: str = "points") -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim == 1 and arr.shape[0] == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr
