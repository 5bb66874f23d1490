"""Input checks shared by the estimator and the CLI."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ShapeError


def check_images(X, input_shape, coding: str = "direct") -> np.ndarray:
    """Return ``X`` as a float array of shape ``(n, C, H, W)``.

    A single ``(C, H, W)`` image is promoted to a batch of one. Values
    must be finite, and in ``[0, 1]`` for rate coding.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == len(input_shape):
        X = X[None]
    X = check_array(X, allow_nd=True, ensure_all_finite=True, dtype=np.float64, ensure_min_features=1)
    if X.shape[1:] != tuple(input_shape):
        raise ShapeError(f"images have shape {X.shape[1:]}, network expects {tuple(input_shape)}")
    if coding == "rate" and (X.min() < 0.0 or X.max() > 1.0):
        raise ValueError("rate coding needs intensities in [0, 1]")
    return X


def check_timesteps(T) -> int:
    if int(T) != T or T < 1:
        raise ValueError(f"timesteps must be a positive integer, got {T!r}")
    return int(T)
