"""Leaky integrate-and-fire dynamics shared by the dense and sparse datapaths.

The update follows the hardware activation unit: the incoming current is
added to the leaked potential, the result is compared against the threshold
and, when it fires, the threshold is subtracted in the same step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ShapeError


@dataclass(frozen=True)
class LifParams:
    """Decay factor ``beta`` in [0, 1] and firing threshold ``theta`` > 0."""

    beta: float = 0.15
    theta: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.beta) and 0.0 <= self.beta <= 1.0):
            raise DomainError(f"beta must lie in [0, 1], got {self.beta!r}")
        if not (math.isfinite(self.theta) and self.theta > 0.0):
            raise DomainError(f"theta must be positive, got {self.theta!r}")


@dataclass
class LifState:
    """Membrane potentials of a population of neurons."""

    u: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "LifState":
        return cls(np.zeros(shape, dtype=np.float64))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u)))


def lif_step(u: float, weighted_input: float, params: LifParams) -> tuple[float, int]:
    """Advance one neuron by one timestep.

    Returns ``(u_next, spike)``. Firing uses the strict comparison
    ``v > theta`` and subtracts ``theta`` from the fired potential.
    """
    if not (math.isfinite(u) and math.isfinite(weighted_input)):
        raise DomainError("lif_step requires finite inputs")
    v = params.beta * u + weighted_input
    if v > params.theta:
        return v - params.theta, 1
    return v, 0


def lif_plane_step(u_plane, input_plane, bias, params: LifParams):
    """Elementwise :func:`lif_step` over a plane with the bias folded in.

    ``bias`` may be a scalar or anything broadcastable against the plane
    (e.g. a per-channel column of shape ``(C, 1, 1)``). Returns the new
    potentials and a boolean spike plane.
    """
    u_plane = np.asarray(u_plane, dtype=np.float64)
    input_plane = np.asarray(input_plane, dtype=np.float64)
    if u_plane.shape != input_plane.shape:
        raise ShapeError(
            f"membrane shape {u_plane.shape} does not match input shape {input_plane.shape}"
        )
    if not (np.all(np.isfinite(u_plane)) and np.all(np.isfinite(input_plane))):
        raise DomainError("lif_plane_step requires finite inputs")
    v = params.beta * u_plane + (input_plane + bias)
    spikes = v > params.theta
    u_next = np.where(spikes, v - params.theta, v)
    return u_next, spikes
