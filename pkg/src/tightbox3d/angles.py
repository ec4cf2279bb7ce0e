"""Angle normalization helpers shared across modules."""

import numpy as np

TAU = 2.0 * np.pi


def wrap_to_pi(angle):
    """Normalize an angle (scalar or array) to (-pi, pi]."""
    wrapped = np.pi - np.remainder(np.pi - np.asarray(angle, dtype=float), TAU)
    # np.remainder may return TAU itself for tiny negative arguments
    wrapped = np.where(wrapped <= -np.pi, np.pi, wrapped)
    if np.ndim(angle) == 0:
        return float(wrapped)
    return wrapped


def wrap_to_2pi(angle):
    """Normalize an angle (scalar or array) to [0, 2*pi)."""
    wrapped = np.remainder(np.asarray(angle, dtype=float), TAU)
    wrapped = np.where(wrapped >= TAU, 0.0, wrapped)
    if np.ndim(angle) == 0:
        return float(wrapped)
    return wrapped
