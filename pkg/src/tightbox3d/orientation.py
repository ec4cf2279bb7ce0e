"""Local/global yaw conversion, MultiBin angle coding, and training losses.

The network-facing quantities live here as plain evaluable functions:
the viewing-ray angle, the local (appearance) orientation and its
conversion to global yaw, the bin-plus-residual angle encoding, and the
loss terms with analytic gradients for verification against finite
differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .angles import TAU, wrap_to_2pi, wrap_to_pi
from .geometry import Dimensions, Intrinsics, NonPositiveDepth


class LossWeights(NamedTuple):
    """Weights of the four loss terms (dimensions, angle, confidence, viewpoint)."""

    w_dims: float = 1.0
    w_ang: float = 4.0
    w_conf: float = 8.0
    w_view: float = 4.0


def ray_angle(intr: Intrinsics, t) -> float:
    """Angle of the camera-to-object ray about the vertical axis.

    Computed as atan2(t_x, t_z) from the camera-frame translation; the
    intrinsics argument is kept for interface symmetry with image-side
    callers and is only validated, not used.
    """
    t = np.asarray(t, dtype=float)
    if t[2] <= 0.0:
        raise NonPositiveDepth(f"object depth {t[2]:.3g} <= 0")
    return float(np.arctan2(t[0], t[2]))


def local_to_global(theta_l: float, theta_ray: float) -> float:
    """Global yaw from local orientation and ray angle, in (-pi, pi]."""
    return wrap_to_pi(TAU - theta_ray - theta_l)


def global_to_local(theta: float, theta_ray: float) -> float:
    """Local (appearance) orientation from global yaw and ray angle, in [0, 2*pi)."""
    return wrap_to_2pi(TAU - theta_ray - theta)


@dataclass(frozen=True)
class MultiBinEncoding:
    """Bin coverage and residuals of one local-orientation angle.

    ``covers[i]`` marks bins whose (overlap-widened) interval contains the
    angle; ``residuals[i]`` is the wrapped difference angle - center_i and
    is meaningful for covering bins.
    """

    n_bins: int
    overlap: float
    bin_centers: np.ndarray
    covers: np.ndarray
    residuals: np.ndarray

    @property
    def n_covering(self) -> int:
        return int(self.covers.sum())


def bin_centers(n_bins: int) -> np.ndarray:
    """Evenly spaced bin centers 2*pi*k / n_bins."""
    return TAU * np.arange(n_bins) / n_bins


def multibin_encode(theta_l: float, n_bins: int = 2, overlap: float = 0.1) -> MultiBinEncoding:
    """Encode an angle as bin coverage plus per-bin residuals.

    A bin covers the angle when the wrapped residual lies in
    [-(pi/n_bins + overlap/2), +(pi/n_bins + overlap/2)); the half-open
    convention makes boundary angles land in exactly one bin at zero
    overlap.
    """
    if n_bins < 2:
        raise ValueError(f"need at least 2 bins, got {n_bins}")
    if not 0.0 <= overlap < TAU / n_bins:
        raise ValueError(f"overlap must be in [0, 2*pi/n_bins), got {overlap}")
    centers = bin_centers(n_bins)
    residuals = wrap_to_pi(theta_l - centers)
    half_width = np.pi / n_bins + overlap / 2.0
    covers = (residuals >= -half_width) & (residuals < half_width)
    return MultiBinEncoding(
        n_bins=n_bins, overlap=overlap, bin_centers=centers, covers=covers, residuals=residuals
    )


def multibin_decode(enc: MultiBinEncoding, confidences, residual_sincos) -> float:
    """Recover the angle from per-bin confidences and (sin, cos) residuals.

    Picks the highest-confidence bin (ties to the lower index) and adds its
    atan2-decoded residual; the (sin, cos) pair need not be normalized.
    """
    confidences = np.asarray(confidences, dtype=float)
    if confidences.shape != (enc.n_bins,):
        raise ValueError(f"expected {enc.n_bins} confidences, got {confidences.shape}")
    sincos = np.asarray(residual_sincos, dtype=float).reshape(enc.n_bins, 2)
    b = int(np.argmax(confidences))
    return wrap_to_2pi(enc.bin_centers[b] + np.arctan2(sincos[b, 0], sincos[b, 1]))


def loss_ang(theta_star: float, enc: MultiBinEncoding, predicted_residuals) -> float:
    """Negative mean cosine agreement over the bins covering the truth.

    Equals -1 exactly when every covering bin predicts its true residual.
    """
    pred = np.asarray(predicted_residuals, dtype=float)
    cov = enc.covers
    return float(-np.mean(np.cos(theta_star - enc.bin_centers[cov] - pred[cov])))


def loss_ang_grad(theta_star: float, enc: MultiBinEncoding, predicted_residuals) -> np.ndarray:
    """Analytic gradient of loss_ang w.r.t. each predicted residual."""
    pred = np.asarray(predicted_residuals, dtype=float)
    grad = np.zeros(enc.n_bins)
    cov = enc.covers
    grad[cov] = -np.sin(theta_star - enc.bin_centers[cov] - pred[cov]) / cov.sum()
    return grad


def loss_dims(true_dims: Dimensions, mean_dims: Dimensions, predicted_residual) -> float:
    """Mean squared error of the dimension-residual prediction over (l, h, w)."""
    diff = true_dims.as_array() - mean_dims.as_array() - np.asarray(predicted_residual, dtype=float)
    return float(np.mean(diff**2))


def loss_dims_grad(true_dims: Dimensions, mean_dims: Dimensions, predicted_residual) -> np.ndarray:
    """Analytic gradient of loss_dims w.r.t. the predicted residual vector."""
    diff = true_dims.as_array() - mean_dims.as_array() - np.asarray(predicted_residual, dtype=float)
    return -2.0 * diff / 3.0


def loss_softmax(true_index: int, logits) -> float:
    """Stabilized cross-entropy -log softmax(logits)[true_index]."""
    logits = np.asarray(logits, dtype=float)
    if logits.size == 0:
        raise ValueError("logits must be non-empty")
    if not 0 <= true_index < logits.size:
        raise IndexError(f"true_index {true_index} out of range for {logits.size} logits")
    shifted = logits - logits.max()
    return float(np.log(np.sum(np.exp(shifted))) - shifted[true_index])


def loss_softmax_grad(true_index: int, logits) -> np.ndarray:
    """Analytic gradient of loss_softmax w.r.t. the logits."""
    logits = np.asarray(logits, dtype=float)
    shifted = np.exp(logits - logits.max())
    grad = shifted / shifted.sum()
    grad[true_index] -= 1.0
    return grad


def loss_total(parts: Sequence[float], weights: LossWeights = LossWeights()) -> float:
    """Weighted sum of the (dims, angle, confidence, viewpoint) loss parts."""
    if len(parts) != 4:
        raise ValueError(f"expected 4 loss parts, got {len(parts)}")
    return float(np.dot(np.asarray(parts, dtype=float), np.asarray(weights, dtype=float)))
