"""Gaze-dependent sensitivity, center bias, and the per-frame information map."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene_io import BACKGROUND, SceneManifest


@dataclass(frozen=True)
class CenterBiasParams:
    enabled: bool = True
    sigma_x_frac: float = 0.25
    sigma_y_frac: float = 0.25

    def __post_init__(self):
        for name in ("sigma_x_frac", "sigma_y_frac"):
            value = getattr(self, name)
            if not 0 < value <= 10:
                raise ValueError(f"center_bias.{name} must lie in (0, 10], got {value}")


def center_bias_map(manifest: SceneManifest, params: CenterBiasParams) -> np.ndarray:
    """Anisotropic Gaussian centered on the frame, peak value 1 (all ones when disabled)."""
    h, w = manifest.height_px, manifest.width_px
    if not params.enabled:
        return np.ones((h, w))
    sx = params.sigma_x_frac * w
    sy = params.sigma_y_frac * h
    gx = np.exp(-((np.arange(w) - (w - 1) / 2) ** 2) / (2 * sx**2))
    gy = np.exp(-((np.arange(h) - (h - 1) / 2) ** 2) / (2 * sy**2))
    return np.outer(gy, gx)


def gaussian_sensitivity(gaze_x: float, gaze_y: float, sigma_dva: float, manifest: SceneManifest) -> np.ndarray:
    """Isotropic 2-D Gaussian density around the gaze point, sigma given in DVA.

    The exponent separates over x and y, so the map is built as an outer
    product of two 1-D profiles.
    """
    if sigma_dva <= 0:
        raise ValueError("sigma_dva must be positive")
    sigma = sigma_dva * manifest.px_per_dva
    norm = 1.0 / (2 * math.pi * sigma**2)
    gx = np.exp(-((np.arange(manifest.width_px) - gaze_x) ** 2) / (2 * sigma**2))
    gy = np.exp(-((np.arange(manifest.height_px) - gaze_y) ** 2) / (2 * sigma**2))
    return np.outer(gy * norm, gx)


@dataclass(frozen=True)
class SensitivityField:
    values: np.ndarray
    gaze_x: float
    gaze_y: float
    foveated_id: int


def apply_object_sensitivity(
    gauss_map: np.ndarray,
    mask_frame: np.ndarray,
    foveated_id: int,
    omega: float,
    gaze: tuple[float, float] = (math.nan, math.nan),
) -> SensitivityField:
    """Set sensitivity to ``omega`` over the foveated object's pixels.

    Background foveation leaves the Gaussian untouched.
    """
    values = np.array(gauss_map, dtype=np.float64)
    if foveated_id != BACKGROUND:
        values[mask_frame == foveated_id] = omega
    return SensitivityField(values, gaze[0], gaze[1], foveated_id)


def normalize_features(frame: np.ndarray, gain: float = 1.0) -> np.ndarray:
    """Scale a feature frame so its maximum equals ``gain`` (zeros stay zeros)."""
    frame = np.asarray(frame, dtype=np.float64)
    peak = frame.max()
    if peak <= 0:
        return np.zeros_like(frame)
    return frame * (gain / peak)


def information_map(F_frame: np.ndarray, center_bias: np.ndarray, S) -> np.ndarray:
    """Elementwise F * bias * S."""
    s_values = S.values if isinstance(S, SensitivityField) else np.asarray(S)
    F_frame = np.asarray(F_frame)
    center_bias = np.asarray(center_bias)
    if not (F_frame.shape == center_bias.shape == s_values.shape):
        raise ValueError(
            f"shape mismatch: F {F_frame.shape}, bias {center_bias.shape}, S {s_values.shape}"
        )
    return F_frame * center_bias * s_values
