"""Per-option drift rates from the information map and object masks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene_io import BACKGROUND, SceneManifest


@dataclass(frozen=True)
class EvidenceVector:
    """Drift rate and pixel area per option; ``ids`` ascending, 0 first."""

    ids: np.ndarray
    mu: np.ndarray
    area: np.ndarray

    def mu_of(self, option_id: int) -> float:
        return float(self.mu[self._index(option_id)])

    def area_of(self, option_id: int) -> int:
        return int(self.area[self._index(option_id)])

    def _index(self, option_id: int) -> int:
        idx = int(np.searchsorted(self.ids, option_id))
        if idx >= len(self.ids) or self.ids[idx] != option_id:
            raise KeyError(option_id)
        return idx

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(m) for i, m in zip(self.ids, self.mu)}


def option_areas(mask_frame: np.ndarray, manifest: SceneManifest) -> dict[int, int]:
    counts = np.bincount(np.asarray(mask_frame).ravel(), minlength=max(manifest.option_ids) + 1)
    return {i: int(counts[i]) for i in manifest.option_ids}


def _log_scaled(total: float, area: int, log_scaling: bool = True) -> float:
    if area <= 1:
        return 0.0
    mean = total / area
    return mean * math.log(area) if log_scaling else mean


def evidence(info_map: np.ndarray, mask_frame: np.ndarray, option_id: int, log_scaling: bool = True) -> float:
    """Mean information over the option's pixels times ln(area); 0 for areas <= 1."""
    sel = np.asarray(mask_frame) == option_id
    area = int(sel.sum())
    if area <= 1:
        return 0.0
    return _log_scaled(float(np.asarray(info_map)[sel].sum()), area, log_scaling)


def evidence_all(
    info_map: np.ndarray,
    mask_frame: np.ndarray,
    manifest: SceneManifest,
    bg_log_scaling: bool = True,
) -> EvidenceVector:
    """Evidence for the background and every manifest object in one pass."""
    ids = np.array(manifest.option_ids, dtype=np.int64)
    labels = np.asarray(mask_frame).ravel().astype(np.intp)
    size = int(ids[-1]) + 1
    counts = np.bincount(labels, minlength=size)[ids]
    sums = np.bincount(labels, weights=np.asarray(info_map, dtype=np.float64).ravel(), minlength=size)[ids]
    mu = np.zeros(len(ids))
    for k, oid in enumerate(ids):
        mu[k] = _log_scaled(sums[k], int(counts[k]), bg_log_scaling or oid != BACKGROUND)
    return EvidenceVector(ids, mu, counts)
