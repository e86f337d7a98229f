"""Random saliency-peak scanpath generator used as an object-agnostic baseline.

Fixations of uniformly random duration alternate with instantaneous
saccades to a randomly chosen local maximum of the current feature frame.
Gaze never moves during a fixation.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .rng import Rng
from .scanpath import Foveation, Scanpath, make_saccade
from .scene_io import SceneBundle
from .engine import label_at


@dataclass(frozen=True)
class BaselineConfig:
    min_fix_frames: int = 3
    max_fix_frames: int = 15
    top_k: int = 10
    min_peak_dist_px: float = 40.0
    seed: int = 0

    def __post_init__(self):
        if self.min_fix_frames < 1 or self.max_fix_frames < self.min_fix_frames:
            raise ValueError("need 1 <= min_fix_frames <= max_fix_frames")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.min_peak_dist_px < 0:
            raise ValueError("min_peak_dist_px must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BaselineConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown BaselineConfig field(s): {sorted(unknown)}")
        return cls(**data)

    def with_param(self, key: str, value) -> "BaselineConfig":
        if key not in self.__dataclass_fields__:
            raise ValueError(f"unknown parameter {key!r}")
        return BaselineConfig(**{**asdict(self), key: value})


_NEIGHBORS = np.ones((3, 3), dtype=bool)
_NEIGHBORS[1, 1] = False


def local_maxima(F_frame: np.ndarray, top_k: int, min_dist: float) -> list[tuple[int, int]]:
    """Strict 8-neighborhood maxima as (x, y), strongest first, at least ``min_dist`` apart.

    Ties in value keep row-major order. A frame without strict maxima
    yields the frame center as the only candidate.
    """
    F_frame = np.asarray(F_frame, dtype=np.float64)
    neighbor_max = ndimage.maximum_filter(F_frame, footprint=_NEIGHBORS, mode="constant", cval=-np.inf)
    rows, cols = np.nonzero(F_frame > neighbor_max)
    if rows.size == 0:
        h, w = F_frame.shape
        return [((w - 1) // 2, (h - 1) // 2)]
    order = np.argsort(-F_frame[rows, cols], kind="stable")
    chosen: list[tuple[int, int]] = []
    for k in order:
        x, y = int(cols[k]), int(rows[k])
        if all((x - cx) ** 2 + (y - cy) ** 2 >= min_dist**2 for cx, cy in chosen):
            chosen.append((x, y))
            if len(chosen) == top_k:
                break
    return chosen


def simulate_baseline(scene: SceneBundle, config: BaselineConfig) -> Scanpath:
    m = scene.manifest
    rng = Rng(config.seed)
    n = m.n_frames
    pos = ((m.width_px - 1) / 2, (m.height_px - 1) / 2)
    trace = np.empty((n, 2))
    foveated = np.empty(n, dtype=np.int64)
    events = []
    start = 0
    while start < n:
        duration = rng.integers(config.min_fix_frames, config.max_fix_frames)
        end = min(start + duration, n) - 1
        trace[start:end + 1] = pos
        option = label_at(scene.masks[start], *pos)
        foveated[start:end + 1] = option
        events.append(Foveation(start, end, pos, pos, option))
        if end + 1 >= n:
            break
        peaks = local_maxima(scene.features[end], config.top_k, config.min_peak_dist_px)
        x, y = peaks[rng.integers(0, len(peaks) - 1)]
        landing = (float(x), float(y))
        events.append(make_saccade(end, pos, landing, label_at(scene.masks[end], *landing), m))
        pos = landing
        start = end + 1
    return Scanpath(tuple(events), trace, foveated, config.seed, "baseline")
