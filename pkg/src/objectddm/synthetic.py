"""Scripted synthetic scenes: textured rectangles moving over a textured background."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene_io import ObjectInfo, SceneBundle, SceneManifest


@dataclass(frozen=True)
class MovingRect:
    id: int
    category: str
    x0: float          # top-left corner at frame 0
    y0: float
    width: int
    height: int
    vx: float = 0.0    # px per frame
    vy: float = 0.0
    brightness: float = 1.0


# Three dispersed rectangles of different size, shape and speed.
DEFAULT_RECTS = (
    MovingRect(1, "human", 90, 170, 50, 130, vx=0.8, vy=0.0, brightness=1.0),
    MovingRect(2, "vehicle", 430, 70, 130, 60, vx=-0.6, vy=0.2, brightness=0.85),
    MovingRect(3, "animal", 420, 350, 70, 50, vx=-0.3, vy=-0.25, brightness=0.9),
)


def rect_position(rect: MovingRect, frame: int) -> tuple[int, int]:
    return int(round(rect.x0 + rect.vx * frame)), int(round(rect.y0 + rect.vy * frame))


def _background(width: int, height: int, rng: np.random.Generator, n_blobs: int = 12) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width]
    bg = np.full((height, width), 0.05)
    for _ in range(n_blobs):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        sig = rng.uniform(15, 60)
        bg += rng.uniform(0.1, 0.35) * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sig**2))
    return bg


def make_scene(
    rects=DEFAULT_RECTS,
    width: int = 640,
    height: int = 480,
    n_frames: int = 300,
    frame_rate_hz: float = 30.0,
    px_per_dva: float = 25.0,
    video_id: str = "synthetic",
    texture_seed: int = 7,
    background: bool = True,
) -> SceneBundle:
    """Build an in-memory scene: static background texture plus rigid textured rectangles.

    Each rectangle carries its own texture, so features move with the mask.
    Later rectangles in ``rects`` are drawn on top of earlier ones.
    """
    rng = np.random.default_rng(texture_seed)
    bg = _background(width, height, rng) if background else np.zeros((height, width))
    textures = {}
    for r in rects:
        yy, xx = np.mgrid[0:r.height, 0:r.width]
        tex = 0.6 + 0.4 * np.exp(
            -((xx - r.width * rng.uniform(0.3, 0.7)) ** 2 / (2 * (0.3 * r.width) ** 2)
              + (yy - r.height * rng.uniform(0.2, 0.5)) ** 2 / (2 * (0.3 * r.height) ** 2))
        )
        textures[r.id] = r.brightness * tex

    features = np.empty((n_frames, height, width), dtype=np.float32)
    masks = np.zeros((n_frames, height, width), dtype=np.uint16)
    for t in range(n_frames):
        frame = bg.copy()
        labels = masks[t]
        for r in rects:
            x, y = rect_position(r, t)
            x_lo, x_hi = max(x, 0), min(x + r.width, width)
            y_lo, y_hi = max(y, 0), min(y + r.height, height)
            if x_lo >= x_hi or y_lo >= y_hi:
                continue
            frame[y_lo:y_hi, x_lo:x_hi] = textures[r.id][y_lo - y:y_hi - y, x_lo - x:x_hi - x]
            labels[y_lo:y_hi, x_lo:x_hi] = r.id
        features[t] = frame
    features.flags.writeable = False
    masks.flags.writeable = False

    manifest = SceneManifest(
        video_id=video_id,
        width_px=width,
        height_px=height,
        n_frames=n_frames,
        frame_rate_hz=frame_rate_hz,
        px_per_dva=px_per_dva,
        feature_path=f"{video_id}.feat.oddm",
        mask_path=f"{video_id}.mask.oddm",
        objects=tuple(ObjectInfo(r.id, r.category) for r in rects),
    )
    return SceneBundle(manifest, features, masks)


def crowded_rects(n: int = 10, seed: int = 3) -> tuple[MovingRect, ...]:
    """``n`` non-overlapping-ish rectangles on a grid with random drift."""
    rng = np.random.default_rng(seed)
    cols = 5
    rects = []
    for i in range(n):
        gx, gy = i % cols, i // cols
        rects.append(MovingRect(
            i + 1, "other",
            20 + gx * 125, 40 + gy * 220,
            int(rng.integers(40, 90)), int(rng.integers(40, 120)),
            vx=float(rng.uniform(-0.5, 0.5)), vy=float(rng.uniform(-0.3, 0.3)),
            brightness=float(rng.uniform(0.6, 1.0)),
        ))
    return tuple(rects)
