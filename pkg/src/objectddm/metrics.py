"""Scanpath statistics: durations, amplitudes, directions, object transitions, gaze density."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .scanpath import saccade_direction
from .scene_io import BACKGROUND, EventRecord, SceneManifest, px_to_dva

DURATION_EDGES_MS = np.arange(0.0, 2000.0 + 50.0, 50.0)
AMPLITUDE_EDGES_DVA = np.arange(0.0, 30.0 + 1.0, 1.0)
LATENCY_EDGES_MS = np.arange(0.0, 10000.0 + 250.0, 250.0)
DIRECTION_BINS = 36
DENSITY_GRID = (64, 48)

# Published reference levels, shown alongside report values; never used as targets.
REFERENCE_VALUES = {
    "within_object_ratio_human": 0.20,
    "within_object_ratio_objectddm_op": 0.28,
    "within_object_ratio_baseline": 0.01,
    "refoveation_ratio_human": 1 / 6,
}


def label_gaze(x: float, y: float, mask_frame: np.ndarray) -> int:
    """Label of the pixel nearest to (x, y)."""
    h, w = mask_frame.shape
    if not (0 <= x <= w - 1 and 0 <= y <= h - 1):
        raise ValueError(f"gaze ({x}, {y}) outside the {w}x{h} frame")
    return int(mask_frame[int(math.floor(y + 0.5)), int(math.floor(x + 0.5))])


def by_subject(events) -> dict[str, list[EventRecord]]:
    if isinstance(events, dict):
        return events
    grouped: dict[str, list[EventRecord]] = {}
    for ev in events:
        grouped.setdefault(ev.subject_id, []).append(ev)
    return grouped


def _flat(events) -> list[EventRecord]:
    if isinstance(events, dict):
        return [ev for evs in events.values() for ev in evs]
    return list(events)


def _saccades(events) -> list[EventRecord]:
    return [ev for ev in _flat(events) if ev.kind == "saccade"]


def saccade_labels(ev: EventRecord, masks: np.ndarray) -> tuple[int, int]:
    return (
        label_gaze(ev.start_x, ev.start_y, masks[ev.start_frame]),
        label_gaze(ev.end_x, ev.end_y, masks[ev.end_frame]),
    )


def saccade_label_classes(events, masks: np.ndarray) -> dict[str, int]:
    """Count saccades as within-object, cross-object, or touching the background."""
    counts = {"within_object": 0, "cross_object": 0, "background": 0}
    for ev in _saccades(events):
        a, b = saccade_labels(ev, masks)
        if a == BACKGROUND or b == BACKGROUND:
            counts["background"] += 1
        elif a == b:
            counts["within_object"] += 1
        else:
            counts["cross_object"] += 1
    return counts


def within_object_ratio(events, masks: np.ndarray) -> float:
    """Share of saccades starting and landing on the same object; background-to-background does not count."""
    counts = saccade_label_classes(events, masks)
    total = sum(counts.values())
    return counts["within_object"] / total if total else 0.0


def refoveation_stats(events, masks: np.ndarray, frame_rate: float) -> dict:
    """Saccades returning to an earlier foveated object other than the current one.

    A foveation is assigned the label under its exit position. Latency runs
    from the end of the last foveation on the object to the saccade.
    """
    n_saccades = 0
    latencies = []
    for evs in by_subject(events).values():
        last_end: dict[int, int] = {}
        for ev in evs:
            if ev.kind == "foveation":
                label = label_gaze(ev.end_x, ev.end_y, masks[ev.end_frame])
                if label != BACKGROUND:
                    last_end[label] = ev.end_frame
                continue
            n_saccades += 1
            current, landing = saccade_labels(ev, masks)
            if landing != BACKGROUND and landing != current and landing in last_end:
                latencies.append((ev.start_frame - last_end[landing]) / frame_rate * 1000.0)
    return {
        "ratio": len(latencies) / n_saccades if n_saccades else 0.0,
        "latencies_ms": latencies,
    }


def saccade_distributions(events, manifest: SceneManifest) -> dict[str, list[float]]:
    amplitudes, directions = [], []
    for ev in _saccades(events):
        dx, dy = ev.end_x - ev.start_x, ev.end_y - ev.start_y
        amplitudes.append(px_to_dva(dx, dy, manifest))
        directions.append(saccade_direction(dx, dy))
    return {"amplitudes_dva": amplitudes, "directions_rad": directions}


def foveation_durations(events, frame_rate: float) -> list[float]:
    return [
        (ev.end_frame - ev.start_frame + 1) / frame_rate * 1000.0
        for ev in _flat(events)
        if ev.kind == "foveation"
    ]


def gaze_samples(events) -> np.ndarray:
    """One (x, y) per foveation frame, interpolated linearly from entry to exit."""
    chunks = []
    for ev in _flat(events):
        if ev.kind != "foveation":
            continue
        n = ev.end_frame - ev.start_frame + 1
        a = np.arange(n) / (n - 1) if n > 1 else np.zeros(1)
        chunks.append(np.column_stack([
            ev.start_x + a * (ev.end_x - ev.start_x),
            ev.start_y + a * (ev.end_y - ev.start_y),
        ]))
    return np.concatenate(chunks) if chunks else np.empty((0, 2))


def gaze_counts(events, manifest: SceneManifest, grid_w: int, grid_h: int) -> np.ndarray:
    xy = gaze_samples(events)
    gx = np.clip(np.floor((xy[:, 0] + 0.5) / manifest.width_px * grid_w).astype(int), 0, grid_w - 1)
    gy = np.clip(np.floor((xy[:, 1] + 0.5) / manifest.height_px * grid_h).astype(int), 0, grid_h - 1)
    counts = np.zeros((grid_h, grid_w))
    np.add.at(counts, (gy, gx), 1.0)
    return counts


def gaze_density(scanpaths, manifest: SceneManifest, grid_w: int = DENSITY_GRID[0], grid_h: int = DENSITY_GRID[1]) -> np.ndarray:
    """Normalized (grid_h, grid_w) histogram of per-frame gaze positions."""
    counts = gaze_counts(scanpaths, manifest, grid_w, grid_h)
    total = counts.sum()
    if total == 0:
        raise ValueError("no samples")
    return counts / total


def histogram(values, edges) -> np.ndarray:
    """Counts over ``edges``; out-of-range values go to the first or last bin."""
    values = np.clip(np.asarray(values, dtype=np.float64), edges[0], edges[-1])
    counts, _ = np.histogram(values, bins=edges)
    return counts


def direction_histogram(directions_rad) -> np.ndarray:
    """36 bins of 10 degrees centered on -170, -160, ..., 180 degrees."""
    deg = np.degrees(np.asarray(directions_rad, dtype=np.float64))
    idx = (np.floor(deg / 10.0 + 0.5).astype(int) + 17) % DIRECTION_BINS
    return np.bincount(idx, minlength=DIRECTION_BINS)


DIRECTION_CENTERS_DEG = np.arange(-170, 190, 10)


def histogram_distance(h1, h2, bin_width: float = 1.0) -> float:
    """Earth mover's distance between two histograms on the same equal-width bins."""
    h1 = np.asarray(h1, dtype=np.float64).ravel()
    h2 = np.asarray(h2, dtype=np.float64).ravel()
    if h1.shape != h2.shape:
        raise ValueError(f"binning mismatch: {h1.size} vs {h2.size} bins")
    if h1.sum() <= 0 or h2.sum() <= 0:
        raise ValueError("histograms must have positive mass")
    positions = np.arange(h1.size) * bin_width
    return float(sps.wasserstein_distance(positions, positions, h1, h2))


def density_distance(d1: np.ndarray, d2: np.ndarray) -> float:
    """Sum of EMDs between the x- and y-marginals of two gaze-density grids (grid-cell units)."""
    if d1.shape != d2.shape:
        raise ValueError("binning mismatch")
    return histogram_distance(d1.sum(axis=0), d2.sum(axis=0)) + histogram_distance(d1.sum(axis=1), d2.sum(axis=1))


def uniformity_pvalue(durations_frames, low: int, high: int) -> float:
    """Chi-square goodness of fit of integer durations against the discrete uniform on [low, high]."""
    d = np.asarray(durations_frames, dtype=np.int64)
    counts = np.bincount(d - low, minlength=high - low + 1)
    if counts.size != high - low + 1 or (d < low).any():
        return 0.0
    return float(sps.chisquare(counts).pvalue)


def _mean(values) -> float:
    return float(np.mean(values)) if len(values) else math.nan


def scanpath_summary(events, manifest: SceneManifest, masks: np.ndarray) -> dict[str, float]:
    """Scalar summary of a single scanpath."""
    rf = refoveation_stats(events, masks, manifest.frame_rate_hz)
    return {
        "n_saccades": float(len(_saccades(events))),
        "mean_foveation_ms": _mean(foveation_durations(events, manifest.frame_rate_hz)),
        "mean_amplitude_dva": _mean(saccade_distributions(events, manifest)["amplitudes_dva"]),
        "within_object_ratio": within_object_ratio(events, masks),
        "refoveation_ratio": rf["ratio"],
        "mean_refoveation_latency_ms": _mean(rf["latencies_ms"]),
    }


SUMMARY_METRICS = (
    "n_saccades", "mean_foveation_ms", "mean_amplitude_dva",
    "within_object_ratio", "refoveation_ratio", "mean_refoveation_latency_ms",
)


@dataclass
class VideoCorpus:
    """All scanpaths (subjects or seeds) recorded on one video."""

    manifest: SceneManifest
    masks: np.ndarray
    scanpaths: dict[str, list[EventRecord]]


def _hist_dict(values, edges) -> dict:
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in histogram(values, edges)]}


@dataclass
class MetricsReport:
    n_saccades_per_video: dict[str, float]
    foveation_durations_ms: list[float]
    amplitudes_dva: list[float]
    directions_rad: list[float]
    within_object_ratio: float
    label_classes: dict[str, int]
    refoveation_ratio: float
    refoveation_latencies_ms: list[float]
    gaze_density: np.ndarray
    per_video: dict[str, dict[str, float]] = field(default_factory=dict)

    def histograms(self) -> dict[str, tuple[np.ndarray, float]]:
        """Histogram counts and bin width of every distribution metric."""
        return {
            "foveation_durations_ms": (histogram(self.foveation_durations_ms, DURATION_EDGES_MS), 50.0),
            "amplitudes_dva": (histogram(self.amplitudes_dva, AMPLITUDE_EDGES_DVA), 1.0),
            "directions_deg": (direction_histogram(self.directions_rad), 10.0),
            "refoveation_latencies_ms": (histogram(self.refoveation_latencies_ms, LATENCY_EDGES_MS), 250.0),
        }

    def to_dict(self) -> dict:
        return {
            "n_saccades_per_video": self.n_saccades_per_video,
            "foveation_durations_ms": {
                "raw": self.foveation_durations_ms,
                "histogram": _hist_dict(self.foveation_durations_ms, DURATION_EDGES_MS),
            },
            "amplitudes_dva": {
                "raw": self.amplitudes_dva,
                "histogram": _hist_dict(self.amplitudes_dva, AMPLITUDE_EDGES_DVA),
            },
            "directions_rad": {
                "raw": self.directions_rad,
                "histogram": {
                    "centers_deg": [int(c) for c in DIRECTION_CENTERS_DEG],
                    "counts": [int(c) for c in direction_histogram(self.directions_rad)],
                },
            },
            "within_object_ratio": self.within_object_ratio,
            "label_classes": self.label_classes,
            "refoveation": {
                "ratio": self.refoveation_ratio,
                "latencies_ms": self.refoveation_latencies_ms,
                "latency_histogram": _hist_dict(self.refoveation_latencies_ms, LATENCY_EDGES_MS),
            },
            "gaze_density": {
                "grid_w": int(self.gaze_density.shape[1]),
                "grid_h": int(self.gaze_density.shape[0]),
                "values": self.gaze_density.tolist(),
            },
            "per_video": self.per_video,
            "reference_values": REFERENCE_VALUES,
        }


def compute_report(videos: list[VideoCorpus], grid: tuple[int, int] = DENSITY_GRID) -> MetricsReport:
    durations, amplitudes, directions, latencies = [], [], [], []
    classes = {"within_object": 0, "cross_object": 0, "background": 0}
    n_refov = n_sacc = 0
    density = np.zeros((grid[1], grid[0]))
    n_sacc_video = {}
    per_video = {}
    for video in videos:
        m = video.manifest
        summaries = defaultdict(list)
        for events in video.scanpaths.values():
            durations += foveation_durations(events, m.frame_rate_hz)
            dist = saccade_distributions(events, m)
            amplitudes += dist["amplitudes_dva"]
            directions += dist["directions_rad"]
            for key, value in saccade_label_classes(events, video.masks).items():
                classes[key] += value
            rf = refoveation_stats(events, video.masks, m.frame_rate_hz)
            latencies += rf["latencies_ms"]
            k = len(_saccades(events))
            n_sacc += k
            n_refov += len(rf["latencies_ms"])
            density += gaze_counts(events, m, grid[0], grid[1])
            for key, value in scanpath_summary(events, m, video.masks).items():
                summaries[key].append(value)
        per_video[m.video_id] = {
            key: (float(np.nanmean(v)) if not np.all(np.isnan(v)) else math.nan)
            for key, v in ((key, np.asarray(vals)) for key, vals in summaries.items())
        }
        n_sacc_video[m.video_id] = per_video[m.video_id].get("n_saccades", 0.0)
    total = density.sum()
    if total == 0:
        raise ValueError("no samples")
    n_classified = sum(classes.values())
    return MetricsReport(
        n_saccades_per_video=n_sacc_video,
        foveation_durations_ms=durations,
        amplitudes_dva=amplitudes,
        directions_rad=directions,
        within_object_ratio=classes["within_object"] / n_classified if n_classified else 0.0,
        label_classes=classes,
        refoveation_ratio=n_refov / n_sacc if n_sacc else 0.0,
        refoveation_latencies_ms=latencies,
        gaze_density=density / total,
        per_video=per_video,
    )
