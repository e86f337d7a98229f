"""Object-based drift-diffusion race driving saccades over a video.

Each frame, every option (background plus each object) accumulates its
drift rate with Gaussian noise. The first accumulator over threshold
triggers an instantaneous saccade to a landing point sampled from the
information map within the winning option, after which all accumulators
restart from zero. Between saccades the gaze follows the foveated
object's mask centroid, which yields fixations on static objects and
smooth pursuit on moving ones.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .evidence import EvidenceVector, evidence_all
from .rng import Rng
from .scanpath import Foveation, Scanpath, make_saccade
from .scene_io import BACKGROUND, SceneBundle, SceneManifest
from .visual_field import (
    CenterBiasParams,
    apply_object_sensitivity,
    center_bias_map,
    gaussian_sensitivity,
    information_map,
    normalize_features,
)

# Feature frames are rescaled to this peak before use; see README.
FEATURE_GAIN = 1000.0


@dataclass(frozen=True)
class SimConfig:
    theta: float = 0.03
    s: float = 0.002
    sigma_dva: float = 6.5
    omega: float = 7e-8
    epsilon: float = 1 / 120
    dt: float = 1.0
    center_bias: CenterBiasParams = field(default_factory=CenterBiasParams)
    seed: int = 0
    bg_log_scaling: bool = True
    feature_gain: float = FEATURE_GAIN

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")
        if self.s < 0:
            raise ValueError(f"s must be >= 0, got {self.s}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.sigma_dva > 0:
            raise ValueError(f"sigma_dva must be > 0, got {self.sigma_dva}")
        if self.omega < 0:
            raise ValueError(f"omega must be >= 0, got {self.omega}")
        if not self.feature_gain > 0:
            raise ValueError(f"feature_gain must be > 0, got {self.feature_gain}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown SimConfig field(s): {sorted(unknown)}")
        if isinstance(data.get("center_bias"), dict):
            data["center_bias"] = CenterBiasParams(**data["center_bias"])
        return cls(**data)

    def with_param(self, key: str, value) -> "SimConfig":
        """Copy with one field replaced; ``center_bias.<name>`` reaches the nested params."""
        if key.startswith("center_bias."):
            sub = key.split(".", 1)[1]
            if sub not in CenterBiasParams.__dataclass_fields__:
                raise ValueError(f"unknown parameter {key!r}")
            return replace(self, center_bias=replace(self.center_bias, **{sub: value}))
        if key not in self.__dataclass_fields__ or key == "center_bias":
            raise ValueError(f"unknown parameter {key!r}")
        return replace(self, **{key: value})


@dataclass(frozen=True)
class ObjectState:
    option_id: int
    V: float
    xi: float
    last_foveation_end: int | None


@dataclass(frozen=True)
class RaceState:
    """Accumulator state for all options, stored column-wise (ids ascending)."""

    ids: np.ndarray
    V: np.ndarray
    xi: np.ndarray
    last_end: np.ndarray  # frame the option was last foveated, -1 if never

    def index(self, option_id: int) -> int:
        idx = int(np.searchsorted(self.ids, option_id))
        if idx >= len(self.ids) or self.ids[idx] != option_id:
            raise KeyError(option_id)
        return idx

    def __getitem__(self, option_id: int) -> ObjectState:
        k = self.index(option_id)
        last = int(self.last_end[k])
        return ObjectState(int(self.ids[k]), float(self.V[k]), float(self.xi[k]), last if last >= 0 else None)

    def reset(self) -> "RaceState":
        return replace(self, V=np.zeros_like(self.V))


@dataclass(frozen=True)
class GazeState:
    x: float
    y: float
    foveated_id: int
    frame: int


class LandingError(LookupError):
    """The saccade target has no pixels in the current frame."""


def label_at(mask_frame: np.ndarray, x: float, y: float) -> int:
    h, w = mask_frame.shape
    col = min(max(int(math.floor(x + 0.5)), 0), w - 1)
    row = min(max(int(math.floor(y + 0.5)), 0), h - 1)
    return int(mask_frame[row, col])


def race_state(option_ids, foveated_id: int | None = None) -> RaceState:
    ids = np.array(sorted(option_ids), dtype=np.int64)
    state = RaceState(ids, np.zeros(len(ids)), np.zeros(len(ids)), np.full(len(ids), -1, dtype=np.int64))
    if foveated_id is not None:
        k = state.index(foveated_id)
        state.xi[k] = 1.0
        state.last_end[k] = 0
    return state


def init_run(scene: SceneBundle, config: SimConfig) -> tuple[RaceState, GazeState, Rng]:
    """Gaze at the frame center, foveating whatever option lies under it."""
    m = scene.manifest
    x, y = (m.width_px - 1) / 2, (m.height_px - 1) / 2
    fov = label_at(scene.masks[0], x, y)
    return race_state(m.option_ids, fov), GazeState(x, y, fov, 0), Rng(config.seed)


def update_ior(state: RaceState, foveated_id: int, epsilon: float, dt: float, frame: int) -> RaceState:
    """Inhibition is 1 on the foveated option and falls linearly at ``epsilon`` per unit time elsewhere.

    Evaluated in closed form from the frame the option was last foveated,
    so the value after n frames is exactly max(0, 1 - n*epsilon*dt).
    """
    last_end = state.last_end.copy()
    k = state.index(foveated_id)
    last_end[k] = frame
    elapsed = frame - last_end
    xi = np.where(last_end >= 0, np.maximum(0.0, 1.0 - elapsed * (epsilon * dt)), state.xi)
    xi[k] = 1.0
    return replace(state, xi=xi, last_end=last_end)


def step_accumulators(
    state: RaceState,
    mu,
    foveated_id: int,
    config: SimConfig,
    rng: Rng,
    clamp: bool = True,
) -> tuple[RaceState, int | None]:
    """Advance every accumulator by one step and report the winner, if any.

    The foveated option drifts at its full rate, all others at
    ``mu * (1 - xi)``. One normal variate is drawn per option, in ascending
    id order, even when ``s`` is zero. With ``clamp`` the accumulators
    reflect at 0. The winner is the option furthest above threshold, ties
    going to the lowest id.
    """
    mu = mu.mu if isinstance(mu, EvidenceVector) else np.asarray(mu, dtype=np.float64)
    if mu.shape != state.V.shape:
        raise ValueError("evidence does not cover all options")
    gain = np.where(state.ids == foveated_id, 1.0, 1.0 - state.xi)
    noise = rng.normals(len(state.ids))
    V = state.V + mu * gain * config.dt + config.s * noise
    if clamp:
        V = np.maximum(V, 0.0)
    new_state = replace(state, V=V)
    over = V - config.theta
    if not (V >= config.theta).any():
        return new_state, None
    over = np.where(V >= config.theta, over, -np.inf)
    return new_state, int(state.ids[int(np.argmax(over))])


def sample_landing(info_map: np.ndarray, mask_frame: np.ndarray, target_id: int, rng: Rng) -> tuple[float, float]:
    """Pixel within the target drawn with probability proportional to its information.

    Falls back to a uniform pick when the target carries no information.
    Consumes exactly one uniform.
    """
    flat = np.flatnonzero(np.asarray(mask_frame).ravel() == target_id)
    if flat.size == 0:
        raise LandingError(f"option {target_id} is absent from the frame")
    weights = np.asarray(info_map).ravel()[flat]
    u = rng.uniform()
    cum = np.cumsum(weights)
    if cum[-1] > 0:
        k = int(np.searchsorted(cum, u * cum[-1], side="right"))
    else:
        k = int(u * flat.size)
    k = min(k, flat.size - 1)
    row, col = divmod(int(flat[k]), mask_frame.shape[1])
    return float(col), float(row)


def _centroid(mask_frame: np.ndarray, option_id: int) -> tuple[float, float] | None:
    rows, cols = np.nonzero(mask_frame == option_id)
    if rows.size == 0:
        return None
    return float(cols.mean()), float(rows.mean())


def _shifted(gaze: GazeState, c_prev, c_next, width: int, height: int) -> GazeState:
    if c_next is None:
        return replace(gaze, foveated_id=BACKGROUND, frame=gaze.frame + 1)
    if c_prev is None:
        return replace(gaze, frame=gaze.frame + 1)
    x = min(max(gaze.x + (c_next[0] - c_prev[0]), 0.0), width - 1.0)
    y = min(max(gaze.y + (c_next[1] - c_prev[1]), 0.0), height - 1.0)
    return GazeState(x, y, gaze.foveated_id, gaze.frame + 1)


def propagate_gaze(gaze: GazeState, mask_prev: np.ndarray, mask_next: np.ndarray) -> GazeState:
    """Carry the gaze along with the foveated object's centroid into the next frame."""
    if gaze.foveated_id == BACKGROUND:
        return replace(gaze, frame=gaze.frame + 1)
    h, w = mask_next.shape
    return _shifted(gaze, _centroid(mask_prev, gaze.foveated_id), _centroid(mask_next, gaze.foveated_id), w, h)


@dataclass(frozen=True)
class SceneTracks:
    """Per-frame area and mask centroid of every option."""

    ids: np.ndarray
    area: np.ndarray       # (n_frames, n_options)
    centroid: np.ndarray   # (n_frames, n_options, 2), NaN where absent

    @classmethod
    def from_masks(cls, masks: np.ndarray, manifest: SceneManifest) -> "SceneTracks":
        ids = np.array(manifest.option_ids, dtype=np.int64)
        n_frames, h, w = masks.shape
        size = int(ids[-1]) + 1
        xs = np.tile(np.arange(w, dtype=np.float64), h)
        ys = np.repeat(np.arange(h, dtype=np.float64), w)
        area = np.zeros((n_frames, len(ids)), dtype=np.int64)
        centroid = np.full((n_frames, len(ids), 2), np.nan)
        for t in range(n_frames):
            labels = masks[t].ravel()
            counts = np.bincount(labels, minlength=size)[ids]
            sx = np.bincount(labels, weights=xs, minlength=size)[ids]
            sy = np.bincount(labels, weights=ys, minlength=size)[ids]
            area[t] = counts
            present = counts > 0
            centroid[t, present, 0] = sx[present] / counts[present]
            centroid[t, present, 1] = sy[present] / counts[present]
        return cls(ids, area, centroid)

    def centroid_of(self, frame: int, option_id: int):
        k = int(np.searchsorted(self.ids, option_id))
        c = self.centroid[frame, k]
        return None if np.isnan(c[0]) else (float(c[0]), float(c[1]))


def _pursue(gaze: GazeState, tracks: SceneTracks, manifest: SceneManifest) -> GazeState:
    if gaze.foveated_id == BACKGROUND:
        return replace(gaze, frame=gaze.frame + 1)
    t = gaze.frame
    return _shifted(
        gaze,
        tracks.centroid_of(t, gaze.foveated_id),
        tracks.centroid_of(t + 1, gaze.foveated_id),
        manifest.width_px,
        manifest.height_px,
    )


def _landing_target(winner: int, ev: EvidenceVector) -> int:
    if ev.area_of(winner) > 0:
        return winner
    if ev.area_of(BACKGROUND) > 0:
        return BACKGROUND
    return int(ev.ids[int(np.argmax(ev.area))])


def frame_information(scene: SceneBundle, frame: int, gaze: GazeState, config: SimConfig, bias: np.ndarray) -> np.ndarray:
    F = normalize_features(scene.features[frame], config.feature_gain)
    G = gaussian_sensitivity(gaze.x, gaze.y, config.sigma_dva, scene.manifest)
    S = apply_object_sensitivity(G, scene.masks[frame], gaze.foveated_id, config.omega, (gaze.x, gaze.y))
    return information_map(F, bias, S)


def _pos(row) -> tuple[float, float]:
    return (float(row[0]), float(row[1]))


def simulate(scene: SceneBundle, config: SimConfig, tracks: SceneTracks | None = None) -> Scanpath:
    """Run the race over every frame of ``scene``.

    A threshold crossing during frame t closes the current foveation at t,
    emits a saccade stamped with frame t, and the new foveation starts at
    t + 1. A crossing on the last frame still emits its saccade.
    """
    m = scene.manifest
    if tracks is None:
        tracks = SceneTracks.from_masks(scene.masks, m)
    bias = center_bias_map(m, config.center_bias)
    state, gaze, rng = init_run(scene, config)

    n = m.n_frames
    trace = np.empty((n, 2))
    foveated = np.empty(n, dtype=np.int64)
    events = []
    fov_start, fov_option = 0, gaze.foveated_id

    for t in range(n):
        trace[t] = gaze.x, gaze.y
        foveated[t] = gaze.foveated_id
        info = frame_information(scene, t, gaze, config, bias)
        ev = evidence_all(info, scene.masks[t], m, config.bg_log_scaling)
        state = update_ior(state, gaze.foveated_id, config.epsilon, config.dt, t)
        state, winner = step_accumulators(state, ev.mu, gaze.foveated_id, config, rng)
        if winner is not None:
            target = _landing_target(winner, ev)
            landing = sample_landing(info, scene.masks[t], target, rng)
            here = (gaze.x, gaze.y)
            events.append(Foveation(fov_start, t, _pos(trace[fov_start]), here, fov_option))
            events.append(make_saccade(t, here, landing, target, m))
            state = state.reset()
            gaze = GazeState(landing[0], landing[1], target, t)
            fov_start, fov_option = t + 1, target
        if t + 1 < n:
            gaze = _pursue(gaze, tracks, m)

    if fov_start < n:
        exit_pos = _pos(trace[-1])
        events.append(Foveation(fov_start, n - 1, _pos(trace[fov_start]), exit_pos, fov_option))
    return Scanpath(tuple(events), trace, foveated, config.seed, "objectddm")
