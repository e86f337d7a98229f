"""Simulated scanpaths and their conversion to event records."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene_io import EventRecord, SceneManifest, px_to_dva, write_events


def saccade_direction(dx: float, dy: float) -> float:
    """Direction in (-pi, pi]; 0 is rightward and +pi/2 upward (image y points down)."""
    return math.atan2(-dy + 0.0, dx)


@dataclass(frozen=True)
class Foveation:
    start_frame: int
    end_frame: int
    entry_pos: tuple[float, float]
    exit_pos: tuple[float, float]
    option_id: int


@dataclass(frozen=True)
class Saccade:
    frame: int
    from_pos: tuple[float, float]
    to_pos: tuple[float, float]
    target_id: int
    amplitude_dva: float
    direction_rad: float


def make_saccade(frame: int, from_pos, to_pos, target_id: int, manifest: SceneManifest) -> Saccade:
    dx = to_pos[0] - from_pos[0]
    dy = to_pos[1] - from_pos[1]
    return Saccade(
        frame=frame,
        from_pos=(float(from_pos[0]), float(from_pos[1])),
        to_pos=(float(to_pos[0]), float(to_pos[1])),
        target_id=int(target_id),
        amplitude_dva=px_to_dva(dx, dy, manifest),
        direction_rad=saccade_direction(dx, dy),
    )


@dataclass(frozen=True)
class Scanpath:
    """Alternating foveation/saccade events of one run.

    ``trace`` holds the gaze position at every frame (shape (n_frames, 2))
    and ``foveated`` the option foveated at every frame; neither is written
    to CSV.
    """

    events: tuple
    trace: np.ndarray
    foveated: np.ndarray
    seed: int
    model: str

    @property
    def saccades(self) -> list[Saccade]:
        return [e for e in self.events if isinstance(e, Saccade)]

    @property
    def foveations(self) -> list[Foveation]:
        return [e for e in self.events if isinstance(e, Foveation)]

    def to_records(self, subject_id: str) -> list[EventRecord]:
        rows = []
        for ev in self.events:
            if isinstance(ev, Foveation):
                rows.append(EventRecord(
                    "foveation", ev.start_frame, ev.end_frame,
                    ev.entry_pos[0], ev.entry_pos[1], ev.exit_pos[0], ev.exit_pos[1],
                    subject_id, run_seed=self.seed, model=self.model,
                ))
            else:
                rows.append(EventRecord(
                    "saccade", ev.frame, ev.frame,
                    ev.from_pos[0], ev.from_pos[1], ev.to_pos[0], ev.to_pos[1],
                    subject_id, target_id=ev.target_id, amplitude_dva=ev.amplitude_dva,
                    direction_rad=ev.direction_rad, run_seed=self.seed, model=self.model,
                ))
        return rows

    def write_csv(self, path, subject_id: str) -> None:
        write_events(path, self.to_records(subject_id))
