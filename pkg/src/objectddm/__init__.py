"""Object-based drift-diffusion simulation of saccadic decisions in dynamic scenes."""

from .baseline import BaselineConfig, local_maxima, simulate_baseline
from .engine import SimConfig, simulate
from .metrics import compute_report, histogram_distance
from .scene_io import SceneBundle, load_scene, parse_manifest, px_to_dva, read_events, read_raster
from .visual_field import CenterBiasParams

__version__ = "0.1.0"

__all__ = [
    "BaselineConfig", "CenterBiasParams", "SceneBundle", "SimConfig", "compute_report",
    "histogram_distance", "load_scene", "local_maxima", "parse_manifest", "px_to_dva",
    "read_events", "read_raster", "simulate", "simulate_baseline",
]
