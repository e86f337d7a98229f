"""Run specs, multi-seed simulation, corpus evaluation, and one-parameter sweeps.

Everything the command line does is available here as plain function calls.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .baseline import BaselineConfig, simulate_baseline
from .engine import SceneTracks, SimConfig, simulate
from .metrics import (
    SUMMARY_METRICS,
    MetricsReport,
    VideoCorpus,
    compute_report,
    density_distance,
    histogram_distance,
)
from .rng import derive_seed
from .scene_io import (
    EventFileError,
    load_scene,
    parse_manifest,
    read_events,
    read_raster,
)

MODELS = ("objectddm", "baseline")
SWEEP_PARAMETERS = ("theta", "s", "sigma_dva", "omega", "epsilon", "center_bias.enabled")
RUN_INDEX_FILE = "runs.json"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunSpec:
    scenes: tuple[Path, ...]
    model: str = "objectddm"
    params: SimConfig | BaselineConfig = field(default_factory=SimConfig)
    n_seeds: int = 12
    seed: int = 0
    out: Path = Path("runs")

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if isinstance(self.n_seeds, bool) or not isinstance(self.n_seeds, int) or self.n_seeds < 1:
            raise ConfigError(f"n_seeds must be a positive integer, got {self.n_seeds!r}")
        expected = SimConfig if self.model == "objectddm" else BaselineConfig
        if not isinstance(self.params, expected):
            raise ConfigError(f"params do not match model {self.model!r}")
        if not self.scenes:
            raise ConfigError("no scenes given")
        for path in self.scenes:
            if not Path(path).is_file():
                raise ConfigError(f"scene manifest not found: {path}")

    def run_seeds(self) -> list[int]:
        return [derive_seed(self.seed, k) for k in range(self.n_seeds)]


@dataclass(frozen=True)
class SweepSpec:
    base: RunSpec
    parameter: str
    values: tuple

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"cannot sweep {self.parameter!r}; choose from {SWEEP_PARAMETERS}")
        if self.base.model != "objectddm":
            raise ConfigError("sweeps vary ObjectDDM parameters; model must be objectddm")
        if len(self.values) < 2:
            raise ConfigError("a sweep needs at least two values")


def parse_value(text: str):
    """Interpret a ``--set`` value as JSON when possible, else as a string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _make_params(model: str, params: dict):
    try:
        if model == "objectddm":
            return SimConfig.from_dict(params)
        return BaselineConfig.from_dict(params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid params: {exc}") from exc


def run_spec_from_dict(doc: dict, base_dir: Path = Path("."), overrides: dict | None = None) -> RunSpec:
    """Build a RunSpec from a config document; relative paths resolve against ``base_dir``.

    ``overrides`` maps keys to values: top-level scalars (model, n_seeds,
    seed, out) or parameter names such as ``theta`` or ``center_bias.enabled``.
    """
    doc = dict(doc)
    allowed = {"scenes", "model", "params", "n_seeds", "seed", "out", "sweep"}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
    overrides = dict(overrides or {})
    for key in ("model", "n_seeds", "seed", "out"):
        if key in overrides:
            doc[key] = overrides.pop(key)
    model = doc.get("model", "objectddm")
    if model not in MODELS:
        raise ConfigError(f"model must be one of {MODELS}, got {model!r}")
    params = _make_params(model, doc.get("params", {}))
    for key, value in overrides.items():
        try:
            params = params.with_param(key, value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"--set {key}: {exc}") from exc
    scenes = doc.get("scenes")
    if not isinstance(scenes, list) or not all(isinstance(s, str) for s in scenes):
        raise ConfigError("scenes must be a list of manifest paths")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return RunSpec(
        scenes=tuple(base_dir / s for s in scenes),
        model=model,
        params=params,
        n_seeds=doc.get("n_seeds", 12),
        seed=seed,
        out=base_dir / doc.get("out", "runs"),
    )


def sweep_spec_from_dict(doc: dict, base_dir: Path = Path("."), overrides: dict | None = None) -> SweepSpec:
    sweep = doc.get("sweep")
    if not isinstance(sweep, dict) or set(sweep) != {"parameter", "values"}:
        raise ConfigError("sweep config needs a 'sweep' object with 'parameter' and 'values'")
    if not isinstance(sweep["values"], list):
        raise ConfigError("sweep values must be a list")
    base = run_spec_from_dict({k: v for k, v in doc.items() if k != "sweep"}, base_dir, overrides)
    return SweepSpec(base, sweep["parameter"], tuple(sweep["values"]))


@lru_cache(maxsize=4)
def _cached_scene(path: str):
    scene = load_scene(path)
    return scene, SceneTracks.from_masks(scene.masks, scene.manifest)


def _run_one(task: tuple) -> str:
    manifest_path, model, params, seed, out_path, subject = task
    scene, tracks = _cached_scene(manifest_path)
    params = replace(params, seed=seed)
    if model == "objectddm":
        scanpath = simulate(scene, params, tracks)
    else:
        scanpath = simulate_baseline(scene, params)
    scanpath.write_csv(out_path, subject)
    return out_path


def run_tasks(tasks: list[tuple], jobs: int = 1) -> None:
    if jobs <= 1 or len(tasks) <= 1:
        for task in tasks:
            _run_one(task)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        list(pool.map(_run_one, tasks))


def run_simulations(spec: RunSpec, jobs: int = 1) -> Path:
    """Write one scanpath CSV per (scene, seed) plus a run index; returns the index path."""
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = []
    entries = []
    for manifest_path in spec.scenes:
        manifest = parse_manifest(Path(manifest_path).read_text(encoding="utf-8"))
        video_dir = out / manifest.video_id
        video_dir.mkdir(exist_ok=True)
        files = []
        for k, seed in enumerate(spec.run_seeds()):
            subject = f"{spec.model}_run{k:03d}"
            path = video_dir / f"{subject}.csv"
            tasks.append((str(manifest_path), spec.model, spec.params, seed, str(path), subject))
            files.append(os.path.relpath(path, out))
        entries.append({"manifest": os.path.relpath(Path(manifest_path).resolve(), out.resolve()), "events": files})
    run_tasks(tasks, jobs)
    index = {
        "model": spec.model,
        "params": spec.params.to_dict(),
        "seed": spec.seed,
        "n_seeds": spec.n_seeds,
        "entries": entries,
    }
    index_path = out / RUN_INDEX_FILE
    index_path.write_text(json.dumps(index, indent=2), encoding="utf-8")
    return index_path


def load_corpus(path) -> list[VideoCorpus]:
    """Load a corpus from a run directory (with runs.json) or a JSON corpus file.

    A corpus file is ``{"entries": [{"manifest": ..., "events": [...]}, ...]}``
    with paths relative to the file.
    """
    path = Path(path)
    index = path / RUN_INDEX_FILE if path.is_dir() else path
    if not index.is_file():
        raise ConfigError(f"no corpus index at {index}")
    try:
        doc = json.loads(index.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{index}: {exc}") from exc
    base = index.parent
    videos = []
    for entry in doc.get("entries", []):
        manifest_path = base / entry["manifest"]
        if not manifest_path.is_file():
            raise ConfigError(f"scene manifest not found: {manifest_path}")
        manifest = parse_manifest(manifest_path.read_text(encoding="utf-8"))
        masks = read_raster(manifest_path.parent / manifest.mask_path, "mask", manifest)
        scanpaths = {}
        for events_path in entry["events"]:
            for subject, events in read_events(base / events_path, manifest).items():
                key = subject
                while key in scanpaths:
                    key += "'"
                scanpaths[key] = events
        videos.append(VideoCorpus(manifest, masks, scanpaths))
    if not videos:
        raise ConfigError(f"{index}: corpus has no entries")
    return videos


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.generic):
        return _json_safe(value.item())
    return value


def _write_column(path: Path, name: str, values) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([name])
        writer.writerows([repr(float(v))] for v in values)


def write_report(report: MetricsReport, directory) -> Path:
    """report.json plus one flat CSV per metric."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "report.json"
    path.write_text(json.dumps(_json_safe(report.to_dict()), indent=1), encoding="utf-8")
    _write_column(directory / "foveation_durations_ms.csv", "foveation_duration_ms", report.foveation_durations_ms)
    _write_column(directory / "amplitudes_dva.csv", "amplitude_dva", report.amplitudes_dva)
    _write_column(directory / "directions_rad.csv", "direction_rad", report.directions_rad)
    _write_column(directory / "refoveation_latencies_ms.csv", "latency_ms", report.refoveation_latencies_ms)
    with open(directory / "gaze_density.csv", "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows([repr(float(v)) for v in row] for row in report.gaze_density)
    with open(directory / "per_video.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("video_id",) + SUMMARY_METRICS)
        for video_id, values in report.per_video.items():
            writer.writerow([video_id] + [repr(values.get(k, math.nan)) for k in SUMMARY_METRICS])
    with open(directory / "scalars.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("metric", "value"))
        writer.writerow(("within_object_ratio", repr(report.within_object_ratio)))
        writer.writerow(("refoveation_ratio", repr(report.refoveation_ratio)))
        for key, value in report.label_classes.items():
            writer.writerow((f"saccades_{key}", value))
    return path


def report_distances(a: MetricsReport, b: MetricsReport) -> dict[str, float]:
    """EMD per distribution metric (in the metric's own units) and for the gaze density."""
    out = {}
    hb = b.histograms()
    for name, (counts, width) in a.histograms().items():
        other = hb[name][0]
        out[name] = histogram_distance(counts, other, width) if counts.sum() and other.sum() else math.nan
    out["gaze_density_cells"] = density_distance(a.gaze_density, b.gaze_density)
    return out


def evaluate(corpora: dict[str, list[VideoCorpus]], out) -> dict[str, MetricsReport]:
    """One report per corpus and a pairwise distance table (distances.csv)."""
    out = Path(out)
    reports = {name: compute_report(videos) for name, videos in corpora.items()}
    for name, report in reports.items():
        write_report(report, out / name)
    with open(out / "distances.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("corpus_a", "corpus_b", "metric", "distance"))
        for a, b in itertools.combinations(reports, 2):
            for metric, value in report_distances(reports[a], reports[b]).items():
                writer.writerow((a, b, metric, repr(value)))
    return reports


def _value_label(value) -> str:
    return json.dumps(value)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> dict:
    """Simulate and evaluate every swept value; write summary.csv (mean and std across videos)."""
    out = Path(spec.base.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = {}
    for value in spec.values:
        try:
            params = spec.base.params.with_param(spec.parameter, value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"sweep value {value!r}: {exc}") from exc
        cell = out / f"{spec.parameter}={_value_label(value)}"
        run = replace(spec.base, params=params, out=cell / "runs")
        run_simulations(run, jobs)
        reports[value] = evaluate({"objectddm": load_corpus(cell / "runs")}, cell)["objectddm"]

    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("parameter", "value", "metric", "mean", "std", "n_videos"))
        for value, report in reports.items():
            for metric in SUMMARY_METRICS:
                per_video = np.array([v[metric] for v in report.per_video.values()], dtype=float)
                finite = per_video[np.isfinite(per_video)]
                mean = float(finite.mean()) if finite.size else math.nan
                std = float(finite.std()) if finite.size else math.nan
                writer.writerow((spec.parameter, _value_label(value), metric, repr(mean), repr(std), finite.size))

    with open(out / "density_distances.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("value_a", "value_b", "gaze_density_cells"))
        for a, b in itertools.combinations(reports, 2):
            d = density_distance(reports[a].gaze_density, reports[b].gaze_density)
            writer.writerow((_value_label(a), _value_label(b), repr(d)))
    return reports


def load_config(path) -> tuple[dict, Path]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return doc, path.parent


__all__ = [
    "ConfigError", "EventFileError", "RunSpec", "SweepSpec", "evaluate", "load_config",
    "load_corpus", "parse_value", "report_distances", "run_simulations", "run_spec_from_dict",
    "run_sweep", "sweep_spec_from_dict", "write_report",
]
