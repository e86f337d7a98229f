"""Scene manifests, binary rasters, and event files."""

from __future__ import annotations

import csv
import json
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

BACKGROUND = 0
CATEGORIES = ("human", "animal", "vehicle", "other")
MAX_OBJECTS_WITHOUT_WARNING = 10

RASTER_MAGIC = b"ODDM"
RASTER_VERSION = 1
KIND_CODES = {"feature": 1, "mask": 2}
_KIND_DTYPES = {"feature": np.dtype("<f4"), "mask": np.dtype("<u2")}
_HEADER = struct.Struct("<4sBBIII")

EVENT_COLUMNS = (
    "subject_id", "kind", "start_frame", "end_frame",
    "start_x", "start_y", "end_x", "end_y",
)
SCANPATH_EXTRA_COLUMNS = ("target_id", "amplitude_dva", "direction_rad", "run_seed", "model")
EVENT_KINDS = ("foveation", "saccade")


class ManifestError(ValueError):
    pass


class RasterError(ValueError):
    pass


class EventFileError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


@dataclass(frozen=True)
class ObjectInfo:
    id: int
    category: str


@dataclass(frozen=True)
class SceneManifest:
    video_id: str
    width_px: int
    height_px: int
    n_frames: int
    frame_rate_hz: float
    px_per_dva: float
    feature_path: str
    mask_path: str
    objects: tuple[ObjectInfo, ...]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def object_ids(self) -> tuple[int, ...]:
        return tuple(o.id for o in self.objects)

    @property
    def option_ids(self) -> tuple[int, ...]:
        """Background followed by the object ids, ascending."""
        return (BACKGROUND,) + tuple(sorted(self.object_ids))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_frames, self.height_px, self.width_px)

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "width_px": self.width_px,
            "height_px": self.height_px,
            "n_frames": self.n_frames,
            "frame_rate_hz": self.frame_rate_hz,
            "px_per_dva": self.px_per_dva,
            "feature_path": self.feature_path,
            "mask_path": self.mask_path,
            "object_ids": [{"id": o.id, "category": o.category} for o in self.objects],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


_MANIFEST_FIELDS = (
    "video_id", "width_px", "height_px", "n_frames", "frame_rate_hz",
    "px_per_dva", "feature_path", "mask_path", "object_ids",
)


def _positive_int(doc: dict, key: str) -> int:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ManifestError(f"{key}: expected an integer, got {value!r}")
    if value <= 0:
        raise ManifestError(f"{key}: must be positive, got {value}")
    return value


def _positive_real(doc: dict, key: str) -> float:
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ManifestError(f"{key}: expected a number, got {value!r}")
    if not math.isfinite(value) or value <= 0:
        raise ManifestError(f"{key}: must be positive and finite, got {value}")
    return float(value)


def _string(doc: dict, key: str) -> str:
    value = doc[key]
    if not isinstance(value, str) or not value:
        raise ManifestError(f"{key}: expected a non-empty string")
    return value


def _parse_objects(raw) -> tuple[ObjectInfo, ...]:
    if not isinstance(raw, list):
        raise ManifestError("object_ids: expected a list")
    objects = []
    seen = set()
    for entry in raw:
        if not isinstance(entry, dict) or set(entry) != {"id", "category"}:
            raise ManifestError("object_ids: each entry needs exactly 'id' and 'category'")
        oid = entry["id"]
        if isinstance(oid, bool) or not isinstance(oid, int):
            raise ManifestError(f"object_ids: id {oid!r} is not an integer")
        if oid == BACKGROUND:
            raise ManifestError("object_ids: id 0 is the reserved background id")
        if oid < 0 or oid > 0xFFFF:
            raise ManifestError(f"object_ids: id {oid} outside 1..65535")
        if oid in seen:
            raise ManifestError(f"object_ids: duplicate id {oid}")
        if entry["category"] not in CATEGORIES:
            raise ManifestError(f"object_ids: unknown category {entry['category']!r} for id {oid}")
        seen.add(oid)
        objects.append(ObjectInfo(oid, entry["category"]))
    return tuple(objects)


def parse_manifest(text: str) -> SceneManifest:
    """Parse a JSON scene manifest.

    Raises ManifestError naming the offending field. More than ten objects
    is accepted and recorded in ``warnings``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"malformed manifest: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError("malformed manifest: top level must be an object")
    unknown = sorted(set(doc) - set(_MANIFEST_FIELDS))
    if unknown:
        raise ManifestError(f"unknown field(s): {', '.join(unknown)}")
    for key in _MANIFEST_FIELDS:
        if key not in doc:
            raise ManifestError(f"{key}: missing required field")

    objects = _parse_objects(doc["object_ids"])
    warnings = []
    if len(objects) > MAX_OBJECTS_WITHOUT_WARNING:
        msg = f"{len(objects)} objects declared; scenes with more than {MAX_OBJECTS_WITHOUT_WARNING} are considered crowded"
        warnings.append(msg)
        log.warning("%s: %s", doc.get("video_id"), msg)

    return SceneManifest(
        video_id=_string(doc, "video_id"),
        width_px=_positive_int(doc, "width_px"),
        height_px=_positive_int(doc, "height_px"),
        n_frames=_positive_int(doc, "n_frames"),
        frame_rate_hz=_positive_real(doc, "frame_rate_hz"),
        px_per_dva=_positive_real(doc, "px_per_dva"),
        feature_path=_string(doc, "feature_path"),
        mask_path=_string(doc, "mask_path"),
        objects=objects,
        warnings=tuple(warnings),
    )


def write_raster(path, data: np.ndarray, kind: str) -> None:
    """Write a (n_frames, height, width) array in the ODDM raster format."""
    if kind not in KIND_CODES:
        raise RasterError(f"unknown raster kind {kind!r}")
    data = np.asarray(data)
    if data.ndim != 3:
        raise RasterError("raster data must be 3-dimensional (frames, height, width)")
    n_frames, height, width = data.shape
    header = _HEADER.pack(RASTER_MAGIC, RASTER_VERSION, KIND_CODES[kind], width, height, n_frames)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(data, dtype=_KIND_DTYPES[kind]).tobytes())


def read_raster(path, kind: str, manifest: SceneManifest) -> np.ndarray:
    """Read and validate a feature or mask raster.

    Returns a read-only array of shape (n_frames, height, width): float32
    feature values or uint16 object labels.
    """
    if kind not in KIND_CODES:
        raise RasterError(f"unknown raster kind {kind!r}")
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise RasterError(f"{path}: truncated header")
    magic, version, kind_code, width, height, n_frames = _HEADER.unpack_from(blob)
    if magic != RASTER_MAGIC:
        raise RasterError(f"{path}: bad magic {magic!r}")
    if version != RASTER_VERSION:
        raise RasterError(f"{path}: unsupported version {version}")
    if kind_code != KIND_CODES[kind]:
        raise RasterError(f"{path}: expected {kind} raster, header says kind {kind_code}")
    if (n_frames, height, width) != manifest.shape:
        raise RasterError(
            f"{path}: dimension mismatch, file {width}x{height}x{n_frames}, "
            f"manifest {manifest.width_px}x{manifest.height_px}x{manifest.n_frames}"
        )
    dtype = _KIND_DTYPES[kind]
    expected = n_frames * height * width * dtype.itemsize
    if len(blob) - _HEADER.size != expected:
        raise RasterError(f"{path}: payload is {len(blob) - _HEADER.size} bytes, expected {expected}")
    data = np.frombuffer(blob, dtype=dtype, offset=_HEADER.size).reshape(n_frames, height, width)

    if kind == "feature":
        finite = np.isfinite(data)
        if not finite.all():
            f, y, x = np.argwhere(~finite)[0]
            raise RasterError(f"{path}: non-finite value at ({f},{y},{x})")
        if (data < 0).any():
            f, y, x = np.argwhere(data < 0)[0]
            raise RasterError(f"{path}: negative feature value at ({f},{y},{x})")
    else:
        allowed = np.zeros(0x10000, dtype=bool)
        allowed[BACKGROUND] = True
        allowed[list(manifest.object_ids)] = True
        bad = ~allowed[data]
        if bad.any():
            f, y, x = np.argwhere(bad)[0]
            raise RasterError(f"{path}: unknown mask label {int(data[f, y, x])} at ({f},{y},{x})")
    return data


@dataclass(frozen=True)
class SceneBundle:
    manifest: SceneManifest
    features: np.ndarray
    masks: np.ndarray
    source: Path | None = None


def load_scene(manifest_path) -> SceneBundle:
    """Load a manifest and both rasters; raster paths resolve relative to the manifest."""
    manifest_path = Path(manifest_path)
    manifest = parse_manifest(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    features = read_raster(base / manifest.feature_path, "feature", manifest)
    masks = read_raster(base / manifest.mask_path, "mask", manifest)
    return SceneBundle(manifest, features, masks, manifest_path)


def save_scene(directory, manifest: SceneManifest, features: np.ndarray, masks: np.ndarray) -> Path:
    """Write manifest + rasters into ``directory``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_raster(directory / manifest.feature_path, features, "feature")
    write_raster(directory / manifest.mask_path, masks, "mask")
    path = directory / f"{manifest.video_id}.json"
    path.write_text(manifest.to_json(), encoding="utf-8")
    return path


def px_to_dva(dx_px: float, dy_px: float, manifest: SceneManifest) -> float:
    return math.hypot(dx_px, dy_px) / manifest.px_per_dva


@dataclass(frozen=True)
class EventRecord:
    kind: str
    start_frame: int
    end_frame: int
    start_x: float
    start_y: float
    end_x: float
    end_y: float
    subject_id: str
    target_id: int | None = None
    amplitude_dva: float | None = None
    direction_rad: float | None = None
    run_seed: int | None = None
    model: str | None = None


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_events(path, events, extended: bool = True) -> None:
    """Write events as CSV; ``extended`` adds the scanpath columns."""
    columns = EVENT_COLUMNS + (SCANPATH_EXTRA_COLUMNS if extended else ())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for ev in events:
            writer.writerow([_fmt(getattr(ev, c)) for c in columns])


def _parse_row(row: dict, lineno: int) -> EventRecord:
    try:
        kind = row["kind"]
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        extra = {}
        if row.get("target_id"):
            extra["target_id"] = int(row["target_id"])
        if row.get("amplitude_dva"):
            extra["amplitude_dva"] = float(row["amplitude_dva"])
        if row.get("direction_rad"):
            extra["direction_rad"] = float(row["direction_rad"])
        if row.get("run_seed"):
            extra["run_seed"] = int(row["run_seed"])
        if row.get("model"):
            extra["model"] = row["model"]
        return EventRecord(
            kind=kind,
            start_frame=int(row["start_frame"]),
            end_frame=int(row["end_frame"]),
            start_x=float(row["start_x"]),
            start_y=float(row["start_y"]),
            end_x=float(row["end_x"]),
            end_y=float(row["end_y"]),
            subject_id=row["subject_id"],
            **extra,
        )
    except (TypeError, ValueError, KeyError) as exc:
        raise EventFileError(f"unparseable row: {exc}", lineno) from exc


def _in_bounds(x: float, y: float, manifest: SceneManifest) -> bool:
    return 0 <= x <= manifest.width_px - 1 and 0 <= y <= manifest.height_px - 1


def read_events(path, manifest: SceneManifest) -> dict[str, list[EventRecord]]:
    """Read an events (or scanpath) CSV, grouped by subject in file order.

    Each subject's events must be time-ordered and alternate strictly
    between foveations and saccades; all positions must lie in the frame.
    """
    grouped: dict[str, list[EventRecord]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        if header[: len(EVENT_COLUMNS)] != EVENT_COLUMNS:
            raise EventFileError(f"bad header {','.join(header)!r}", 1)
        unknown = set(header[len(EVENT_COLUMNS):]) - set(SCANPATH_EXTRA_COLUMNS)
        if unknown:
            raise EventFileError(f"unknown column(s) {sorted(unknown)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if None in row:
                raise EventFileError("too many fields", lineno)
            ev = _parse_row(row, lineno)
            if ev.end_frame < ev.start_frame:
                raise EventFileError("end_frame before start_frame", lineno)
            if ev.start_frame < 0 or ev.end_frame >= manifest.n_frames:
                raise EventFileError("frame index outside the video", lineno)
            if not (_in_bounds(ev.start_x, ev.start_y, manifest) and _in_bounds(ev.end_x, ev.end_y, manifest)):
                raise EventFileError("position outside frame bounds", lineno)
            prev = grouped.get(ev.subject_id)
            if prev:
                if prev[-1].kind == ev.kind:
                    raise EventFileError(
                        f"two consecutive {ev.kind} events for subject {ev.subject_id!r}", lineno
                    )
                if ev.start_frame < prev[-1].end_frame:
                    raise EventFileError(
                        f"events for subject {ev.subject_id!r} are not time-ordered", lineno
                    )
            grouped.setdefault(ev.subject_id, []).append(ev)
    return grouped
