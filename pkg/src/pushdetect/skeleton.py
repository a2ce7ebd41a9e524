"""Core data types and the JSONL wire format for keypoint detection streams.

Coordinate convention: image pixels, origin top-left, y grows downward.
All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import IO, Iterable, Iterator, Union

from .errors import ClipFormatError, SequencingError

# COCO 17-keypoint indexing.
NOSE = 0
LEFT_EYE = 1
RIGHT_EYE = 2
LEFT_EAR = 3
RIGHT_EAR = 4
LEFT_SHOULDER = 5
RIGHT_SHOULDER = 6
LEFT_ELBOW = 7
RIGHT_ELBOW = 8
LEFT_WRIST = 9
RIGHT_WRIST = 10
LEFT_HIP = 11
RIGHT_HIP = 12
LEFT_KNEE = 13
RIGHT_KNEE = 14
LEFT_ANKLE = 15
RIGHT_ANKLE = 16

NUM_KEYPOINTS = 17

# Limb/torso points used by the feature stage; 0..4 (head/face) are carried
# through the wire format but never enter any feature.
ANALYSIS_KEYPOINTS = tuple(range(LEFT_SHOULDER, RIGHT_ANKLE + 1))


class Label(IntEnum):
    NORMAL = 0
    PUSH = 1

    def to_wire(self) -> str:
        return "push" if self is Label.PUSH else "normal"

    @classmethod
    def from_wire(cls, value: str | None) -> "Label | None":
        if value is None:
            return None
        if value == "push":
            return cls.PUSH
        if value == "normal":
            return cls.NORMAL
        raise ValueError(f"unknown label {value!r}")


def canon_float(v: float) -> float:
    """Quantize to the wire format's precision (6 decimal places).

    Serialization emits the shortest decimal form of the quantized value, so
    records built from canon_float values round-trip bit-exactly.
    """
    return round(float(v), 6)


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    conf: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("keypoint coordinates must be finite")
        if not (math.isfinite(self.conf) and 0.0 <= self.conf <= 1.0):
            raise ValueError("keypoint conf must be in [0, 1]")

    @property
    def point(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Skeleton:
    """One person in one frame: 17 keypoints in COCO order plus a bbox.

    bbox is (x, y, w, h) in pixels. tid is the track identity assigned by the
    tracker; None until the stream has been tracked.
    """

    kpts: tuple[Keypoint, ...]
    bbox: tuple[float, float, float, float]
    det_conf: float
    tid: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kpts", tuple(self.kpts))
        if len(self.kpts) != NUM_KEYPOINTS:
            raise ValueError(f"kpts must have {NUM_KEYPOINTS} entries, got {len(self.kpts)}")
        bbox = tuple(float(v) for v in self.bbox)
        object.__setattr__(self, "bbox", bbox)
        if len(bbox) != 4 or not all(math.isfinite(v) for v in bbox):
            raise ValueError("bbox must be 4 finite numbers (x, y, w, h)")
        if bbox[2] <= 0 or bbox[3] <= 0:
            raise ValueError("bbox width and height must be positive")
        if not (math.isfinite(self.det_conf) and 0.0 <= self.det_conf <= 1.0):
            raise ValueError("det_conf must be in [0, 1]")
        if self.tid is not None and (not isinstance(self.tid, int) or self.tid < 1):
            raise ValueError("tid must be a positive integer")

    def centroid(self) -> tuple[float, float]:
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h / 2.0)


@dataclass(frozen=True)
class FrameDetections:
    frame_idx: int
    ts_ms: int
    persons: tuple[Skeleton, ...]

    def __post_init__(self):
        object.__setattr__(self, "persons", tuple(self.persons))
        if self.frame_idx < 0:
            raise ValueError("frame_idx must be >= 0")


@dataclass(frozen=True)
class ClipRecord:
    """A labeled sequence of frames; the unit of splitting and evaluation."""

    clip_id: str
    label: Label | None
    resolution: tuple[int, int]
    frames: tuple[FrameDetections, ...]

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "resolution", tuple(int(v) for v in self.resolution))
        if self.resolution[0] <= 0 or self.resolution[1] <= 0:
            raise ValueError("resolution must be positive")
        if not self.frames:
            raise ValueError("clip must contain at least one frame")
        prev = self.frames[0]
        for frame in self.frames[1:]:
            if frame.frame_idx <= prev.frame_idx:
                raise SequencingError(
                    f"frame_idx must be strictly increasing ({prev.frame_idx} -> {frame.frame_idx})"
                )
            if frame.ts_ms < prev.ts_ms:
                raise SequencingError(
                    f"ts_ms must be non-decreasing ({prev.ts_ms} -> {frame.ts_ms})"
                )
            prev = frame

    def is_tracked(self) -> bool:
        return all(p.tid is not None for f in self.frames for p in f.persons)


@dataclass(frozen=True)
class FrameLine:
    """A single wire-format line: clip metadata plus one frame."""

    clip_id: str
    label: Label | None
    resolution: tuple[int, int]
    frame: FrameDetections


_FRAME_KEYS = {"clip_id", "label", "res", "frame", "ts_ms", "persons"}
_PERSON_KEYS = {"bbox", "conf", "kpts", "tid"}


def _require_number(obj, field: str, line: int) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)) or not math.isfinite(obj):
        raise ClipFormatError(f"field {field!r} must be a finite number", line)
    return float(obj)


def _require_int(obj, field: str, line: int) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ClipFormatError(f"field {field!r} must be an integer", line)
    return obj


def _person_from_obj(obj, line: int) -> Skeleton:
    if not isinstance(obj, dict):
        raise ClipFormatError("person entry must be an object", line)
    unknown = set(obj) - _PERSON_KEYS
    if unknown:
        raise ClipFormatError(f"unknown person field {sorted(unknown)[0]!r}", line)
    for key in ("bbox", "conf", "kpts"):
        if key not in obj:
            raise ClipFormatError(f"person is missing field {key!r}", line)
    bbox = obj["bbox"]
    if not isinstance(bbox, list) or len(bbox) != 4:
        raise ClipFormatError("field 'bbox' must be [x, y, w, h]", line)
    kpts = obj["kpts"]
    if not isinstance(kpts, list) or len(kpts) != NUM_KEYPOINTS:
        got = len(kpts) if isinstance(kpts, list) else type(kpts).__name__
        raise ClipFormatError(f"field 'kpts' must have {NUM_KEYPOINTS} entries, got {got}", line)
    keypoints = []
    for i, entry in enumerate(kpts):
        if not isinstance(entry, list) or len(entry) != 3:
            raise ClipFormatError(f"field 'kpts'[{i}] must be [x, y, conf]", line)
        keypoints.append(
            Keypoint(
                _require_number(entry[0], f"kpts[{i}].x", line),
                _require_number(entry[1], f"kpts[{i}].y", line),
                _require_number(entry[2], f"kpts[{i}].conf", line),
            )
        )
    tid = obj.get("tid")
    if tid is not None:
        tid = _require_int(tid, "tid", line)
    try:
        return Skeleton(
            kpts=tuple(keypoints),
            bbox=tuple(_require_number(v, "bbox", line) for v in bbox),
            det_conf=_require_number(obj["conf"], "conf", line),
            tid=tid,
        )
    except ValueError as exc:
        raise ClipFormatError(str(exc), line) from exc


def parse_frame_line(text: str, line: int = 1) -> FrameLine:
    """Parse one wire-format line into clip metadata plus a frame."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ClipFormatError(f"invalid JSON: {exc.msg}", line) from exc
    if not isinstance(obj, dict):
        raise ClipFormatError("record must be a JSON object", line)
    missing = _FRAME_KEYS - set(obj)
    if missing:
        raise ClipFormatError(f"record is missing field {sorted(missing)[0]!r}", line)
    unknown = set(obj) - _FRAME_KEYS
    if unknown:
        raise ClipFormatError(f"unknown record field {sorted(unknown)[0]!r}", line)
    clip_id = obj["clip_id"]
    if not isinstance(clip_id, str) or not clip_id:
        raise ClipFormatError("field 'clip_id' must be a non-empty string", line)
    try:
        label = Label.from_wire(obj["label"])
    except ValueError as exc:
        raise ClipFormatError(str(exc), line) from exc
    res = obj["res"]
    if not isinstance(res, list) or len(res) != 2:
        raise ClipFormatError("field 'res' must be [width, height]", line)
    persons = obj["persons"]
    if not isinstance(persons, list):
        raise ClipFormatError("field 'persons' must be a list", line)
    try:
        frame = FrameDetections(
            frame_idx=_require_int(obj["frame"], "frame", line),
            ts_ms=_require_int(obj["ts_ms"], "ts_ms", line),
            persons=tuple(_person_from_obj(p, line) for p in persons),
        )
        resolution = (_require_int(res[0], "res", line), _require_int(res[1], "res", line))
        if resolution[0] <= 0 or resolution[1] <= 0:
            raise ClipFormatError("field 'res' must be positive", line)
    except ValueError as exc:
        raise ClipFormatError(str(exc), line) from exc
    return FrameLine(clip_id=clip_id, label=label, resolution=resolution, frame=frame)


def _iter_lines(source: Union[bytes, str, IO, Iterable[str]]) -> Iterator[str]:
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        yield from source.splitlines()
        return
    for raw in source:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        yield raw.rstrip("\n")


def parse_clip(source: Union[bytes, str, IO, Iterable[str]]) -> ClipRecord:
    """Parse a whole-clip JSONL stream (one frame per line).

    Every line must carry the same clip_id/label/res. Frame ordering is
    enforced as lines arrive so errors point at the offending line.
    """
    frames: list[FrameDetections] = []
    header: FrameLine | None = None
    line_no = 0
    for text in _iter_lines(source):
        line_no += 1
        if not text.strip():
            continue
        fl = parse_frame_line(text, line_no)
        if header is None:
            header = fl
        else:
            if fl.clip_id != header.clip_id:
                raise ClipFormatError(
                    f"clip_id changed mid-stream ({header.clip_id!r} -> {fl.clip_id!r})", line_no
                )
            if fl.label != header.label or fl.resolution != header.resolution:
                raise ClipFormatError("label/res changed mid-stream", line_no)
            if fl.frame.frame_idx <= frames[-1].frame_idx:
                raise SequencingError(
                    f"line {line_no}: frame_idx must be strictly increasing "
                    f"({frames[-1].frame_idx} -> {fl.frame.frame_idx})"
                )
            if fl.frame.ts_ms < frames[-1].ts_ms:
                raise SequencingError(
                    f"line {line_no}: ts_ms must be non-decreasing "
                    f"({frames[-1].ts_ms} -> {fl.frame.ts_ms})"
                )
        frames.append(fl.frame)
    if header is None:
        raise ClipFormatError("empty stream: a clip needs at least one frame", 1)
    return ClipRecord(
        clip_id=header.clip_id,
        label=header.label,
        resolution=header.resolution,
        frames=tuple(frames),
    )


def _person_to_obj(skel: Skeleton) -> dict:
    obj = {
        "bbox": [canon_float(v) for v in skel.bbox],
        "conf": canon_float(skel.det_conf),
        "kpts": [[canon_float(k.x), canon_float(k.y), canon_float(k.conf)] for k in skel.kpts],
    }
    if skel.tid is not None:
        obj["tid"] = skel.tid
    return obj


def frame_line_to_json(clip_id: str, label: Label | None, resolution: tuple[int, int],
                       frame: FrameDetections) -> str:
    obj = {
        "clip_id": clip_id,
        "label": None if label is None else label.to_wire(),
        "res": [int(resolution[0]), int(resolution[1])],
        "frame": frame.frame_idx,
        "ts_ms": frame.ts_ms,
        "persons": [_person_to_obj(p) for p in frame.persons],
    }
    return json.dumps(obj, separators=(",", ":"))


def serialize_clip(clip: ClipRecord) -> bytes:
    """Canonical JSONL bytes: fixed field order, 6-decimal float precision."""
    lines = [
        frame_line_to_json(clip.clip_id, clip.label, clip.resolution, frame)
        for frame in clip.frames
    ]
    return ("\n".join(lines) + "\n").encode("utf-8")
