"""Greedy IoU association tracker: persistent IDs for detected people.

Matching is greedy over descending IoU with a deterministic tie-break
(lower track id, then lower detection index), so a given stream and config
always produce the same id assignment.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

from .errors import SequencingError
from .skeleton import ClipRecord, FrameDetections, Skeleton

Bbox = tuple[float, float, float, float]


@dataclass(frozen=True)
class TrackerConfig:
    iou_min: float = 0.3
    max_age: int = 30
    history_cap: int = 64

    def __post_init__(self):
        if not (0.0 < self.iou_min < 1.0):
            raise ValueError("iou_min must be in (0, 1)")
        if self.max_age < 1:
            raise ValueError("max_age must be >= 1")
        if self.history_cap < 1:
            raise ValueError("history_cap must be >= 1")


@dataclass
class Track:
    track_id: int
    last_bbox: Bbox
    last_frame_idx: int
    age_frames: int = 0
    history: deque = field(default_factory=lambda: deque(maxlen=64))


def iou(a: Bbox, b: Bbox) -> float:
    """Intersection over union of two (x, y, w, h) boxes. Symmetric, in [0, 1]."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise ValueError("boxes must have positive width and height")
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    return inter / (aw * ah + bw * bh - inter)


class IouTracker:
    """Single-owner stateful tracker; one instance per stream."""

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = cfg or TrackerConfig()
        self.tracks: list[Track] = []
        self._next_id = 1
        self._last_frame_idx = -1

    def step(self, dets: FrameDetections) -> list[tuple[int, Skeleton]]:
        """Advance one frame; returns (track_id, skeleton) per detection, in
        detection order."""
        f = dets.frame_idx
        if f <= self._last_frame_idx:
            raise SequencingError(
                f"frame_idx must advance ({self._last_frame_idx} -> {f})"
            )
        self._last_frame_idx = f

        for t in self.tracks:
            t.age_frames = f - t.last_frame_idx
        self.tracks = [t for t in self.tracks if t.age_frames <= self.cfg.max_age]

        persons = dets.persons
        candidates = []
        for t in self.tracks:
            for di, skel in enumerate(persons):
                v = iou(t.last_bbox, skel.bbox)
                if v >= self.cfg.iou_min:
                    candidates.append((-v, t.track_id, di, t))
        candidates.sort(key=lambda c: c[:3])

        matched_tracks: set[int] = set()
        assigned: dict[int, Track] = {}
        for _, tid, di, t in candidates:
            if tid in matched_tracks or di in assigned:
                continue
            matched_tracks.add(tid)
            assigned[di] = t

        out: list[tuple[int, Skeleton]] = []
        for di, skel in enumerate(persons):
            t = assigned.get(di)
            if t is None:
                t = Track(
                    track_id=self._next_id,
                    last_bbox=skel.bbox,
                    last_frame_idx=f,
                    history=deque(maxlen=self.cfg.history_cap),
                )
                self._next_id += 1
                self.tracks.append(t)
            else:
                t.last_bbox = skel.bbox
                t.last_frame_idx = f
                t.age_frames = 0
            t.history.append((f, skel))
            out.append((t.track_id, skel))
        return out


def track_clip(clip: ClipRecord, cfg: TrackerConfig | None = None) -> ClipRecord:
    """Return a copy of the clip with tid assigned on every person."""
    tracker = IouTracker(cfg)
    frames = []
    for frame in clip.frames:
        assignments = tracker.step(frame)
        persons = tuple(replace(skel, tid=tid) for tid, skel in assignments)
        frames.append(replace(frame, persons=persons))
    return replace(clip, frames=tuple(frames))
