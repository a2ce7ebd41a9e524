"""Two-person interaction gating and paired feature samples.

A push involves exactly two people, so classification only ever sees pairs.
Pairs are gated by proximity: centroid distance below kappa times the larger
bbox height (a scale proxy that survives camera-distance changes). Each
sample concatenates the two feature vectors with a geometric ordering:
subject a is the one whose bbox centroid-x is smaller (ties: lower tid).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations

from .kinematics import FEATURE_NAMES, KinematicsConfig, extract_features
from .skeleton import ClipRecord, Label, Skeleton

PAIR_FEATURE_NAMES = tuple(f"a_{n}" for n in FEATURE_NAMES) + tuple(f"b_{n}" for n in FEATURE_NAMES)


@dataclass(frozen=True)
class GateConfig:
    kappa: float = 1.5

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")


@dataclass(frozen=True)
class PairSample:
    clip_id: str
    frame_idx: int
    tid_a: int
    tid_b: int
    features: tuple[float, ...]
    label: Label | None = None

    def __post_init__(self):
        if self.tid_a == self.tid_b:
            raise ValueError("a pair needs two distinct tracks")
        if len(self.features) != len(PAIR_FEATURE_NAMES):
            raise ValueError(f"pair features must have {len(PAIR_FEATURE_NAMES)} entries")
        if any(not math.isfinite(v) for v in self.features):
            raise ValueError("pair features must all be finite")


def _ordered(ta: int, sa: Skeleton, tb: int, sb: Skeleton):
    ka = (sa.centroid()[0], ta)
    kb = (sb.centroid()[0], tb)
    return (ta, sa, tb, sb) if ka <= kb else (tb, sb, ta, sa)


def gate_pairs(frame_tracks: list[tuple[int, Skeleton]],
               cfg: GateConfig | None = None) -> list[tuple[int, int]]:
    """Proximity-eligible pairs for one frame, ordered by the subject-a
    convention and sorted by (tid_a, tid_b)."""
    cfg = cfg or GateConfig()
    out = []
    for (ta, sa), (tb, sb) in combinations(frame_tracks, 2):
        if ta == tb:
            continue
        dist = math.dist(sa.centroid(), sb.centroid())
        if dist < cfg.kappa * max(sa.bbox[3], sb.bbox[3]):
            a, _, b, _ = _ordered(ta, sa, tb, sb)
            out.append((a, b))
    out.sort()
    return out


def build_pair_samples(clip: ClipRecord,
                       kcfg: KinematicsConfig | None = None,
                       gcfg: GateConfig | None = None) -> list[PairSample]:
    """All pair samples of a tracked clip.

    A sample is emitted only when all 18 entries are valid or imputed; labeled
    clips stamp their label on every sample (weak labeling: the clip label
    covers all its gated frames).
    """
    kcfg = kcfg or KinematicsConfig()
    gcfg = gcfg or GateConfig()
    if not clip.is_tracked():
        raise ValueError("clip has untracked persons; run the tracker first")
    histories: dict[int, deque] = {}
    samples: list[PairSample] = []
    for frame in clip.frames:
        tracks = [(p.tid, p) for p in frame.persons]
        by_tid = dict(tracks)
        pairs = gate_pairs(tracks, gcfg)
        feats = {}
        for tid_a, tid_b in pairs:
            for tid in (tid_a, tid_b):
                if tid not in feats:
                    feats[tid] = extract_features(
                        by_tid[tid], frame.frame_idx,
                        histories.get(tid, ()), kcfg,
                    )
            fa, fb = feats[tid_a], feats[tid_b]
            if fa.usable() and fb.usable():
                samples.append(PairSample(
                    clip_id=clip.clip_id,
                    frame_idx=frame.frame_idx,
                    tid_a=tid_a,
                    tid_b=tid_b,
                    features=fa.values + fb.values,
                    label=clip.label,
                ))
        for tid, skel in tracks:
            hist = histories.get(tid)
            if hist is None:
                hist = histories[tid] = deque(maxlen=max(1, kcfg.impute_window))
            hist.append((frame.frame_idx, skel))
    return samples
