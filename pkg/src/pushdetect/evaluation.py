"""Dataset splitting, clip-level decisions, and report metrics.

Confusion matrices are indexed (true, pred) over (normal, push) and reports
show row-normalized rates (each row divided by its true-class total), printed
to two decimals.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import SplitError
from .forest import ForestModel, vote_counts
from .interaction import PAIR_FEATURE_NAMES, GateConfig, build_pair_samples
from .kinematics import KinematicsConfig
from .skeleton import ClipRecord, Label
from .tracker import TrackerConfig, track_clip


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        fracs = (self.train, self.val, self.test)
        if any(f <= 0 for f in fracs):
            raise ValueError("split fractions must be positive")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


@dataclass(frozen=True)
class ClipDecisionConfig:
    # clip is push iff push-predicted gated frames / gated frames >= tau_clip;
    # a clip with no gated frames is normal
    tau_clip: float = 0.3

    def __post_init__(self):
        if not (0.0 < self.tau_clip <= 1.0):
            raise ValueError("tau_clip must be in (0, 1]")


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self):
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(c for row in self.counts for c in row)


def _largest_remainder(n: int, fracs: Sequence[float]) -> list[int]:
    quotas = [n * f for f in fracs]
    base = [math.floor(q) for q in quotas]
    leftover = n - sum(base)
    # ties on the fractional part go to the earlier bucket
    order = sorted(range(len(fracs)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def _slice_buckets(items: list, fracs: Sequence[float]) -> list[list]:
    sizes = _largest_remainder(len(items), fracs)
    out = []
    pos = 0
    for s in sizes:
        out.append(items[pos:pos + s])
        pos += s
    return out


def split_clips(clips: Sequence[ClipRecord],
                spec: SplitSpec) -> tuple[list[ClipRecord], list[ClipRecord], list[ClipRecord]]:
    """Deterministic (train, val, test) partition.

    Stratified mode shuffles each class separately and slices it by the
    fractions with largest-remainder rounding, so buckets stay class-balanced.
    """
    fracs = (spec.train, spec.val, spec.test)
    rng = random.Random(spec.seed)
    buckets: list[list[ClipRecord]] = [[], [], []]
    if spec.stratified:
        groups: dict[Label, list[ClipRecord]] = {Label.NORMAL: [], Label.PUSH: []}
        for clip in clips:
            if clip.label is None:
                raise SplitError(f"clip {clip.clip_id!r} is unlabeled; stratified split needs labels")
            groups[clip.label].append(clip)
        for label in (Label.NORMAL, Label.PUSH):
            members = groups[label]
            if not members:
                raise SplitError(f"class {label.to_wire()!r} is empty; cannot stratify")
            members = list(members)
            rng.shuffle(members)
            for bucket, part in zip(buckets, _slice_buckets(members, fracs)):
                bucket.extend(part)
    else:
        members = list(clips)
        rng.shuffle(members)
        buckets = _slice_buckets(members, fracs)
    return buckets[0], buckets[1], buckets[2]


def decide_clip(frame_preds: Sequence[Label], cfg: ClipDecisionConfig | None = None) -> Label:
    """Aggregate per-gated-frame predictions into one clip verdict."""
    cfg = cfg or ClipDecisionConfig()
    if not frame_preds:
        return Label.NORMAL
    push = sum(1 for p in frame_preds if p is Label.PUSH)
    return Label.PUSH if push / len(frame_preds) >= cfg.tau_clip else Label.NORMAL


def confusion(true_labels: Sequence[Label], pred_labels: Sequence[Label]) -> ConfusionMatrix:
    if len(true_labels) != len(pred_labels):
        raise ValueError("label lists must have equal length")
    if not true_labels:
        raise ValueError("label lists must be non-empty")
    counts = [[0, 0], [0, 0]]
    for t, p in zip(true_labels, pred_labels):
        counts[int(t)][int(p)] += 1
    return ConfusionMatrix(counts=(tuple(counts[0]), tuple(counts[1])))


def normalize_rows(cm: ConfusionMatrix) -> tuple[tuple[Optional[float], ...], ...]:
    """Per-true-class rates; a row with no samples becomes (None, None)."""
    rows = []
    for row in cm.counts:
        total = sum(row)
        if total == 0:
            rows.append((None, None))
        else:
            rows.append(tuple(c / total for c in row))
    return tuple(rows)


def render_rows(norm: Sequence[Sequence[Optional[float]]]) -> list[list[str]]:
    """Two-decimal strings for reports; undefined rows render as 'n/a'."""
    return [["n/a" if v is None else f"{v:.2f}" for v in row] for row in norm]


def precision_recall(cm: ConfusionMatrix) -> tuple[Optional[float], Optional[float]]:
    """(precision, recall) for the push class; None when undefined."""
    tp = cm.counts[1][1]
    fp = cm.counts[0][1]
    fn = cm.counts[1][0]
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    return precision, recall


@dataclass(frozen=True)
class PipelineConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    kinematics: KinematicsConfig = field(default_factory=KinematicsConfig)
    gate: GateConfig = field(default_factory=GateConfig)
    decision: ClipDecisionConfig = field(default_factory=ClipDecisionConfig)


def feature_indices(model: ForestModel) -> list[int]:
    """Positions of the model's features inside the 18-entry pair vector."""
    try:
        return [PAIR_FEATURE_NAMES.index(n) for n in model.feature_names]
    except ValueError:
        if model.feature_dim == len(PAIR_FEATURE_NAMES):
            return list(range(len(PAIR_FEATURE_NAMES)))
        raise ValueError(
            "model feature names do not match pair feature names; cannot map columns"
        )


def clip_frame_predictions(model: ForestModel, clip: ClipRecord,
                           cfg: PipelineConfig | None = None) -> list[Label]:
    """Per-gated-frame predictions for one clip.

    A frame counts as push when any of its gated pairs is predicted push
    (scenes here have one pair almost always).
    """
    cfg = cfg or PipelineConfig()
    if not clip.is_tracked():
        clip = track_clip(clip, cfg.tracker)
    samples = build_pair_samples(clip, cfg.kinematics, cfg.gate)
    idx = feature_indices(model)
    frame_push: dict[int, bool] = {}
    for s in samples:
        x = [s.features[i] for i in idx]
        n0, n1 = vote_counts(model, x)
        frame_push[s.frame_idx] = frame_push.get(s.frame_idx, False) or (n1 > n0)
    return [Label.PUSH if pushy else Label.NORMAL for _, pushy in sorted(frame_push.items())]


@dataclass(frozen=True)
class EvalReport:
    clip_counts: ConfusionMatrix
    clip_normalized: tuple
    precision: Optional[float]
    recall: Optional[float]
    frame_counts: Optional[ConfusionMatrix]
    frame_normalized: Optional[tuple]
    n_clips: int
    decision: ClipDecisionConfig

    def to_json_obj(self) -> dict:
        return {
            "confusion_counts": [list(r) for r in self.clip_counts.counts],
            "confusion_normalized": [list(r) for r in self.clip_normalized],
            "precision": self.precision,
            "recall": self.recall,
            "frame_level": None if self.frame_counts is None else {
                "confusion_counts": [list(r) for r in self.frame_counts.counts],
                "confusion_normalized": [list(r) for r in self.frame_normalized],
            },
            "config": {"tau_clip": self.decision.tau_clip, "n_clips": self.n_clips},
        }


def evaluate_model(model: ForestModel, clips: Sequence[ClipRecord],
                   cfg: PipelineConfig | None = None) -> EvalReport:
    """Clip-level (and weak frame-level) evaluation over labeled clips."""
    cfg = cfg or PipelineConfig()
    clip_true: list[Label] = []
    clip_pred: list[Label] = []
    frame_true: list[Label] = []
    frame_pred: list[Label] = []
    for clip in clips:
        if clip.label is None:
            raise ValueError(f"clip {clip.clip_id!r} is unlabeled; evaluation needs labels")
        preds = clip_frame_predictions(model, clip, cfg)
        clip_true.append(clip.label)
        clip_pred.append(decide_clip(preds, cfg.decision))
        frame_true.extend([clip.label] * len(preds))
        frame_pred.extend(preds)
    cm = confusion(clip_true, clip_pred)
    norm = normalize_rows(cm)
    prec, rec = precision_recall(cm)
    if frame_true:
        fcm = confusion(frame_true, frame_pred)
        fnorm = normalize_rows(fcm)
    else:
        fcm, fnorm = None, None
    return EvalReport(
        clip_counts=cm,
        clip_normalized=norm,
        precision=prec,
        recall=rec,
        frame_counts=fcm,
        frame_normalized=fnorm,
        n_clips=len(clips),
        decision=cfg.decision,
    )
