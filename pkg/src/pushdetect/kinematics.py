"""Kinematic angle features from tracked skeletons.

All features are angles in degrees in [0, 180], computed from the limb/torso
keypoints (5..16). Head/face points never enter any feature. The nine entries
per person:

  quad_ls, quad_rs, quad_rh, quad_lh  interior angles of the quadrilateral
                                      through left shoulder, right shoulder,
                                      right hip, left hip
  torso_incl                          hip-midpoint -> shoulder-midpoint vector
                                      against image-up; 0 = upright
  elbow_l, elbow_r                    shoulder-elbow-wrist
  abduct_l, abduct_r                  hip-shoulder-elbow (arm raising)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DegenerateGeometryError
from .skeleton import (
    LEFT_ELBOW,
    LEFT_HIP,
    LEFT_SHOULDER,
    LEFT_WRIST,
    RIGHT_ELBOW,
    RIGHT_HIP,
    RIGHT_SHOULDER,
    RIGHT_WRIST,
    Skeleton,
)

Point = tuple[float, float]

FEATURE_NAMES = (
    "quad_ls",
    "quad_rs",
    "quad_rh",
    "quad_lh",
    "torso_incl",
    "elbow_l",
    "elbow_r",
    "abduct_l",
    "abduct_r",
)

# (a, vertex, c) keypoint triples; the angle is measured at the vertex.
_ANGLE_TRIPLES = {
    "quad_ls": (RIGHT_SHOULDER, LEFT_SHOULDER, LEFT_HIP),
    "quad_rs": (LEFT_SHOULDER, RIGHT_SHOULDER, RIGHT_HIP),
    "quad_rh": (RIGHT_SHOULDER, RIGHT_HIP, LEFT_HIP),
    "quad_lh": (RIGHT_HIP, LEFT_HIP, LEFT_SHOULDER),
    "elbow_l": (LEFT_SHOULDER, LEFT_ELBOW, LEFT_WRIST),
    "elbow_r": (RIGHT_SHOULDER, RIGHT_ELBOW, RIGHT_WRIST),
    "abduct_l": (LEFT_HIP, LEFT_SHOULDER, LEFT_ELBOW),
    "abduct_r": (RIGHT_HIP, RIGHT_SHOULDER, RIGHT_ELBOW),
}

_TORSO_KEYPOINTS = (LEFT_SHOULDER, RIGHT_SHOULDER, LEFT_HIP, RIGHT_HIP)


@dataclass(frozen=True)
class KinematicsConfig:
    kp_conf_min: float = 0.5
    impute_window: int = 5

    def __post_init__(self):
        if not (0.0 < self.kp_conf_min < 1.0):
            raise ValueError("kp_conf_min must be in (0, 1)")
        if self.impute_window < 0:
            raise ValueError("impute_window must be >= 0")


@dataclass(frozen=True)
class FeatureVector:
    """9 angle entries plus a per-entry validity mask.

    mask characters: 'v' computed from this frame, 'i' imputed from a recent
    frame of the same track, 'x' unavailable (value is NaN).
    """

    values: tuple[float, ...]
    mask: str

    def __post_init__(self):
        if len(self.values) != len(FEATURE_NAMES) or len(self.mask) != len(FEATURE_NAMES):
            raise ValueError("feature vector must have 9 values and a 9-char mask")

    def usable(self) -> bool:
        """True when every entry is valid or imputed."""
        return "x" not in self.mask


def joint_angle(a: Point, b: Point, c: Point) -> float:
    """Angle at b between rays b->a and b->c, in degrees in [0, 180].

    The cosine is clamped to [-1, 1]: near-collinear points can push the
    normalized dot product past unit magnitude by ~1e-16.
    """
    bax = a[0] - b[0]
    bay = a[1] - b[1]
    bcx = c[0] - b[0]
    bcy = c[1] - b[1]
    na = math.hypot(bax, bay)
    nc = math.hypot(bcx, bcy)
    if na == 0.0 or nc == 0.0:
        raise DegenerateGeometryError("angle undefined: coincident points")
    cos_t = (bax * bcx + bay * bcy) / (na * nc)
    if cos_t > 1.0:
        cos_t = 1.0
    elif cos_t < -1.0:
        cos_t = -1.0
    return math.degrees(math.acos(cos_t))


def _kp_ok(skel: Skeleton, idx: int, conf_min: float) -> bool:
    return skel.kpts[idx].conf >= conf_min


def _torso_value(skel: Skeleton) -> float:
    k = skel.kpts
    sm = ((k[LEFT_SHOULDER].x + k[RIGHT_SHOULDER].x) / 2.0,
          (k[LEFT_SHOULDER].y + k[RIGHT_SHOULDER].y) / 2.0)
    hm = ((k[LEFT_HIP].x + k[RIGHT_HIP].x) / 2.0,
          (k[LEFT_HIP].y + k[RIGHT_HIP].y) / 2.0)
    # image-up reference point: one unit above the hip midpoint (y grows down)
    return joint_angle(sm, hm, (hm[0], hm[1] - 1.0))


def _entry_raw(skel: Skeleton, name: str, conf_min: float) -> Optional[float]:
    """Entry value from this frame alone; None when keypoints are below the
    confidence floor. Raises DegenerateGeometryError on coincident points."""
    if name == "torso_incl":
        if not all(_kp_ok(skel, i, conf_min) for i in _TORSO_KEYPOINTS):
            return None
        return _torso_value(skel)
    a, b, c = _ANGLE_TRIPLES[name]
    if not (_kp_ok(skel, a, conf_min) and _kp_ok(skel, b, conf_min) and _kp_ok(skel, c, conf_min)):
        return None
    k = skel.kpts
    return joint_angle(k[a].point, k[b].point, k[c].point)


def torso_inclination(skel: Skeleton, kp_conf_min: float = 0.0) -> Optional[float]:
    """Torso tilt from image-vertical; None if a required keypoint is below
    the confidence floor."""
    return _entry_raw(skel, "torso_incl", kp_conf_min)


def quad_angles(skel: Skeleton, kp_conf_min: float = 0.0) -> tuple[Optional[float], ...]:
    """Interior angles of the shoulder-hip quadrilateral at (LS, RS, RH, LH)."""
    return tuple(_entry_raw(skel, n, kp_conf_min) for n in ("quad_ls", "quad_rs", "quad_rh", "quad_lh"))


def elbow_angles(skel: Skeleton, kp_conf_min: float = 0.0) -> tuple[Optional[float], Optional[float]]:
    return (_entry_raw(skel, "elbow_l", kp_conf_min), _entry_raw(skel, "elbow_r", kp_conf_min))


def abduction_angles(skel: Skeleton, kp_conf_min: float = 0.0) -> tuple[Optional[float], Optional[float]]:
    return (_entry_raw(skel, "abduct_l", kp_conf_min), _entry_raw(skel, "abduct_r", kp_conf_min))


def _impute(name: str, frame_idx: int, history: Sequence[tuple[int, Skeleton]],
            cfg: KinematicsConfig) -> Optional[float]:
    """Most recent computable value of the entry within the imputation window."""
    for past_idx, past_skel in reversed(history):
        if frame_idx - past_idx > cfg.impute_window:
            break
        try:
            v = _entry_raw(past_skel, name, cfg.kp_conf_min)
        except DegenerateGeometryError:
            continue
        if v is not None:
            return v
    return None


def extract_features(skel: Skeleton, frame_idx: int,
                     history: Sequence[tuple[int, Skeleton]] = (),
                     cfg: KinematicsConfig | None = None) -> FeatureVector:
    """All 9 entries for one skeleton.

    history holds (frame_idx, skeleton) pairs of the same track, oldest first;
    low-confidence entries are imputed from it. Failures never raise: they end
    up as 'x' in the mask.
    """
    cfg = cfg or KinematicsConfig()
    values: list[float] = []
    mask: list[str] = []
    for name in FEATURE_NAMES:
        try:
            v = _entry_raw(skel, name, cfg.kp_conf_min)
        except DegenerateGeometryError:
            # confident but geometrically degenerate: invalid, not imputable
            values.append(math.nan)
            mask.append("x")
            continue
        if v is not None:
            values.append(v)
            mask.append("v")
            continue
        v = _impute(name, frame_idx, history, cfg)
        if v is not None:
            values.append(v)
            mask.append("i")
        else:
            values.append(math.nan)
            mask.append("x")
    return FeatureVector(tuple(values), "".join(mask))
