"""Parametric two-actor skeleton clip generator with ground-truth kinematics.

Actors are stick figures built from rigid segments (fixed fractions of the
actor's height), animated per frame and emitted through the normal wire
format. The generator also records the true angle values of every frame,
computed from the clean (pre-noise) points with an arctangent formulation,
which makes it an independent oracle for the feature extractor.

Scenario shapes:

  normal  two actors walk past each other in vertically separated lanes
          (their boxes never overlap), with bounded gait sway: torso tilt
          stays under 8 degrees and arm abduction under 30.
  push    actor A approaches an idle actor B, extends both arms toward
          horizontal (abduction ramping into 85..95 with near-straight
          elbows) while B's torso tilts away into 20..30 degrees and B
          accelerates away, then the actors separate.

All animation ranges are this generator's construction, chosen to keep the
push signature and normal motion disjoint by a controllable margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .skeleton import ClipRecord, FrameDetections, Keypoint, Label, Skeleton, canon_float

Point = tuple[float, float]

FRAME_MS = 33  # ~30 fps

# body proportions as fractions of actor height
_TORSO = 0.30
_SHOULDER_HALF = 0.11
_HIP_HALF = 0.08
_UPPER_ARM = 0.16
_FOREARM = 0.15
_THIGH = 0.24
_SHIN = 0.24
_HEAD = 0.12
_EYE_DX = 0.03
_EYE_UP = 0.02
_EAR_DX = 0.055
_PAD = 0.02


@dataclass(frozen=True)
class ScenarioParams:
    scenario: Label
    seed: int
    n_frames: int = 60
    resolution: tuple[int, int] = (848, 848)
    noise_px: float = 1.0
    dropout_p: float = 0.02
    scale: float = 300.0

    def __post_init__(self):
        if self.n_frames < 2:
            raise ValueError("n_frames must be >= 2")
        if self.noise_px < 0:
            raise ValueError("noise_px must be >= 0")
        if not (0.0 <= self.dropout_p < 1.0):
            raise ValueError("dropout_p must be in [0, 1)")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class GroundTruth:
    """Per-frame true angles per actor, plus the push contact interval.

    angles[actor][frame] follows the feature order (quad_ls, quad_rs,
    quad_rh, quad_lh, torso_incl, elbow_l, elbow_r, abduct_l, abduct_r).
    contact is an inclusive frame interval, None for normal clips.
    """

    contact: tuple[int, int] | None
    angles: tuple[tuple[tuple[float, ...], ...], ...]


@dataclass(frozen=True)
class _ActorFrame:
    hip: Point
    height: float
    tilt: float      # degrees from vertical
    lean: float      # +1 leans toward +x, -1 toward -x
    abd_l: float
    abd_r: float
    elb_l: float
    elb_r: float
    gait: float      # leg swing degrees


def _rot(v: Point, deg: float) -> Point:
    r = math.radians(deg)
    c, s = math.cos(r), math.sin(r)
    return (v[0] * c - v[1] * s, v[0] * s + v[1] * c)


def _pose_points(a: _ActorFrame) -> list[Point]:
    h = a.height
    u = (math.sin(math.radians(a.tilt)) * a.lean, -math.cos(math.radians(a.tilt)))
    p = (-u[1], u[0])  # image-right when upright
    d = (-u[0], -u[1])  # torso-down

    hip = a.hip
    sm = (hip[0] + _TORSO * h * u[0], hip[1] + _TORSO * h * u[1])
    ls = (sm[0] + _SHOULDER_HALF * h * p[0], sm[1] + _SHOULDER_HALF * h * p[1])
    rs = (sm[0] - _SHOULDER_HALF * h * p[0], sm[1] - _SHOULDER_HALF * h * p[1])
    lh = (hip[0] + _HIP_HALF * h * p[0], hip[1] + _HIP_HALF * h * p[1])
    rh = (hip[0] - _HIP_HALF * h * p[0], hip[1] - _HIP_HALF * h * p[1])

    dl = _rot(d, -a.abd_l)
    dr = _rot(d, a.abd_r)
    le = (ls[0] + _UPPER_ARM * h * dl[0], ls[1] + _UPPER_ARM * h * dl[1])
    re = (rs[0] + _UPPER_ARM * h * dr[0], rs[1] + _UPPER_ARM * h * dr[1])
    fl = _rot(dl, -(180.0 - a.elb_l))
    fr = _rot(dr, 180.0 - a.elb_r)
    lw = (le[0] + _FOREARM * h * fl[0], le[1] + _FOREARM * h * fl[1])
    rw = (re[0] + _FOREARM * h * fr[0], re[1] + _FOREARM * h * fr[1])

    w = (0.0, 1.0)
    tl = _rot(w, -a.gait)
    tr = _rot(w, a.gait)
    lk = (lh[0] + _THIGH * h * tl[0], lh[1] + _THIGH * h * tl[1])
    rk = (rh[0] + _THIGH * h * tr[0], rh[1] + _THIGH * h * tr[1])
    la = (lk[0] + _SHIN * h * tl[0], lk[1] + _SHIN * h * tl[1])
    ra = (rk[0] + _SHIN * h * tr[0], rk[1] + _SHIN * h * tr[1])

    nose = (sm[0] + _HEAD * h * u[0], sm[1] + _HEAD * h * u[1])
    leye = (nose[0] + _EYE_DX * h * p[0] + _EYE_UP * h * u[0],
            nose[1] + _EYE_DX * h * p[1] + _EYE_UP * h * u[1])
    reye = (nose[0] - _EYE_DX * h * p[0] + _EYE_UP * h * u[0],
            nose[1] - _EYE_DX * h * p[1] + _EYE_UP * h * u[1])
    lear = (nose[0] + _EAR_DX * h * p[0], nose[1] + _EAR_DX * h * p[1])
    rear = (nose[0] - _EAR_DX * h * p[0], nose[1] - _EAR_DX * h * p[1])

    return [nose, leye, reye, lear, rear, ls, rs, le, re, lw, rw, lh, rh, lk, rk, la, ra]


def _atan2_angle(a: Point, b: Point, c: Point) -> float:
    """Angle at b via atan2 of cross and dot products (oracle path)."""
    bax, bay = a[0] - b[0], a[1] - b[1]
    bcx, bcy = c[0] - b[0], c[1] - b[1]
    cross = bax * bcy - bay * bcx
    dot = bax * bcx + bay * bcy
    return abs(math.degrees(math.atan2(cross, dot)))


def clean_feature_angles(points: list[Point]) -> tuple[float, ...]:
    """The 9 feature entries from exact points, computed with atan2."""
    ls, rs, le, re, lw, rw, lh, rh = (points[i] for i in (5, 6, 7, 8, 9, 10, 11, 12))
    sm = ((ls[0] + rs[0]) / 2.0, (ls[1] + rs[1]) / 2.0)
    hm = ((lh[0] + rh[0]) / 2.0, (lh[1] + rh[1]) / 2.0)
    return (
        _atan2_angle(rs, ls, lh),
        _atan2_angle(ls, rs, rh),
        _atan2_angle(rs, rh, lh),
        _atan2_angle(rh, lh, ls),
        _atan2_angle(sm, hm, (hm[0], hm[1] - 1.0)),
        _atan2_angle(ls, le, lw),
        _atan2_angle(rs, re, rw),
        _atan2_angle(lh, ls, le),
        _atan2_angle(rh, rs, re),
    )


def _fold(x: float, lo: float, hi: float) -> float:
    span = hi - lo
    t = (x - lo) % (2.0 * span)
    return lo + (t if t <= span else 2.0 * span - t)


def _smooth(u: float) -> float:
    u = min(1.0, max(0.0, u))
    return u * u * (3.0 - 2.0 * u)


@dataclass(frozen=True)
class _Gait:
    period: float
    phase: float
    abd_base: float
    abd_amp: float
    elb_base: float
    elb_amp: float
    tilt_base: float
    tilt_amp: float
    tilt_phase: float
    leg_amp: float


def _draw_gait(rng: np.random.Generator) -> _Gait:
    return _Gait(
        period=rng.uniform(18.0, 26.0),
        phase=rng.uniform(0.0, 2.0 * math.pi),
        abd_base=rng.uniform(14.0, 18.0),
        abd_amp=rng.uniform(4.0, 6.0),
        elb_base=rng.uniform(158.0, 166.0),
        elb_amp=rng.uniform(6.0, 10.0),
        tilt_base=rng.uniform(1.5, 3.5),
        tilt_amp=rng.uniform(1.0, 2.5),
        tilt_phase=rng.uniform(0.0, 2.0 * math.pi),
        leg_amp=rng.uniform(8.0, 14.0),
    )


def _gait_state(g: _Gait, t: int) -> dict:
    w = 2.0 * math.pi / g.period
    return {
        "abd_l": g.abd_base + g.abd_amp * math.sin(w * t + g.phase),
        "abd_r": g.abd_base + g.abd_amp * math.sin(w * t + g.phase + math.pi),
        "elb_l": g.elb_base + g.elb_amp * math.sin(w * t + g.phase + 0.7),
        "elb_r": g.elb_base + g.elb_amp * math.sin(w * t + g.phase + 0.7 + math.pi),
        "tilt": g.tilt_base + g.tilt_amp * math.sin(0.5 * w * t + g.tilt_phase),
        "gait": g.leg_amp * math.sin(w * t + g.phase),
    }


@dataclass(frozen=True)
class _Idle:
    abd: float
    wobble: float
    elb: float
    tilt: float
    phase: float


def _draw_idle(rng: np.random.Generator) -> _Idle:
    return _Idle(
        abd=rng.uniform(3.0, 5.5),
        wobble=rng.uniform(0.5, 1.2),
        elb=rng.uniform(166.0, 174.0),
        tilt=rng.uniform(0.5, 1.8),
        phase=rng.uniform(0.0, 2.0 * math.pi),
    )


def _idle_state(s: _Idle, t: int) -> dict:
    w = 0.22
    return {
        "abd_l": s.abd + s.wobble * math.sin(w * t + s.phase),
        "abd_r": s.abd + s.wobble * math.sin(w * t + s.phase + 1.3),
        "elb_l": s.elb + 2.0 * math.sin(w * t + s.phase + 0.4),
        "elb_r": s.elb + 2.0 * math.sin(w * t + s.phase + 2.1),
        "tilt": s.tilt + 0.5 * math.sin(0.5 * w * t + s.phase),
        "gait": 1.5 * math.sin(w * t + s.phase),
    }


def _blend(a: dict, b: dict, u: float) -> dict:
    e = _smooth(u)
    return {k: a[k] * (1.0 - e) + b[k] * e for k in a}


def _normal_frames(rng: np.random.Generator, params: ScenarioParams,
                   heights: tuple[float, float]) -> tuple[list[list[_ActorFrame]], None]:
    W, H = params.resolution
    n = params.n_frames
    s = params.scale
    # lanes far enough apart that boxes never overlap, even under jitter
    gap = 1.02 * 1.05 * s + 8.0 * max(params.noise_px, 1.0) + 24.0
    y0 = H / 2.0 - gap / 2.0 + rng.uniform(-6.0, 6.0)
    y1 = H / 2.0 + gap / 2.0 + rng.uniform(-6.0, 6.0)
    speeds = (s * rng.uniform(0.016, 0.024), s * rng.uniform(0.016, 0.024))
    t_cross = n * rng.uniform(0.45, 0.55)
    x_cross = W * rng.uniform(0.42, 0.58)
    gaits = (_draw_gait(rng), _draw_gait(rng))

    lo, hi = 0.07 * W, 0.93 * W
    frames: list[list[_ActorFrame]] = []
    for t in range(n):
        actors = []
        for i, (hip_y, v, direction) in enumerate(((y0, speeds[0], 1.0), (y1, speeds[1], -1.0))):
            x = _fold(x_cross + direction * v * (t - t_cross), lo, hi)
            st = _gait_state(gaits[i], t)
            actors.append(_ActorFrame(
                hip=(x, hip_y), height=heights[i],
                tilt=st["tilt"], lean=direction,
                abd_l=st["abd_l"], abd_r=st["abd_r"],
                elb_l=st["elb_l"], elb_r=st["elb_r"], gait=st["gait"],
            ))
        frames.append(actors)
    return frames, None


def _push_frames(rng: np.random.Generator, params: ScenarioParams,
                 heights: tuple[float, float]) -> tuple[list[list[_ActorFrame]], tuple[int, int] | None]:
    W, H = params.resolution
    n = params.n_frames
    s = params.scale

    hip_y = H * rng.uniform(0.52, 0.58)
    y_a = hip_y + rng.uniform(-6.0, 6.0)
    y_b = hip_y + rng.uniform(-6.0, 6.0)
    b_x0 = W * rng.uniform(0.60, 0.68)
    contact_gap = 0.36 * s * rng.uniform(0.95, 1.05)
    gate_est = 1.5 * 0.96 * max(heights)
    a_x0 = max(b_x0 - gate_est * rng.uniform(1.02, 1.10), 0.04 * W + 0.25 * s)
    v_push = s * rng.uniform(0.045, 0.06)

    gait_a = _draw_gait(rng)
    idle_a = _draw_idle(rng)
    idle_b = _draw_idle(rng)
    pre_target = rng.uniform(45.0, 55.0)
    abd_hold = rng.uniform(87.0, 93.0)
    elb_hold = rng.uniform(166.0, 177.0)
    tilt_hold = rng.uniform(22.0, 28.0)
    tilt_residual = rng.uniform(4.0, 8.0)
    hold_phase = rng.uniform(0.0, 2.0 * math.pi)

    approach_end = max(1, round(n * 0.40))
    ramp = max(2, round(n * 0.05))
    hold_start = min(approach_end + ramp, n)
    hold_end = min(max(hold_start, round(n * 0.72)), n)  # exclusive
    release = max(2, round(n * 0.05))
    pre_start = max(0, round(approach_end * 0.70))

    v_a = (b_x0 - contact_gap - a_x0) / max(1, approach_end)
    contact = (hold_start, hold_end - 1) if hold_end > hold_start else None

    frames: list[list[_ActorFrame]] = []
    b_x = b_x0
    b_v = 0.0
    for t in range(n):
        # actor A: walk, extend, hold, release
        a_x = min(a_x0 + v_a * t, b_x0 - contact_gap)
        ga = _gait_state(gait_a, t)
        ia = _idle_state(idle_a, t)
        hold_a = {
            "abd_l": abd_hold + 1.5 * math.sin(0.9 * t + hold_phase),
            "abd_r": abd_hold + 1.5 * math.sin(0.9 * t + hold_phase + 0.8),
            "elb_l": elb_hold + 2.0 * math.sin(0.7 * t + hold_phase),
            "elb_r": elb_hold + 2.0 * math.sin(0.7 * t + hold_phase + 1.1),
            "tilt": 4.0 + 1.5 * math.sin(0.3 * t + hold_phase),
            "gait": 2.0 * math.sin(0.5 * t + hold_phase),
        }
        pre_a = dict(ga)
        pre_a["abd_l"] = pre_target
        pre_a["abd_r"] = pre_target
        pre_a["elb_l"] = elb_hold
        pre_a["elb_r"] = elb_hold
        if t < pre_start:
            st_a = ga
        elif t < approach_end:
            st_a = _blend(ga, pre_a, (t - pre_start) / max(1, approach_end - pre_start))
        elif t < hold_start:
            st_a = _blend(pre_a, hold_a, (t - approach_end) / max(1, hold_start - approach_end))
        elif t < hold_end:
            st_a = hold_a
        elif t < hold_end + release:
            st_a = _blend(hold_a, ia, (t - hold_end) / release)
        else:
            st_a = ia

        # actor B: idle, tilted away and shoved during contact, drifting after
        ib = _idle_state(idle_b, t)
        pushed_b = dict(ib)
        pushed_b["tilt"] = tilt_hold + 1.0 * math.sin(0.4 * t + hold_phase)
        settled_b = dict(ib)
        settled_b["tilt"] = tilt_residual
        if t < approach_end:
            st_b = ib
        elif t < hold_start:
            st_b = _blend(ib, pushed_b, (t - approach_end) / max(1, hold_start - approach_end))
        elif t < hold_end:
            st_b = pushed_b
        elif t < hold_end + release:
            st_b = _blend(pushed_b, settled_b, (t - hold_end) / release)
        else:
            st_b = _blend(settled_b, ib, min(1.0, (t - hold_end - release) / max(1, n - hold_end - release)))

        if approach_end <= t < hold_end:
            b_v = v_push * min(1.0, (t - approach_end + 1) / max(1, hold_end - approach_end))
        elif t >= hold_end:
            b_v *= 0.88
        b_x = min(b_x + b_v, 0.94 * W)

        frames.append([
            _ActorFrame(hip=(a_x, y_a), height=heights[0],
                        tilt=st_a["tilt"], lean=1.0,
                        abd_l=st_a["abd_l"], abd_r=st_a["abd_r"],
                        elb_l=st_a["elb_l"], elb_r=st_a["elb_r"], gait=st_a["gait"]),
            _ActorFrame(hip=(b_x, y_b), height=heights[1],
                        tilt=st_b["tilt"], lean=1.0,
                        abd_l=st_b["abd_l"], abd_r=st_b["abd_r"],
                        elb_l=st_b["elb_l"], elb_r=st_b["elb_r"], gait=st_b["gait"]),
        ])
    return frames, contact


def gen_clip(params: ScenarioParams, clip_id: str | None = None) -> tuple[ClipRecord, GroundTruth]:
    """Generate one labeled clip plus its ground truth. Pure in params."""
    rng = np.random.default_rng(params.seed)
    W, H = params.resolution
    if clip_id is None:
        clip_id = f"{params.scenario.to_wire()}_s{params.seed}"

    flip = bool(rng.random() < 0.5)
    heights = (params.scale * rng.uniform(0.95, 1.05), params.scale * rng.uniform(0.95, 1.05))
    if params.scenario is Label.PUSH:
        actor_frames, contact = _push_frames(rng, params, heights)
    else:
        actor_frames, contact = _normal_frames(rng, params, heights)

    gt_angles: list[list[tuple[float, ...]]] = [[], []]
    frames: list[FrameDetections] = []
    for t, actors in enumerate(actor_frames):
        persons = []
        for i, actor in enumerate(actors):
            points = _pose_points(actor)
            if flip:
                points = [(W - x, y) for x, y in points]
            gt_angles[i].append(clean_feature_angles(points))

            noise = rng.normal(0.0, 1.0, size=(17, 2)) * params.noise_px
            dropped = rng.random(17) < params.dropout_p
            conf_u = rng.random(17)
            det_conf = rng.uniform(0.88, 0.99)

            kpts = []
            xs, ys = [], []
            for j, (x, y) in enumerate(points):
                nx = x + noise[j, 0]
                ny = y + noise[j, 1]
                conf = 0.05 + conf_u[j] * 0.40 if dropped[j] else 0.55 + conf_u[j] * 0.44
                kpts.append(Keypoint(canon_float(nx), canon_float(ny), canon_float(conf)))
                xs.append(nx)
                ys.append(ny)
            pad = _PAD * actor.height
            bx, by = min(xs) - pad, min(ys) - pad
            bw, bh = (max(xs) - min(xs)) + 2 * pad, (max(ys) - min(ys)) + 2 * pad
            persons.append(Skeleton(
                kpts=tuple(kpts),
                bbox=(canon_float(bx), canon_float(by), canon_float(bw), canon_float(bh)),
                det_conf=canon_float(det_conf),
            ))
        frames.append(FrameDetections(frame_idx=t, ts_ms=t * FRAME_MS, persons=tuple(persons)))

    clip = ClipRecord(
        clip_id=clip_id,
        label=params.scenario,
        resolution=params.resolution,
        frames=tuple(frames),
    )
    truth = GroundTruth(
        contact=contact,
        angles=(tuple(gt_angles[0]), tuple(gt_angles[1])),
    )
    return clip, truth


def gen_corpus(n_push: int, n_normal: int, base_seed: int,
               template: ScenarioParams | None = None) -> list[ClipRecord]:
    """Deterministic corpus: push clips first, seeds base_seed + i overall."""
    if n_push < 0 or n_normal < 0:
        raise ValueError("counts must be >= 0")
    template = template or ScenarioParams(scenario=Label.PUSH, seed=0)
    clips = []
    for i in range(n_push):
        p = replace(template, scenario=Label.PUSH, seed=base_seed + i)
        clips.append(gen_clip(p, clip_id=f"push_{i:03d}")[0])
    for j in range(n_normal):
        p = replace(template, scenario=Label.NORMAL, seed=base_seed + n_push + j)
        clips.append(gen_clip(p, clip_id=f"normal_{j:03d}")[0])
    return clips
