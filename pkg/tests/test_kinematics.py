import math

import numpy as np
import pytest

from pushdetect.errors import DegenerateGeometryError
from pushdetect.kinematics import (
    FEATURE_NAMES,
    KinematicsConfig,
    extract_features,
    joint_angle,
    quad_angles,
    torso_inclination,
)
from pushdetect.skeleton import LEFT_SHOULDER

from conftest import atan2_angle, skeleton_from_points, upright_points


def test_joint_angle_perpendicular():
    assert joint_angle((1, 0), (0, 0), (0, 1)) == pytest.approx(90.0, abs=1e-12)


def test_joint_angle_collinear_opposite():
    assert joint_angle((1, 0), (0, 0), (-1, 0)) == pytest.approx(180.0, abs=1e-12)


def test_joint_angle_analytic_45():
    assert joint_angle((2, 0), (0, 0), (1, 1)) == pytest.approx(45.0, abs=1e-12)


def test_joint_angle_degenerate_raises():
    with pytest.raises(DegenerateGeometryError):
        joint_angle((0, 0), (0, 0), (1, 1))
    with pytest.raises(DegenerateGeometryError):
        joint_angle((1, 1), (0, 0), (0, 0))


def test_joint_angle_clamps_near_collinear():
    # same direction, lengths that provoke cos > 1 by float drift
    a = (0.1 + 0.2, 0.3)
    c = (3 * (0.1 + 0.2), 0.9)
    v = joint_angle(a, (0.0, 0.0), c)
    assert v == pytest.approx(0.0, abs=1e-6)
    assert not math.isnan(v)


def test_joint_angle_matches_atan2_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5000):
        pts = rng.uniform(-1000.0, 1000.0, size=(3, 2))
        a, b, c = map(tuple, pts)
        if math.dist(a, b) < 1e-6 or math.dist(c, b) < 1e-6:
            continue
        worst = max(worst, abs(joint_angle(a, b, c) - atan2_angle(a, b, c)))
    assert worst < 1e-9


def _skel_with(ls, rs, lh, rh):
    pts = upright_points()
    pts[5], pts[6], pts[11], pts[12] = ls, rs, lh, rh
    return skeleton_from_points(pts)


def test_torso_upright():
    s = _skel_with(ls=(1, 0), rs=(-1, 0), lh=(1, 10), rh=(-1, 10))
    assert torso_inclination(s) == pytest.approx(0.0, abs=1e-12)


def test_torso_horizontal():
    s = _skel_with(ls=(10, 9), rs=(10, 11), lh=(0, 9), rh=(0, 11))
    assert torso_inclination(s) == pytest.approx(90.0, abs=1e-12)


def test_torso_analytic_45():
    s = _skel_with(ls=(5, 4), rs=(5, 6), lh=(0, 9), rh=(0, 11))
    assert torso_inclination(s) == pytest.approx(45.0, abs=1e-12)


def test_torso_low_confidence_is_none():
    pts = upright_points()
    confs = [1.0] * 17
    confs[LEFT_SHOULDER] = 0.1
    s = skeleton_from_points(pts, confs=confs)
    assert torso_inclination(s, kp_conf_min=0.5) is None


def test_torso_degenerate_midpoints():
    s = _skel_with(ls=(0, 0), rs=(2, 0), lh=(0, 0), rh=(2, 0))
    with pytest.raises(DegenerateGeometryError):
        torso_inclination(s)


def test_quad_unit_square():
    s = _skel_with(ls=(0, 0), rs=(1, 0), rh=(1, 1), lh=(0, 1))
    assert quad_angles(s) == pytest.approx((90.0,) * 4, abs=1e-9)


def test_quad_parallelogram_law():
    s = _skel_with(ls=(0, 0), rs=(2, 0), rh=(3, 1), lh=(1, 1))
    q_ls, q_rs, q_rh, q_lh = quad_angles(s)
    assert q_ls == pytest.approx(q_rh, abs=1e-9)
    assert q_rs == pytest.approx(q_lh, abs=1e-9)
    assert q_ls + q_rs == pytest.approx(180.0, abs=1e-9)
    assert q_ls == pytest.approx(45.0, abs=1e-9)


def test_quad_matches_atan2_oracle():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(2000):
        ls, rs, rh, lh = (tuple(p) for p in rng.uniform(-500, 500, size=(4, 2)))
        s = _skel_with(ls=ls, rs=rs, lh=lh, rh=rh)
        got = quad_angles(s)
        want = (
            atan2_angle(rs, ls, lh),
            atan2_angle(ls, rs, rh),
            atan2_angle(rs, rh, lh),
            atan2_angle(rh, lh, ls),
        )
        for g, w in zip(got, want):
            assert abs(g - w) < 1e-9
        checked += 1
    assert checked == 2000


def test_extract_features_upright(upright_skeleton):
    fv = extract_features(upright_skeleton, frame_idx=0)
    assert fv.mask == "v" * 9
    by_name = dict(zip(FEATURE_NAMES, fv.values))
    assert by_name["torso_incl"] == pytest.approx(0.0, abs=1e-9)
    assert by_name["elbow_l"] == pytest.approx(180.0, abs=1e-9)
    assert by_name["elbow_r"] == pytest.approx(180.0, abs=1e-9)
    assert 0.0 <= by_name["abduct_l"] <= 20.0
    assert 0.0 <= by_name["abduct_r"] <= 20.0
    assert all(0.0 <= v <= 180.0 for v in fv.values)


def test_all_dropped_no_history_all_invalid():
    s = skeleton_from_points(upright_points(), conf=0.0)
    fv = extract_features(s, frame_idx=0)
    assert fv.mask == "x" * 9
    assert all(math.isnan(v) for v in fv.values)


def test_imputation_copies_last_valid_value():
    good = skeleton_from_points(upright_points())
    confs = [1.0] * 17
    confs[LEFT_SHOULDER] = 0.0
    bad = skeleton_from_points(upright_points(), confs=confs)
    ref = extract_features(good, frame_idx=0)
    fv = extract_features(bad, frame_idx=1, history=[(0, good)])
    affected = [i for i, n in enumerate(FEATURE_NAMES)
                if n in ("quad_ls", "quad_rs", "quad_lh", "torso_incl", "elbow_l", "abduct_l")]
    for i in range(9):
        if i in affected:
            assert fv.mask[i] == "i"
            assert fv.values[i] == ref.values[i]
        else:
            assert fv.mask[i] == "v"


def test_imputation_respects_window():
    good = skeleton_from_points(upright_points())
    bad = skeleton_from_points(upright_points(), conf=0.0)
    cfg = KinematicsConfig(impute_window=3)
    fv = extract_features(bad, frame_idx=10, history=[(6, good)], cfg=cfg)
    assert fv.mask == "x" * 9
    fv = extract_features(bad, frame_idx=10, history=[(7, good)], cfg=cfg)
    assert fv.mask == "i" * 9


def test_imputation_window_zero_disables():
    good = skeleton_from_points(upright_points())
    bad = skeleton_from_points(upright_points(), conf=0.0)
    cfg = KinematicsConfig(impute_window=0)
    fv = extract_features(bad, frame_idx=1, history=[(0, good)], cfg=cfg)
    assert fv.mask == "x" * 9


def _transform(points, scale=1.0, dx=0.0, dy=0.0, rot_deg=0.0):
    r = math.radians(rot_deg)
    c, s = math.cos(r), math.sin(r)
    out = []
    for x, y in points:
        xr = x * c - y * s
        yr = x * s + y * c
        out.append((xr * scale + dx, yr * scale + dy))
    return out


def test_similarity_invariance():
    rng = np.random.default_rng(23)
    base = upright_points()
    for _ in range(50):
        scale = rng.uniform(0.2, 5.0)
        dx, dy = rng.uniform(-500, 500, size=2)
        rot = rng.uniform(-180.0, 180.0)
        f0 = extract_features(skeleton_from_points(base), frame_idx=0)
        f1 = extract_features(
            skeleton_from_points(_transform(base, scale, dx, dy, rot)), frame_idx=0)
        for name, v0, v1 in zip(FEATURE_NAMES, f0.values, f1.values):
            if name == "torso_incl":
                shifted = abs(((v0 + rot) + 180.0) % 360.0 - 180.0)
                shifted_neg = abs(((v0 - rot) + 180.0) % 360.0 - 180.0)
                assert min(abs(v1 - shifted), abs(v1 - shifted_neg)) < 1e-6
            else:
                assert v1 == pytest.approx(v0, abs=1e-6)


_MIRROR_SWAP = {5: 6, 6: 5, 7: 8, 8: 7, 9: 10, 10: 9, 11: 12, 12: 11,
                13: 14, 14: 13, 15: 16, 16: 15, 1: 2, 2: 1, 3: 4, 4: 3, 0: 0}


def test_mirror_symmetry():
    rng = np.random.default_rng(31)
    pts = [tuple(p) for p in rng.uniform(0, 500, size=(17, 2))]
    mirrored = [None] * 17
    for i, j in _MIRROR_SWAP.items():
        x, y = pts[j]
        mirrored[i] = (-x, y)
    f0 = extract_features(skeleton_from_points(pts), frame_idx=0)
    f1 = extract_features(skeleton_from_points(mirrored), frame_idx=0)
    a = dict(zip(FEATURE_NAMES, f0.values))
    b = dict(zip(FEATURE_NAMES, f1.values))
    swaps = [("quad_ls", "quad_rs"), ("quad_lh", "quad_rh"),
             ("elbow_l", "elbow_r"), ("abduct_l", "abduct_r")]
    for left, right in swaps:
        assert b[left] == pytest.approx(a[right], abs=1e-9)
        assert b[right] == pytest.approx(a[left], abs=1e-9)
    assert b["torso_incl"] == pytest.approx(a["torso_incl"], abs=1e-9)


def test_feature_range_on_random_skeletons():
    rng = np.random.default_rng(37)
    for _ in range(200):
        pts = [tuple(p) for p in rng.uniform(0, 1000, size=(17, 2))]
        fv = extract_features(skeleton_from_points(pts), frame_idx=0)
        for v, m in zip(fv.values, fv.mask):
            if m != "x":
                assert 0.0 <= v <= 180.0
