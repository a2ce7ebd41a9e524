import math

import pytest
from hypothesis import settings

from pushdetect.skeleton import Keypoint, Skeleton

settings.register_profile("ci", deadline=None, derandomize=True)
settings.load_profile("ci")


def skeleton_from_points(points, conf=1.0, confs=None, bbox=None, tid=None):
    """Skeleton from 17 (x, y) points; bbox fitted to the points by default."""
    if confs is None:
        confs = [conf] * 17
    kpts = tuple(Keypoint(float(x), float(y), float(c)) for (x, y), c in zip(points, confs))
    if bbox is None:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        bbox = (min(xs) - 1.0, min(ys) - 1.0, (max(xs) - min(xs)) + 2.0, (max(ys) - min(ys)) + 2.0)
    return Skeleton(kpts=kpts, bbox=bbox, det_conf=0.95, tid=tid)


def upright_points(hip=(100.0, 400.0), h=300.0):
    """Idealized upright person, arms hanging straight down. y grows downward."""
    hx, hy = hip
    sm = (hx, hy - 0.30 * h)
    nose = (sm[0], sm[1] - 0.12 * h)
    ls = (sm[0] + 0.11 * h, sm[1])
    rs = (sm[0] - 0.11 * h, sm[1])
    le = (ls[0], ls[1] + 0.16 * h)
    re = (rs[0], rs[1] + 0.16 * h)
    lw = (le[0], le[1] + 0.15 * h)
    rw = (re[0], re[1] + 0.15 * h)
    lh = (hx + 0.08 * h, hy)
    rh = (hx - 0.08 * h, hy)
    lk = (lh[0], lh[1] + 0.24 * h)
    rk = (rh[0], rh[1] + 0.24 * h)
    la = (lk[0], lk[1] + 0.24 * h)
    ra = (rk[0], rk[1] + 0.24 * h)
    leye = (nose[0] + 0.03 * h, nose[1] - 0.02 * h)
    reye = (nose[0] - 0.03 * h, nose[1] - 0.02 * h)
    lear = (nose[0] + 0.055 * h, nose[1])
    rear = (nose[0] - 0.055 * h, nose[1])
    return [nose, leye, reye, lear, rear, ls, rs, le, re, lw, rw, lh, rh, lk, rk, la, ra]


def atan2_angle(a, b, c):
    """Independent angle oracle: atan2 of cross and dot products."""
    bax, bay = a[0] - b[0], a[1] - b[1]
    bcx, bcy = c[0] - b[0], c[1] - b[1]
    return abs(math.degrees(math.atan2(bax * bcy - bay * bcx, bax * bcx + bay * bcy)))


@pytest.fixture
def upright_skeleton():
    return skeleton_from_points(upright_points())
