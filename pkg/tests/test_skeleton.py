import json

import pytest
from hypothesis import given, strategies as st

from pushdetect.errors import ClipFormatError, SequencingError
from pushdetect.skeleton import (
    ClipRecord,
    FrameDetections,
    Keypoint,
    Label,
    Skeleton,
    canon_float,
    parse_clip,
    serialize_clip,
)

from conftest import skeleton_from_points, upright_points


def _line(persons="[]", clip_id="c001", label="null", frame=0, ts=0):
    return (f'{{"clip_id": "{clip_id}", "label": {label}, "res": [848, 848], '
            f'"frame": {frame}, "ts_ms": {ts}, "persons": {persons}}}')


def _person_json(n_kpts=17, conf=1.0):
    kpts = ", ".join(f"[{10 + i}.5, {20 + i}.25, {conf}]" for i in range(n_kpts))
    return f'{{"bbox": [5.0, 6.0, 50.0, 120.0], "conf": 0.97, "kpts": [{kpts}]}}'


def test_single_line_no_persons():
    clip = parse_clip(_line())
    assert len(clip.frames) == 1
    assert clip.frames[0].persons == ()
    assert clip.label is None
    assert clip.resolution == (848, 848)


def test_empty_frame_clip_serializes_to_single_line():
    clip = parse_clip(_line())
    data = serialize_clip(clip)
    assert data.count(b"\n") == 1
    assert data.endswith(b"\n")


def test_round_trip_bit_exact_full_confidence():
    clip = parse_clip(_line(persons=f"[{_person_json()}]", label='"push"'))
    again = parse_clip(serialize_clip(clip))
    assert again == clip
    assert again.frames[0].persons[0].kpts[0].conf == 1.0


def test_sixteen_keypoints_is_schema_error_naming_kpts():
    with pytest.raises(ClipFormatError) as err:
        parse_clip(_line(persons=f"[{_person_json(n_kpts=16)}]"))
    assert "kpts" in str(err.value)
    assert "line 1" in str(err.value)


def test_error_carries_line_number():
    good = _line(frame=0)
    bad = _line(persons=f"[{_person_json(n_kpts=3)}]", frame=1, ts=33)
    with pytest.raises(ClipFormatError) as err:
        parse_clip(good + "\n" + bad)
    assert err.value.line == 2


def test_non_monotone_frame_idx_is_sequencing_error():
    with pytest.raises(SequencingError):
        parse_clip(_line(frame=1, ts=0) + "\n" + _line(frame=1, ts=33))
    with pytest.raises(SequencingError):
        parse_clip(_line(frame=2, ts=0) + "\n" + _line(frame=1, ts=33))


def test_decreasing_ts_is_sequencing_error():
    with pytest.raises(SequencingError):
        parse_clip(_line(frame=0, ts=66) + "\n" + _line(frame=1, ts=33))


def test_conf_out_of_range_rejected():
    with pytest.raises(ClipFormatError):
        parse_clip(_line(persons=f"[{_person_json(conf=1.5)}]"))
    with pytest.raises(ValueError):
        Keypoint(0.0, 0.0, -0.1)


def test_nonfinite_coordinate_rejected():
    with pytest.raises(ClipFormatError):
        parse_clip(_line(persons='[{"bbox": [0, 0, 1, 1], "conf": 0.5, "kpts": '
                         + json.dumps([[None, 0, 1]] + [[0, 0, 1]] * 16) + "}]"))


def test_unknown_field_rejected():
    with pytest.raises(ClipFormatError) as err:
        parse_clip('{"clip_id": "c", "label": null, "res": [8, 8], "frame": 0, '
                   '"ts_ms": 0, "persons": [], "extra": 1}')
    assert "extra" in str(err.value)


def test_missing_field_rejected():
    with pytest.raises(ClipFormatError) as err:
        parse_clip('{"clip_id": "c", "res": [8, 8], "frame": 0, "ts_ms": 0, "persons": []}')
    assert "label" in str(err.value)


def test_bad_json_reports_line():
    with pytest.raises(ClipFormatError) as err:
        parse_clip(_line() + "\n" + "{not json")
    assert err.value.line == 2


def test_clip_id_change_mid_stream_rejected():
    with pytest.raises(ClipFormatError):
        parse_clip(_line(clip_id="a") + "\n" + _line(clip_id="b", frame=1, ts=33))


def test_label_wire_values():
    assert parse_clip(_line(label='"push"')).label is Label.PUSH
    assert parse_clip(_line(label='"normal"')).label is Label.NORMAL
    assert parse_clip(_line(label="null")).label is None
    with pytest.raises(ClipFormatError):
        parse_clip(_line(label='"shove"'))


def test_tid_round_trip():
    skel = skeleton_from_points(upright_points(), tid=7)
    clip = ClipRecord("c", Label.PUSH, (848, 848),
                      (FrameDetections(0, 0, (skel,)),))
    again = parse_clip(serialize_clip(clip))
    assert again.frames[0].persons[0].tid == 7
    assert again == clip


def test_serialization_deterministic():
    skel = skeleton_from_points(upright_points())
    clip = ClipRecord("c", None, (848, 848), (FrameDetections(0, 0, (skel,)),))
    assert serialize_clip(clip) == serialize_clip(clip)


def test_empty_stream_rejected():
    with pytest.raises(ClipFormatError):
        parse_clip("")


def test_skeleton_invariants():
    pts = upright_points()
    with pytest.raises(ValueError):
        skeleton_from_points(pts, bbox=(0, 0, 0, 10))
    with pytest.raises(ValueError):
        skeleton_from_points(pts[:16] + [])
    with pytest.raises(ValueError):
        skeleton_from_points(pts, tid=0)


def test_clip_requires_frames_and_resolution():
    skel = skeleton_from_points(upright_points())
    with pytest.raises(ValueError):
        ClipRecord("c", None, (0, 848), (FrameDetections(0, 0, (skel,)),))
    with pytest.raises(ValueError):
        ClipRecord("c", None, (848, 848), ())


_coord = st.floats(min_value=-1e5, max_value=1e5, allow_nan=False).map(canon_float)
_conf = st.floats(min_value=0.0, max_value=1.0, allow_nan=False).map(canon_float)
_side = st.floats(min_value=0.001, max_value=1e4, allow_nan=False).map(canon_float)


@st.composite
def clips(draw):
    n_frames = draw(st.integers(min_value=1, max_value=4))
    frames = []
    ts = 0
    fidx = 0
    for _ in range(n_frames):
        n_persons = draw(st.integers(min_value=0, max_value=2))
        persons = []
        for _ in range(n_persons):
            kpts = tuple(
                Keypoint(draw(_coord), draw(_coord), draw(_conf)) for _ in range(17)
            )
            persons.append(Skeleton(
                kpts=kpts,
                bbox=(draw(_coord), draw(_coord), draw(_side), draw(_side)),
                det_conf=draw(_conf),
                tid=draw(st.one_of(st.none(), st.integers(min_value=1, max_value=9))),
            ))
        frames.append(FrameDetections(frame_idx=fidx, ts_ms=ts, persons=tuple(persons)))
        fidx += draw(st.integers(min_value=1, max_value=3))
        ts += draw(st.integers(min_value=0, max_value=99))
    label = draw(st.sampled_from([None, Label.NORMAL, Label.PUSH]))
    return ClipRecord("clip", label, (1920, 1080), tuple(frames))


@given(clips())
def test_round_trip_law(clip):
    assert parse_clip(serialize_clip(clip)) == clip
