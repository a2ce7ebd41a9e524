"""Command line interface: synth, track, extract, train, predict, eval, run."""

from __future__ import annotations

import argparse
import csv
import json
import math
import queue
import sys
import threading
from collections import deque
from pathlib import Path

from . import __version__
from .errors import ClipFormatError, ConfigError, ModelFormatError, PushDetectError, SequencingError
from .evaluation import (
    ClipDecisionConfig,
    PipelineConfig,
    SplitSpec,
    evaluate_model,
    feature_indices,
    render_rows,
    split_clips,
)
from .forest import FORMAT_VERSION, ForestParams, fit, load, save, vote_counts
from .interaction import PAIR_FEATURE_NAMES, GateConfig, build_pair_samples, gate_pairs
from .kinematics import FEATURE_NAMES, KinematicsConfig, extract_features
from .skeleton import (
    ClipRecord,
    Label,
    canon_float,
    frame_line_to_json,
    parse_clip,
    parse_frame_line,
    serialize_clip,
)
from .synth import ScenarioParams, gen_clip
from .tracker import IouTracker, TrackerConfig, track_clip


def _fmt(v: float) -> str:
    return repr(canon_float(v))


def _open_in(path: str | None):
    return sys.stdin if path in (None, "-") else open(path, "r", encoding="utf-8")


def _open_out(path: str | None):
    return sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8", newline="")


def _load_clips_dir(path: str) -> list[ClipRecord]:
    files = sorted(Path(path).glob("*.jsonl"))
    if not files:
        raise ConfigError(f"no .jsonl clips found in {path!r}")
    return [parse_clip(f.read_bytes()) for f in files]


def _resolution(text: str) -> tuple[int, int]:
    w, _, h = text.partition("x")
    try:
        return (int(w), int(h))
    except ValueError:
        raise argparse.ArgumentTypeError("resolution must look like 848x848")


def _fractions(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("split must look like 0.8,0.1,0.1")
    return tuple(float(p) for p in parts)


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenario = Label.from_wire(args.scenario)
    truths = {}
    for i in range(args.n):
        params = ScenarioParams(
            scenario=scenario,
            seed=args.seed + i,
            n_frames=args.frames,
            resolution=args.res,
            noise_px=args.noise,
            dropout_p=args.dropout,
            scale=args.scale,
        )
        clip_id = f"{args.scenario}_{i:03d}"
        clip, truth = gen_clip(params, clip_id=clip_id)
        (out / f"{clip_id}.jsonl").write_bytes(serialize_clip(clip))
        truths[clip_id] = {
            "scenario": args.scenario,
            "seed": params.seed,
            "contact": list(truth.contact) if truth.contact else None,
            "angles": [
                [[canon_float(v) for v in frame] for frame in actor]
                for actor in truth.angles
            ],
        }
    sidecar = out / "ground_truth.json"
    existing = json.loads(sidecar.read_text()) if sidecar.exists() else {"feature_order": list(FEATURE_NAMES), "clips": {}}
    existing["clips"].update(truths)
    sidecar.write_text(json.dumps(existing, separators=(",", ":"), sort_keys=True) + "\n")
    print(f"wrote {args.n} {args.scenario} clips to {out}", file=sys.stderr)
    return 0


def cmd_track(args) -> int:
    cfg = TrackerConfig(iou_min=args.iou_min, max_age=args.max_age)
    tracker = IouTracker(cfg)
    current_clip = None
    errors = 0
    with _open_in(args.infile) as fin, _open_out(args.out) as fout:
        for line_no, raw in enumerate(fin, start=1):
            if not raw.strip():
                continue
            try:
                fl = parse_frame_line(raw, line_no)
                if fl.clip_id != current_clip:
                    tracker = IouTracker(cfg)
                    current_clip = fl.clip_id
                assignments = tracker.step(fl.frame)
            except (ClipFormatError, SequencingError) as exc:
                errors += 1
                print(f"skipped: {exc}", file=sys.stderr)
                continue
            from dataclasses import replace
            persons = tuple(replace(s, tid=tid) for tid, s in assignments)
            frame = replace(fl.frame, persons=persons)
            fout.write(frame_line_to_json(fl.clip_id, fl.label, fl.resolution, frame) + "\n")
    if errors:
        print(f"{errors} input line(s) skipped", file=sys.stderr)
        return 1
    return 0


def _select_bucket(clips, args):
    if args.split is None:
        return clips
    spec = SplitSpec(train=args.split[0], val=args.split[1], test=args.split[2], seed=args.seed)
    train, val, test = split_clips(clips, spec)
    return {"train": train, "val": val, "test": test, "holdout": val + test}[args.bucket]


def cmd_extract(args) -> int:
    kcfg = KinematicsConfig(kp_conf_min=args.kp_conf_min, impute_window=args.impute_window)
    gcfg = GateConfig(kappa=args.kappa)
    tcfg = TrackerConfig()
    if args.clips:
        clips = _load_clips_dir(args.clips)
        clips = _select_bucket(clips, args)
    else:
        with _open_in(args.infile) as fin:
            clips = [parse_clip(fin)]
    with _open_out(args.out) as fout:
        writer = csv.writer(fout)
        if args.pairs:
            writer.writerow(["clip_id", "frame", "tid_a", "tid_b"]
                            + [f"f{i + 1}" for i in range(len(PAIR_FEATURE_NAMES))] + ["label"])
            for clip in clips:
                if not clip.is_tracked():
                    clip = track_clip(clip, tcfg)
                for s in build_pair_samples(clip, kcfg, gcfg):
                    writer.writerow([s.clip_id, s.frame_idx, s.tid_a, s.tid_b]
                                    + [_fmt(v) for v in s.features]
                                    + ["" if s.label is None else s.label.to_wire()])
        else:
            writer.writerow(["clip_id", "frame", "tid"] + list(FEATURE_NAMES) + ["mask"])
            for clip in clips:
                if not clip.is_tracked():
                    clip = track_clip(clip, tcfg)
                histories: dict[int, deque] = {}
                for frame in clip.frames:
                    for person in frame.persons:
                        fv = extract_features(person, frame.frame_idx,
                                              histories.get(person.tid, ()), kcfg)
                        writer.writerow([clip.clip_id, frame.frame_idx, person.tid]
                                        + [_fmt(v) for v in fv.values] + [fv.mask])
                        hist = histories.setdefault(person.tid, deque(maxlen=max(1, kcfg.impute_window)))
                        hist.append((frame.frame_idx, person))
    return 0


def _feature_names_for(count: int) -> tuple[str, ...]:
    if count == 9:
        return PAIR_FEATURE_NAMES
    quads = [n for n in PAIR_FEATURE_NAMES if "quad" in n]
    return tuple(quads)


def _read_pairs_csv(path: str):
    with _open_in(path) as fin:
        reader = csv.reader(fin)
        header = next(reader, None)
        if header is None:
            raise ClipFormatError("pairs CSV is empty", 1)
        expected = ["clip_id", "frame", "tid_a", "tid_b"] \
            + [f"f{i + 1}" for i in range(len(PAIR_FEATURE_NAMES))] + ["label"]
        if header != expected:
            raise ClipFormatError("pairs CSV header does not match the extract --pairs format", 1)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise ClipFormatError(f"expected {len(expected)} columns, got {len(row)}", line_no)
            feats = [float(v) for v in row[4:4 + len(PAIR_FEATURE_NAMES)]]
            label = Label.from_wire(row[-1]) if row[-1] else None
            rows.append((row[0], int(row[1]), int(row[2]), int(row[3]), feats, label))
    return rows


def cmd_train(args) -> int:
    rows = _read_pairs_csv(args.pairs)
    names = _feature_names_for(args.features)
    idx = [PAIR_FEATURE_NAMES.index(n) for n in names]
    X, y = [], []
    for _, _, _, _, feats, label in rows:
        if label is None:
            raise ClipFormatError("training rows must be labeled")
        X.append([feats[i] for i in idx])
        y.append(int(label))
    params = ForestParams(
        n_trees=args.trees,
        seed=args.seed,
        min_samples_split=args.min_split,
        min_samples_leaf=args.min_leaf,
        max_depth=args.max_depth,
    )
    model = fit(X, y, params, feature_names=names, n_jobs=args.jobs)
    Path(args.out).write_bytes(save(model))
    print(f"trained {params.n_trees} trees on {len(X)} samples -> {args.out}", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    model = load(Path(args.model).read_bytes())
    idx = [PAIR_FEATURE_NAMES.index(n) for n in model.feature_names]
    rows = _read_pairs_csv(args.pairs)
    with _open_out(args.out) as fout:
        writer = csv.writer(fout)
        writer.writerow(["clip_id", "frame", "tid_a", "tid_b"]
                        + [f"f{i + 1}" for i in range(len(PAIR_FEATURE_NAMES))]
                        + ["label", "pred", "proba"])
        for clip_id, frame, ta, tb, feats, label in rows:
            n0, n1 = vote_counts(model, [feats[i] for i in idx])
            pred = Label.PUSH if n1 > n0 else Label.NORMAL
            writer.writerow([clip_id, frame, ta, tb] + [_fmt(v) for v in feats]
                            + ["" if label is None else label.to_wire(),
                               pred.to_wire(), _fmt(n1 / (n0 + n1))])
    return 0


def cmd_eval(args) -> int:
    model = load(Path(args.model).read_bytes())
    clips = _load_clips_dir(args.clips)
    spec = SplitSpec(train=args.split[0], val=args.split[1], test=args.split[2], seed=args.seed)
    train, val, test = split_clips(clips, spec)
    bucket = {"train": train, "val": val, "test": test, "holdout": val + test}[args.bucket]
    cfg = PipelineConfig(
        gate=GateConfig(kappa=args.kappa),
        decision=ClipDecisionConfig(tau_clip=args.tau),
    )
    report = evaluate_model(model, bucket, cfg)

    rows = render_rows(report.clip_normalized)
    print(f"clips evaluated: {report.n_clips} ({args.bucket} bucket, tau_clip={args.tau})")
    print("clip-level confusion (rows: true normal/push; cols: pred normal/push)")
    print(f"  normal  {rows[0][0]}  {rows[0][1]}")
    print(f"  push    {rows[1][0]}  {rows[1][1]}")
    prec = "n/a" if report.precision is None else f"{report.precision:.2f}"
    rec = "n/a" if report.recall is None else f"{report.recall:.2f}"
    print(f"precision={prec} recall={rec}")
    if report.frame_normalized is not None:
        frows = render_rows(report.frame_normalized)
        print("frame-level confusion (weak labels)")
        print(f"  normal  {frows[0][0]}  {frows[0][1]}")
        print(f"  push    {frows[1][0]}  {frows[1][1]}")

    obj = report.to_json_obj()
    obj["config"].update({
        "split": list(args.split), "seed": args.seed, "bucket": args.bucket,
        "kappa": args.kappa, "model": args.model,
    })
    obj["split_clips"] = {
        "train": [c.clip_id for c in train],
        "val": [c.clip_id for c in val],
        "test": [c.clip_id for c in test],
    }
    payload = json.dumps(obj, separators=(",", ":"))
    if args.json_out:
        Path(args.json_out).write_text(payload + "\n")
    else:
        print(payload)
    return 0


def _reader(fin, q: "queue.Queue", sentinel):
    for item in enumerate(fin, start=1):
        q.put(item)
    q.put(sentinel)


def cmd_run(args) -> int:
    try:
        model = load(Path(args.model).read_bytes())
        idx = feature_indices(model)
    except (OSError, ModelFormatError, ValueError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 2
    tcfg = TrackerConfig(iou_min=args.iou_min, max_age=args.max_age)
    kcfg = KinematicsConfig(kp_conf_min=args.kp_conf_min, impute_window=args.impute_window)
    gcfg = GateConfig(kappa=args.kappa)

    tracker = IouTracker(tcfg)
    histories: dict[int, deque] = {}
    window: deque = deque(maxlen=args.window)
    current_clip = None
    errors = 0

    with _open_in(args.infile) as fin, _open_out(args.out) as fout:
        if args.io_threads > 1:
            sentinel = (None, None)
            q: queue.Queue = queue.Queue(maxsize=256)  # bounded: backpressure on the reader
            t = threading.Thread(target=_reader, args=(fin, q, sentinel), daemon=True)
            t.start()
            def lines():
                while True:
                    item = q.get()
                    if item == sentinel:
                        return
                    yield item
            source = lines()
        else:
            source = enumerate(fin, start=1)

        for line_no, raw in source:
            if not raw.strip():
                continue
            try:
                fl = parse_frame_line(raw, line_no)
                if fl.clip_id != current_clip:
                    tracker = IouTracker(tcfg)
                    histories = {}
                    window = deque(maxlen=args.window)
                    current_clip = fl.clip_id
                assignments = tracker.step(fl.frame)
            except (ClipFormatError, SequencingError) as exc:
                errors += 1
                print(f"skipped: {exc}", file=sys.stderr)
                continue

            tracks = [(tid, skel) for tid, skel in assignments]
            by_tid = dict(tracks)
            pairs = gate_pairs(tracks, gcfg)
            feats = {}
            events = []
            frame_push = False
            for ta, tb in pairs:
                for tid in (ta, tb):
                    if tid not in feats:
                        feats[tid] = extract_features(by_tid[tid], fl.frame.frame_idx,
                                                      histories.get(tid, ()), kcfg)
                fa, fb = feats[ta], feats[tb]
                if not (fa.usable() and fb.usable()):
                    continue
                full = fa.values + fb.values
                n0, n1 = vote_counts(model, [full[i] for i in idx])
                pred = Label.PUSH if n1 > n0 else Label.NORMAL
                frame_push = frame_push or pred is Label.PUSH
                events.append({"a": ta, "b": tb, "pred": pred.to_wire(),
                               "proba": canon_float(n1 / (n0 + n1))})

            for tid, skel in tracks:
                hist = histories.setdefault(tid, deque(maxlen=max(1, kcfg.impute_window)))
                hist.append((fl.frame.frame_idx, skel))
            live = {t.track_id for t in tracker.tracks}
            if len(histories) > 2 * len(live) + 8:
                histories = {tid: h for tid, h in histories.items() if tid in live}

            window.append((bool(events), frame_push))
            if args.alert_mode == "per-frame":
                alert = frame_push
            else:
                gated = sum(1 for g, _ in window if g)
                pushy = sum(1 for g, p in window if g and p)
                alert = gated > 0 and (pushy / gated) >= args.tau
            fout.write(json.dumps(
                {"frame": fl.frame.frame_idx, "pairs": events, "alert": alert},
                separators=(",", ":")) + "\n")
            fout.flush()

    if errors:
        print(f"{errors} input line(s) skipped", file=sys.stderr)
        return 1
    return 0


def _config_tokens(path: str) -> list[str]:
    tokens: list[str] = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line is not key=value: {raw!r}")
        key = key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                tokens.append(f"--{key}")
        else:
            tokens.extend([f"--{key}", value])
    return tokens


def _apply_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ConfigError("--config requires a file path")
    tokens = _config_tokens(argv[i + 1])
    rest = argv[:i] + argv[i + 2:]
    if not rest or rest[0].startswith("-"):
        raise ConfigError("--config must follow a subcommand")
    # config values come first so explicit flags override them
    return [rest[0]] + tokens + rest[1:]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pushdetect",
        description="Detect pushing between tracked people from keypoint streams.",
    )
    parser.add_argument("--version", action="version",
                        version=f"pushdetect {__version__} (model format_version {FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate labeled synthetic clips")
    p.add_argument("--scenario", choices=["push", "normal"], required=True)
    p.add_argument("--n", type=int, default=45)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--dropout", type=float, default=0.02)
    p.add_argument("--scale", type=float, default=300.0)
    p.add_argument("--res", type=_resolution, default=(848, 848))
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track", help="assign track ids to a keypoint stream")
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--iou-min", type=float, default=0.3)
    p.add_argument("--max-age", type=int, default=30)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("extract", help="extract angle features to CSV")
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--clips", default=None, help="directory of .jsonl clips")
    p.add_argument("--out", default=None)
    p.add_argument("--pairs", action="store_true", help="emit gated pair samples")
    p.add_argument("--split", type=_fractions, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bucket", choices=["train", "val", "test", "holdout"], default="train")
    p.add_argument("--kp-conf-min", type=float, default=0.5)
    p.add_argument("--impute-window", type=int, default=5)
    p.add_argument("--kappa", type=float, default=1.5)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the forest on pair samples")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--features", type=int, choices=[4, 9], default=9,
                   help="per-person feature set: 4 quad angles or all 9")
    p.add_argument("--min-split", type=int, default=2)
    p.add_argument("--min-leaf", type=int, default=1)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify pair samples with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="split clips and evaluate a model")
    p.add_argument("--model", required=True)
    p.add_argument("--clips", required=True)
    p.add_argument("--split", type=_fractions, default=(0.8, 0.1, 0.1))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bucket", choices=["train", "val", "test", "holdout"], default="test")
    p.add_argument("--tau", type=float, default=0.3)
    p.add_argument("--kappa", type=float, default=1.5)
    p.add_argument("--json-out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="stream frames through the full pipeline")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--window", type=int, default=30)
    p.add_argument("--tau", type=float, default=0.3)
    p.add_argument("--alert-mode", choices=["per-frame", "per-window"], default="per-window")
    p.add_argument("--io-threads", type=int, choices=[1, 2], default=1)
    p.add_argument("--iou-min", type=float, default=0.3)
    p.add_argument("--max-age", type=int, default=30)
    p.add_argument("--kappa", type=float, default=1.5)
    p.add_argument("--kp-conf-min", type=float, default=0.5)
    p.add_argument("--impute-window", type=int, default=5)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ModelFormatError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 2
    except (ClipFormatError, SequencingError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except PushDetectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
