"""File formats, configuration, and the command-line surface.

Interchange uses the ten-field comma-separated convention
`frame,id,left,top,width,height,conf,x,y,z` with id -1 marking detector
output and the trailing three fields unused (-1). Box coordinates serialize
with two decimals so written files parse back bit-identically.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path
from typing import Sequence

from .core import BoundingBox, Detection, Tracklet
from .long_cues import HistoryConfig
from .metrics import evaluate
from .pipeline import (
    KalmanParams,
    Providers,
    TrackerConfig,
    run_tracker_with_state,
)
from .postproc import ClusterConfig, postprocess, refine_confidence, strict_nms
from .sac import TrainConfig, build_training_set, load_model, save_model, train
from .short_cues import QualityParams, ReferenceTracker
from .sim import InvalidConfig, Scenario, ScenarioConfig, generate_scenario


class ParseError(Exception):
    """Malformed interchange file; message carries the line number."""


class UnknownKey(Exception):
    """Config key that no section defines."""


# ---------------------------------------------------------------- MOT files


def parse_mot_file(text: str) -> tuple[list[Detection], list[Tracklet]]:
    """Rows with id -1 become detections, the rest tracklet boxes; output is
    sorted by (frame, id)."""
    detections: list[Detection] = []
    boxes: dict[int, dict[int, tuple[BoundingBox, float]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 10:
            raise ParseError(f"line {lineno}: expected 10 fields, got {len(parts)}")
        try:
            frame = int(parts[0])
            tid = int(parts[1])
            x, y, w, h, conf = (float(p) for p in parts[2:7])
        except ValueError as e:
            raise ParseError(f"line {lineno}: {e}") from None
        if frame < 1:
            raise ParseError(f"line {lineno}: frame index {frame} out of range")
        if w < 0 or h < 0:
            raise ParseError(f"line {lineno}: negative box extents")
        box = BoundingBox(x, y, w, h)
        if tid == -1:
            detections.append(Detection(frame=frame, box=box, confidence=conf))
        else:
            per = boxes.setdefault(tid, {})
            if frame in per:
                raise ParseError(f"line {lineno}: duplicate box for id {tid} frame {frame}")
            per[frame] = (box, conf)

    detections.sort(key=lambda d: d.frame)
    tracklets = [
        Tracklet(id=tid, positions={f: bc[0] for f, bc in sorted(per.items())})
        for tid, per in sorted(boxes.items())
    ]
    return detections, tracklets


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def write_mot_file(entities: Sequence[Detection] | Sequence[Tracklet]) -> str:
    """Canonical text: rows sorted by (frame, id), boxes and confidences at
    two decimals; tracklet rows carry confidence 1.0."""
    rows: list[tuple[int, int, str]] = []
    for ent in entities:
        if isinstance(ent, Detection):
            b = ent.box
            rows.append(
                (
                    ent.frame,
                    -1,
                    f"{ent.frame},-1,{_fmt(b.x)},{_fmt(b.y)},{_fmt(b.w)},{_fmt(b.h)},"
                    f"{_fmt(ent.confidence)},-1,-1,-1",
                )
            )
        else:
            for f, b in ent.positions.items():
                rows.append(
                    (
                        f,
                        ent.id,
                        f"{f},{ent.id},{_fmt(b.x)},{_fmt(b.y)},{_fmt(b.w)},{_fmt(b.h)},"
                        f"1.00,-1,-1,-1",
                    )
                )
    rows.sort(key=lambda r: (r[0], r[1]))
    return "".join(line + "\n" for _, _, line in rows)


# ------------------------------------------------------------ configuration


@dataclasses.dataclass
class RunConfig:
    tracker: TrackerConfig
    train: TrainConfig
    cluster: ClusterConfig
    scenario: ScenarioConfig


# Dotted-key sections mapped onto the dataclasses they override. The
# "tracker" section covers TrackerConfig's own scalars; quality, history,
# and kalman address its nested blocks.
_TRACKER_SCALARS = ("zeta_m", "birth_confidence", "birth_max_iou", "use_long_cues", "use_switcher")
_SECTIONS: dict[str, type | None] = {
    "quality": QualityParams,
    "history": HistoryConfig,
    "kalman": KalmanParams,
    "tracker": None,
    "train": TrainConfig,
    "cluster": ClusterConfig,
    "scenario": ScenarioConfig,
}


def _field_types(cls) -> dict[str, str]:
    return {f.name: str(f.type) for f in dataclasses.fields(cls)}


def _coerce(key: str, raw: str, anno: str):
    raw = raw.strip()
    try:
        if "bool" in anno:
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if "int" in anno:
            return int(raw)
        if "float" in anno:
            return float(raw)
    except ValueError:
        raise TypeError(f"config key {key!r}: cannot parse {raw!r} as {anno}") from None
    raise TypeError(f"config key {key!r}: unsupported field type {anno}")


def load_config(text: str) -> RunConfig:
    """`section.field = value` lines with # comments; unknown keys rejected,
    missing keys keep their documented defaults."""
    overrides: dict[str, dict[str, object]] = {name: {} for name in _SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if "." not in key:
            raise UnknownKey(key)
        section, field = key.split(".", 1)
        if section not in _SECTIONS:
            raise UnknownKey(key)
        cls = _SECTIONS[section]
        if cls is None:
            types = {
                name: anno
                for name, anno in _field_types(TrackerConfig).items()
                if name in _TRACKER_SCALARS
            }
        else:
            types = _field_types(cls)
        if field not in types:
            raise UnknownKey(key)
        overrides[section][field] = _coerce(key, value, types[field])

    tracker = TrackerConfig(
        quality=QualityParams(**overrides["quality"]),
        history=HistoryConfig(**overrides["history"]),
        kalman=KalmanParams(**overrides["kalman"]),
        **overrides["tracker"],
    )
    return RunConfig(
        tracker=tracker,
        train=TrainConfig(**overrides["train"]),
        cluster=ClusterConfig(**overrides["cluster"]),
        scenario=ScenarioConfig(**overrides["scenario"]),
    )


def dump_scenario_config(cfg: ScenarioConfig) -> str:
    lines = [f"scenario.{f.name} = {getattr(cfg, f.name)}" for f in dataclasses.fields(cfg)]
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ the CLI


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _read(path: str | Path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_run_config(path: str | None) -> RunConfig:
    return load_config(_read(path) if path else "")


def _scenario_from(path: str) -> Scenario:
    return generate_scenario(load_config(_read(path)).scenario)


def _providers_for(scenario: Scenario, quality_mode: str) -> Providers:
    quality = scenario.quality_scorer() if quality_mode == "oracle" else None
    if quality is None:
        return Providers(short=ReferenceTracker(), embedder=scenario.embedder())
    return Providers(short=ReferenceTracker(), embedder=scenario.embedder(), quality=quality)


def _detections_by_frame(dets: Sequence[Detection]) -> dict[int, list[Detection]]:
    by_frame: dict[int, list[Detection]] = {}
    for d in dets:
        by_frame.setdefault(d.frame, []).append(d)
    return by_frame


def _cmd_simulate(args) -> int:
    cfg = _load_run_config(args.config)
    scenario = generate_scenario(cfg.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    all_dets = [d for f in sorted(scenario.detections) for d in scenario.detections[f]]
    _atomic_write(out / "det.txt", write_mot_file(all_dets))
    _atomic_write(out / "gt.txt", write_mot_file(scenario.gt))
    _atomic_write(out / "scenario.cfg", dump_scenario_config(cfg.scenario))
    print(f"wrote {out / 'det.txt'}, {out / 'gt.txt'}, {out / 'scenario.cfg'}")
    return 0


def _cmd_track(args) -> int:
    cfg = _load_run_config(args.config)
    scenario = _scenario_from(args.scenario)
    providers = _providers_for(scenario, args.quality)
    if args.detections:
        dets, _ = parse_mot_file(_read(args.detections))
    else:
        dets = [d for f in sorted(scenario.detections) for d in scenario.detections[f]]
    by_frame = _detections_by_frame(dets)
    if args.nms is not None:
        by_frame = {f: strict_nms(v, args.nms) for f, v in by_frame.items()}
    if args.refine:
        by_frame = {f: refine_confidence(v, scenario.quality_scorer()) for f, v in by_frame.items()}
    classifier = load_model(_read(args.model)) if args.model else None
    frames = range(1, scenario.cfg.n_frames + 1)
    tracks, _ = run_tracker_with_state(by_frame, providers, classifier, cfg.tracker, frames)
    _atomic_write(args.out, write_mot_file(tracks))
    print(f"wrote {args.out} ({len(tracks)} tracklets)")
    return 0


def _cmd_train_sac(args) -> int:
    cfg = _load_run_config(args.config)
    samples = []
    for path in args.scenario:
        scenario = _scenario_from(path)
        providers = _providers_for(scenario, args.quality)
        frames = range(1, scenario.cfg.n_frames + 1)
        _, state = run_tracker_with_state(
            scenario.detections, providers, None, cfg.tracker, frames
        )
        samples.extend(
            build_training_set(
                list(state.tracklets.values()),
                scenario.gt,
                cfg.tracker.history,
                scenario.detections,
                scenario.embedder(),
                quality=providers.quality,
            )
        )
    pos = sum(s.label for s in samples)
    model = train(samples, cfg.train)
    _atomic_write(args.out, save_model(model))
    print(f"trained on {len(samples)} samples ({pos} positive); wrote {args.out}")
    return 0


def _cmd_postprocess(args) -> int:
    cfg = _load_run_config(args.config)
    scenario = _scenario_from(args.scenario)
    embed = scenario.embedder()
    _, tracklets = parse_mot_file(_read(args.tracks))
    for tr in tracklets:
        for f, box in tr.positions.items():
            tr.embedding_history[f] = embed(f, box)
    refined = postprocess(tracklets, cfg.cluster)
    _atomic_write(args.out, write_mot_file(refined))
    print(f"wrote {args.out} ({len(refined)} tracklets)")
    return 0


def _cmd_eval(args) -> int:
    _, gt = parse_mot_file(_read(args.gt))
    _, tracks = parse_mot_file(_read(args.tracks))
    report = evaluate(gt, tracks, iou_threshold=args.iou)
    print(report.as_text())
    print()
    print(report.as_kv())
    if args.out:
        _atomic_write(args.out, report.as_kv() + "\n")
    return 0


def _cmd_render(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib import colormaps

    _, tracks = parse_mot_file(_read(args.tracks))
    gt = None
    if args.gt:
        _, gt = parse_mot_file(_read(args.gt))
    frames = sorted({f for tr in tracks for f in tr.positions})
    if not frames:
        print("nothing to render")
        return 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cmap = colormaps["tab20"]
    w = max(tr.positions[f].x2 for tr in tracks for f in tr.positions) + 20
    h = max(tr.positions[f].y2 for tr in tracks for f in tr.positions) + 20
    for f in frames[:: args.stride]:
        fig, ax = plt.subplots(figsize=(8, 6))
        ax.set_xlim(0, w)
        ax.set_ylim(h, 0)
        ax.set_title(f"frame {f}")
        if gt:
            for tr in gt:
                b = tr.positions.get(f)
                if b:
                    ax.add_patch(
                        plt.Rectangle((b.x, b.y), b.w, b.h, fill=False,
                                      edgecolor="0.7", linestyle=":")
                    )
        for tr in tracks:
            b = tr.positions.get(f)
            if b:
                color = cmap(tr.id % 20)
                ax.add_patch(
                    plt.Rectangle((b.x, b.y), b.w, b.h, fill=False, edgecolor=color, lw=1.5)
                )
                ax.text(b.x, b.y - 2, str(tr.id), color=color, fontsize=8)
        fig.savefig(out / f"frame_{f:04d}.png", dpi=100)
        plt.close(fig)
    print(f"rendered {len(frames[:: args.stride])} frames to {out}")
    return 0


def _build_parser() -> _Parser:
    p = _Parser(prog="sactrack", description="Multi-object tracker with switcher-aware matching")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="generate a synthetic scenario")
    sp.add_argument("--config", help="run config file")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("track", help="run the online tracker")
    sp.add_argument("--scenario", required=True, help="scenario config (providers + frame range)")
    sp.add_argument("--detections", help="detections file; defaults to the scenario's")
    sp.add_argument("--model", help="trained classifier; omitted = bootstrap scorer")
    sp.add_argument("--config", help="run config file")
    sp.add_argument("--quality", choices=["oracle", "none"], default="oracle")
    sp.add_argument("--nms", type=float, default=None, help="pre-filter detections at this IoU")
    sp.add_argument("--refine", action="store_true", help="re-score confidences with the quality oracle")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_track)

    sp = sub.add_parser("train-sac", help="train the matching classifier")
    sp.add_argument("--scenario", action="append", required=True,
                    help="scenario config; repeat for more data")
    sp.add_argument("--config", help="run config file")
    sp.add_argument("--quality", choices=["oracle", "none"], default="oracle")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_train_sac)

    sp = sub.add_parser("postprocess", help="offline split/merge clustering + interpolation")
    sp.add_argument("--tracks", required=True)
    sp.add_argument("--scenario", required=True, help="scenario config for embeddings")
    sp.add_argument("--config", help="run config file")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_postprocess)

    sp = sub.add_parser("eval", help="score tracks against ground truth")
    sp.add_argument("--gt", required=True)
    sp.add_argument("--tracks", required=True)
    sp.add_argument("--iou", type=float, default=0.5)
    sp.add_argument("--out", help="also write the key-value report here")
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("render", help="draw per-frame box overlays")
    sp.add_argument("--tracks", required=True)
    sp.add_argument("--gt")
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_render)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ParseError, UnknownKey, InvalidConfig) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (TypeError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
