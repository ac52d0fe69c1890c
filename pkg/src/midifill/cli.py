"""Headless driver: batch analysis, scripted infilling and serving.

Exit codes: 0 ok, 2 usage/config, 3 io, 4 midi, 5 roles, 6 range/region,
7 generator, 8 session state.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import ControlTarget, RegionSpec
from .errors import (
    GeneratorFailure,
    MalformedMidi,
    MidifillError,
    NoNotes,
    RangeError,
    RoleError,
    SchemaError,
    StateError,
    UnsupportedMetre,
)
from .metrics import ControlLevels
from .midi_io import parse_midi, serialize_midi
from .model import TrackRole, assign_roles, merge_window, slice_window
from .baseline import BaselineGenerator
from .remote import RemoteGenerator
from . import engine
from .report import analyze_window, report_lines

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MIDI = 4
EXIT_ROLE = 5
EXIT_RANGE = 6
EXIT_GENERATOR = 7
EXIT_STATE = 8

_ERROR_EXITS = (
    (GeneratorFailure, EXIT_GENERATOR),
    ((MalformedMidi, NoNotes, UnsupportedMetre), EXIT_MIDI),
    (RoleError, EXIT_ROLE),
    (RangeError, EXIT_RANGE),
    (StateError, EXIT_STATE),
    (SchemaError, EXIT_USAGE),
)

def _exit_code(error: MidifillError) -> int:
    for types, code in _ERROR_EXITS:
        if isinstance(error, types):
            return code
    return EXIT_USAGE


def parse_roles(text: str) -> list[TrackRole]:
    try:
        return [TrackRole.parse(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def parse_region(text: str, roles: list[TrackRole]) -> RegionSpec:
    """Region syntax: comma-separated items ``track:bar`` or
    ``track:first-last``; track is an index, a role name, or ``all``."""

    def track_indexes(token: str) -> list[int]:
        token = token.strip().lower()
        if token == "all":
            return [0, 1, 2]
        if token.isdigit():
            return [int(token)]
        role = TrackRole.parse(token)
        for index, assigned in enumerate(roles):
            if assigned is role:
                return [index]
        raise SchemaError(f"no track with role {token!r}")

    cells: set[tuple[int, int]] = set()
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            track_part, bar_part = item.split(":")
            bar_part = bar_part.strip().removeprefix("bar")
            if "-" in bar_part:
                first, last = (int(x) for x in bar_part.split("-"))
                bars = range(first, last + 1)
            else:
                bars = range(int(bar_part), int(bar_part) + 1)
        except ValueError:
            raise SchemaError(f"bad region item {item!r}") from None
        for track in track_indexes(track_part):
            for bar in bars:
                cells.add((track, bar))
    if not cells:
        raise SchemaError(f"region {text!r} selects nothing")
    return RegionSpec.of(cells)


def parse_levels(text: str, roles: list[TrackRole]) -> dict[int, ControlLevels]:
    """Levels syntax: ``track=d,p,o`` items separated by ``;``."""
    result: dict[int, ControlLevels] = {}
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        try:
            track_part, triple = item.split("=")
            d, p, o = (int(x) for x in triple.split(","))
        except ValueError:
            raise SchemaError(f"bad levels item {item!r}") from None
        token = track_part.strip().lower()
        if token.isdigit():
            index = int(token)
        else:
            role = TrackRole.parse(token)
            matches = [i for i, r in enumerate(roles) if r is role]
            if not matches:
                raise SchemaError(f"no track with role {token!r}")
            index = matches[0]
        try:
            result[index] = ControlLevels(d, p, o)
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
    return result


def parse_tension(text: str) -> dict[int, int]:
    """Tension curve: comma-separated levels for consecutive window bars,
    or ``@file`` with one level per line."""
    if text.startswith("@"):
        text = ",".join(Path(text[1:]).read_text().split())
    levels: dict[int, int] = {}
    for offset, part in enumerate(x for x in text.split(",") if x.strip()):
        try:
            value = int(part)
        except ValueError:
            raise SchemaError(f"bad tension level {part!r}") from None
        if not 0 <= value <= 9:
            raise SchemaError(f"tension level {value} outside 0..9")
        levels[offset + 1] = value
    return levels


def _load_job(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise SchemaError(f"cannot read job file {path}: {exc}") from exc


def cmd_analyze(args: argparse.Namespace) -> int:
    data = Path(args.input).read_bytes()
    score = parse_midi(data)
    roles = parse_roles(args.roles)
    score = assign_roles(score, roles)
    window = slice_window(score, args.start_bar)
    report = analyze_window(score, window)
    lines = "\n".join(report_lines(report)) + "\n"
    if args.out:
        Path(args.out).write_text(lines)
    else:
        sys.stdout.write(lines)
    return EXIT_OK


def cmd_infill(args: argparse.Namespace) -> int:
    job = _load_job(Path(args.job)) if args.job else {}
    data = Path(args.input).read_bytes()
    score = parse_midi(data)
    roles = parse_roles(args.roles if args.roles else job.get("roles", ""))
    if not roles:
        raise SchemaError("no roles given (flag --roles or job file)")
    score = assign_roles(score, roles)
    start_bar = args.start_bar if args.start_bar else job.get("start_bar", 1)
    window = slice_window(score, start_bar)

    region_text = args.region or job.get("region")
    if not region_text:
        raise SchemaError("no region given (flag --region or job file)")
    region = parse_region(region_text, roles)

    track_levels = {}
    if job.get("levels"):
        track_levels.update(parse_levels(job["levels"], roles))
    if args.levels:
        track_levels.update(parse_levels(args.levels, roles))
    tension_levels = {}
    if job.get("tension"):
        tension_levels.update(parse_tension(job["tension"]))
    if args.tension:
        tension_levels.update(parse_tension(args.tension))
    targets = ControlTarget(track_levels=track_levels, tension_levels=tension_levels)

    seed = args.seed if args.seed is not None else job.get("seed", 0)
    generator_text = args.generator or job.get("generator", "baseline")
    if generator_text == "baseline":
        generator = BaselineGenerator()
    elif generator_text.startswith("remote:"):
        generator = RemoteGenerator(generator_text.removeprefix("remote:"))
    else:
        raise SchemaError(
            f"unknown generator {generator_text!r} (use baseline or remote:URL)"
        )

    result = engine.infill(window, region, targets, seed, generator)
    if result.failed:
        raise GeneratorFailure(
            f"generator failed for cells {sorted(result.failed_cells)}"
        )
    merged = merge_window(score, result.new_window)
    out = Path(args.out) if args.out else Path(args.input).with_suffix(".infilled.mid")
    out.write_bytes(serialize_midi(merged))

    report = analyze_window(merged, slice_window(merged, start_bar))
    lines = report_lines(report)
    for (track, bar), levels in sorted(result.achieved_levels.items()):
        lines.append(
            json.dumps(
                {
                    "type": "achieved",
                    "track": track,
                    "bar": bar,
                    "density_level": levels.density_level,
                    "polyphony_level": levels.polyphony_level,
                    "occupation_level": levels.occupation_level,
                    "deltas": result.level_deltas[(track, bar)],
                }
            )
        )
    report_path = Path(args.report) if args.report else out.with_suffix(".report.jsonl")
    report_path.write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app
    from .sessions import ServiceConfig, SessionManager

    if args.config:
        try:
            config = ServiceConfig.from_file(Path(args.config))
        except (OSError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        config = ServiceConfig()
    host, _, port = args.bind.rpartition(":")
    try:
        port_number = int(port)
    except ValueError:
        print(f"bad bind address {args.bind!r}", file=sys.stderr)
        return EXIT_USAGE
    manager = SessionManager(config)
    if config.snapshot_dir:
        manager.load_snapshots()
    app = create_app(manager)
    uvicorn.run(app, host=host or "127.0.0.1", port=port_number, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="midifill")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="compute controls for a window")
    analyze.add_argument("--input", required=True)
    analyze.add_argument("--roles", required=True, help="comma list, e.g. m,b,h")
    analyze.add_argument("--start-bar", type=int, default=1)
    analyze.add_argument("--out", help="report path (default stdout)")
    analyze.set_defaults(func=cmd_analyze)

    fill = sub.add_parser("infill", help="regenerate a region of a window")
    fill.add_argument("--input", required=True)
    fill.add_argument("--roles", help="comma list, e.g. m,b,h")
    fill.add_argument("--start-bar", type=int)
    fill.add_argument("--region", help="e.g. melody:5 or all:3 or melody:1-8")
    fill.add_argument("--levels", help="e.g. melody=4,1,6;harmony=5,5,7")
    fill.add_argument("--tension", help="comma levels per window bar, or @file")
    fill.add_argument("--seed", type=int)
    fill.add_argument("--generator", help="baseline (default) or remote:URL")
    fill.add_argument("--job", help="JSON job file; flags win on conflict")
    fill.add_argument("--out", help="output MIDI path")
    fill.add_argument("--report", help="report path (default <out>.report.jsonl)")
    fill.set_defaults(func=cmd_infill)

    serve = sub.add_parser("serve", help="run the session service")
    serve.add_argument("--bind", default="127.0.0.1:8000")
    serve.add_argument("--config", help="JSON config file")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MidifillError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
