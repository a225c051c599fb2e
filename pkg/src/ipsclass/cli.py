"""Command-line front end.

Exit codes: 0 success, 1 data or I/O error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from .distance import DistanceParams
from .events import IngestError, read_log, write_log
from .grid import GridSpec, read_grid_csv, read_grid_meta, render_map, write_grid_csv, write_grid_meta
from .labels import FusedClass
from .pipeline import ClassifiedLog, classify_log, read_labels, write_labels
from .synth import DuplicateDevice, InvalidScenario, compose, load_plan, preset, write_truth
from .timing import TimeParams
from .tuning import mscw_series, render_bars, timediff_series, write_series

logger = logging.getLogger("ipsclass")


class UsageError(Exception):
    """Invalid configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    inputs: list[Path] = field(default_factory=list)
    format: str | None = None
    strict: bool = False
    dist: DistanceParams = field(default_factory=DistanceParams)
    time: TimeParams = field(default_factory=TimeParams)
    grid: GridSpec = field(default_factory=GridSpec)
    out: Path = Path(".")
    jobs: int = 1

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        try:
            k = args.k
            dist = DistanceParams(k, args.r)
            time = TimeParams(args.k_time if args.k_time is not None else k, args.b)
            grid = GridSpec(
                tuple(args.origin) if getattr(args, "origin", None) else None,
                getattr(args, "cell_size", 1.0),
                getattr(args, "min_events", 5),
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        return cls(
            inputs=[Path(p) for p in getattr(args, "inputs", None) or []],
            format=args.format,
            strict=args.strict,
            dist=dist,
            time=time,
            grid=grid,
            out=Path(args.out),
            jobs=args.jobs,
        )


def _add_io(p: argparse.ArgumentParser, inputs_required: bool = True):
    p.add_argument("inputs", nargs="+" if inputs_required else "*", help="event files (CSV or NDJSON)")
    p.add_argument("--format", choices=("csv", "ndjson"), help="input format (default: from file suffix)")
    p.add_argument("--strict", action="store_true", help="abort on the first malformed record")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="devices classified in parallel")


def _add_params(p: argparse.ArgumentParser):
    p.add_argument("--k", type=int, default=10, help="window width / lag in events (default 10)")
    p.add_argument("--r", type=float, default=1.5, help="distance threshold in meters (default 1.5)")
    p.add_argument("--b", type=float, default=15.0, help="time threshold in seconds (default 15)")
    p.add_argument("--k-time", type=int, default=None, help="lag for the time criterion (default: --k)")


def _add_grid(p: argparse.ArgumentParser):
    p.add_argument("--cell-size", type=float, default=1.0, help="cell edge in meters (default 1)")
    p.add_argument("--min-events", type=int, default=5, help="fused events needed to colour a cell (default 5)")
    p.add_argument("--origin", type=float, nargs=2, metavar=("X", "Y"), help="grid origin (default: floor of data minimum)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ipsclass", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic event log with ground truth")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="scenario file (INI style)")
    src.add_argument("--preset", help="built-in scenario set: paper-scale, demo-hall, recovery")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--format", choices=("csv", "ndjson"), default=None)
    p.add_argument("--out", default=".")

    p = sub.add_parser("classify", help="label every event and print the class distribution")
    _add_io(p)
    _add_params(p)

    p = sub.add_parser("grid", help="aggregate fused classes on a grid and draw the map")
    _add_io(p, inputs_required=False)
    _add_params(p)
    _add_grid(p)
    p.add_argument("--labels", help="label file from 'classify' instead of raw events")

    p = sub.add_parser("tune", help="diagnostic bar charts for choosing r and b")
    _add_io(p)
    _add_params(p)
    p.add_argument("--device", required=True, help="device id to analyse")

    p = sub.add_parser("render", help="draw the map from a grid CSV")
    p.add_argument("grid_csv")
    p.add_argument("--meta", help="grid metadata JSON (default: grid_meta.json next to the CSV)")
    p.add_argument("--min-events", type=int, default=None)
    p.add_argument("--out", default=".")
    return parser


def _load(config: RunConfig):
    log = read_log(config.inputs, config.format, config.strict)
    rep = log.report
    if rep.rejected:
        logger.warning("rejected %d of %d records (%d malformed, %d non-finite)",
                       rep.rejected, rep.records, rep.malformed, rep.non_finite)
    if rep.reordered:
        logger.info("re-sorted %d out-of-order records", rep.reordered)
    return log


def _summary(result: ClassifiedLog) -> str:
    cols = [FusedClass.CLASS1, FusedClass.CLASS2, FusedClass.CLASS3, FusedClass.CLASS4, FusedClass.UNFUSED]
    width = max([len("device"), *map(len, result.device_ids)])
    lines = [f"{'device':<{width}} {'events':>9} " + " ".join(f"{c.text:>8}" for c in cols)]
    for dev in result.device_ids:
        counts = result.class_counts(dev)
        n = sum(counts.values())
        lines.append(f"{dev:<{width}} {n:>9} " + " ".join(f"{counts[c]:>8}" for c in cols))
    counts = result.class_counts()
    total = sum(counts.values())
    fused = total - counts[FusedClass.UNFUSED]
    lines.append(f"{'ALL':<{width}} {total:>9} " + " ".join(f"{counts[c]:>8}" for c in cols))
    if fused:
        share = " ".join(f"class{int(c)}={counts[c] / fused:.1%}" for c in cols[:4])
        lines.append(f"share of fused events: {share}")
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    try:
        plan = load_plan(args.config) if args.config else preset(args.preset, args.seed or 0)
        if args.seed is not None and args.config:
            for i, d in enumerate(plan.devices):
                plan.devices[i] = replace(d, scenario=replace(d.scenario, seed=args.seed))
        log = compose(plan.devices)
    except (InvalidScenario, DuplicateDevice) as exc:
        raise UsageError(str(exc)) from None
    fmt = args.format or plan.format
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    events_path = out / f"events.{fmt}"
    write_log(log, events_path, fmt)
    write_truth(log, plan.devices, out / "truth.csv")
    print(f"wrote {log.n_events} events for {log.device_count} devices to {events_path}")
    return 0


def cmd_classify(config: RunConfig) -> int:
    log = _load(config)
    result = classify_log(log, config.dist, config.time, config.jobs)
    config.out.mkdir(parents=True, exist_ok=True)
    write_labels(result, config.out / "labels.csv")
    print(_summary(result))
    return 0


def cmd_grid(config: RunConfig, labels: str | None) -> int:
    if labels:
        result = read_labels(labels)
    elif config.inputs:
        result = classify_log(_load(config), config.dist, config.time, config.jobs)
    else:
        raise UsageError("grid needs event files or --labels")
    grid = result.grid(config.grid)
    config.out.mkdir(parents=True, exist_ok=True)
    write_grid_csv(grid, config.out / "grid.csv")
    write_grid_meta(grid, config.out / "grid_meta.json")
    (config.out / "map.svg").write_text(render_map(grid), encoding="utf-8")
    dominant, _ = grid.dominance()
    assigned = int((dominant > 0).sum())
    print(f"{len(grid)} cells, {assigned} assigned, {len(grid) - assigned} grey")
    return 0


def _safe_name(device_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", device_id)


def cmd_tune(config: RunConfig, device_id: str) -> int:
    log = _load(config)
    if device_id not in log.streams:
        raise UsageError(f"unknown device {device_id!r}")
    stream = log[device_id]
    m = mscw_series(stream, config.dist.k)
    d = timediff_series(stream, config.time.k)
    if not len(m) or not len(d):
        logger.warning("device %r has %d events; window needs more than k", device_id, stream.n)
    config.out.mkdir(parents=True, exist_ok=True)
    stem = f"tune_{_safe_name(device_id)}"
    write_series([m, d], config.out / f"{stem}.csv")
    (config.out / f"{stem}_mscw.svg").write_text(render_bars(m, config.dist.r), encoding="utf-8")
    (config.out / f"{stem}_time_diff.svg").write_text(render_bars(d, config.time.b), encoding="utf-8")
    print(f"device {device_id}: {stream.n} events, {len(m)} mscw bars, {len(d)} time-difference bars")
    return 0


def cmd_render(args) -> int:
    grid_path = Path(args.grid_csv)
    meta = Path(args.meta) if args.meta else grid_path.with_name("grid_meta.json")
    spec = read_grid_meta(meta) if meta.exists() else GridSpec((0.0, 0.0))
    if args.min_events is not None:
        try:
            spec = GridSpec(spec.origin, spec.cell_size, args.min_events)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        grid = read_grid_csv(grid_path, spec)
    except (KeyError, ValueError) as exc:
        raise IngestError(f"bad grid file: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "map.svg").write_text(render_map(grid), encoding="utf-8")
    print(f"rendered {len(grid)} cells to {out / 'map.svg'}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "render":
            return cmd_render(args)
        config = RunConfig.from_args(args)
        if args.command == "classify":
            return cmd_classify(config)
        if args.command == "grid":
            return cmd_grid(config, args.labels)
        return cmd_tune(config, args.device)
    except UsageError as exc:
        print(f"ipsclass {args.command}: {exc}", file=sys.stderr)
        return 2
    except (IngestError, OSError, ValueError) as exc:
        print(f"ipsclass {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
