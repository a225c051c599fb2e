"""Time each stage of the pipeline on the 401-device synthetic log.

Usage: python scripts/run_paper_scale.py [--seed N] [--jobs N] [--out DIR]

With --out, the event, label and grid files are also written and timed.
"""

import argparse
import time
from contextlib import contextmanager
from pathlib import Path

from ipsclass.distance import DistanceParams
from ipsclass.events import read_log, write_log
from ipsclass.grid import GridSpec, render_map, write_grid_csv
from ipsclass.pipeline import classify_log, read_labels, write_labels
from ipsclass.synth import compose, paper_scale
from ipsclass.timing import TimeParams


@contextmanager
def stage(name: str, timings: dict):
    start = time.perf_counter()
    yield
    timings[name] = time.perf_counter() - start


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    timings: dict[str, float] = {}
    with stage("generate", timings):
        log = compose(paper_scale(args.seed).devices)
    with stage("classify", timings):
        result = classify_log(log, DistanceParams(10, 1.5), TimeParams(10, 15.0), jobs=args.jobs)
    with stage("grid", timings):
        grid = result.grid(GridSpec(cell_size=1.0, min_events=5))
    with stage("render", timings):
        svg = render_map(grid)

    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with stage("write events", timings):
            write_log(log, args.out / "events.csv", "csv")
        with stage("read events", timings):
            read_log(args.out / "events.csv")
        with stage("write labels", timings):
            write_labels(result, args.out / "labels.csv")
        with stage("read labels", timings):
            read_labels(args.out / "labels.csv")
        write_grid_csv(grid, args.out / "grid.csv")
        (args.out / "map.svg").write_text(svg, encoding="utf-8")

    print(f"{log.device_count} devices, {log.n_events} events, {len(grid)} cells")
    counts = result.class_counts()
    print("class counts: " + ", ".join(f"{c.text}={n}" for c, n in sorted(counts.items())))
    for name, secs in timings.items():
        print(f"{name:>14}: {secs:8.2f} s")


if __name__ == "__main__":
    main()
