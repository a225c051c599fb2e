"""Diagnostic bar series for choosing the radius r and the time bound b.

The series reuse the classifier computations directly, so a threshold drawn
on a bar chart separates exactly the events the classifier would label AME.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from ._svg import Svg, nice_step, num
from .distance import mscw
from .events import DeviceStream
from .timing import time_diffs

KINDS = ("mscw", "time_diff")
SERIES_FIELDS = ("device_id", "kind", "k", "seq", "value")
_UNITS = {"mscw": "m", "time_diff": "s"}


@dataclass(frozen=True, eq=False)
class DiagnosticSeries:
    device_id: str
    kind: str
    k: int
    seq: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown series kind {self.kind!r}")
        if len(self.seq) != len(self.values):
            raise ValueError("seq and values differ in length")

    def __len__(self) -> int:
        return len(self.values)


def _series(stream: DeviceStream, kind: str, k: int, values: np.ndarray) -> DiagnosticSeries:
    seq = np.arange(k + 1, k + 1 + len(values))
    return DiagnosticSeries(stream.device_id, kind, k, seq, values)


def mscw_series(stream: DeviceStream, k: int) -> DiagnosticSeries:
    return _series(stream, "mscw", k, mscw(stream, k))


def timediff_series(stream: DeviceStream, k: int) -> DiagnosticSeries:
    return _series(stream, "time_diff", k, time_diffs(stream, k))


def write_series(series: Iterable[DiagnosticSeries], dest: str | os.PathLike | IO[str]) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_series(series, fh)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(SERIES_FIELDS)
    for s in series:
        writer.writerows((s.device_id, s.kind, s.k, q, repr(v)) for q, v in zip(s.seq.tolist(), s.values.tolist()))


def render_bars(series: DiagnosticSeries, threshold: float | None = None, height: float = 240.0) -> str:
    """Bar chart of a series in event order, with an optional threshold line."""
    margin_l, margin_t, margin_r, margin_b = 56.0, 28.0, 16.0, 40.0
    n = len(series)
    bar_w = 4.0 if n <= 200 else max(0.5, 800.0 / n)
    plot_w = max(n * bar_w, 200.0)
    unit = _UNITS[series.kind]
    svg = Svg(margin_l + plot_w + margin_r, margin_t + height + margin_b, f"{series.kind} device {series.device_id}")
    svg.text(margin_l, 16, f"{series.kind} per event, device {series.device_id}, k = {series.k}", size=11)
    bottom = margin_t + height
    svg.line(margin_l, bottom, margin_l + plot_w, bottom, cls="axis")
    svg.line(margin_l, margin_t, margin_l, bottom, cls="axis")
    if n == 0:
        svg.text(margin_l + plot_w / 2, margin_t + height / 2, "no values (stream shorter than k + 1)", anchor="middle", cls="notice")
        return svg.render()

    values = series.values
    top = float(values.max())
    if threshold is not None:
        top = max(top, float(threshold))
    top = top if top > 0 else 1.0
    scale = height / top
    for i, v in enumerate(values.tolist()):
        h = v * scale
        svg.rect(margin_l + i * bar_w, bottom - h, bar_w, h, "#4a6fa5", cls="bar")

    step = nice_step(top, 5)
    for j in range(int(top / step) + 1):
        tick = j * step
        y = bottom - tick * scale
        svg.line(margin_l - 4, y, margin_l, y, cls="tick")
        svg.text(margin_l - 6, y + 3, num(tick), size=9, anchor="end")
    svg.text(14, margin_t + height / 2, f"{series.kind} [{unit}]", size=10, anchor="middle", rotate=-90)
    first, last = int(series.seq[0]), int(series.seq[-1])
    svg.text(margin_l, bottom + 14, str(first), size=9)
    svg.text(margin_l + n * bar_w, bottom + 14, str(last), size=9, anchor="end")
    svg.text(margin_l + plot_w / 2, bottom + 30, "event order", size=10, anchor="middle")

    if threshold is not None:
        y = bottom - float(threshold) * scale
        svg.line(margin_l, y, margin_l + plot_w, y, stroke="#cc0000", width=1.5, cls="threshold", dash="6 3")
        svg.text(margin_l + plot_w, y - 4, f"{num(threshold)} {unit}", size=9, anchor="end")
    return svg.render()
