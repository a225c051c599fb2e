"""Label fusion and spatial grid aggregation.

The (distance label, time label) pair maps to four classes:

========  ====  =====
distance  time  class
========  ====  =====
AME       AME   1
AME       UAE   2
UAE       AME   3
UAE       UAE   4
========  ====  =====

Any pair involving burn-in is ``UNFUSED``. Fused events are binned into
half-open square cells of the x-y plane; a cell takes the most frequent class
among its fused events, ties going to the lowest class number, and stays
unassigned (grey) with fewer than ``min_events`` fused events.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, replace
from typing import IO

import numpy as np

from ._svg import Svg, nice_step, num
from .labels import LABEL_DTYPE, FusedClass, MovementLabel

_FUSION_TABLE = np.array(
    [
        [FusedClass.UNFUSED, FusedClass.UNFUSED, FusedClass.UNFUSED],
        [FusedClass.UNFUSED, FusedClass.CLASS1, FusedClass.CLASS2],
        [FusedClass.UNFUSED, FusedClass.CLASS3, FusedClass.CLASS4],
    ],
    dtype=LABEL_DTYPE,
)

CLASS_COLORS = {
    FusedClass.CLASS1: "#1a7a1a",
    FusedClass.CLASS2: "#ff8c00",
    FusedClass.CLASS3: "#ffd700",
    FusedClass.CLASS4: "#8b0000",
}
GREY = "#c0c0c0"

GRID_FIELDS = ("ix", "iy", "n_class1", "n_class2", "n_class3", "n_class4", "n_unfused", "dominant", "tie_flag")


def fuse(dist_label: MovementLabel, time_label: MovementLabel) -> FusedClass:
    return FusedClass(int(_FUSION_TABLE[int(dist_label), int(time_label)]))


def fuse_labels(dist_labels: np.ndarray, time_labels: np.ndarray) -> np.ndarray:
    """Vectorized :func:`fuse` over two label arrays of equal length."""
    d = np.asarray(dist_labels, dtype=np.intp)
    t = np.asarray(time_labels, dtype=np.intp)
    if d.shape != t.shape:
        raise ValueError(f"label arrays differ in shape: {d.shape} vs {t.shape}")
    return _FUSION_TABLE[d, t]


@dataclass(frozen=True)
class GridSpec:
    """Cell lattice parameters. ``origin=None`` means derive it from the data."""

    origin: tuple[float, float] | None = None
    cell_size: float = 1.0
    min_events: int = 5

    def __post_init__(self):
        if not (math.isfinite(self.cell_size) and self.cell_size > 0):
            raise ValueError(f"cell_size must be positive, got {self.cell_size!r}")
        if isinstance(self.min_events, bool) or int(self.min_events) != self.min_events or self.min_events < 1:
            raise ValueError(f"min_events must be an integer >= 1, got {self.min_events!r}")
        object.__setattr__(self, "cell_size", float(self.cell_size))
        object.__setattr__(self, "min_events", int(self.min_events))
        if self.origin is not None:
            ox, oy = (float(v) for v in self.origin)
            if not (math.isfinite(ox) and math.isfinite(oy)):
                raise ValueError(f"origin must be finite, got {self.origin!r}")
            object.__setattr__(self, "origin", (ox, oy))

    def resolve(self, pos: np.ndarray) -> "GridSpec":
        """Fill a missing origin with the floor of the data's bounding-box minimum."""
        if self.origin is not None:
            return self
        pos = np.asarray(pos, dtype=np.float64)
        if len(pos) == 0:
            return replace(self, origin=(0.0, 0.0))
        lo = np.floor(pos[:, :2].min(axis=0))
        return replace(self, origin=(float(lo[0]), float(lo[1])))


def _cell_indices(x, y, spec: GridSpec):
    ox, oy = spec.origin if spec.origin is not None else (0.0, 0.0)
    ix = np.floor((np.asarray(x, dtype=np.float64) - ox) / spec.cell_size)
    iy = np.floor((np.asarray(y, dtype=np.float64) - oy) / spec.cell_size)
    return ix.astype(np.int64), iy.astype(np.int64)


def cell_of(pos, spec: GridSpec) -> tuple[int, int]:
    """Cell index of a position; z is ignored and cells are half-open [lo, hi)."""
    ix, iy = _cell_indices(pos[0], pos[1], spec)
    return int(ix), int(iy)


@dataclass(frozen=True)
class Cell:
    counts: tuple[int, int, int, int]
    unfused: int
    dominant: FusedClass | None
    tie: bool

    @property
    def fused(self) -> int:
        return sum(self.counts)

    @property
    def total(self) -> int:
        return self.fused + self.unfused


@dataclass(frozen=True, eq=False)
class GridMap:
    """Per-cell class counts.

    ``keys`` is an (m, 2) array of cell indices sorted by (ix, iy); ``counts``
    is (m, 5) with columns unfused, class 1, 2, 3, 4.
    """

    spec: GridSpec
    keys: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        keys = np.asarray(self.keys, dtype=np.int64).reshape(-1, 2)
        counts = np.asarray(self.counts, dtype=np.int64).reshape(-1, 5)
        if len(keys) != len(counts):
            raise ValueError("keys and counts differ in length")
        if len(keys):
            order = np.lexsort((keys[:, 1], keys[:, 0]))
            keys, counts = keys[order], counts[order]
        keys.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "counts", counts)

    def __len__(self) -> int:
        return len(self.keys)

    def __eq__(self, other):
        if not isinstance(other, GridMap):
            return NotImplemented
        return (
            self.spec == other.spec
            and np.array_equal(self.keys, other.keys)
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None

    @property
    def n_events(self) -> int:
        return int(self.counts.sum())

    def dominance(self) -> tuple[np.ndarray, np.ndarray]:
        """Dominant class per cell (0 when unassigned) and tie flags."""
        by_class = self.counts[:, 1:]
        fused = by_class.sum(axis=1)
        if len(by_class) == 0:
            return np.zeros(0, dtype=LABEL_DTYPE), np.zeros(0, dtype=bool)
        best = by_class.max(axis=1)
        dominant = (np.argmax(by_class, axis=1) + 1).astype(LABEL_DTYPE)
        tie = (by_class == best[:, None]).sum(axis=1) > 1
        assigned = fused >= self.spec.min_events
        dominant[~assigned] = FusedClass.UNFUSED
        return dominant, tie & assigned

    @property
    def cells(self) -> dict[tuple[int, int], Cell]:
        dominant, tie = self.dominance()
        out = {}
        for (ix, iy), c, dom, flag in zip(self.keys.tolist(), self.counts.tolist(), dominant.tolist(), tie.tolist()):
            out[(ix, iy)] = Cell(tuple(c[1:]), c[0], FusedClass(dom) if dom else None, bool(flag))
        return out

    def merge(self, other: "GridMap") -> "GridMap":
        """Cellwise sum of two partial grids built with the same spec."""
        if self.spec != other.spec:
            raise ValueError("cannot merge grids with different specs")
        keys = np.concatenate([self.keys, other.keys])
        counts = np.concatenate([self.counts, other.counts])
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        summed = np.zeros((len(uniq), 5), dtype=np.int64)
        np.add.at(summed, inverse.reshape(-1), counts)
        return GridMap(self.spec, uniq, summed)


def build_grid(pos: np.ndarray, fused: np.ndarray, spec: GridSpec = GridSpec()) -> GridMap:
    """Accumulate fused events into cells.

    ``pos`` is (n, 2) or (n, 3); only x and y are used. ``fused`` holds
    :class:`FusedClass` codes.
    """
    pos = np.asarray(pos, dtype=np.float64)
    if pos.ndim != 2:
        pos = pos.reshape(-1, 3)
    fused = np.asarray(fused, dtype=np.int64).reshape(-1)
    if len(pos) != len(fused):
        raise ValueError(f"{len(pos)} positions but {len(fused)} class codes")
    if len(fused) and (fused.min() < 0 or fused.max() > 4):
        raise ValueError("class codes must lie in 0..4")
    spec = spec.resolve(pos)
    if len(pos) == 0:
        return GridMap(spec, np.zeros((0, 2)), np.zeros((0, 5)))
    ix, iy = _cell_indices(pos[:, 0], pos[:, 1], spec)
    ix0, iy0 = ix.min(), iy.min()
    height = int(iy.max() - iy0) + 1
    flat = (ix - ix0) * height + (iy - iy0)
    uniq, inverse = np.unique(flat, return_inverse=True)
    counts = np.bincount(inverse.reshape(-1) * 5 + fused, minlength=len(uniq) * 5).reshape(-1, 5)
    keys = np.column_stack([uniq // height + ix0, uniq % height + iy0])
    return GridMap(spec, keys, counts)


def write_grid_csv(grid: GridMap, dest: str | os.PathLike | IO[str]) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_grid_csv(grid, fh)
        return
    dominant, tie = grid.dominance()
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(GRID_FIELDS)
    for (ix, iy), c, dom, flag in zip(grid.keys.tolist(), grid.counts.tolist(), dominant.tolist(), tie.tolist()):
        writer.writerow([ix, iy, c[1], c[2], c[3], c[4], c[0], dom if dom else "", int(flag)])


def read_grid_csv(src: str | os.PathLike | IO[str], spec: GridSpec) -> GridMap:
    """Load counts from a grid CSV; dominance is recomputed from ``spec``."""
    if isinstance(src, (str, os.PathLike)):
        with open(src, encoding="utf-8", newline="") as fh:
            return read_grid_csv(fh, spec)
    reader = csv.DictReader(src)
    missing = [f for f in GRID_FIELDS if f not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"grid CSV lacks columns {missing}")
    keys, counts = [], []
    for row in reader:
        keys.append((int(row["ix"]), int(row["iy"])))
        counts.append(
            (int(row["n_unfused"]), int(row["n_class1"]), int(row["n_class2"]), int(row["n_class3"]), int(row["n_class4"]))
        )
    if spec.origin is None:
        spec = replace(spec, origin=(0.0, 0.0))
    return GridMap(spec, np.array(keys, dtype=np.int64).reshape(-1, 2), np.array(counts, dtype=np.int64).reshape(-1, 5))


def write_grid_meta(grid: GridMap, path: str | os.PathLike) -> None:
    spec = grid.spec
    meta = {"origin": list(spec.origin or (0.0, 0.0)), "cell_size": spec.cell_size, "min_events": spec.min_events}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_grid_meta(path: str | os.PathLike) -> GridSpec:
    with open(path, encoding="utf-8") as fh:
        meta = json.load(fh)
    return GridSpec(tuple(meta["origin"]), meta["cell_size"], meta["min_events"])


def render_map(grid: GridMap, px_per_cell: float = 8.0) -> str:
    """SVG map with one square per cell, coloured by dominant class.

    Unassigned cells are grey. Axes are annotated in meters, with y pointing
    up. Output bytes depend only on the grid.
    """
    margin_l, margin_t, margin_r, margin_b = 56.0, 24.0, 16.0, 72.0
    if len(grid) == 0:
        svg = Svg(320, 120, "class map")
        svg.text(160, 64, "no cells to display", size=12, anchor="middle", cls="notice")
        return svg.render()

    spec = grid.spec
    ox, oy = spec.origin or (0.0, 0.0)
    cs = spec.cell_size
    ix0, iy0 = grid.keys.min(axis=0).tolist()
    ix1, iy1 = grid.keys.max(axis=0).tolist()
    nx, ny = ix1 - ix0 + 1, iy1 - iy0 + 1
    plot_w, plot_h = nx * px_per_cell, ny * px_per_cell
    legend_w = 5 * 78.0
    width = max(margin_l + plot_w + margin_r, margin_l + legend_w)
    svg = Svg(width, margin_t + plot_h + margin_b, "class map")

    dominant, _ = grid.dominance()
    for (ix, iy), dom in zip(grid.keys.tolist(), dominant.tolist()):
        x = margin_l + (ix - ix0) * px_per_cell
        y = margin_t + (iy1 - iy) * px_per_cell
        fill = CLASS_COLORS[FusedClass(dom)] if dom else GREY
        svg.rect(x, y, px_per_cell, px_per_cell, fill, cls="cell")

    # axes in meters
    x_lo, x_hi = ox + ix0 * cs, ox + (ix1 + 1) * cs
    y_lo, y_hi = oy + iy0 * cs, oy + (iy1 + 1) * cs
    bottom = margin_t + plot_h
    svg.line(margin_l, bottom, margin_l + plot_w, bottom, cls="axis")
    svg.line(margin_l, margin_t, margin_l, bottom, cls="axis")
    px_per_m = px_per_cell / cs
    for axis, lo, hi in (("x", x_lo, x_hi), ("y", y_lo, y_hi)):
        step = nice_step(hi - lo)
        tick = math.ceil(lo / step) * step
        while tick <= hi + 1e-9:
            if axis == "x":
                px = margin_l + (tick - x_lo) * px_per_m
                svg.line(px, bottom, px, bottom + 4, cls="tick")
                svg.text(px, bottom + 15, num(tick), size=9, anchor="middle")
            else:
                py = bottom - (tick - y_lo) * px_per_m
                svg.line(margin_l - 4, py, margin_l, py, cls="tick")
                svg.text(margin_l - 6, py + 3, num(tick), size=9, anchor="end")
            tick += step
    svg.text(margin_l + plot_w / 2, bottom + 30, "x [m]", size=10, anchor="middle")
    svg.text(14, margin_t + plot_h / 2, "y [m]", size=10, anchor="middle", rotate=-90)

    legend_y = bottom + 42
    entries = [(f"Class {int(c)}", color) for c, color in CLASS_COLORS.items()] + [
        (f"< {spec.min_events} events", GREY)
    ]
    x = margin_l
    for label, color in entries:
        svg.rect(x, legend_y, 10, 10, color, cls="legend")
        svg.text(x + 14, legend_y + 9, label, size=9)
        x += 78
    svg.text(margin_l, legend_y + 24, f"cell size {num(cs)} m", size=9)
    return svg.render()
