"""Whole-log classification: both criteria, fusion, and label file I/O."""

from __future__ import annotations

import csv
import io
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO

import numpy as np

from .distance import DistanceParams, labels_from_mscw, mscw
from .events import DeviceStream, EventLog
from .grid import GridMap, GridSpec, build_grid, fuse_labels
from .labels import LABEL_DTYPE, FusedClass, MovementLabel
from .timing import TimeParams, labels_from_diffs, time_diffs

LABEL_FIELDS = ("device_id", "seq", "t", "x", "y", "z", "mscw", "dist_label", "diff", "time_label", "fused")


@dataclass(frozen=True, eq=False)
class ClassifiedLog:
    """Per-event results, concatenated over devices in device-id order.

    ``mscw`` and ``diff`` are NaN for burn-in rows. ``offsets[j]:offsets[j+1]``
    is the row range of ``device_ids[j]``.
    """

    device_ids: tuple[str, ...]
    offsets: np.ndarray
    t: np.ndarray
    pos: np.ndarray
    mscw: np.ndarray
    dist_label: np.ndarray
    diff: np.ndarray
    time_label: np.ndarray
    fused: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    @property
    def seq(self) -> np.ndarray:
        starts = np.repeat(self.offsets[:-1], np.diff(self.offsets))
        return np.arange(len(self.t)) - starts + 1

    def device_rows(self, device_id: str) -> slice:
        j = self.device_ids.index(device_id)
        return slice(int(self.offsets[j]), int(self.offsets[j + 1]))

    def class_counts(self, device_id: str | None = None) -> Counter:
        fused = self.fused if device_id is None else self.fused[self.device_rows(device_id)]
        values, counts = np.unique(fused, return_counts=True)
        out = Counter({c: 0 for c in FusedClass})
        out.update({FusedClass(int(v)): int(n) for v, n in zip(values, counts)})
        return out

    def grid(self, spec: GridSpec = GridSpec()) -> GridMap:
        return build_grid(self.pos, self.fused, spec)

    def same_values(self, other: "ClassifiedLog") -> bool:
        return (
            self.device_ids == other.device_ids
            and all(
                np.array_equal(getattr(self, name), getattr(other, name), equal_nan=name in ("mscw", "diff"))
                for name in ("offsets", "t", "pos", "mscw", "dist_label", "diff", "time_label", "fused")
            )
        )


def _classify_stream(stream: DeviceStream, dist: DistanceParams, time: TimeParams):
    n = stream.n
    m = mscw(stream, dist.k)
    d = time_diffs(stream, time.k)
    dl = labels_from_mscw(m, n, dist.r)
    tl = labels_from_diffs(d, n, time.b)
    m_full = np.full(n, np.nan)
    m_full[n - len(m) :] = m
    d_full = np.full(n, np.nan)
    d_full[n - len(d) :] = d
    return m_full, dl, d_full, tl


def classify_log(
    log: EventLog,
    dist: DistanceParams = DistanceParams(),
    time: TimeParams = TimeParams(),
    jobs: int = 1,
) -> ClassifiedLog:
    """Run both classifiers on every device and fuse the labels.

    Devices are independent, so ``jobs > 1`` spreads them over a thread pool;
    results are identical to a serial run.
    """
    streams = list(log)
    if jobs > 1 and len(streams) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda s: _classify_stream(s, dist, time), streams))
    else:
        parts = [_classify_stream(s, dist, time) for s in streams]

    lengths = [s.n for s in streams]
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)

    def cat(i, dtype):
        if not parts:
            return np.zeros(0, dtype=dtype)
        return np.concatenate([p[i] for p in parts]).astype(dtype, copy=False)

    dist_label = cat(1, LABEL_DTYPE)
    time_label = cat(3, LABEL_DTYPE)
    return ClassifiedLog(
        device_ids=tuple(s.device_id for s in streams),
        offsets=offsets,
        t=np.concatenate([s.t for s in streams]) if streams else np.zeros(0),
        pos=np.concatenate([s.pos for s in streams]) if streams else np.zeros((0, 3)),
        mscw=cat(0, np.float64),
        dist_label=dist_label,
        diff=cat(2, np.float64),
        time_label=time_label,
        fused=fuse_labels(dist_label, time_label),
    )


def _fmt(v: float) -> str:
    return "" if v != v else repr(v)


_MOVE_TEXT = {int(m): m.text for m in MovementLabel}
_FUSED_TEXT = {int(c): c.text for c in FusedClass}


def _csv_field(text: str) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="").writerow([text])
    return buf.getvalue()


def write_labels(result: ClassifiedLog, dest: str | os.PathLike | IO[str]) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_labels(result, fh)
        return
    dest.write(",".join(LABEL_FIELDS) + "\n")
    move, fused = _MOVE_TEXT, _FUSED_TEXT
    for j, dev in enumerate(result.device_ids):
        rows = slice(int(result.offsets[j]), int(result.offsets[j + 1]))
        prefix = _csv_field(dev) + ","
        dest.writelines(
            f"{prefix}{seq},{t!r},{x!r},{y!r},{z!r},{_fmt(m)},{move[dl]},{_fmt(df)},{move[tl]},{fused[fc]}\n"
            for seq, t, (x, y, z), m, dl, df, tl, fc in zip(
                range(1, rows.stop - rows.start + 1),
                result.t[rows].tolist(),
                result.pos[rows].tolist(),
                result.mscw[rows].tolist(),
                result.dist_label[rows].tolist(),
                result.diff[rows].tolist(),
                result.time_label[rows].tolist(),
                result.fused[rows].tolist(),
            )
        )


_MOVE_CODE = {m.text: int(m) for m in MovementLabel}
_FUSED_CODE = {c.text: int(c) for c in FusedClass}


def read_labels(src: str | os.PathLike | IO[str]) -> ClassifiedLog:
    """Load a label file written by :func:`write_labels`."""
    if isinstance(src, (str, os.PathLike)):
        with open(src, encoding="utf-8", newline="") as fh:
            return read_labels(fh)
    reader = csv.reader(src)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != LABEL_FIELDS:
        raise ValueError(f"label file header must be {','.join(LABEL_FIELDS)}")
    ids, nums, labels = [], [], []
    width = len(LABEL_FIELDS)
    move, fused = _MOVE_CODE, _FUSED_CODE
    nan = float("nan")
    try:
        for row in reader:
            if len(row) != width:
                if not row:
                    continue
                raise ValueError(f"expected {width} fields")
            dev, _, t, x, y, z, m, dl, df, tl, fc = row
            ids.append(dev)
            nums.append((float(t), float(x), float(y), float(z), float(m) if m else nan, float(df) if df else nan))
            labels.append((move[dl], move[tl], fused[fc]))
    except (ValueError, KeyError) as exc:
        raise ValueError(f"line {reader.line_num}: {exc}") from None
    cols = np.array(nums, dtype=np.float64).reshape(-1, 6)
    lab = np.array(labels, dtype=LABEL_DTYPE).reshape(-1, 3)
    device_ids, offsets = [], [0]
    for i, dev in enumerate(ids):
        if not device_ids or dev != device_ids[-1]:
            if device_ids:
                offsets.append(i)
            device_ids.append(dev)
    offsets.append(len(ids))
    if not ids:
        offsets = [0]
    return ClassifiedLog(
        device_ids=tuple(device_ids),
        offsets=np.array(offsets, dtype=np.int64),
        t=cols[:, 0].copy(),
        pos=cols[:, 1:4].copy(),
        mscw=cols[:, 4].copy(),
        dist_label=lab[:, 0].copy(),
        diff=cols[:, 5].copy(),
        time_label=lab[:, 1].copy(),
        fused=lab[:, 2].copy(),
    )
