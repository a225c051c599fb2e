"""Event data model, file ingestion and stream validation.

A positioning system emits records of (device id, x, y, z, t). Records are
grouped per device and stably sorted by timestamp, so events with equal
timestamps keep their input order. Coordinates are meters, timestamps are
seconds stored as float64.

Two file formats are supported:

* CSV with header ``device_id,x,y,z,t`` (column order free, UTF-8).
* NDJSON with one object per line carrying the keys ``device_id, x, y, z, t``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import operator
import os
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import IO, Union

import numpy as np

logger = logging.getLogger(__name__)

FIELDS = ("device_id", "x", "y", "z", "t")
FORMATS = ("csv", "ndjson")

PathLike = Union[str, os.PathLike]


class IngestError(Exception):
    """Base class for ingestion failures."""


class UnparseableRecord(IngestError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NonFiniteCoordinate(IngestError):
    def __init__(self, line: int, reason: str = "non-finite value"):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class EmptyInput(IngestError):
    pass


@dataclass(frozen=True)
class PositionEvent:
    device_id: str
    seq: int
    pos: tuple[float, float, float]
    t: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.pos):
            raise ValueError(f"non-finite position {self.pos}")
        if not math.isfinite(self.t) or self.t < 0:
            raise ValueError(f"timestamp must be finite and non-negative, got {self.t}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DeviceStream:
    """Time-ordered events of one device, stored column-wise.

    ``pos`` has shape (n, 3), ``t`` shape (n,). Sequence numbers are implicit:
    event ``seq`` lives at row ``seq - 1``.
    """

    device_id: str
    pos: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        pos = _frozen(self.pos).reshape(-1, 3)
        t = _frozen(self.t).reshape(-1)
        if len(pos) != len(t):
            raise ValueError(f"{len(pos)} positions but {len(t)} timestamps")
        if len(t) > 1 and np.any(np.diff(t) < 0):
            raise ValueError(f"device {self.device_id!r}: timestamps are not sorted")
        object.__setattr__(self, "pos", pos)
        object.__setattr__(self, "t", t)

    @classmethod
    def from_events(cls, events: Iterable[PositionEvent]) -> "DeviceStream":
        events = list(events)
        if not events:
            raise ValueError("cannot build a stream from zero events")
        ids = {e.device_id for e in events}
        if len(ids) != 1:
            raise ValueError(f"events from several devices: {sorted(ids)}")
        t = np.array([e.t for e in events], dtype=np.float64)
        order = np.argsort(t, kind="stable")
        pos = np.array([e.pos for e in events], dtype=np.float64)[order]
        return cls(ids.pop(), pos, t[order])

    @property
    def n(self) -> int:
        return len(self.t)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def seq(self) -> np.ndarray:
        return np.arange(1, self.n + 1)

    @property
    def events(self) -> list[PositionEvent]:
        return [
            PositionEvent(self.device_id, i + 1, (float(x), float(y), float(z)), float(t))
            for i, ((x, y, z), t) in enumerate(zip(self.pos.tolist(), self.t.tolist()))
        ]

    def __eq__(self, other):
        if not isinstance(other, DeviceStream):
            return NotImplemented
        return (
            self.device_id == other.device_id
            and np.array_equal(self.pos, other.pos)
            and np.array_equal(self.t, other.t)
        )

    __hash__ = None


@dataclass(frozen=True)
class IngestReport:
    records: int = 0
    valid: int = 0
    malformed: int = 0
    non_finite: int = 0
    reordered: int = 0

    @property
    def rejected(self) -> int:
        return self.malformed + self.non_finite


@dataclass(frozen=True, eq=False)
class EventLog:
    streams: Mapping[str, DeviceStream]
    report: IngestReport = field(default_factory=IngestReport)

    def __post_init__(self):
        for key, stream in self.streams.items():
            if key != stream.device_id:
                raise ValueError(f"stream keyed {key!r} belongs to {stream.device_id!r}")
        ordered = {key: self.streams[key] for key in sorted(self.streams)}
        object.__setattr__(self, "streams", MappingProxyType(ordered))

    @property
    def device_count(self) -> int:
        return len(self.streams)

    @property
    def n_events(self) -> int:
        return sum(s.n for s in self.streams.values())

    def __getitem__(self, device_id: str) -> DeviceStream:
        return self.streams[device_id]

    def __iter__(self) -> Iterator[DeviceStream]:
        return iter(self.streams.values())

    def __len__(self) -> int:
        return len(self.streams)

    def __eq__(self, other):
        if not isinstance(other, EventLog):
            return NotImplemented
        return list(self.streams) == list(other.streams) and all(
            a == b for a, b in zip(self.streams.values(), other.streams.values())
        )

    __hash__ = None

    @classmethod
    def from_arrays(cls, device_ids, pos, t, report: IngestReport | None = None) -> "EventLog":
        """Group flat record columns into per-device streams.

        Within a device, records are stably sorted by ``t``.
        """
        ids = np.asarray(device_ids, dtype=object).astype(str)
        pos = np.asarray(pos, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(t, dtype=np.float64).reshape(-1)
        if not (len(ids) == len(pos) == len(t)):
            raise ValueError("column lengths differ")
        if len(t) == 0:
            raise EmptyInput("no valid records")
        uniq, inverse = np.unique(ids, return_inverse=True)
        by_time = np.argsort(t, kind="stable")
        order = by_time[np.argsort(inverse[by_time], kind="stable")]
        bounds = np.searchsorted(inverse[order], np.arange(len(uniq) + 1))
        streams = {
            str(dev): DeviceStream(str(dev), pos[order[lo:hi]], t[order[lo:hi]])
            for dev, lo, hi in zip(uniq, bounds[:-1], bounds[1:])
        }
        if report is None:
            report = IngestReport(records=len(t), valid=len(t))
        return cls(streams, report)


class _Records:
    """Accumulates parsed columns and rejection counts across sources.

    Range checks (finite values, non-negative timestamps) run vectorized over
    all accumulated rows, so the per-line loop only splits and converts.
    """

    def __init__(self, strict: bool):
        self.strict = strict
        self.ids: list[str] = []
        self.values: list[tuple[float, float, float, float]] = []
        self.lines: list[int] = []
        self.records = 0
        self.malformed = 0

    def bad(self, line: int, reason: str):
        if self.strict:
            self._raise_first_invalid()
            raise UnparseableRecord(line, reason)
        self.malformed += 1
        logger.debug("skipping line %d: %s", line, reason)

    def _valid_mask(self, arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        finite = np.isfinite(arr).all(axis=1)
        return finite, finite & (arr[:, 3] >= 0)

    def _raise_first_invalid(self, arr: np.ndarray | None = None):
        if not self.values:
            return
        if arr is None:
            arr = np.array(self.values, dtype=np.float64)
        finite, ok = self._valid_mask(arr)
        if not ok.all():
            first = int(np.flatnonzero(~ok)[0])
            if finite[first]:
                raise UnparseableRecord(self.lines[first], "negative timestamp")
            raise NonFiniteCoordinate(self.lines[first])

    def parse_csv(self, text: IO[str]):
        reader = csv.reader(text)
        header = next(reader, None)
        if header is None:
            return
        header = [h.strip() for h in header]
        missing = [f for f in FIELDS if f not in header]
        if missing:
            raise UnparseableRecord(1, f"header lacks {', '.join(missing)}")
        pick = operator.itemgetter(*(header.index(f) for f in FIELDS))
        width = len(header)
        ids, values, lines = self.ids.append, self.values.append, self.lines.append
        records = 0
        for row in reader:
            if len(row) != width:
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                records += 1
                self.bad(reader.line_num, f"expected {width} fields, got {len(row)}")
                continue
            records += 1
            dev, x, y, z, t = pick(row)
            try:
                v = (float(x), float(y), float(z), float(t))
            except ValueError:
                self.bad(reader.line_num, "non-numeric field")
                continue
            if not dev:
                self.bad(reader.line_num, "empty device_id")
                continue
            ids(dev)
            values(v)
            lines(reader.line_num)
        self.records += records

    def parse_ndjson(self, text: IO[str]):
        for line, raw in enumerate(text, start=1):
            if not raw.strip():
                continue
            self.records += 1
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                self.bad(line, f"invalid JSON ({exc.msg})")
                continue
            if not isinstance(obj, dict) or any(f not in obj for f in FIELDS):
                self.bad(line, "missing keys")
                continue
            dev = obj["device_id"]
            if dev is None or dev == "" or isinstance(dev, (bool, list, dict)):
                self.bad(line, "bad device_id")
                continue
            nums = [obj[f] for f in FIELDS[1:]]
            if any(isinstance(v, (bool, list, dict)) or v is None for v in nums):
                self.bad(line, "non-numeric field")
                continue
            try:
                v = tuple(float(n) for n in nums)
            except ValueError:
                self.bad(line, "non-numeric field")
                continue
            self.ids.append(str(dev))
            self.values.append(v)
            self.lines.append(line)

    def parse(self, source, fmt: str):
        if fmt not in FORMATS:
            raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")
        if isinstance(source, (bytes, bytearray)):
            source = io.BytesIO(source)
        if isinstance(source, io.TextIOBase):
            text = source
        else:
            text = io.TextIOWrapper(source, encoding="utf-8", newline="")
        try:
            if fmt == "csv":
                self.parse_csv(text)
            else:
                self.parse_ndjson(text)
        except UnicodeDecodeError as exc:
            raise UnparseableRecord(0, f"not UTF-8: {exc}") from None
        finally:
            if text is not source:
                text.detach()

    def build(self) -> EventLog:
        arr = np.array(self.values, dtype=np.float64).reshape(-1, 4)
        ids = np.array(self.ids, dtype=object)
        if self.strict:
            self._raise_first_invalid(arr)
        finite, ok = self._valid_mask(arr)
        non_finite = int(np.count_nonzero(~finite))
        malformed = self.malformed + int(np.count_nonzero(finite & ~ok))
        if not ok.all():
            arr, ids = arr[ok], ids[ok]
        if len(arr) == 0:
            raise EmptyInput(f"no valid records among {self.records}")
        report = IngestReport(
            records=self.records,
            valid=len(arr),
            malformed=malformed,
            non_finite=non_finite,
            reordered=_count_reordered(ids, arr[:, 3]),
        )
        return EventLog.from_arrays(ids, arr[:, :3], arr[:, 3], report)


def _count_reordered(ids: np.ndarray, t: np.ndarray) -> int:
    """Records whose timestamp is earlier than the previous record of the same device."""
    _, inverse = np.unique(ids.astype(str), return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    same = inverse[order][1:] == inverse[order][:-1]
    back = t[order][1:] < t[order][:-1]
    return int(np.count_nonzero(same & back))


def ingest(source, fmt: str = "csv", strict: bool = False) -> EventLog:
    """Parse a byte or text stream into an :class:`EventLog`.

    Malformed records are skipped and counted in ``log.report``; with
    ``strict=True`` the first bad record raises instead.
    """
    records = _Records(strict)
    records.parse(source, fmt)
    return records.build()


def infer_format(path: PathLike) -> str:
    suffix = Path(path).suffix.lower()
    return "ndjson" if suffix in (".ndjson", ".jsonl", ".json") else "csv"


def read_log(paths: PathLike | Iterable[PathLike], fmt: str | None = None, strict: bool = False) -> EventLog:
    """Read one or several event files into a single log.

    Records from later files count as later input for the stable sort.
    """
    if isinstance(paths, (str, os.PathLike)):
        paths = [paths]
    records = _Records(strict)
    for path in paths:
        with open(path, "rb") as fh:
            records.parse(fh, fmt or infer_format(path))
    return records.build()


def _rows(log: EventLog):
    for stream in log:
        dev = stream.device_id
        for (x, y, z), t in zip(stream.pos.tolist(), stream.t.tolist()):
            yield dev, x, y, z, t


def write_log(log: EventLog, dest: PathLike | IO[str], fmt: str = "csv") -> None:
    """Serialize a log so that :func:`ingest` reproduces it exactly.

    Floats are written with ``repr``, which round-trips float64.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_log(log, fh, fmt)
        return
    if fmt == "csv":
        writer = csv.writer(dest, lineterminator="\n")
        writer.writerow(FIELDS)
        writer.writerows((dev, repr(x), repr(y), repr(z), repr(t)) for dev, x, y, z, t in _rows(log))
    else:
        for dev, x, y, z, t in _rows(log):
            dest.write(json.dumps({"device_id": dev, "x": x, "y": y, "z": z, "t": t}) + "\n")


@dataclass(frozen=True)
class DeviceSummary:
    n: int
    duplicate_timestamps: int
    pos_min: tuple[float, float, float]
    pos_max: tuple[float, float, float]
    time_span: float


@dataclass(frozen=True)
class ValidationReport:
    devices: dict[str, DeviceSummary]
    empty_devices: tuple[str, ...] = ()

    @property
    def n_events(self) -> int:
        return sum(d.n for d in self.devices.values())


def validate(log: EventLog) -> ValidationReport:
    devices = {}
    empty = []
    for stream in log:
        if stream.n == 0:
            logger.warning("device %r has no events; excluded from report", stream.device_id)
            empty.append(stream.device_id)
            continue
        t = stream.t
        devices[stream.device_id] = DeviceSummary(
            n=stream.n,
            duplicate_timestamps=int(np.count_nonzero(t[1:] == t[:-1])),
            pos_min=tuple(float(v) for v in stream.pos.min(axis=0)),
            pos_max=tuple(float(v) for v in stream.pos.max(axis=0)),
            time_span=float(t[-1] - t[0]),
        )
    return ValidationReport(devices, tuple(empty))

