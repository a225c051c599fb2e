"""Synthetic event streams with known ground truth.

Four scenario kinds cover the situations the classifiers must separate:

``route``
    Steady travel along a waypoint polyline (ping-pong at the ends), emitting
    at ``rate_hz``. Truth: moving.
``queue``
    Quasi-continuous emissions at ``rate_hz`` while the object advances by
    ``step_length`` every ``step_period`` seconds along ``direction``.
    With ``queue_length > 0`` the position wraps back to the start.
    Truth: moving.
``dwell_discrete``
    A parked object that wakes up now and then: single events separated by
    exponential gaps with mean ``mean_gap``. Truth: not moving.
``machine_shake``
    A parked object shaken by nearby machinery: one event every ``period``
    seconds, displaced uniformly within ``amplitude`` per axis around
    ``center``. Truth: not moving.

Every kind adds i.i.d. Gaussian measurement noise with per-axis standard
deviation ``noise_sigma``. Generation never calls classifier code.
"""

from __future__ import annotations

import configparser
import csv
import math
import os
import zlib
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, fields
from typing import IO

import numpy as np

from .events import DeviceStream, EmptyInput, EventLog, PositionEvent

KINDS = ("route", "queue", "dwell_discrete", "machine_shake")
TRUTH = {"route": "moving", "queue": "moving", "dwell_discrete": "not_moving", "machine_shake": "not_moving"}

Vec3 = tuple[float, float, float]


class InvalidScenario(ValueError):
    pass


class DuplicateDevice(ValueError):
    pass


def _vec(v) -> Vec3:
    x, y, z = (float(c) for c in v)
    return (x, y, z)


@dataclass(frozen=True)
class Scenario:
    kind: str
    duration: float = 600.0
    noise_sigma: float = 0.0
    seed: int = 0
    start: float = 0.0
    center: Vec3 = (0.0, 0.0, 0.0)
    # route
    waypoints: tuple[Vec3, ...] = ((0.0, 0.0, 0.0), (100.0, 0.0, 0.0))
    speed: float = 1.0
    rate_hz: float = 1.0
    # queue
    step_length: float = 0.05
    step_period: float = 1.0
    direction: Vec3 = (1.0, 0.0, 0.0)
    queue_length: float = 0.0
    # dwell_discrete
    mean_gap: float = 120.0
    # machine_shake
    amplitude: float = 0.1
    period: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        object.__setattr__(self, "direction", _vec(self.direction))
        object.__setattr__(self, "waypoints", tuple(_vec(w) for w in self.waypoints))
        if self.kind not in KINDS:
            raise InvalidScenario(f"unknown scenario kind {self.kind!r}, expected one of {KINDS}")
        positive = {"duration": self.duration}
        if self.kind == "route":
            positive.update(speed=self.speed, rate_hz=self.rate_hz)
        elif self.kind == "queue":
            positive.update(step_length=self.step_length, step_period=self.step_period, rate_hz=self.rate_hz)
        elif self.kind == "dwell_discrete":
            positive.update(mean_gap=self.mean_gap)
        else:
            positive.update(period=self.period)
        for name, value in positive.items():
            if not (math.isfinite(value) and value > 0):
                raise InvalidScenario(f"{self.kind}: {name} must be positive, got {value!r}")
        for name in ("noise_sigma", "start", "queue_length", "amplitude"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidScenario(f"{name} must be finite and >= 0, got {value!r}")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise InvalidScenario(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.kind == "route":
            if len(self.waypoints) < 2 or _polyline_length(np.array(self.waypoints)) == 0:
                raise InvalidScenario("route needs at least two distinct waypoints")
        if self.kind == "queue" and not any(self.direction):
            raise InvalidScenario("queue direction must be non-zero")

    @property
    def truth(self) -> str:
        return TRUTH[self.kind]


@dataclass(frozen=True)
class LabeledEvent(PositionEvent):
    truth: str


def _polyline_length(points: np.ndarray) -> float:
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())


def _along_polyline(points: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Positions at arc length ``s``, bouncing back and forth between the ends."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    keep = seg > 0
    starts = points[:-1][keep]
    seg_vec = np.diff(points, axis=0)[keep]
    seg = seg[keep]
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    s = np.mod(s, 2 * total)
    s = np.where(s > total, 2 * total - s, s)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    frac = (s - cum[idx]) / seg[idx]
    return starts[idx] + frac[:, None] * seg_vec[idx]


def _rng(seed: int, device_id: str | None) -> np.random.Generator:
    entropy = [int(seed)]
    if device_id:
        entropy.append(zlib.crc32(device_id.encode("utf-8")))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _emission_times(scenario: Scenario, interval: float) -> np.ndarray:
    n = int(math.floor(scenario.duration / interval + 1e-9))
    return scenario.start + np.arange(n) * interval


def simulate(scenario: Scenario, device_id: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Positions (n, 3) and timestamps (n,) for one scenario.

    The random stream is seeded from ``scenario.seed`` and, when given,
    ``device_id``, so devices sharing a scenario still get distinct noise.
    """
    rng = _rng(scenario.seed, device_id)
    center = np.array(scenario.center)
    kind = scenario.kind
    if kind == "route":
        t = _emission_times(scenario, 1.0 / scenario.rate_hz)
        pos = _along_polyline(np.array(scenario.waypoints), (t - scenario.start) * scenario.speed)
    elif kind == "queue":
        t = _emission_times(scenario, 1.0 / scenario.rate_hz)
        steps = np.floor((t - scenario.start) / scenario.step_period + 1e-9)
        travel = steps * scenario.step_length
        if scenario.queue_length > 0:
            travel = np.mod(travel, scenario.queue_length)
        unit = np.array(scenario.direction) / np.linalg.norm(scenario.direction)
        pos = center + travel[:, None] * unit
    elif kind == "dwell_discrete":
        expected = scenario.duration / scenario.mean_gap
        gaps = rng.exponential(scenario.mean_gap, size=int(expected + 10 * math.sqrt(expected) + 20))
        arrivals = np.cumsum(gaps)
        while arrivals[-1] < scenario.duration:
            arrivals = np.concatenate([arrivals, arrivals[-1] + np.cumsum(rng.exponential(scenario.mean_gap, size=len(gaps)))])
        t = scenario.start + arrivals[arrivals < scenario.duration]
        pos = np.repeat(center[None, :], len(t), axis=0)
    else:
        t = _emission_times(scenario, scenario.period)
        pos = center + rng.uniform(-scenario.amplitude, scenario.amplitude, size=(len(t), 3))
    if scenario.noise_sigma > 0:
        pos = pos + rng.normal(0.0, scenario.noise_sigma, size=pos.shape)
    return np.ascontiguousarray(pos, dtype=np.float64), np.asarray(t, dtype=np.float64)


def generate(scenario: Scenario, device_id: str = "sim") -> list[LabeledEvent]:
    pos, t = simulate(scenario, device_id)
    truth = scenario.truth
    return [
        LabeledEvent(device_id, i + 1, (x, y, z), ti, truth)
        for i, ((x, y, z), ti) in enumerate(zip(pos.tolist(), t.tolist()))
    ]


@dataclass(frozen=True)
class DevicePlan:
    device_id: str
    scenario: Scenario
    offset: Vec3 = (0.0, 0.0, 0.0)


def compose(
    devices: Iterable[DevicePlan] | Iterable[tuple[str, Scenario]],
    offsets: Mapping[str, Vec3] | None = None,
) -> EventLog:
    """Build one log from per-device scenarios translated by layout offsets."""
    plans = [d if isinstance(d, DevicePlan) else DevicePlan(d[0], d[1]) for d in devices]
    if not plans:
        raise EmptyInput("no scenarios to compose")
    offsets = offsets or {}
    streams = {}
    for plan in plans:
        if plan.device_id in streams:
            raise DuplicateDevice(f"device {plan.device_id!r} appears twice")
        pos, t = simulate(plan.scenario, plan.device_id)
        offset = np.array(offsets.get(plan.device_id, plan.offset), dtype=np.float64)
        streams[plan.device_id] = DeviceStream(plan.device_id, pos + offset, t)
    return EventLog(streams)


def write_truth(log: EventLog, plans: Iterable[DevicePlan], dest: str | os.PathLike | IO[str]) -> None:
    """Sidecar CSV ``device_id,seq,truth`` for a composed log."""
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_truth(log, plans, fh)
        return
    truth = {p.device_id: p.scenario.truth for p in plans}
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(("device_id", "seq", "truth"))
    for stream in log:
        label = truth[stream.device_id]
        writer.writerows((stream.device_id, seq, label) for seq in range(1, stream.n + 1))


# ---------------------------------------------------------------------------
# scenario files and presets


@dataclass
class SimulationPlan:
    devices: list[DevicePlan] = field(default_factory=list)
    seed: int = 0
    format: str = "csv"


_FLOAT_KEYS = {f.name for f in fields(Scenario) if f.type in ("float", float)}
_VEC_KEYS = {"center", "direction"}
_PLAN_KEYS = {"count", "offset", "stagger", "spacing"}


def _parse_vec(text: str) -> Vec3:
    parts = text.replace(",", " ").split()
    if len(parts) != 3:
        raise InvalidScenario(f"expected three numbers, got {text!r}")
    return _vec(float(p) for p in parts)


def _section_plans(name: str, section: Mapping[str, str], seed: int) -> list[DevicePlan]:
    kwargs: dict = {"seed": seed}
    count, stagger = 1, 0.0
    offset: Vec3 = (0.0, 0.0, 0.0)
    spacing: Vec3 = (0.0, 0.0, 0.0)
    for key, raw in section.items():
        try:
            if key == "kind":
                kwargs["kind"] = raw.strip()
            elif key == "seed":
                kwargs["seed"] = int(raw)
            elif key == "waypoints":
                kwargs["waypoints"] = tuple(_parse_vec(w) for w in raw.split(";") if w.strip())
            elif key in _VEC_KEYS:
                kwargs[key] = _parse_vec(raw)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key == "count":
                count = int(raw)
            elif key == "stagger":
                stagger = float(raw)
            elif key == "offset":
                offset = _parse_vec(raw)
            elif key == "spacing":
                spacing = _parse_vec(raw)
            else:
                raise InvalidScenario(f"[{name}]: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, InvalidScenario):
                raise
            raise InvalidScenario(f"[{name}] {key}: {exc}") from None
    if "kind" not in kwargs:
        raise InvalidScenario(f"[{name}]: missing 'kind'")
    if count < 1:
        raise InvalidScenario(f"[{name}]: count must be >= 1")
    plans = []
    base_start = kwargs.get("start", 0.0)
    for i in range(count):
        device_id = name if count == 1 else f"{name}-{i:03d}"
        scenario = Scenario(**{**kwargs, "start": base_start + i * stagger})
        shifted = tuple(o + i * s for o, s in zip(offset, spacing))
        plans.append(DevicePlan(device_id, scenario, shifted))
    return plans


def parse_plan(text: str) -> SimulationPlan:
    """Parse an INI-style scenario file.

    A ``[simulation]`` section sets ``seed``, ``format`` or ``preset``; every
    ``[device NAME]`` section describes one device (or ``count`` replicas).
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidScenario(f"malformed scenario file: {exc}") from None
    sim = parser["simulation"] if parser.has_section("simulation") else {}
    try:
        seed = int(sim.get("seed", 0))
    except ValueError:
        raise InvalidScenario("simulation seed must be an integer") from None
    fmt = sim.get("format", "csv").strip()
    if fmt not in ("csv", "ndjson"):
        raise InvalidScenario(f"unknown output format {fmt!r}")
    if "preset" in sim:
        plan = preset(sim["preset"].strip(), seed)
        plan.format = fmt
        return plan
    plans = []
    for section in parser.sections():
        if section == "simulation":
            continue
        head, _, name = section.partition(" ")
        if head != "device" or not name.strip():
            raise InvalidScenario(f"unexpected section [{section}]")
        plans.extend(_section_plans(name.strip(), parser[section], seed))
    if not plans:
        raise InvalidScenario("scenario file defines no devices")
    ids = [p.device_id for p in plans]
    if len(set(ids)) != len(ids):
        raise DuplicateDevice("scenario file defines a device id twice")
    return SimulationPlan(plans, seed, fmt)


def load_plan(path: str | os.PathLike) -> SimulationPlan:
    with open(path, encoding="utf-8") as fh:
        return parse_plan(fh.read())


def scenario_recovery_plan(seed: int = 0) -> SimulationPlan:
    """One device per expected class, laid out apart from each other."""
    devices = [
        DevicePlan("route", Scenario("route", duration=600, noise_sigma=0.1, seed=seed,
                                     waypoints=((0, 0, 0), (40, 0, 0), (40, 20, 0)))),
        DevicePlan("dwell", Scenario("dwell_discrete", duration=36000, mean_gap=120, noise_sigma=0.1, seed=seed,
                                     center=(10, 40, 0))),
        DevicePlan("queue", Scenario("queue", duration=600, step_length=0.05, step_period=1.0, noise_sigma=0.1,
                                     seed=seed, center=(50, 40, 0))),
        DevicePlan("shake", Scenario("machine_shake", duration=36000, period=60.0, amplitude=2.0, noise_sigma=2.0,
                                     seed=seed, center=(80, 40, 0))),
    ]
    return SimulationPlan(devices, seed)


def demo_hall(seed: int = 0) -> SimulationPlan:
    """A small hall: a transport route, parked devices, a queue and a noisy corner."""
    devices = []
    corridor = ((0, 10, 0), (60, 10, 0), (60, 40, 0))
    for i in range(6):
        devices.append(DevicePlan(f"route-{i}", Scenario("route", duration=1800, noise_sigma=0.1, seed=seed,
                                                          start=i * 300.0, waypoints=corridor)))
    for i in range(10):
        spot = (8.0 + 4 * (i % 5), 22.0 + 4 * (i // 5), 0.0)
        devices.append(DevicePlan(f"parked-{i}", Scenario("dwell_discrete", duration=86400, mean_gap=120,
                                                           noise_sigma=0.3, seed=seed, center=spot)))
    for i in range(4):
        devices.append(DevicePlan(f"queue-{i}", Scenario("queue", duration=400, step_length=0.05, noise_sigma=0.1,
                                                          seed=seed, start=i * 400.0, center=(30, 30, 0),
                                                          direction=(0, 1, 0))))
    for i in range(3):
        devices.append(DevicePlan(f"corner-{i}", Scenario("machine_shake", duration=86400, period=60.0,
                                                           amplitude=2.0, noise_sigma=2.0, seed=seed,
                                                           center=(85, 45, 0))))
    return SimulationPlan(devices, seed)


def paper_scale(seed: int = 0) -> SimulationPlan:
    """401 devices and roughly 3.54 million events."""
    corridors = [
        ((5, 10, 0), (195, 10, 0)),
        ((5, 50, 0), (195, 50, 0)),
        ((20, 5, 0), (20, 95, 0), (120, 95, 0)),
        ((100, 5, 0), (100, 90, 0), (180, 90, 0)),
    ]
    devices = []
    for i in range(200):
        devices.append(DevicePlan(f"r{i:03d}", Scenario("route", duration=10800, speed=1.0 + 0.5 * (i % 3),
                                                         noise_sigma=0.3, seed=seed, start=37.0 * i,
                                                         waypoints=corridors[i % 4])))
    for i in range(80):
        lane = (130.0 + 6 * (i % 8), 20.0 + 2 * (i // 8), 0.0)
        devices.append(DevicePlan(f"q{i:03d}", Scenario("queue", duration=10800, step_length=0.05, step_period=1.0,
                                                         queue_length=15.0, noise_sigma=0.2, seed=seed,
                                                         start=13.0 * i, center=lane, direction=(0, 1, 0))))
    for i in range(40):
        spot = (40.0 + 3 * (i % 10), 70.0 + 3 * (i // 10), 0.0)
        devices.append(DevicePlan(f"m{i:03d}", Scenario("machine_shake", duration=10800, period=1.0, amplitude=0.3,
                                                         noise_sigma=0.1, seed=seed, center=spot)))
    for i in range(81):
        spot = (30.0 + 2 * (i % 27), 20.0 + 3 * (i // 27), 0.0)
        devices.append(DevicePlan(f"d{i:03d}", Scenario("dwell_discrete", duration=604800, mean_gap=600,
                                                         noise_sigma=0.5 if i % 3 else 2.5, seed=seed, center=spot)))
    return SimulationPlan(devices, seed)


PRESETS = {"paper-scale": paper_scale, "demo-hall": demo_hall, "recovery": scenario_recovery_plan}


def preset(name: str, seed: int = 0) -> SimulationPlan:
    try:
        return PRESETS[name](seed)
    except KeyError:
        raise InvalidScenario(f"unknown preset {name!r}, choose from {sorted(PRESETS)}") from None
