import io

import numpy as np
import pytest

from ipsclass import distance, grid, timing
from ipsclass.events import EmptyInput, write_log
from ipsclass.synth import (
    DevicePlan,
    DuplicateDevice,
    InvalidScenario,
    Scenario,
    compose,
    demo_hall,
    generate,
    load_plan,
    parse_plan,
    preset,
    simulate,
    write_truth,
)


def point_to_polyline(p, waypoints):
    best = np.inf
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        a, b = np.array(a, float), np.array(b, float)
        u = np.clip(np.dot(p - a, b - a) / np.dot(b - a, b - a), 0, 1)
        best = min(best, np.linalg.norm(p - (a + u * (b - a))))
    return best


def test_route_kinematics():
    events = generate(Scenario("route", duration=60, speed=1.0, rate_hz=1.0, noise_sigma=0.0))
    assert len(events) == 60
    pos = np.array([e.pos for e in events])
    np.testing.assert_allclose(np.linalg.norm(np.diff(pos, axis=0), axis=1), 1.0, atol=1e-12)
    assert np.all(pos[:, 1:] == 0)
    assert [e.seq for e in events] == list(range(1, 61))
    assert {e.truth for e in events} == {"moving"}


def test_noise_free_route_stays_on_polyline():
    wp = ((0, 0, 0), (10, 0, 0), (10, 7, 2), (3, 7, 2))
    pos, _ = simulate(Scenario("route", duration=200, speed=1.3, rate_hz=2.0, waypoints=wp))
    assert max(point_to_polyline(p, wp) for p in pos) < 1e-9


def test_dwell_count_matches_expected_rate():
    # Poisson arrivals: expected count is duration / mean gap
    counts = [len(simulate(Scenario("dwell_discrete", duration=1200, mean_gap=120, seed=s))[1]) for s in range(300)]
    assert abs(np.mean(counts) - 10.0) < 0.6
    pos, t = simulate(Scenario("dwell_discrete", duration=1200, mean_gap=120, seed=3, center=(5, 5, 0)))
    assert np.all(pos == [5, 5, 0]) and np.all(np.diff(t) > 0) and t[-1] < 1200


def test_queue_staircase():
    pos, t = simulate(Scenario("queue", duration=20, step_length=0.5, step_period=4, rate_hz=1))
    assert len(t) == 20
    assert pos[:, 0].tolist() == [0.5 * (i // 4) for i in range(20)]


def test_queue_wraps():
    pos, _ = simulate(Scenario("queue", duration=100, step_length=1.0, queue_length=10))
    assert pos[:, 0].max() < 10


def test_machine_shake_is_zero_mean():
    pos, t = simulate(Scenario("machine_shake", duration=20000, period=1, amplitude=2.0, seed=4, center=(1, 2, 3)))
    assert np.allclose(pos.mean(axis=0), [1, 2, 3], atol=0.05)
    assert np.all(np.abs(pos - [1, 2, 3]) <= 2.0)
    assert np.all(np.diff(t) == 1.0)


def test_noise_sigma():
    pos, _ = simulate(Scenario("queue", duration=20000, step_length=1e-9, noise_sigma=0.3, seed=5))
    assert np.allclose(pos.std(axis=0), 0.3, rtol=0.05)


def test_same_seed_same_sequence():
    sc = Scenario("machine_shake", duration=300, amplitude=1, noise_sigma=0.2, seed=11)
    assert generate(sc) == generate(sc)
    assert generate(sc, "a") != generate(sc, "b")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="teleport"),
        dict(kind="route", duration=0),
        dict(kind="route", speed=-1),
        dict(kind="route", waypoints=((1, 1, 1), (1, 1, 1))),
        dict(kind="queue", step_period=0),
        dict(kind="dwell_discrete", mean_gap=0),
        dict(kind="machine_shake", period=-5),
        dict(kind="route", noise_sigma=-0.1),
        dict(kind="route", seed=-1),
    ],
)
def test_invalid_scenario(kwargs):
    with pytest.raises(InvalidScenario):
        Scenario(**kwargs)


def test_compose_with_offsets():
    sc = Scenario("machine_shake", duration=100, amplitude=1.0)
    log = compose([("a", sc), ("b", sc)], {"a": (0, 0, 0), "b": (50, 0, 0)})
    assert log.device_count == 2
    assert log["a"].pos[:, 0].max() < log["b"].pos[:, 0].min()


def test_compose_errors():
    sc = Scenario("route")
    with pytest.raises(EmptyInput):
        compose([])
    with pytest.raises(DuplicateDevice):
        compose([("a", sc), ("a", sc)])


def test_seeded_logs_serialize_identically():
    def dump(seed):
        buf = io.StringIO()
        write_log(compose(demo_hall(seed).devices), buf)
        return buf.getvalue()

    assert dump(3) == dump(3)
    assert dump(3) != dump(4)


def test_generation_never_calls_classifiers(monkeypatch):
    def boom(*args, **kwargs):
        raise AssertionError("classifier used during generation")

    for module, name in [(distance, "mscw"), (distance, "classify_distance"), (timing, "time_diffs"),
                         (timing, "classify_time"), (grid, "fuse_labels"), (grid, "build_grid")]:
        monkeypatch.setattr(module, name, boom)
    compose(demo_hall(0).devices)


def test_truth_sidecar():
    plans = [DevicePlan("r", Scenario("route", duration=3)), DevicePlan("d", Scenario("machine_shake", duration=2))]
    log = compose(plans)
    buf = io.StringIO()
    write_truth(log, plans, buf)
    assert buf.getvalue().splitlines() == [
        "device_id,seq,truth", "d,1,not_moving", "d,2,not_moving", "r,1,moving", "r,2,moving", "r,3,moving",
    ]


def test_example_scenario_file():
    from pathlib import Path

    plan = load_plan(Path(__file__).parents[1] / "scenarios" / "example.ini")
    ids = [d.device_id for d in plan.devices]
    assert ids[:3] == ["forklift-000", "forklift-001", "forklift-002"]
    assert len(ids) == 10 and plan.seed == 7
    assert plan.devices[1].scenario.start == 300
    assert plan.devices[4].offset == (4.0, 0.0, 0.0)
    assert plan.devices[0].scenario.waypoints[1] == (60.0, 10.0, 0.0)


@pytest.mark.parametrize(
    "text",
    [
        "[device a]\nspeed = 1\n",
        "[device a]\nkind = route\nspeed = fast\n",
        "[device a]\nkind = route\nwobble = 3\n",
        "[gadget a]\nkind = route\n",
        "[simulation]\nseed = 1\n",
        "[device a\nkind = route",
        "[simulation]\npreset = nope\n",
        "[device a]\nkind = route\ncenter = 1 2\n",
    ],
)
def test_malformed_scenario_text(text):
    with pytest.raises(InvalidScenario):
        parse_plan(text)


def test_preset_from_file():
    plan = parse_plan("[simulation]\npreset = demo-hall\nseed = 2\nformat = ndjson\n")
    assert plan.format == "ndjson" and len(plan.devices) == len(preset("demo-hall").devices)
