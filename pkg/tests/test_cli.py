import csv
import re

import pytest

from ipsclass.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def recovery(tmp_path_factory):
    out = tmp_path_factory.mktemp("recovery")
    assert main(["simulate", "--preset", "recovery", "--seed", "5", "--out", str(out)]) == 0
    return out


def shares(summary, device):
    line = next(l for l in summary.splitlines() if l.split()[0] == device)
    n, c1, c2, c3, c4, unfused = map(int, line.split()[1:])
    return [c / (n - unfused) for c in (c1, c2, c3, c4)]


def test_classify_summary(recovery, capsys, tmp_path):
    code, out, _ = run(capsys, "classify", recovery / "events.csv", "--out", tmp_path)
    assert code == 0
    route, dwell = shares(out, "route"), shares(out, "dwell")
    assert route[0] == max(route) and route[0] > 0.9
    assert dwell[3] == max(dwell) and dwell[3] > 0.9
    assert (tmp_path / "labels.csv").exists()


def test_missing_input(capsys, tmp_path):
    code, _, err = run(capsys, "classify", tmp_path / "nope.csv")
    assert code == 1 and "nope.csv" in err


def test_strict_parse_abort(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("device_id,x,y,z,t\na,0,0,0,1\na,oops,0,0,2\n")
    assert run(capsys, "classify", bad, "--strict", "--out", tmp_path)[0] == 1
    assert run(capsys, "classify", bad, "--out", tmp_path)[0] == 0


def test_invalid_config(capsys, tmp_path, recovery):
    assert run(capsys, "grid", recovery / "events.csv", "--cell-size", "0", "--out", tmp_path)[0] == 2
    assert run(capsys, "classify", recovery / "events.csv", "--k", "0", "--out", tmp_path)[0] == 2
    assert run(capsys, "classify", recovery / "events.csv", "--r", "-1", "--out", tmp_path)[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["classify"])
    assert info.value.code == 2


def test_grid_outputs(capsys, tmp_path, recovery):
    code, out, _ = run(capsys, "grid", recovery / "events.csv", "--out", tmp_path)
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "grid.csv")))
    assert list(rows[0]) == ["ix", "iy", "n_class1", "n_class2", "n_class3", "n_class4", "n_unfused", "dominant", "tie_flag"]
    assert (tmp_path / "map.svg").read_text().startswith("<?xml")


def test_sparse_log_gives_all_grey_map(capsys, tmp_path):
    events = tmp_path / "sparse.csv"
    rows = [f"d{i},{3 * i}.5,0.5,0,{j}" for i in range(4) for j in range(15)]
    events.write_text("device_id,x,y,z,t\n" + "\n".join(rows) + "\n")
    assert run(capsys, "grid", events, "--out", tmp_path)[0] == 0
    dominants = [r["dominant"] for r in csv.DictReader(open(tmp_path / "grid.csv"))]
    # 15 events per device, 10 burn-in: 5 fused events per cell
    assert dominants and all(dominants)
    assert run(capsys, "grid", events, "--min-events", "6", "--out", tmp_path)[0] == 0
    dominants = [r["dominant"] for r in csv.DictReader(open(tmp_path / "grid.csv"))]
    assert not any(dominants)
    svg = (tmp_path / "map.svg").read_text()
    assert set(re.findall(r'class="cell"[^>]*fill="(#\w+)"', svg)) == {"#c0c0c0"}


def test_tune(capsys, tmp_path, recovery):
    code, _, _ = run(capsys, "tune", recovery / "events.csv", "--device", "queue", "--out", tmp_path)
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "tune_queue.csv")))
    assert {r["kind"] for r in rows} == {"mscw", "time_diff"}
    assert (tmp_path / "tune_queue_mscw.svg").exists() and (tmp_path / "tune_queue_time_diff.svg").exists()


def test_tune_unknown_device(capsys, tmp_path, recovery):
    code, _, err = run(capsys, "tune", recovery / "events.csv", "--device", "ghost", "--out", tmp_path)
    assert code == 2 and "ghost" in err


def test_tune_short_stream_warns(capsys, caplog, tmp_path):
    events = tmp_path / "short.csv"
    events.write_text("device_id,x,y,z,t\na,0,0,0,1\na,1,0,0,2\n")
    code, _, _ = run(capsys, "tune", events, "--device", "a", "--out", tmp_path)
    assert code == 0 and "window" in caplog.text
    assert len(list(csv.DictReader(open(tmp_path / "tune_a.csv")))) == 0


def test_simulate_repeatable(capsys, tmp_path):
    for d in ("a", "b"):
        assert run(capsys, "simulate", "--preset", "demo-hall", "--seed", "9", "--out", tmp_path / d)[0] == 0
    for name in ("events.csv", "truth.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_malformed_config(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[device a]\nkind = route\nspeed = -3\n")
    assert run(capsys, "simulate", "--config", cfg, "--out", tmp_path)[0] == 2
    assert run(capsys, "simulate", "--preset", "nope", "--out", tmp_path)[0] == 2


def test_simulate_ndjson_from_config(capsys, tmp_path):
    from pathlib import Path

    cfg = Path(__file__).parents[1] / "scenarios" / "example.ini"
    assert run(capsys, "simulate", "--config", cfg, "--format", "ndjson", "--out", tmp_path)[0] == 0
    assert run(capsys, "classify", tmp_path / "events.ndjson", "--out", tmp_path)[0] == 0


def test_staged_equals_fused(capsys, tmp_path, recovery):
    staged, fused = tmp_path / "staged", tmp_path / "fused"
    assert run(capsys, "classify", recovery / "events.csv", "--out", staged)[0] == 0
    assert run(capsys, "grid", "--labels", staged / "labels.csv", "--out", staged)[0] == 0
    assert run(capsys, "grid", recovery / "events.csv", "--out", fused)[0] == 0
    for name in ("grid.csv", "map.svg", "grid_meta.json"):
        assert (staged / name).read_bytes() == (fused / name).read_bytes()


def test_render_from_grid_csv(capsys, tmp_path, recovery):
    assert run(capsys, "grid", recovery / "events.csv", "--out", tmp_path)[0] == 0
    original = (tmp_path / "map.svg").read_bytes()
    assert run(capsys, "render", tmp_path / "grid.csv", "--out", tmp_path / "r")[0] == 0
    assert (tmp_path / "r" / "map.svg").read_bytes() == original


def test_jobs_do_not_change_output(capsys, tmp_path, recovery):
    for jobs in ("1", "3"):
        assert run(capsys, "classify", recovery / "events.csv", "--jobs", jobs, "--out", tmp_path / jobs)[0] == 0
    assert (tmp_path / "1" / "labels.csv").read_bytes() == (tmp_path / "3" / "labels.csv").read_bytes()
