"""Monte-Carlo runner: determinism, parallelism, and result emission."""

import math
import os

import pytest

from ecomp import scenario_from_mapping
from ecomp.runner import (RESULT_COLUMNS, ResultRow, ResultTable,
                          emit_results, parse_results, run_scenario)


def _micro_scenario(**overrides):
    mapping = {
        "kind": "two_cell_sweep",
        "sum_energy": "20",
        "sweep_points": "3",
        "betas": "0, 0.7, 1",
        "cross_gain": "0.5",
        "n_realizations": "4",
        "seed": "7",
    }
    mapping.update(overrides)
    return scenario_from_mapping(mapping)


def _as_tuples(table):
    return [row.as_tuple() for row in table.rows]


def test_runs_are_deterministic():
    sc = _micro_scenario()
    t1 = run_scenario(sc)
    t2 = run_scenario(sc)
    assert _as_tuples(t1) == _as_tuples(t2)
    assert not t1.errors


def test_worker_count_does_not_change_results(monkeypatch):
    sc = _micro_scenario()
    monkeypatch.setenv("ECOMP_WORKERS", "1")
    serial = run_scenario(sc)
    monkeypatch.setenv("ECOMP_WORKERS", "2")
    parallel = run_scenario(sc)
    assert _as_tuples(serial) == _as_tuples(parallel)


def test_rows_cover_every_point_and_scheme_in_order():
    sc = _micro_scenario()
    table = run_scenario(sc)
    # 3 sweep points x 3 beta values, grouped by point in grid order
    assert len(table) == 9
    keys = [row.sweep_key for row in table.rows]
    assert keys == ["0"] * 3 + ["10"] * 3 + ["20"] * 3
    betas = [row.beta for row in table.rows[:3]]
    assert betas == [0.0, 0.7, 1.0]
    for row in table.rows:
        assert row.n == sc.n_realizations
        assert math.isfinite(row.mean_rate) and row.stderr >= 0.0


def test_random_energy_scenario_runs_all_schemes():
    sc = scenario_from_mapping({
        "kind": "two_cell_random",
        "energy_db": "0, 10",
        "beta": "0.9",
        "schemes": "joint, comm_only, energy_only, none",
        "n_realizations": "3",
        "seed": "11",
    })
    table = run_scenario(sc)
    assert len(table) == 8
    labels = {row.scheme for row in table.rows}
    assert labels == {"joint@0.9", "comm_only", "energy_only@0.9", "none"}
    assert not table.errors


def test_profile_scenario_reports_slots_and_hours():
    sc = scenario_from_mapping({
        "kind": "three_cell_profile",
        "profile": "bundled",
        "ebar_dbw": "10",
        "mixes": "0.5:0.5; 0.5:0.5; 0.5:0.5",
        "beta": "0.9",
        "schemes": "joint",
        "slot_stride": "48",
        "n_realizations": "1",
        "seed": "3",
    })
    table = run_scenario(sc)
    assert len(table) >= 2
    slots = [row.slot for row in table.rows]
    assert slots == sorted(slots) and slots[0] == 0
    hours = [float(row.sweep_key) for row in table.rows]
    assert hours == sorted(hours)


def test_csv_round_trip(tmp_path):
    table = run_scenario(_micro_scenario())
    path = tmp_path / "out.csv"
    emit_results(table, path, fmt="csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(RESULT_COLUMNS)
    back = parse_results(path)
    assert len(back) == len(table)
    for a, b in zip(back.rows, table.rows):
        assert a.sweep_key == b.sweep_key
        assert a.scheme == b.scheme
        assert a.mean_rate == pytest.approx(b.mean_rate, rel=1e-8)
        assert (a.slot, a.n) == (b.slot, b.n)


def test_jsonl_emission(tmp_path):
    import json

    table = run_scenario(_micro_scenario())
    path = tmp_path / "out.jsonl"
    emit_results(table, path, fmt="jsonl")
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(records) == len(table)
    assert set(records[0]) == set(RESULT_COLUMNS)
    assert records[0]["n"] == 4


def test_unknown_format_rejected(tmp_path):
    with pytest.raises(ValueError, match="format"):
        emit_results(ResultTable(), tmp_path / "out.bin", fmt="bin")


def test_unwritable_path_raises_oserror(tmp_path):
    with pytest.raises(OSError, match="cannot write"):
        emit_results(ResultTable(), tmp_path / "missing" / "out.csv")


def test_parse_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="header"):
        parse_results(path)


def test_golden_micro_scenario_is_pinned(tmp_path):
    """Byte-for-byte output lock against tests/data/golden_micro.csv."""
    golden = os.path.join(os.path.dirname(__file__), "data", "golden_micro.csv")
    table = run_scenario(_micro_scenario())
    path = tmp_path / "fresh.csv"
    emit_results(table, path, fmt="csv")
    with open(golden) as fh:
        assert path.read_text() == fh.read()
