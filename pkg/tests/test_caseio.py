import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distmarket.caseio import (
    dlmp_table,
    embedded_case,
    export_results,
    parse_case,
    read_case,
    serialize_case,
    sweep_table,
    write_case,
)
from distmarket.clearing import clear_horizon, sweep_assigned_power
from distmarket.errors import InvalidCase, ParseError
from distmarket.settlement import settle

from helpers import random_case, three_bus

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = Path(__file__).parent / "golden" / "three_bus"


def doc(**changes):
    d = json.loads(serialize_case(three_bus()))
    d.update(changes)
    return json.dumps(d)


def test_embedded_case_facts():
    case = embedded_case()
    net = case.network
    assert len(net.buses) == 13 and len(net.lines) == 12
    assert {b.id for b in net.buses if b.is_proactive} == {2, 3, 5, 6, 7, 10, 11, 12, 13}
    assert net.root == 1 and case.horizon == 24
    assert "SYNTHETIC" in case.comment


def test_embedded_data_matches_build_script():
    script = ROOT / "scripts" / "build_embedded_case.py"
    assert subprocess.run([sys.executable, str(script), "--check"]).returncode == 0


def test_round_trip_is_byte_stable():
    text = serialize_case(embedded_case())
    assert serialize_case(parse_case(text)) == text
    golden = (GOLDEN / "case.json").read_text()
    assert serialize_case(parse_case(golden)) == golden


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_round_trip_random(seed, horizon):
    case = random_case(np.random.default_rng(seed), horizon=horizon)
    text = serialize_case(case)
    again = parse_case(text)
    assert again == case
    assert serialize_case(again) == text


def test_duplicate_bus_names_the_id():
    d = json.loads(serialize_case(three_bus()))
    d["buses"].append({"id": 2})
    with pytest.raises(InvalidCase) as info:
        parse_case(json.dumps(d))
    assert any(v.kind == "duplicate_bus" and "2" in v.message for v in info.value.violations)


def test_profile_length():
    d = json.loads(serialize_case(embedded_case()))
    d["tlmp"] = d["tlmp"][:23]
    with pytest.raises(InvalidCase, match="profile length"):
        parse_case(json.dumps(d))


def test_unknown_field_has_location():
    d = json.loads(serialize_case(three_bus()))
    d["buses"][1]["bids"] = []
    with pytest.raises(ParseError) as info:
        parse_case(json.dumps(d))
    assert any("buses[1]" in e and "bids" in e for e in info.value.errors)
    with pytest.raises(ParseError, match="extra"):
        parse_case(doc(extra=1))


def test_syntax_error_has_line():
    with pytest.raises(ParseError, match="line 2"):
        parse_case('{\n  "schema_version": ,\n}')


@pytest.mark.parametrize(
    "changes, where",
    [
        ({"units": {"power": "kW", "price": "$/MWh"}}, "units"),
        ({"schema_version": "2"}, "schema_version"),
        ({"mode": "fast"}, "mode"),
        ({"tlmp": ["x"]}, "tlmp"),
    ],
)
def test_field_errors(changes, where):
    with pytest.raises(ParseError, match=where):
        parse_case(doc(**changes))


def test_missing_root():
    d = json.loads(serialize_case(three_bus()))
    del d["buses"][0]["root"]
    with pytest.raises(InvalidCase, match="root"):
        parse_case(json.dumps(d))


def test_file_io(tmp_path):
    path = tmp_path / "c.json"
    write_case(three_bus(), path)
    assert read_case(path) == three_bus()


def test_dlmp_table_shapes():
    case = three_bus()
    assert len(dlmp_table(clear_horizon(case)).splitlines()) == 1 + 3
    big = dlmp_table(clear_horizon(embedded_case()))
    assert len(big.splitlines()) == 1 + 24 * 13


def test_sweep_table_columns():
    points = sweep_assigned_power(three_bus(), 0, [2.0, 4.0])
    lines = sweep_table(points).splitlines()
    assert lines[0] == "assigned_power_mw,avg_dlmp,flag"
    assert lines[1].split(",")[:2] == ["2.000000", "40.0000"]


def test_no_negative_zero_in_exports(tmp_path):
    case = three_bus(assigned=0.0)
    results = clear_horizon(case)
    export_results(results, settle(results, case), tmp_path, case=case)
    for f in tmp_path.iterdir():
        assert "-0.0" not in f.read_text()


def test_three_bus_export_matches_golden(tmp_path):
    case = parse_case((GOLDEN / "case.json").read_text())
    results = clear_horizon(case)
    sweep = sweep_assigned_power(case, 0, [2.0, 4.0, 8.0, 13.0, 14.0])
    written = export_results(results, settle(results, case), tmp_path, case=case, sweep=sweep)
    assert sorted(p.name for p in written) == ["dlmp.csv", "flows.csv", "settlement.csv", "sweep.csv"]
    for path in written:
        assert path.read_bytes() == (GOLDEN / path.name).read_bytes(), path.name


def test_export_is_deterministic(tmp_path):
    case = embedded_case()
    for sub in ("a", "b"):
        results = clear_horizon(case, parallel=sub == "b")
        export_results(results, settle(results, case), tmp_path / sub, case=case)
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
