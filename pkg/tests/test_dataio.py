import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relayrank.dataio import (
    read_curves_csv,
    read_race_csv,
    read_rmse_csv,
    write_curves_csv,
    write_race_csv,
    write_rmse_csv,
)
from relayrank.errors import ParseError, ValidationError
from relayrank.evaluation import CurveRow, RmseEntry, RmseReport
from relayrank.simulator import RaceTable, SimConfig, simulate_race


def small_race(seed=0, n=30, m=3):
    return simulate_race(SimConfig.from_lists(n, [4.5] * m, [0.2] * m, seed=seed))


def test_minimal_file(tmp_path):
    p = tmp_path / "race.csv"
    p.write_text("team_id,leg_1,place\n1,61.5,2\n2,60.0,1\n", encoding="utf-8")
    t = read_race_csv(p)
    assert t.n == 2 and t.m == 1
    assert sorted(t.places) == [1, 2]
    assert list(t.team_ids) == [1, 2]


def test_duplicate_place(tmp_path):
    p = tmp_path / "race.csv"
    p.write_text("team_id,leg_1,place\n1,61.5,1\n2,60.0,1\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="duplicate place"):
        read_race_csv(p)


def test_nonpositive_leg(tmp_path):
    p = tmp_path / "race.csv"
    p.write_text("team_id,leg_1,place\n1,0,1\n2,60.0,2\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="line 2"):
        read_race_csv(p)


@pytest.mark.parametrize(
    "body,line",
    [
        ("team_id,leg_1,place\n1,61.5\n", 2),
        ("team_id,leg_1,place\n1,60,1\n2,abc,2\n", 3),
        ("team_id,leg_1,place\n1,60,1\n2,61,x\n", 3),
        ("team,leg_1,place\n1,60,1\n", 1),
        ("", 1),
    ],
)
def test_parse_errors_carry_line(tmp_path, body, line):
    p = tmp_path / "race.csv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(ParseError) as info:
        read_race_csv(p)
    assert info.value.line == line


def test_changeovers_recomputed(tmp_path):
    p = tmp_path / "race.csv"
    p.write_text("team_id,leg_1,leg_2,place\n7,10,20,2\n9,5,6,1\n", encoding="utf-8")
    t = read_race_csv(p)
    assert np.array_equal(t.changeover_times, [[10, 30], [5, 11]])
    assert list(t.team_ids) == [7, 9]


def test_roundtrip_and_bytes(tmp_path):
    t = small_race()
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    write_race_csv(t, a)
    write_race_csv(t, b)
    assert a.read_bytes() == b.read_bytes()
    back = read_race_csv(a)
    assert np.array_equal(back.places, t.places)
    np.testing.assert_allclose(back.leg_times, t.leg_times, rtol=5e-9, atol=0)
    write_race_csv(back, c)
    assert c.read_bytes() == a.read_bytes()


def test_file_format(tmp_path):
    p = tmp_path / "race.csv"
    write_race_csv(RaceTable.from_leg_times([[61.123456789123, 1.0], [60.0, 2.5]]), p)
    raw = p.read_bytes()
    assert b"\r" not in raw
    assert raw.decode("utf-8").splitlines() == [
        "team_id,leg_1,leg_2,place",
        "1,61.1234568,1,1",
        "2,60,2.5,2",
    ]


def test_refuses_empty(tmp_path):
    with pytest.raises(ValidationError):
        write_race_csv(None, tmp_path / "x.csv")


@given(st.integers(0, 2**32), st.integers(2, 40), st.integers(1, 5))
@settings(max_examples=25, deadline=None)
def test_roundtrip_property(tmp_path_factory, seed, n, m):
    t = small_race(seed, n, m)
    p = tmp_path_factory.mktemp("rt") / "race.csv"
    write_race_csv(t, p)
    back = read_race_csv(p)
    assert np.array_equal(back.places, t.places)
    np.testing.assert_allclose(back.leg_times, t.leg_times, rtol=5e-9, atol=0)


def test_rmse_roundtrip(tmp_path):
    report = RmseReport(
        [
            RmseEntry("fwos", 1, 0.8, 12.345678901234567, 331),
            RmseEntry("gp", 1, 0.8, float("nan"), 331, "IllConditionedError: x"),
        ]
    )
    p = tmp_path / "rmse.csv"
    write_rmse_csv(report, p)
    assert p.read_text(encoding="utf-8").splitlines()[0] == "model_name,leg_index,train_fraction,rmse"
    back = read_rmse_csv(p)
    assert back.entries[0].rmse == 12.345678901234567
    assert back.entries[0].ok and not back.entries[1].ok


def test_curves(tmp_path):
    rows = [CurveRow(300.0 + i, i + 1, {"ols": i, "fwos": i + 1}) for i in range(5)]
    p = tmp_path / "curves.csv"
    write_curves_csv(4, rows, p, ["ols", "fwos"])
    leg, back = read_curves_csv(p)
    assert leg == 4 and len(back) == 5
    assert back == rows


def test_curves_missing_model_cell(tmp_path):
    rows = [CurveRow(1.0, 1, {"fwos": 1}), CurveRow(2.0, 2, {"fwos": 2})]
    p = tmp_path / "curves.csv"
    write_curves_csv(1, rows, p, ["gp", "fwos"])
    assert p.read_text().splitlines()[1] == "1,1,1,,1"


def test_curves_must_be_sorted(tmp_path):
    rows = [CurveRow(2.0, 1, {}), CurveRow(1.0, 2, {})]
    with pytest.raises(ValidationError):
        write_curves_csv(1, rows, tmp_path / "c.csv")
