import numpy as np
import pandas as pd
import pytest

from src.analysis import (
    SWEEP_COLUMNS,
    feasible_fraction,
    feasible_regions,
    format_number,
    inclusion_violations,
    load_table,
    parse_snapshot,
    region_sizes,
    rows_to_frame,
    save_table,
)


def _frame(points):
    """points: {snapshot: [(alpha, beta, rational), ...]}"""
    rows = [
        ("pd", snapshot, alpha, beta, rational, None, None)
        for snapshot, cells in points.items()
        for alpha, beta, rational in cells
    ]
    return rows_to_frame(rows, SWEEP_COLUMNS)


class TestFormatNumber:
    @pytest.mark.parametrize(
        "value,expected",
        [(None, ""), (True, "true"), (np.bool_(False), "false"), (3, "3"), (0.1 + 0.2, "0.3"),
         (float("inf"), "inf"), (float("nan"), ""), (1 / 3, "0.333333333333")],
    )
    def test_values(self, value, expected):
        assert format_number(value) == expected


class TestTables:
    def test_header_and_cells(self, tmp_path):
        path = tmp_path / "out" / "sweep.csv"
        save_table(_frame({"b=4;c=1": [(0.5, 0.5, True)]}), str(path))
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == ",".join(SWEEP_COLUMNS)
        assert lines[1] == "pd,b=4;c=1,0.5,0.5,true,,"

    def test_stdout(self, capsys):
        save_table(_frame({"b=4;c=1": [(0, 1, False)]}))
        assert capsys.readouterr().out.splitlines()[1] == "pd,b=4;c=1,0,1,false,,"

    def test_load_back(self, tmp_path):
        path = str(tmp_path / "sweep.csv")
        save_table(_frame({"b=4;c=1": [(0.5, 0.5, True), (0.25, 0.5, False)]}), path)
        frame = load_table(path)
        assert frame["rational"].tolist() == [True, False]
        assert frame["param_snapshot"].tolist() == ["b=4;c=1"] * 2


class TestRegions:
    def test_sizes_and_fraction(self):
        frame = _frame({
            "b=2;c=1": [(0.5, 0.5, False), (1, 1, True)],
            "b=4;c=1": [(0.5, 0.5, True), (1, 1, True)],
        })
        assert feasible_regions(frame)["b=2;c=1"] == frozenset({(1.0, 1.0)})
        assert region_sizes(frame).to_dict() == {"b=2;c=1": 1, "b=4;c=1": 2}
        assert feasible_fraction(frame) == 0.75

    def test_parse_snapshot(self):
        assert parse_snapshot("n=3;rho=0.6") == {"n": 3.0, "rho": 0.6}

    def test_monotone_sweep_has_no_violations(self):
        frame = _frame({
            "b=2;c=1": [(0.5, 0.5, False), (1, 1, True)],
            "b=4;c=1": [(0.5, 0.5, True), (1, 1, True)],
        })
        assert inclusion_violations(frame, "b", "grow") == []

    def test_planted_violation(self):
        frame = _frame({
            "b=2;c=1": [(0.5, 0.5, True), (1, 1, True)],
            "b=4;c=1": [(0.5, 0.5, False), (1, 1, True)],
        })
        violations = inclusion_violations(frame, "b", "grow")
        assert violations == [{"from": "b=2;c=1", "to": "b=4;c=1", "missing": [(0.5, 0.5)]}]
        assert inclusion_violations(frame, "b", "shrink") == []

    def test_groups_by_other_parameters(self):
        frame = _frame({
            "b=2;c=1": [(1, 1, True)],
            "b=4;c=0.5": [(1, 1, False)],
        })
        assert inclusion_violations(frame, "b", "grow") == []

    def test_unknown_direction(self):
        with pytest.raises(ValueError, match="方向"):
            inclusion_violations(pd.DataFrame(columns=SWEEP_COLUMNS), "b", "sideways")
