"""Unit tests for the helper and export utilities."""

import json
from pathlib import Path

import openpyxl
import pandas as pd
import pytest

from workforce_milp.utils.export import (
    WORKBOOK_TIMESTAMP,
    export_to_csv,
    export_to_excel,
    format_table,
)
from workforce_milp.utils.helpers import (
    ensure_directory,
    format_number,
    parse_clock,
    parse_int,
    parse_minutes,
    parse_quantity,
    sanitize_name,
    slugify,
    write_json,
)


def test_parse_clock():
    """Test 24-hour clock parsing."""
    assert parse_clock("00:00") == 0
    assert parse_clock(" 8:30 ") == 510
    assert parse_clock("24:00") == 1440
    for bad in ("24:30", "12:60", "noon", "8.30"):
        with pytest.raises(ValueError):
            parse_clock(bad)


def test_parse_quantity():
    """Test numbers arriving as strings with units and currency."""
    assert parse_quantity("1440") == (1440.0, None)
    assert parse_quantity("7 days") == (7.0, "days")
    assert parse_quantity("$1,200") == (1200.0, None)
    assert parse_quantity(0.5) == (0.5, None)
    for bad in (None, True, "", "eight", "1e999"):
        with pytest.raises(ValueError):
            parse_quantity(bad)


def test_parse_int_and_minutes():
    assert parse_int("6") == 6
    assert parse_int(2.0) == 2
    with pytest.raises(ValueError, match="not an integer"):
        parse_int("2.5")

    # Test durations in minutes, hours and days
    assert parse_minutes("480") == 480
    assert parse_minutes("8 hours") == 480
    assert parse_minutes("1.5 h") == 90
    assert parse_minutes("1 day") == 1440
    with pytest.raises(ValueError, match="unknown unit"):
        parse_minutes("3 weeks")
    with pytest.raises(ValueError, match="whole number of minutes"):
        parse_minutes("0.25 minutes")


def test_format_number():
    assert format_number(26.0) == "26"
    assert format_number(25.999999999999) == "26"
    assert format_number(1.5) == "1.5"
    assert format_number(-0.125) == "-0.125"


def test_names():
    assert sanitize_name("bus drivers (2024)") == "bus_drivers_2024"
    assert sanitize_name("9-to-5") == "n_9_to_5"
    assert sanitize_name("***") == "unnamed"
    assert slugify("Minimise total cost") == "minimise-total-cost"
    assert slugify("Workload-specific Shifts") == "workload-specific-shifts"


def test_files(tmp_path: Path):
    """Test directory creation and sorted JSON output."""
    directory = ensure_directory(tmp_path / "a" / "b")
    assert directory.is_dir()

    path = write_json(tmp_path / "c" / "out.json", {"b": 1, "a": "é"})
    text = path.read_text(encoding="utf-8")
    assert text == '{\n  "a": "é",\n  "b": 1\n}\n'
    assert json.loads(text) == {"a": "é", "b": 1}


def test_export(tmp_path: Path):
    """Test CSV and Excel export of report rows."""
    rows = [{"instance": "bus", "trial_1": "match"}, {"instance": "EA", "trial_1": "100%"}]

    assert export_to_csv(rows, tmp_path / "out" / "report.csv")
    assert pd.read_csv(tmp_path / "out" / "report.csv").to_dict("records") == rows

    assert export_to_excel(rows, tmp_path / "report.xlsx")
    assert pd.read_excel(tmp_path / "report.xlsx").to_dict("records") == rows

    # Test with no rows
    assert not export_to_csv([], tmp_path / "empty.csv")
    assert not export_to_excel([], tmp_path / "empty.xlsx")
    assert format_table([]) == ""


def test_excel_export_is_reproducible(tmp_path: Path, mocker):
    """Test that exporting the same rows at different times gives identical files."""
    rows = [{"instance": "bus", "trial_1": "match"}, {"instance": "EA", "trial_1": "100%"}]
    assert export_to_excel(rows, tmp_path / "first.xlsx")
    mocker.patch("time.localtime", return_value=(2031, 6, 15, 12, 30, 0, 6, 166, 0))
    assert export_to_excel(rows, tmp_path / "second.xlsx")

    assert (tmp_path / "first.xlsx").read_bytes() == (tmp_path / "second.xlsx").read_bytes()
    properties = openpyxl.load_workbook(tmp_path / "second.xlsx").properties
    assert properties.created == properties.modified == WORKBOOK_TIMESTAMP


def test_format_table():
    table = format_table([{"instance": "bus", "ma": None}, {"instance": "EA", "ma": "50%"}])
    lines = table.splitlines()
    assert lines[0].split() == ["instance", "ma"]
    assert lines[1].split() == ["bus", "-"]
    assert lines[2].split() == ["EA", "50%"]
