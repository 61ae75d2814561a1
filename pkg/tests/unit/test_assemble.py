"""Unit tests for rule-based model assembly."""

import random
from typing import Any, Dict, List

import numpy as np
import pytest

from builders import WEEKDAYS, activation, bus_entries, days_off_entries, make_store
from oracles import covering_optimum, fixed_headcount_optimum
from workforce_milp.config import settings
from workforce_milp.core.assemble import (
    Break,
    OvertimePolicy,
    Period,
    PeriodSet,
    Shift,
    build_model,
    build_periods,
    build_shifts,
    coverage_matrix,
    derive_costs,
    overtime_coverage,
    overtime_policy,
    rest_days,
    work_days,
)
from workforce_milp.core.exceptions import AssemblyError
from workforce_milp.core.solver import solve_model


def hourly_entries() -> Dict[str, Any]:
    """Round-the-clock laboratory: hourly periods, eight-hour shifts with a meal break."""
    hours = [f"{h:02d}:00" for h in range(24)]
    starts = ["02:00", "06:00", "10:00", "14:00", "18:00", "22:00"]
    return {
        "set of periods": {
            "value": [
                {"period_id": h + 1, "start_time": hours[h], "end_time": hours[(h + 1) % 24]}
                for h in range(24)
            ],
            "details": {"horizon": "24 hours", "increment": "60"},
        },
        "set of shifts": {
            "value": [
                {"shift_id": i + 1, "start_time": start, "duration": "8 hours"}
                for i, start in enumerate(starts)
            ]
        },
        "set of breaks": {
            "value": [
                {
                    "shift_id": i + 1,
                    "start_time": f"{(int(start[:2]) + 4) % 24:02d}:00",
                    "duration": "60",
                    "break_type": "meal",
                }
                for i, start in enumerate(starts)
            ]
        },
        "cost per period": {"value": {"regular_cost": "30"}},
    }


def post_office_entries() -> Dict[str, Any]:
    """Full-time and part-time staff with demand given in hours."""
    entries = days_off_entries([136, 104, 120, 152, 112, 128, 88], unit="hours")
    del entries["set of shifts"]

    def group(workload_type: str, first_id: int) -> Dict[str, Any]:
        shifts = [
            {"shift_id": first_id + i, "start_day": day, "duration": 5}
            for i, day in enumerate(WEEKDAYS)
        ]
        return {"workload_type": workload_type, "shifts": shifts}

    entries.update(
        {
            "daily working hours": {"value": {"hours_per_day": 8}},
            "set of workload types": {
                "value": [
                    {"workload_type": "Full-time", "workload": 1},
                    {"workload_type": "Part-time", "workload": 0.5},
                ]
            },
            "set of workload-specific shifts": {
                "value": [group("Full-time", 1), group("Part-time", 8)]
            },
            "maximum number of employees for a workload type": {
                "value": [{"workload_type": "part-time", "max_employees": 25}]
            },
            "weekly cost per employee": {
                "value": [
                    {"workload_type": "Full-time", "weekly_cost": "$600"},
                    {"workload_type": "Part-time", "weekly_cost": 200},
                ]
            },
        }
    )
    return entries


def warehouse_entries() -> Dict[str, Any]:
    entries = days_off_entries([12, 12, 12, 12, 12, 4, 3])
    entries.update(
        {
            "total number of employees": {"value": {"total_employees": 20}},
            "weekend bonus": {"value": {"bonus_per_day": 25, "period_ids": [6, 7]}},
            "weekend-off ratio": {"value": {"ratio": 0.5, "period_ids": [6, 7]}},
        }
    )
    return entries


def test_clock_periods():
    """Test the bus driver periods."""
    periods = build_periods(make_store(bus_entries()))
    assert len(periods) == 6
    assert (periods.horizon, periods.increment, periods.unit) == (1440, 240, "minutes")
    assert periods[5] == Period(6, 1200, 1440, "20:00-00:00")
    assert periods.ids() == [1, 2, 3, 4, 5, 6]


def test_day_periods():
    periods = build_periods(make_store(days_off_entries([1] * 7)))
    assert (periods.horizon, periods.increment, periods.unit) == (7, 1, "days")
    assert periods[0] == Period(1, 0, 1, "Monday")


def test_inconsistent_periods_are_rejected():
    """Test that horizon, increment and period count must agree."""
    entries = bus_entries()
    entries["set of periods"]["details"]["total_periods"] = "5"
    with pytest.raises(AssemblyError, match="Inconsistent periods"):
        build_periods(make_store(entries))

    entries = bus_entries()
    entries["set of periods"]["value"][2].update(start_time="09:00", end_time="13:00")
    with pytest.raises(AssemblyError, match="does not start where period 2 ends"):
        build_periods(make_store(entries))

    entries = bus_entries()
    entries["set of periods"]["value"][0]["start_time"] = "25:00"
    with pytest.raises(AssemblyError, match="Cannot read the set of periods"):
        build_periods(make_store(entries))

    with pytest.raises(AssemblyError, match="No period definition"):
        build_periods(make_store({}))


def test_bus_coverage_wraps_midnight():
    """Test that the shift starting at 20:00 covers the last and the first period."""
    store = make_store(bus_entries())
    periods = build_periods(store)
    shifts = build_shifts(store, periods)
    matrix = coverage_matrix(periods, shifts)

    expected = np.array([[int(t == s or t == (s + 1) % 6) for s in range(6)] for t in range(6)])
    np.testing.assert_array_equal(matrix, expected)
    assert matrix[0, 5] == 1 and matrix[5, 5] == 1


def test_breaks_are_not_covered():
    """Test that meal breaks leave their period uncovered, also across midnight."""
    store = make_store(hourly_entries())
    periods = build_periods(store)
    shifts = build_shifts(store, periods)
    assert shifts[0].breaks == (Break(240, 60, "meal"),)
    matrix = coverage_matrix(periods, shifts)

    def covered(s: int) -> List[int]:
        return [periods[t].id for t in np.flatnonzero(matrix[:, s])]

    assert covered(0) == [3, 4, 5, 6, 8, 9, 10]
    assert covered(5) == [1, 2, 4, 5, 6, 23, 24]


def test_break_for_unknown_shift():
    entries = hourly_entries()
    entries["set of breaks"]["value"][0]["shift_id"] = 9
    store = make_store(entries)
    with pytest.raises(AssemblyError, match="unknown shift 9"):
        build_shifts(store, build_periods(store))


def test_shift_validation():
    with pytest.raises(ValueError):
        Shift(1, 0, 0)
    with pytest.raises(ValueError, match="break outside"):
        Shift(1, 0, 480, breaks=(Break(450, 60),))
    with pytest.raises(ValueError, match="overlapping"):
        Shift(1, 0, 480, breaks=(Break(100, 60), Break(130, 30)))

    entries = bus_entries()
    entries["set of shifts"]["value"][0]["duration"] = "0"
    store = make_store(entries)
    with pytest.raises(AssemblyError, match="non-positive duration"):
        build_shifts(store, build_periods(store))


def brute_force_column(periods: PeriodSet, shift: Shift, extension: int = 0) -> np.ndarray:
    """Coverage of one shift, lengthened by ``extension`` minutes, by walking its worked minutes."""
    worked = np.ones(shift.duration + extension, dtype=bool)
    for item in shift.breaks:
        worked[item.offset:item.offset + item.length] = False
    minutes = (shift.start + np.flatnonzero(worked)) % periods.horizon
    column = np.zeros(len(periods), dtype=int)
    column[np.unique(minutes // periods.increment)] = 1
    return column


def random_shift(rng: random.Random, shift_id: int) -> Shift:
    duration = rng.randint(1, 1440)
    breaks: List[Break] = []
    cursor = 0
    for _ in range(rng.randint(0, 2)):
        if cursor >= duration:
            break
        offset = rng.randint(cursor, duration - 1)
        length = rng.randint(1, min(90, duration - offset))
        breaks.append(Break(offset, length))
        cursor = offset + length
    return Shift(shift_id, rng.randrange(0, 1440, 5), duration, tuple(breaks))


def test_random_coverage_matches_minute_walk():
    """Test coverage with and without overtime against a minute walk over random shifts."""
    rng = random.Random(7)
    for _ in range(1000):
        increment = rng.choice([15, 30, 60, 120, 240, 360])
        periods = PeriodSet(
            tuple(
                Period(i + 1, i * increment, (i + 1) * increment)
                for i in range(1440 // increment)
            ),
            1440,
            increment,
        )
        shifts = [random_shift(rng, s + 1) for s in range(3)]
        matrix = coverage_matrix(periods, shifts)
        for s, shift in enumerate(shifts):
            np.testing.assert_array_equal(matrix[:, s], brute_force_column(periods, shift))

        max_overtime = rng.randint(0, 3)
        v = overtime_coverage(periods, shifts, OvertimePolicy(max_overtime))
        assert v.shape == (len(periods), max_overtime + 1, len(shifts))
        np.testing.assert_array_equal(v[:, 0, :], matrix)
        assert np.all(np.diff(v, axis=1) >= 0)
        for o in range(max_overtime + 1):
            for s, shift in enumerate(shifts):
                np.testing.assert_array_equal(
                    v[:, o, s], brute_force_column(periods, shift, o * increment)
                )

        # Moving a shift by whole periods rotates its column, across midnight too
        steps = rng.randrange(len(periods))
        shift = shifts[0]
        moved = Shift(
            shift.id, (shift.start + steps * increment) % 1440, shift.duration, shift.breaks
        )
        np.testing.assert_array_equal(
            coverage_matrix(periods, [moved])[:, 0], np.roll(matrix[:, 0], steps)
        )


def test_overtime_coverage():
    """Test that overtime extends a shift by whole periods."""
    store = make_store(bus_entries())
    periods = build_periods(store)
    shifts = build_shifts(store, periods)
    v = overtime_coverage(periods, shifts, OvertimePolicy(2))

    assert v.shape == (6, 3, 6)
    np.testing.assert_array_equal(v[:, 0, :], coverage_matrix(periods, shifts))
    assert list(v[:, 1, 0]) == [1, 1, 1, 0, 0, 0]
    assert list(v[:, 2, 0]) == [1, 1, 1, 1, 0, 0]
    assert list(v[:, 1, 5]) == [1, 1, 0, 0, 0, 1]


def test_work_and_rest_days():
    """Test working days of five-day shifts across the week boundary."""
    store = make_store(days_off_entries([1] * 7))
    periods = build_periods(store)
    shifts = build_shifts(store, periods)
    assert [shift.start for shift in shifts] == list(range(7))
    assert work_days(shifts[0], periods) == [1, 2, 3, 4, 5]
    assert work_days(shifts[5], periods) == [1, 2, 3, 6, 7]
    assert rest_days(shifts[5], periods) == [4, 5]
    assert rest_days(shifts[0], periods) == [6, 7]


def test_start_day_forms():
    """Test start days given as labels, "Day n" or plain numbers."""
    entries = days_off_entries([1] * 7)
    entries["set of shifts"]["value"] = [
        {"shift_id": 1, "start_day": "Day 3", "duration": "5 days"},
        {"shift_id": 2, "start_day": 7, "duration": 5},
        {"shift_id": 3, "start_day": "sunday", "duration": 2},
    ]
    store = make_store(entries)
    shifts = build_shifts(store, build_periods(store))
    assert [(shift.start, shift.duration) for shift in shifts] == [(2, 5), (6, 5), (6, 2)]

    entries["set of shifts"]["value"] = [{"shift_id": 1, "start_day": "Day 9", "duration": 5}]
    store = make_store(entries)
    with pytest.raises(AssemblyError, match="outside the planning horizon"):
        build_shifts(store, build_periods(store))


def test_workload_specific_shifts():
    """Test shift hours from daily hours and workload fractions."""
    store = make_store(post_office_entries(), {"set of shifts": "set of workload-specific shifts"})
    shifts = build_shifts(store, build_periods(store))
    assert [shift.id for shift in shifts] == list(range(1, 15))
    assert {shift.workload_type for shift in shifts[:7]} == {"Full-time"}
    assert [shifts[0].hours_per_day, shifts[7].hours_per_day] == [8.0, 4.0]


def test_daily_hours_from_settings(monkeypatch):
    entries = post_office_entries()
    del entries["daily working hours"]
    store = make_store(entries)
    periods = build_periods(store)
    assert build_shifts(store, periods)[0].hours_per_day is None

    monkeypatch.setattr(settings, "DEFAULT_FULL_WORKLOAD_HOURS", 10)
    assert build_shifts(store, periods)[7].hours_per_day == 5.0


def test_clock_costs():
    """Test per-period rates and direct shift costs."""
    store = make_store(hourly_entries())
    periods = build_periods(store)
    shifts = build_shifts(store, periods)
    assert derive_costs(store, shifts, periods).tolist() == [240.0] * 6

    entries = bus_entries()
    entries["shift costs"] = {"value": [{"shift_id": i, "cost": f"${10 * i}"} for i in range(1, 6)]}
    store = make_store(entries)
    periods = build_periods(store)
    shifts = build_shifts(store, periods)
    with pytest.raises(AssemblyError, match=r"shift\(s\) \[6\]"):
        derive_costs(store, shifts, periods)

    entries["shift costs"]["value"].append({"shift_id": 6, "cost": 60})
    store = make_store(entries)
    assert derive_costs(store, shifts, periods).tolist() == [10, 20, 30, 40, 50, 60]
    assert derive_costs(make_store(bus_entries()), shifts, periods) is None


def test_day_costs():
    """Test weekly costs per workload type and weekend bonuses."""
    store = make_store(warehouse_entries())
    periods = build_periods(store)
    shifts = build_shifts(store, periods)
    assert derive_costs(store, shifts, periods).tolist() == [0, 25, 50, 50, 50, 50, 25]

    store = make_store(post_office_entries())
    periods = build_periods(store)
    shifts = build_shifts(store, periods)
    assert derive_costs(store, shifts, periods).tolist() == [600.0] * 7 + [200.0] * 7

    entries = days_off_entries([1] * 7)
    entries["weekly cost per employee"] = {
        "value": [{"workload_type": "Full-time", "weekly_cost": 500}]
    }
    store = make_store(entries)
    periods = build_periods(store)
    assert derive_costs(store, build_shifts(store, periods), periods).tolist() == [500.0] * 7


def test_overtime_policy(monkeypatch):
    """Test the overtime bound from extraction, from settings, or missing."""
    store = make_store(bus_entries())
    assert overtime_policy(store, set()) is None
    with pytest.raises(AssemblyError, match="maximum number of overtime periods"):
        overtime_policy(store, {"Overtimes"})

    monkeypatch.setattr(settings, "MAX_OVERTIME_PERIODS", 2)
    assert overtime_policy(store, {"Overtimes"}) == OvertimePolicy(2, None)

    entries = bus_entries()
    entries["overtime policy"] = {"value": {"max_overtime_periods": "1"}}
    entries["cost per period"] = {"value": {"regular_cost": 5, "overtime_cost": 8}}
    assert overtime_policy(make_store(entries), set()) == OvertimePolicy(1, 8.0)


def test_bus_model(shift_graph):
    """Test the assembled bus driver model and its optimum."""
    model = build_model(
        make_store(bus_entries()),
        activation("Shifts", "Minimise total number of employees"),
        shift_graph,
        "bus drivers",
    )
    assert model.name == "bus_drivers"
    assert model.sets == {"T": [1, 2, 3, 4, 5, 6], "S": [1, 2, 3, 4, 5, 6]}
    assert model.params["T_max"].values == 1440
    assert model.params["t_size"].values == 240
    assert model.params["lb"].values == [4, 8, 10, 7, 12, 4]
    assert list(model.variables) == [f"x_{s}" for s in range(1, 7)]

    demand = model.constraint("demand_1")
    assert demand.terms == {"x_1": 1.0, "x_6": 1.0}
    assert (demand.sense, demand.rhs) == (">=", 4.0)
    assert model.objective.terms == {f"x_{s}": 1.0 for s in range(1, 7)}
    assert model.provenance["constraint:demand_1"] == "labour-demand-constraint"

    expected, _ = covering_optimum([1] * 6, model.params["a"].array(), [4, 8, 10, 7, 12, 4])
    result = solve_model(model)
    assert result.status == "optimal"
    assert result.objective == expected == 26


def test_lab_model_uses_cost_objective(shift_graph):
    """Test the laboratory model: breaks in coverage and per-period pay."""
    entries = hourly_entries()
    demand = [7, 7, 2, 6, 6, 6, 4, 9, 9, 9, 5, 12, 12, 12, 4, 10, 10, 10, 6, 11, 11, 11, 3, 7]
    entries["minimum number of employees required for each period"] = {
        "value": [{"period_id": t + 1, "min_employees": n} for t, n in enumerate(demand)]
    }
    model = build_model(make_store(entries), activation("Minimise total cost"), shift_graph)
    assert model.params["c"].values == [240.0] * 6
    assert model.objective.terms["x_1"] == 240.0

    expected, _ = covering_optimum([240] * 6, model.params["a"].array(), demand)
    assert solve_model(model).objective == expected == 6960


def test_overtime_model(shift_graph):
    """Test overtime variables, linking rows and overtime pay."""
    entries = bus_entries()
    entries["overtime policy"] = {"value": {"max_overtime_periods": 1, "overtime_cost": 10}}
    entries["cost per period"] = {"value": {"regular_cost": 5}}
    model = build_model(
        make_store(entries), activation("Minimise total cost", "Overtimes"), shift_graph
    )

    assert model.sets["O"] == [0, 1]
    assert "y_6_1" in model.variables
    assert model.constraint("demand_1").terms == {
        "y_1_0": 1.0,
        "y_1_1": 1.0,
        "y_5_1": 1.0,
        "y_6_0": 1.0,
        "y_6_1": 1.0,
    }
    link = model.constraint("overtime_link_1")
    assert link.terms == {"x_1": 1.0, "y_1_0": -1.0, "y_1_1": -1.0}
    assert (link.sense, link.rhs) == ("=", 0.0)
    assert model.objective.terms["x_1"] == 10.0
    assert model.objective.terms["y_1_1"] == 10.0
    assert "y_1_0" not in model.objective.terms
    assert model.params["c_o"].values == 10.0
    assert solve_model(model).is_optimal


def test_subset_limit(shift_graph):
    entries = bus_entries()
    entries["maximum number of employees for a subset of shifts"] = {
        "value": [{"shift_ids": [1, "2"], "max_employees": 6}]
    }
    report = activation("Shift subset limit constraint")
    model = build_model(make_store(entries), report, shift_graph)
    cap = model.constraint("cap_1")
    assert (cap.terms, cap.sense, cap.rhs) == ({"x_1": 1.0, "x_2": 1.0}, "<=", 6.0)
    assert model.sets["S_1"] == [1, 2]
    assert model.params["B_1"].values == 6.0

    entries["maximum number of employees for a subset of shifts"]["value"][0]["shift_ids"] = [9]
    with pytest.raises(AssemblyError, match=r"unknown shift\(s\) \[9\]"):
        build_model(make_store(entries), report, shift_graph)


def test_activated_constraint_without_data(shift_graph):
    """Test activated constraints that nothing was extracted for."""
    report = activation("Total employees constraint")
    with pytest.raises(AssemblyError, match="is activated but no extraction task"):
        build_model(make_store(bus_entries()), report, shift_graph)

    # A task that ran and returned nothing only omits the constraint
    store = make_store(bus_entries())
    store.failures["total number of employees"] = "returned no information"
    model = build_model(store, report, shift_graph)
    assert model.constraints_with_prefix("total") == []


def test_cost_objective_needs_costs(shift_graph):
    with pytest.raises(AssemblyError, match="no cost information"):
        build_model(make_store(bus_entries()), activation("Minimise total cost"), shift_graph)


def test_missing_or_bad_demand(shift_graph):
    entries = bus_entries()
    del entries["minimum number of employees required for each period"]
    with pytest.raises(AssemblyError, match="returned nothing"):
        build_model(make_store(entries), activation(), shift_graph)

    entries = bus_entries()
    entries["minimum number of employees required for each period"]["value"][0]["period_id"] = 9
    with pytest.raises(AssemblyError, match="unknown period 9"):
        build_model(make_store(entries), activation(), shift_graph)

    # Test demand given in hours, which has no headcount conversion for shifts
    entries = bus_entries()
    entries["minimum number of employees required for each period"]["unit"] = "staff hours"
    with pytest.raises(AssemblyError, match="needs a number of employees"):
        build_model(make_store(entries), activation(), shift_graph)


def test_post_office_model(days_off_graph):
    """Test hour-weighted demand rows and the part-time limit."""
    store = make_store(post_office_entries(), {"set of shifts": "set of workload-specific shifts"})
    report = activation("Minimise total cost", "Workload type limit constraint")
    model = build_model(store, report, days_off_graph, "post office")

    assert model.params["w"].values == [8.0] * 7 + [4.0] * 7
    monday = model.constraint("demand_1")
    assert monday.terms == {
        **{f"x_{s}": 8.0 for s in (1, 4, 5, 6, 7)},
        **{f"x_{s}": 4.0 for s in (8, 11, 12, 13, 14)},
    }
    assert monday.rhs == 136.0
    cap = model.constraint("cap_1")
    assert (list(cap.terms), cap.rhs) == ([f"x_{s}" for s in range(8, 15)], 25.0)
    assert model.objective.terms["x_1"] == 600.0
    assert model.objective.terms["x_14"] == 200.0


def test_hours_demand_needs_daily_hours(days_off_graph):
    entries = post_office_entries()
    del entries["daily working hours"]
    with pytest.raises(AssemblyError, match="daily working hours are unknown"):
        build_model(make_store(entries), activation("Minimise total cost"), days_off_graph)


def test_warehouse_model(days_off_graph):
    """Test fixed headcount, weekend bonus and the weekend-off ratio."""
    report = activation(
        "Minimise total cost", "Total employees constraint", "Weekend-off ratio constraint"
    )
    model = build_model(make_store(warehouse_entries()), report, days_off_graph)

    total = model.constraint("total_employees")
    assert (total.sense, total.rhs) == ("=", 20.0)
    assert model.sets["Off"] == [1]
    ratio = model.constraint("weekend_off_ratio")
    assert ratio.terms == {"x_1": 0.5, **{f"x_{s}": -0.5 for s in range(2, 8)}}
    assert (ratio.sense, ratio.rhs) == (">=", 0.0)

    expected, _ = fixed_headcount_optimum(
        model.params["c"].values,
        model.params["a"].array(),
        [12, 12, 12, 12, 12, 4, 3],
        20,
        [0],
        0.5,
    )
    result = solve_model(model)
    assert result.objective == expected == 175


def test_weekend_ratio_out_of_range(days_off_graph):
    entries = warehouse_entries()
    entries["weekend-off ratio"]["value"]["ratio"] = 1.5
    with pytest.raises(AssemblyError, match="not between 0 and 1"):
        build_model(make_store(entries), activation(), days_off_graph)
