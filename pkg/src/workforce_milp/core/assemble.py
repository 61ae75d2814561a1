"""Stage 3: derive sets, parameters, variables and constraints from extracted data by rule."""

import logging
import re
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np

from ..config import settings
from ..utils.helpers import (
    parse_clock,
    parse_int,
    parse_minutes,
    parse_number,
    parse_quantity,
    sanitize_name,
)
from .exceptions import AssemblyError
from .extract import ExtractionStore
from .graph import ModellingGraph
from .identify import ActivationReport
from .model import ModelIR, Parameter, VariableFamily

logger = logging.getLogger(__name__)

# Extraction tasks read by assembly
TASK_PERIODS = "set of periods"
TASK_SHIFTS = "set of shifts"
TASK_WORKLOAD_SHIFTS = "set of workload-specific shifts"
TASK_WORKLOAD_TYPES = "set of workload types"
TASK_BREAKS = "set of breaks"
TASK_DEMAND_PER_PERIOD = "minimum number of employees required for each period"
TASK_DEMAND_PER_DAY = "minimum labour requirement for each day"
TASK_SHIFT_COSTS = "shift costs"
TASK_COST_PER_PERIOD = "cost per period"
TASK_OVERTIME = "overtime policy"
TASK_SUBSET_LIMIT = "maximum number of employees for a subset of shifts"
TASK_WORKLOAD_LIMIT = "maximum number of employees for a workload type"
TASK_TOTAL = "total number of employees"
TASK_DAILY_HOURS = "daily working hours"
TASK_WEEKLY_COST = "weekly cost per employee"
TASK_WEEKEND_BONUS = "weekend bonus"
TASK_WEEKEND_RATIO = "weekend-off ratio"

# Graph nodes read by assembly
NODE_PERIODS = "Periods"
NODE_SHIFTS = "Shifts"
NODE_OVERTIMES = "Overtimes"
NODE_EMPLOYEES_PER_SHIFT = "Number of employees per shift"
NODE_EMPLOYEES_PER_OVERTIME = "Number of employees per shift and overtime"
NODE_MIN_COUNT = "Minimise total number of employees"
NODE_MIN_COST = "Minimise total cost"
NODE_DEMAND = "Labour demand constraint"
NODE_SUBSET_LIMIT = "Shift subset limit constraint"
NODE_WORKLOAD_LIMIT = "Workload type limit constraint"
NODE_TOTAL = "Total employees constraint"
NODE_WEEKEND_RATIO = "Weekend-off ratio constraint"
NODE_OVERTIME_LINK = "Overtime linking constraint"

OPTIONAL_CONSTRAINTS = {
    "shift-scheduling": (
        (NODE_SUBSET_LIMIT, TASK_SUBSET_LIMIT),
        (NODE_TOTAL, TASK_TOTAL),
        (NODE_OVERTIME_LINK, TASK_OVERTIME),
    ),
    "days-off-scheduling": (
        (NODE_WORKLOAD_LIMIT, TASK_WORKLOAD_LIMIT),
        (NODE_TOTAL, TASK_TOTAL),
        (NODE_WEEKEND_RATIO, TASK_WEEKEND_RATIO),
    ),
}

_DAY_RE = re.compile(r"^\s*day\s*(\d+)\s*$", re.IGNORECASE)
_WEEKDAYS = ("monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday")


@dataclass(frozen=True)
class Period:
    """One period. ``start``/``end`` are offsets from the horizon start in horizon units
    (minutes of the day, or days with day ``d`` spanning ``[d - 1, d)``)."""

    id: int
    start: int
    end: int
    label: str = ""


@dataclass(frozen=True)
class PeriodSet:
    periods: Tuple[Period, ...]
    horizon: int
    increment: int
    unit: str = "minutes"

    def __iter__(self) -> Iterator[Period]:
        return iter(self.periods)

    def __len__(self) -> int:
        return len(self.periods)

    def __getitem__(self, index: int) -> Period:
        return self.periods[index]

    def ids(self) -> List[int]:
        return [period.id for period in self.periods]


@dataclass(frozen=True)
class Break:
    offset: int
    length: int
    kind: str = ""


@dataclass(frozen=True)
class Shift:
    """A shift starting ``start`` horizon units after the horizon start.

    Shift-type durations are minutes; days-off durations are consecutive working days.
    """

    id: int
    start: int
    duration: int
    breaks: Tuple[Break, ...] = ()
    workload_type: Optional[str] = None
    hours_per_day: Optional[float] = None

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError(f"shift {self.id} has non-positive duration {self.duration}")
        previous_end = 0
        for item in sorted(self.breaks, key=lambda b: b.offset):
            end = item.offset + item.length
            if item.length <= 0 or item.offset < previous_end or end > self.duration:
                raise ValueError(
                    f"shift {self.id} has a break outside the shift or overlapping another"
                )
            previous_end = end


@dataclass(frozen=True)
class OvertimePolicy:
    max_overtime_periods: int
    cost_per_overtime_period: Optional[float] = None

    def __post_init__(self) -> None:
        if self.max_overtime_periods < 0:
            raise ValueError(f"max_overtime_periods must be >= 0, got {self.max_overtime_periods}")


def _value(store: ExtractionStore, task: str, follow_aliases: bool = True) -> Any:
    entry = store.get(task, follow_aliases)
    return entry.get("value") if isinstance(entry, dict) else None


def _sorted_rows(rows: Sequence[Dict[str, Any]], key: str, what: str) -> List[Dict[str, Any]]:
    ids = [parse_int(row[key], key) for row in rows]
    if len(set(ids)) != len(ids):
        raise AssemblyError(f"Duplicate {key} values in the {what}")
    return [row for _, row in sorted(zip(ids, rows), key=lambda pair: pair[0])]


def build_periods(store: ExtractionStore) -> PeriodSet:
    """Build the period set from the extracted period definition.

    Raises:
        AssemblyError: If periods are missing or horizon, increment and count disagree.
    """
    entry = store.get(TASK_PERIODS)
    if not isinstance(entry, dict) or not entry.get("value"):
        raise AssemblyError(f"No period definition was extracted (node {NODE_PERIODS!r})")
    rows = entry["value"]
    details = entry.get("details") or {}
    try:
        if any("start_time" in row for row in rows):
            return _clock_periods(rows, details)
        return _day_periods(rows, details)
    except (KeyError, ValueError) as e:
        raise AssemblyError(f"Cannot read the set of periods: {e}") from e


def _check_period_counts(horizon: int, increment: int, total: Optional[int], count: int) -> None:
    if (
        horizon <= 0
        or increment <= 0
        or horizon % increment != 0
        or horizon // increment != count
        or (total is not None and total != count)
    ):
        raise AssemblyError(
            f"Inconsistent periods: horizon={horizon}, increment={increment}, "
            f"total_periods={total} for {count} listed periods"
        )


def _clock_periods(rows: Sequence[Dict[str, Any]], details: Dict[str, Any]) -> PeriodSet:
    rows = _sorted_rows(rows, "period_id", "set of periods")
    bounds = [
        (parse_clock(row["start_time"], "start_time"), parse_clock(row["end_time"], "end_time"))
        for row in rows
    ]
    horizon = (
        parse_minutes(details["horizon"], "horizon")
        if details.get("horizon") is not None
        else settings.MINUTES_PER_DAY
    )
    lengths = []
    for start, end in bounds:
        length = (end - start) % horizon
        lengths.append(horizon if length == 0 and len(rows) == 1 else length)
    increment = (
        parse_minutes(details["increment"], "increment")
        if details.get("increment") is not None
        else lengths[0]
    )
    total = (
        parse_int(details["total_periods"]) if details.get("total_periods") is not None else None
    )
    _check_period_counts(horizon, increment, total, len(rows))

    periods = []
    for index, (row, (start, _), length) in enumerate(zip(rows, bounds, lengths), start=1):
        if parse_int(row["period_id"]) != index or length != increment:
            raise AssemblyError(
                f"Period {row['period_id']} does not fit horizon={horizon}, increment={increment}"
            )
        start %= horizon
        if periods and start != periods[-1].end % horizon:
            raise AssemblyError(f"Period {index} does not start where period {index - 1} ends")
        periods.append(
            Period(index, start, start + length, f"{row['start_time']}-{row['end_time']}")
        )
    return PeriodSet(tuple(periods), horizon, increment, "minutes")


def _day_periods(rows: Sequence[Dict[str, Any]], details: Dict[str, Any]) -> PeriodSet:
    rows = _sorted_rows(rows, "period_id", "set of periods")
    horizon = len(rows)
    if details.get("horizon") is not None:
        horizon = parse_int(details["horizon"], "horizon")
    increment = (
        parse_int(details["increment"], "increment") if details.get("increment") is not None else 1
    )
    _check_period_counts(horizon, increment, None, len(rows))
    if increment != 1:
        raise AssemblyError(f"Day periods must be one day long, got increment={increment}")
    periods = []
    for index, row in enumerate(rows, start=1):
        if parse_int(row["period_id"]) != index:
            raise AssemblyError(f"Period ids must run from 1 to {len(rows)}")
        periods.append(Period(index, index - 1, index, str(row.get("day", f"Day {index}"))))
    return PeriodSet(tuple(periods), horizon, 1, "days")


def _day_offset(value: Any, periods: PeriodSet) -> int:
    """Offset (0-based) of a start day given as "Day 3", a weekday label or a number."""
    text = str(value).strip()
    match = _DAY_RE.match(text)
    if match:
        day = int(match.group(1))
    else:
        lowered = text.lower()
        by_label = [p.id for p in periods if p.label.strip().lower() == lowered]
        if by_label:
            day = by_label[0]
        elif lowered in _WEEKDAYS:
            day = _WEEKDAYS.index(lowered) + 1
        else:
            day = parse_int(text, "start_day")
    if not 1 <= day <= len(periods):
        raise AssemblyError(f"Start day {value!r} is outside the planning horizon")
    return day - 1


def _daily_hours(store: ExtractionStore) -> Optional[float]:
    value = _value(store, TASK_DAILY_HOURS)
    if isinstance(value, dict) and value.get("hours_per_day") is not None:
        return parse_number(value["hours_per_day"], "hours_per_day")
    if settings.DEFAULT_FULL_WORKLOAD_HOURS is not None:
        logger.info(
            f"Using the configured {settings.DEFAULT_FULL_WORKLOAD_HOURS} "
            "full-workload hours per day"
        )
    return settings.DEFAULT_FULL_WORKLOAD_HOURS


def _workloads(store: ExtractionStore) -> Dict[str, Tuple[str, float]]:
    rows = _value(store, TASK_WORKLOAD_TYPES) or []
    return {
        str(row["workload_type"]).strip().lower(): (
            str(row["workload_type"]).strip(),
            parse_number(row["workload"], "workload"),
        )
        for row in rows
    }


def build_shifts(store: ExtractionStore, periods: PeriodSet) -> List[Shift]:
    """Build the shifts, in shift-id order.

    Raises:
        AssemblyError: If shifts are missing or a duration or break does not make sense.
    """
    try:
        if periods.unit == "days":
            return _day_shifts(store, periods)
        return _clock_shifts(store, periods)
    except (KeyError, ValueError) as e:
        raise AssemblyError(f"Cannot read the set of shifts: {e}") from e


def _clock_shifts(store: ExtractionStore, periods: PeriodSet) -> List[Shift]:
    rows = _value(store, TASK_SHIFTS)
    if not rows:
        raise AssemblyError(f"No shifts were extracted (node {NODE_SHIFTS!r})")
    shifts = []
    for row in _sorted_rows(rows, "shift_id", "set of shifts"):
        shift_id = parse_int(row["shift_id"], "shift_id")
        duration = parse_minutes(row["duration"], f"duration of shift {shift_id}")
        if duration <= 0:
            raise AssemblyError(f"Shift {shift_id} has non-positive duration {row['duration']!r}")
        start = parse_clock(row["start_time"], f"start of shift {shift_id}") % periods.horizon
        shifts.append((shift_id, start, duration))

    breaks: Dict[int, List[Break]] = {shift_id: [] for shift_id, _, _ in shifts}
    starts = {shift_id: start for shift_id, start, _ in shifts}
    for row in _value(store, TASK_BREAKS) or []:
        shift_id = parse_int(row["shift_id"], "shift_id")
        if shift_id not in breaks:
            raise AssemblyError(f"Break refers to unknown shift {shift_id}")
        start = parse_clock(row["start_time"], "break start")
        offset = (start - starts[shift_id]) % periods.horizon
        length = parse_minutes(row["duration"], "break duration")
        breaks[shift_id].append(Break(offset, length, str(row.get("break_type") or "")))

    result = []
    for shift_id, start, duration in shifts:
        try:
            result.append(Shift(shift_id, start, duration, tuple(breaks[shift_id])))
        except ValueError as e:
            raise AssemblyError(str(e)) from e
    logger.debug(f"Built {len(result)} shifts")
    return result


def _day_shifts(store: ExtractionStore, periods: PeriodSet) -> List[Shift]:
    base_hours = _daily_hours(store)
    workloads = _workloads(store)
    groups: List[Tuple[Optional[str], Sequence[Dict[str, Any]]]] = []

    specific = _value(store, TASK_WORKLOAD_SHIFTS, follow_aliases=False)
    plain = _value(store, TASK_SHIFTS, follow_aliases=False)
    if specific:
        groups = [(str(group["workload_type"]).strip(), group["shifts"]) for group in specific]
    elif plain:
        groups = [(None, plain)]
    else:
        raise AssemblyError(f"No shifts were extracted (node {NODE_SHIFTS!r})")

    shifts = []
    for workload_type, rows in groups:
        workload: Optional[float] = None
        if workload_type is not None and workloads:
            known = workloads.get(workload_type.lower())
            if known is None:
                raise AssemblyError(f"Shifts refer to unknown workload type {workload_type!r}")
            workload_type, workload = known
        for row in rows:
            shift_id = parse_int(row["shift_id"], "shift_id")
            duration, _ = parse_quantity(row["duration"], f"duration of shift {shift_id}")
            if duration <= 0 or not float(duration).is_integer():
                raise AssemblyError(f"Shift {shift_id} has invalid duration {row['duration']!r}")
            if duration > periods.horizon:
                raise AssemblyError(f"Shift {shift_id} is longer than the planning horizon")
            hours: Optional[float] = None
            if base_hours is not None:
                hours = base_hours * (workload if workload is not None else 1.0)
            shifts.append(
                Shift(
                    id=shift_id,
                    start=_day_offset(row["start_day"], periods),
                    duration=int(duration),
                    workload_type=workload_type,
                    hours_per_day=hours,
                )
            )

    ids = [shift.id for shift in shifts]
    if len(set(ids)) != len(ids):
        raise AssemblyError("Duplicate shift_id values in the set of shifts")
    return sorted(shifts, key=lambda shift: shift.id)


def _circular_pieces(start: int, length: int, horizon: int) -> List[Tuple[int, int]]:
    """Split ``[start, start + length)`` taken modulo ``horizon`` into in-range pieces."""
    if length <= 0:
        return []
    if length >= horizon:
        return [(0, horizon)]
    start %= horizon
    end = start + length
    if end <= horizon:
        return [(start, end)]
    return [(start, horizon), (0, end - horizon)]


def working_segments(shift: Shift, extension: int = 0) -> List[Tuple[int, int]]:
    """Worked intervals relative to the shift start, breaks removed."""
    segments = []
    cursor = 0
    for item in sorted(shift.breaks, key=lambda b: b.offset):
        if item.offset > cursor:
            segments.append((cursor, item.offset))
        cursor = item.offset + item.length
    total = shift.duration + extension
    if total > cursor:
        segments.append((cursor, total))
    return segments


def _worked_pieces(shift: Shift, horizon: int, extension: int = 0) -> List[Tuple[int, int]]:
    pieces = []
    for begin, end in working_segments(shift, extension):
        pieces.extend(_circular_pieces(shift.start + begin, end - begin, horizon))
    return pieces


def _overlaps(first: List[Tuple[int, int]], second: List[Tuple[int, int]]) -> bool:
    return any(min(b1, b2) > max(a1, a2) for a1, b1 in first for a2, b2 in second)


def _coverage(
    periods: PeriodSet, shifts: Sequence[Shift], horizon: int, extension: int
) -> np.ndarray:
    period_pieces = [
        _circular_pieces(period.start, period.end - period.start, horizon) for period in periods
    ]
    matrix = np.zeros((len(periods), len(shifts)), dtype=int)
    for s, shift in enumerate(shifts):
        worked = _worked_pieces(shift, horizon, extension)
        for t, pieces in enumerate(period_pieces):
            if _overlaps(pieces, worked):
                matrix[t, s] = 1
    return matrix


def coverage_matrix(
    periods: PeriodSet, shifts: Sequence[Shift], t_max: Optional[int] = None
) -> np.ndarray:
    """Binary matrix ``a[t, s]``: 1 iff shift ``s`` works during period ``t``.

    Shifts wrap around the end of the horizon and break intervals are not worked.
    """
    return _coverage(periods, shifts, t_max or periods.horizon, 0)


def overtime_coverage(
    periods: PeriodSet,
    shifts: Sequence[Shift],
    policy: OvertimePolicy,
    t_max: Optional[int] = None,
) -> np.ndarray:
    """Tensor ``v[t, o, s]``: 1 iff shift ``s`` extended by ``o`` periods works during ``t``."""
    horizon = t_max or periods.horizon
    return np.stack(
        [
            _coverage(periods, shifts, horizon, o * periods.increment)
            for o in range(policy.max_overtime_periods + 1)
        ],
        axis=1,
    )


def work_days(shift: Shift, periods: PeriodSet) -> List[int]:
    """Ids of the periods a shift works, derived from its start and duration."""
    column = coverage_matrix(periods, [shift])[:, 0]
    return [period.id for period, covered in zip(periods, column) if covered]


def rest_days(shift: Shift, periods: PeriodSet) -> List[int]:
    worked = set(work_days(shift, periods))
    return [period.id for period in periods if period.id not in worked]


def overtime_policy(
    store: ExtractionStore, activated: Set[str]
) -> Optional[OvertimePolicy]:
    """Overtime rules, or None when the problem has no overtime.

    Raises:
        AssemblyError: If overtime is present but no bound is extracted or configured.
    """
    value = _value(store, TASK_OVERTIME)
    if value is None and NODE_OVERTIMES not in activated:
        return None
    value = value or {}
    bound = value.get("max_overtime_periods")
    if bound is None:
        bound = settings.MAX_OVERTIME_PERIODS
        if bound is None:
            raise AssemblyError(
                f"Node {NODE_OVERTIMES!r} is active but no maximum number of overtime periods "
                f"was extracted or configured"
            )
        logger.warning(f"Using the configured maximum of {bound} overtime periods")
    cost = value.get("overtime_cost")
    if cost is None:
        per_period = _value(store, TASK_COST_PER_PERIOD, follow_aliases=False) or {}
        cost = per_period.get("overtime_cost", per_period.get("regular_cost"))
    try:
        return OvertimePolicy(
            parse_int(bound, "max_overtime_periods"),
            parse_number(cost, "overtime_cost") if cost is not None else None,
        )
    except ValueError as e:
        raise AssemblyError(f"Cannot read the overtime policy: {e}") from e


def derive_costs(
    store: ExtractionStore, shifts: Sequence[Shift], periods: PeriodSet
) -> Optional[np.ndarray]:
    """Cost of one employee on each shift, or None when no cost was extracted.

    Per-period rates are multiplied by the number of periods in the shift. Weekend
    bonuses are added for every weekend day the shift works.
    """
    try:
        if periods.unit == "minutes":
            return _clock_costs(store, shifts, periods)
        return _day_costs(store, shifts, periods)
    except (KeyError, ValueError) as e:
        raise AssemblyError(f"Cannot read cost information: {e}") from e


def _clock_costs(
    store: ExtractionStore, shifts: Sequence[Shift], periods: PeriodSet
) -> Optional[np.ndarray]:
    per_period = _value(store, TASK_COST_PER_PERIOD, follow_aliases=False)
    if per_period:
        rate = parse_number(per_period["regular_cost"], "regular_cost")
        return np.array([shift.duration / periods.increment * rate for shift in shifts])

    direct = _value(store, TASK_SHIFT_COSTS, follow_aliases=False)
    if not direct:
        return None
    by_id = {parse_int(row["shift_id"]): parse_number(row["cost"], "cost") for row in direct}
    missing = [shift.id for shift in shifts if shift.id not in by_id]
    if missing:
        raise AssemblyError(f"No cost was extracted for shift(s) {missing}")
    return np.array([by_id[shift.id] for shift in shifts])


def _day_costs(
    store: ExtractionStore, shifts: Sequence[Shift], periods: PeriodSet
) -> Optional[np.ndarray]:
    weekly = _value(store, TASK_WEEKLY_COST)
    bonus = _value(store, TASK_WEEKEND_BONUS)
    if not weekly and not bonus:
        return None

    costs = np.zeros(len(shifts))
    if weekly:
        by_type = {
            str(row["workload_type"]).strip().lower(): parse_number(
                row["weekly_cost"], "weekly_cost"
            )
            for row in weekly
        }
        for s, shift in enumerate(shifts):
            if shift.workload_type is None and len(by_type) == 1:
                costs[s] = next(iter(by_type.values()))
            elif shift.workload_type is not None and shift.workload_type.lower() in by_type:
                costs[s] = by_type[shift.workload_type.lower()]
            else:
                raise AssemblyError(f"No weekly cost was extracted for shift {shift.id}")

    if bonus:
        per_day = parse_number(bonus["bonus_per_day"], "bonus_per_day")
        weekend = {parse_int(day, "period_ids") for day in bonus["period_ids"]}
        for s, shift in enumerate(shifts):
            costs[s] += per_day * len(weekend.intersection(work_days(shift, periods)))
    return costs


def _node_id(graph: ModellingGraph, name: str) -> Optional[str]:
    node = graph.node_by_name(name)
    return node.id if node is not None else None


def _check_constraint_nodes(
    graph: ModellingGraph, store: ExtractionStore, activated: Set[str]
) -> Set[str]:
    """Return the optional constraint tasks to skip; raise for activated nodes nobody extracted."""
    skipped = set()
    for node, task in OPTIONAL_CONSTRAINTS.get(graph.problem_type, ()):
        if store.has(task):
            continue
        if store.failed(task):
            skipped.add(task)
            logger.warning(
                f"*** Constraint {node!r} is omitted: extraction task {task!r} returned nothing ***"
            )
        elif node in activated and node != NODE_OVERTIME_LINK:
            raise AssemblyError(
                f"Constraint node {node!r} is activated but no extraction task provided its data"
            )
    return skipped


def _choose_objective(activated: Set[str], costs: Optional[np.ndarray]) -> bool:
    """True for the cost objective, False for the headcount objective."""
    wants_cost = NODE_MIN_COST in activated
    wants_count = NODE_MIN_COUNT in activated
    if wants_cost and not wants_count:
        if costs is None:
            raise AssemblyError(
                f"Objective {NODE_MIN_COST!r} was identified but no cost information was extracted"
            )
        return True
    if wants_count and not wants_cost:
        return False
    use_cost = costs is not None
    logger.info(
        f"No single objective identified; using "
        f"{'total cost' if use_cost else 'total number of employees'}"
    )
    return use_cost


def _demand(store: ExtractionStore, periods: PeriodSet) -> Tuple[np.ndarray, str]:
    task = TASK_DEMAND_PER_DAY if periods.unit == "days" else TASK_DEMAND_PER_PERIOD
    entry = store.get(task)
    if not isinstance(entry, dict) or not entry.get("value"):
        raise AssemblyError(
            f"Constraint node {NODE_DEMAND!r} needs task {task!r}, which returned nothing"
        )
    field_name = "requirement" if periods.unit == "days" else "min_employees"
    lb = np.zeros(len(periods))
    seen = set()
    try:
        for row in entry["value"]:
            period_id = parse_int(row["period_id"], "period_id")
            if not 1 <= period_id <= len(periods):
                raise AssemblyError(f"Demand refers to unknown period {period_id}")
            lb[period_id - 1] = parse_number(row[field_name], field_name)
            seen.add(period_id)
    except (KeyError, ValueError) as e:
        raise AssemblyError(f"Cannot read the labour demand: {e}") from e
    for period in periods:
        if period.id not in seen:
            logger.warning(f"No demand extracted for period {period.id}; using 0")
    unit = str(entry.get("unit") or "employees").lower()
    if "hour" not in unit:
        return lb, "employees"
    # Hours only convert to headcount through the daily hours of days-off shifts
    if periods.unit != "days":
        raise AssemblyError(
            f"Demand per period is given in {unit!r}, but shift scheduling needs a number of "
            "employees per period"
        )
    return lb, "hours"


def build_model(
    store: ExtractionStore,
    report: ActivationReport,
    graph: ModellingGraph,
    name: str = "model",
) -> ModelIR:
    """Assemble the complete model from extracted data and activated nodes.

    Args:
        store: Validated extraction outputs.
        report: Stage-1 activation report.
        graph: Modelling graph of the problem type.
        name: Model name used in rendered output.

    Returns:
        A fully instantiated ModelIR.

    Raises:
        AssemblyError: If required data is missing or inconsistent.
    """
    activated = set(report.activated_nodes)
    periods = build_periods(store)
    shifts = build_shifts(store, periods)
    skipped = _check_constraint_nodes(graph, store, activated)
    policy = overtime_policy(store, activated) if periods.unit == "minutes" else None

    model = ModelIR(name=sanitize_name(name), problem_type=graph.problem_type)
    period_node = _node_id(graph, NODE_PERIODS)
    shift_node = _node_id(graph, NODE_SHIFTS)
    model.add_set("T", periods.ids(), "periods", period_node)
    model.add_set("S", [shift.id for shift in shifts], "shifts", shift_node)
    if policy is not None:
        model.add_set(
            "O",
            list(range(policy.max_overtime_periods + 1)),
            "overtime periods",
            _node_id(graph, NODE_OVERTIMES),
        )

    model.add_param(Parameter("planning horizon", "T_max", (), periods.horizon, period_node))
    model.add_param(Parameter("period length", "t_size", (), periods.increment, period_node))
    model.add_param(
        Parameter("shift start", "start", ("S",), [shift.start for shift in shifts], shift_node)
    )
    model.add_param(
        Parameter(
            "shift duration", "duration", ("S",), [shift.duration for shift in shifts], shift_node
        )
    )

    lb, unit = _demand(store, periods)
    demand_node = _node_id(graph, NODE_DEMAND)
    model.add_param(Parameter("minimum labour demand", "lb", ("T",), lb.tolist(), demand_node))
    coverage = coverage_matrix(periods, shifts)
    model.add_param(
        Parameter(
            "shift coverage", "a", ("T", "S"), coverage.tolist(), _node_id(graph, "Shift coverage")
        )
    )

    weights = np.ones(len(shifts))
    if unit == "hours" and periods.unit == "days":
        missing = [shift.id for shift in shifts if shift.hours_per_day is None]
        if missing:
            raise AssemblyError(
                f"Demand is in hours but daily working hours are unknown for shift(s) {missing}"
            )
        weights = np.array([shift.hours_per_day for shift in shifts], dtype=float)
        model.add_param(
            Parameter("hours worked per period", "w", ("S",), weights.tolist(), demand_node)
        )

    model.add_family(
        VariableFamily("x", ("S",), "nonneg-integer", _node_id(graph, NODE_EMPLOYEES_PER_SHIFT),
                       "number of employees assigned to shift s")
    )
    x = [model.add_variable("x", (shift.id,)) for shift in shifts]

    y: List[List[str]] = []
    if policy is not None:
        v = overtime_coverage(periods, shifts, policy)
        model.add_param(
            Parameter(
                "overtime coverage",
                "v",
                ("T", "O", "S"),
                v.tolist(),
                _node_id(graph, "Overtime coverage"),
            )
        )
        model.add_family(
            VariableFamily(
                "y",
                ("S", "O"),
                "nonneg-integer",
                _node_id(graph, NODE_EMPLOYEES_PER_OVERTIME),
                "number of employees on shift s working o overtime periods",
            )
        )
        y = [
            [model.add_variable("y", (shift.id, o)) for o in range(policy.max_overtime_periods + 1)]
            for shift in shifts
        ]
        for t, period in enumerate(periods):
            terms = {
                y[s][o]: float(v[t, o, s] * weights[s])
                for s in range(len(shifts))
                for o in range(policy.max_overtime_periods + 1)
            }
            model.add_constraint(f"demand_{period.id}", terms, ">=", lb[t], demand_node)
        link_node = _node_id(graph, NODE_OVERTIME_LINK)
        for s, shift in enumerate(shifts):
            terms = {x[s]: 1.0}
            terms.update({name_: -1.0 for name_ in y[s]})
            model.add_constraint(f"overtime_link_{shift.id}", terms, "=", 0.0, link_node)
    else:
        for t, period in enumerate(periods):
            terms = {x[s]: float(coverage[t, s] * weights[s]) for s in range(len(shifts))}
            model.add_constraint(f"demand_{period.id}", terms, ">=", lb[t], demand_node)

    _add_limits(model, store, graph, shifts, x, skipped)
    _add_total(model, store, graph, x, skipped)
    if periods.unit == "days":
        _add_weekend_ratio(model, store, graph, shifts, periods, x, skipped)

    costs = derive_costs(store, shifts, periods)
    if _choose_objective(activated, costs):
        assert costs is not None
        cost_node = _node_id(graph, NODE_MIN_COST)
        model.add_param(Parameter("shift cost", "c", ("S",), costs.tolist(), cost_node))
        terms = {x[s]: float(costs[s]) for s in range(len(shifts))}
        if policy is not None:
            rate = policy.cost_per_overtime_period
            if rate is None:
                logger.warning("No overtime rate extracted; overtime periods add no cost")
            else:
                model.add_param(Parameter("overtime period cost", "c_o", (), rate, cost_node))
                for s in range(len(shifts)):
                    for o in range(1, policy.max_overtime_periods + 1):
                        terms[y[s][o]] = o * rate
        model.set_objective("minimize", terms, _node_id(graph, NODE_MIN_COST), "total cost")
    else:
        model.set_objective(
            "minimize", {name_: 1.0 for name_ in x}, _node_id(graph, NODE_MIN_COUNT),
            "total number of employees",
        )

    model.validate()
    logger.info(
        f"Assembled model {model.name}: {len(model.variables)} variables, "
        f"{len(model.constraints)} constraints"
    )
    return model


def _add_limits(
    model: ModelIR,
    store: ExtractionStore,
    graph: ModellingGraph,
    shifts: Sequence[Shift],
    x: Sequence[str],
    skipped: Set[str],
) -> None:
    index_of = {shift.id: s for s, shift in enumerate(shifts)}
    limits: List[Tuple[List[int], float]] = []
    if graph.problem_type == "shift-scheduling":
        node_id = _node_id(graph, NODE_SUBSET_LIMIT)
        rows = [] if TASK_SUBSET_LIMIT in skipped else _value(store, TASK_SUBSET_LIMIT) or []
        for row in rows:
            ids = [parse_int(i, "shift_ids") for i in row["shift_ids"]]
            unknown = [i for i in ids if i not in index_of]
            if unknown:
                raise AssemblyError(f"Shift limit refers to unknown shift(s) {unknown}")
            limits.append(([index_of[i] for i in ids], parse_number(row["max_employees"])))
    else:
        node_id = _node_id(graph, NODE_WORKLOAD_LIMIT)
        rows = [] if TASK_WORKLOAD_LIMIT in skipped else _value(store, TASK_WORKLOAD_LIMIT) or []
        for row in rows:
            wanted = str(row["workload_type"]).strip().lower()
            members = [
                s for s, shift in enumerate(shifts)
                if shift.workload_type is not None and shift.workload_type.lower() == wanted
            ]
            if not members:
                raise AssemblyError(
                    f"Limit refers to unknown workload type {row['workload_type']!r}"
                )
            limits.append((members, parse_number(row["max_employees"])))

    for k, (members, bound) in enumerate(limits, start=1):
        model.add_set(f"S_{k}", [shifts[s].id for s in members], f"shifts under limit {k}", node_id)
        model.add_param(Parameter(f"employee limit {k}", f"B_{k}", (), bound, node_id))
        model.add_constraint(f"cap_{k}", {x[s]: 1.0 for s in members}, "<=", bound, node_id)


def _add_total(
    model: ModelIR,
    store: ExtractionStore,
    graph: ModellingGraph,
    x: Sequence[str],
    skipped: Set[str],
) -> None:
    value = None if TASK_TOTAL in skipped else _value(store, TASK_TOTAL)
    if not value:
        return
    total = parse_number(value["total_employees"], "total_employees")
    node_id = _node_id(graph, NODE_TOTAL)
    model.add_param(Parameter("total number of employees", "N", (), total, node_id))
    model.add_constraint("total_employees", {name: 1.0 for name in x}, "=", total, node_id)


def _add_weekend_ratio(
    model: ModelIR,
    store: ExtractionStore,
    graph: ModellingGraph,
    shifts: Sequence[Shift],
    periods: PeriodSet,
    x: Sequence[str],
    skipped: Set[str],
) -> None:
    value = None if TASK_WEEKEND_RATIO in skipped else _value(store, TASK_WEEKEND_RATIO)
    if not value:
        return
    try:
        days = {parse_int(day, "period_ids") for day in value["period_ids"]}
        ratio = parse_number(value["ratio"], "ratio")
    except (KeyError, ValueError) as e:
        raise AssemblyError(f"Cannot read the weekend-off ratio: {e}") from e
    if not 0 <= ratio <= 1:
        raise AssemblyError(f"Weekend-off ratio {ratio} is not between 0 and 1")

    off = [s for s, shift in enumerate(shifts) if days <= set(rest_days(shift, periods))]
    node_id = _node_id(graph, NODE_WEEKEND_RATIO)
    model.add_set(
        "Off", [shifts[s].id for s in off], "shifts resting on every weekend day", node_id
    )
    model.add_param(Parameter("weekend-off ratio", "rho", (), ratio, node_id))
    terms = {x[s]: (1.0 if s in off else 0.0) - ratio for s in range(len(shifts))}
    model.add_constraint("weekend_off_ratio", terms, ">=", 0.0, node_id)
