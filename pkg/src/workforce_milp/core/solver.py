"""Exact solving of small MILPs: dense two-phase simplex plus best-bound branch and bound."""

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..config import settings
from ..utils.helpers import format_number
from .exceptions import SolverError
from .model import ModelIR

logger = logging.getLogger(__name__)

STATUSES = ("optimal", "infeasible", "unbounded", "node-limit")
ROW_SENSES = ("<=", "=", ">=")
_PHASE_ONE_TOL = 1e-7


@dataclass
class StandardForm:
    """Matrix form of a model: ``sense c.x`` subject to ``A x (senses) b`` and ``lb <= x <= ub``."""

    names: List[str]
    c: np.ndarray
    A: np.ndarray
    senses: List[str]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    sense: str = "minimize"
    row_labels: List[str] = field(default_factory=list)
    name: str = "model"

    def __post_init__(self) -> None:
        n, m = len(self.names), len(self.senses)
        self.c = np.asarray(self.c, dtype=float).reshape(n)
        self.A = np.asarray(self.A, dtype=float).reshape(m, n)
        self.b = np.asarray(self.b, dtype=float).reshape(m)
        self.lb = np.asarray(self.lb, dtype=float).reshape(n)
        self.ub = np.asarray(self.ub, dtype=float).reshape(n)
        self.integer = np.asarray(self.integer, dtype=bool).reshape(n)
        if not self.row_labels:
            self.row_labels = [f"c{i + 1}" for i in range(m)]
        if self.sense not in ("minimize", "maximize"):
            raise SolverError(f"Unknown objective sense {self.sense!r}")
        if any(s not in ROW_SENSES for s in self.senses):
            raise SolverError(f"Unknown row sense in {self.senses}")
        if not all(np.all(np.isfinite(array)) for array in (self.c, self.A, self.b)):
            raise SolverError("Objective, matrix and right-hand sides must be finite")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)) or np.any(self.lb > self.ub):
            raise SolverError("Every variable needs lower bound <= upper bound")

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return len(self.senses)

    @classmethod
    def from_model(cls, model: ModelIR) -> "StandardForm":
        names = list(model.variables)
        column = {name: j for j, name in enumerate(names)}
        A = np.zeros((len(model.constraints), len(names)))
        for i, constraint in enumerate(model.constraints):
            for name, coefficient in constraint.terms.items():
                A[i, column[name]] = coefficient
        c = np.zeros(len(names))
        sense = "minimize"
        if model.objective is not None:
            sense = model.objective.sense
            for name, coefficient in model.objective.terms.items():
                c[column[name]] = coefficient
        upper = []
        for variable in model.variables.values():
            if variable.upper is not None:
                upper.append(variable.upper)
            else:
                upper.append(1.0 if variable.domain == "binary" else math.inf)
        return cls(
            names=names,
            c=c,
            A=A,
            senses=[constraint.sense for constraint in model.constraints],
            b=np.array([constraint.rhs for constraint in model.constraints]),
            lb=np.zeros(len(names)),
            ub=np.array(upper),
            integer=np.array([variable.is_integer for variable in model.variables.values()]),
            sense=sense,
            row_labels=[constraint.label for constraint in model.constraints],
            name=model.name,
        )


@dataclass
class SolveResult:
    status: str
    objective: Optional[float] = None
    assignment: Dict[str, float] = field(default_factory=dict)
    nodes_explored: int = 0
    best_bound: Optional[float] = None
    iterations: int = 0
    auto_bounds: Dict[str, float] = field(default_factory=dict)
    log: List[str] = field(default_factory=list)

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"

    def nonzero(self) -> Dict[str, float]:
        return {
            name: value
            for name, value in self.assignment.items()
            if abs(value) > settings.INTEGRALITY_TOL
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "objective": self.objective,
            "best_bound": self.best_bound,
            "nodes_explored": self.nodes_explored,
            "iterations": self.iterations,
            "auto_bounds": self.auto_bounds,
            "assignment": self.assignment,
        }


@dataclass
class _Relaxation:
    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0


class _Tableau:
    """Dense simplex tableau; the last row holds reduced costs and the last column the rhs."""

    def __init__(self, matrix: np.ndarray, basis: List[int], max_iterations: int):
        self.matrix = matrix
        self.basis = basis
        self.max_iterations = max_iterations
        self.iterations = 0
        self.log: List[str] = []

    @property
    def rows(self) -> int:
        return self.matrix.shape[0] - 1

    def pivot(self, row: int, col: int) -> None:
        tab = self.matrix
        tab[row] /= tab[row, col]
        factors = tab[:, col].copy()
        factors[row] = 0.0
        tab -= np.outer(factors, tab[row])
        self.basis[row] = col
        if not np.all(np.isfinite(tab)):
            raise SolverError("Numerical breakdown in simplex pivot", log=self.log)

    def run(self, columns: int, phase: int) -> str:
        """Pivot until optimal over the first ``columns`` columns; returns optimal or unbounded."""
        streak = 0
        bland = False
        while True:
            reduced = self.matrix[-1, :columns]
            candidates = np.flatnonzero(reduced < -settings.FEASIBILITY_TOL)
            if candidates.size == 0:
                return "optimal"
            col = int(candidates[0] if bland else candidates[np.argmin(reduced[candidates])])

            column = self.matrix[: self.rows, col]
            rhs = self.matrix[: self.rows, -1]
            eligible = np.flatnonzero(column > settings.PIVOT_TOL)
            if eligible.size == 0:
                self.log.append(f"phase {phase}: column {col} unbounded")
                return "unbounded"
            ratios = rhs[eligible] / column[eligible]
            best = ratios.min()
            tied = eligible[ratios <= best + settings.PIVOT_TOL]
            row = int(min(tied, key=lambda r: self.basis[r]))

            streak = streak + 1 if best <= settings.PIVOT_TOL else 0
            if not bland and streak >= settings.DEGENERACY_STREAK:
                bland = True
                self.log.append(
                    f"phase {phase}: switching to Bland's rule after {streak} degenerate pivots"
                )

            self.iterations += 1
            if self.iterations > self.max_iterations:
                raise SolverError(
                    f"Simplex exceeded {self.max_iterations} iterations", log=self.log
                )
            self.log.append(
                f"phase {phase} iter {self.iterations}: "
                f"enter {col}, leave row {row}, step {best:.6g}"
            )
            self.pivot(row, col)


def _substitute(
    form: StandardForm, lb: np.ndarray, ub: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, List[Tuple[int, float]]]:
    """Rewrite ``x = offset + T y`` with ``y >= 0``.

    Returns offset, T and the finite upper bounds of ``y``.
    """
    columns: List[Tuple[int, float]] = []
    offset = np.zeros(form.n_vars)
    uppers: List[Tuple[int, float]] = []
    for j in range(form.n_vars):
        if np.isfinite(lb[j]):
            offset[j] = lb[j]
            columns.append((j, 1.0))
            if np.isfinite(ub[j]):
                uppers.append((len(columns) - 1, ub[j] - lb[j]))
        elif np.isfinite(ub[j]):
            offset[j] = ub[j]
            columns.append((j, -1.0))
        else:
            columns.append((j, 1.0))
            columns.append((j, -1.0))
    transform = np.zeros((form.n_vars, len(columns)))
    for k, (j, sign) in enumerate(columns):
        transform[j, k] = sign
    return offset, transform, uppers


def _solve_relaxation(
    form: StandardForm,
    lb: np.ndarray,
    ub: np.ndarray,
    max_iterations: int = settings.MAX_SIMPLEX_ITERATIONS,
) -> _Relaxation:
    if np.any(lb > ub + settings.FEASIBILITY_TOL):
        return _Relaxation("infeasible")

    offset, transform, uppers = _substitute(form, lb, ub)
    k = transform.shape[1]
    cost = (form.c if form.sense == "minimize" else -form.c) @ transform

    rows = [form.A @ transform]
    rhs = [form.b - form.A @ offset]
    senses = list(form.senses)
    if uppers:
        bound_rows = np.zeros((len(uppers), k))
        for i, (col, _) in enumerate(uppers):
            bound_rows[i, col] = 1.0
        rows.append(bound_rows)
        rhs.append(np.array([bound for _, bound in uppers]))
        senses += ["<="] * len(uppers)
    A = np.vstack(rows) if rows else np.zeros((0, k))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    m = len(senses)

    flip = {"<=": ">=", ">=": "<=", "=": "="}
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1
            b[i] *= -1
            senses[i] = flip[senses[i]]

    n_slack = sum(1 for s in senses if s != "=")
    n_art = sum(1 for s in senses if s != "<=")
    art_start = k + n_slack
    tab = np.zeros((m + 1, art_start + n_art + 1))
    tab[:m, :k] = A
    tab[:m, -1] = b
    basis: List[int] = []
    slack = k
    art = art_start
    for i, s in enumerate(senses):
        if s == "<=":
            tab[i, slack] = 1.0
            basis.append(slack)
            slack += 1
            continue
        if s == ">=":
            tab[i, slack] = -1.0
            slack += 1
        tab[i, art] = 1.0
        basis.append(art)
        art += 1

    tableau = _Tableau(tab, basis, max_iterations)
    if n_art:
        tab[-1, art_start:art_start + n_art] = 1.0
        for i, col in enumerate(basis):
            if col >= art_start:
                tab[-1] -= tab[i]
        tableau.run(art_start + n_art, phase=1)
        if -tableau.matrix[-1, -1] > _PHASE_ONE_TOL:
            return _Relaxation("infeasible", iterations=tableau.iterations)

        row = 0
        while row < tableau.rows:
            if tableau.basis[row] >= art_start:
                entries = np.abs(tableau.matrix[row, :art_start])
                nonzero = np.flatnonzero(entries > settings.PIVOT_TOL)
                if nonzero.size:
                    tableau.pivot(row, int(nonzero[0]))
                else:
                    tableau.matrix = np.delete(tableau.matrix, row, axis=0)
                    tableau.basis.pop(row)
                    continue
            row += 1
        tableau.matrix = np.delete(tableau.matrix, range(art_start, art_start + n_art), axis=1)

    tab = tableau.matrix
    tab[-1, :] = 0.0
    tab[-1, :k] = cost
    for i, col in enumerate(tableau.basis):
        if tab[-1, col] != 0.0:
            tab[-1] -= tab[-1, col] * tab[i]
    if tableau.run(art_start, phase=2) == "unbounded":
        return _Relaxation("unbounded", iterations=tableau.iterations)

    y = np.zeros(art_start)
    for i, col in enumerate(tableau.basis):
        y[col] = tableau.matrix[i, -1]
    x = offset + transform @ y[:k]
    return _Relaxation("optimal", x, float(form.c @ x), tableau.iterations)


def _assignment(form: StandardForm, x: np.ndarray) -> Dict[str, float]:
    return {name: float(value) for name, value in zip(form.names, x)}


def solve_lp(
    form: StandardForm,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
) -> SolveResult:
    """Solve the continuous relaxation of a standard form.

    Raises:
        SolverError: On numerical breakdown or when the iteration limit is hit.
    """
    lb = form.lb if lower is None else np.asarray(lower, dtype=float)
    ub = form.ub if upper is None else np.asarray(upper, dtype=float)
    relaxation = _solve_relaxation(form, lb, ub)
    if relaxation.status != "optimal":
        return SolveResult(relaxation.status, iterations=relaxation.iterations)
    assert relaxation.x is not None
    return SolveResult(
        status="optimal",
        objective=relaxation.objective,
        assignment=_assignment(form, relaxation.x),
        best_bound=relaxation.objective,
        iterations=relaxation.iterations,
    )


def auto_bounds(form: StandardForm) -> Dict[int, float]:
    """Upper bounds for integer variables that have none.

    One bound is shared by all of them: the largest ``ceil(rhs / smallest positive
    coefficient)`` over rows with a positive rhs, or 0 when there is no such row.
    """
    missing = [j for j in range(form.n_vars) if form.integer[j] and not np.isfinite(form.ub[j])]
    if not missing:
        return {}
    bound = 0.0
    for i in range(form.n_rows):
        positive = form.A[i][form.A[i] > settings.PIVOT_TOL]
        if form.b[i] > 0 and positive.size:
            bound = max(bound, math.ceil(form.b[i] / positive.min() - settings.INTEGRALITY_TOL))
    return {j: max(bound, math.ceil(form.lb[j])) for j in missing}


def _most_fractional(form: StandardForm, x: np.ndarray) -> Optional[int]:
    best, chosen = settings.INTEGRALITY_TOL, None
    for j in np.flatnonzero(form.integer):
        distance = min(x[j] - math.floor(x[j]), math.ceil(x[j]) - x[j])
        if distance > best:
            best, chosen = distance, int(j)
    return chosen


def check_feasibility(form: StandardForm, x: np.ndarray, tol: float = 1e-6) -> List[str]:
    """Labels of rows (and ``bound:<name>`` entries) violated by ``x`` beyond ``tol``."""
    violated = []
    activity = form.A @ x
    for label, sense, lhs, rhs in zip(form.row_labels, form.senses, activity, form.b):
        if (sense == "<=" and lhs > rhs + tol) or (sense == ">=" and lhs < rhs - tol) or (
            sense == "=" and abs(lhs - rhs) > tol
        ):
            violated.append(label)
    for name, value, low, high in zip(form.names, x, form.lb, form.ub):
        if value < low - tol or value > high + tol:
            violated.append(f"bound:{name}")
    return violated


def objective_step(form: StandardForm) -> int:
    """Spacing of attainable objective values, or 0 when there is none to exploit.

    When every variable with a nonzero cost is integer and every cost is a whole number,
    each integer solution has an objective that is a multiple of the gcd of the costs.
    """
    step = 0
    for j in np.flatnonzero(np.abs(form.c) > settings.INTEGRALITY_TOL):
        cost = abs(form.c[j])
        if not form.integer[j] or abs(cost - round(cost)) > settings.INTEGRALITY_TOL:
            return 0
        step = math.gcd(step, int(round(cost)))
    return step


def _round_up(bound: float, step: int) -> float:
    if not step:
        return bound
    return math.ceil(bound / step - settings.INTEGRALITY_TOL) * step


def _rounding_heuristic(
    form: StandardForm, x: np.ndarray, lb: np.ndarray, ub: np.ndarray
) -> Optional[np.ndarray]:
    """Best feasible point among the relaxation rounded up, to nearest and down."""
    best, best_value = None, math.inf
    sign = 1.0 if form.sense == "minimize" else -1.0
    for rounding in (np.ceil, np.round, np.floor):
        candidate = x.copy()
        candidate[form.integer] = rounding(x[form.integer])
        candidate = np.clip(candidate, lb, ub)
        if _most_fractional(form, candidate) is not None or check_feasibility(form, candidate):
            continue
        value = sign * float(form.c @ candidate)
        if value < best_value:
            best, best_value = candidate, value
    return best


@dataclass
class _Search:
    status: str = "optimal"
    incumbent: Optional[np.ndarray] = None
    value: float = math.inf
    open_bound: Optional[float] = None
    nodes: int = 0
    iterations: int = 0
    log: List[str] = field(default_factory=list)


def _branch_and_bound(
    form: StandardForm, upper: np.ndarray, node_limit: int, step: int
) -> _Search:
    """Best-bound search; ties on the bound go to the deepest node."""
    sign = 1.0 if form.sense == "minimize" else -1.0
    lower = form.lb.copy()
    search = _Search()

    root = _solve_relaxation(form, lower, upper)
    search.iterations += root.iterations
    if root.status != "optimal":
        search.status = root.status
        return search
    assert root.x is not None
    rounded = _rounding_heuristic(form, root.x, lower, upper)
    if rounded is not None:
        search.incumbent, search.value = rounded, sign * float(form.c @ rounded)
        search.log.append(f"rounding: incumbent {sign * search.value:.6g}")

    counter = 0
    heap: List[Tuple[float, int, int, np.ndarray, np.ndarray, _Relaxation]] = [
        (_round_up(sign * root.objective, step), 0, counter, lower, upper, root)  # type: ignore
    ]
    while heap:
        bound, depth, node_id, node_lb, node_ub, relaxation = heapq.heappop(heap)
        if bound >= search.value - settings.GAP_TOL:
            heap.clear()
            break
        if search.nodes >= node_limit:
            heapq.heappush(heap, (bound, depth, node_id, node_lb, node_ub, relaxation))
            search.status = "node-limit"
            logger.warning(f"Node limit {node_limit} reached for {form.name}")
            break
        search.nodes += 1

        assert relaxation.x is not None
        j = _most_fractional(form, relaxation.x)
        if j is None:
            search.incumbent = relaxation.x
            search.value = sign * relaxation.objective  # type: ignore[operator]
            search.log.append(f"node {node_id}: incumbent {sign * search.value:.6g}")
            continue

        value = relaxation.x[j]
        search.log.append(
            f"node {node_id}: bound {sign * bound:.6g}, branch on {form.names[j]} = {value:.6g}"
        )
        down_ub = node_ub.copy()
        down_ub[j] = math.floor(value)
        up_lb = node_lb.copy()
        up_lb[j] = math.ceil(value)
        for child_lb, child_ub in ((node_lb, down_ub), (up_lb, node_ub)):
            child = _solve_relaxation(form, child_lb, child_ub)
            search.iterations += child.iterations
            if child.status != "optimal":
                continue
            child_bound = _round_up(sign * child.objective, step)  # type: ignore[operator]
            if child_bound < search.value - settings.GAP_TOL:
                counter += 1
                heapq.heappush(heap, (child_bound, depth - 1, counter, child_lb, child_ub, child))

    if search.status == "node-limit" and heap:
        search.open_bound = min(entry[0] for entry in heap)
    elif search.incumbent is None:
        search.status = "infeasible"
    return search


def _bounded(form: StandardForm, applied: Dict[int, float]) -> np.ndarray:
    upper = form.ub.copy()
    for j, bound in applied.items():
        upper[j] = bound
    return upper


def solve_milp(form: StandardForm, node_limit: int = settings.NODE_LIMIT) -> SolveResult:
    """Solve a MILP by best-bound branch and bound on its LP relaxations.

    The root relaxation is solved with the model's own bounds, so an unbounded model is
    reported as such. The search itself runs with :func:`auto_bounds`; whenever the best
    solution rests on one of those bounds, the bound is doubled and the search repeated
    until the objective stops improving.

    Args:
        form: Problem in standard form.
        node_limit: Maximum number of branch-and-bound nodes to expand per search.

    Returns:
        SolveResult. A node-limit result carries the best incumbent found, if any.

    Raises:
        SolverError: If an LP relaxation breaks down numerically.
    """
    sign = 1.0 if form.sense == "minimize" else -1.0
    root = _solve_relaxation(form, form.lb, form.ub)
    if root.status != "optimal":
        logger.info(f"Root relaxation of {form.name} is {root.status}")
        return SolveResult(root.status, iterations=root.iterations)

    step = objective_step(form)
    root_bound = _round_up(sign * root.objective, step)  # type: ignore[operator]
    applied = auto_bounds(form)
    search = _branch_and_bound(form, _bounded(form, applied), node_limit, step)
    nodes, iterations = search.nodes, root.iterations + search.iterations
    for _ in range(settings.MAX_BOUND_DOUBLINGS):
        if search.status != "optimal" or search.value <= root_bound + settings.GAP_TOL:
            break
        assert search.incumbent is not None
        at_bound = {
            j
            for j, bound in applied.items()
            if search.incumbent[j] >= bound - settings.INTEGRALITY_TOL
        }
        if not at_bound:
            break
        widened = {
            j: max(2.0 * bound, 1.0) if j in at_bound else bound for j, bound in applied.items()
        }
        retry = _branch_and_bound(form, _bounded(form, widened), node_limit, step)
        nodes += retry.nodes
        iterations += retry.iterations
        if retry.status != "optimal" or retry.value >= search.value - settings.GAP_TOL:
            break
        applied, search = widened, retry
    else:
        logger.warning(f"Stopped widening automatic bounds of {form.name}")

    recorded = {form.names[j]: float(bound) for j, bound in applied.items()}
    if recorded:
        logger.warning(
            f"Applied automatic upper bound {max(recorded.values()):g} "
            f"to {len(recorded)} integer variables"
        )

    if search.incumbent is None:
        logger.info(f"{form.name}: {search.status} after {nodes} nodes")
        return SolveResult(
            search.status,
            nodes_explored=nodes,
            iterations=iterations,
            auto_bounds=recorded,
            log=search.log,
        )

    x = search.incumbent.copy()
    x[form.integer] = np.round(x[form.integer])
    objective = float(form.c @ x)
    best_bound = objective
    if search.open_bound is not None:
        best_bound = float(sign * search.open_bound)
    violated = check_feasibility(form, x)
    if violated:
        logger.warning(f"Rounded solution of {form.name} violates {violated}")
    logger.info(f"{form.name}: {search.status} objective {objective:g} after {nodes} nodes")
    return SolveResult(
        status=search.status,
        objective=objective,
        assignment=_assignment(form, x),
        nodes_explored=nodes,
        best_bound=best_bound,
        iterations=iterations,
        auto_bounds=recorded,
        log=search.log,
    )


def solve_model(model: ModelIR, node_limit: int = settings.NODE_LIMIT) -> SolveResult:
    return solve_milp(StandardForm.from_model(model), node_limit)


def format_solution(result: SolveResult) -> str:
    """Plain-text solution listing: objective value followed by the nonzero variables."""
    if result.objective is None or result.status not in ("optimal", "node-limit"):
        return f"No optimal solution found.\nStatus: {result.status}"
    lines = [f"Optimal objective value: {format_number(result.objective)}"]
    if result.status == "node-limit":
        lines[0] = f"Best objective value found (node limit): {format_number(result.objective)}"
    lines.append("Variable values:")
    for name, value in result.nonzero().items():
        lines.append(f"{name} = {format_number(value)}")
    return "\n".join(lines)
