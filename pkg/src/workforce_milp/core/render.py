"""LaTeX and LP-format writers for assembled models."""

import logging
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from ..utils.helpers import format_number
from .model import ModelIR, Parameter, Variable

logger = logging.getLogger(__name__)

LP_LINE_WIDTH = 78
_LATEX_SENSES = {"<=": r"\leq", ">=": r"\geq", "=": "="}
_LATEX_DOMAINS = {
    "nonneg-integer": r"\mathbb{Z}_{\geq 0}",
    "nonneg-continuous": r"\mathbb{R}_{\geq 0}",
    "binary": r"\{0, 1\}",
}
_LATEX_SPECIAL = {
    "\\": r"\textbackslash{}",
    "&": r"\&",
    "%": r"\%",
    "$": r"\$",
    "#": r"\#",
    "_": r"\_",
    "{": r"\{",
    "}": r"\}",
    "~": r"\textasciitilde{}",
    "^": r"\textasciicircum{}",
}


def escape_latex(text: str) -> str:
    return "".join(_LATEX_SPECIAL.get(char, char) for char in text)


def latex_symbol(symbol: str) -> str:
    """``T_max`` -> ``T_{max}``; multi-letter names without a subscript go in ``\\mathit``."""
    head, _, tail = symbol.partition("_")
    if len(head) > 1:
        head = rf"\mathit{{{head}}}"
    return f"{head}_{{{tail}}}" if tail else head


def latex_variable(variable: Variable) -> str:
    index = ",".join(str(i) for i in variable.index)
    return f"{latex_symbol(variable.symbol)}_{{{index}}}"


def _ordered_terms(model: ModelIR, terms: Dict[str, float]) -> List[str]:
    return [name for name in model.variables if name in terms]


def _linear_expression(model: ModelIR, terms: Dict[str, float], latex: bool) -> str:
    names = _ordered_terms(model, terms)
    if not names:
        return "0"
    parts: List[str] = []
    for position, name in enumerate(names):
        coefficient = terms[name]
        label = latex_variable(model.variables[name]) if latex else name
        magnitude = abs(coefficient)
        scaled = label if magnitude == 1 else f"{format_number(magnitude)} {label}"
        if position == 0:
            parts.append(f"-{scaled}" if coefficient < 0 else scaled)
        else:
            parts.append(f"{'-' if coefficient < 0 else '+'} {scaled}")
    return " ".join(parts)


def _latex_values(values: Any) -> str:
    array = np.asarray(values, dtype=float)
    if array.ndim == 0:
        return format_number(float(array))
    if array.ndim == 1:
        return "(" + ", ".join(format_number(v) for v in array) + ")"
    rows = [" & ".join(format_number(v) for v in row) for row in array]
    return "\\begin{pmatrix}\n" + " \\\\\n".join(rows) + "\n\\end{pmatrix}"


def _latex_parameter(param: Parameter) -> List[str]:
    symbol = latex_symbol(param.symbol)
    description = escape_latex(param.name)
    array = np.asarray(param.values, dtype=float)
    if array.ndim <= 2:
        index = ",".join(s.lower() for s in param.index_sets)
        target = f"{symbol}_{{{index}}}" if index and "_" not in param.symbol else symbol
        return [f"\\[ {target} = {_latex_values(array)} \\quad \\text{{{description}}} \\]"]
    # 3-index tensors are printed one slice per value of the middle index
    lines = []
    middle = param.index_sets[1].lower()
    for position in range(array.shape[1]):
        lines.append(
            f"\\[ {symbol}_{{\\cdot,{position},\\cdot}} = {_latex_values(array[:, position, :])} "
            f"\\quad \\text{{{description}, ${middle} = {position}$}} \\]"
        )
    return lines


def _latex_set(name: str, members: Sequence[Any], description: str) -> str:
    listed = ", ".join(str(member) for member in members)
    set_symbol = latex_symbol(name)
    return f"\\item ${set_symbol} = \\{{{listed}\\}}$: {escape_latex(description)}"


def render_latex(model: ModelIR) -> str:
    """Render the model as a LaTeX fragment.

    Sections follow the order sets, parameters, decision variables, objective and
    constraints. Every parameter value is printed.
    """
    lines = [
        f"\\section*{{Model: {escape_latex(model.name)}}}",
        "",
        "\\subsection*{Sets}",
        "\\begin{itemize}",
    ]
    for name, members in model.sets.items():
        lines.append(_latex_set(name, members, model.set_descriptions.get(name, "")))
    lines += ["\\end{itemize}", ""]

    if model.params:
        lines.append("\\subsection*{Parameters}")
        for param in model.params.values():
            lines.extend(_latex_parameter(param))
        lines.append("")

    lines += ["\\subsection*{Decision Variables}", "\\begin{itemize}"]
    for family in model.families.values():
        indices = ", ".join(f"{s.lower()} \\in {latex_symbol(s)}" for s in family.index_sets)
        subscript = ",".join(s.lower() for s in family.index_sets)
        lines.append(
            f"\\item ${family.symbol}_{{{subscript}}} \\in {_LATEX_DOMAINS[family.domain]}$, "
            f"${indices}$: {escape_latex(family.description)}"
        )
    lines += ["\\end{itemize}", ""]

    if model.objective is not None:
        operator = "\\min" if model.objective.sense == "minimize" else "\\max"
        lines += [
            "\\subsection*{Objective}",
            "\\begin{align*}",
            f"{operator} \\quad & {_linear_expression(model, model.objective.terms, latex=True)}",
            "\\end{align*}",
            "",
        ]

    if model.constraints:
        lines += ["\\subsection*{Constraints}", "\\begin{align*}"]
        rows = []
        for constraint in model.constraints:
            lhs = _linear_expression(model, constraint.terms, latex=True)
            rows.append(
                f"{lhs} &{_LATEX_SENSES[constraint.sense]} {format_number(constraint.rhs)} "
                f"&& \\text{{({escape_latex(constraint.label)})}}"
            )
        lines.append(" \\\\\n".join(rows))
        lines += ["\\end{align*}", ""]

    return "\n".join(lines).rstrip() + "\n"


def _wrap(prefix: str, tokens: Iterable[str], indent: str = "   ") -> List[str]:
    lines: List[str] = []
    current = prefix
    for token in tokens:
        candidate = f"{current} {token}" if current.strip() else f"{current}{token}"
        if len(candidate) > LP_LINE_WIDTH and current.strip():
            lines.append(current)
            current = f"{indent}{token}"
        else:
            current = candidate
    lines.append(current)
    return lines


def lp_number(value: float) -> str:
    """Number text for LP files: integers without a point, anything else at full precision."""
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def _lp_tokens(model: ModelIR, terms: Dict[str, float]) -> List[str]:
    names = _ordered_terms(model, terms)
    if not names:
        return ["0", next(iter(model.variables))]
    tokens = []
    for position, name in enumerate(names):
        coefficient = terms[name]
        magnitude = abs(coefficient)
        term = name if magnitude == 1 else f"{lp_number(magnitude)} {name}"
        if position == 0:
            tokens.append(f"- {term}" if coefficient < 0 else term)
        else:
            tokens.append(f"{'-' if coefficient < 0 else '+'} {term}")
    return tokens


def render_lp(model: ModelIR) -> str:
    """Render the model in LP file format.

    Variable and row names are already restricted to ``[A-Za-z0-9_]``; integer variables
    are listed under ``Generals`` and binaries under ``Binaries``.
    """
    lines = [f"\\ Model {model.name}", f"\\ Problem type: {model.problem_type}"]
    objective = model.objective
    maximize = objective is not None and objective.sense == "maximize"
    lines.append("Maximize" if maximize else "Minimize")
    lines.extend(_wrap(" obj:", _lp_tokens(model, objective.terms if objective else {})))

    lines.append("Subject To")
    for constraint in model.constraints:
        tokens = _lp_tokens(model, constraint.terms)
        tokens += [constraint.sense, lp_number(constraint.rhs)]
        lines.extend(_wrap(f" {constraint.label}:", tokens))

    bounded = [v for v in model.variables.values() if v.upper is not None and v.domain != "binary"]
    if bounded:
        lines.append("Bounds")
        lines.extend(
            f" {v.name} <= {lp_number(v.upper)}" for v in bounded  # type: ignore[arg-type]
        )

    generals = [v.name for v in model.variables.values() if v.domain == "nonneg-integer"]
    if generals:
        lines.append("Generals")
        lines.extend(_wrap(" ", generals, indent=" "))
    binaries = [v.name for v in model.variables.values() if v.domain == "binary"]
    if binaries:
        lines.append("Binaries")
        lines.extend(_wrap(" ", binaries, indent=" "))
    lines.append("End")
    logger.debug(f"Rendered {len(model.constraints)} rows of {model.name} in LP format")
    return "\n".join(lines) + "\n"
