"""Reader for the LP-format subset written by ``render_lp``."""

import logging
import math
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from .exceptions import LPParseError, SolverError
from .solver import StandardForm

logger = logging.getLogger(__name__)

_SECTIONS = {
    "minimize": "objective",
    "minimise": "objective",
    "minimum": "objective",
    "min": "objective",
    "maximize": "objective",
    "maximise": "objective",
    "maximum": "objective",
    "max": "objective",
    "subject to": "constraints",
    "such that": "constraints",
    "st": "constraints",
    "s.t.": "constraints",
    "bounds": "bounds",
    "bound": "bounds",
    "generals": "generals",
    "general": "generals",
    "gen": "generals",
    "integers": "generals",
    "binaries": "binaries",
    "binary": "binaries",
    "bin": "binaries",
    "end": "end",
}
_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<label>[A-Za-z_][A-Za-z0-9_.]*)\s*:"
    r"|(?P<sense><=|>=|=<|=>|<|>|=)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[Ii]nf(?:inity)?\b)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_.\[\]]*)"
    r"|(?P<sign>[+-])"
    r")"
)
_SENSE_ALIASES = {"<": "<=", "=<": "<=", "<=": "<=", ">": ">=", "=>": ">=", ">=": ">=", "=": "="}

Token = Tuple[str, str, int]


def _tokenize(text: str, line: int) -> List[Token]:
    tokens: List[Token] = []
    position = 0
    text = text.rstrip()
    while position < len(text):
        match = _TOKEN_RE.match(text, position)
        if not match or match.end() == position:
            raise LPParseError(f"Unexpected text {text[position:].strip()!r}", line)
        kind = match.lastgroup
        assert kind is not None
        tokens.append((kind, match.group(kind), line))
        position = match.end()
    return tokens


def _number(token: str) -> float:
    lowered = token.lower()
    return math.inf if lowered.startswith("inf") else float(token)


class _Reader:
    def __init__(self) -> None:
        self.names: List[str] = []
        self.sense = "minimize"
        self.model_name = "lp"
        self.objective: Dict[str, float] = {}
        self.rows: List[Tuple[str, Dict[str, float], str, float]] = []
        self.lower: Dict[str, float] = {}
        self.upper: Dict[str, float] = {}
        self.integers: List[str] = []

    def variable(self, name: str) -> str:
        if name not in self.names:
            self.names.append(name)
        return name

    def expression(self, tokens: List[Token], start: int) -> Tuple[Dict[str, float], int]:
        """Read ``[sign] [coef] name ...`` terms until a sense token or the end."""
        terms: Dict[str, float] = {}
        position = start
        while position < len(tokens) and tokens[position][0] != "sense":
            sign = 1.0
            while position < len(tokens) and tokens[position][0] == "sign":
                if tokens[position][1] == "-":
                    sign = -sign
                position += 1
            coefficient = 1.0
            if position < len(tokens) and tokens[position][0] == "number":
                coefficient = _number(tokens[position][1])
                position += 1
            if position >= len(tokens) or tokens[position][0] != "name":
                line = tokens[min(position, len(tokens) - 1)][2]
                raise LPParseError("Expected a variable name in linear expression", line)
            name = self.variable(tokens[position][1])
            terms[name] = terms.get(name, 0.0) + sign * coefficient
            position += 1
        return terms, position

    def read_objective(self, tokens: List[Token]) -> None:
        if not tokens:
            return
        start = 1 if tokens[0][0] == "label" else 0
        terms, position = self.expression(tokens, start)
        if position != len(tokens):
            raise LPParseError(
                "Objective must not contain a relational operator", tokens[position][2]
            )
        self.objective = terms

    def read_constraints(self, tokens: List[Token]) -> None:
        position = 0
        while position < len(tokens):
            line = tokens[position][2]
            label = f"R{len(self.rows) + 1}"
            if tokens[position][0] == "label":
                label = tokens[position][1]
                position += 1
            terms, position = self.expression(tokens, position)
            if position >= len(tokens):
                raise LPParseError(f"Constraint {label} has no relational operator", line)
            sense = _SENSE_ALIASES[tokens[position][1]]
            position += 1
            sign = 1.0
            if position < len(tokens) and tokens[position][0] == "sign":
                sign = -1.0 if tokens[position][1] == "-" else 1.0
                position += 1
            if position >= len(tokens) or tokens[position][0] != "number":
                raise LPParseError(f"Constraint {label} needs a numeric right-hand side", line)
            self.rows.append((label, terms, sense, sign * _number(tokens[position][1])))
            position += 1

    def read_bound(self, tokens: List[Token]) -> None:
        line = tokens[0][2]
        values = [(kind, text) for kind, text, _ in _fold_signs(tokens)]
        kinds = [kind for kind, _ in values]

        if kinds == ["name", "name"] and values[1][1].lower() == "free":
            name = self.variable(values[0][1])
            self.lower[name], self.upper[name] = -math.inf, math.inf
        elif kinds == ["name", "sense", "number"]:
            name = self.variable(values[0][1])
            self._apply(name, _SENSE_ALIASES[values[1][1]], float(values[2][1]))
        elif kinds == ["number", "sense", "name"]:
            name = self.variable(values[2][1])
            reverse = {"<=": ">=", ">=": "<=", "=": "="}
            self._apply(name, reverse[_SENSE_ALIASES[values[1][1]]], float(values[0][1]))
        elif kinds == ["number", "sense", "name", "sense", "number"]:
            name = self.variable(values[2][1])
            if _SENSE_ALIASES[values[1][1]] != "<=" or _SENSE_ALIASES[values[3][1]] != "<=":
                raise LPParseError("Double bounds must read 'low <= x <= high'", line)
            self.lower[name], self.upper[name] = float(values[0][1]), float(values[4][1])
        else:
            raise LPParseError("Unsupported bound statement", line)

    def _apply(self, name: str, sense: str, value: float) -> None:
        if sense in ("<=", "="):
            self.upper[name] = value
        if sense in (">=", "="):
            self.lower[name] = value


def _fold_signs(tokens: List[Token]) -> List[Token]:
    """Merge a leading sign into the number that follows it."""
    folded: List[Token] = []
    position = 0
    while position < len(tokens):
        kind, text, line = tokens[position]
        if kind == "sign" and position + 1 < len(tokens) and tokens[position + 1][0] == "number":
            value = _number(tokens[position + 1][1])
            folded.append(("number", str(-value if text == "-" else value), line))
            position += 2
            continue
        if kind == "number":
            text = str(_number(text))
        folded.append((kind, text, line))
        position += 1
    return folded


def parse_lp(text: str) -> StandardForm:
    """Parse LP-format text into a StandardForm.

    Handles objective, ``Subject To`` rows spanning several lines, ``Bounds`` (including
    ``free`` and double bounds), ``Generals`` and ``Binaries``. Section keywords are case
    insensitive and a backslash starts a comment.

    Raises:
        LPParseError: With the offending line number.
    """
    reader = _Reader()
    section: Optional[str] = None
    seen_objective = False
    statements: Dict[str, List[Token]] = {"objective": [], "constraints": []}

    for number, raw in enumerate(text.splitlines(), start=1):
        comment = raw.find("\\")
        if comment != -1:
            note = raw[comment + 1:].strip()
            if note.lower().startswith("model "):
                reader.model_name = note[6:].strip() or reader.model_name
            raw = raw[:comment]
        stripped = raw.strip()
        if not stripped:
            continue
        keyword = _SECTIONS.get(" ".join(stripped.lower().split()))
        if keyword is not None:
            if keyword == "objective":
                if seen_objective:
                    raise LPParseError("More than one objective section", number)
                seen_objective = True
                reader.sense = "maximize" if stripped.lower().startswith("max") else "minimize"
            section = keyword
            if section == "end":
                break
            continue

        if section is None:
            raise LPParseError("Statement outside of any section", number)
        tokens = _tokenize(stripped, number)
        if section in statements:
            statements[section].extend(tokens)
        elif section == "bounds":
            reader.read_bound(tokens)
        else:
            for kind, name, line in tokens:
                if kind != "name":
                    raise LPParseError(f"Expected variable names in {section}", line)
                reader.variable(name)
                reader.integers.append(name)
                if section == "binaries":
                    reader.lower.setdefault(name, 0.0)
                    reader.upper[name] = min(reader.upper.get(name, 1.0), 1.0)

    if not seen_objective:
        raise LPParseError("No objective section found", 1)
    reader.read_objective(statements["objective"])
    reader.read_constraints(statements["constraints"])

    column = {name: j for j, name in enumerate(reader.names)}
    n = len(reader.names)
    A = [[0.0] * n for _ in reader.rows]
    for i, (_, terms, _, _) in enumerate(reader.rows):
        for name, coefficient in terms.items():
            A[i][column[name]] = coefficient
    integer = set(reader.integers)
    logger.debug(f"Parsed LP {reader.model_name}: {n} variables, {len(reader.rows)} rows")
    try:
        return StandardForm(
            names=list(reader.names),
            c=[reader.objective.get(name, 0.0) for name in reader.names],
            A=A,
            senses=[sense for _, _, sense, _ in reader.rows],
            b=[rhs for _, _, _, rhs in reader.rows],
            lb=[reader.lower.get(name, 0.0) for name in reader.names],
            ub=[reader.upper.get(name, math.inf) for name in reader.names],
            integer=[name in integer for name in reader.names],
            sense=reader.sense,
            row_labels=[label for label, _, _, _ in reader.rows],
            name=reader.model_name,
        )
    except (SolverError, ValueError) as e:
        raise LPParseError(f"Inconsistent LP model: {e}", len(text.splitlines())) from e


def read_lp_file(path: Union[str, Path]) -> StandardForm:
    return parse_lp(Path(path).read_text(encoding="utf-8"))
