"""Solver-independent model representation built by the assembly stage."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import AssemblyError

logger = logging.getLogger(__name__)

VAR_DOMAINS = ("nonneg-integer", "nonneg-continuous", "binary")
SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class Parameter:
    """A named tensor with every value instantiated."""

    name: str
    symbol: str
    index_sets: Tuple[str, ...]
    values: Any
    node_id: Optional[str] = None
    description: str = ""

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class VariableFamily:
    symbol: str
    index_sets: Tuple[str, ...]
    domain: str
    node_id: Optional[str] = None
    description: str = ""


@dataclass(frozen=True)
class Variable:
    name: str
    symbol: str
    index: Tuple[Any, ...]
    domain: str
    upper: Optional[float] = None

    @property
    def is_integer(self) -> bool:
        return self.domain in ("nonneg-integer", "binary")


@dataclass(frozen=True)
class LinearConstraint:
    label: str
    terms: Dict[str, float]
    sense: str
    rhs: float
    node_id: Optional[str] = None


@dataclass(frozen=True)
class Objective:
    sense: str
    terms: Dict[str, float]
    node_id: Optional[str] = None
    description: str = ""


@dataclass
class ModelIR:
    name: str
    problem_type: str
    sets: Dict[str, List[Any]] = field(default_factory=dict)
    set_descriptions: Dict[str, str] = field(default_factory=dict)
    params: Dict[str, Parameter] = field(default_factory=dict)
    families: Dict[str, VariableFamily] = field(default_factory=dict)
    variables: Dict[str, Variable] = field(default_factory=dict)
    constraints: List[LinearConstraint] = field(default_factory=list)
    objective: Optional[Objective] = None
    provenance: Dict[str, Optional[str]] = field(default_factory=dict)

    def add_set(
        self,
        name: str,
        members: Sequence[Any],
        description: str = "",
        node_id: Optional[str] = None,
    ) -> None:
        self.sets[name] = list(members)
        self.set_descriptions[name] = description
        self.provenance[f"set:{name}"] = node_id

    def add_param(self, param: Parameter) -> None:
        for index_set in param.index_sets:
            if index_set not in self.sets:
                raise AssemblyError(
                    f"Parameter {param.symbol} is indexed by unknown set {index_set}"
                )
        values = param.array()
        if not np.all(np.isfinite(values)):
            raise AssemblyError(f"Parameter {param.symbol} has non-finite values")
        self.params[param.symbol] = param
        self.provenance[f"param:{param.symbol}"] = param.node_id

    def add_family(self, family: VariableFamily) -> None:
        if family.domain not in VAR_DOMAINS:
            raise AssemblyError(f"Unknown variable domain {family.domain!r}")
        self.families[family.symbol] = family
        self.provenance[f"var:{family.symbol}"] = family.node_id

    def add_variable(
        self, symbol: str, index: Tuple[Any, ...], upper: Optional[float] = None
    ) -> str:
        family = self.families[symbol]
        name = "_".join([symbol, *(str(i) for i in index)])
        if name in self.variables:
            raise AssemblyError(f"Variable {name} defined twice")
        self.variables[name] = Variable(name, symbol, tuple(index), family.domain, upper)
        return name

    def add_constraint(
        self,
        label: str,
        terms: Dict[str, float],
        sense: str,
        rhs: float,
        node_id: Optional[str] = None,
    ) -> LinearConstraint:
        if sense not in SENSES:
            raise AssemblyError(f"Constraint {label} has unknown sense {sense!r}")
        if any(c.label == label for c in self.constraints):
            raise AssemblyError(f"Constraint label {label} used twice")
        cleaned = {}
        for name, coefficient in terms.items():
            if name not in self.variables:
                raise AssemblyError(f"Constraint {label} uses unknown variable {name}")
            if not math.isfinite(coefficient) or not math.isfinite(rhs):
                raise AssemblyError(f"Constraint {label} has a non-finite coefficient")
            if coefficient != 0:
                cleaned[name] = float(coefficient)
        constraint = LinearConstraint(label, cleaned, sense, float(rhs), node_id)
        self.constraints.append(constraint)
        self.provenance[f"constraint:{label}"] = node_id
        return constraint

    def set_objective(
        self,
        sense: str,
        terms: Dict[str, float],
        node_id: Optional[str] = None,
        description: str = "",
    ) -> None:
        if sense not in ("minimize", "maximize"):
            raise AssemblyError(f"Unknown objective sense {sense!r}")
        for name, coefficient in terms.items():
            if name not in self.variables:
                raise AssemblyError(f"Objective uses unknown variable {name}")
            if not math.isfinite(coefficient):
                raise AssemblyError("Objective has a non-finite coefficient")
        self.objective = Objective(
            sense, {n: float(c) for n, c in terms.items() if c != 0}, node_id, description
        )
        self.provenance["objective"] = node_id

    def constraint(self, label: str) -> LinearConstraint:
        for constraint in self.constraints:
            if constraint.label == label:
                return constraint
        raise KeyError(label)

    def constraints_with_prefix(self, prefix: str) -> List[LinearConstraint]:
        return [c for c in self.constraints if c.label.startswith(prefix)]

    def validate(self) -> None:
        """Raise AssemblyError if the model references anything it does not define."""
        if self.objective is None:
            raise AssemblyError(f"Model {self.name} has no objective")
        if not self.variables:
            raise AssemblyError(f"Model {self.name} has no variables")
        for variable in self.variables.values():
            family = self.families.get(variable.symbol)
            if family is None or len(variable.index) != len(family.index_sets):
                raise AssemblyError(f"Variable {variable.name} does not match its family")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "problem_type": self.problem_type,
            "sets": self.sets,
            "params": {
                symbol: {"name": p.name, "index_sets": list(p.index_sets), "values": p.values}
                for symbol, p in self.params.items()
            },
            "variables": {
                name: {"domain": v.domain, "upper": v.upper} for name, v in self.variables.items()
            },
            "constraints": [
                {"label": c.label, "terms": c.terms, "sense": c.sense, "rhs": c.rhs}
                for c in self.constraints
            ],
            "objective": {
                "sense": self.objective.sense,
                "terms": self.objective.terms,
            }
            if self.objective
            else None,
            "provenance": self.provenance,
        }
