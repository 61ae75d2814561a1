"""Information-extraction tasks: registry loading, selection from activated nodes, ordering."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Set, Tuple, Union

import networkx as nx

from ..config import settings
from .exceptions import GraphFormatError, RegistryError, TaskCycleError, UnknownNodeError
from .graph import ModellingGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtractionTask:
    """One templated extraction prompt and its place in the task hierarchy.

    ``output_schema`` is the prompt block shown to the LLM; ``output_shape`` is its
    machine-readable counterpart used to validate responses.
    """

    name: str
    description: str
    output_schema: str
    prerequisites: Tuple[str, ...] = ()
    parent_task: Optional[str] = None
    associated_nodes: Tuple[str, ...] = ()
    required: bool = False
    output_shape: Any = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "output_schema": self.output_schema,
            "prerequisites": list(self.prerequisites),
            "parent_task": self.parent_task,
            "associated_nodes": list(self.associated_nodes),
            "required": self.required,
            "output_shape": self.output_shape,
        }


@dataclass(frozen=True)
class TaskRegistry:
    """Tasks in file order, plus the node names of the graph they were checked against."""

    tasks: Tuple[ExtractionTask, ...]
    node_names: FrozenSet[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_name", {task.name: task for task in self.tasks})

    def __contains__(self, name: object) -> bool:
        return name in self._by_name  # type: ignore[attr-defined]

    def __getitem__(self, name: str) -> ExtractionTask:
        return self._by_name[name]  # type: ignore[attr-defined, no-any-return]

    def __iter__(self) -> Iterator[ExtractionTask]:
        return iter(self.tasks)

    def __len__(self) -> int:
        return len(self.tasks)

    def names(self) -> List[str]:
        return [task.name for task in self.tasks]

    def children_of(self, name: str) -> List[str]:
        return sorted(task.name for task in self.tasks if task.parent_task == name)


@dataclass(frozen=True)
class TaskPlan:
    """Dependency-valid execution order.

    ``aliases`` maps each task left out in favour of a more specific descendant to the
    selected task that stands in for it.
    """

    ordered_tasks: Tuple[str, ...]
    aliases: Dict[str, str] = field(default_factory=dict)

    def __iter__(self) -> Iterator[str]:
        return iter(self.ordered_tasks)

    def __len__(self) -> int:
        return len(self.ordered_tasks)

    def index(self, name: str) -> int:
        return self.ordered_tasks.index(name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ordered_tasks": list(self.ordered_tasks),
            "aliases": dict(sorted(self.aliases.items())),
        }


def _prerequisite_closure(registry: TaskRegistry, name: str) -> Set[str]:
    seen: Set[str] = set()
    stack = list(registry[name].prerequisites)
    while stack:
        current = stack.pop()
        if current in seen or current not in registry:
            continue
        seen.add(current)
        stack.extend(registry[current].prerequisites)
    return seen


def validate_registry(registry: TaskRegistry) -> List[str]:
    """Return one message per broken registry invariant."""
    problems: List[str] = []
    seen: Set[str] = set()
    for task in registry:
        if task.name in seen:
            problems.append(f"task {task.name!r} declared more than once")
        seen.add(task.name)

    for task in registry:
        for prerequisite in task.prerequisites:
            if prerequisite not in registry:
                problems.append(f"task {task.name!r} has unknown prerequisite {prerequisite!r}")
        if task.parent_task is not None:
            if task.parent_task == task.name:
                problems.append(f"task {task.name!r} names itself as parent")
            elif task.parent_task not in registry:
                problems.append(f"task {task.name!r} has unknown parent {task.parent_task!r}")
        if registry.node_names:
            for node in task.associated_nodes:
                if node not in registry.node_names:
                    problems.append(f"task {task.name!r} references unknown graph node {node!r}")

    graph = nx.DiGraph()
    graph.add_nodes_from(registry.names())
    for task in registry:
        for prerequisite in task.prerequisites:
            if prerequisite in registry:
                graph.add_edge(prerequisite, task.name)
    try:
        cycle = nx.find_cycle(graph)
        problems.append(f"prerequisite cycle: {' -> '.join(edge[0] for edge in cycle)}")
    except nx.NetworkXNoCycle:
        # A child standing in for its parent must not depend on that parent.
        for task in registry:
            if task.parent_task and task.parent_task in _prerequisite_closure(registry, task.name):
                problems.append(
                    f"task {task.name!r} depends on its own parent {task.parent_task!r}"
                )
    return problems


def registry_from_dict(
    data: Any, graph: Optional[ModellingGraph] = None, source: str = "<memory>"
) -> TaskRegistry:
    """Build and validate a registry from its JSON-compatible form.

    Raises:
        GraphFormatError: If the structure does not match the registry file format.
        RegistryError: If a task references unknown tasks or graph nodes.
    """
    if not isinstance(data, dict) or not isinstance(data.get("tasks"), list):
        raise GraphFormatError(source, "registry must be an object with a 'tasks' list")

    tasks = []
    for index, raw in enumerate(data["tasks"]):
        if not isinstance(raw, dict):
            raise GraphFormatError(source, f"task #{index + 1} must be an object")
        missing = [key for key in ("name", "description", "output_schema") if key not in raw]
        if missing:
            raise GraphFormatError(source, f"task #{index + 1} is missing {', '.join(missing)}")
        tasks.append(
            ExtractionTask(
                name=str(raw["name"]),
                description=str(raw["description"]),
                output_schema=str(raw["output_schema"]),
                prerequisites=tuple(raw.get("prerequisites") or ()),
                parent_task=raw.get("parent_task"),
                associated_nodes=tuple(raw.get("associated_nodes") or ()),
                required=bool(raw.get("required", False)),
                output_shape=raw.get("output_shape"),
            )
        )

    node_names = frozenset(graph.node_names()) if graph is not None else frozenset()
    registry = TaskRegistry(tasks=tuple(tasks), node_names=node_names)
    problems = validate_registry(registry)
    if problems:
        raise RegistryError(f"Invalid task registry {source}: " + "; ".join(problems))
    return registry


def load_registry(path: Union[str, Path], graph: ModellingGraph) -> TaskRegistry:
    """Load a task registry and check it against a modelling graph.

    Args:
        path: Path to a registry JSON file.
        graph: Graph whose node names the tasks may reference.

    Returns:
        The validated registry.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        lines = text.splitlines()
        context = lines[e.lineno - 1].strip() if 0 < e.lineno <= len(lines) else ""
        raise GraphFormatError(str(path), e.msg, e.lineno, context) from e
    registry = registry_from_dict(data, graph, str(path))
    logger.debug(f"Loaded {len(registry)} extraction tasks from {path}")
    return registry


def load_bundled_registry(graph: ModellingGraph) -> TaskRegistry:
    return load_registry(settings.BUNDLED_REGISTRIES[graph.problem_type], graph)


def select_tasks(registry: TaskRegistry, activated: Iterable[str]) -> Set[str]:
    """Select the tasks needed for a set of activated graph nodes.

    A task is selected when one of its associated nodes is activated or when a selected
    task needs it as a (transitive) prerequisite. A parent task is then dropped whenever
    one of its children is selected; prerequisites pulled in for it stay.

    Raises:
        UnknownNodeError: If an activated name is not a node of the registry's graph.
    """
    activated = set(activated)
    known = registry.node_names or {node for task in registry for node in task.associated_nodes}
    unknown = activated - set(known)
    if unknown:
        raise UnknownNodeError(unknown)

    selected = {task.name for task in registry if activated & set(task.associated_nodes)}
    stack = list(selected)
    while stack:
        for prerequisite in registry[stack.pop()].prerequisites:
            if prerequisite not in selected:
                selected.add(prerequisite)
                stack.append(prerequisite)

    parents = {registry[name].parent_task for name in selected} - {None}
    removed = selected & parents
    for name in sorted(removed):
        logger.info(f"Dropping generalised task {name!r} in favour of a more specific task")
    return selected - removed


def _stand_in(registry: TaskRegistry, name: str, selected: Set[str]) -> Optional[str]:
    """First selected descendant (children in name order, depth first) of a task."""
    for child in registry.children_of(name):
        if child in selected:
            return child
        deeper = _stand_in(registry, child, selected)
        if deeper is not None:
            return deeper
    return None


def order_tasks(registry: TaskRegistry, selected: Iterable[str]) -> TaskPlan:
    """Order selected tasks so every prerequisite runs first.

    Kahn's algorithm with the zero in-degree frontier taken in task-name order. A
    prerequisite that was dropped as a generalised task is satisfied by its selected
    descendant.

    Raises:
        RegistryError: If a prerequisite is neither selected nor replaced.
        TaskCycleError: If the prerequisites form a cycle.
    """
    selected = set(selected)
    graph = nx.DiGraph()
    graph.add_nodes_from(selected)
    aliases: Dict[str, str] = {}

    for name in sorted(selected):
        for prerequisite in registry[name].prerequisites:
            provider = prerequisite
            if prerequisite not in selected:
                stand_in = _stand_in(registry, prerequisite, selected)
                if stand_in is None:
                    raise RegistryError(
                        f"Task {name!r} needs {prerequisite!r}, which is not part of the selection"
                    )
                provider = stand_in
                aliases[prerequisite] = stand_in
            if provider != name:
                graph.add_edge(provider, name)

    # Every dropped ancestor of a selected task resolves to that task.
    for name in sorted(selected):
        parent = registry[name].parent_task
        while parent is not None and parent not in selected:
            aliases.setdefault(parent, name)
            parent = registry[parent].parent_task

    try:
        ordered = list(nx.lexicographical_topological_sort(graph))
    except nx.NetworkXUnfeasible:
        cycle = nx.find_cycle(graph)
        names = [edge[0] for edge in cycle]
        raise TaskCycleError(names + names[:1]) from None

    logger.info(f"Planned {len(ordered)} extraction tasks: {ordered}")
    return TaskPlan(ordered_tasks=tuple(ordered), aliases=aliases)


def plan_for_nodes(registry: TaskRegistry, activated: Iterable[str]) -> TaskPlan:
    return order_tasks(registry, select_tasks(registry, activated))


def describe_plan(registry: TaskRegistry, plan: TaskPlan) -> List[str]:
    """Human-readable plan lines with prerequisite annotations."""
    lines = []
    for position, name in enumerate(plan, start=1):
        prerequisites = [plan.aliases.get(p, p) for p in registry[name].prerequisites]
        suffix = f"  (after: {', '.join(prerequisites)})" if prerequisites else ""
        lines.append(f"{position}. {name}{suffix}")
    for parent, child in sorted(plan.aliases.items()):
        lines.append(f"   {parent!r} is covered by {child!r}")
    return lines
