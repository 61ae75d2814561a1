"""Stage 2: run the planned extraction tasks and keep their validated outputs."""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from ..config import settings
from ..utils.helpers import parse_number
from .exceptions import ExtractionError, ExtractionParseError, LLMError, SequencingError
from .llm import ChatRequest, LLMGateway, complete_structured
from .prompts import extraction_prompt
from .tasks import ExtractionTask, TaskPlan, TaskRegistry

logger = logging.getLogger(__name__)

LEAF_TYPES = ("string", "integer", "number", "numeric", "boolean", "any")


@dataclass
class ExtractionStore:
    """Outputs of executed tasks.

    ``aliases`` lets a task dropped in favour of a more specific one be looked up under
    its own name. ``failures`` holds the reason for every task that produced nothing.
    """

    entries: Dict[str, Any] = field(default_factory=dict)
    provenance: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    aliases: Dict[str, str] = field(default_factory=dict)
    failures: Dict[str, str] = field(default_factory=dict)

    def resolve(self, name: str) -> str:
        return self.aliases.get(name, name) if name not in self.entries else name

    def get(self, name: str, follow_aliases: bool = True) -> Optional[Any]:
        if name in self.entries:
            return self.entries[name]
        if follow_aliases and name in self.aliases:
            return self.entries.get(self.aliases[name])
        return None

    def has(self, name: str) -> bool:
        return self.get(name) is not None

    def failed(self, name: str) -> bool:
        return self.resolve(name) in self.failures

    def executed(self, name: str) -> bool:
        resolved = self.resolve(name)
        return resolved in self.entries or resolved in self.failures

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entries": self.entries,
            "provenance": self.provenance,
            "aliases": dict(sorted(self.aliases.items())),
            "failures": self.failures,
        }


def validate_shape(value: Any, shape: Any, path: str = "$") -> List[str]:
    """Check a parsed value against a task's output shape.

    Shapes are dicts (keys prefixed with ``?`` are optional and may be null), one-element
    lists describing every list item, or leaf type names. Extra keys are allowed.

    Returns:
        One message per mismatch.
    """
    if shape is None or shape == "any":
        return []
    if isinstance(shape, dict):
        if not isinstance(value, dict):
            return [f"{path} should be an object"]
        errors = []
        for key, sub_shape in shape.items():
            optional = key.startswith("?")
            name = key[1:] if optional else key
            if value.get(name) is None:
                if not optional:
                    errors.append(f"{path}.{name} is missing")
                continue
            errors.extend(validate_shape(value[name], sub_shape, f"{path}.{name}"))
        return errors
    if isinstance(shape, list):
        if not isinstance(value, list):
            return [f"{path} should be a list"]
        errors = []
        for index, item in enumerate(value):
            errors.extend(validate_shape(item, shape[0], f"{path}[{index}]"))
        return errors

    if shape not in LEAF_TYPES:
        return [f"{path} has unknown shape type {shape!r}"]
    is_number = isinstance(value, (int, float)) and not isinstance(value, bool)
    if shape == "string" and not isinstance(value, str):
        return [f"{path} should be a string"]
    if shape == "integer" and not (is_number and float(value).is_integer()):
        return [f"{path} should be an integer"]
    if shape == "number" and not is_number:
        return [f"{path} should be a number"]
    if shape == "boolean" and not isinstance(value, bool):
        return [f"{path} should be true or false"]
    if shape == "numeric" and not is_number:
        try:
            parse_number(value, path)
        except ValueError:
            return [f"{path} should be a number"]
    return []


def is_absent(value: Any) -> bool:
    """True when a response carries no information (null or empty "value")."""
    return isinstance(value, dict) and value.get("value") in (None, [], {}, "")


def known_information(task: ExtractionTask, store: ExtractionStore) -> Dict[str, Any]:
    """Outputs of a task's prerequisites, keyed by prerequisite name.

    Raises:
        SequencingError: If a prerequisite has no stored output.
    """
    known = {}
    for prerequisite in task.prerequisites:
        value = store.get(prerequisite)
        if value is None:
            raise SequencingError(
                f"Task {task.name!r} needs {prerequisite!r}, which has no stored output"
            )
        known[prerequisite] = value
    return known


def build_task_prompt(
    task: ExtractionTask,
    store: ExtractionStore,
    description: str,
    model_id: str = settings.DEFAULT_MODEL_ID,
) -> ChatRequest:
    """Render the extraction prompt for one task."""
    user = extraction_prompt(task, known_information(task, store), description)
    return ChatRequest(model_id=model_id, user=user)


def _shape_checker(task: ExtractionTask) -> Callable[[Dict[str, Any]], None]:
    def check(value: Dict[str, Any]) -> None:
        if is_absent(value):
            return
        errors = validate_shape(value, task.output_shape)
        if errors:
            raise ExtractionParseError(
                f"Output of {task.name!r} does not match its format: {'; '.join(errors)}",
                json.dumps(value, ensure_ascii=False),
            )

    return check


def run_extraction(
    plan: TaskPlan, registry: TaskRegistry, description: str, gateway: LLMGateway
) -> ExtractionStore:
    """Execute every planned task in order.

    Args:
        plan: Ordered tasks.
        registry: Registry the plan was built from.
        description: Problem description text.
        gateway: Gateway used for the LLM calls.

    Returns:
        The filled store. Tasks that returned nothing are recorded in ``failures``.

    Raises:
        SequencingError: If a task runs before one of its prerequisites.
        ExtractionError: If a required task fails or the LLM cannot be reached.
    """
    store = ExtractionStore(aliases=dict(plan.aliases))

    for name in plan:
        task = registry[name]
        failed_prerequisites = [p for p in task.prerequisites if store.failed(p)]
        if failed_prerequisites:
            reason = f"skipped because prerequisite {', '.join(failed_prerequisites)} failed"
        else:
            missing = [p for p in task.prerequisites if not store.executed(p)]
            if missing:
                raise SequencingError(
                    f"Task {name!r} reached before its prerequisite(s) {', '.join(missing)}"
                )
            request = build_task_prompt(task, store, description, gateway.model_id)
            reason = ""
            try:
                result = complete_structured(gateway, request, _shape_checker(task))
            except ExtractionParseError as e:
                reason = f"no usable output: {e}"
            except LLMError as e:
                raise ExtractionError(f"Task {name!r} could not be run: {e}", task=name) from e
            else:
                store.provenance[name] = {"key": result.key, "attempts": result.attempts}
                if is_absent(result.value):
                    reason = "returned no information"
                else:
                    store.entries[name] = result.value
                    logger.info(f"Extracted {name!r} in {result.attempts} attempt(s)")

        if reason:
            store.failures[name] = reason
            if task.required:
                logger.error(f"Required task {name!r} failed: {reason}")
                raise ExtractionError(
                    f"Required extraction task {name!r} failed: {reason}", task=name
                )
            logger.warning(f"Task {name!r} failed and is treated as absent: {reason}")

    logger.info(
        f"Extraction finished: {len(store.entries)} stored, {len(store.failures)} failed"
    )
    return store
