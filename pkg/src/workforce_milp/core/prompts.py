"""Prompt texts for the two LLM stages: component identification and data extraction."""

import json
from functools import lru_cache
from typing import Any, Dict

from jinja2 import Environment, PackageLoader, StrictUndefined, Template, TemplateError

from .exceptions import ConfigError
from .tasks import ExtractionTask

IDENTIFICATION_TEMPLATE = "identification.j2"
EXTRACTION_TEMPLATE = "extraction.j2"


@lru_cache(maxsize=None)
def _template(name: str) -> Template:
    environment = Environment(
        loader=PackageLoader("workforce_milp", "templates"),
        autoescape=False,
        trim_blocks=True,
        lstrip_blocks=True,
        undefined=StrictUndefined,
    )
    return environment.get_template(name)


def _render(name: str, **context: Any) -> str:
    try:
        return _template(name).render(**context).strip()
    except TemplateError as e:
        raise ConfigError(f"Cannot render prompt template {name}: {e}") from e


def identification_prompt(description: str, catalog: str, max_matches: int) -> str:
    """Prompt asking for the sentences of a description and the graph nodes each one names.

    Args:
        description: Problem description as given by the user.
        catalog: One ``name: description`` line per modelling graph node.
        max_matches: Most nodes a single sentence may be matched to.

    Raises:
        ConfigError: If the bundled template is missing or broken.
    """
    return _render(
        IDENTIFICATION_TEMPLATE,
        description=description.strip(),
        node_catalog=catalog,
        max_matches=max_matches,
    )


def extraction_prompt(
    task: ExtractionTask, known_information: Dict[str, Any], description: str
) -> str:
    """Prompt for one extraction task, with the outputs of its prerequisites as JSON."""
    return _render(
        EXTRACTION_TEMPLATE,
        task_name=task.name,
        task_description=task.description,
        output_schema=task.output_schema,
        known_information=json.dumps(known_information, indent=4, ensure_ascii=False),
        description=description.strip(),
    )
