"""Stage 1: match the sentences of a problem description to modelling graph nodes."""

import logging
import re
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List

from ..config import settings
from ..utils.helpers import slugify
from .exceptions import ExtractionParseError, IdentificationError, LLMError
from .graph import ModellingGraph, node_catalog
from .llm import ChatRequest, LLMGateway, complete_structured
from .prompts import identification_prompt

logger = logging.getLogger(__name__)

_SENTENCE_KEY_RE = re.compile(r"^sentence_(\d+)$")


@dataclass
class ActivationReport:
    """Sentences as echoed by the LLM and the nodes matched to each (indices from 1)."""

    sentences: List[str]
    matches: Dict[int, List[str]] = field(default_factory=dict)
    prompt_key: str = ""
    attempts: int = 0

    @property
    def activated_nodes(self) -> FrozenSet[str]:
        return frozenset(name for names in self.matches.values() for name in names)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sentences": list(self.sentences),
            "matches": {
                f"sentence_{index}": names for index, names in sorted(self.matches.items())
            },
            "activated_nodes": sorted(self.activated_nodes),
            "provenance": {"key": self.prompt_key, "attempts": self.attempts},
        }


def format_node_catalog(graph: ModellingGraph) -> str:
    return "\n\n".join(
        f"**Node Name**: {name}  \n**Description**: {description}"
        for name, description in node_catalog(graph)
    )


def build_identification_prompt(
    graph: ModellingGraph, description: str, model_id: str = settings.DEFAULT_MODEL_ID
) -> ChatRequest:
    """Render the node-matching prompt for one problem description.

    Raises:
        IdentificationError: If the description is empty.
    """
    if not description or not description.strip():
        raise IdentificationError("Problem description is empty")
    user = identification_prompt(
        description, format_node_catalog(graph), settings.MAX_MATCHES_PER_SENTENCE
    )
    return ChatRequest(model_id=model_id, user=user)


def _check_response(value: Dict[str, Any]) -> None:
    sentences = value.get("sentences")
    matches = value.get("matches")
    if not isinstance(sentences, list) or not all(isinstance(s, str) for s in sentences):
        raise ExtractionParseError("'sentences' must be a list of strings", str(value))
    if any(not s.strip() for s in sentences):
        raise ExtractionParseError("response contains an empty sentence", str(value))
    if not isinstance(matches, dict):
        raise ExtractionParseError("'matches' must be an object", str(value))


def report_from_response(
    graph: ModellingGraph, value: Dict[str, Any], prompt_key: str = "", attempts: int = 0
) -> ActivationReport:
    """Turn a parsed identification response into a report, dropping what cannot be used.

    Node names are matched ignoring case and punctuation.
    """
    sentences = [sentence.strip() for sentence in value["sentences"]]
    by_slug = {slugify(name): name for name in graph.node_names()}
    limit = settings.MAX_MATCHES_PER_SENTENCE
    matches: Dict[int, List[str]] = {index: [] for index in range(1, len(sentences) + 1)}

    for key, names in value["matches"].items():
        found = _SENTENCE_KEY_RE.match(str(key))
        if not found or not 1 <= int(found.group(1)) <= len(sentences):
            logger.warning(f"Ignoring matches for unknown sentence key {key!r}")
            continue
        if not isinstance(names, list):
            names = [names]
        kept: List[str] = []
        for name in names:
            canonical = by_slug.get(slugify(str(name)))
            if canonical is None:
                logger.warning(f"Dropping unknown node {name!r} matched to {key}")
            elif canonical not in kept:
                kept.append(canonical)
        if len(kept) > limit:
            logger.warning(f"{key} matched {len(kept)} nodes; keeping the first {limit}")
            kept = kept[:limit]
        matches[int(found.group(1))] = kept

    return ActivationReport(
        sentences=sentences, matches=matches, prompt_key=prompt_key, attempts=attempts
    )


def run_identification(
    graph: ModellingGraph, description: str, gateway: LLMGateway
) -> ActivationReport:
    """Identify the modelling components a problem description mentions.

    Args:
        graph: Modelling graph of the problem type.
        description: Problem description text.
        gateway: Gateway used for the LLM call.

    Returns:
        ActivationReport with the matched nodes per sentence.

    Raises:
        IdentificationError: If no usable response was obtained.
    """
    request = build_identification_prompt(graph, description, gateway.model_id)
    try:
        result = complete_structured(gateway, request, _check_response)
    except LLMError as e:
        raise IdentificationError(f"Component identification failed: {e}") from e

    report = report_from_response(graph, result.value, result.key, result.attempts)
    logger.info(
        f"Identified {len(report.activated_nodes)} nodes across {len(report.sentences)} sentences"
    )
    return report
