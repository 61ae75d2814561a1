"""Modelling graphs: typed scheduling components and the dependencies between them."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import networkx as nx

from ..config import settings
from ..utils.helpers import slugify
from .exceptions import GraphFormatError, GraphValidationError

logger = logging.getLogger(__name__)

NODE_KINDS = ("entity", "parameter", "decision-variable", "objective", "constraint")
EDGE_RELATIONS = (
    "has-parameter",
    "uses-variable",
    "constrains",
    "contributes-to-objective",
    "depends-on",
)


@dataclass(frozen=True)
class GraphNode:
    """A modelling component. Decision-variable nodes carry the symbol of their family."""

    id: str
    name: str
    kind: str
    description: str
    symbol: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "id": self.id,
            "name": self.name,
            "kind": self.kind,
            "description": self.description,
        }
        if self.symbol is not None:
            data["symbol"] = self.symbol
        return data


@dataclass(frozen=True)
class GraphEdge:
    """Directed edge from the component that supplies information to the one that uses it."""

    source: str
    target: str
    relation: str

    def to_dict(self) -> Dict[str, str]:
        return {"from": self.source, "to": self.target, "relation": self.relation}


@dataclass(frozen=True)
class Finding:
    kind: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.subject}: {self.message}"


@dataclass(frozen=True)
class ModellingGraph:
    problem_type: str
    nodes: Tuple[GraphNode, ...]
    edges: Tuple[GraphEdge, ...] = field(default_factory=tuple)

    def node_names(self) -> List[str]:
        return [node.name for node in self.nodes]

    def node_by_name(self, name: str) -> Optional[GraphNode]:
        for node in self.nodes:
            if node.name == name:
                return node
        return None

    def node_by_id(self, node_id: str) -> Optional[GraphNode]:
        for node in self.nodes:
            if node.id == node_id:
                return node
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem_type": self.problem_type,
            "nodes": [node.to_dict() for node in self.nodes],
            "edges": [edge.to_dict() for edge in self.edges],
        }

    def to_networkx(self) -> nx.DiGraph:
        """Directed graph over node ids; edges to unknown ids are skipped."""
        graph = nx.DiGraph()
        for node in self.nodes:
            graph.add_node(node.id, kind=node.kind, name=node.name)
        for edge in self.edges:
            if edge.source in graph and edge.target in graph:
                graph.add_edge(edge.source, edge.target, relation=edge.relation)
        return graph


def _require(data: Mapping[str, Any], key: str, path: str, where: str) -> Any:
    if key not in data:
        raise GraphFormatError(path, f"{where} is missing key {key!r}")
    return data[key]


def graph_from_dict(data: Any, path: str = "<memory>") -> ModellingGraph:
    """Build a graph from its JSON-compatible form without validating invariants.

    Raises:
        GraphFormatError: If the structure does not match the graph file format.
    """
    if not isinstance(data, dict):
        raise GraphFormatError(path, "top level must be an object")
    problem_type = _require(data, "problem_type", path, "graph")
    raw_nodes = _require(data, "nodes", path, "graph")
    raw_edges = data.get("edges", [])
    if not isinstance(raw_nodes, list) or not isinstance(raw_edges, list):
        raise GraphFormatError(path, "'nodes' and 'edges' must be lists")

    nodes = []
    for index, raw in enumerate(raw_nodes):
        where = f"node #{index + 1}"
        if not isinstance(raw, dict):
            raise GraphFormatError(path, f"{where} must be an object")
        nodes.append(
            GraphNode(
                id=str(_require(raw, "id", path, where)),
                name=str(_require(raw, "name", path, where)),
                kind=str(_require(raw, "kind", path, where)),
                description=str(_require(raw, "description", path, where)),
                symbol=raw.get("symbol"),
            )
        )

    edges = []
    for index, raw in enumerate(raw_edges):
        where = f"edge #{index + 1}"
        if not isinstance(raw, dict):
            raise GraphFormatError(path, f"{where} must be an object")
        edges.append(
            GraphEdge(
                source=str(_require(raw, "from", path, where)),
                target=str(_require(raw, "to", path, where)),
                relation=str(_require(raw, "relation", path, where)),
            )
        )

    return ModellingGraph(problem_type=str(problem_type), nodes=tuple(nodes), edges=tuple(edges))


def validate_graph(graph: ModellingGraph) -> List[Finding]:
    """Check every graph invariant.

    Args:
        graph: Graph to check.

    Returns:
        One finding per violation; empty when the graph is valid.
    """
    findings: List[Finding] = []

    if graph.problem_type not in settings.PROBLEM_TYPES:
        findings.append(
            Finding("unknown-problem-type", graph.problem_type, "not a supported problem type")
        )
    if not graph.nodes:
        findings.append(Finding("empty-graph", graph.problem_type, "graph has no nodes"))

    seen_ids: Dict[str, int] = {}
    seen_names: Dict[str, int] = {}
    slugs: Dict[str, str] = {}
    families: Dict[str, str] = {}
    for node in graph.nodes:
        if node.id in seen_ids:
            findings.append(Finding("duplicate-id", node.id, "node id declared more than once"))
        seen_ids[node.id] = seen_ids.get(node.id, 0) + 1
        if node.name in seen_names:
            findings.append(Finding("duplicate-name", node.id, f"name {node.name!r} reused"))
        seen_names[node.name] = seen_names.get(node.name, 0) + 1
        slug = slugify(node.name)
        if slugs.setdefault(slug, node.name) != node.name:
            findings.append(
                Finding(
                    "ambiguous-name",
                    node.id,
                    f"name {node.name!r} differs from {slugs[slug]!r} only in case or punctuation",
                )
            )
        if node.kind not in NODE_KINDS:
            findings.append(Finding("unknown-kind", node.id, f"kind {node.kind!r}"))
        if not node.description.strip():
            findings.append(Finding("empty-description", node.id, "description is empty"))
        if node.kind == "decision-variable":
            if not node.symbol:
                findings.append(Finding("missing-symbol", node.id, "variable node has no symbol"))
            elif node.symbol in families:
                findings.append(
                    Finding(
                        "duplicate-variable-family",
                        node.id,
                        f"symbol {node.symbol!r} already used by {families[node.symbol]}",
                    )
                )
            else:
                families[node.symbol] = node.id

    for edge in graph.edges:
        subject = f"{edge.source}->{edge.target}"
        for endpoint in (edge.source, edge.target):
            if endpoint not in seen_ids:
                findings.append(Finding("dangling-edge", endpoint, f"edge {subject} names it"))
        if edge.source == edge.target:
            findings.append(Finding("self-loop", edge.source, "edge points to itself"))
        if edge.relation not in EDGE_RELATIONS:
            findings.append(Finding("unknown-relation", subject, f"relation {edge.relation!r}"))

    digraph = graph.to_networkx()
    roots = [node.id for node in graph.nodes if node.kind in ("entity", "parameter")]
    reachable = set()
    for root in roots:
        reachable |= nx.descendants(digraph, root)
    for node in graph.nodes:
        if node.kind == "constraint" and node.id not in reachable:
            findings.append(
                Finding(
                    "unreachable-constraint",
                    node.id,
                    "no entity or parameter node leads to this constraint",
                )
            )

    return findings


def load_graph(path: Union[str, Path]) -> ModellingGraph:
    """Load and validate a modelling graph file.

    Args:
        path: Path to a graph JSON file.

    Returns:
        The validated graph.

    Raises:
        GraphFormatError: If the file does not parse.
        GraphValidationError: If the graph breaks an invariant.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        lines = text.splitlines()
        context = lines[e.lineno - 1].strip() if 0 < e.lineno <= len(lines) else ""
        raise GraphFormatError(str(path), e.msg, e.lineno, context) from e

    graph = graph_from_dict(data, str(path))
    findings = validate_graph(graph)
    if findings:
        for finding in findings:
            logger.error(f"{path}: {finding}")
        raise GraphValidationError(findings)

    logger.debug(f"Loaded {graph.problem_type} graph from {path}: {len(graph.nodes)} nodes")
    return graph


def load_bundled_graph(problem_type: str) -> ModellingGraph:
    """Load the graph shipped with the package for a problem type."""
    return load_graph(settings.BUNDLED_GRAPHS[settings.resolve_problem_type(problem_type)])


def serialize_graph(graph: ModellingGraph) -> str:
    return json.dumps(graph.to_dict(), indent=2, ensure_ascii=False) + "\n"


def node_catalog(graph: ModellingGraph) -> List[Tuple[str, str]]:
    """(name, description) pairs in declaration order, as shown to the LLM."""
    return [(node.name, node.description) for node in graph.nodes]
