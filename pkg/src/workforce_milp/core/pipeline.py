"""Stage orchestration: identification, planning, extraction, assembly, solving, audit bundle."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import requests

from ..config import settings
from ..config.settings import RunConfig
from ..utils.helpers import ensure_directory, write_json
from .assemble import build_model
from .dataset import Instance
from .exceptions import ConfigError, WorkforceMilpError
from .extract import ExtractionStore, run_extraction
from .graph import ModellingGraph, load_bundled_graph, load_graph
from .identify import ActivationReport, run_identification
from .llm import LLMGateway
from .model import ModelIR
from .render import render_latex, render_lp
from .solver import SolveResult, format_solution, solve_model
from .tasks import TaskPlan, TaskRegistry, load_bundled_registry, load_registry, plan_for_nodes

logger = logging.getLogger(__name__)


@dataclass
class Formulation:
    """Everything one pipeline run produced; ``stage`` is the last stage entered."""

    name: str = "model"
    activation: Optional[ActivationReport] = None
    plan: Optional[TaskPlan] = None
    store: Optional[ExtractionStore] = None
    model: Optional[ModelIR] = None
    result: Optional[SolveResult] = None
    stage: str = "identification"
    error: Optional[str] = None

    def status(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "stage": self.stage,
            "error": self.error,
            "solve": self.result.to_dict() if self.result is not None else None,
        }


def write_bundle(formulation: Formulation, output_dir: Union[str, Path]) -> Path:
    """Write the audit bundle for whatever the run got to.

    Args:
        formulation: Run state, complete or not.
        output_dir: Directory receiving the files.

    Returns:
        The output directory.
    """
    output_dir = ensure_directory(output_dir)
    if formulation.activation is not None:
        write_json(output_dir / "activation.json", formulation.activation.to_dict())
    if formulation.plan is not None:
        write_json(output_dir / "plan.json", formulation.plan.to_dict())
    if formulation.store is not None:
        write_json(output_dir / "store.json", formulation.store.to_dict())
    if formulation.model is not None:
        (output_dir / "model.tex").write_text(render_latex(formulation.model), encoding="utf-8")
        (output_dir / "model.lp").write_text(render_lp(formulation.model), encoding="utf-8")
    if formulation.result is not None:
        (output_dir / "solution.txt").write_text(
            format_solution(formulation.result) + "\n", encoding="utf-8"
        )
    write_json(output_dir / "status.json", formulation.status())
    logger.debug(f"Wrote audit bundle to {output_dir}")
    return output_dir


class Pipeline:
    """The three formulation stages bound to one graph, registry and gateway."""

    def __init__(self, graph: ModellingGraph, registry: TaskRegistry, gateway: LLMGateway):
        self.graph = graph
        self.registry = registry
        self.gateway = gateway

    @classmethod
    def for_problem_type(
        cls,
        problem_type: str,
        gateway: LLMGateway,
        graph_path: Optional[Path] = None,
        registry_path: Optional[Path] = None,
    ) -> "Pipeline":
        graph = (
            load_graph(graph_path)
            if graph_path is not None
            else load_bundled_graph(settings.resolve_problem_type(problem_type))
        )
        registry = (
            load_registry(registry_path, graph)
            if registry_path is not None
            else load_bundled_registry(graph)
        )
        return cls(graph, registry, gateway)

    def formulate(
        self, description: str, name: str = "model", formulation: Optional[Formulation] = None
    ) -> Formulation:
        """Run identification, planning, extraction and assembly.

        Raises:
            WorkforceMilpError: From the stage that failed; ``formulation.stage`` names it.
        """
        state = formulation or Formulation(name=name)
        logger.info(f"Formulating {name} ({self.graph.problem_type})")

        state.stage = "identification"
        state.activation = run_identification(self.graph, description, self.gateway)
        state.stage = "planning"
        state.plan = plan_for_nodes(self.registry, state.activation.activated_nodes)
        state.stage = "extraction"
        state.store = run_extraction(state.plan, self.registry, description, self.gateway)
        state.stage = "assembly"
        state.model = build_model(state.store, state.activation, self.graph, name)
        state.stage = "formulated"
        return state

    def run(
        self,
        description: str,
        name: str,
        output_dir: Union[str, Path],
        solve: bool = True,
    ) -> Formulation:
        """Formulate (and optionally solve) one description and write its audit bundle.

        The bundle, including ``status.json``, is written even when a stage fails; the
        error is then re-raised.
        """
        state = Formulation(name=name)
        try:
            self.formulate(description, name, state)
            if solve:
                assert state.model is not None
                state.stage = "solving"
                state.result = solve_model(state.model)
                state.stage = "solved"
        except WorkforceMilpError as e:
            state.error = str(e)
            logger.error(f"{name} failed during {state.stage}: {e}")
            raise
        finally:
            write_bundle(state, output_dir)
        return state


def resolve_fixture_dir(config: RunConfig, instance: Optional[Instance] = None) -> Optional[Path]:
    """Fixture directory for a run: the configured one, else the instance's own."""
    if config.fixture_dir is not None:
        return Path(config.fixture_dir)
    return instance.fixture_dir if instance is not None else None


def build_gateway(
    config: RunConfig,
    fixture_dir: Optional[Path],
    session: Optional[requests.Session] = None,
) -> LLMGateway:
    """Create the gateway a run needs.

    Raises:
        ConfigError: If replay has no fixture directory to read or record none to write.
    """
    config.validate()
    if config.backend == "replay" and (fixture_dir is None or not fixture_dir.is_dir()):
        raise ConfigError(f"Replay mode needs an existing fixture directory, got {fixture_dir}")
    if config.backend == "record" and fixture_dir is None:
        raise ConfigError("Record mode needs a fixture directory to write to")
    return LLMGateway.create(
        config.backend,
        model_id=config.model_id,
        fixture_dir=fixture_dir,
        endpoint_url=config.endpoint_url,
        session=session,
    )


def pipeline_for_run(
    problem_type: str,
    config: RunConfig,
    fixture_dir: Optional[Path],
    session: Optional[requests.Session] = None,
) -> Pipeline:
    """Pipeline for one run; ``config.graph`` may name a problem type or a graph file."""
    graph_path: Optional[Path] = None
    if config.graph is not None:
        if config.graph in settings.PROBLEM_TYPE_ALIASES:
            problem_type = config.graph
        else:
            graph_path = Path(config.graph)
    gateway = build_gateway(config, fixture_dir, session)
    return Pipeline.for_problem_type(problem_type, gateway, graph_path, config.registry)


def run_instance(
    instance: Instance,
    config: RunConfig,
    output_dir: Union[str, Path],
    solve: bool = True,
    session: Optional[requests.Session] = None,
) -> Formulation:
    pipeline = pipeline_for_run(
        instance.problem_type, config, resolve_fixture_dir(config, instance), session
    )
    return pipeline.run(instance.description, instance.id, output_dir, solve)
