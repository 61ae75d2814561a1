"""Command line interface for workforce-milp."""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from ..config import settings
from ..config.settings import RunConfig
from .dataset import load_dataset, load_instance
from .exceptions import (
    AssemblyError,
    ConfigError,
    EvaluationError,
    ExtractionError,
    IdentificationError,
    LLMError,
    LPParseError,
    SequencingError,
    SolverError,
    WorkforceMilpError,
)
from .graph import load_bundled_graph, load_graph
from .harness import format_report, record_ma, run_trials, write_report
from .lp_reader import read_lp_file
from .pipeline import pipeline_for_run, resolve_fixture_dir
from .solver import format_solution, solve_milp
from .tasks import describe_plan, load_bundled_registry, load_registry, plan_for_nodes

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_IDENTIFICATION = 4
EXIT_EXTRACTION = 5
EXIT_ASSEMBLY = 6
EXIT_SOLVER = 7
EXIT_LP_PARSE = 8
EXIT_EVALUATION = 9


def exit_code_for(error: BaseException) -> int:
    """Stable exit code for an error raised by a command."""
    if isinstance(error, IdentificationError):
        return EXIT_IDENTIFICATION
    if isinstance(error, (ExtractionError, SequencingError, LLMError)):
        return EXIT_EXTRACTION
    if isinstance(error, AssemblyError):
        return EXIT_ASSEMBLY
    if isinstance(error, SolverError):
        return EXIT_SOLVER
    if isinstance(error, LPParseError):
        return EXIT_LP_PARSE
    if isinstance(error, EvaluationError):
        return EXIT_EVALUATION
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_CONFIG


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--graph", help="problem type (shift, days-off) or modelling graph file")
    parser.add_argument("--registry", type=Path, help="extraction task registry file")
    parser.add_argument("--backend", choices=settings.BACKENDS, default=settings.DEFAULT_BACKEND)
    parser.add_argument("--model-id", default=settings.DEFAULT_MODEL_ID)
    parser.add_argument("--fixtures", type=Path, help="replay/record fixture directory")
    parser.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="workforce-milp",
        description="Formulate and solve workforce scheduling MILPs from problem descriptions.",
    )
    parser.add_argument("--debug", action="store_true", help="enable debug logging")
    parser.add_argument("--log-file", type=Path, help="also write the log to this file")
    commands = parser.add_subparsers(dest="command", required=True)

    formulate = commands.add_parser(
        "formulate", help="build model.tex and model.lp for an instance"
    )
    formulate.add_argument("instance", type=Path, help="instance directory or description file")
    formulate.add_argument("--solve", action="store_true", help="also solve the generated model")
    _add_run_options(formulate)

    solve = commands.add_parser("solve", help="solve an LP-format model file")
    solve.add_argument("model", type=Path)

    evaluate = commands.add_parser("eval", help="run trials over a dataset and report accuracy")
    evaluate.add_argument("dataset", type=Path)
    evaluate.add_argument("--trials", type=int, default=settings.DEFAULT_TRIALS)
    evaluate.add_argument("--workers", type=int, default=settings.EVAL_WORKERS)
    _add_run_options(evaluate)

    plan = commands.add_parser("plan", help="print the extraction plan for activated nodes")
    plan.add_argument("nodes", nargs="*", help="activated modelling graph node names")
    plan.add_argument("--graph", required=True, help="problem type or modelling graph file")
    plan.add_argument("--registry", type=Path)

    verdict = commands.add_parser("record-ma", help="record a model accuracy verdict")
    verdict.add_argument("dataset", type=Path)
    verdict.add_argument("instance_id")
    verdict.add_argument("verdict", choices=("true", "false"))
    verdict.add_argument("--notes", default="")
    return parser


def configure_logging(debug: bool = False, log_file: Optional[Path] = None) -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file is not None:
        if log_file.is_dir():
            log_file = log_file / settings.LOG_FILE_NAME
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format=settings.LOG_FORMAT,
        datefmt=settings.LOG_DATE_FORMAT,
        handlers=handlers,
    )


def _run_config(args: argparse.Namespace, output_dir: Path) -> RunConfig:
    config = RunConfig(
        graph=args.graph,
        registry=args.registry,
        backend=args.backend,
        model_id=args.model_id,
        fixture_dir=args.fixtures,
        output_dir=output_dir,
        trials=getattr(args, "trials", settings.DEFAULT_TRIALS),
        workers=getattr(args, "workers", settings.EVAL_WORKERS),
    )
    config.validate()
    return config


def cmd_formulate(args: argparse.Namespace) -> int:
    path: Path = args.instance
    if path.is_file():
        if args.graph is None:
            raise ConfigError("A description file needs --graph to choose the problem type")
        name, problem_type = path.stem, args.graph
        description = path.read_text(encoding="utf-8")
        config = _run_config(args, args.out or settings.OUTPUT_DIR / name)
        fixture_dir = resolve_fixture_dir(config)
    else:
        instance = load_instance(path)
        name, problem_type, description = instance.id, instance.problem_type, instance.description
        config = _run_config(args, args.out or settings.OUTPUT_DIR / name)
        fixture_dir = resolve_fixture_dir(config, instance)

    pipeline = pipeline_for_run(problem_type, config, fixture_dir)
    state = pipeline.run(description, name, config.output_dir, solve=args.solve)
    print(f"Wrote model.tex and model.lp to {config.output_dir}")
    if state.result is not None:
        print(format_solution(state.result))
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    result = solve_milp(read_lp_file(args.model))
    print(format_solution(result))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    config = _run_config(args, args.out or settings.OUTPUT_DIR / "eval")
    instances = load_dataset(args.dataset)
    report = run_trials(instances, config.trials, config, config.output_dir)
    paths = write_report(report, config.output_dir)
    print(format_report(report))
    print(f"Report written to {paths['json']}")
    return EXIT_OK


def cmd_plan(args: argparse.Namespace) -> int:
    if args.graph in settings.PROBLEM_TYPE_ALIASES:
        graph = load_bundled_graph(settings.resolve_problem_type(args.graph))
    else:
        graph = load_graph(args.graph)
    registry = (
        load_registry(args.registry, graph) if args.registry else load_bundled_registry(graph)
    )
    plan = plan_for_nodes(registry, args.nodes)
    print(f"Task plan ({len(plan)} tasks):")
    for line in describe_plan(registry, plan):
        print(line)
    return EXIT_OK


def cmd_record_ma(args: argparse.Namespace) -> int:
    ma = record_ma(args.dataset, args.instance_id, args.verdict == "true", args.notes)
    print(f"Model accuracy: {ma:.0%}" if ma is not None else "Model accuracy: no verdicts")
    return EXIT_OK


COMMANDS = {
    "formulate": cmd_formulate,
    "solve": cmd_solve,
    "eval": cmd_eval,
    "plan": cmd_plan,
    "record-ma": cmd_record_ma,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.debug, args.log_file)

    try:
        return COMMANDS[args.command](args)
    except (WorkforceMilpError, OSError) as e:
        code = exit_code_for(e)
        stage = getattr(e, "stage", "io")
        logger.error(f"{args.command} failed in stage {stage}: {e}")
        print(f"error [{stage}]: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
