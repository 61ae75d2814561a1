"""Evaluation harness: repeated pipeline trials, execution accuracy and model accuracy."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import requests

from ..config import settings
from ..config.settings import RunConfig
from ..utils.export import export_to_csv, export_to_excel, format_table
from ..utils.helpers import ensure_directory, write_json
from .dataset import Instance, load_dataset, save_meta
from .exceptions import ConfigError, EvaluationError, WorkforceMilpError
from .pipeline import run_instance

logger = logging.getLogger(__name__)


@dataclass
class TrialOutcome:
    instance_id: str
    trial: int
    status: str
    stage: str
    objective: Optional[float] = None
    reference: Optional[float] = None
    matched: bool = False
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TrialReport:
    instance_ids: List[str]
    trials: int
    outcomes: List[TrialOutcome]
    ea_per_trial: List[float]
    average_ea: float
    ma: Optional[float] = None
    ma_verdicts: Dict[str, Optional[bool]] = field(default_factory=dict)

    def outcome(self, instance_id: str, trial: int) -> TrialOutcome:
        for outcome in self.outcomes:
            if outcome.instance_id == instance_id and outcome.trial == trial:
                return outcome
        raise KeyError((instance_id, trial))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "instances": self.instance_ids,
            "trials": self.trials,
            "ea_per_trial": self.ea_per_trial,
            "average_ea": self.average_ea,
            "ma": self.ma,
            "ma_verdicts": self.ma_verdicts,
            "outcomes": [outcome.to_dict() for outcome in self.outcomes],
        }


def compute_ea(matches: int, total: int) -> float:
    """Execution accuracy: share of instances whose model solves to the known optimum.

    Raises:
        EvaluationError: If total is not positive or matches is out of range.
    """
    if total <= 0:
        raise EvaluationError("Execution accuracy needs at least one instance")
    if not 0 <= matches <= total:
        raise EvaluationError(f"matches must be between 0 and {total}, got {matches}")
    return matches / total


def compute_ma(verdicts: Iterable[Optional[bool]]) -> Optional[float]:
    """Model accuracy over the instances that have a recorded verdict, or None."""
    recorded = [verdict for verdict in verdicts if verdict is not None]
    if not recorded:
        return None
    return sum(1 for verdict in recorded if verdict) / len(recorded)


def is_match(computed: Optional[float], reference: Optional[float]) -> bool:
    if computed is None or reference is None:
        return False
    return abs(computed - reference) <= settings.EA_REL_TOL * max(1.0, abs(reference))


def _run_one(
    instance: Instance,
    trial: int,
    config: RunConfig,
    output_dir: Path,
    session: Optional[requests.Session],
) -> TrialOutcome:
    target = output_dir / f"trial_{trial}" / instance.id
    try:
        state = run_instance(instance, config, target, solve=True, session=session)
    except WorkforceMilpError as e:
        logger.warning(f"Trial {trial} of {instance.id} failed at {e.stage}: {e}")
        return TrialOutcome(
            instance.id,
            trial,
            "failed",
            e.stage,
            reference=instance.reference_optimum,
            error=str(e),
        )
    except OSError as e:
        logger.warning(f"Trial {trial} of {instance.id} failed with an I/O error: {e}")
        return TrialOutcome(
            instance.id, trial, "failed", "io", reference=instance.reference_optimum, error=str(e)
        )

    assert state.result is not None
    objective = state.result.objective
    matched = state.result.is_optimal and is_match(objective, instance.reference_optimum)
    if not matched:
        logger.info(
            f"Trial {trial} of {instance.id}: {objective} "
            f"does not match {instance.reference_optimum}"
        )
    return TrialOutcome(
        instance.id,
        trial,
        state.result.status,
        state.stage,
        objective=objective,
        reference=instance.reference_optimum,
        matched=matched,
    )


def run_trials(
    instances: Sequence[Instance],
    trials: int,
    config: RunConfig,
    output_dir: Union[str, Path],
    session: Optional[requests.Session] = None,
) -> TrialReport:
    """Run every instance ``trials`` times and score the results.

    Failures of any stage count as non-matches; they never stop the batch.

    Args:
        instances: Instances to evaluate.
        trials: Number of independent trials.
        config: Run configuration (backend, model, workers).
        output_dir: Directory receiving one audit bundle per instance and trial.
        session: Optional HTTP session shared by live backends.

    Returns:
        TrialReport with execution accuracy per trial and its average.

    Raises:
        ConfigError: If trials is below 1.
        EvaluationError: If there are no instances.
    """
    if trials < 1:
        raise ConfigError(f"trials must be at least 1, got {trials}")
    if not instances:
        raise EvaluationError("No instances to evaluate")
    output_dir = ensure_directory(output_dir)

    jobs: List[Tuple[Instance, int]] = [
        (instance, trial) for trial in range(1, trials + 1) for instance in instances
    ]
    logger.info(
        f"Running {len(instances)} instances x {trials} trials with {config.workers} workers"
    )

    def run_job(job: Tuple[Instance, int]) -> TrialOutcome:
        return _run_one(job[0], job[1], config, output_dir, session)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            outcomes = list(executor.map(run_job, jobs))
    else:
        outcomes = [run_job(job) for job in jobs]

    ea_per_trial = [
        compute_ea(sum(1 for o in outcomes if o.trial == trial and o.matched), len(instances))
        for trial in range(1, trials + 1)
    ]
    verdicts = {instance.id: instance.ma_verdict for instance in instances}
    report = TrialReport(
        instance_ids=[instance.id for instance in instances],
        trials=trials,
        outcomes=outcomes,
        ea_per_trial=ea_per_trial,
        average_ea=sum(ea_per_trial) / trials,
        ma=compute_ma(verdicts.values()),
        ma_verdicts=verdicts,
    )
    logger.info(f"Average execution accuracy {report.average_ea:.0%} over {trials} trials")
    return report


def record_ma(
    dataset_dir: Union[str, Path], instance_id: str, verdict: bool, notes: str = ""
) -> Optional[float]:
    """Persist a model-accuracy verdict and return the recomputed MA of the dataset.

    Raises:
        EvaluationError: If the instance id is unknown.
    """
    instances = load_dataset(dataset_dir)
    matches = [instance for instance in instances if instance.id == instance_id]
    if not matches:
        raise EvaluationError(f"Unknown instance {instance_id!r} in {dataset_dir}")
    instance = matches[0]
    instance.ma_verdict = verdict
    instance.ma_notes = notes
    save_meta(instance)
    logger.info(f"Recorded model accuracy verdict {verdict} for {instance_id}")
    return compute_ma(i.ma_verdict for i in instances)


def _percent(value: Optional[float]) -> Optional[str]:
    return f"{value:.0%}" if value is not None else None


def report_rows(report: TrialReport) -> List[Dict[str, Any]]:
    """One row per instance with each trial's outcome, then an EA summary row."""
    rows: List[Dict[str, Any]] = []
    for instance_id in report.instance_ids:
        row: Dict[str, Any] = {"instance": instance_id}
        for trial in range(1, report.trials + 1):
            outcome = report.outcome(instance_id, trial)
            if outcome.matched:
                row[f"trial_{trial}"] = "match"
            elif outcome.status == "failed":
                row[f"trial_{trial}"] = f"failed ({outcome.stage})"
            else:
                row[f"trial_{trial}"] = f"miss ({outcome.objective})"
        row["average"] = None
        row["ma"] = report.ma_verdicts.get(instance_id)
        rows.append(row)

    summary: Dict[str, Any] = {"instance": "EA"}
    for trial, ea in enumerate(report.ea_per_trial, start=1):
        summary[f"trial_{trial}"] = _percent(ea)
    summary["average"] = _percent(report.average_ea)
    summary["ma"] = _percent(report.ma)
    rows.append(summary)
    return rows


def format_report(report: TrialReport) -> str:
    return format_table(report_rows(report))


def write_report(report: TrialReport, output_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write report.json, report.csv and report.xlsx.

    Raises:
        EvaluationError: If the JSON report cannot be written.
    """
    output_dir = ensure_directory(output_dir)
    try:
        paths = {"json": write_json(output_dir / "report.json", report.to_dict())}
    except OSError as e:
        raise EvaluationError(f"Could not write the report to {output_dir}: {e}") from e
    rows = report_rows(report)
    if export_to_csv(rows, output_dir / "report.csv"):
        paths["csv"] = output_dir / "report.csv"
    if export_to_excel(rows, output_dir / "report.xlsx"):
        paths["xlsx"] = output_dir / "report.xlsx"
    return paths
