"""Unit tests for the evaluation harness."""

import json
import shutil
from pathlib import Path
from typing import List

import pandas as pd
import pytest

from builders import BUS_DIR
from workforce_milp.config.settings import RunConfig
from workforce_milp.core.dataset import Instance, load_instance
from workforce_milp.core.exceptions import AssemblyError, ConfigError, EvaluationError
from workforce_milp.core.harness import (
    compute_ea,
    compute_ma,
    format_report,
    is_match,
    record_ma,
    report_rows,
    run_trials,
    write_report,
)
from workforce_milp.core.pipeline import Formulation
from workforce_milp.core.solver import SolveResult


def make_instance(instance_id: str, optimum: float, verdict=None) -> Instance:
    return Instance(
        id=instance_id,
        path=Path("unused"),
        problem_type="shift-scheduling",
        description="Drivers.",
        reference_optimum=optimum,
        ma_verdict=verdict,
    )


def solved(objective: float, status: str = "optimal") -> Formulation:
    return Formulation(name="x", result=SolveResult(status, objective), stage="solved")


def test_compute_ea():
    assert compute_ea(3, 4) == 0.75
    assert compute_ea(0, 2) == 0.0
    assert compute_ea(18, 20) == pytest.approx(0.90)
    assert compute_ea(7, 20) == pytest.approx(0.35)
    with pytest.raises(EvaluationError):
        compute_ea(0, 0)
    with pytest.raises(EvaluationError):
        compute_ea(5, 4)


def test_compute_ma():
    """Test that instances without a verdict are left out."""
    assert compute_ma([True, None, False, True]) == pytest.approx(2 / 3)
    assert compute_ma([True] * 18 + [False] * 2) == pytest.approx(0.9)
    assert compute_ma([None, None]) is None
    assert compute_ma([]) is None


def test_is_match():
    assert is_match(26.0000001, 26)
    assert is_match(11000.005, 11000)
    assert not is_match(25, 26)
    assert not is_match(None, 26)
    assert not is_match(26, None)


@pytest.fixture
def fake_runs(mocker):
    """Trial outcomes: bus always matches, lab fails once and misses once."""
    answers = {
        ("bus", 1): solved(26),
        ("bus", 2): solved(26),
        ("lab", 1): AssemblyError("no cost information"),
        ("lab", 2): solved(7200),
    }

    def run(instance, config, target, solve=True, session=None):
        answer = answers[(instance.id, int(target.parent.name.split("_")[1]))]
        if isinstance(answer, Exception):
            raise answer
        return answer

    return mocker.patch("workforce_milp.core.harness.run_instance", side_effect=run)


@pytest.mark.parametrize("workers", [1, 2])
def test_run_trials(fake_runs, tmp_path: Path, workers: int):
    """Test execution accuracy per trial, failures included."""
    instances = [make_instance("bus", 26, True), make_instance("lab", 6960)]
    report = run_trials(instances, 2, RunConfig(workers=workers), tmp_path)

    assert fake_runs.call_count == 4
    assert report.ea_per_trial == [0.5, 0.5]
    assert report.average_ea == 0.5
    assert report.ma == 1.0
    failed = report.outcome("lab", 1)
    assert (failed.status, failed.stage, failed.matched) == ("failed", "assembly", False)
    assert failed.error == "no cost information"
    assert report.outcome("lab", 2).objective == 7200
    assert report.outcome("bus", 2).matched


def test_node_limit_result_never_matches(mocker, tmp_path: Path):
    mocker.patch(
        "workforce_milp.core.harness.run_instance", return_value=solved(26, "node-limit")
    )
    report = run_trials([make_instance("bus", 26)], 1, RunConfig(), tmp_path)
    assert report.ea_per_trial == [0.0]


def test_run_trials_rejects_bad_arguments(tmp_path: Path):
    with pytest.raises(ConfigError):
        run_trials([make_instance("bus", 26)], 0, RunConfig(), tmp_path)
    with pytest.raises(EvaluationError):
        run_trials([], 1, RunConfig(), tmp_path)


def test_report_rows_and_files(fake_runs, tmp_path: Path):
    """Test the report table and the files written for it."""
    instances = [make_instance("bus", 26, True), make_instance("lab", 6960)]
    report = run_trials(instances, 2, RunConfig(), tmp_path / "runs")
    rows: List[dict] = report_rows(report)

    assert rows[0] == {
        "instance": "bus",
        "trial_1": "match",
        "trial_2": "match",
        "average": None,
        "ma": True,
    }
    assert rows[1]["trial_1"] == "failed (assembly)"
    assert rows[1]["trial_2"] == "miss (7200)"
    assert rows[2] == {
        "instance": "EA",
        "trial_1": "50%",
        "trial_2": "50%",
        "average": "50%",
        "ma": "100%",
    }
    assert "EA" in format_report(report)

    paths = write_report(report, tmp_path / "report")
    assert set(paths) == {"json", "csv", "xlsx"}
    stored = json.loads(paths["json"].read_text(encoding="utf-8"))
    assert stored["average_ea"] == 0.5
    assert len(stored["outcomes"]) == 4
    table = pd.read_csv(paths["csv"])
    assert list(table["instance"]) == ["bus", "lab", "EA"]


def test_record_ma(tmp_path: Path):
    """Test that a verdict is stored in the instance meta file."""
    dataset = tmp_path / "dataset"
    shutil.copytree(BUS_DIR, dataset / "bus_drivers")

    assert record_ma(dataset, "bus_drivers", False, "wrong coverage") == 0.0
    instance = load_instance(dataset / "bus_drivers")
    assert instance.ma_verdict is False
    assert instance.ma_notes == "wrong coverage"
    assert instance.reference_optimum == 26

    assert record_ma(dataset, "bus_drivers", True) == 1.0
    with pytest.raises(EvaluationError, match="Unknown instance"):
        record_ma(dataset, "post_office", True)
