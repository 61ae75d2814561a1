"""Unit tests for component identification."""

import json

import pytest

from builders import BUS_DIR
from workforce_milp.core.dataset import load_instance
from workforce_milp.core.exceptions import IdentificationError
from workforce_milp.core.identify import (
    build_identification_prompt,
    format_node_catalog,
    report_from_response,
    run_identification,
)


def test_node_catalog_lists_every_node(shift_graph):
    catalog = format_node_catalog(shift_graph)
    assert catalog.startswith("**Node Name**: Planning Horizon  \n**Description**: The total time")
    assert catalog.count("**Node Name**") == len(shift_graph.nodes)


def test_identification_prompt(shift_graph):
    """Test that the prompt carries the description, the catalog and the match limit."""
    request = build_identification_prompt(shift_graph, "  Drivers work eight hours.  \n", "m")
    assert request.model_id == "m"
    assert request.temperature == 0.0
    assert "#### Problem Description:\nDrivers work eight hours.\n" in request.user
    assert "**Node Name**: Overtime linking constraint" in request.user
    assert "up to 3 most relevant nodes" in request.user
    assert request.user.endswith("Do not include explanations or additional formatting.")


def test_identification_prompt_rejects_empty_description(shift_graph):
    with pytest.raises(IdentificationError):
        build_identification_prompt(shift_graph, " \n ")


def test_report_drops_unusable_matches(shift_graph):
    """Test that unknown nodes, extra matches and bad sentence keys are dropped."""
    value = {
        "sentences": [" First. ", "Second.", "Third."],
        "matches": {
            "sentence_1": ["Shifts", "Nurse rota", "Shifts", "Periods"],
            "sentence_2": [
                "Shifts",
                "Periods",
                "Shift duration",
                "Shift start time",
            ],
            "sentence_3": "Minimise total cost",
            "sentence_9": ["Shifts"],
            "summary": ["Periods"],
        },
    }
    report = report_from_response(shift_graph, value, "abc", 1)
    assert report.sentences == ["First.", "Second.", "Third."]
    assert report.matches == {
        1: ["Shifts", "Periods"],
        2: ["Shifts", "Periods", "Shift duration"],
        3: ["Minimise total cost"],
    }
    assert report.activated_nodes == {"Shifts", "Periods", "Shift duration", "Minimise total cost"}
    assert report.to_dict()["provenance"] == {"key": "abc", "attempts": 1}
    assert list(report.to_dict()["matches"]) == ["sentence_1", "sentence_2", "sentence_3"]


def test_node_names_ignore_case_and_punctuation(shift_graph):
    value = {
        "sentences": ["Demand must be met."],
        "matches": {"sentence_1": ["labour demand constraint", "Labour-Demand Constraint"]},
    }
    report = report_from_response(shift_graph, value)
    assert report.matches == {1: ["Labour demand constraint"]}


def test_sentences_without_matches_are_kept(shift_graph):
    report = report_from_response(shift_graph, {"sentences": ["A.", "B."], "matches": {}})
    assert report.matches == {1: [], 2: []}
    assert report.activated_nodes == frozenset()


def test_bus_identification_from_fixtures(shift_graph, replay_gateway):
    """Test identification of the bus driver description from recorded responses."""
    instance = load_instance(BUS_DIR)
    gateway = replay_gateway(BUS_DIR / "fixtures")
    report = run_identification(shift_graph, instance.description, gateway)

    assert len(report.sentences) == 7
    assert report.sentences[0] == "Consider a bus company scheduling drivers for its buses."
    assert report.sentences[-1] == "The goal is to minimise the number of drivers used."
    for sentence in report.sentences:
        assert sentence in instance.description
    assert report.matches[7] == ["Minimise total number of employees"]
    assert "Shift coverage" in report.activated_nodes
    assert report.attempts == 1
    assert (BUS_DIR / "fixtures" / f"{report.prompt_key}.json").is_file()


def test_identification_retries_then_fails(shift_graph, scripted_gateway):
    gateway, backend = scripted_gateway("not json", json.dumps({"sentences": "x", "matches": {}}))
    with pytest.raises(IdentificationError, match="Component identification failed"):
        run_identification(shift_graph, "Drivers work eight hours.", gateway)
    assert len(backend.requests) == 2


def test_identification_wraps_replay_miss(shift_graph, replay_gateway, tmp_path):
    with pytest.raises(IdentificationError, match="No replay fixture"):
        run_identification(shift_graph, "Drivers work eight hours.", replay_gateway(tmp_path))
