"""Test configuration and shared fixtures."""

import os
from pathlib import Path
from typing import Callable, Generator, Tuple, Union

import pytest

from builders import TEST_OUTPUT_DIR, MockResponse, MockSession, ScriptedBackend
from workforce_milp.config import settings
from workforce_milp.core.graph import ModellingGraph, load_bundled_graph
from workforce_milp.core.llm import FixtureStore, LLMGateway
from workforce_milp.core.tasks import TaskRegistry, load_bundled_registry


@pytest.fixture(autouse=True)
def setup_test_env(request: pytest.FixtureRequest) -> Generator[None, None, None]:
    """Set up test environment variables and directories."""
    # Create test output directory
    TEST_OUTPUT_DIR.mkdir(exist_ok=True)

    # Store original environment
    original_env = dict(os.environ)

    # Keep every test offline unless it is marked live
    if "live" not in request.keywords:
        os.environ.pop(settings.API_KEY_ENV, None)
    os.environ["WORKFORCE_MILP_OUTPUT_DIR"] = str(TEST_OUTPUT_DIR)

    yield

    # Restore original environment
    os.environ.clear()
    os.environ.update(original_env)


@pytest.fixture(scope="session")
def shift_graph() -> ModellingGraph:
    """Bundled shift scheduling graph."""
    return load_bundled_graph("shift-scheduling")


@pytest.fixture(scope="session")
def days_off_graph() -> ModellingGraph:
    """Bundled days-off scheduling graph."""
    return load_bundled_graph("days-off-scheduling")


@pytest.fixture(scope="session")
def shift_registry(shift_graph: ModellingGraph) -> TaskRegistry:
    return load_bundled_registry(shift_graph)


@pytest.fixture(scope="session")
def days_off_registry(days_off_graph: ModellingGraph) -> TaskRegistry:
    return load_bundled_registry(days_off_graph)


@pytest.fixture
def replay_gateway() -> Callable[[Path], LLMGateway]:
    """Factory for replay gateways reading a fixture directory."""

    def make(fixture_dir: Path) -> LLMGateway:
        return LLMGateway("replay", fixtures=FixtureStore(fixture_dir))

    return make


@pytest.fixture
def scripted_gateway() -> Callable[..., Tuple[LLMGateway, ScriptedBackend]]:
    """Factory for live-mode gateways backed by canned responses."""

    def make(*responses: Union[str, Exception]) -> Tuple[LLMGateway, ScriptedBackend]:
        backend = ScriptedBackend(responses)
        return LLMGateway("live", backend=backend), backend  # type: ignore[arg-type]

    return make


@pytest.fixture
def mock_session() -> Callable[..., MockSession]:
    """Factory for mock sessions returning the given responses in order."""

    def make(*responses: Union[MockResponse, Exception]) -> MockSession:
        return MockSession(responses)

    return make
