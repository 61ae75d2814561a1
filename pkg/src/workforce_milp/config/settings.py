"""Configuration settings for workforce-milp."""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..core.exceptions import ConfigError

ENV_PREFIX = "WORKFORCE_MILP_"


def _env(name: str, default: str) -> str:
    return os.getenv(f"{ENV_PREFIX}{name}", default)


def _env_optional_int(name: str) -> Optional[int]:
    raw = os.getenv(f"{ENV_PREFIX}{name}")
    return int(raw) if raw not in (None, "") else None


# Bundled resources
PACKAGE_DIR = Path(__file__).resolve().parent.parent
RESOURCES_DIR = PACKAGE_DIR / "resources"
TEMPLATES_DIR = PACKAGE_DIR / "templates"
GRAPHS_DIR = RESOURCES_DIR / "graphs"
REGISTRIES_DIR = RESOURCES_DIR / "registries"

# Problem types and their bundled graph/registry files
PROBLEM_TYPES = ("shift-scheduling", "days-off-scheduling")
PROBLEM_TYPE_ALIASES = {
    "shift": "shift-scheduling",
    "shift-scheduling": "shift-scheduling",
    "days-off": "days-off-scheduling",
    "days-off-scheduling": "days-off-scheduling",
}
BUNDLED_GRAPHS = {
    "shift-scheduling": GRAPHS_DIR / "shift_scheduling.json",
    "days-off-scheduling": GRAPHS_DIR / "days_off_scheduling.json",
}
BUNDLED_REGISTRIES = {
    "shift-scheduling": REGISTRIES_DIR / "shift_scheduling.json",
    "days-off-scheduling": REGISTRIES_DIR / "days_off_scheduling.json",
}

# File paths
OUTPUT_DIR = Path(_env("OUTPUT_DIR", "output"))
LOG_FILE_NAME = "workforce_milp.log"

# LLM settings
LLM_ENDPOINT_URL = _env("ENDPOINT_URL", "https://api.openai.com/v1/chat/completions")
DEFAULT_MODEL_ID = _env("MODEL_ID", "gpt-4o-2024-08-06")
API_KEY_ENV = f"{ENV_PREFIX}API_KEY"
BACKENDS = ("live", "record", "replay")
DEFAULT_BACKEND = _env("BACKEND", "replay")
TEMPERATURE = 0.0
MAX_PARSE_ATTEMPTS = 2
MAX_MATCHES_PER_SENTENCE = 3
CORRECTIVE_INSTRUCTION = "Respond with only the JSON object."

# HTTP settings
REQUEST_TIMEOUT = int(_env("REQUEST_TIMEOUT", "60"))  # seconds
MAX_RETRIES = int(_env("MAX_RETRIES", "3"))
RETRY_DELAY = float(_env("RETRY_DELAY", "1"))  # seconds

# Assembly settings
MINUTES_PER_DAY = 1440
MAX_OVERTIME_PERIODS = _env_optional_int("MAX_OVERTIME_PERIODS")
DEFAULT_FULL_WORKLOAD_HOURS = _env_optional_int("FULL_WORKLOAD_HOURS")

# Solver settings
INTEGRALITY_TOL = 1e-6
GAP_TOL = 1e-6
FEASIBILITY_TOL = 1e-9
PIVOT_TOL = 1e-9
NODE_LIMIT = int(_env("NODE_LIMIT", "20000"))
MAX_SIMPLEX_ITERATIONS = int(_env("MAX_SIMPLEX_ITERATIONS", "5000"))
DEGENERACY_STREAK = 25
MAX_BOUND_DOUBLINGS = 20

# Evaluation settings
EA_REL_TOL = 1e-6
DEFAULT_TRIALS = 5
EVAL_WORKERS = int(_env("EVAL_WORKERS", "1"))

# Logging settings
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def resolve_problem_type(value: str) -> str:
    """Map a short or long problem type name to its canonical form."""
    try:
        return PROBLEM_TYPE_ALIASES[value]
    except KeyError:
        raise ConfigError(
            f"Unknown problem type {value!r}; expected one of {sorted(PROBLEM_TYPE_ALIASES)}"
        ) from None


@dataclass(frozen=True)
class RunConfig:
    """Per-run choices gathered from the command line."""

    graph: Optional[str] = None
    registry: Optional[Path] = None
    backend: str = DEFAULT_BACKEND
    model_id: str = DEFAULT_MODEL_ID
    fixture_dir: Optional[Path] = None
    output_dir: Path = OUTPUT_DIR
    trials: int = DEFAULT_TRIALS
    workers: int = EVAL_WORKERS
    endpoint_url: str = LLM_ENDPOINT_URL

    def validate(self) -> None:
        """Raise ConfigError when the combination of choices cannot run."""
        if self.backend not in BACKENDS:
            raise ConfigError(f"Unknown backend {self.backend!r}; expected one of {BACKENDS}")
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if self.backend in ("live", "record") and not os.getenv(API_KEY_ENV):
            raise ConfigError(
                f"{self.backend} mode requires the {API_KEY_ENV} environment variable"
            )
