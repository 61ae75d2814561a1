"""Benchmark instances: one directory per instance with a description and a meta file."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..config import settings
from .exceptions import ConfigError, EvaluationError

logger = logging.getLogger(__name__)

DESCRIPTION_FILE = "description.md"
META_FILE = "meta.json"
REFERENCE_MODEL_FILE = "reference_model.tex"
FIXTURES_DIR = "fixtures"


@dataclass
class Instance:
    id: str
    path: Path
    problem_type: str
    description: str
    reference_optimum: Optional[float] = None
    reference_model: Optional[str] = None
    ma_verdict: Optional[bool] = None
    ma_notes: str = ""
    source: str = ""
    optimum_source: str = ""

    @property
    def fixture_dir(self) -> Path:
        return self.path / FIXTURES_DIR

    def meta(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "problem_type": self.problem_type,
            "reference_optimum": self.reference_optimum,
            "source": self.source,
            "optimum_source": self.optimum_source,
            "ma_verdict": self.ma_verdict,
            "ma_notes": self.ma_notes,
        }


def load_instance(directory: Union[str, Path]) -> Instance:
    """Load one instance directory.

    Raises:
        FileNotFoundError: If the directory does not exist.
        ConfigError: If the description or meta file is missing or malformed.
    """
    directory = Path(directory)
    if not directory.exists():
        raise FileNotFoundError(f"Instance directory {directory} does not exist")
    description_path = directory / DESCRIPTION_FILE
    meta_path = directory / META_FILE
    if not description_path.is_file() or not meta_path.is_file():
        raise ConfigError(f"{directory} needs both {DESCRIPTION_FILE} and {META_FILE}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed {meta_path}: {e}") from e

    optimum = meta.get("reference_optimum")
    reference_path = directory / REFERENCE_MODEL_FILE
    return Instance(
        id=str(meta.get("id") or directory.name),
        path=directory,
        problem_type=settings.resolve_problem_type(str(meta.get("problem_type", ""))),
        description=description_path.read_text(encoding="utf-8"),
        reference_optimum=float(optimum) if optimum is not None else None,
        reference_model=(
            reference_path.read_text(encoding="utf-8") if reference_path.is_file() else None
        ),
        ma_verdict=meta.get("ma_verdict"),
        ma_notes=str(meta.get("ma_notes") or ""),
        source=str(meta.get("source") or ""),
        optimum_source=str(meta.get("optimum_source") or ""),
    )


def load_dataset(directory: Union[str, Path]) -> List[Instance]:
    """Load every instance below a directory, sorted by directory name.

    A directory that itself holds a meta file is treated as a single instance.
    """
    directory = Path(directory)
    if (directory / META_FILE).is_file():
        return [load_instance(directory)]
    if not directory.is_dir():
        raise FileNotFoundError(f"Dataset directory {directory} does not exist")
    instances = [
        load_instance(child)
        for child in sorted(directory.iterdir())
        if child.is_dir() and (child / META_FILE).is_file()
    ]
    if not instances:
        logger.warning(f"No instances found in {directory}")
    logger.info(f"Loaded {len(instances)} instances from {directory}")
    return instances


def save_meta(instance: Instance) -> Path:
    path = instance.path / META_FILE
    try:
        path.write_text(json.dumps(instance.meta(), indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise EvaluationError(f"Could not write {path}: {e}") from e
    return path
