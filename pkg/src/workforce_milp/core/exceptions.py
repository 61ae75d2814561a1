"""Exception hierarchy for workforce-milp."""

from typing import Iterable, Optional, Sequence


class WorkforceMilpError(Exception):
    """Base class for every error raised by this package."""

    stage: str = "general"


class ConfigError(WorkforceMilpError):
    stage = "config"


class GraphFormatError(WorkforceMilpError):
    """A graph or registry file could not be parsed."""

    stage = "config"

    def __init__(self, path: str, message: str, line: Optional[int] = None, context: str = ""):
        self.path = path
        self.line = line
        self.context = context
        location = f"{path}:{line}" if line is not None else path
        detail = f" near {context!r}" if context else ""
        super().__init__(f"{location}: {message}{detail}")


class GraphValidationError(WorkforceMilpError):
    """A modelling graph broke one of its invariants."""

    stage = "config"

    def __init__(self, findings: Sequence[object]):
        self.findings = list(findings)
        lines = "; ".join(str(finding) for finding in self.findings)
        super().__init__(f"Invalid modelling graph: {lines}")


class RegistryError(WorkforceMilpError):
    """A task registry referenced unknown tasks or nodes."""

    stage = "config"


class UnknownNodeError(WorkforceMilpError):
    stage = "plan"

    def __init__(self, names: Iterable[str]):
        self.names = sorted(names)
        super().__init__(f"Unknown modelling graph node(s): {', '.join(self.names)}")


class TaskCycleError(WorkforceMilpError):
    stage = "plan"

    def __init__(self, cycle: Sequence[str]):
        self.cycle = list(cycle)
        super().__init__(f"Dependency cycle between tasks: {' -> '.join(self.cycle)}")


class SequencingError(WorkforceMilpError):
    """A task was reached before one of its prerequisites had run."""

    stage = "extraction"


class LLMError(WorkforceMilpError):
    stage = "llm"


class FixtureMissError(LLMError):
    def __init__(self, key: str, digest: str):
        self.key = key
        self.digest = digest
        super().__init__(f"No replay fixture for request {key} ({digest})")


class TransientLLMError(LLMError):
    def __init__(self, message: str, retries: int):
        self.retries = retries
        super().__init__(f"{message} (after {retries} attempts)")


class ExtractionParseError(LLMError):
    def __init__(self, message: str, raw_text: str):
        self.raw_text = raw_text
        super().__init__(f"{message}; raw response: {raw_text[:500]!r}")


class IdentificationError(WorkforceMilpError):
    stage = "identification"


class ExtractionError(WorkforceMilpError):
    stage = "extraction"

    def __init__(self, message: str, task: Optional[str] = None):
        self.task = task
        super().__init__(message)


class AssemblyError(WorkforceMilpError):
    stage = "assembly"


class SolverError(WorkforceMilpError):
    stage = "solver"

    def __init__(self, message: str, log: Optional[Sequence[str]] = None):
        self.log = list(log or [])
        super().__init__(message)


class LPParseError(WorkforceMilpError):
    stage = "lp-parse"

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class EvaluationError(WorkforceMilpError):
    stage = "evaluation"
