"""LLM gateway: live chat-completions backend, record/replay fixtures and JSON parsing."""

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Union

import requests

from ..config import settings
from ..utils.helpers import ensure_directory
from .exceptions import (
    ConfigError,
    ExtractionParseError,
    FixtureMissError,
    LLMError,
    TransientLLMError,
)

logger = logging.getLogger(__name__)

_FENCE_RE = re.compile(r"```[A-Za-z]*\s*\n?(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    user: str
    system: Optional[str] = None
    temperature: float = settings.TEMPERATURE

    def __post_init__(self) -> None:
        if not self.user or not self.user.strip():
            raise ValueError("Chat request needs a non-empty user message")
        if self.temperature != 0.0:
            raise ValueError(
                f"Temperature must be 0.0 for deterministic runs, got {self.temperature}"
            )

    def with_user(self, user: str) -> "ChatRequest":
        return replace(self, user=user)


@dataclass(frozen=True)
class ChatResponse:
    text: str
    usage: Optional[Dict[str, Any]] = None


def canonicalize_text(text: str) -> str:
    """Normalise line endings and trailing whitespace, and squeeze blank-line runs."""
    lines = [line.rstrip() for line in text.replace("\r\n", "\n").replace("\r", "\n").split("\n")]
    squeezed = []
    for line in lines:
        if not line and squeezed and not squeezed[-1]:
            continue
        squeezed.append(line)
    while squeezed and not squeezed[0]:
        squeezed.pop(0)
    while squeezed and not squeezed[-1]:
        squeezed.pop()
    return "\n".join(squeezed)


def canonical_request(request: ChatRequest) -> Dict[str, Any]:
    return {
        "model_id": request.model_id,
        "system": canonicalize_text(request.system) if request.system is not None else None,
        "temperature": float(request.temperature),
        "user": canonicalize_text(request.user),
    }


def fixture_key(request: ChatRequest) -> str:
    """SHA-256 of the canonical request."""
    payload = json.dumps(canonical_request(request), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def request_digest(request: ChatRequest) -> str:
    """Short description of a request for error messages."""
    first_line = canonicalize_text(request.user).split("\n", 1)[0]
    return f"{request.model_id}: {first_line[:80]}"


class FixtureStore:
    """Directory of recorded (request, response) pairs, one JSON file per request.

    Files are indexed by the key of the request stored inside them, so file names are
    free-form; recorded files are named ``<key>.json``.
    """

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self._index: Optional[Dict[str, Path]] = None
        self._lock = threading.Lock()

    def _build_index(self) -> Dict[str, Path]:
        index: Dict[str, Path] = {}
        if not self.directory.is_dir():
            return index
        for path in sorted(self.directory.glob("*.json")):
            try:
                stored = json.loads(path.read_text(encoding="utf-8"))["request"]
                request = ChatRequest(
                    model_id=stored["model_id"],
                    user="\n".join(stored["user"]),
                    system=stored.get("system"),
                    temperature=float(stored.get("temperature", 0.0)),
                )
            except (OSError, ValueError, KeyError, TypeError) as e:
                raise LLMError(f"Malformed fixture file {path}: {e}") from e
            index[fixture_key(request)] = path
        logger.debug(f"Indexed {len(index)} fixtures in {self.directory}")
        return index

    def _ensure_index(self) -> Dict[str, Path]:
        with self._lock:
            if self._index is None:
                self._index = self._build_index()
            return self._index

    def __len__(self) -> int:
        return len(self._ensure_index())

    def lookup(self, request: ChatRequest) -> Optional[ChatResponse]:
        path = self._ensure_index().get(fixture_key(request))
        if path is None:
            return None
        stored = json.loads(path.read_text(encoding="utf-8"))["response"]
        return ChatResponse(text=stored["text"], usage=stored.get("usage"))

    def save(self, request: ChatRequest, response: ChatResponse) -> Path:
        """Persist a response under the request's key."""
        key = fixture_key(request)
        canonical = canonical_request(request)
        document = {
            "request": {
                "model_id": canonical["model_id"],
                "system": canonical["system"],
                "temperature": canonical["temperature"],
                "user": canonical["user"].split("\n"),
            },
            "response": {"text": response.text, "usage": response.usage},
        }
        index = self._ensure_index()
        with self._lock:
            ensure_directory(self.directory)
            path = self.directory / f"{key}.json"
            path.write_text(
                json.dumps(document, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
            )
            index[key] = path
        logger.debug(f"Recorded fixture {path.name}")
        return path


class HttpChatBackend:
    """Client for any chat-completions compatible HTTP endpoint."""

    def __init__(
        self,
        endpoint_url: str,
        api_key: str,
        session: Optional[requests.Session] = None,
        timeout: int = settings.REQUEST_TIMEOUT,
        max_retries: int = settings.MAX_RETRIES,
    ):
        self.endpoint_url = endpoint_url
        self.api_key = api_key
        self.session = session or requests.Session()
        self.timeout = timeout
        self.max_retries = max_retries

    def complete(self, request: ChatRequest) -> ChatResponse:
        """Send one request, retrying transport failures.

        Raises:
            TransientLLMError: If every attempt failed.
        """
        messages = []
        if request.system is not None:
            messages.append({"role": "system", "content": request.system})
        messages.append({"role": "user", "content": request.user})
        payload = {
            "model": request.model_id,
            "messages": messages,
            "temperature": request.temperature,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}

        last_error: Optional[Exception] = None
        for attempt in range(self.max_retries):
            try:
                response = self.session.post(
                    self.endpoint_url, json=payload, headers=headers, timeout=self.timeout
                )
                response.raise_for_status()
                data = response.json()
                text = data["choices"][0]["message"]["content"]
                return ChatResponse(text=text, usage=data.get("usage"))

            except (requests.RequestException, KeyError, IndexError, TypeError, ValueError) as e:
                last_error = e
                logger.warning(
                    f"Attempt {attempt + 1}/{self.max_retries} failed for {self.endpoint_url}: {e}"
                )
                if attempt < self.max_retries - 1:
                    time.sleep(settings.RETRY_DELAY)
                continue

        raise TransientLLMError(
            f"Chat completion request to {self.endpoint_url} failed: {last_error}",
            retries=self.max_retries,
        )


class LLMGateway:
    """The one place LLM calls go through.

    Modes:
        live: call the backend.
        record: call the backend, store the response as a fixture, return it.
        replay: answer from fixtures only; a miss raises FixtureMissError.
    """

    def __init__(
        self,
        mode: str,
        model_id: str = settings.DEFAULT_MODEL_ID,
        fixtures: Optional[FixtureStore] = None,
        backend: Optional[HttpChatBackend] = None,
    ):
        if mode not in settings.BACKENDS:
            raise ConfigError(f"Unknown backend {mode!r}; expected one of {settings.BACKENDS}")
        if mode in ("record", "replay") and fixtures is None:
            raise ConfigError(f"{mode} mode needs a fixture directory")
        if mode in ("live", "record") and backend is None:
            raise ConfigError(f"{mode} mode needs an HTTP backend")
        self.mode = mode
        self.model_id = model_id
        self.fixtures = fixtures
        self.backend = backend

    @classmethod
    def create(
        cls,
        mode: str,
        model_id: str = settings.DEFAULT_MODEL_ID,
        fixture_dir: Optional[Path] = None,
        endpoint_url: str = settings.LLM_ENDPOINT_URL,
        session: Optional[requests.Session] = None,
    ) -> "LLMGateway":
        """Build a gateway, reading the API credential from the environment when needed."""
        backend = None
        if mode in ("live", "record"):
            api_key = os.getenv(settings.API_KEY_ENV)
            if not api_key:
                raise ConfigError(
                    f"{mode} mode requires the {settings.API_KEY_ENV} environment variable"
                )
            backend = HttpChatBackend(endpoint_url, api_key, session=session)
        fixtures = FixtureStore(fixture_dir) if fixture_dir is not None else None
        return cls(mode, model_id=model_id, fixtures=fixtures, backend=backend)

    def request(self, user: str, system: Optional[str] = None) -> ChatRequest:
        return ChatRequest(model_id=self.model_id, user=user, system=system)

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = fixture_key(request)
        if self.mode == "replay":
            assert self.fixtures is not None
            stored = self.fixtures.lookup(request)
            if stored is None:
                logger.error(f"Replay miss for {request_digest(request)} ({key})")
                raise FixtureMissError(key, request_digest(request))
            logger.debug(f"Replayed fixture {key}")
            return stored

        assert self.backend is not None
        logger.debug(f"Calling {self.model_id} for {request_digest(request)}")
        response = self.backend.complete(request)
        if self.mode == "record":
            assert self.fixtures is not None
            self.fixtures.save(request, response)
        return response


def parse_structured(text: str) -> Dict[str, Any]:
    """Pull the first well-formed JSON object out of a completion.

    Code fences and surrounding prose are ignored.

    Raises:
        ExtractionParseError: If no JSON object can be decoded.
    """
    fenced = _FENCE_RE.search(text)
    candidate = fenced.group(1) if fenced else text
    decoder = json.JSONDecoder()
    for source in (candidate, text) if fenced else (candidate,):
        start = source.find("{")
        while start != -1:
            try:
                value, _ = decoder.raw_decode(source, start)
                return value  # type: ignore[no-any-return]
            except json.JSONDecodeError:
                start = source.find("{", start + 1)
    raise ExtractionParseError("No JSON object found in response", text)


@dataclass(frozen=True)
class StructuredResult:
    value: Dict[str, Any]
    key: str
    attempts: int


def complete_structured(
    gateway: LLMGateway,
    request: ChatRequest,
    validator: Optional[Callable[[Dict[str, Any]], None]] = None,
    max_attempts: int = settings.MAX_PARSE_ATTEMPTS,
) -> StructuredResult:
    """Ask for a JSON object, re-asking with a corrective instruction when parsing fails.

    Args:
        gateway: Gateway used for every attempt.
        request: First request to send.
        validator: Optional check that raises ExtractionParseError for unusable objects.
        max_attempts: Total number of attempts.

    Returns:
        The parsed object with the key of the request that produced it.
    """
    current = request
    last_error: Optional[ExtractionParseError] = None
    for attempt in range(1, max_attempts + 1):
        response = gateway.complete(current)
        try:
            value = parse_structured(response.text)
            if validator is not None:
                validator(value)
            return StructuredResult(value=value, key=fixture_key(current), attempts=attempt)
        except ExtractionParseError as e:
            last_error = e
            logger.warning(f"Attempt {attempt}/{max_attempts} returned unusable output: {e}")
            current = request.with_user(f"{request.user}\n\n{settings.CORRECTIVE_INSTRUCTION}")

    assert last_error is not None
    raise last_error
