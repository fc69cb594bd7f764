"""Instruction decomposition into ordered attention-spot phrases.

Three interchangeable parser clients share one tiny contract
(``.parse(instruction) -> list[str]`` plus ``.source`` / ``.prompt_version``
attributes):

* ``RemoteSpotParser`` calls an LLM endpoint over HTTP with retries,
* ``MockSpotParser`` inverts the instruction templates used by the world
  generator, fully offline and deterministic,
* ``CachedParser`` wraps any client with a content-addressed file cache.

``parse_instruction`` normalizes whatever the client returns and always
yields a non-empty sequence: if the client fails or finds nothing, the
whole instruction becomes a single spot (the behavior of the
no-decomposition ablation).
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import requests

PROMPT_VERSION = "v1"
DEFAULT_MAX_SPOTS = 8

LLM_URL_ENV = "VLNCM_LLM_URL"
LLM_TOKEN_ENV = "VLNCM_LLM_TOKEN"


class ParserError(RuntimeError):
    """Remote parser failed after retries or returned garbage."""


class ParserConfigError(ParserError):
    """Remote parser selected but its environment is not configured."""


def load_prompt() -> str:
    return resources.files("vlncm.assets").joinpath(f"spot_prompt_{PROMPT_VERSION}.txt").read_text()


def normalize_phrase(text: str) -> str:
    return " ".join(str(text).lower().split())


def _dedup_adjacent(items):
    out = []
    for it in items:
        if not out or out[-1] != it:
            out.append(it)
    return out


def normalize_spots(phrases) -> tuple:
    """Lowercase, trim, drop empties, collapse adjacent duplicates."""
    cleaned = [normalize_phrase(p) for p in phrases]
    return tuple(_dedup_adjacent([p for p in cleaned if p]))


@dataclass(frozen=True)
class AttentionSpotSequence:
    """Ordered landmark phrases plus where they came from."""

    spots: tuple
    source: str  # "remote" | "mock" | "whole-instruction"

    def __post_init__(self):
        if not self.spots:
            raise ValueError("attention spot sequence must be non-empty")
        if self.source not in ("remote", "mock", "whole-instruction"):
            raise ValueError(f"unknown source {self.source!r}")

    def __len__(self):
        return len(self.spots)


def whole_instruction_sequence(instruction: str) -> AttentionSpotSequence:
    phrase = normalize_phrase(instruction)
    if not phrase:
        raise ValueError("instruction must be non-empty")
    return AttentionSpotSequence(spots=(phrase,), source="whole-instruction")


# Template markers used by the synthetic instruction generator; mock parsing
# is their exact inverse.
_MARKER_RE = re.compile(
    r"\b(?:past|to|at)\s+the\s+(.+?)(?=,|\.|;|\s+and\b|\s+then\b|$)",
    re.IGNORECASE,
)


def extract_template_spots(instruction: str) -> list:
    return [m.group(1) for m in _MARKER_RE.finditer(instruction)]


class MockSpotParser:
    """Deterministic offline parser: inverts the generator's templates."""

    source = "mock"
    prompt_version = "mock-v1"

    def parse(self, instruction: str) -> list:
        return extract_template_spots(instruction)


class RemoteSpotParser:
    """HTTP client for an LLM spot-extraction service.

    Request body: ``{"model", "prompt", "instruction"}``; expected response
    body: ``{"spots": [...]}``. Endpoint and bearer token come from the
    ``VLNCM_LLM_URL`` / ``VLNCM_LLM_TOKEN`` environment unless given
    explicitly. Retries with exponential backoff, then raises ParserError.
    """

    source = "remote"
    prompt_version = PROMPT_VERSION

    def __init__(
        self,
        url: str | None = None,
        token: str | None = None,
        model: str = "gpt-3.5-turbo",
        max_retries: int = 3,
        backoff_s: float = 1.0,
        timeout_s: float = 20.0,
    ):
        self.url = url or os.environ.get(LLM_URL_ENV)
        self.token = token or os.environ.get(LLM_TOKEN_ENV)
        if not self.url:
            raise ParserConfigError(f"remote parser needs {LLM_URL_ENV} set")
        if not self.token:
            raise ParserConfigError(f"remote parser needs {LLM_TOKEN_ENV} set")
        self.model = model
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self.prompt = load_prompt()

    def parse(self, instruction: str) -> list:
        body = {"model": self.model, "prompt": self.prompt, "instruction": instruction}
        headers = {"Authorization": f"Bearer {self.token}"}
        last_error = None
        for attempt in range(self.max_retries):
            try:
                resp = requests.post(self.url, json=body, headers=headers, timeout=self.timeout_s)
                resp.raise_for_status()
                spots = resp.json().get("spots")
                if not isinstance(spots, list):
                    raise ValueError("response missing 'spots' list")
                return [str(s) for s in spots]
            except Exception as exc:  # noqa: BLE001 - any transport/shape failure retries
                last_error = exc
                if attempt + 1 < self.max_retries:
                    time.sleep(self.backoff_s * (2**attempt))
        raise ParserError(f"remote parser failed after {self.max_retries} attempts: {last_error}")


class CachedParser:
    """File cache in front of any parser client.

    Keys hash the prompt version plus the normalized instruction, so
    whitespace-only differences hit the cache and a prompt bump misses it.
    Corrupt entries are treated as misses and overwritten; writes are
    atomic so concurrent workers at worst redo identical work.
    """

    def __init__(self, inner, cache_dir):
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    @property
    def source(self):
        return self.inner.source

    @property
    def prompt_version(self):
        return self.inner.prompt_version

    def _key_path(self, instruction: str) -> Path:
        key = f"{self.prompt_version}\n{normalize_phrase(instruction)}"
        digest = hashlib.sha256(key.encode("utf-8")).hexdigest()
        return self.cache_dir / f"{digest}.json"

    def parse(self, instruction: str) -> list:
        path = self._key_path(instruction)
        if path.exists():
            try:
                spots = json.loads(path.read_text())
                if isinstance(spots, list):
                    return [str(s) for s in spots]
            except (json.JSONDecodeError, OSError):
                pass  # corrupt entry: fall through and refresh
        spots = self.inner.parse(instruction)
        fd, tmp = tempfile.mkstemp(dir=self.cache_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(json.dumps(list(spots)))
            os.replace(tmp, path)
        except OSError:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return list(spots)


def cached(client, cache_dir) -> CachedParser:
    return CachedParser(client, cache_dir)


def parse_instruction(client, instruction: str, max_spots: int = DEFAULT_MAX_SPOTS) -> AttentionSpotSequence:
    """Decompose an instruction into attention spots via a parser client.

    Client failures and empty parses fall back to the whole instruction as
    a single spot, so the result is always non-empty for non-empty input.
    """
    if max_spots < 1:
        raise ValueError("max_spots must be >= 1")
    if not normalize_phrase(instruction):
        raise ValueError("instruction must be non-empty")
    try:
        raw = client.parse(instruction)
    except ParserError:
        return whole_instruction_sequence(instruction)
    spots = normalize_spots(raw)[:max_spots]
    if not spots:
        return whole_instruction_sequence(instruction)
    return AttentionSpotSequence(spots=spots, source=client.source)


def mock_parse(instruction: str) -> AttentionSpotSequence:
    """Offline template inversion; whole instruction if no markers match."""
    if not normalize_phrase(instruction):
        raise ValueError("instruction must be non-empty")
    spots = normalize_spots(extract_template_spots(instruction))
    if not spots:
        return whole_instruction_sequence(instruction)
    return AttentionSpotSequence(spots=spots, source="mock")
