"""Provider-agnostic chat-completion access.

Two providers: an HTTP client speaking the de-facto standard chat wire
shape, and a deterministic scripted provider driven by fixture rules.
All tests and desk-scale evaluations run against the scripted provider.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import httpx


class LlmError(Exception):
    pass


class LlmUnavailable(LlmError):
    pass


class HttpError(LlmUnavailable):
    def __init__(self, status: int):
        super().__init__(f"chat endpoint returned status {status}")
        self.status = status


class Timeout(LlmUnavailable):
    pass


class NoFixtureMatch(LlmError):
    def __init__(self, prompt_head: str):
        super().__init__(f"no fixture rule matches prompt: {prompt_head[:120]!r}")


@dataclass(frozen=True)
class FixtureRule:
    match: tuple[str, ...]  # all substrings must appear in system+user
    response: str


def load_fixture(path: str) -> list[FixtureRule]:
    rules = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            rules.append(FixtureRule(match=tuple(obj["match"]), response=obj["response"]))
    return rules


def dump_fixture(rules: list[FixtureRule]) -> str:
    return "".join(
        json.dumps({"match": list(r.match), "response": r.response}) + "\n" for r in rules
    )


@dataclass
class LlmHandle:
    provider: str  # http_chat | scripted
    model_id: str = ""
    endpoint: str = ""
    temperature: float = 0.0
    max_tokens: int = 1024
    fixture_path: str = ""
    strict: bool = True
    default_response: str = ""
    timeout_s: float = 30.0
    rules: list[FixtureRule] = field(default_factory=list)

    def __post_init__(self):
        if self.provider == "scripted":
            if self.fixture_path and not self.rules:
                self.rules = load_fixture(self.fixture_path)
        elif self.provider == "http_chat":
            if not self.endpoint:
                raise ValueError("http_chat handle requires an endpoint")
        else:
            raise ValueError(f"unknown provider: {self.provider}")


def scripted_handle(rules: list[FixtureRule], strict: bool = True, default_response: str = "") -> LlmHandle:
    return LlmHandle(provider="scripted", model_id="scripted", rules=rules, strict=strict,
                     default_response=default_response)


def parse_llm_spec(spec: str) -> LlmHandle:
    """Parse the CLI --llm syntax: `http:<model_id>` or `scripted:<fixture_path>`."""
    kind, _, rest = spec.partition(":")
    if kind == "scripted":
        return LlmHandle(provider="scripted", model_id="scripted", fixture_path=rest)
    if kind == "http":
        endpoint = os.environ.get("FLIGHTRAG_LLM_ENDPOINT", "")
        if not endpoint:
            raise ValueError("http provider requires FLIGHTRAG_LLM_ENDPOINT")
        return LlmHandle(provider="http_chat", model_id=rest, endpoint=endpoint)
    raise ValueError(f"unknown llm spec: {spec}")


def complete(handle: LlmHandle, system: str, user: str) -> str:
    """Single-turn chat completion; scripted rules are first-match-wins."""
    if handle.provider == "scripted":
        haystack = system + "\n" + user
        for rule in handle.rules:
            if all(needle in haystack for needle in rule.match):
                return rule.response
        if handle.strict:
            raise NoFixtureMatch(user)
        return handle.default_response
    return _complete_http(handle, system, user)


def _complete_http(handle: LlmHandle, system: str, user: str) -> str:
    payload = {
        "model": handle.model_id,
        "temperature": handle.temperature,
        "max_tokens": handle.max_tokens,
        "messages": [
            {"role": "system", "content": system},
            {"role": "user", "content": user},
        ],
    }
    headers = {}
    api_key = os.environ.get("FLIGHTRAG_LLM_API_KEY")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        resp = httpx.post(handle.endpoint, json=payload, headers=headers, timeout=handle.timeout_s)
    except httpx.TimeoutException as exc:
        raise Timeout(str(exc)) from exc
    except httpx.HTTPError as exc:
        raise LlmUnavailable(str(exc)) from exc
    if resp.status_code != 200:
        raise HttpError(resp.status_code)
    body = resp.json()
    try:
        return body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise LlmUnavailable(f"malformed chat response: {exc}") from exc
