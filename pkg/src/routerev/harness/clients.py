"""Response sources: JSONL replay and a live chat-completions endpoint."""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol

import httpx

from ..errors import FixtureMissing, ParseError, TransportError
from .prompts import PromptBundle

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelResponse:
    model: str
    route_id: str
    trial: int
    text: str
    logprobs: tuple[tuple[str, float], ...] | None = None

    def to_json(self) -> dict:
        d = {"model": self.model, "route_id": self.route_id, "trial": self.trial, "text": self.text}
        if self.logprobs is not None:
            d["logprobs"] = [[t, lp] for t, lp in self.logprobs]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ModelResponse":
        lps = d.get("logprobs")
        return cls(
            model=str(d["model"]),
            route_id=str(d["route_id"]),
            trial=int(d["trial"]),
            text=str(d.get("text") or ""),
            logprobs=None if lps is None else tuple((str(t), float(lp)) for t, lp in lps),
        )


@dataclass
class TrialSet:
    route_id: str
    model: str
    responses: list[ModelResponse] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for r in self.responses:
            if r.route_id != self.route_id or r.model != self.model:
                raise ValueError("trial set mixes routes or models")
            if r.trial in seen:
                raise ValueError(f"duplicate trial index {r.trial} for {self.model}/{self.route_id}")
            seen.add(r.trial)
        self.responses.sort(key=lambda r: r.trial)

    def __len__(self):
        return len(self.responses)


def read_responses(path: str | Path) -> list[ModelResponse]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(ModelResponse.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"invalid response record: {exc}", line=lineno) from exc
    return out


def write_responses(responses: Iterable[ModelResponse], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in responses:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")


class ResponseSource(Protocol):
    def responses(self, bundle: PromptBundle, n_trials: int) -> list[ModelResponse]: ...


class ReplayClient:
    """Serves canned responses, keyed by route id (and optionally model)."""

    def __init__(self, responses: Iterable[ModelResponse] | str | Path, model: str | None = None):
        if isinstance(responses, (str, Path)):
            path = Path(responses)
            if not path.exists():
                raise FixtureMissing(f"response file {path} not found")
            responses = read_responses(path)
        self.model = model
        self._by_route: dict[str, list[ModelResponse]] = {}
        for r in responses:
            if model is None or r.model == model:
                self._by_route.setdefault(r.route_id, []).append(r)

    def responses(self, bundle: PromptBundle, n_trials: int) -> list[ModelResponse]:
        got = sorted(self._by_route.get(bundle.route_id, []), key=lambda r: (r.model, r.trial))
        if len({r.model for r in got}) > 1:
            raise FixtureMissing(f"route {bundle.route_id} has responses from several models; pick one")
        got = [r for r in got if r.trial < n_trials]
        if len(got) < n_trials:
            raise FixtureMissing(f"route {bundle.route_id}: {len(got)} of {n_trials} trials present")
        return got


class ChatClient:
    """OpenAI-compatible chat-completions client with logprob capture.

    Every request and response body is appended to ``audit_path`` as JSONL.
    Retries 429/5xx and transport failures with exponential backoff.
    """

    RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}

    def __init__(self, endpoint: str, model: str, api_key_env: str | None = "OPENAI_API_KEY", *,
                 temperature: float = 0.0, logprobs: bool = True, max_retries: int = 3,
                 timeout: float = 60.0, backoff: float = 1.0, audit_path: str | Path | None = None,
                 transport: httpx.BaseTransport | None = None, sleep: Callable[[float], None] = time.sleep):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.logprobs = logprobs
        self.max_retries = max_retries
        self.backoff = backoff
        self.audit_path = Path(audit_path) if audit_path else None
        self._sleep = sleep
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(api_key_env) if api_key_env else None
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._http = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def close(self) -> None:
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _audit(self, entry: dict) -> None:
        if self.audit_path is None:
            return
        with open(self.audit_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def request_body(self, bundle: PromptBundle) -> dict:
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": bundle.guide},
                {"role": "user", "content": bundle.instruction},
            ],
            "temperature": self.temperature,
        }
        if self.logprobs:
            body["logprobs"] = True
        return body

    def complete(self, bundle: PromptBundle, trial: int) -> ModelResponse:
        body = self.request_body(bundle)
        last = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._http.post(self.endpoint, json=body)
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                self._audit({"route_id": bundle.route_id, "trial": trial, "attempt": attempt,
                             "request": body, "error": last})
                continue
            try:
                payload = resp.json()
            except ValueError:
                payload = {"raw": resp.text}
            self._audit({"route_id": bundle.route_id, "trial": trial, "attempt": attempt,
                         "request": body, "status": resp.status_code, "response": payload})
            if resp.status_code in self.RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code} from {self.endpoint}")
            return self._parse(payload, bundle.route_id, trial)
        raise TransportError(f"giving up after {self.max_retries + 1} attempts: {last}")

    def _parse(self, payload: dict, route_id: str, trial: int) -> ModelResponse:
        try:
            choice = payload["choices"][0]
            text = choice["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion payload: {exc}") from exc
        lps = None
        raw_lp = choice.get("logprobs")
        content = raw_lp.get("content") if isinstance(raw_lp, dict) else None
        if content:
            lps = tuple((str(t["token"]), float(t["logprob"])) for t in content)
        return ModelResponse(self.model, route_id, trial, text, lps)

    def responses(self, bundle: PromptBundle, n_trials: int) -> list[ModelResponse]:
        return [self.complete(bundle, i) for i in range(n_trials)]


def collect_responses(bundle: PromptBundle, client: ResponseSource, n_trials: int = 6) -> TrialSet:
    got = client.responses(bundle, n_trials)
    model = got[0].model if got else getattr(client, "model", None) or "unknown"
    return TrialSet(bundle.route_id, model, list(got))
