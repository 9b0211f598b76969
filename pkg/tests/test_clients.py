import json

import httpx
import pytest

from routerev.errors import FixtureMissing, ParseError, TransportError
from routerev.harness.clients import (ChatClient, ModelResponse, ReplayClient, TrialSet, collect_responses,
                                      read_responses, write_responses)
from routerev.harness.prompts import PromptBundle

BUNDLE = PromptBundle("r1", "guide text", "Start Point: ...\n\n1. Head west, continue for 10.0 meters.")


def completion(text, lps=None):
    choice = {"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}
    if lps is not None:
        choice["logprobs"] = {"content": [{"token": t, "logprob": lp, "top_logprobs": []} for t, lp in lps]}
    return {"id": "x", "object": "chat.completion", "choices": [choice]}


def test_request_body_and_logprob_capture(tmp_path, monkeypatch):
    seen = []

    def handler(req):
        seen.append(req)
        return httpx.Response(200, json=completion("Head east.", [("Head", -0.1), (" east", -0.2)]))

    monkeypatch.setenv("TEST_KEY", "sekrit")
    audit = tmp_path / "audit.jsonl"
    c = ChatClient("https://llm.test/v1/chat/completions", "m1", "TEST_KEY", audit_path=audit,
                   transport=httpx.MockTransport(handler))
    r = c.complete(BUNDLE, 3)
    assert r == ModelResponse("m1", "r1", 3, "Head east.", (("Head", -0.1), (" east", -0.2)))
    body = json.loads(seen[0].content)
    assert body["temperature"] == 0.0 and body["logprobs"] is True
    assert body["messages"][0] == {"role": "system", "content": "guide text"}
    assert body["messages"][1]["content"] == BUNDLE.instruction
    assert seen[0].headers["authorization"] == "Bearer sekrit"
    entries = [json.loads(s) for s in audit.read_text().splitlines()]
    assert entries[0]["status"] == 200 and entries[0]["request"]["model"] == "m1"


def test_retries_then_succeeds():
    calls = []

    def handler(req):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(429, json={"error": "slow down"})
        return httpx.Response(200, json=completion("ok"))

    sleeps = []
    c = ChatClient("https://llm.test/v1", "m", None, transport=httpx.MockTransport(handler), backoff=0.5,
                   sleep=sleeps.append)
    assert c.complete(BUNDLE, 0).text == "ok"
    assert sleeps == [0.5, 1.0]
    assert c.complete(BUNDLE, 0).logprobs is None


def test_gives_up_and_fails_fast():
    c = ChatClient("https://llm.test/v1", "m", None, max_retries=2, sleep=lambda s: None,
                   transport=httpx.MockTransport(lambda r: httpx.Response(503)))
    with pytest.raises(TransportError, match="3 attempts"):
        c.complete(BUNDLE, 0)
    c = ChatClient("https://llm.test/v1", "m", None, transport=httpx.MockTransport(lambda r: httpx.Response(401)))
    with pytest.raises(TransportError, match="401"):
        c.complete(BUNDLE, 0)


def test_network_error_is_retried():
    n = []

    def handler(req):
        n.append(1)
        if len(n) == 1:
            raise httpx.ConnectError("boom", request=req)
        return httpx.Response(200, json=completion("fine"))

    c = ChatClient("https://llm.test/v1", "m", None, transport=httpx.MockTransport(handler), sleep=lambda s: None)
    assert c.complete(BUNDLE, 0).text == "fine"


def test_malformed_payload():
    c = ChatClient("https://llm.test/v1", "m", None, transport=httpx.MockTransport(
        lambda r: httpx.Response(200, json={"nope": 1})))
    with pytest.raises(TransportError):
        c.complete(BUNDLE, 0)


def test_collect_with_live_client():
    c = ChatClient("https://llm.test/v1", "m", None,
                   transport=httpx.MockTransport(lambda r: httpx.Response(200, json=completion("Go."))))
    ts = collect_responses(BUNDLE, c, 4)
    assert [r.trial for r in ts.responses] == [0, 1, 2, 3] and ts.model == "m"


def test_replay_round_trip(tmp_path):
    rs = [ModelResponse("m", "r1", t, f"text {t}", (("a", -1.0),) if t else None) for t in range(3)]
    p = tmp_path / "resp.jsonl"
    write_responses(rs, p)
    assert read_responses(p) == rs
    ts = collect_responses(BUNDLE, ReplayClient(p), 3)
    assert len(ts) == 3
    with pytest.raises(FixtureMissing):
        collect_responses(BUNDLE, ReplayClient(p), 6)
    with pytest.raises(FixtureMissing):
        collect_responses(PromptBundle("zz", "", ""), ReplayClient(p), 1)
    with pytest.raises(FixtureMissing):
        ReplayClient(tmp_path / "missing.jsonl")


def test_replay_model_filter():
    rs = [ModelResponse(m, "r1", 0, m) for m in ("a", "b")]
    with pytest.raises(FixtureMissing):
        ReplayClient(rs).responses(BUNDLE, 1)
    assert ReplayClient(rs, "b").responses(BUNDLE, 1)[0].text == "b"


def test_read_responses_names_line(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text('{"model":"m","route_id":"r","trial":0,"text":"x"}\n{"model":"m"}\n')
    with pytest.raises(ParseError) as ei:
        read_responses(p)
    assert ei.value.line == 2


def test_trialset_validation():
    with pytest.raises(ValueError):
        TrialSet("r1", "m", [ModelResponse("m", "r1", 0, ""), ModelResponse("m", "r1", 0, "")])
    with pytest.raises(ValueError):
        TrialSet("r1", "m", [ModelResponse("m", "r2", 0, "")])
