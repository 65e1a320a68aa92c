from __future__ import annotations

import json

import pytest
import requests

from asploop.generators import (
    FixtureExhausted,
    GeneratorError,
    GeneratorTransportError,
    HttpGenerator,
    RecordingGenerator,
    ScriptedGenerator,
    merge_recordings,
    prompt_sha256,
    write_fixture,
)


def write_rows(path, rows):
    with open(path, "w") as handle:
        for row in rows:
            handle.write(json.dumps(row) + "\n")


@pytest.fixture
def fixture_path(tmp_path):
    path = tmp_path / "scripted.jsonl"
    write_rows(
        path,
        [
            {
                "prompt_sha256": prompt_sha256("alpha"),
                "completions": ["a1.", "a2.", "a3.", "a4.", "a5."],
                "token_counts": [1, 2, 3, 4, 5],
            },
            {
                "prompt_sha256": prompt_sha256("beta"),
                "completions": ["b1."],
                "token_counts": [9],
            },
        ],
    )
    return path


def test_scripted_serves_in_order(fixture_path):
    generator = ScriptedGenerator(fixture_path)
    batch = generator.complete("alpha", 2, 0.7)
    assert [(c.text, c.token_count) for c in batch] == [("a1.", 1), ("a2.", 2)]


def test_scripted_cursor_advances(fixture_path):
    generator = ScriptedGenerator(fixture_path)
    generator.complete("alpha", 2, 0.7)
    batch = generator.complete("alpha", 3, 0.7)
    assert [c.text for c in batch] == ["a3.", "a4.", "a5."]


def test_scripted_exhaustion(fixture_path):
    generator = ScriptedGenerator(fixture_path)
    generator.complete("alpha", 5, 0.7)
    with pytest.raises(FixtureExhausted):
        generator.complete("alpha", 1, 0.7)


def test_scripted_unknown_prompt(fixture_path):
    generator = ScriptedGenerator(fixture_path)
    with pytest.raises(FixtureExhausted):
        generator.complete("never recorded", 1, 0.7)


def test_scripted_prompts_are_independent(fixture_path):
    generator = ScriptedGenerator(fixture_path)
    generator.complete("alpha", 1, 0.7)
    batch = generator.complete("beta", 1, 0.7)
    assert [(c.text, c.token_count) for c in batch] == [("b1.", 9)]


def test_scripted_missing_file(tmp_path):
    with pytest.raises(OSError):
        ScriptedGenerator(tmp_path / "absent.jsonl")


def test_recording_generator_replays_and_records():
    def fn(prompt):
        return [(f"{prompt}-1.", 3), (f"{prompt}-2.", 4)]

    generator = RecordingGenerator(fn)
    batch = generator.complete("p", 2, 0.5)
    assert [c.text for c in batch] == ["p-1.", "p-2."]
    recorded = generator.recorded()
    assert recorded == {prompt_sha256("p"): [("p-1.", 3), ("p-2.", 4)]}


def test_recording_generator_cursor_survives_repeat_calls():
    def fn(prompt):
        return [(f"{prompt}-{i}.", 1) for i in range(5)]

    generator = RecordingGenerator(fn)
    first = generator.complete("p", 2, 0.5)
    second = generator.complete("p", 2, 0.5)
    assert [c.text for c in first + second] == ["p-0.", "p-1.", "p-2.", "p-3."]
    # only the served slice is recorded, not the whole candidate pool
    assert len(generator.recorded()[prompt_sha256("p")]) == 4


def test_recording_generator_exhaustion():
    generator = RecordingGenerator(lambda prompt: [("only.", 1)])
    generator.complete("p", 1, 0.5)
    with pytest.raises(FixtureExhausted):
        generator.complete("p", 1, 0.5)


def test_merge_recordings_keeps_longest_queue():
    short = {prompt_sha256("p"): [("x.", 1)]}
    long = {prompt_sha256("p"): [("x.", 1), ("y.", 2)]}
    merged = merge_recordings([short, long])
    assert merged[prompt_sha256("p")] == [("x.", 1), ("y.", 2)]


def test_merge_recordings_requires_prefix_consistency():
    a = {prompt_sha256("p"): [("x.", 1)]}
    b = {prompt_sha256("p"): [("DIFFERENT.", 1), ("y.", 2)]}
    with pytest.raises(ValueError):
        merge_recordings([a, b])


def test_merge_recordings_unions_prompts():
    a = {prompt_sha256("p"): [("x.", 1)]}
    b = {prompt_sha256("q"): [("y.", 2)]}
    merged = merge_recordings([a, b])
    assert set(merged) == {prompt_sha256("p"), prompt_sha256("q")}


def test_write_fixture_rows_are_sorted_and_loadable(tmp_path):
    recording = {
        prompt_sha256("zzz"): [("z.", 1)],
        prompt_sha256("aaa"): [("a.", 2), ("b.", 3)],
    }
    path = tmp_path / "out.jsonl"
    count = write_fixture(recording, path)
    assert count == 2
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    digests = [row["prompt_sha256"] for row in rows]
    assert digests == sorted(digests)
    generator = ScriptedGenerator(path)
    assert generator.complete("aaa", 2, 0.0)[1].text == "b."
    assert generator.complete("zzz", 1, 0.0)[0].text == "z."


class FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload or {}

    def json(self):
        return self._payload


class FakeSession:
    def __init__(self, response=None, exc=None):
        self.response = response
        self.exc = exc
        self.requests = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.requests.append(
            {"url": url, "json": json, "headers": headers, "timeout": timeout}
        )
        if self.exc:
            raise self.exc
        return self.response


def chat_payload(texts, completion_tokens):
    return {
        "choices": [{"message": {"content": t}} for t in texts],
        "usage": {"completion_tokens": completion_tokens},
    }


def test_http_generator_round_trip():
    session = FakeSession(FakeResponse(payload=chat_payload(["p(a).", "q(b)."], 7)))
    generator = HttpGenerator("http://unit.test/v1", "toy-model", session=session)
    batch = generator.complete("prompt text", 2, 0.4)
    assert [c.text for c in batch] == ["p(a).", "q(b)."]
    # 7 tokens over 2 choices: remainder rides on the first
    assert [c.token_count for c in batch] == [4, 3]
    sent = session.requests[0]
    assert sent["url"] == "http://unit.test/v1"
    assert sent["json"]["model"] == "toy-model"
    assert sent["json"]["n"] == 2
    assert sent["json"]["temperature"] == 0.4
    assert sent["json"]["messages"] == [{"role": "user", "content": "prompt text"}]


def test_http_generator_sends_bearer_token(monkeypatch):
    monkeypatch.setenv("ASPLOOP_GEN_TOKEN", "sekret")
    session = FakeSession(FakeResponse(payload=chat_payload(["p(a)."], 1)))
    HttpGenerator("http://unit.test", "m", session=session).complete("x", 1, 0.0)
    assert session.requests[0]["headers"]["Authorization"] == "Bearer sekret"


def test_http_generator_no_token_no_header(monkeypatch):
    monkeypatch.delenv("ASPLOOP_GEN_TOKEN", raising=False)
    session = FakeSession(FakeResponse(payload=chat_payload(["p(a)."], 1)))
    HttpGenerator("http://unit.test", "m", session=session).complete("x", 1, 0.0)
    assert "Authorization" not in session.requests[0]["headers"]


def test_http_generator_5xx_is_transport_error():
    session = FakeSession(FakeResponse(status_code=503))
    generator = HttpGenerator("http://unit.test", "m", session=session)
    with pytest.raises(GeneratorTransportError):
        generator.complete("x", 1, 0.0)


def test_http_generator_4xx_is_permanent_error():
    session = FakeSession(FakeResponse(status_code=401))
    generator = HttpGenerator("http://unit.test", "m", session=session)
    with pytest.raises(GeneratorError):
        generator.complete("x", 1, 0.0)


def test_http_generator_network_failure_is_transport_error():
    session = FakeSession(exc=requests.ConnectionError("refused"))
    generator = HttpGenerator("http://unit.test", "m", session=session)
    with pytest.raises(GeneratorTransportError):
        generator.complete("x", 1, 0.0)


def test_http_generator_malformed_payload():
    session = FakeSession(FakeResponse(payload={"wrong": []}))
    generator = HttpGenerator("http://unit.test", "m", session=session)
    with pytest.raises(GeneratorError):
        generator.complete("x", 1, 0.0)


def test_http_generator_missing_usage_defaults_to_zero():
    payload = {"choices": [{"message": {"content": "p(a)."}}]}
    session = FakeSession(FakeResponse(payload=payload))
    batch = HttpGenerator("http://unit.test", "m", session=session).complete("x", 1, 0.0)
    assert batch[0].token_count == 0
