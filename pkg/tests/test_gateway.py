from __future__ import annotations

import json
import threading
import time

import httpx
import pytest

from magicbench.gateway import (
    AuthError,
    ChatGateway,
    ChatRequest,
    FixtureMiss,
    FixtureStore,
    GatewayError,
    Mode,
    RateLimited,
    RateLimiter,
)

ENV = {"MAGIC_API_BASE": "http://example.invalid/v1", "MAGIC_API_KEY": "k"}


def req(text="hello", model="model-a"):
    return ChatRequest(model, (("system", "be brief"), ("user", text)))


def ok(content="hi there"):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": content}}]})


def scripted_transport(responses):
    calls = []

    def handler(request):
        calls.append(request)
        return responses[min(len(calls) - 1, len(responses) - 1)]

    return httpx.MockTransport(handler), calls


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest("m", ())
    with pytest.raises(ValueError):
        ChatRequest("m", (("robot", "x"),))


def test_fingerprint_is_stable():
    # fixed serialisation and hash: this value must not drift between runs or platforms
    assert req().fingerprint == req().fingerprint
    assert req().fingerprint != req("other").fingerprint
    assert req().fingerprint == "833eeb0ac68773dd51ca3b1d4994b060918c097a9ec6b4d1e96af375317f8d75"


def test_fingerprint_ignores_dict_order():
    a = ChatRequest("m", (("user", "x"),), temperature=0.5, max_tokens=10)
    b = ChatRequest("m", (("user", "x"),), max_tokens=10, temperature=0.5)
    assert a.fingerprint == b.fingerprint


def test_replay_hit_and_miss(tmp_path, no_network):
    store = FixtureStore(tmp_path)
    store.put(req(), "stored text")
    gw = ChatGateway(Mode.REPLAY, store)
    assert gw.chat(req()) == "stored text"
    with pytest.raises(FixtureMiss) as err:
        gw.chat(req("unseen"))
    assert err.value.fingerprint == req("unseen").fingerprint
    assert gw.network_calls == 0 and gw._client is None


def test_record_then_replay(tmp_path):
    transport, calls = scripted_transport([ok("recorded")])
    store = FixtureStore(tmp_path)
    rec = ChatGateway(Mode.RECORD, store, env=ENV, transport=transport)
    assert rec.chat(req()) == "recorded"
    assert len(calls) == 1
    body = json.loads(calls[0].content)
    assert body["messages"][1] == {"role": "user", "content": "hello"}
    assert calls[0].headers["Authorization"] == "Bearer k"
    assert ChatGateway(Mode.REPLAY, FixtureStore(tmp_path)).chat(req()) == "recorded"
    index = json.loads((tmp_path / "index.json").read_text())
    entry = index[req().fingerprint]
    assert entry["model"] == "model-a" and entry["file"] == f"model-a/{req().fingerprint}.txt"
    assert "created_at" in entry


def test_store_leaves_no_temp_files(tmp_path):
    store = FixtureStore(tmp_path)
    for i in range(5):
        store.put(req(str(i)), f"r{i}")
    leftovers = [p for p in tmp_path.rglob("*") if p.name.startswith(".tmp-")]
    assert leftovers == []
    assert len(store.index()) == 5


def test_store_concurrent_puts(tmp_path):
    store = FixtureStore(tmp_path)
    threads = [threading.Thread(target=store.put, args=(req(str(i)), str(i))) for i in range(20)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(FixtureStore(tmp_path).index()) == 20


def test_modes_need_store():
    with pytest.raises(ValueError):
        ChatGateway(Mode.REPLAY)
    ChatGateway(Mode.LIVE, env=ENV)


def test_retries_transient_then_succeeds():
    sleeps = []
    transport, calls = scripted_transport([httpx.Response(429), httpx.Response(503), ok("finally")])
    gw = ChatGateway(Mode.LIVE, env=ENV, transport=transport, sleep=sleeps.append)
    assert gw.chat(req()) == "finally"
    assert len(calls) == 3
    assert sleeps == [1.0, 2.0]


def test_rate_limited_after_five_attempts():
    sleeps = []
    transport, calls = scripted_transport([httpx.Response(429)])
    gw = ChatGateway(Mode.LIVE, env=ENV, transport=transport, sleep=sleeps.append)
    with pytest.raises(RateLimited):
        gw.chat(req())
    assert len(calls) == 5
    assert sleeps == [1.0, 2.0, 4.0, 8.0]


def test_auth_error_is_not_retried():
    transport, calls = scripted_transport([httpx.Response(401)])
    gw = ChatGateway(Mode.LIVE, env=ENV, transport=transport, sleep=lambda s: None)
    with pytest.raises(AuthError):
        gw.chat(req())
    assert len(calls) == 1


def test_client_error_and_malformed_body():
    transport, _ = scripted_transport([httpx.Response(400, text="bad")])
    with pytest.raises(GatewayError):
        ChatGateway(Mode.LIVE, env=ENV, transport=transport).chat(req())
    transport, _ = scripted_transport([httpx.Response(200, json={"nope": 1})])
    with pytest.raises(GatewayError):
        ChatGateway(Mode.LIVE, env=ENV, transport=transport).chat(req())


def test_timeout_retried():
    attempts = []

    def handler(request):
        attempts.append(1)
        if len(attempts) < 2:
            raise httpx.ReadTimeout("slow", request=request)
        return ok("late")

    gw = ChatGateway(Mode.LIVE, env=ENV, transport=httpx.MockTransport(handler), sleep=lambda s: None)
    assert gw.chat(req()) == "late"


def test_missing_credentials():
    gw = ChatGateway(Mode.LIVE, env={})
    with pytest.raises(AuthError):
        gw.chat(req())
    with pytest.raises(AuthError):
        ChatGateway(Mode.LIVE, env={"MAGIC_API_BASE": "http://x"}).endpoint("m")


def test_per_model_base_override():
    env = {**ENV, "MAGIC_API_BASE_GPT_4": "http://other.invalid/v1/"}
    gw = ChatGateway(Mode.LIVE, env=env)
    assert gw.endpoint("gpt-4") == ("http://other.invalid/v1", "k")
    assert gw.endpoint("claude-2") == ("http://example.invalid/v1", "k")


# --- limiter


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.lock = threading.Lock()

    def __call__(self):
        with self.lock:
            return self.now

    def sleep(self, seconds):
        with self.lock:
            self.now += seconds


def test_limiter_rpm_with_fake_clock():
    clock = FakeClock()
    lim = RateLimiter(max_in_flight=10, requests_per_minute=3, clock=clock, sleep=clock.sleep)
    starts = []
    for _ in range(7):
        with lim:
            starts.append(clock())
    assert starts == [0, 0, 0, 60, 60, 60, 120]


def test_limiter_cap_under_stress():
    clock = FakeClock()
    lim = RateLimiter(max_in_flight=3, requests_per_minute=50, clock=clock, sleep=clock.sleep)
    violations = []
    lock = threading.Lock()
    active = [0]

    def work():
        for _ in range(10):
            with lim:
                with lock:
                    active[0] += 1
                    if active[0] > 3:
                        violations.append(active[0])
                time.sleep(0.0005)
                with lock:
                    active[0] -= 1

    threads = [threading.Thread(target=work) for _ in range(12)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert violations == []
    assert lim.peak_in_flight <= 3
    assert lim.in_flight == 0


def test_limiter_rejects_zero_cap():
    with pytest.raises(ValueError):
        RateLimiter(max_in_flight=0)
