import asyncio

import httpx
import pytest

from voxsim import __version__
from voxsim.service import app

AFFINE_COSTS = {
    stage: {"kind": "affine", "base_s": 0.0, "per_unit_s": 0.01}
    for stage in ("tokenize", "prefill", "decode", "speech_decode")
}

SCENARIO = {"user_speech_s": 4.0, "costs": AFFINE_COSTS}


def call(method, path, **kwargs):
    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://test") as client:
            return await getattr(client, method)(path, **kwargs)

    return asyncio.run(go())


def test_healthz():
    r = call("get", "/healthz")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "version": __version__}


def test_latency_endpoint():
    r = call("post", "/latency", json={"scenario": SCENARIO})
    assert r.status_code == 200
    body = r.json()
    assert body["total"] == 0.84
    assert body["t_prefill"] == 0.50
    assert "0.840000" in body["table"]


def test_simulate_endpoint_matches_latency():
    r = call("post", "/simulate", json={"scenario": SCENARIO, "seed": 5})
    assert r.status_code == 200
    body = r.json()
    assert body["first_audio_s"] == 0.84
    assert body["total_audio_s"] == 52 / 12.5
    stages = {e["stage"] for e in body["events"]}
    assert stages == {"tokenize", "prefill", "decode", "chunk_ready", "audio_out"}


def test_simulate_determinism_across_requests():
    a = call("post", "/simulate", json={"scenario": SCENARIO, "seed": 9}).json()
    b = call("post", "/simulate", json={"scenario": SCENARIO, "seed": 9}).json()
    assert a == b


def test_simulate_with_embedded_script():
    scenario = dict(SCENARIO)
    scenario["script"] = {"a_text": list(range(13)), "a_speech": list(range(20))}
    r = call("post", "/simulate", json={"scenario": scenario, "seed": 1})
    body = r.json()
    assert body["total_audio_s"] == 20 / 12.5
    # scripted ids flow through to decode events
    decode_ids = [e["payload"]["id"] for e in body["events"] if e["stage"] == "decode"]
    assert len(decode_ids) == 33


def test_mixture_endpoint():
    corpora = [
        {"name": "interleaved", "speech_tokens": 455e9, "text_tokens": 279e9,
         "policy": "fixed_epochs", "epochs": 0.90},
        {"name": "speech_only", "speech_tokens": 31e9, "text_tokens": 0,
         "policy": "fixed_epochs", "epochs": 2.10},
        {"name": "paired", "speech_tokens": 11e9, "text_tokens": 3.5e9,
         "policy": "fixed_epochs", "epochs": 2.07},
        {"name": "text_only", "speech_tokens": 0, "text_tokens": 10e12,
         "policy": "fixed_ratio", "ratio": 0.30},
    ]
    r = call("post", "/mixture", json={"budget": 1e12, "corpora": corpora, "tolerance": 0.06})
    assert r.status_code == 200
    body = r.json()
    assert body["passed"] is True
    assert body["deviation"] == pytest.approx(0.0557, abs=5e-4)
    assert body["shares"]["text_only"] == 0.30
    assert "text_only" in body["table"]
    tight = call("post", "/mixture", json={"budget": 1e12, "corpora": corpora, "tolerance": 0.01})
    assert tight.json()["passed"] is False


def test_mixture_oversubscription_is_a_domain_error():
    corpora = [
        {"name": "big", "speech_tokens": 200, "text_tokens": 0,
         "policy": "fixed_epochs", "epochs": 1.0},
        {"name": "rest", "speech_tokens": 1, "text_tokens": 0, "policy": "remainder"},
    ]
    r = call("post", "/mixture", json={"budget": 100, "corpora": corpora})
    assert r.status_code == 400
    assert r.json()["error"] == "BudgetError"


def test_template_endpoint():
    r = call("post", "/template", json={"text_chunk": 13, "speech_chunk": 26, "dump": 40})
    body = r.json()
    assert body["period"] == 39
    assert body["kinds"][:13] == ["text"] * 13
    assert body["kinds"][13:39] == ["speech"] * 26
    assert body["kinds"][39] == "text"
    assert call("post", "/template", json={"text_chunk": 0, "speech_chunk": 1, "dump": 1}).status_code == 400
    assert call("post", "/template", json={"dump": -1}).status_code == 400


def test_codebook_fit_endpoint():
    r = call("post", "/codebook-fit", json={"clusters": 3, "codes": 3, "steps": 60, "seed": 0})
    assert r.status_code == 200
    body = r.json()
    assert len(body["final_distances"]) == 3
    assert body["max_distance"] < 0.02
    assert body["reset_codes"] == []


def test_mask_demo_endpoint():
    turn = {"q_speech": [1, 2], "a_text": [3, 4], "a_speech": [5, 6, 7]}
    r = call("post", "/mask-demo", json={"turn": turn})
    assert r.status_code == 200
    body = r.json()
    assert body["example"]["mask"] == [False, False, True, True, True, True, True]
    text_bits = body["text_focus"]["mask"]
    speech_bits = body["speech_focus"]["mask"]
    assert sum(text_bits) == 2 and sum(speech_bits) == 3
    assert all(not (a and b) for a, b in zip(text_bits, speech_bits))


def test_domain_errors_map_to_400():
    bad = {"user_speech_s": -1.0, "costs": AFFINE_COSTS}
    r = call("post", "/latency", json={"scenario": bad})
    assert r.status_code == 400
    body = r.json()
    assert body["error"] == "ConfigError"
    assert "user_speech_s" in body["detail"]


def test_shape_errors_map_to_422():
    r = call("post", "/latency", json={"scenario": {"user_speech_s": "soon"}})
    assert r.status_code == 422
    r = call("post", "/mixture", json={"budget": 1e9, "corpora": [{"name": "x"}]})
    assert r.status_code == 422
