import json
import socket
import threading
import time

import pytest

from voxsim.cli import main
from voxsim.simulate import parse_trace

AFFINE_COSTS = {
    stage: {"kind": "affine", "base_s": 0.0, "per_unit_s": 0.01}
    for stage in ("tokenize", "prefill", "decode", "speech_decode")
}


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"user_speech_s": 4.0, "costs": AFFINE_COSTS}))
    return str(path)


def test_latency_prints_breakdown_table(scenario_file, capsys):
    assert main(["latency", "--scenario", scenario_file]) == 0
    out = capsys.readouterr().out
    assert "total" in out and "0.840000" in out


def test_simulate_writes_json_trace(scenario_file, tmp_path, capsys):
    out_path = tmp_path / "trace.jsonl"
    rc = main(["simulate", "--scenario", scenario_file, "--seed", "3", "--out", str(out_path)])
    assert rc == 0
    events = parse_trace(str(out_path))
    assert events and events[0].stage == "tokenize"
    assert any(e.stage == "audio_out" and e.t == 0.84 for e in events)
    assert "first audio at 0.840000 s" in capsys.readouterr().out


def test_simulate_writes_csv_trace(scenario_file, tmp_path):
    out_path = tmp_path / "trace.csv"
    rc = main([
        "simulate", "--scenario", scenario_file, "--seed", "3",
        "--out", str(out_path), "--format", "csv",
    ])
    assert rc == 0
    assert out_path.read_text().startswith("t,stage,payload")
    assert parse_trace(str(out_path)) == parse_trace(str(out_path), format="csv")


def test_simulate_same_seed_same_bytes(scenario_file, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["simulate", "--scenario", scenario_file, "--seed", "5", "--out", str(a)])
    main(["simulate", "--scenario", scenario_file, "--seed", "5", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_mixture_from_csv(tmp_path, capsys):
    corpora = tmp_path / "corpora.csv"
    corpora.write_text(
        "name,speech_tokens,text_tokens,policy,ratio,epochs\n"
        "interleaved,455e9,279e9,fixed_epochs,,0.90\n"
        "speech_only,31e9,0,fixed_epochs,,2.10\n"
        "paired,11e9,3.5e9,fixed_epochs,,2.07\n"
        "text_only,0,10e12,fixed_ratio,0.30,\n"
    )
    rc = main(["mixture", "--corpora", str(corpora), "--budget", "1e12"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "within tolerance" in out
    assert "text_only" in out


def test_template_dump(capsys):
    rc = main(["template", "--text", "2", "--speech", "3", "--dump", "12"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "period 5: 2 text + 3 speech" in out
    assert "ttsssttssstt" in out


def test_codebook_fit_prints_distances(capsys):
    rc = main(["codebook-fit", "--clusters", "3", "--codes", "3", "--steps", "60", "--seed", "0"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count("code ") == 3
    assert "max distance:" in out


def test_mask_demo_prints_mask_rows(tmp_path, capsys):
    turn = tmp_path / "turn.json"
    turn.write_text(json.dumps({"q_speech": [1, 2], "a_text": [3, 4], "a_speech": [5, 6, 7]}))
    rc = main(["mask-demo", "--turn", str(turn)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "segment : iiooooo" in out
    assert "base    : 0011111" in out
    assert "text    : 0011000" in out
    assert "speech  : 0000111" in out


def test_missing_scenario_file_fails_with_error_json(capsys):
    with pytest.raises(SystemExit) as err:
        main(["latency", "--scenario", "no_such_file.json"])
    assert err.value.code == 1
    stderr = capsys.readouterr().err
    body = json.loads(stderr)
    assert body["error"] == "IOError"
    assert "no_such_file.json" in body["detail"]


def test_domain_error_propagates_as_error_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"user_speech_s": -2.0, "costs": AFFINE_COSTS}))
    with pytest.raises(SystemExit) as err:
        main(["latency", "--scenario", str(path)])
    assert err.value.code == 1
    body = json.loads(capsys.readouterr().err)
    assert body["error"] == "ConfigError"


def test_unknown_subcommand_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


def test_server_flag_hits_remote_instance(scenario_file, capsys):
    # same request served over a real socket gives the same answer
    uvicorn = pytest.importorskip("uvicorn")
    from voxsim.service import app

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        deadline = time.time() + 10
        while not server.started:
            if time.time() > deadline:
                pytest.fail("server did not start in time")
            time.sleep(0.05)
        rc = main([
            "latency", "--scenario", scenario_file,
            "--server", f"http://127.0.0.1:{port}",
        ])
        assert rc == 0
        assert "0.840000" in capsys.readouterr().out
    finally:
        server.should_exit = True
        thread.join(timeout=5)


def test_server_flag_connection_failure(scenario_file, capsys):
    with pytest.raises(SystemExit) as err:
        main(["latency", "--scenario", scenario_file, "--server", "http://127.0.0.1:9"])
    assert err.value.code == 1
    body = json.loads(capsys.readouterr().err)
    assert body["error"] == "ConnectionError"
