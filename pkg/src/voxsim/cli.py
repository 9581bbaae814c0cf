"""Command-line client for the simulator service.

Each subcommand is a thin wrapper around one service endpoint. By default the
request is served in-process (no network, no running server); --server sends
the same request to a remote instance instead, so outputs are identical either
way. Failures print a machine-readable {"error", "detail"} object on stderr
and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx


def _fail(error: str, detail: str) -> "SystemExit":
    print(json.dumps({"error": error, "detail": detail}), file=sys.stderr)
    raise SystemExit(1)


def _post_in_process(path: str, payload: dict) -> httpx.Response:
    import asyncio

    from .service import app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://voxsim") as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _call(server: str | None, path: str, payload: dict) -> dict:
    try:
        if server:
            with httpx.Client(base_url=server, timeout=60.0) as client:
                response = client.post(path, json=payload)
        else:
            response = _post_in_process(path, payload)
    except httpx.HTTPError as exc:
        raise _fail("ConnectionError", f"{path}: {exc}")
    if response.status_code != 200:
        try:
            body = response.json()
        except ValueError:
            body = None
        if isinstance(body, dict) and "error" in body:
            raise _fail(str(body["error"]), str(body.get("detail", "")))
        raise _fail(f"HTTP{response.status_code}", response.text[:1000])
    return response.json()


def _load_json_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise _fail("IOError", f"cannot read {path!r}: {exc}")
    except ValueError as exc:
        raise _fail("ParseError", f"{path!r} is not valid JSON: {exc}")


def cmd_simulate(args: argparse.Namespace) -> int:
    from .simulate import TraceEvent, emit_trace

    scenario = _load_json_file(args.scenario)
    result = _call(args.server, "/simulate", {"scenario": scenario, "seed": args.seed})
    events = [TraceEvent.from_dict(e) for e in result["events"]]
    try:
        emit_trace(events, args.format, args.out)
    except Exception as exc:  # noqa: BLE001 - surfaced as the CLI error contract
        raise _fail(type(exc).__name__, str(exc))
    first = result["first_audio_s"]
    summary = f"first audio at {first:.6f} s" if first is not None else "no audio produced"
    print(f"wrote {len(events)} events to {args.out} ({args.format}); {summary}")
    return 0


def cmd_latency(args: argparse.Namespace) -> int:
    scenario = _load_json_file(args.scenario)
    result = _call(args.server, "/latency", {"scenario": scenario})
    print(result["table"])
    return 0


def cmd_mixture(args: argparse.Namespace) -> int:
    from .errors import VoxsimError
    from .mixture import load_corpora

    try:
        corpora = load_corpora(args.corpora)
    except VoxsimError as exc:
        raise _fail(type(exc).__name__, str(exc))
    except OSError as exc:
        raise _fail("IOError", f"cannot read {args.corpora!r}: {exc}")
    payload = {
        "budget": args.budget,
        "corpora": [c.to_dict() for c in corpora],
        "tolerance": args.tolerance,
    }
    result = _call(args.server, "/mixture", payload)
    print(result["table"])
    return 0


def cmd_template(args: argparse.Namespace) -> int:
    payload = {"text_chunk": args.text, "speech_chunk": args.speech, "dump": args.dump}
    result = _call(args.server, "/template", payload)
    print(
        f"period {result['period']}: {result['text_chunk']} text + "
        f"{result['speech_chunk']} speech"
    )
    if result["kinds"]:
        print("".join("t" if k == "text" else "s" for k in result["kinds"]))
    return 0


def cmd_codebook_fit(args: argparse.Namespace) -> int:
    payload = {
        "clusters": args.clusters,
        "codes": args.codes,
        "steps": args.steps,
        "seed": args.seed,
    }
    result = _call(args.server, "/codebook-fit", payload)
    for i, dist in enumerate(result["final_distances"]):
        print(f"code {i}: {dist:.6f}")
    print(f"max distance: {result['max_distance']:.6f}")
    reset_codes = result["reset_codes"]
    print(f"codes reset: {reset_codes if reset_codes else 'none'} ({result['reset_count']} reset events)")
    return 0


def cmd_mask_demo(args: argparse.Namespace) -> int:
    turn = _load_json_file(args.turn)
    result = _call(args.server, "/mask-demo", {"turn": turn})
    example = result["example"]
    kinds = "".join("t" if t["kind"] == "text" else "s" for t in example["tokens"])
    segments = "".join("i" if t["segment"] == "input" else "o" for t in example["tokens"])

    def bits(mask: list) -> str:
        return "".join("1" if b else "0" for b in mask)

    print(f"kind    : {kinds}")
    print(f"segment : {segments}")
    print(f"base    : {bits(example['mask'])}")
    print(f"text    : {bits(result['text_focus']['mask'])}")
    print(f"speech  : {bits(result['speech_focus']['mask'])}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="voxsim", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--server",
        default=None,
        help="base URL of a running service; default handles the request in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a scenario and write its event trace")
    p.add_argument("--scenario", required=True, help="scenario JSON file (may embed a reply script)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="trace output path")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("latency", parents=[common], help="print the analytic latency breakdown")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_latency)

    p = sub.add_parser("mixture", parents=[common], help="plan a token budget across corpora")
    p.add_argument("--corpora", required=True, help="corpus specs (.json or .csv)")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--tolerance", type=float, default=0.06)
    p.set_defaults(func=cmd_mixture)

    p = sub.add_parser("template", parents=[common], help="show the text/speech interleave pattern")
    p.add_argument("--text", type=int, default=13)
    p.add_argument("--speech", type=int, default=26)
    p.add_argument("--dump", type=int, default=0, help="positions to render")
    p.set_defaults(func=cmd_template)

    p = sub.add_parser(
        "codebook-fit", parents=[common], help="run the codebook convergence experiment"
    )
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--codes", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_codebook_fit)

    p = sub.add_parser("mask-demo", parents=[common], help="print the dual-objective loss masks")
    p.add_argument("--turn", required=True, help="turn JSON file")
    p.set_defaults(func=cmd_mask_demo)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
