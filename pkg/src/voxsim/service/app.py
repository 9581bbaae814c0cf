"""HTTP service exposing the simulator's operations.

Every endpoint is a pure function of its request body, so the service holds
no state and any instance can answer any request. Domain errors map to 400
with a machine-readable body; payload shape errors are FastAPI's usual 422.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..codebook import fit_gaussian_clusters
from ..errors import DomainError, VoxsimError
from ..latency import LatencyScenario, format_breakdown, total_latency
from ..mixture import CorpusSpec, format_plan, plan_mixture, validate_plan
from ..sft import TurnSample, build_streaming_turn, split_dual_objective
from ..simulate import ResponseScript, first_audio_time, run_scenario, total_audio_seconds
from ..template import TemplateConfig, position_kind
from . import schemas

app = FastAPI(title="voxsim", version=__version__)


@app.exception_handler(VoxsimError)
async def domain_error_handler(request: Request, exc: VoxsimError) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.get("/healthz", response_model=schemas.HealthResponse)
def healthz():
    return {"status": "ok", "version": __version__}


def _scenario_from_model(model: schemas.ScenarioModel) -> tuple[LatencyScenario, ResponseScript | None]:
    data = model.model_dump(exclude_none=True)
    script_data = data.pop("script", None)
    script = ResponseScript.from_dict(script_data) if script_data else None
    return LatencyScenario.from_dict(data), script


@app.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(req: schemas.SimulateRequest):
    scenario, script = _scenario_from_model(req.scenario)
    events = run_scenario(scenario, script=script, seed=req.seed)
    try:
        first_audio = first_audio_time(events)
    except VoxsimError:
        first_audio = None
    return {
        "events": [ev.to_dict() for ev in events],
        "first_audio_s": first_audio,
        "total_audio_s": total_audio_seconds(events),
    }


@app.post("/latency", response_model=schemas.LatencyResponse)
def latency(req: schemas.LatencyRequest):
    scenario, _ = _scenario_from_model(req.scenario)
    breakdown = total_latency(scenario)
    out = breakdown.to_dict()
    out["table"] = format_breakdown(breakdown)
    return out


@app.post("/mixture", response_model=schemas.MixtureResponse)
def mixture(req: schemas.MixtureRequest):
    corpora = [CorpusSpec.from_dict(c.model_dump(exclude_none=True)) for c in req.corpora]
    plan = plan_mixture(req.budget, corpora)
    report = validate_plan(plan, req.budget, req.tolerance)
    return {
        "budget": plan.budget,
        "total_tokens": plan.total_tokens,
        "allocations": [a.to_dict() for a in plan.allocations],
        "passed": report.passed,
        "deviation": report.deviation,
        "tolerance": report.tolerance,
        "shares": report.shares,
        "table": format_plan(plan, report),
    }


@app.post("/template", response_model=schemas.TemplateResponse)
def template(req: schemas.TemplateRequest):
    cfg = TemplateConfig(text_chunk=req.text_chunk, speech_chunk=req.speech_chunk)
    if req.dump < 0:
        raise DomainError(f"dump must be nonnegative, got {req.dump}")
    kinds = [position_kind(cfg, p).value for p in range(req.dump)]
    return {
        "text_chunk": cfg.text_chunk,
        "speech_chunk": cfg.speech_chunk,
        "period": cfg.period,
        "kinds": kinds,
    }


@app.post("/codebook-fit", response_model=schemas.FitResponse)
def codebook_fit(req: schemas.FitRequest):
    result = fit_gaussian_clusters(
        n_clusters=req.clusters,
        codes=req.codes,
        steps=req.steps,
        seed=req.seed,
    )
    return {
        "final_distances": [float(d) for d in result.final_distances],
        "max_distance": result.max_distance,
        "reset_codes": result.reset_codes,
        "reset_count": len(result.reset_events),
    }


@app.post("/mask-demo", response_model=schemas.MaskDemoResponse)
def mask_demo(req: schemas.MaskDemoRequest):
    turn = TurnSample.from_dict(req.turn.model_dump())
    example = build_streaming_turn(turn)
    text_focus, speech_focus = split_dual_objective(example)
    return {
        "example": example.to_dict(),
        "text_focus": text_focus.to_dict(),
        "speech_focus": speech_focus.to_dict(),
    }
