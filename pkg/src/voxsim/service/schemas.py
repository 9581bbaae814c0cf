"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class CostModel(BaseModel):
    kind: Literal["constant", "affine", "table"]
    seconds: Optional[float] = None
    base_s: Optional[float] = None
    per_unit_s: Optional[float] = None
    points: Optional[list[tuple[float, float]]] = None


class StageCostsModel(BaseModel):
    tokenize: CostModel
    prefill: CostModel
    decode: CostModel
    speech_decode: CostModel


class TemplateModel(BaseModel):
    text_chunk: int = 13
    speech_chunk: int = 26


class DecoderModel(BaseModel):
    block_s: float = 0.8
    frame_rate: Optional[float] = None


class ScriptModel(BaseModel):
    a_text: list[int] = Field(default_factory=list)
    a_speech: list[int] = Field(default_factory=list)


class ScenarioModel(BaseModel):
    user_speech_s: float
    costs: StageCostsModel
    frame_rate: float = 12.5
    tokenizer_block_s: float = 0.5
    template: Optional[TemplateModel] = None
    decoder: Optional[DecoderModel] = None
    script: Optional[ScriptModel] = None


class TraceEventModel(BaseModel):
    t: float
    stage: str
    payload: dict[str, Any]


class SimulateRequest(BaseModel):
    scenario: ScenarioModel
    seed: int = 0


class SimulateResponse(BaseModel):
    events: list[TraceEventModel]
    first_audio_s: Optional[float]
    total_audio_s: float


class LatencyRequest(BaseModel):
    scenario: ScenarioModel


class LatencyResponse(BaseModel):
    t_tokenize: float
    t_prefill: float
    t_decode: float
    t_speech_decode: float
    total: float
    table: str


class CorpusModel(BaseModel):
    name: str
    speech_tokens: float
    text_tokens: float
    policy: Literal["fixed_ratio", "fixed_epochs", "remainder"]
    ratio: Optional[float] = None
    epochs: Optional[float] = None


class MixtureRequest(BaseModel):
    budget: float
    corpora: list[CorpusModel]
    tolerance: float = 0.06


class AllocationModel(BaseModel):
    name: str
    policy: str
    size_tokens: float
    allocation_tokens: float
    epochs: float


class MixtureResponse(BaseModel):
    budget: float
    total_tokens: float
    allocations: list[AllocationModel]
    passed: bool
    deviation: float
    tolerance: float
    shares: dict[str, float]
    table: str


class TemplateRequest(BaseModel):
    text_chunk: int = 13
    speech_chunk: int = 26
    dump: int = 0


class TemplateResponse(BaseModel):
    text_chunk: int
    speech_chunk: int
    period: int
    kinds: list[str]


class FitRequest(BaseModel):
    clusters: int
    codes: int
    steps: int
    seed: int = 0


class FitResponse(BaseModel):
    final_distances: list[float]
    max_distance: float
    reset_codes: list[int]
    reset_count: int


class TurnModel(BaseModel):
    q_speech: list[int]
    a_text: list[int]
    a_speech: list[int]
    q_text: list[int] = Field(default_factory=list)


class MaskDemoRequest(BaseModel):
    turn: TurnModel


class ExampleModel(BaseModel):
    tokens: list[dict[str, Any]]
    mask: list[bool]
    meta: dict[str, Any]


class MaskDemoResponse(BaseModel):
    example: ExampleModel
    text_focus: ExampleModel
    speech_focus: ExampleModel


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorResponse(BaseModel):
    error: str
    detail: str
