"""Deterministic end-to-end pipeline simulator.

Mocks stand in for the real components: a tokenizer that hashes seeded PCM
frames into ids, a language model that replays scripted text and speech
content in template order, and a vocoder that renders each speech token as a
fixed-duration tone. The event clock places t = 0 at the end of the user's
utterance, so tokenizer blocks that finished while the user was still speaking
carry negative timestamps and the first audible output lands exactly at the
analytic four-stage latency total under the same costs.

Stage timing mirrors the analytic model operation for operation, in the same
floating-point order, so agreement is bit-exact rather than approximate:
decode cost is cumulative (token k completes at prefill_end + cost(k)), the
tokenizer never queues (each block costs one block-unit from the moment its
audio exists), and vocoding of chunk n starts once its tokens are ready and
the previous chunk's audio is done.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass

import numpy as np

from .decoder import plan_chunks
from .errors import ConfigError, DomainError, VoxsimError
from .framing import token_count
from .latency import LatencyScenario
from .template import Modality, TaggedToken, TemplateConfig, interleave

_STAGE_RANK = {"tokenize": 0, "prefill": 1, "decode": 2, "chunk_ready": 3, "audio_out": 4}


@dataclass(frozen=True)
class TraceEvent:
    """One timestamped pipeline occurrence."""

    t: float
    stage: str
    payload: dict

    def __post_init__(self):
        if self.stage not in _STAGE_RANK:
            raise ConfigError(
                f"unknown stage {self.stage!r}; expected one of {tuple(_STAGE_RANK)}"
            )

    def to_dict(self) -> dict:
        return {"t": self.t, "stage": self.stage, "payload": self.payload}

    @classmethod
    def from_dict(cls, data: dict) -> "TraceEvent":
        return cls(t=float(data["t"]), stage=str(data["stage"]), payload=dict(data["payload"]))


@dataclass(frozen=True)
class ResponseScript:
    """The reply content the mock language model will emit."""

    a_text: tuple[int, ...]
    a_speech: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "a_text", tuple(int(i) for i in self.a_text))
        object.__setattr__(self, "a_speech", tuple(int(i) for i in self.a_speech))

    @classmethod
    def random(
        cls,
        template: TemplateConfig | None = None,
        seed: int = 0,
        periods: int = 2,
        text_vocab: int = 32000,
        speech_vocab: int = 16384,
    ) -> "ResponseScript":
        """Seeded script spanning whole template periods, so the reply always
        contains full speech blocks and agreement with the analytic model holds."""
        template = template or TemplateConfig()
        if periods < 1:
            raise DomainError(f"periods must be >= 1, got {periods}")
        rng = random.Random(seed)
        return cls(
            a_text=tuple(rng.randrange(text_vocab) for _ in range(periods * template.text_chunk)),
            a_speech=tuple(
                rng.randrange(speech_vocab) for _ in range(periods * template.speech_chunk)
            ),
        )

    def to_dict(self) -> dict:
        return {"a_text": list(self.a_text), "a_speech": list(self.a_speech)}

    @classmethod
    def from_dict(cls, data: dict) -> "ResponseScript":
        return cls(
            a_text=tuple(data.get("a_text", ())),
            a_speech=tuple(data.get("a_speech", ())),
        )


class MockTokenizer:
    """Maps seeded synthetic PCM to token ids, one id per frame.

    Each frame's samples are hashed, so ids are deterministic functions of
    (seed, frame index) and any change to the audio changes the ids.
    """

    def __init__(
        self,
        frame_rate: float = 12.5,
        sample_rate: int = 16000,
        vocab_size: int = 16384,
        seed: int = 0,
    ):
        if vocab_size < 2:
            raise ConfigError(f"vocab_size must be >= 2, got {vocab_size}")
        exact = sample_rate / frame_rate
        spf = round(exact)
        if abs(exact - spf) > 1e-9 or spf < 1:
            raise ConfigError(
                f"sample_rate / frame_rate must be a positive integer, got {exact}"
            )
        self.frame_rate = frame_rate
        self.sample_rate = sample_rate
        self.vocab_size = vocab_size
        self.seed = seed
        self.samples_per_frame = int(spf)

    def utterance(self, duration_s: float) -> np.ndarray:
        """Seeded PCM covering the duration, padded to whole frames."""
        if duration_s < 0:
            raise DomainError(f"duration_s must be nonnegative, got {duration_s}")
        frames = int(np.floor(duration_s * self.frame_rate))
        n = max(int(np.floor(duration_s * self.sample_rate)), frames * self.samples_per_frame)
        rng = np.random.default_rng(self.seed)
        return rng.uniform(-1.0, 1.0, n).astype(np.float32)

    def frame_ids(self, pcm: np.ndarray, frame_start: int, frame_end: int) -> list[int]:
        """Token ids for frames [frame_start, frame_end)."""
        spf = self.samples_per_frame
        ids = []
        for k in range(frame_start, frame_end):
            digest = hashlib.blake2b(
                np.ascontiguousarray(pcm[k * spf : (k + 1) * spf]).tobytes(),
                digest_size=8,
            ).digest()
            ids.append(int.from_bytes(digest, "big") % self.vocab_size)
        return ids


class MockLM:
    """Replays scripted reply content in streaming template order."""

    def __init__(self, script: ResponseScript, template: TemplateConfig | None = None):
        self.script = script
        self.template = template or TemplateConfig()

    def tokens(self) -> list[TaggedToken]:
        return interleave(list(self.script.a_text), list(self.script.a_speech), self.template)


class MockVocoder:
    """Renders each speech token id as 1/frame_rate seconds of a pure tone."""

    def __init__(self, frame_rate: float = 12.5, sample_rate: int = 16000):
        exact = sample_rate / frame_rate
        spt = round(exact)
        if abs(exact - spt) > 1e-9 or spt < 1:
            raise ConfigError(
                f"sample_rate / frame_rate must be a positive integer, got {exact}"
            )
        self.frame_rate = frame_rate
        self.sample_rate = sample_rate
        self.samples_per_token = int(spt)

    def synthesize(self, token_ids) -> np.ndarray:
        spt = self.samples_per_token
        out = np.empty(len(token_ids) * spt, dtype=np.float32)
        t = np.arange(spt, dtype=np.float64) / self.sample_rate
        for i, token_id in enumerate(token_ids):
            freq = 110.0 + float(int(token_id) % 4000) * 0.25
            out[i * spt : (i + 1) * spt] = np.sin(2.0 * np.pi * freq * t).astype(np.float32)
        return out


def run_scenario(
    scenario: LatencyScenario,
    script: ResponseScript | None = None,
    seed: int = 0,
) -> list[TraceEvent]:
    """Simulate one utterance-and-reply exchange; returns the sorted trace.

    The first audio_out timestamp equals the analytic latency total exactly
    whenever the reply holds at least one full speech block and the decoder
    block fits inside one template speech chunk (the standard configuration).
    Shorter or oddly shaped replies still simulate; they simply reveal the
    true, later first-audio time.
    """
    template = scenario.template
    if script is None:
        script = ResponseScript.random(template, seed)
    costs = scenario.costs

    events: list[tuple[float, int, int, str, dict]] = []

    def add(t: float, stage: str, payload: dict) -> None:
        events.append((t, _STAGE_RANK[stage], len(events), stage, payload))

    # Stage 1: tokenize the user utterance block by block. Block i's audio
    # exists at (block_end - U) on the reply clock and costs one block-unit.
    user_s = scenario.user_speech_s
    block_s = scenario.tokenizer_block_s
    frame = scenario.frame
    n_user = token_count(user_s, frame)
    tokenizer = MockTokenizer(frame_rate=scenario.frame_rate, seed=seed)
    pcm = tokenizer.utterance(user_s)
    t_tokenize = costs.tokenize(1.0)
    n_blocks = max(1, math.ceil(user_s / block_s))
    done = 0
    for i in range(1, n_blocks + 1):
        end = min(i * block_s, user_s)
        cum = token_count(end, frame)
        ids = tokenizer.frame_ids(pcm, done, cum)
        add(
            (end - user_s) + t_tokenize,
            "tokenize",
            {"block": i, "audio_end_s": end, "tokens": cum - done, "ids": ids},
        )
        done = cum

    # Stage 2: prefill starts once the final block's tokens exist.
    prefill_end = t_tokenize + costs.prefill(float(n_user))
    add(prefill_end, "prefill", {"tokens": n_user})

    # Stage 3: generation. Decode cost is cumulative over emitted tokens.
    stream = MockLM(script, template).tokens()
    tpb = scenario.decoder.tokens_per_block
    speech_ids = [tok.id for tok in stream if tok.kind is Modality.SPEECH]
    chunk_ready_at: dict[int, float] = {}
    last_decode_t = prefill_end
    n_speech = 0
    for k, tok in enumerate(stream, start=1):
        t_k = prefill_end + costs.decode(float(k))
        add(t_k, "decode", {"position": k - 1, "kind": tok.kind.value, "id": tok.id})
        last_decode_t = t_k
        if tok.kind is Modality.SPEECH:
            n_speech += 1
            if n_speech % tpb == 0:
                chunk_ready_at[n_speech // tpb] = t_k

    # Stages 4 and 5: chunks become ready as their tokens finish decoding
    # (a trailing partial chunk waits for the end of generation), then vocode
    # serially since each chunk conditions on the previous chunk's audio.
    vocoder = MockVocoder(frame_rate=scenario.frame_rate)
    audio_done: float | None = None
    for chunk in plan_chunks(n_speech, scenario.decoder):
        ready_t = chunk_ready_at.get(chunk.index, last_decode_t)
        add(ready_t, "chunk_ready", chunk.to_dict())
        count = chunk.token_end - chunk.token_start
        start_t = ready_t if audio_done is None else max(ready_t, audio_done)
        out_t = start_t + costs.speech_decode(float(count))
        samples = vocoder.synthesize(speech_ids[chunk.token_start : chunk.token_end])
        add(
            out_t,
            "audio_out",
            {
                "chunk": chunk.index,
                "samples": int(samples.size),
                "duration_s": samples.size / vocoder.sample_rate,
                "audio_start_s": chunk.audio_start_s,
                "audio_end_s": chunk.audio_end_s,
            },
        )
        audio_done = out_t

    events.sort(key=lambda e: (e[0], e[1], e[2]))
    return [TraceEvent(t=t, stage=stage, payload=payload) for t, _, _, stage, payload in events]


def first_audio_time(events: list[TraceEvent]) -> float:
    """Timestamp of the first audio_out event."""
    for ev in events:
        if ev.stage == "audio_out":
            return ev.t
    raise DomainError("trace contains no audio_out event")


def total_audio_seconds(events: list[TraceEvent]) -> float:
    """Sum of synthesized audio durations across the trace."""
    return sum(ev.payload["duration_s"] for ev in events if ev.stage == "audio_out")


def emit_trace(events: list[TraceEvent], format: str, path: str) -> None:
    """Write a trace as line-delimited JSON or as CSV with a t,stage,payload header."""
    if format not in ("json", "csv"):
        raise ConfigError(f"unknown trace format {format!r}; use json or csv")
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise VoxsimError(f"cannot open trace path {path!r}: {exc}") from exc
    with fh:
        if format == "json":
            for ev in events:
                fh.write(json.dumps(ev.to_dict()))
                fh.write("\n")
        else:
            import csv as _csv

            writer = _csv.writer(fh)
            writer.writerow(["t", "stage", "payload"])
            for ev in events:
                writer.writerow([repr(ev.t), ev.stage, json.dumps(ev.payload)])


def parse_trace(path: str, format: str | None = None) -> list[TraceEvent]:
    """Read a trace written by emit_trace; format inferred from the extension
    when not given."""
    if format is None:
        format = "csv" if path.lower().endswith(".csv") else "json"
    if format not in ("json", "csv"):
        raise ConfigError(f"unknown trace format {format!r}; use json or csv")
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise VoxsimError(f"cannot open trace path {path!r}: {exc}") from exc
    events = []
    with fh:
        if format == "json":
            for line in fh:
                line = line.strip()
                if line:
                    events.append(TraceEvent.from_dict(json.loads(line)))
        else:
            import csv as _csv

            reader = _csv.reader(fh)
            header = next(reader, None)
            if header != ["t", "stage", "payload"]:
                raise ConfigError(f"{path}: malformed trace header {header!r}")
            for row in reader:
                if row:
                    events.append(
                        TraceEvent(t=float(row[0]), stage=row[1], payload=json.loads(row[2]))
                    )
    return events


def load_sim_scenario(path: str) -> tuple[LatencyScenario, ResponseScript | None]:
    """Read a scenario file, returning any embedded reply script alongside it."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise VoxsimError(f"cannot open scenario path {path!r}: {exc}") from exc
    with fh:
        data = json.load(fh)
    script = None
    if "script" in data and data["script"] is not None:
        script = ResponseScript.from_dict(data["script"])
    return LatencyScenario.from_dict(data), script
