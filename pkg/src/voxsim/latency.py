"""Analytic first-audio latency model.

Total latency to the first audible output decomposes into four stages:
tokenizing the final block of user speech, prefilling the user's tokens,
decoding the first text chunk plus one block of speech tokens, and vocoding
that block. Each stage's cost is a pluggable nonnegative, nondecreasing
function of a unit count; the fully streaming tokenizer is charged for exactly
one block regardless of how long the user spoke.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field

from .decoder import DecoderConfig
from .errors import ConfigError, DomainError
from .framing import FrameConfig, token_count
from .template import TemplateConfig

_KINDS = ("constant", "affine", "table")


@dataclass(frozen=True)
class StageCost:
    """Cost function mapping a unit count (tokens or blocks) to seconds.

    Kinds: ``constant`` ignores the count; ``affine`` is
    base_s + per_unit_s * units; ``table`` interpolates linearly between
    measured (units, seconds) points and is undefined outside their range.
    """

    kind: str
    seconds: float = 0.0
    base_s: float = 0.0
    per_unit_s: float = 0.0
    points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown cost kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "constant":
            if self.seconds < 0:
                raise ConfigError(f"constant cost must be nonnegative, got {self.seconds}")
        elif self.kind == "affine":
            if self.base_s < 0 or self.per_unit_s < 0:
                raise ConfigError(
                    f"affine cost must be nonnegative and nondecreasing; "
                    f"got base_s={self.base_s}, per_unit_s={self.per_unit_s}"
                )
        else:
            pts = tuple((float(x), float(y)) for x, y in self.points)
            object.__setattr__(self, "points", pts)
            if len(pts) < 2:
                raise ConfigError(f"table cost needs at least 2 points, got {len(pts)}")
            for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
                if x1 <= x0:
                    raise ConfigError(f"table units must be strictly increasing ({x0} then {x1})")
                if y1 < y0:
                    raise ConfigError(f"table seconds must be nondecreasing ({y0} then {y1})")
            if pts[0][1] < 0:
                raise ConfigError(f"table seconds must be nonnegative, got {pts[0][1]}")

    @classmethod
    def constant(cls, seconds: float) -> "StageCost":
        return cls(kind="constant", seconds=seconds)

    @classmethod
    def affine(cls, base_s: float, per_unit_s: float) -> "StageCost":
        return cls(kind="affine", base_s=base_s, per_unit_s=per_unit_s)

    @classmethod
    def table(cls, points) -> "StageCost":
        return cls(kind="table", points=tuple(points))

    def __call__(self, units: float) -> float:
        if units < 0:
            raise DomainError(f"unit count must be nonnegative, got {units}")
        if self.kind == "constant":
            return self.seconds
        if self.kind == "affine":
            return self.base_s + self.per_unit_s * units
        xs = [x for x, _ in self.points]
        if units < xs[0] or units > xs[-1]:
            raise DomainError(
                f"unit count {units} outside table range [{xs[0]}, {xs[-1]}]"
            )
        i = bisect.bisect_right(xs, units) - 1
        if i == len(xs) - 1:
            return self.points[-1][1]
        x0, y0 = self.points[i]
        x1, y1 = self.points[i + 1]
        if units == x0:
            return y0
        return y0 + (units - x0) / (x1 - x0) * (y1 - y0)

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "seconds": self.seconds}
        if self.kind == "affine":
            return {"kind": "affine", "base_s": self.base_s, "per_unit_s": self.per_unit_s}
        return {"kind": "table", "points": [[x, y] for x, y in self.points]}

    @classmethod
    def from_dict(cls, data: dict) -> "StageCost":
        kind = data.get("kind")
        if kind == "constant":
            return cls.constant(float(data["seconds"]))
        if kind == "affine":
            return cls.affine(float(data["base_s"]), float(data["per_unit_s"]))
        if kind == "table":
            return cls.table((float(x), float(y)) for x, y in data["points"])
        raise ConfigError(f"unknown cost kind {kind!r}; expected one of {_KINDS}")


_STAGES = ("tokenize", "prefill", "decode", "speech_decode")


@dataclass(frozen=True)
class StageCosts:
    """One cost function per pipeline stage."""

    tokenize: StageCost
    prefill: StageCost
    decode: StageCost
    speech_decode: StageCost

    @classmethod
    def uniform(cls, cost: StageCost) -> "StageCosts":
        return cls(tokenize=cost, prefill=cost, decode=cost, speech_decode=cost)

    def to_dict(self) -> dict:
        return {name: getattr(self, name).to_dict() for name in _STAGES}

    @classmethod
    def from_dict(cls, data: dict) -> "StageCosts":
        missing = [name for name in _STAGES if name not in data]
        if missing:
            raise ConfigError(f"costs missing stages: {', '.join(missing)}")
        return cls(**{name: StageCost.from_dict(data[name]) for name in _STAGES})


@dataclass(frozen=True)
class LatencyScenario:
    """A single end-to-end timing question: speech in, stage costs, framing."""

    user_speech_s: float
    costs: StageCosts
    frame_rate: float = 12.5
    tokenizer_block_s: float = 0.5
    template: TemplateConfig = field(default_factory=TemplateConfig)
    decoder: DecoderConfig | None = None

    def __post_init__(self):
        if self.user_speech_s < 0:
            raise ConfigError(f"user_speech_s must be nonnegative, got {self.user_speech_s}")
        if self.decoder is None:
            object.__setattr__(self, "decoder", DecoderConfig(frame_rate=self.frame_rate))
        self.frame  # validates frame_rate and tokenizer_block_s
        if self.decoder.frame_rate != self.frame_rate:
            raise ConfigError(
                f"decoder frame_rate {self.decoder.frame_rate} does not match "
                f"scenario frame_rate {self.frame_rate}"
            )

    @property
    def frame(self) -> FrameConfig:
        return FrameConfig(frame_rate=self.frame_rate, tokenizer_block_s=self.tokenizer_block_s)

    def to_dict(self) -> dict:
        return {
            "user_speech_s": self.user_speech_s,
            "frame_rate": self.frame_rate,
            "tokenizer_block_s": self.tokenizer_block_s,
            "template": {
                "text_chunk": self.template.text_chunk,
                "speech_chunk": self.template.speech_chunk,
            },
            "decoder": {"block_s": self.decoder.block_s},
            "costs": self.costs.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LatencyScenario":
        if "user_speech_s" not in data:
            raise ConfigError("scenario is missing user_speech_s")
        if "costs" not in data:
            raise ConfigError("scenario is missing costs")
        frame_rate = float(data.get("frame_rate", 12.5))
        tmpl = data.get("template", {})
        dec = data.get("decoder", {})
        return cls(
            user_speech_s=float(data["user_speech_s"]),
            costs=StageCosts.from_dict(data["costs"]),
            frame_rate=frame_rate,
            tokenizer_block_s=float(data.get("tokenizer_block_s", 0.5)),
            template=TemplateConfig(
                text_chunk=int(tmpl.get("text_chunk", 13)),
                speech_chunk=int(tmpl.get("speech_chunk", 26)),
            ),
            decoder=DecoderConfig(
                block_s=float(dec.get("block_s", 0.8)),
                frame_rate=float(dec.get("frame_rate", frame_rate)),
            ),
        )


@dataclass(frozen=True)
class LatencyBreakdown:
    """Per-stage seconds; total is the exact left-to-right sum."""

    t_tokenize: float
    t_prefill: float
    t_decode: float
    t_speech_decode: float
    total: float

    def to_dict(self) -> dict:
        return {
            "t_tokenize": self.t_tokenize,
            "t_prefill": self.t_prefill,
            "t_decode": self.t_decode,
            "t_speech_decode": self.t_speech_decode,
            "total": self.total,
        }


def prefill_token_count(scenario: LatencyScenario) -> int:
    """Speech tokens the whole user utterance contributes to the prefill."""
    return token_count(scenario.user_speech_s, scenario.frame)


def first_chunk_decode_tokens(template: TemplateConfig, decoder: DecoderConfig) -> int:
    """Tokens the model must emit before the first audio block can be vocoded.

    One text chunk plus one speech block (13 + 10 = 23 at defaults).
    """
    return template.text_chunk + decoder.tokens_per_block


def total_latency(scenario: LatencyScenario) -> LatencyBreakdown:
    """Evaluate the four-stage latency sum for a scenario.

    Stage unit counts: tokenize sees 1 (one final block), prefill sees the
    full user token count, decode sees the first-chunk token count, and speech
    decode sees one block of speech tokens. The total accumulates in that
    fixed order so the pipeline simulator can reproduce it bit for bit.
    """
    c = scenario.costs
    t_tok = c.tokenize(1.0)
    t_pre = c.prefill(float(prefill_token_count(scenario)))
    t_dec = c.decode(float(first_chunk_decode_tokens(scenario.template, scenario.decoder)))
    t_spd = c.speech_decode(float(scenario.decoder.tokens_per_block))
    total = ((t_tok + t_pre) + t_dec) + t_spd
    return LatencyBreakdown(
        t_tokenize=t_tok,
        t_prefill=t_pre,
        t_decode=t_dec,
        t_speech_decode=t_spd,
        total=total,
    )


def load_scenario(path: str) -> LatencyScenario:
    with open(path, "r", encoding="utf-8") as fh:
        return LatencyScenario.from_dict(json.load(fh))


def save_scenario(scenario: LatencyScenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_dict(), fh, indent=2)
        fh.write("\n")


def format_breakdown(breakdown: LatencyBreakdown) -> str:
    """Aligned two-column rendering for terminal output."""
    rows = [
        ("tokenize", breakdown.t_tokenize),
        ("prefill", breakdown.t_prefill),
        ("decode", breakdown.t_decode),
        ("speech_decode", breakdown.t_speech_decode),
        ("total", breakdown.total),
    ]
    lines = [f"{'stage':<15}{'seconds':>12}"]
    for name, value in rows:
        lines.append(f"{name:<15}{value:>12.6f}")
    return "\n".join(lines)
