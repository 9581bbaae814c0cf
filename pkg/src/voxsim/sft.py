"""Supervised fine-tuning sequence construction and dual-objective masking.

A conversation turn carries the user's speech tokens (optionally with their
transcript tokens) and the assistant's text and speech outputs. Training
sequences lay the inputs down unmasked, interleave the outputs in streaming
template order, and put loss only on output positions. Each built example then
splits into two variants sharing the same tokens: one keeps loss only on text
outputs, the other only on speech outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError, DomainError
from .template import Modality, TaggedToken, TemplateConfig, interleave

INPUT = "input"
OUTPUT = "output"


@dataclass(frozen=True)
class TurnSample:
    """One exchange: user speech (plus optional transcript) and the reply."""

    q_speech: tuple[int, ...]
    a_text: tuple[int, ...]
    a_speech: tuple[int, ...]
    q_text: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "q_speech", tuple(self.q_speech))
        object.__setattr__(self, "a_text", tuple(self.a_text))
        object.__setattr__(self, "a_speech", tuple(self.a_speech))
        object.__setattr__(self, "q_text", tuple(self.q_text))

    def to_dict(self) -> dict:
        out = {
            "q_speech": list(self.q_speech),
            "a_text": list(self.a_text),
            "a_speech": list(self.a_speech),
        }
        if self.q_text:
            out["q_text"] = list(self.q_text)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TurnSample":
        for key in ("q_speech", "a_text", "a_speech"):
            if key not in data:
                raise ConfigError(f"turn record is missing {key!r}")
        return cls(
            q_speech=tuple(int(i) for i in data["q_speech"]),
            a_text=tuple(int(i) for i in data["a_text"]),
            a_speech=tuple(int(i) for i in data["a_speech"]),
            q_text=tuple(int(i) for i in data.get("q_text", ())),
        )


@dataclass(frozen=True)
class LabeledToken:
    """A tagged token plus which segment of the example it belongs to."""

    kind: Modality
    id: int
    segment: str

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "id": self.id, "segment": self.segment}

    @classmethod
    def from_dict(cls, data: dict) -> "LabeledToken":
        return cls(kind=Modality(data["kind"]), id=int(data["id"]), segment=str(data["segment"]))


@dataclass(frozen=True)
class TrainingExample:
    """Token sequence with a per-token loss mask; loss never lands on inputs."""

    tokens: tuple[LabeledToken, ...]
    loss_mask: tuple[bool, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "loss_mask", tuple(bool(b) for b in self.loss_mask))
        if len(self.tokens) != len(self.loss_mask):
            raise ConfigError(
                f"mask length {len(self.loss_mask)} does not match "
                f"token length {len(self.tokens)}"
            )
        for i, (tok, masked) in enumerate(zip(self.tokens, self.loss_mask)):
            if tok.segment == INPUT and masked:
                raise ConfigError(f"loss mask is true on input token at position {i}")

    def to_dict(self) -> dict:
        return {
            "tokens": [t.to_dict() for t in self.tokens],
            "mask": list(self.loss_mask),
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainingExample":
        return cls(
            tokens=tuple(LabeledToken.from_dict(t) for t in data["tokens"]),
            loss_mask=tuple(bool(b) for b in data["mask"]),
            meta=dict(data.get("meta", {})),
        )


def _input_tokens(turn: TurnSample) -> list[LabeledToken]:
    toks = [LabeledToken(Modality.SPEECH, i, INPUT) for i in turn.q_speech]
    toks.extend(LabeledToken(Modality.TEXT, i, INPUT) for i in turn.q_text)
    return toks


def _output_tokens(turn: TurnSample, template: TemplateConfig, segment: str) -> list[LabeledToken]:
    stream = interleave(list(turn.a_text), list(turn.a_speech), template)
    return [LabeledToken(tok.kind, tok.id, segment) for tok in stream]


def build_streaming_turn(turn: TurnSample, template: TemplateConfig | None = None) -> TrainingExample:
    """Lay out one turn: inputs unmasked, template-interleaved outputs masked.

    A turn with no output tokens at all is untrainable and rejected; a turn
    missing only one output side still builds (its interleave degenerates to
    the other side alone).
    """
    template = template or TemplateConfig()
    if not turn.a_text and not turn.a_speech:
        raise DomainError("turn has no output tokens; nothing to train on")
    tokens = _input_tokens(turn)
    n_input = len(tokens)
    tokens.extend(_output_tokens(turn, template, OUTPUT))
    mask = [False] * n_input + [True] * (len(tokens) - n_input)
    return TrainingExample(
        tokens=tuple(tokens),
        loss_mask=tuple(mask),
        meta={
            "text_output_tokens": len(turn.a_text),
            "speech_output_tokens": len(turn.a_speech),
        },
    )


def build_conversation(turns: Sequence[TurnSample], template: TemplateConfig | None = None) -> TrainingExample:
    """Pack a multi-turn dialogue; only the final turn's outputs carry loss.

    Earlier turns appear in full (inputs and their interleaved outputs) but
    relabeled as input segments, so the example conditions on history without
    training on it.
    """
    template = template or TemplateConfig()
    if not turns:
        raise ConfigError("conversation needs at least one turn")
    tokens: list[LabeledToken] = []
    for turn in turns[:-1]:
        tokens.extend(_input_tokens(turn))
        tokens.extend(_output_tokens(turn, template, INPUT))
    last = turns[-1]
    if not last.a_text and not last.a_speech:
        raise DomainError("final turn has no output tokens; nothing to train on")
    tokens.extend(_input_tokens(last))
    n_input = len(tokens)
    tokens.extend(_output_tokens(last, template, OUTPUT))
    mask = [False] * n_input + [True] * (len(tokens) - n_input)
    return TrainingExample(
        tokens=tuple(tokens),
        loss_mask=tuple(mask),
        meta={
            "turns": len(turns),
            "text_output_tokens": len(last.a_text),
            "speech_output_tokens": len(last.a_speech),
        },
    )


def split_dual_objective(ex: TrainingExample) -> tuple[TrainingExample, TrainingExample]:
    """Derive the text-supervised and speech-supervised variants of an example.

    Both keep the token sequence untouched; the text variant keeps loss only
    on output text tokens, the speech variant only on output speech tokens.
    The two masks are disjoint and together cover exactly the original output
    mask. A variant whose side is absent gets an all-false mask, flagged as
    degenerate in its metadata rather than treated as an error.
    """
    if not any(t.segment == OUTPUT for t in ex.tokens):
        raise DomainError("example has no output tokens to split")

    def focus(kind: Modality, label: str) -> TrainingExample:
        mask = tuple(
            m and t.kind is kind for t, m in zip(ex.tokens, ex.loss_mask)
        )
        meta = dict(ex.meta)
        meta["focus"] = label
        meta["degenerate_empty_mask"] = not any(mask)
        return TrainingExample(tokens=ex.tokens, loss_mask=mask, meta=meta)

    return focus(Modality.TEXT, "text"), focus(Modality.SPEECH, "speech")


def dump_examples(examples: Sequence[TrainingExample], path: str) -> None:
    """Write examples as line-delimited JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_dict()))
            fh.write("\n")


def load_examples(path: str) -> list[TrainingExample]:
    examples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                examples.append(TrainingExample.from_dict(json.loads(line)))
    return examples


def load_turn(path: str) -> TurnSample:
    with open(path, "r", encoding="utf-8") as fh:
        return TurnSample.from_dict(json.load(fh))
