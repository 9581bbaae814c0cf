"""Alternating text/speech generation template.

A response stream alternates between a fixed-size block of text tokens and a
fixed-size block of speech tokens (defaults 13 and 26, a 1:2 ratio chosen so
text always runs ahead of the speech it guides). When one modality runs out,
the other finishes contiguously. Tags are carried explicitly on each token so
malformed streams are detected instead of silently misparsed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, DomainError, TemplateViolation


class Modality(str, Enum):
    TEXT = "text"
    SPEECH = "speech"


@dataclass(frozen=True)
class TemplateConfig:
    """Block sizes of the alternation: ``text_chunk`` text tokens, then
    ``speech_chunk`` speech tokens, repeating."""

    text_chunk: int = 13
    speech_chunk: int = 26

    def __post_init__(self):
        if self.text_chunk < 1 or self.speech_chunk < 1:
            raise ConfigError(
                f"chunk sizes must be at least 1, got text={self.text_chunk} "
                f"speech={self.speech_chunk}"
            )

    @property
    def period(self) -> int:
        return self.text_chunk + self.speech_chunk


@dataclass(frozen=True)
class TaggedToken:
    """A token id tagged with the modality it belongs to."""

    kind: Modality
    id: int


def position_kind(cfg: TemplateConfig, p: int) -> Modality:
    """Modality the template expects at stream position ``p`` (0-based)."""
    if p < 0:
        raise DomainError(f"position must be nonnegative, got {p}")
    return Modality.TEXT if p % cfg.period < cfg.text_chunk else Modality.SPEECH


def interleave(
    text: Sequence[int], speech: Sequence[int], cfg: TemplateConfig
) -> list[TaggedToken]:
    """Merge text and speech ids into template order.

    Follows the template position by position; once one side is exhausted the
    remaining tokens of the other side are emitted contiguously. Relative
    order within each modality is preserved.
    """
    out: list[TaggedToken] = []
    ti = si = 0
    p = 0
    while ti < len(text) and si < len(speech):
        if position_kind(cfg, p) is Modality.TEXT:
            out.append(TaggedToken(Modality.TEXT, text[ti]))
            ti += 1
        else:
            out.append(TaggedToken(Modality.SPEECH, speech[si]))
            si += 1
        p += 1
    out.extend(TaggedToken(Modality.TEXT, t) for t in text[ti:])
    out.extend(TaggedToken(Modality.SPEECH, s) for s in speech[si:])
    return out


def deinterleave(
    stream: Sequence[TaggedToken], cfg: TemplateConfig
) -> tuple[list[int], list[int]]:
    """Split a tagged stream back into (text ids, speech ids).

    Tags are authoritative; the template is used only to validate that the
    stream could have been produced by :func:`interleave`: tags must follow
    the template until the first divergence, after which every remaining
    token must belong to the single leftover modality.
    """
    tail_kind: Modality | None = None
    tail_start = -1
    for p, tok in enumerate(stream):
        if tail_kind is None:
            if tok.kind is not position_kind(cfg, p):
                tail_kind = tok.kind
                tail_start = p
        elif tok.kind is not tail_kind:
            expected = position_kind(cfg, tail_start)
            raise TemplateViolation(
                f"stream position {tail_start} is {tail_kind.value} where the "
                f"template expects {expected.value}, but the {expected.value} side "
                f"was not exhausted (one appears again at position {p})",
                position=tail_start,
            )
    text = [tok.id for tok in stream if tok.kind is Modality.TEXT]
    speech = [tok.id for tok in stream if tok.kind is Modality.SPEECH]
    return text, speech


def dump_token_stream(stream: Iterable[TaggedToken], path) -> None:
    """Write a stream as line-delimited JSON records {pos, kind, id}."""
    lines = [
        json.dumps({"pos": p, "kind": tok.kind.value, "id": tok.id})
        for p, tok in enumerate(stream)
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def load_token_stream(path) -> list[TaggedToken]:
    stream = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        stream.append(TaggedToken(Modality(rec["kind"]), int(rec["id"])))
    return stream
