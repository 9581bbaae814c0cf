"""Chunked streaming speech-decoding schedule.

Speech tokens are vocoded in fixed blocks of ``block_s`` seconds (10 tokens at
the 0.8 s / 12.5 Hz defaults). Chunk n decodes the audio span
[(n-1)*block_s, n*block_s) using everything already decoded, [0, (n-1)*block_s),
as its prompt, so audio can start after a minimum of one block of tokens. The
final chunk may be shorter than a block; it is decoded short rather than
padded, since padding would fabricate audio duration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError, ProtocolError


@dataclass(frozen=True)
class DecoderConfig:
    """Streaming decoder block size; ``block_s * frame_rate`` must be integral."""

    block_s: float = 0.8
    frame_rate: float = 12.5
    tokens_per_block: int = 0  # derived in __post_init__

    def __post_init__(self):
        if self.block_s <= 0:
            raise ConfigError(f"block_s must be positive, got {self.block_s}")
        if self.frame_rate <= 0:
            raise ConfigError(f"frame_rate must be positive, got {self.frame_rate}")
        exact = self.block_s * self.frame_rate
        tokens = round(exact)
        if abs(exact - tokens) > 1e-9:
            raise ConfigError(
                f"block_s * frame_rate must be integral, got {exact} "
                f"(block_s={self.block_s}, frame_rate={self.frame_rate})"
            )
        if tokens < 1:
            raise ConfigError(f"block holds {tokens} tokens; need at least 1")
        object.__setattr__(self, "tokens_per_block", int(tokens))


@dataclass(frozen=True)
class DecoderChunk:
    """One step of the streaming schedule.

    Token span [token_start, token_end) is vocoded into audio span
    [audio_start_s, audio_end_s); audio in [0, prompt_end_s) conditions the
    step. prompt_end_s always equals audio_start_s.
    """

    index: int
    token_start: int
    token_end: int
    audio_start_s: float
    audio_end_s: float
    prompt_end_s: float

    def to_dict(self) -> dict:
        return {
            "n": self.index,
            "token_start": self.token_start,
            "token_end": self.token_end,
            "audio_start_s": self.audio_start_s,
            "audio_end_s": self.audio_end_s,
            "prompt_end_s": self.prompt_end_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecoderChunk":
        return cls(
            index=int(data["n"]),
            token_start=int(data["token_start"]),
            token_end=int(data["token_end"]),
            audio_start_s=float(data["audio_start_s"]),
            audio_end_s=float(data["audio_end_s"]),
            prompt_end_s=float(data["prompt_end_s"]),
        )


def _make_chunk(n: int, token_start: int, token_end: int, cfg: DecoderConfig) -> DecoderChunk:
    start_s = (n - 1) * cfg.block_s
    count = token_end - token_start
    if count == cfg.tokens_per_block:
        end_s = n * cfg.block_s
    else:
        end_s = start_s + count / cfg.frame_rate
    return DecoderChunk(
        index=n,
        token_start=token_start,
        token_end=token_end,
        audio_start_s=start_s,
        audio_end_s=end_s,
        prompt_end_s=start_s,
    )


def plan_chunks(total_tokens: int, cfg: DecoderConfig) -> list[DecoderChunk]:
    """Tile ``total_tokens`` speech tokens into the chunk schedule.

    Produces ceil(total / tokens_per_block) chunks covering [0, total) with no
    gaps or overlaps; only the final chunk may be partial.
    """
    if total_tokens < 0:
        raise ConfigError(f"total_tokens must be nonnegative, got {total_tokens}")
    tpb = cfg.tokens_per_block
    chunks = []
    for n in range(1, -(-total_tokens // tpb) + 1):
        chunks.append(_make_chunk(n, (n - 1) * tpb, min(n * tpb, total_tokens), cfg))
    return chunks


def min_tokens_for_first_audio(cfg: DecoderConfig) -> int:
    """Tokens that must exist before the first chunk can be decoded."""
    return cfg.tokens_per_block


class StreamingDecoder:
    """Incremental chunk scheduler over a token stream.

    Buffers incoming speech tokens; each time a full block accumulates, the
    corresponding chunk becomes ready. ``flush`` ends the stream and releases
    any residual partial chunk. Feed/flush must be externally serialized
    (single-owner state).
    """

    def __init__(self, cfg: DecoderConfig):
        self.cfg = cfg
        self._received = 0
        self._emitted_chunks = 0
        self._flushed = False

    @property
    def buffered(self) -> int:
        """Tokens received but not yet covered by a ready chunk."""
        return self._received - self._emitted_chunks * self.cfg.tokens_per_block

    def feed(self, new_tokens: Sequence[int]) -> list[DecoderChunk]:
        """Accept tokens and return the chunks that became ready, in order."""
        if self._flushed:
            raise ProtocolError("feed called after flush; the stream is closed")
        self._received += len(new_tokens)
        tpb = self.cfg.tokens_per_block
        ready = []
        while self._received - self._emitted_chunks * tpb >= tpb:
            n = self._emitted_chunks + 1
            ready.append(_make_chunk(n, (n - 1) * tpb, n * tpb, self.cfg))
            self._emitted_chunks = n
        return ready

    def flush(self) -> DecoderChunk | None:
        """Close the stream; return the final partial chunk if tokens remain."""
        if self._flushed:
            raise ProtocolError("flush called twice; the stream is already closed")
        self._flushed = True
        tpb = self.cfg.tokens_per_block
        leftover = self._received - self._emitted_chunks * tpb
        if leftover == 0:
            return None
        n = self._emitted_chunks + 1
        self._emitted_chunks = n
        return _make_chunk(n, (n - 1) * tpb, self._received, self.cfg)


def plan_to_dicts(chunks: Sequence[DecoderChunk]) -> list[dict]:
    """JSON-ready form of a chunk plan."""
    return [c.to_dict() for c in chunks]


def plan_from_dicts(records: Sequence[dict]) -> list[DecoderChunk]:
    return [DecoderChunk.from_dict(r) for r in records]
