"""Frame-rate token arithmetic, block-causal attention masks, and a causal
1-D convolution reference used to probe streaming causality.

All functions are pure; safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class FrameConfig:
    """Token framing of an audio stream.

    Attributes:
        frame_rate: speech tokens emitted per second of audio.
        tokenizer_block_s: duration of one streaming-tokenizer input block.
    """

    frame_rate: float = 12.5
    tokenizer_block_s: float = 0.5

    def __post_init__(self):
        if self.frame_rate <= 0:
            raise ConfigError(f"frame_rate must be positive, got {self.frame_rate}")
        if self.tokenizer_block_s <= 0:
            raise ConfigError(f"tokenizer_block_s must be positive, got {self.tokenizer_block_s}")


def token_count(duration_s: float, cfg: FrameConfig) -> int:
    """Number of whole tokens produced for ``duration_s`` seconds of audio.

    Uses floor so a partial frame never yields a token: in streaming use the
    count must never cover audio that has not fully arrived.
    """
    if duration_s < 0:
        raise DomainError(f"duration must be nonnegative, got {duration_s}")
    return int(np.floor(duration_s * cfg.frame_rate))


def block_causal_allowed(i: int, j: int, block: int) -> bool:
    """O(1) predicate: may position i attend to position j under block causality."""
    if block < 1:
        raise DomainError(f"block must be at least 1, got {block}")
    if i < 0 or j < 0:
        raise DomainError(f"positions must be nonnegative, got i={i} j={j}")
    return j // block <= i // block


def block_causal_mask(seq_len: int, block: int) -> np.ndarray:
    """Boolean (seq_len, seq_len) mask; entry (i, j) is True iff
    floor(j / block) <= floor(i / block).

    block=1 degenerates to the standard causal mask; block >= seq_len is
    fully bidirectional.
    """
    if seq_len < 0:
        raise DomainError(f"seq_len must be nonnegative, got {seq_len}")
    if block < 1:
        raise DomainError(f"block must be at least 1, got {block}")
    blocks = np.arange(seq_len) // block
    return blocks[None, :] <= blocks[:, None]


def causal_conv1d(signal, kernel) -> np.ndarray:
    """Left-padded 1-D convolution: output[t] = sum_j kernel[j] * signal[t - j].

    Positions before the signal start read as zero, so output[t] depends only
    on inputs at times <= t.
    """
    x = np.asarray(signal, dtype=float)
    k = np.asarray(kernel, dtype=float)
    if k.ndim != 1 or k.size == 0:
        raise DomainError("kernel must be a nonempty 1-D sequence")
    if x.ndim != 1:
        raise DomainError("signal must be a 1-D sequence")
    if x.size == 0:
        return np.zeros(0)
    return np.convolve(x, k)[: x.size]
