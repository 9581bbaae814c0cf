import random

import pytest

from voxsim.decoder import (
    DecoderChunk,
    DecoderConfig,
    StreamingDecoder,
    min_tokens_for_first_audio,
    plan_chunks,
    plan_from_dicts,
    plan_to_dicts,
)
from voxsim.errors import ConfigError, ProtocolError


def test_default_config_block_holds_ten_tokens():
    cfg = DecoderConfig()
    assert cfg.block_s == 0.8
    assert cfg.frame_rate == 12.5
    assert cfg.tokens_per_block == 10
    assert min_tokens_for_first_audio(cfg) == 10


def test_config_requires_integral_tokens_per_block():
    assert DecoderConfig(block_s=0.4, frame_rate=12.5).tokens_per_block == 5
    assert DecoderConfig(block_s=1.0, frame_rate=50.0).tokens_per_block == 50
    with pytest.raises(ConfigError):
        DecoderConfig(block_s=0.75, frame_rate=12.5)  # 9.375 tokens
    with pytest.raises(ConfigError):
        DecoderConfig(block_s=0.0)
    with pytest.raises(ConfigError):
        DecoderConfig(frame_rate=-1.0)
    with pytest.raises(ConfigError):
        DecoderConfig(block_s=0.01, frame_rate=12.5)  # under one token


def test_plan_single_exact_block():
    cfg = DecoderConfig()
    chunks = plan_chunks(10, cfg)
    assert len(chunks) == 1
    c = chunks[0]
    assert (c.token_start, c.token_end) == (0, 10)
    assert (c.audio_start_s, c.audio_end_s) == (0.0, 0.8)
    assert c.prompt_end_s == 0.0  # first chunk conditions on nothing


def test_plan_empty_and_negative():
    cfg = DecoderConfig()
    assert plan_chunks(0, cfg) == []
    with pytest.raises(ConfigError):
        plan_chunks(-1, cfg)


def test_plan_with_partial_final_chunk():
    cfg = DecoderConfig()
    chunks = plan_chunks(25, cfg)
    assert [(c.token_start, c.token_end) for c in chunks] == [(0, 10), (10, 20), (20, 25)]
    assert [c.prompt_end_s for c in chunks] == [0.0, 0.8, 1.6]
    assert [c.audio_end_s for c in chunks] == [0.8, 1.6, 2.0]  # 1.6 + 5/12.5


def test_plan_tiling_invariants():
    rng = random.Random(4)
    for _ in range(100):
        cfg = DecoderConfig(
            block_s=rng.choice([0.4, 0.8, 1.6]),
            frame_rate=rng.choice([12.5, 25.0, 50.0]),
        )
        total = rng.randrange(0, 400)
        chunks = plan_chunks(total, cfg)
        covered = 0
        prev_prompt = -1.0
        for n, c in enumerate(chunks, start=1):
            assert c.index == n
            assert c.token_start == covered
            covered = c.token_end
            assert c.prompt_end_s == c.audio_start_s
            assert c.prompt_end_s > prev_prompt or n == 1
            prev_prompt = c.prompt_end_s
            if n < len(chunks):
                assert c.token_end - c.token_start == cfg.tokens_per_block
            else:
                assert 0 < c.token_end - c.token_start <= cfg.tokens_per_block
        assert covered == total


def test_streaming_first_chunk_needs_a_full_block():
    sd = StreamingDecoder(DecoderConfig())
    assert sd.feed(range(9)) == []
    assert sd.buffered == 9
    ready = sd.feed([99])
    assert len(ready) == 1
    assert (ready[0].token_start, ready[0].token_end) == (0, 10)
    assert sd.buffered == 0


def test_streaming_bulk_feed_and_flush():
    sd = StreamingDecoder(DecoderConfig())
    ready = sd.feed(range(26))
    assert [(c.token_start, c.token_end) for c in ready] == [(0, 10), (10, 20)]
    assert sd.buffered == 6
    tail = sd.flush()
    assert (tail.token_start, tail.token_end) == (20, 26)
    assert tail.index == 3


def test_streaming_flush_without_leftover_returns_none():
    sd = StreamingDecoder(DecoderConfig())
    sd.feed(range(20))
    assert sd.flush() is None


def test_streaming_closed_stream_rejects_more_input():
    sd = StreamingDecoder(DecoderConfig())
    sd.feed(range(3))
    sd.flush()
    with pytest.raises(ProtocolError):
        sd.feed([1])
    with pytest.raises(ProtocolError):
        sd.flush()


def test_streaming_equals_batch_plan_over_500_partitions():
    # Same totals, arbitrary feed splits: identical chunks, float-for-float.
    rng = random.Random(12)
    for case in range(500):
        cfg = DecoderConfig(
            block_s=rng.choice([0.4, 0.8, 1.2]),
            frame_rate=rng.choice([12.5, 25.0]),
        )
        total = rng.randrange(0, 250)
        sd = StreamingDecoder(cfg)
        got = []
        remaining = total
        while remaining > 0:
            k = min(rng.randrange(1, 37), remaining)
            got.extend(sd.feed([0] * k))
            remaining -= k
        tail = sd.flush()
        if tail is not None:
            got.append(tail)
        assert got == plan_chunks(total, cfg), f"case {case}: total={total}"


def test_chunk_serialization_round_trip():
    chunks = plan_chunks(37, DecoderConfig())
    records = plan_to_dicts(chunks)
    assert records[0] == {
        "n": 1, "token_start": 0, "token_end": 10,
        "audio_start_s": 0.0, "audio_end_s": 0.8, "prompt_end_s": 0.0,
    }
    assert plan_from_dicts(records) == chunks
    assert DecoderChunk.from_dict(records[-1]) == chunks[-1]
