import numpy as np
import pytest

from voxsim.errors import ConfigError, DomainError
from voxsim.framing import (
    FrameConfig,
    block_causal_allowed,
    block_causal_mask,
    causal_conv1d,
    token_count,
)


def test_token_count_reference_values():
    cfg = FrameConfig()
    assert token_count(4.0, cfg) == 50
    assert token_count(0.0, cfg) == 0
    assert token_count(2.4, cfg) == 30
    assert token_count(0.079, cfg) == 0  # below one frame
    assert token_count(0.08, cfg) == 1


def test_token_count_floors_partial_frames():
    cfg = FrameConfig(frame_rate=25.0)
    assert token_count(1.0, cfg) == 25
    assert token_count(1.039, cfg) == 25
    assert token_count(1.04, cfg) == 26


def test_token_count_rejects_negative_duration():
    with pytest.raises(DomainError):
        token_count(-0.1, FrameConfig())


def test_frame_config_validation():
    with pytest.raises(ConfigError):
        FrameConfig(frame_rate=0.0)
    with pytest.raises(ConfigError):
        FrameConfig(frame_rate=-12.5)
    with pytest.raises(ConfigError):
        FrameConfig(tokenizer_block_s=0.0)


def brute_force_mask(seq_len, block):
    m = np.zeros((seq_len, seq_len), dtype=bool)
    for i in range(seq_len):
        for j in range(seq_len):
            m[i, j] = (j // block) <= (i // block)
    return m


def test_block_causal_mask_matches_brute_force():
    for block in (1, 2, 4, 10):
        for seq_len in range(1, 65):
            got = block_causal_mask(seq_len, block)
            assert got.dtype == bool
            assert np.array_equal(got, brute_force_mask(seq_len, block))


def test_block_causal_allowed_agrees_with_mask():
    mask = block_causal_mask(20, 4)
    for i in range(20):
        for j in range(20):
            assert block_causal_allowed(i, j, 4) == mask[i, j]


def test_block_causal_mask_block_one_is_plain_causal():
    m = block_causal_mask(8, 1)
    assert np.array_equal(m, np.tril(np.ones((8, 8), dtype=bool)))


def test_block_causal_mask_whole_sequence_block_sees_everything():
    assert block_causal_mask(6, 6).all()
    assert block_causal_mask(6, 100).all()


def test_block_causal_validation():
    with pytest.raises(DomainError):
        block_causal_mask(5, 0)
    with pytest.raises(DomainError):
        block_causal_mask(-1, 2)
    with pytest.raises(DomainError):
        block_causal_allowed(0, 0, 0)
    with pytest.raises(DomainError):
        block_causal_allowed(-1, 0, 2)


def test_causal_conv_matches_direct_sum():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(50)
    k = rng.standard_normal(6)
    y = causal_conv1d(x, k)
    assert y.shape == x.shape
    for t in range(50):
        direct = sum(k[j] * x[t - j] for j in range(6) if t - j >= 0)
        assert y[t] == pytest.approx(direct, abs=1e-12)


def test_causal_conv_causality_perturbation_probe():
    # Changing x[p] must not change any output before p: 100 random signals.
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(2, 80))
        x = rng.standard_normal(n)
        k = rng.standard_normal(int(rng.integers(1, 12)))
        p = int(rng.integers(0, n))
        x2 = x.copy()
        x2[p] += rng.standard_normal() + 1.0
        y1 = causal_conv1d(x, k)
        y2 = causal_conv1d(x2, k)
        assert np.array_equal(y1[:p], y2[:p])
        assert y1[p] != y2[p] or k[0] == 0.0


def test_causal_conv_edge_cases():
    assert causal_conv1d(np.zeros(0), np.ones(3)).shape == (0,)
    with pytest.raises(DomainError):
        causal_conv1d(np.ones(4), np.zeros(0))
    # kernel longer than signal still yields one output per input sample
    y = causal_conv1d(np.array([1.0, 2.0]), np.array([1.0, 1.0, 1.0, 1.0]))
    assert y.tolist() == [1.0, 3.0]
