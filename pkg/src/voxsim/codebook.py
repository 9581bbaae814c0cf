"""Vector-quantization codebook learned by exponential moving average.

The codebook holds K vectors of dimension ``dim`` plus the EMA statistics
that drive their updates: a per-code cluster-size average, a per-code sum of
assigned inputs, and a usage average (EMA of per-batch assignment frequency)
used to detect and reset collapsed codes. A commitment penalty is reported as
a scalar diagnostic; no gradients are computed here.

Also provides the bitrate arithmetic for a token stream
(``log2(K) * frame_rate`` bits per second) and a seeded cluster-fitting
experiment used to exercise convergence and dead-code recovery end to end.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, DomainError

# Smoothing floor for the EMA cluster-size division; keeps unassigned codes
# finite without renormalizing the whole codebook.
EMA_EPS = 1e-5

_QUANTIZE_BLOCK = 512


@dataclass
class QuantizeResult:
    """Nearest-neighbor assignment of a batch against a codebook.

    Attributes:
        indices: (N,) selected code ids, ties broken toward the lowest id.
        quantized: (N, dim) the selected code vectors (exact rows of the table).
        commitment_loss: commitment_coeff * mean squared L2 distance between
            inputs and their selected codes.
    """

    indices: np.ndarray
    quantized: np.ndarray
    commitment_loss: float


@dataclass
class Codebook:
    """K x dim code table with EMA statistics and usage tracking.

    ``vectors[k]`` always equals ``ema_embed_sum[k] / max(ema_cluster_size[k],
    EMA_EPS)`` after an update. ``usage[k]`` is an EMA (same decay) of the
    fraction of each batch assigned to code k; codes whose usage drops below
    ``reset_threshold`` are eligible for replacement in
    :meth:`reset_dead_codes`.

    Mutating methods (``ema_update``, ``reset_dead_codes``) require exclusive
    access; reads are safe to share. No internal locking is performed.
    """

    dim: int
    size: int
    vectors: np.ndarray
    ema_cluster_size: np.ndarray
    ema_embed_sum: np.ndarray
    usage: np.ndarray
    reset_threshold: float
    decay: float = 0.99
    commitment_coeff: float = 10.0

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        self.ema_cluster_size = np.asarray(self.ema_cluster_size, dtype=float)
        self.ema_embed_sum = np.asarray(self.ema_embed_sum, dtype=float)
        self.usage = np.asarray(self.usage, dtype=float)
        if self.dim < 1 or self.size < 1:
            raise ConfigError(f"dim and size must be positive, got dim={self.dim} size={self.size}")
        if self.vectors.shape != (self.size, self.dim):
            raise ConfigError(
                f"vectors must have shape ({self.size}, {self.dim}), got {self.vectors.shape}"
            )
        if self.ema_cluster_size.shape != (self.size,):
            raise ConfigError(f"ema_cluster_size must have shape ({self.size},)")
        if self.ema_embed_sum.shape != (self.size, self.dim):
            raise ConfigError(f"ema_embed_sum must have shape ({self.size}, {self.dim})")
        if self.usage.shape != (self.size,):
            raise ConfigError(f"usage must have shape ({self.size},)")
        if not 0.0 < self.decay < 1.0:
            raise ConfigError(f"decay must lie in (0, 1), got {self.decay}")
        if self.commitment_coeff < 0.0:
            raise ConfigError(f"commitment_coeff must be nonnegative, got {self.commitment_coeff}")
        if self.reset_threshold < 0.0:
            raise ConfigError(f"reset_threshold must be nonnegative, got {self.reset_threshold}")
        if np.any(self.usage < 0.0) or np.any(self.usage > 1.0):
            raise ConfigError("usage entries must lie in [0, 1]")

    @classmethod
    def from_vectors(
        cls,
        vectors,
        *,
        reset_threshold: float,
        decay: float = 0.99,
        commitment_coeff: float = 10.0,
    ) -> "Codebook":
        """Start a codebook at the given vectors with unit EMA mass and zero usage."""
        v = np.array(vectors, dtype=float)
        if v.ndim != 2:
            raise DimensionError(f"vectors must be 2-D (K, dim), got shape {v.shape}")
        size, dim = v.shape
        return cls(
            dim=dim,
            size=size,
            vectors=v,
            ema_cluster_size=np.ones(size),
            ema_embed_sum=v.copy(),
            usage=np.zeros(size),
            reset_threshold=reset_threshold,
            decay=decay,
            commitment_coeff=commitment_coeff,
        )

    @classmethod
    def random(
        cls,
        dim: int,
        size: int,
        *,
        reset_threshold: float,
        seed: int = 0,
        scale: float = 1.0,
        decay: float = 0.99,
        commitment_coeff: float = 10.0,
    ) -> "Codebook":
        """Gaussian-initialized codebook (classic collapse-prone starting point)."""
        rng = np.random.default_rng(seed)
        v = rng.standard_normal((size, dim)) * scale
        return cls.from_vectors(
            v, reset_threshold=reset_threshold, decay=decay, commitment_coeff=commitment_coeff
        )

    def _check_inputs(self, inputs) -> np.ndarray:
        x = np.asarray(inputs, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DimensionError(f"expected inputs of shape (N, {self.dim}), got {x.shape}")
        if x.shape[0] == 0:
            raise DomainError("inputs must contain at least one row")
        return x

    def quantize(self, inputs) -> QuantizeResult:
        """Assign each input row to its nearest code by squared L2 distance.

        Ties break toward the lowest code index. Distances are computed from
        explicit differences (not the expanded dot-product form) so exact ties
        stay exact.
        """
        x = self._check_inputs(inputs)
        n = x.shape[0]
        indices = np.empty(n, dtype=np.int64)
        for start in range(0, n, _QUANTIZE_BLOCK):
            block = x[start : start + _QUANTIZE_BLOCK]
            d2 = ((block[:, None, :] - self.vectors[None, :, :]) ** 2).sum(axis=2)
            indices[start : start + block.shape[0]] = np.argmin(d2, axis=1)
        quantized = self.vectors[indices]
        mse = float(((x - quantized) ** 2).sum(axis=1).mean())
        return QuantizeResult(
            indices=indices,
            quantized=quantized,
            commitment_loss=self.commitment_coeff * mse,
        )

    def ema_update(self, inputs, indices) -> None:
        """Fold one assigned batch into the EMA statistics, in place.

        For each code k with batch count c_k and assigned-input sum s_k:

            ema_cluster_size[k] <- decay * old + (1 - decay) * c_k
            ema_embed_sum[k]    <- decay * old + (1 - decay) * s_k
            vectors[k]          <- ema_embed_sum[k] / max(ema_cluster_size[k], EMA_EPS)
            usage[k]            <- decay * old + (1 - decay) * c_k / N
        """
        x = self._check_inputs(inputs)
        idx = np.asarray(indices)
        n = x.shape[0]
        if idx.shape != (n,):
            raise DimensionError(f"indices must have shape ({n},), got {idx.shape}")
        if idx.size and (idx.min() < 0 or idx.max() >= self.size):
            raise DomainError(f"code ids must lie in [0, {self.size}), got range "
                              f"[{int(idx.min())}, {int(idx.max())}]")
        counts = np.bincount(idx, minlength=self.size).astype(float)
        sums = np.zeros_like(self.ema_embed_sum)
        np.add.at(sums, idx, x)
        d = self.decay
        self.ema_cluster_size = d * self.ema_cluster_size + (1.0 - d) * counts
        self.ema_embed_sum = d * self.ema_embed_sum + (1.0 - d) * sums
        self.vectors = self.ema_embed_sum / np.maximum(self.ema_cluster_size, EMA_EPS)[:, None]
        self.usage = d * self.usage + (1.0 - d) * (counts / n)

    def dead_codes(self) -> list[int]:
        """Code ids whose usage sits below the reset threshold, ascending."""
        return [int(k) for k in np.flatnonzero(self.usage < self.reset_threshold)]

    def reset_dead_codes(self, candidate_inputs, seed: int) -> list[int]:
        """Replace under-used codes with rows drawn from ``candidate_inputs``.

        Each code with ``usage < reset_threshold`` gets a candidate row chosen
        uniformly by a generator seeded with ``seed``; its EMA statistics
        restart at cluster size 1 and its usage restarts at the threshold.
        Returns the replaced code ids in ascending order. Deterministic for a
        fixed seed.
        """
        dead = np.flatnonzero(self.usage < self.reset_threshold)
        if dead.size == 0:
            return []
        c = np.asarray(candidate_inputs, dtype=float)
        if c.size == 0:
            raise DomainError(
                f"{dead.size} dead code(s) to reset but no candidate inputs were provided"
            )
        if c.ndim != 2 or c.shape[1] != self.dim:
            raise DimensionError(f"expected candidates of shape (M, {self.dim}), got {c.shape}")
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, c.shape[0], size=dead.size)
        replacements = c[rows]
        self.vectors[dead] = replacements
        self.ema_embed_sum[dead] = replacements
        self.ema_cluster_size[dead] = 1.0
        self.usage[dead] = self.reset_threshold
        return [int(k) for k in dead]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "size": self.size,
            "decay": self.decay,
            "commitment_coeff": self.commitment_coeff,
            "reset_threshold": self.reset_threshold,
            "vectors": self.vectors.tolist(),
            "ema_cluster_size": self.ema_cluster_size.tolist(),
            "ema_embed_sum": self.ema_embed_sum.tolist(),
            "usage": self.usage.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Codebook":
        return cls(
            dim=int(data["dim"]),
            size=int(data["size"]),
            vectors=np.array(data["vectors"], dtype=float),
            ema_cluster_size=np.array(data["ema_cluster_size"], dtype=float),
            ema_embed_sum=np.array(data["ema_embed_sum"], dtype=float),
            usage=np.array(data["usage"], dtype=float),
            reset_threshold=float(data["reset_threshold"]),
            decay=float(data["decay"]),
            commitment_coeff=float(data["commitment_coeff"]),
        )

    def save(self, path) -> None:
        """Write the codebook as self-describing JSON; round-trips exactly."""
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Codebook":
        return cls.from_dict(json.loads(Path(path).read_text()))


def bitrate(codebook_size: int, frame_rate: float) -> float:
    """Information rate of a token stream in bits per second.

    A stream of ``frame_rate`` tokens per second drawn from ``codebook_size``
    codes carries ``log2(codebook_size) * frame_rate`` bps (e.g. 16384 codes
    at 12.5 Hz -> 175 bps).
    """
    if codebook_size < 2:
        raise DomainError(f"codebook_size must be at least 2, got {codebook_size}")
    if frame_rate <= 0:
        raise DomainError(f"frame_rate must be positive, got {frame_rate}")
    return math.log2(codebook_size) * frame_rate


# ---------------------------------------------------------------------------
# Seeded cluster-fitting experiment


def cluster_means(n_clusters: int, dim: int | None = None, spacing: float = 2.0) -> np.ndarray:
    """Well-separated synthetic cluster centers: ``spacing`` times one-hot axes."""
    if n_clusters < 1:
        raise DomainError(f"n_clusters must be positive, got {n_clusters}")
    if dim is None:
        dim = n_clusters
    if dim < n_clusters:
        raise DomainError(f"dim must be >= n_clusters, got dim={dim} n_clusters={n_clusters}")
    means = np.zeros((n_clusters, dim))
    means[np.arange(n_clusters), np.arange(n_clusters)] = spacing
    return means


def sample_clusters(means: np.ndarray, sigma: float, batch: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a batch from an equal-weight Gaussian mixture around ``means``."""
    assignment = rng.integers(0, means.shape[0], size=batch)
    return means[assignment] + rng.normal(0.0, sigma, size=(batch, means.shape[1]))


def kmeans_pp_rows(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: pick k spread-out rows of ``data`` (distance^2 weighting)."""
    n = data.shape[0]
    if k > n:
        raise DomainError(f"cannot seed {k} codes from {n} rows")
    chosen = np.empty((k, data.shape[1]))
    chosen[0] = data[rng.integers(0, n)]
    d2 = ((data - chosen[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        probs = d2 / max(d2.sum(), 1e-12)
        chosen[i] = data[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((data - chosen[i]) ** 2).sum(axis=1))
    return chosen


@dataclass
class FitResult:
    """Outcome of a cluster-fitting run.

    ``final_distances[k]`` is the L2 distance from code k to its nearest true
    cluster mean; ``reset_events`` records (step, replaced code ids) for every
    reset that fired.
    """

    codebook: Codebook
    means: np.ndarray
    final_distances: np.ndarray
    reset_events: list[tuple[int, list[int]]] = field(default_factory=list)

    @property
    def reset_codes(self) -> list[int]:
        """Distinct code ids that were reset at least once, ascending."""
        seen = set()
        for _, ids in self.reset_events:
            seen.update(ids)
        return sorted(seen)

    @property
    def max_distance(self) -> float:
        return float(self.final_distances.max())


def fit_gaussian_clusters(
    n_clusters: int,
    codes: int,
    steps: int,
    *,
    batch: int = 256,
    sigma: float = 0.05,
    reset_threshold: float = 0.01,
    reset_interval: int = 5,
    seed: int = 0,
    dim: int | None = None,
    decay: float = 0.99,
) -> FitResult:
    """Run quantize/ema_update/reset cycles against a seeded Gaussian mixture.

    The codebook is seeded with k-means++ rows of the first batch; every
    ``reset_interval`` steps, codes whose usage fell below ``reset_threshold``
    are replaced with rows of the current batch. Fully deterministic per seed.
    """
    if steps < 1:
        raise DomainError(f"steps must be positive, got {steps}")
    if reset_interval < 1:
        raise DomainError(f"reset_interval must be positive, got {reset_interval}")
    rng = np.random.default_rng(seed)
    means = cluster_means(n_clusters, dim=dim)
    first = sample_clusters(means, sigma, batch, rng)
    book = Codebook.from_vectors(
        kmeans_pp_rows(first, codes, rng),
        reset_threshold=reset_threshold,
        decay=decay,
    )
    reset_events: list[tuple[int, list[int]]] = []
    batch_data = first
    for step in range(1, steps + 1):
        result = book.quantize(batch_data)
        book.ema_update(batch_data, result.indices)
        if step % reset_interval == 0:
            reset_ids = book.reset_dead_codes(batch_data, seed=seed + step)
            if reset_ids:
                reset_events.append((step, reset_ids))
        if step < steps:
            batch_data = sample_clusters(means, sigma, batch, rng)
    d2 = ((book.vectors[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    return FitResult(
        codebook=book,
        means=means,
        final_distances=np.sqrt(d2.min(axis=1)),
        reset_events=reset_events,
    )
