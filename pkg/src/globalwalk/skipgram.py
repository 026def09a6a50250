"""Skip-gram training with negative sampling over walk corpora.

The hot loop is a sequential numba kernel operating on the flattened corpus;
updates run in corpus order, so results are bit-reproducible for a given
seed. Negative samples come from a frequency^power noise distribution and a
splitmix64 stream, both cheap to reproduce independently in plain Python.

An exact softmax evaluator is included for small-vocabulary verification of
the objective the sampled updates approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .walks import Corpus

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


class TrainingDivergedError(RuntimeError):
    """Loss or embeddings became non-finite during training."""


@dataclass
class TrainConfig:
    window: int = 10
    negatives: int = 5
    lr_start: float = 0.025
    lr_end: float = 1e-4
    noise_power: float = 0.75

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if not self.lr_start > self.lr_end > 0:
            raise ValueError("need lr_start > lr_end > 0")


@dataclass
class NoiseTable:
    """Sampling distribution over nodes proportional to corpus frequency^power."""
    probabilities: np.ndarray = field(repr=False)
    cumulative: np.ndarray = field(repr=False)

    @classmethod
    def from_corpus(cls, corpus: Corpus, node_count: int, power: float = 0.75) -> "NoiseTable":
        counts = np.zeros(node_count, dtype=np.int64)
        for walk in corpus.walks:
            counts += np.bincount(walk, minlength=node_count)
        mass = counts.astype(np.float64) ** power
        total = mass.sum()
        if total == 0:
            raise ValueError("corpus contains no tokens")
        probabilities = mass / total
        return cls(probabilities=probabilities, cumulative=np.cumsum(probabilities))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = np.searchsorted(self.cumulative, rng.random(size), side="right")
        return np.minimum(idx, len(self.cumulative) - 1)


def context_pairs(walk, window: int):
    """(center, context) pairs of a walk: all positions within `window` of
    each center, clipped at the walk boundaries."""
    length = len(walk)
    pairs = []
    for i in range(length):
        lo = max(0, i - window)
        hi = min(length - 1, i + window)
        for j in range(lo, hi + 1):
            if j != i:
                pairs.append((int(walk[i]), int(walk[j])))
    return pairs


def corpus_pair_count(corpus: Corpus, window: int) -> int:
    total = 0
    for walk in corpus.walks:
        length = len(walk)
        for i in range(length):
            total += min(length - 1, i + window) - max(0, i - window)
    return total


@njit(cache=True)
def _rng_next(state):
    # splitmix64: one 64-bit output per call
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True)
def _rng_uniform(state):
    state, z = _rng_next(state)
    return state, float(z >> np.uint64(11)) * _INV_2_53


@njit(cache=True)
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def _softplus(z):
    # log(1 + e^z) without overflow; -log sigmoid(z) == softplus(-z)
    if z > 0.0:
        return z + math.log1p(math.exp(-z))
    return math.log1p(math.exp(z))


@njit(cache=True)
def sgns_step(phi, phi_out, center, context, negatives, lr):
    """One stochastic gradient step for a (center, context) pair.

    Minimizes -log sigmoid(phi_out[context] . phi[center])
              - sum_n log sigmoid(-phi_out[n] . phi[center])
    updating phi[center] and the phi_out rows of context and negatives.
    Returns the loss at the pre-update point.
    """
    dim = phi.shape[1]
    grad = np.zeros(dim)
    z = 0.0
    for j in range(dim):
        z += phi_out[context, j] * phi[center, j]
    loss = _softplus(-z)
    g = _sigmoid(z) - 1.0
    for j in range(dim):
        grad[j] += g * phi_out[context, j]
        phi_out[context, j] -= lr * g * phi[center, j]
    for k in range(negatives.shape[0]):
        n = negatives[k]
        z = 0.0
        for j in range(dim):
            z += phi_out[n, j] * phi[center, j]
        loss += _softplus(z)
        g = _sigmoid(z)
        for j in range(dim):
            grad[j] += g * phi_out[n, j]
            phi_out[n, j] -= lr * g * phi[center, j]
    for j in range(dim):
        phi[center, j] -= lr * grad[j]
    return loss


@njit(cache=True)
def _train_corpus(phi, phi_out, tokens, offsets, window, n_negative, noise_cum,
                  lr_start, lr_end, frac_start, frac_end, total_pairs, seed):
    state = seed
    node_count = noise_cum.shape[0]
    negatives = np.empty(n_negative, dtype=np.int64)
    loss_sum = 0.0
    pair_idx = 0
    for w in range(offsets.shape[0] - 1):
        base = offsets[w]
        length = offsets[w + 1] - base
        for i in range(length):
            center = tokens[base + i]
            j_lo = i - window if i - window > 0 else 0
            j_hi = i + window if i + window < length - 1 else length - 1
            for j in range(j_lo, j_hi + 1):
                if j == i:
                    continue
                context = tokens[base + j]
                progress = frac_start + (frac_end - frac_start) * (pair_idx / total_pairs)
                lr = lr_start + (lr_end - lr_start) * progress
                n_kept = 0
                for _ in range(n_negative):
                    # resample a negative that collides with the positive
                    # context, up to 100 attempts, then drop the slot
                    for _attempt in range(100):
                        state, u = _rng_uniform(state)
                        cand = np.searchsorted(noise_cum, u, side="right")
                        if cand >= node_count:
                            cand = node_count - 1
                        if cand != context:
                            negatives[n_kept] = cand
                            n_kept += 1
                            break
                loss_sum += sgns_step(phi, phi_out, center, context,
                                      negatives[:n_kept], lr)
                pair_idx += 1
    return loss_sum, pair_idx


def _flatten(corpus: Corpus):
    offsets = np.zeros(len(corpus.walks) + 1, dtype=np.int64)
    for i, walk in enumerate(corpus.walks):
        offsets[i + 1] = offsets[i] + len(walk)
    tokens = (np.concatenate(corpus.walks) if corpus.walks
              else np.empty(0, dtype=np.int64)).astype(np.int64)
    return tokens, offsets


def train_epoch(corpus: Corpus, emb, cfg: TrainConfig, epoch_fraction: float,
                seed: int, epoch_fraction_end=None, noise: NoiseTable = None) -> float:
    """One pass over all context pairs of the corpus, in corpus order.

    The step size decays linearly from lr_start toward lr_end across the
    whole run: this epoch covers the progress interval
    [epoch_fraction, epoch_fraction_end] of that global schedule
    (a missing end means constant step size at epoch_fraction).
    The embedding continues from its incoming state.
    """
    if not corpus.walks:
        raise ValueError("corpus is empty")
    if not 0 <= epoch_fraction <= 1:
        raise ValueError("epoch_fraction must lie in [0, 1]")
    frac_end = epoch_fraction if epoch_fraction_end is None else epoch_fraction_end
    if not epoch_fraction <= frac_end <= 1:
        raise ValueError("epoch_fraction_end must lie in [epoch_fraction, 1]")

    total_pairs = corpus_pair_count(corpus, cfg.window)
    if total_pairs == 0:
        return 0.0
    if noise is None:
        noise = NoiseTable.from_corpus(corpus, emb.node_count, cfg.noise_power)
    tokens, offsets = _flatten(corpus)
    loss_sum, pairs = _train_corpus(
        emb.vectors, emb.context, tokens, offsets, cfg.window, cfg.negatives,
        noise.cumulative, cfg.lr_start, cfg.lr_end, float(epoch_fraction),
        float(frac_end), total_pairs, np.uint64(seed))
    mean_loss = loss_sum / pairs
    if not math.isfinite(mean_loss):
        raise TrainingDivergedError(
            f"non-finite mean loss {mean_loss} after {pairs} pairs")
    emb.check_finite()
    return mean_loss


def softmax_distribution(phi, phi_out, u) -> np.ndarray:
    """Exact softmax over all nodes of the context scores for center u."""
    logits = phi_out @ phi[u]
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def softmax_prob(phi, phi_out, u, v) -> float:
    """Exact softmax probability of context v given center u (test oracle;
    enumerates the whole vocabulary)."""
    return float(softmax_distribution(phi, phi_out, u)[v])
