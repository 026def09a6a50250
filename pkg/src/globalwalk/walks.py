"""Random-walk corpus generation: uniform, node2vec, and annealed semantic walks.

Three transition policies share one corpus driver:

* uniform        -- every neighbor equally likely (the DeepWalk walker);
* node2vec       -- second-order bias controlled by return/in-out parameters;
* global (semantic) -- first-order bias that favors neighbors whose embeddings
  sit close to the current node, mixed with the uniform distribution by an
  annealing weight that grows with the epoch index.

All samplers draw from per-walk streams keyed by (seed, round, start node),
so a corpus is reproducible and walk generation can be parallelized without
changing its output.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .embeddings import neighbor_distances
from .graph import Graph
from .rng import ORDER, stream


class DeadEndError(RuntimeError):
    """Transition distribution requested at a node without out-neighbors."""


class LikelihoodKind(enum.Enum):
    """Shape of the map from normalized embedding distance to transition weight."""
    INV = "inv"   # inversely proportional, floored near zero
    THR = "thr"   # two-level threshold
    EXP = "exp"   # shifted exponential


# Distance below which the inverse form saturates (avoids division by zero).
INV_EPSILON = 0.01
# Threshold location; also fixes the two weight levels (eps and 1/eps).
THR_EPSILON = 0.5
# Offset of the shifted exponential form: weight = offset - e^distance.
EXP_OFFSET = 2.0
# The shifted exponential goes negative for distances above ln(offset); clamp
# to a small positive floor so every neighbor keeps nonzero probability.
WEIGHT_FLOOR = 1e-3


@dataclass(frozen=True)
class AnnealSchedule:
    """Epoch-indexed mixing weight: lambda(t) = min(t * beta, lambda_max)."""
    beta: float = 0.2
    lambda_max: float = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if not 0 < self.lambda_max <= 1:
            raise ValueError("lambda_max must be in (0, 1]")

    def mix(self, epoch: int) -> float:
        if epoch < 0:
            raise ValueError("epoch must be >= 0")
        return min(epoch * self.beta, self.lambda_max)


@dataclass(frozen=True)
class Node2vecParams:
    p: float   # return parameter: weight 1/p for stepping back to the previous node
    q: float   # in-out parameter: weight 1/q for leaving the previous node's circle

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be > 0")


@dataclass
class Corpus:
    walks: list                 # list of int64 arrays
    walks_per_node: int
    max_length: int

    def __len__(self) -> int:
        return len(self.walks)


def likelihood_weight(kind: LikelihoodKind, xi: float) -> float:
    """Unnormalized transition weight for a neighbor at normalized distance xi."""
    if not 0 <= xi <= 1:
        raise ValueError(f"normalized distance {xi} outside [0, 1]")
    if kind is LikelihoodKind.INV:
        return 1.0 / xi if xi > INV_EPSILON else 1.0 / INV_EPSILON
    if kind is LikelihoodKind.THR:
        return THR_EPSILON if xi > THR_EPSILON else 1.0 / THR_EPSILON
    if kind is LikelihoodKind.EXP:
        return max(EXP_OFFSET - math.exp(xi), WEIGHT_FLOOR)
    raise ValueError(f"unknown likelihood kind: {kind!r}")


def _likelihood_weights(kind: LikelihoodKind, xi: np.ndarray) -> np.ndarray:
    """Vectorized likelihood_weight over an array of distances in [0, 1]."""
    if xi.size and (xi.min() < 0 or xi.max() > 1):
        raise ValueError("normalized distances outside [0, 1]")
    if kind is LikelihoodKind.INV:
        return np.where(xi > INV_EPSILON, 1.0 / np.maximum(xi, INV_EPSILON), 1.0 / INV_EPSILON)
    if kind is LikelihoodKind.THR:
        return np.where(xi > THR_EPSILON, THR_EPSILON, 1.0 / THR_EPSILON)
    if kind is LikelihoodKind.EXP:
        return np.maximum(EXP_OFFSET - np.exp(xi), WEIGHT_FLOOR)
    raise ValueError(f"unknown likelihood kind: {kind!r}")


def bias_distribution(g: Graph, vectors: np.ndarray, u: int,
                      kind: LikelihoodKind) -> np.ndarray:
    """Semantic transition distribution over N(u), aligned with g.neighbors(u)."""
    if g.degree(u) == 0:
        raise DeadEndError(f"node {u} has no out-neighbors")
    weights = _likelihood_weights(kind, neighbor_distances(g, vectors, u))
    return weights / weights.sum()


def annealed_distribution(g: Graph, vectors: np.ndarray, u: int, epoch: int,
                          schedule: AnnealSchedule, kind: LikelihoodKind) -> np.ndarray:
    """Mixture (1-lambda) * uniform + lambda * bias over N(u) for the given epoch.

    At epoch 0 (or beta = 0) the mixture is exactly uniform and the embedding
    snapshot is never consulted.
    """
    deg = g.degree(u)
    if deg == 0:
        raise DeadEndError(f"node {u} has no out-neighbors")
    lam = schedule.mix(epoch)
    uniform = np.full(deg, 1.0 / deg)
    if lam == 0.0:
        return uniform
    return (1.0 - lam) * uniform + lam * bias_distribution(g, vectors, u, kind)


def node2vec_distribution(g: Graph, prev: int, cur: int,
                          params: Node2vecParams) -> np.ndarray:
    """Second-order transition distribution over N(cur) given the previous node.

    Candidate weights: 1/p back to prev, 1 to common neighbors of prev and
    cur, 1/q otherwise; normalized over N(cur).
    """
    nbrs = g.neighbors(cur)
    if len(nbrs) == 0:
        raise DeadEndError(f"node {cur} has no out-neighbors")
    prev_nbrs = g.neighbors(prev)
    pos = np.searchsorted(prev_nbrs, nbrs)
    pos = np.minimum(pos, max(len(prev_nbrs) - 1, 0))
    adjacent_to_prev = len(prev_nbrs) > 0
    in_prev_circle = (prev_nbrs[pos] == nbrs) if adjacent_to_prev else np.zeros(len(nbrs), bool)
    weights = np.where(nbrs == prev, 1.0 / params.p,
                       np.where(in_prev_circle, 1.0, 1.0 / params.q))
    return weights / weights.sum()


def _sample(cum: np.ndarray, draw: float) -> int:
    """Index sampled from a cumulative-probability array given a uniform draw."""
    idx = int(np.searchsorted(cum, draw * cum[-1], side="right"))
    return min(idx, len(cum) - 1)


def uniform_walk(g: Graph, start: int, max_length: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Walk choosing each next node uniformly from N(cur); truncates at dead ends."""
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    walk = np.empty(max_length, dtype=np.int64)
    walk[0] = start
    draws = rng.random(max_length - 1)
    cur = start
    for i in range(1, max_length):
        lo, hi = g.indptr[cur], g.indptr[cur + 1]
        deg = hi - lo
        if deg == 0:
            return walk[:i]
        cur = int(g.indices[lo + int(draws[i - 1] * deg)])
        walk[i] = cur
    return walk


def node2vec_walk(g: Graph, start: int, max_length: int, params: Node2vecParams,
                  rng: np.random.Generator) -> np.ndarray:
    """Second-order biased walk; the first step is uniform."""
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    walk = np.empty(max_length, dtype=np.int64)
    walk[0] = start
    draws = rng.random(max_length - 1)
    prev = -1
    cur = start
    for i in range(1, max_length):
        deg = g.degree(cur)
        if deg == 0:
            return walk[:i]
        if prev < 0:
            nxt = int(g.neighbors(cur)[int(draws[i - 1] * deg)])
        else:
            probs = node2vec_distribution(g, prev, cur, params)
            nxt = int(g.neighbors(cur)[_sample(np.cumsum(probs), draws[i - 1])])
        prev, cur = cur, nxt
        walk[i] = cur
    return walk


def _annealed_tables(g: Graph, vectors: np.ndarray, epoch: int,
                     schedule: AnnealSchedule, kind: LikelihoodKind) -> np.ndarray:
    """Per-node cumulative transition tables, flat-aligned with g.indices.

    The embedding snapshot is frozen within an epoch, so the annealed
    distribution of every node can be computed once per epoch.
    """
    cum = np.empty(len(g.indices))
    for u in range(g.node_count):
        lo, hi = g.indptr[u], g.indptr[u + 1]
        if hi > lo:
            cum[lo:hi] = np.cumsum(annealed_distribution(g, vectors, u, epoch, schedule, kind))
    return cum


def global_walk(g: Graph, vectors: np.ndarray, start: int, max_length: int,
                epoch: int, schedule: AnnealSchedule, kind: LikelihoodKind,
                rng: np.random.Generator, tables: Optional[np.ndarray] = None) -> np.ndarray:
    """Semantically biased first-order walk against a frozen embedding snapshot.

    The transition distribution depends only on the current node; `tables`
    optionally carries the per-epoch precomputed cumulative distributions
    (sampling is identical either way).
    """
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    walk = np.empty(max_length, dtype=np.int64)
    walk[0] = start
    draws = rng.random(max_length - 1)
    cur = start
    for i in range(1, max_length):
        lo, hi = g.indptr[cur], g.indptr[cur + 1]
        if hi == lo:
            return walk[:i]
        if tables is None:
            cum = np.cumsum(annealed_distribution(g, vectors, cur, epoch, schedule, kind))
        else:
            cum = tables[lo:hi]
        cur = int(g.indices[lo + _sample(cum, draws[i - 1])])
        walk[i] = cur
    return walk


@dataclass(frozen=True)
class UniformPolicy:
    """DeepWalk transitions: uniform over out-neighbors."""


@dataclass(frozen=True)
class Node2vecPolicy:
    params: Node2vecParams


@dataclass(frozen=True)
class GlobalWalkPolicy:
    """Annealed semantic transitions against a frozen embedding snapshot."""
    vectors: np.ndarray = field(repr=False)
    kind: LikelihoodKind = LikelihoodKind.EXP
    schedule: AnnealSchedule = AnnealSchedule()
    epoch: int = 0


def generate_corpus(g: Graph, policy, walks_per_node: int, max_length: int,
                    seed: int) -> Corpus:
    """One corpus: `walks_per_node` rounds, each visiting all nodes in a
    seeded shuffled order and emitting one walk per start node.

    Deterministic given `seed`; per-walk streams are keyed by
    (seed, round, start) so the result does not depend on scheduling.
    """
    if walks_per_node < 1 or max_length < 1:
        raise ValueError("walks_per_node and max_length must be >= 1")

    tables = None
    if isinstance(policy, GlobalWalkPolicy):
        tables = _annealed_tables(g, policy.vectors, policy.epoch, policy.schedule, policy.kind)

    walks = []
    for rnd in range(walks_per_node):
        order = stream(seed, ORDER, rnd).permutation(g.node_count)
        for start in order:
            rng = stream(seed, rnd, int(start))
            if isinstance(policy, UniformPolicy):
                walk = uniform_walk(g, int(start), max_length, rng)
            elif isinstance(policy, Node2vecPolicy):
                walk = node2vec_walk(g, int(start), max_length, policy.params, rng)
            elif isinstance(policy, GlobalWalkPolicy):
                walk = global_walk(g, policy.vectors, int(start), max_length,
                                   policy.epoch, policy.schedule, policy.kind,
                                   rng, tables=tables)
            else:
                raise TypeError(f"unknown walk policy: {policy!r}")
            walks.append(walk)
    return Corpus(walks=walks, walks_per_node=walks_per_node, max_length=max_length)


def dump_corpus(corpus: Corpus, g: Graph, path) -> None:
    """Write one walk per line as space-separated external node names."""
    with open(path, "w", encoding="utf-8") as handle:
        for walk in corpus.walks:
            handle.write(" ".join(g.node_names[int(u)] for u in walk) + "\n")
