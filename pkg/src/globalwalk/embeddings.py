"""Embedding matrix: initialization, neighbor-normalized distance, persistence.

The input matrix holds one d-dimensional row per node and is the published
embedding; a same-shaped context matrix exists solely for the trainer.
Distances are always computed in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .rng import stream

# Below this value the max-neighbor distance is treated as zero and all
# normalized distances collapse to 0 (every neighbor equally favored).
ZERO_DENOMINATOR_GUARD = 1e-12


class EmbeddingFormatError(ValueError):
    """Raised for malformed embedding files."""


@dataclass
class EmbeddingMatrix:
    vectors: np.ndarray = field(repr=False)   # (n, d) input matrix, the embedding
    context: np.ndarray = field(repr=False)   # (n, d) trainer-only output matrix

    @property
    def node_count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def check_finite(self) -> None:
        if not np.all(np.isfinite(self.vectors)) or not np.all(np.isfinite(self.context)):
            raise FloatingPointError("embedding matrix contains non-finite entries")


def init_embeddings(node_count: int, dim: int, seed: int) -> EmbeddingMatrix:
    """Fresh matrix with rows i.i.d. uniform on [-0.5/d, 0.5/d), zero context."""
    if node_count < 1 or dim < 1:
        raise ValueError("node_count and dim must be >= 1")
    rng = stream(seed)
    half = 0.5 / dim
    vectors = rng.uniform(-half, half, size=(node_count, dim))
    return EmbeddingMatrix(vectors=vectors, context=np.zeros((node_count, dim)))


def neighbor_distances(g: Graph, vectors: np.ndarray, u: int) -> np.ndarray:
    """Normalized Euclidean distances from u to each of its neighbors.

    Each distance is divided by the maximum over N(u), so values lie in
    [0, 1] and (absent ties) exactly one neighbor sits at 1. If even the
    maximum distance is numerically zero, all values are reported as 0.
    """
    nbrs = g.neighbors(u)
    if len(nbrs) == 0:
        raise ValueError(f"node {u} has no neighbors")
    diffs = vectors[nbrs].astype(np.float64) - vectors[u].astype(np.float64)
    dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    top = dists.max()
    if top < ZERO_DENOMINATOR_GUARD:
        return np.zeros(len(nbrs))
    return dists / top


def normalized_distance(g: Graph, vectors: np.ndarray, u: int, v: int) -> float:
    """Normalized distance from u to its neighbor v; requires v in N(u)."""
    nbrs = g.neighbors(u)
    pos = np.searchsorted(nbrs, v)
    if pos >= len(nbrs) or nbrs[pos] != v:
        raise ValueError(f"node {v} is not a neighbor of {u}")
    return float(neighbor_distances(g, vectors, u)[pos])


def save_embeddings(emb: EmbeddingMatrix, names, path) -> None:
    """Write "node_count dim" header then one "name v1 .. vd" row per node.

    Values carry 6 fractional digits, so a reload agrees within 5e-7.
    """
    if len(names) != emb.node_count:
        raise ValueError("names length does not match embedding rows")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{emb.node_count} {emb.dim}\n")
        for name, row in zip(names, emb.vectors):
            handle.write(name + " " + " ".join(f"{x:.6f}" for x in row) + "\n")


def load_embeddings(path):
    """Read an embedding file; returns (names, EmbeddingMatrix)."""
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError(f"{path}: malformed header")
        try:
            count, dim = int(header[0]), int(header[1])
        except ValueError:
            raise EmbeddingFormatError(f"{path}: non-numeric header") from None
        if count < 1:
            raise EmbeddingFormatError(f"{path}: empty graph")
        if dim < 1:
            raise EmbeddingFormatError(f"{path}: dimension must be >= 1")
        names = []
        vectors = np.empty((count, dim))
        for i in range(count):
            tokens = handle.readline().split()
            if len(tokens) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}: row {i + 1} has {len(tokens)} tokens, expected {dim + 1}")
            names.append(tokens[0])
            try:
                vectors[i] = [float(t) for t in tokens[1:]]
            except ValueError:
                raise EmbeddingFormatError(f"{path}: non-numeric value in row {i + 1}") from None
        if handle.readline().strip():
            raise EmbeddingFormatError(f"{path}: more rows than header declares")
    return names, EmbeddingMatrix(vectors=vectors, context=np.zeros((count, dim)))
