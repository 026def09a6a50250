"""Immutable graphs over dense integer node indices, plus edge-list and label IO.

External node identifiers are arbitrary strings; internally nodes are dense
indices 0..n-1 assigned in first-appearance order. Adjacency is stored in
compressed sparse row form (indptr/indices) with sorted, duplicate-free
neighbor lists, no self-loops.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphFormatError(ValueError):
    """Raised for malformed edge-list or label files."""


@dataclass(frozen=True)
class Graph:
    node_count: int
    directed: bool
    indptr: np.ndarray = field(repr=False)     # (node_count + 1,) int64
    indices: np.ndarray = field(repr=False)    # concatenated sorted neighbor lists
    node_names: tuple = field(repr=False)
    name_to_index: dict = field(repr=False)

    def neighbors(self, u: int) -> np.ndarray:
        """Sorted out-neighbors of u (possibly empty)."""
        if not 0 <= u < self.node_count:
            raise IndexError(f"node index {u} out of range [0, {self.node_count})")
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        if not 0 <= u < self.node_count:
            raise IndexError(f"node index {u} out of range [0, {self.node_count})")
        return int(self.indptr[u + 1] - self.indptr[u])

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        pos = np.searchsorted(nbrs, v)
        return bool(pos < len(nbrs) and nbrs[pos] == v)

    @property
    def edge_count(self) -> int:
        """Number of stored arcs; for undirected graphs each edge counts twice."""
        return int(len(self.indices))

    def undirected_edge_count(self) -> int:
        if self.directed:
            raise ValueError("undirected_edge_count is only defined for undirected graphs")
        return self.edge_count // 2

    def edges(self) -> np.ndarray:
        """Edge list as an (m, 2) index array; undirected edges appear once with u < v."""
        rows = []
        for u in range(self.node_count):
            for v in self.neighbors(u):
                if self.directed or v > u:
                    rows.append((u, int(v)))
        return np.asarray(rows, dtype=np.int64).reshape(-1, 2)

    def index_of(self, name: str) -> int:
        try:
            return self.name_to_index[name]
        except KeyError:
            raise KeyError(f"unknown node id '{name}'") from None

    @classmethod
    def from_edges(cls, node_names: Sequence[str], edge_pairs: Iterable[tuple],
                   directed: bool) -> "Graph":
        """Build a graph from index pairs; collapses duplicates, drops self-loops."""
        n = len(node_names)
        adjacency = [set() for _ in range(n)]
        for u, v in edge_pairs:
            if u == v:
                continue
            adjacency[u].add(v)
            if not directed:
                adjacency[v].add(u)
        indptr = np.zeros(n + 1, dtype=np.int64)
        chunks = []
        for u in range(n):
            nbrs = np.fromiter(sorted(adjacency[u]), dtype=np.int64, count=len(adjacency[u]))
            indptr[u + 1] = indptr[u] + len(nbrs)
            chunks.append(nbrs)
        indices = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
        names = tuple(node_names)
        return cls(node_count=n, directed=directed, indptr=indptr, indices=indices,
                   node_names=names, name_to_index={s: i for i, s in enumerate(names)})


@dataclass(frozen=True)
class LabelMap:
    """Ground-truth community ids, densely re-indexed to 0..k-1."""
    labels: dict            # node index -> community id
    k: int
    label_names: tuple      # community id -> original label string


def _data_lines(path):
    """Yield (line_number, stripped_line) for non-comment, non-blank lines."""
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def load_edge_list(path, directed: bool = False) -> Graph:
    """Load a whitespace-separated edge list.

    One edge per line as two tokens (source, target); '#' lines are comments.
    Node ids are arbitrary strings and receive dense indices in first-appearance
    order. Self-loops are dropped and parallel edges collapsed; undirected
    loads store each edge in both adjacency lists.
    """
    names: list = []
    name_to_index: dict = {}
    edge_pairs: list = []

    def intern(token: str) -> int:
        idx = name_to_index.get(token)
        if idx is None:
            idx = len(names)
            name_to_index[token] = idx
            names.append(token)
        return idx

    for lineno, line in _data_lines(path):
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(
                f"{path}: line {lineno}: expected 2 tokens, got {len(tokens)}")
        edge_pairs.append((intern(tokens[0]), intern(tokens[1])))

    if not names:
        raise GraphFormatError(f"{path}: empty graph")
    return Graph.from_edges(names, edge_pairs, directed=directed)


def save_edge_list(g: Graph, path) -> None:
    """Write the graph back as an edge list (each undirected edge once)."""
    with open(path, "w", encoding="utf-8") as handle:
        for u in range(g.node_count):
            for v in g.neighbors(u):
                if g.directed or v > u:
                    handle.write(f"{g.node_names[u]} {g.node_names[int(v)]}\n")


def read_label_pairs(path) -> list:
    """Read (node_id, label) string pairs from a label file."""
    pairs = []
    for lineno, line in _data_lines(path):
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphFormatError(
                f"{path}: line {lineno}: expected 2 tokens, got {len(tokens)}")
        pairs.append((tokens[0], tokens[1]))
    return pairs


def labels_from_pairs(pairs: Iterable[tuple], resolve_index) -> LabelMap:
    """Densify labels; `resolve_index` maps an external node id to its index."""
    labels: dict = {}
    label_ids: dict = {}
    label_names: list = []
    for name, label in pairs:
        idx = resolve_index(name)
        cid = label_ids.get(label)
        if cid is None:
            cid = len(label_names)
            label_ids[label] = cid
            label_names.append(label)
        if idx in labels and labels[idx] != cid:
            raise GraphFormatError(
                f"node '{name}' labeled twice with different labels")
        labels[idx] = cid
    return LabelMap(labels=labels, k=len(label_names), label_names=tuple(label_names))


def load_labels(path, g: Graph) -> LabelMap:
    """Load ground-truth labels for nodes of g.

    Each line holds "node_id label". Unknown node ids and conflicting
    re-labelings are errors; community ids are densified in first-appearance
    order of the label strings.
    """
    def resolve(name: str) -> int:
        idx = g.name_to_index.get(name)
        if idx is None:
            raise GraphFormatError(f"{path}: unknown node id '{name}'")
        return idx

    return labels_from_pairs(read_label_pairs(path), resolve)
