"""Downstream evaluation: k-means community detection and link prediction.

Community accuracy maps predicted clusters to ground-truth communities with
an optimal bijection (Hungarian assignment on the contingency table), so it
is invariant to cluster relabeling. Link prediction scores held-out edges
against sampled non-edges with a strict pairwise ranking count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import Graph, LabelMap
from .rng import stream

KMEANS_TOL = 1e-6
KMEANS_MAX_ITER = 300
KMEANS_RESTARTS = 10


@dataclass
class ClusterAssignment:
    assignment: np.ndarray = field(repr=False)   # node -> cluster id in 0..k-1
    k: int = 0
    inertia: float = 0.0


@dataclass
class LinkSplit:
    train_graph: Graph
    pos_test: np.ndarray = field(repr=False)   # (m, 2) held-out edges
    neg_test: np.ndarray = field(repr=False)   # (m, 2) sampled non-edges


@dataclass
class EvalReport:
    dataset: str
    task: str
    method: str
    likelihood: str
    beta: str
    seed: int
    metric: str
    value: float
    seconds: float
    hyperparameters: dict = field(default_factory=dict)

    CSV_HEADER = "dataset,task,method,likelihood,beta,seed,metric,value,seconds"

    def csv_row(self) -> str:
        return (f"{self.dataset},{self.task},{self.method},{self.likelihood},"
                f"{self.beta},{self.seed},{self.metric},{self.value:.6f},"
                f"{self.seconds:.3f}")

    def kv_line(self) -> str:
        fields = [
            f"dataset={self.dataset}", f"task={self.task}", f"method={self.method}",
            f"likelihood={self.likelihood}", f"beta={self.beta}", f"seed={self.seed}",
            f"metric={self.metric}", f"value={self.value:.6f}",
            f"seconds={self.seconds:.3f}",
        ]
        fields += [f"{key}={val}" for key, val in sorted(self.hyperparameters.items())]
        return " ".join(fields)


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances
    cross = points @ centers.T
    pp = np.einsum("ij,ij->i", points, points)[:, None]
    cc = np.einsum("ij,ij->i", centers, centers)[None, :]
    return np.maximum(pp - 2.0 * cross + cc, 0.0)


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[int(rng.integers(n))]
    closest = _squared_distances(points, centers[:1]).ravel()
    for c in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            pick = int(rng.integers(n))
        else:
            cum = np.cumsum(closest / total)
            pick = min(int(np.searchsorted(cum, rng.random(), side="right")), n - 1)
        centers[c] = points[pick]
        closest = np.minimum(closest, _squared_distances(points, centers[c:c + 1]).ravel())
    return centers


def _lloyd(points: np.ndarray, centers: np.ndarray, rng: np.random.Generator):
    """Lloyd iterations from the given centers.

    Returns (assignment, centers, inertia, inertia_trace). Empty clusters are
    re-seeded from the point farthest from its assigned center.
    """
    k = centers.shape[0]
    trace = []
    assignment = np.zeros(points.shape[0], dtype=np.int64)
    for _ in range(KMEANS_MAX_ITER):
        dist2 = _squared_distances(points, centers)
        assignment = dist2.argmin(axis=1)
        closest = dist2[np.arange(points.shape[0]), assignment]
        for c in range(k):
            if not np.any(assignment == c):
                far = int(closest.argmax())
                assignment[far] = c
                closest[far] = 0.0
        trace.append(float(closest.sum()))
        new_centers = np.empty_like(centers)
        for c in range(k):
            new_centers[c] = points[assignment == c].mean(axis=0)
        shift = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if shift < KMEANS_TOL:
            break
    dist2 = _squared_distances(points, centers)
    assignment = dist2.argmin(axis=1)
    inertia = float(dist2[np.arange(points.shape[0]), assignment].sum())
    trace.append(inertia)
    return assignment, centers, inertia, trace


def kmeans(points: np.ndarray, k: int, seed: int,
           restarts: int = KMEANS_RESTARTS) -> ClusterAssignment:
    """k-means++ with Lloyd iterations; best of `restarts` seeded restarts.

    Ties on inertia go to the lowest restart index, keeping the result
    deterministic even if restarts run concurrently.
    """
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    points = np.asarray(points, dtype=np.float64)
    best = None
    for r in range(restarts):
        rng = stream(seed, r)
        centers = _kmeanspp_init(points, k, rng)
        assignment, _, inertia, _ = _lloyd(points, centers, rng)
        if best is None or inertia < best.inertia:
            best = ClusterAssignment(assignment=assignment, k=k, inertia=inertia)
    return best


def accuracy(clusters: ClusterAssignment, labels: LabelMap) -> float:
    """Fraction of nodes correctly classified under the best
    cluster-to-community bijection."""
    if clusters.k != labels.k:
        raise ValueError(
            f"cluster count {clusters.k} does not match community count {labels.k}")
    n = len(clusters.assignment)
    truth = np.empty(n, dtype=np.int64)
    for u in range(n):
        if u not in labels.labels:
            raise ValueError(f"node {u} is clustered but unlabeled")
        truth[u] = labels.labels[u]
    contingency = np.zeros((clusters.k, labels.k), dtype=np.int64)
    np.add.at(contingency, (clusters.assignment, truth), 1)
    rows, cols = linear_sum_assignment(contingency, maximize=True)
    return float(contingency[rows, cols].sum()) / n


def split_edges(g: Graph, test_fraction: float = 0.2, seed: int = 0) -> LinkSplit:
    """Hold out a fraction of edges for link prediction.

    Edges move to the test set greedily (shuffled order) while both endpoints
    keep degree >= 1 in the training graph; an equal number of non-edges of
    the original graph is then sampled uniformly without replacement.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    edges = g.edges()
    n_edges = len(edges)
    target = math.ceil(test_fraction * n_edges)
    rng = stream(seed)
    order = rng.permutation(n_edges)

    if g.directed:
        deg = np.zeros(g.node_count, dtype=np.int64)
        for u, v in edges:
            deg[u] += 1
            deg[v] += 1
    else:
        deg = np.diff(g.indptr)
    deg = deg.copy()

    held = np.zeros(n_edges, dtype=bool)
    n_held = 0
    for idx in order:
        if n_held == target:
            break
        u, v = edges[idx]
        if deg[u] > 1 and deg[v] > 1:
            held[idx] = True
            deg[u] -= 1
            deg[v] -= 1
            n_held += 1
    pos_test = edges[held]
    train_graph = Graph.from_edges(g.node_names, [tuple(e) for e in edges[~held]],
                                   directed=g.directed)

    existing = {(int(u), int(v)) for u, v in edges}
    if not g.directed:
        existing |= {(v, u) for u, v in existing}
    chosen = set()
    neg = []
    attempts_left = 100 * max(len(pos_test), 1)
    while len(neg) < len(pos_test):
        if attempts_left == 0:
            raise RuntimeError(
                "graph too dense: non-edge sampling failed to find enough non-edges")
        attempts_left -= 1
        u, v = (int(x) for x in rng.integers(g.node_count, size=2))
        if u == v or (u, v) in existing:
            continue
        key = (u, v) if g.directed else (min(u, v), max(u, v))
        if key in chosen:
            continue
        chosen.add(key)
        neg.append((u, v))
    neg_test = np.asarray(neg, dtype=np.int64).reshape(-1, 2)
    return LinkSplit(train_graph=train_graph, pos_test=pos_test, neg_test=neg_test)


def link_score(vectors: np.ndarray, u: int, v: int) -> float:
    """Symmetric edge score, strictly decreasing in embedding distance."""
    return 1.0 / (1.0 + float(np.linalg.norm(vectors[u] - vectors[v])))


def link_scores(vectors: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    diffs = vectors[pairs[:, 0]] - vectors[pairs[:, 1]]
    return 1.0 / (1.0 + np.sqrt(np.einsum("ij,ij->i", diffs, diffs)))


def auc(pos_scores, neg_scores, tie_half_credit: bool = False) -> float:
    """Probability that a held-out edge outscores a sampled non-edge.

    Counts strict wins over all (non-edge, edge) pairs; ties score zero
    unless tie_half_credit adds 0.5 per tie. Sorting makes this
    O(m log m), but the value equals the full pairwise count.
    """
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("score lists must be nonempty")
    neg_sorted = np.sort(neg)
    wins = np.searchsorted(neg_sorted, pos, side="left").sum()
    if tie_half_credit:
        ties = (np.searchsorted(neg_sorted, pos, side="right")
                - np.searchsorted(neg_sorted, pos, side="left")).sum()
        return (float(wins) + 0.5 * float(ties)) / (len(pos) * len(neg))
    return float(wins) / (len(pos) * len(neg))


def write_assignments(path, names, clusters: ClusterAssignment) -> None:
    """Export one "node_id,cluster_id" row per node."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("node_id,cluster_id\n")
        for name, cid in zip(names, clusters.assignment):
            handle.write(f"{name},{int(cid)}\n")
