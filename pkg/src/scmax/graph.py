"""Class-level nearest-neighbor merging.

One merge step takes a partition of the samples, represents each class by
its centroid, links every class to its nearest other class, and replaces the
classes with the connected components of the resulting symmetric graph. Two
classes ``i`` and ``j`` are adjacent when one is the other's nearest
neighbor or when both share the same nearest neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.spatial import cKDTree

from .kernel import ConfigurationError

BRUTE_FORCE_THRESHOLD = 64
# above this dimension a KD-tree prunes too little to beat a blocked scan
KD_TREE_MAX_DIM = 10
_BLOCK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class Partition:
    """Per-sample cluster ids, contiguous in ``0..k-1``."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size == 0:
            raise ConfigurationError("partition labels must be a non-empty 1-D array")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ConfigurationError("partition labels must be integers")
        labels = labels.astype(np.int64, copy=True)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        counts = np.bincount(labels) if labels.min() >= 0 else None
        if counts is None or np.any(counts == 0):
            raise ConfigurationError("partition ids must be contiguous 0..k-1")

    @property
    def k(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def n(self) -> int:
        return self.labels.size

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n))

    @classmethod
    def from_any(cls, labels) -> "Partition":
        """Re-index arbitrary hashable-by-value labels to 0..k-1 in sorted order."""
        _, inverse = np.unique(np.asarray(labels), return_inverse=True)
        return cls(inverse.reshape(-1))

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())


def class_centroids(z: np.ndarray, p: Partition) -> np.ndarray:
    """Mean of the rows of ``z`` in each class, shape (k, L)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != p.n:
        raise ConfigurationError(f"embedding has {z.shape[0]} rows, partition has {p.n}")
    counts = p.sizes()
    if np.any(counts == 0):
        raise ConfigurationError("empty class")
    sums = np.zeros((p.k, z.shape[1]))
    np.add.at(sums, p.labels, z)
    return sums / counts[:, None]


def _sq_dists(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    # shared by both search paths so that tie comparisons are bit-identical
    diff = points - query
    return np.einsum("ij,ij->i", diff, diff)


def _brute_force_neighbors(c: np.ndarray) -> np.ndarray:
    k = c.shape[0]
    a = np.empty(k, dtype=np.int64)
    for i in range(k):
        d = _sq_dists(c, c[i])
        d[i] = np.inf
        a[i] = int(np.argmin(d))  # first index among ties
    return a


def _kdtree_neighbors(c: np.ndarray) -> np.ndarray:
    k = c.shape[0]
    tree = cKDTree(c)
    dist, idx = tree.query(c, k=2)
    # the two returned points are self plus the nearest other point, in some
    # order when distances tie, so the smallest non-self distance is exact
    own = idx == np.arange(k)[:, None]
    nearest = np.where(own, np.inf, dist).min(axis=1)
    radius = nearest * (1.0 + 1e-9) + 1e-300
    candidates = tree.query_ball_point(c, radius)
    a = np.empty(k, dtype=np.int64)
    for i in range(k):
        cand = np.array(sorted(j for j in candidates[i] if j != i), dtype=np.int64)
        d = _sq_dists(c[cand], c[i])
        a[i] = cand[int(np.argmin(d))]
    return a


def _blocked_neighbors(c: np.ndarray) -> np.ndarray:
    """Exhaustive search in row blocks via the matrix-product expansion of
    squared distances. The expansion only shortlists candidates; rows with
    more than one candidate are settled with exact distances."""
    k = c.shape[0]
    sq = np.einsum("ij,ij->i", c, c)
    # generous bound on the rounding error of |a|^2 + |b|^2 - 2 a.b
    slack = 1e-8 * (sq + sq.max()) + 1e-300
    step = max(1, min(1024, _BLOCK_ELEMENTS // k))
    a = np.empty(k, dtype=np.int64)
    for start in range(0, k, step):
        rows = np.arange(start, min(start + step, k))
        d = sq[rows, None] + sq[None, :] - 2.0 * (c[rows] @ c.T)
        d[np.arange(rows.size), rows] = np.inf
        best = d.argmin(axis=1)
        close = d <= (d[np.arange(rows.size), best] + slack[rows])[:, None]
        a[rows] = best
        for r in np.flatnonzero(close.sum(axis=1) > 1):
            cand = np.flatnonzero(close[r])
            a[rows[r]] = cand[int(np.argmin(_sq_dists(c[cand], c[rows[r]])))]
    return a


def nearest_class_neighbors(centroids: np.ndarray,
                            brute_force_threshold: int = BRUTE_FORCE_THRESHOLD) -> np.ndarray:
    """Index of each centroid's nearest other centroid.

    Exact search; ties go to the smallest index. Up to
    ``brute_force_threshold`` centroids are scanned one by one. Larger sets
    use a KD-tree in up to ``KD_TREE_MAX_DIM`` dimensions and a blocked
    exhaustive scan above that.
    """
    c = np.asarray(centroids, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 2:
        raise ConfigurationError("nearest-neighbor search needs at least two centroids")
    if c.shape[0] <= brute_force_threshold:
        return _brute_force_neighbors(c)
    if c.shape[1] <= KD_TREE_MAX_DIM:
        return _kdtree_neighbors(c)
    return _blocked_neighbors(c)


@dataclass(frozen=True)
class AdjacencyGraph:
    """Symmetric class graph induced by a nearest-neighbor index.

    Stored in O(k): the neighbor array plus the classes bucketed by their
    shared neighbor. Every bucket is a clique and every class is linked to
    its own neighbor.
    """

    a: np.ndarray
    order: np.ndarray  # classes sorted (stably) by neighbor target
    offsets: np.ndarray  # bucket t spans order[offsets[t]:offsets[t+1]]

    @property
    def k(self) -> int:
        return self.a.size

    def bucket(self, target: int) -> np.ndarray:
        return self.order[self.offsets[target]:self.offsets[target + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        return bool(self.a[i] == j or self.a[j] == i or self.a[i] == self.a[j])

    def edges(self) -> Iterator[tuple[int, int]]:
        """Each undirected edge once as ``(i, j)`` with ``i < j``, sorted."""
        return iter(sorted(self._edge_set()))

    def _edge_set(self) -> set[tuple[int, int]]:
        out = set()
        for i, t in enumerate(self.a.tolist()):
            out.add((min(i, t), max(i, t)))
        for t in range(self.k):
            members = self.bucket(t).tolist()
            for x in range(len(members)):
                for y in range(x + 1, len(members)):
                    i, j = members[x], members[y]
                    out.add((min(i, j), max(i, j)))
        return out

    def to_dense(self) -> np.ndarray:
        g = np.zeros((self.k, self.k), dtype=bool)
        idx = np.arange(self.k)
        g[idx, self.a] = True
        g[self.a, idx] = True
        for t in range(self.k):
            members = self.bucket(t)
            if members.size > 1:
                g[np.ix_(members, members)] = True
        np.fill_diagonal(g, False)
        return g


def _validate_neighbor_index(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 1 or a.size < 2 or not np.issubdtype(a.dtype, np.integer):
        raise ConfigurationError("neighbor index must be an integer vector of length >= 2")
    a = a.astype(np.int64)
    if a.min() < 0 or a.max() >= a.size:
        raise ConfigurationError("neighbor index out of range")
    if np.any(a == np.arange(a.size)):
        raise ConfigurationError("a class cannot be its own nearest neighbor")
    return a


def build_adjacency(a: np.ndarray) -> AdjacencyGraph:
    a = _validate_neighbor_index(a)
    order = np.argsort(a, kind="stable")
    offsets = np.zeros(a.size + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(np.bincount(a, minlength=a.size))
    return AdjacencyGraph(a, order, offsets)


class UnionFind:
    """Disjoint sets over ``0..n-1`` with union by size and path halving."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]


def connected_components(g: AdjacencyGraph) -> tuple[np.ndarray, int]:
    """Component id per class, numbered by each component's smallest class."""
    uf = UnionFind(g.k)
    for i, t in enumerate(g.a.tolist()):
        uf.union(i, t)
    # bucket members already share their target; chaining them keeps the
    # traversal faithful to the full edge set
    members = g.order.tolist()
    for t in range(g.k):
        lo, hi = int(g.offsets[t]), int(g.offsets[t + 1])
        for s in range(lo + 1, hi):
            uf.union(members[lo], members[s])

    comp = np.empty(g.k, dtype=np.int64)
    ids: dict[int, int] = {}
    for i in range(g.k):
        root = uf.find(i)
        if root not in ids:
            ids[root] = len(ids)
        comp[i] = ids[root]
    return comp, len(ids)


def propagate_labels(p: Partition, class_to_component: np.ndarray) -> Partition:
    mapping = np.asarray(class_to_component)
    if mapping.ndim != 1 or mapping.size < p.k:
        raise ConfigurationError(
            f"component map covers {mapping.size} classes, partition has {p.k}"
        )
    return Partition(mapping[p.labels])


def merge_step(z: np.ndarray, p: Partition,
               brute_force_threshold: int = BRUTE_FORCE_THRESHOLD) -> Partition:
    """One round of class-level nearest-neighbor merging."""
    if p.k < 2:
        raise ConfigurationError("cannot merge a partition with fewer than two classes")
    centroids = class_centroids(z, p)
    a = nearest_class_neighbors(centroids, brute_force_threshold)
    comp, _ = connected_components(build_adjacency(a))
    return propagate_labels(p, comp)
