"""Distance matrices, k-nearest-neighbour graphs and geodesic distances.

Geodesic distances are shortest-path lengths in a symmetrised k-NN graph.
Two Floyd-Warshall routines are provided: the classic triple loop and the
whole-matrix relaxation ``D = min(D, D[:, v] + D[v, :])``; with every vertex
used as an intermediate they agree bit for bit.

The inner loops run in a compiled extension when it is available and fall
back to NumPy otherwise; :data:`BACKEND` tells which one was picked. Setting
``NHKMR_PURE_PYTHON=1`` forces the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _fallback
from .errors import InvalidArgumentError

if os.environ.get("NHKMR_PURE_PYTHON") == "1":
    _kernels = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _kernels
        BACKEND = "cython"
    except ImportError:
        _kernels = _fallback
        BACKEND = "python"

METRICS = ("euclidean", "frobenius", "geodesic")


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric, zero-diagonal, nonnegative distances; geodesic ones may be ``inf``."""

    d: np.ndarray
    metric: str = "euclidean"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise InvalidArgumentError(f"unknown metric {self.metric!r}")
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidArgumentError("distance matrix must be square")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self):
        return self.d.shape[0]


@dataclass(frozen=True, eq=False)
class KnnGraph:
    """Edge weights of a symmetrised k-NN graph, ``inf`` where there is no edge."""

    adjacency: np.ndarray
    k: int

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def edges(self):
        """Boolean mask of off-diagonal edges."""
        mask = np.isfinite(self.adjacency)
        np.fill_diagonal(mask, False)
        return mask


def pairwise_distances(points, metric="euclidean"):
    """Euclidean distances between the rows of ``points``.

    Images may be passed as a ``(count, rows, cols)`` stack; the Frobenius
    distance between two images equals the Euclidean distance between their
    flattened pixel vectors, so both are handled here.
    """
    try:
        x = np.asarray(points, dtype=float)
    except ValueError as exc:
        raise InvalidArgumentError("points must share one dimension") from exc
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim > 2:
        x = x.reshape(x.shape[0], -1)
    if x.shape[0] == 0:
        raise InvalidArgumentError("need at least one point")
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    # cancellation in the Gram expansion leaves tiny asymmetric residue
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d, metric)


def cross_distances(a, b):
    """Euclidean distances between rows of ``a`` and rows of ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise InvalidArgumentError(
            f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    d2 = (np.einsum("ij,ij->i", a, a)[:, None] + np.einsum("ij,ij->i", b, b)[None, :]
          - 2.0 * (a @ b.T))
    return np.sqrt(np.maximum(d2, 0.0))


def knn_graph(D, k):
    """Keep each point's ``k`` nearest neighbours and symmetrise by union.

    Ties are broken toward the lower index. An edge survives if either
    endpoint selected the other.
    """
    d = D.d if isinstance(D, DistanceMatrix) else np.asarray(D, dtype=float)
    n = d.shape[0]
    if int(k) != k or not 1 <= k <= n - 1:
        raise InvalidArgumentError(f"k must lie in [1, {n - 1}], got {k}")
    k = int(k)
    masked = d.copy()
    np.fill_diagonal(masked, np.inf)
    # stable sort keeps the lower index first among equal distances
    order = np.argsort(masked, axis=1, kind="stable")[:, :k]
    keep = np.zeros((n, n), dtype=bool)
    keep[np.repeat(np.arange(n), k), order.ravel()] = True
    keep |= keep.T
    adjacency = np.where(keep, d, np.inf)
    np.fill_diagonal(adjacency, 0.0)
    adjacency.setflags(write=False)
    return KnnGraph(adjacency, k)


def _initial_dist(G):
    adjacency = G.adjacency if isinstance(G, KnnGraph) else np.asarray(G, dtype=float)
    dist = np.ascontiguousarray(adjacency, dtype=float).copy()
    np.fill_diagonal(dist, 0.0)
    return dist


def floyd_warshall(G):
    """All-pairs shortest paths by the classic triple loop.

    Every vertex serves as an intermediate. Disconnected pairs stay ``inf``.
    """
    dist = _initial_dist(G)
    _kernels.floyd_warshall_inplace(dist)
    return DistanceMatrix(dist, "geodesic")


def floyd_warshall_matrix_form(G, passes=None):
    """Shortest paths by whole-matrix relaxation through the first ``passes`` vertices.

    ``passes=None`` means all ``n`` vertices, giving true shortest paths.
    Smaller values only admit paths whose interior vertices have index
    below ``passes``; ``passes=k`` reproduces the truncated loop that runs
    the intermediate index only up to the neighbour count.
    """
    dist = _initial_dist(G)
    n = dist.shape[0]
    if passes is None:
        passes = n
    if int(passes) != passes or not 1 <= passes <= n:
        raise InvalidArgumentError(f"passes must lie in [1, {n}], got {passes}")
    _kernels.relax_through_inplace(dist, np.arange(int(passes), dtype=np.intp))
    return DistanceMatrix(dist, "geodesic")


def geodesic_distances(points, k, passes=None):
    """Pairwise Euclidean distances -> k-NN graph -> shortest paths."""
    graph = knn_graph(pairwise_distances(points), k)
    if passes is None:
        return floyd_warshall(graph)
    return floyd_warshall_matrix_form(graph, passes)
