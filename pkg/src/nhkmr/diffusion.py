"""Gaussian kernels, diffusion transition matrices and clamped label propagation.

A transition matrix ``P`` is the row-normalised kernel matrix. One diffusion
step applies ``P`` ``steps_per_unit`` times (the integer stand-in for the
power ``1/epsilon``) and then re-imposes the clamped labels.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError
from .metricspace import DistanceMatrix, geodesic_distances, pairwise_distances

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    K: np.ndarray
    epsilon: float
    metric: str = "euclidean"


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    P: np.ndarray
    steps_per_unit: int = 1

    @property
    def n(self):
        return self.P.shape[0]


@dataclass(frozen=True, eq=False)
class PropagationState:
    """Label field ``u`` with clamped entries ``u[clamp_idx] == clamp_values``."""

    u: np.ndarray
    clamp_idx: np.ndarray
    clamp_values: np.ndarray
    t: int = 0

    @classmethod
    def from_labels(cls, labels):
        """Start from a ±1/0 label vector, clamping the nonzero entries."""
        labels = np.asarray(labels, dtype=float)
        idx = np.flatnonzero(labels)
        return cls(labels.copy(), idx, labels[idx].copy(), 0)


def _distances(D):
    if isinstance(D, DistanceMatrix):
        return D.d, D.metric
    return np.asarray(D, dtype=float), "euclidean"


def gaussian_kernel_matrix(D, epsilon):
    """``K[i, j] = exp(-d(i, j)**2 / epsilon)``; infinite distances give 0."""
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be > 0, got {epsilon}")
    d, metric = _distances(D)
    with np.errstate(invalid="ignore"):
        K = np.exp(-(d * d) / epsilon)
    K[np.isinf(d)] = 0.0
    np.fill_diagonal(K, 1.0)
    return KernelMatrix(K, float(epsilon), metric)


def median_epsilon(D):
    """Median of the finite off-diagonal squared distances."""
    d, _ = _distances(D)
    n = d.shape[0]
    if n < 2:
        raise InvalidArgumentError("need at least two points")
    off = d[~np.eye(n, dtype=bool)]
    off = off[np.isfinite(off)]
    if off.size == 0 or not np.any(off > 0):
        raise DegenerateInputError("all pairwise distances are zero or infinite")
    return float(np.median(off * off))


def knn_median_epsilon(D, k):
    """Median squared distance from each point to its ``k`` nearest neighbours.

    A local scale: for graph-based geodesics these are the edge lengths.
    """
    d, _ = _distances(D)
    n = d.shape[0]
    if int(k) != k or not 1 <= k <= n - 1:
        raise InvalidArgumentError(f"k must lie in [1, {n - 1}], got {k}")
    masked = d.copy()
    np.fill_diagonal(masked, np.inf)
    near = np.sort(masked, axis=1)[:, :int(k)]
    near = near[np.isfinite(near)]
    if near.size == 0 or not np.any(near > 0):
        raise DegenerateInputError("all neighbour distances are zero")
    return float(np.median(near * near))


EPSILON_RULES = ("median", "knn")


def default_steps_per_unit(epsilon):
    return max(1, int(round(1.0 / epsilon)))


def transition_matrix(K, steps_per_unit=None):
    """Row-normalise a kernel matrix into a Markov matrix.

    ``steps_per_unit`` defaults to ``max(1, round(1 / epsilon))``.
    """
    k = K.K if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    if steps_per_unit is None:
        steps_per_unit = default_steps_per_unit(K.epsilon) if isinstance(K, KernelMatrix) else 1
    if int(steps_per_unit) != steps_per_unit or steps_per_unit < 1:
        raise InvalidArgumentError(f"steps_per_unit must be >= 1, got {steps_per_unit}")
    degree = k.sum(axis=1)
    if np.any(degree <= 0):
        raise DegenerateInputError("kernel matrix has a zero row")
    return TransitionMatrix(k / degree[:, None], int(steps_per_unit))


def diffusion_operator(points, metric="geodesic", knn_k=10, epsilon=None,
                       steps_per_unit=None, passes=None, epsilon_rule="median"):
    """Build ``P`` from raw points in one go.

    ``metric='geodesic'`` runs shortest paths on the ``knn_k`` graph,
    ``'euclidean'`` uses straight-line distances. ``epsilon=None`` picks the
    width from whichever distances were computed: ``epsilon_rule='median'``
    uses :func:`median_epsilon`, ``'knn'`` uses :func:`knn_median_epsilon`.
    """
    if metric == "geodesic":
        D = geodesic_distances(points, knn_k, passes)
    elif metric in ("euclidean", "frobenius"):
        D = pairwise_distances(points, metric)
    else:
        raise InvalidArgumentError(f"unknown metric {metric!r}")
    if epsilon is None:
        if epsilon_rule == "median":
            epsilon = median_epsilon(D)
        elif epsilon_rule == "knn":
            epsilon = knn_median_epsilon(D, knn_k)
        else:
            raise InvalidArgumentError(f"unknown epsilon rule {epsilon_rule!r}")
    return transition_matrix(gaussian_kernel_matrix(D, epsilon), steps_per_unit)


def propagate(P, state, steps):
    """Run ``steps`` clamped diffusion steps and return the new state."""
    p = P.P
    m = P.steps_per_unit
    if int(steps) != steps or steps < 0:
        raise InvalidArgumentError(f"steps must be a nonnegative count, got {steps}")
    if state.u.shape != (p.shape[0],):
        raise InvalidArgumentError("state and transition matrix sizes differ")
    idx = np.asarray(state.clamp_idx, dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= p.shape[0]):
        raise InvalidArgumentError("clamp index out of range")
    u = np.array(state.u, dtype=float)
    for _ in range(int(steps)):
        for _ in range(m):
            u = p @ u
        u[idx] = state.clamp_values
    return replace(state, u=u, t=state.t + int(steps))


def propagation_trace(P, state, steps):
    """States after 0, 1, ..., ``steps`` diffusion steps."""
    trace = [state]
    for _ in range(int(steps)):
        trace.append(propagate(P, trace[-1], 1))
    return trace


def relabel_from_propagation(state, tau=0.5):
    """Label every point with ``|u| >= tau`` by the sign of ``u``.

    Clamped points keep their labels; the rest stay 0. Returns a label vector.
    """
    if not 0 < tau < 1:
        raise InvalidArgumentError(f"tau must lie in (0, 1), got {tau}")
    u = state.u
    labels = np.where(np.abs(u) >= tau, np.sign(u), 0.0)
    labels[state.clamp_idx] = state.clamp_values
    return labels


def contiguity_violations(u, threshold=0.0):
    """Count the gaps in the set ``{i : |u[i]| > threshold}`` along index order.

    Returns the number of uncoloured indices lying strictly between the first
    and last coloured one; zero means the coloured set is a contiguous run.
    """
    colored = np.flatnonzero(np.abs(np.asarray(u)) > threshold)
    if colored.size == 0:
        return 0
    return int(colored[-1] - colored[0] + 1 - colored.size)
