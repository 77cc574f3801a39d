"""Closed-form least-squares classifiers: NHKRLS, LapRLS and plain LS.

NHKRLS and LapRLS share the normal equations

    (J K + gamma_A l I + gamma_I l / (l + u)**2 * R K) alpha = Y

with ``R = (I - P**s).T (I - P**s)`` for NHKRLS and the graph Laplacian
``L = D - W`` for LapRLS. ``J`` is the labeled-indicator diagonal and ``Y``
the zero-padded label vector. Both minimise

    (1/l) |Y - J K alpha|**2 + gamma_A alpha' K alpha
        + gamma_I / (l + u)**2 * alpha' K R K alpha

when ``K`` is invertible; :func:`regularized_loss` evaluates it.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .datasets import LabeledDataset
from .diffusion import (EPSILON_RULES, KernelMatrix, PropagationState, TransitionMatrix,
                        diffusion_operator, gaussian_kernel_matrix, median_epsilon,
                        propagate, relabel_from_propagation)
from .errors import InvalidArgumentError, NumericalFailureError
from .metricspace import cross_distances, knn_graph, pairwise_distances

log = logging.getLogger(__name__)

# reciprocal condition numbers below this are treated as singular
RCOND_LIMIT = 1e-13


@dataclass(frozen=True)
class ModelParams:
    """Hyperparameters shared by the three models.

    ``epsilon`` is the width of the diffusion kernel that builds ``P`` and
    ``kernel_epsilon`` the width of the RKHS kernel ``K``. ``epsilon=None``
    applies ``epsilon_rule`` to the diffusion distances; ``kernel_epsilon=None``
    applies the median heuristic to Euclidean distances. ``steps_per_unit=None`` means
    ``round(1 / epsilon)`` applications of ``P`` per diffusion step.
    """

    gamma_A: float = 0.00025
    gamma_I: float = 0.925
    epsilon: float | None = None
    kernel_epsilon: float | None = None
    diffusion_steps: int = 1
    knn_k: int = 5
    tau: float = 0.5
    ridge_jitter: float = 0.0
    steps_per_unit: int | None = None
    metric: str = "geodesic"
    passes: int | None = None
    epsilon_rule: str = "median"

    def __post_init__(self):
        if not self.gamma_A > 0:
            raise InvalidArgumentError(f"gamma_A must be > 0, got {self.gamma_A}")
        if not self.gamma_I >= 0:
            raise InvalidArgumentError(f"gamma_I must be >= 0, got {self.gamma_I}")
        for name in ("epsilon", "kernel_epsilon"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise InvalidArgumentError(f"{name} must be > 0, got {value}")
        if int(self.diffusion_steps) != self.diffusion_steps or self.diffusion_steps < 0:
            raise InvalidArgumentError(
                f"diffusion_steps must be a nonnegative count, got {self.diffusion_steps}")
        if int(self.knn_k) != self.knn_k or self.knn_k < 1:
            raise InvalidArgumentError(f"knn_k must be >= 1, got {self.knn_k}")
        if not 0 < self.tau < 1:
            raise InvalidArgumentError(f"tau must lie in (0, 1), got {self.tau}")
        if not self.ridge_jitter >= 0:
            raise InvalidArgumentError(f"ridge_jitter must be >= 0, got {self.ridge_jitter}")
        if self.steps_per_unit is not None and (
                int(self.steps_per_unit) != self.steps_per_unit or self.steps_per_unit < 1):
            raise InvalidArgumentError(
                f"steps_per_unit must be >= 1, got {self.steps_per_unit}")
        if self.metric not in ("geodesic", "euclidean"):
            raise InvalidArgumentError(f"metric must be geodesic or euclidean, got {self.metric!r}")
        if self.epsilon_rule not in EPSILON_RULES:
            raise InvalidArgumentError(f"unknown epsilon rule {self.epsilon_rule!r}")


@dataclass(frozen=True, eq=False)
class Classifier:
    """Kernel expansion ``f(x) = sum_i alpha_i exp(-|x_i - x|**2 / epsilon)``.

    A linear model ``f(x) = w'x + intercept`` is stored with ``weights`` set
    and ``alpha`` empty.
    """

    alpha: np.ndarray
    support_points: np.ndarray
    epsilon: float | None = None
    weights: np.ndarray | None = None
    intercept: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def is_linear(self):
        return self.weights is not None

    @property
    def dim(self):
        if self.is_linear:
            return self.weights.shape[0]
        return self.support_points.shape[1]

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim > 2:
            X = X.reshape(X.shape[0], -1)
        if X.shape[1] != self.dim:
            raise InvalidArgumentError(
                f"expected {self.dim} features, got {X.shape[1]}")
        if self.is_linear:
            return X @ self.weights + self.intercept
        d = cross_distances(X, self.support_points)
        return np.exp(-(d * d) / self.epsilon) @ self.alpha

    def predict_sign(self, X):
        return np.where(self.decision_function(X) >= 0, 1, -1)


def predict(c, x):
    """Value of the classifier at a single point."""
    return float(c.decision_function(np.asarray(x, dtype=float).ravel())[0])


def predict_sign(c, x):
    """Sign of :func:`predict`, with 0 mapped to +1."""
    return 1 if predict(c, x) >= 0 else -1


@dataclass(frozen=True, eq=False)
class PenaltyMatrix:
    M: np.ndarray
    power: int


def nhk_penalty_matrix(P, t):
    """``(I - Q).T (I - Q)`` with ``Q = P ** (t * steps_per_unit)``."""
    if int(t) != t or t < 1:
        raise InvalidArgumentError(f"t must be >= 1, got {t}")
    power = int(t) * P.steps_per_unit
    Q = np.linalg.matrix_power(P.P, power)
    A = np.eye(Q.shape[0]) - Q
    M = A.T @ A
    return PenaltyMatrix(0.5 * (M + M.T), power)


def graph_laplacian(W):
    """Unnormalised Laplacian ``D - W`` with ``D`` the row sums of ``W``."""
    W = np.asarray(W, dtype=float)
    L = -W.copy()
    np.fill_diagonal(L, 0.0)
    L[np.diag_indices_from(L)] = -L.sum(axis=1)
    return L


def knn_kernel_weights(points, k, epsilon):
    """Gaussian weights on the symmetrised k-NN graph, zero elsewhere and on the diagonal."""
    D = pairwise_distances(points)
    graph = knn_graph(D, k)
    W = np.where(graph.edges, np.exp(-(D.d * D.d) / epsilon), 0.0)
    return W


def _label_system(ds):
    l = ds.labeled_idx.shape[0]
    if l == 0:
        raise InvalidArgumentError("at least one labeled point is required")
    J = np.zeros(len(ds))
    J[ds.labeled_idx] = 1.0
    return l, J, ds.labels.copy()


def _factor(A):
    # singularity is judged by the condition estimate below, not scipy's warning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    rcond, _ = scipy.linalg.lapack.dgecon(lu, np.linalg.norm(A, 1), norm="1")
    return lu, piv, rcond


def _solve(A, Y, ridge_jitter):
    n = A.shape[0]
    lu, piv, rcond = _factor(A)
    if rcond < RCOND_LIMIT or not np.isfinite(rcond):
        if ridge_jitter > 0:
            log.warning("normal matrix ill-conditioned (rcond=%.3g); adding jitter %g",
                        rcond, ridge_jitter)
            lu, piv, rcond = _factor(A + ridge_jitter * np.eye(n))
        if rcond < RCOND_LIMIT or not np.isfinite(rcond):
            cond = np.inf if rcond == 0 else 1.0 / rcond
            raise NumericalFailureError(
                f"normal matrix is singular to working precision (condition ~ {cond:.3g})",
                condition=cond)
    return scipy.linalg.lu_solve((lu, piv), Y, check_finite=False)


def _manifold_fit(ds, K, R, params, kind):
    k = K.K if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    n = len(ds)
    if k.shape != (n, n) or R.shape != (n, n):
        raise InvalidArgumentError("matrix dimensions do not match the dataset")
    l, J, Y = _label_system(ds)
    A = J[:, None] * k + params.gamma_A * l * np.eye(n)
    if params.gamma_I:
        A += (params.gamma_I * l / n ** 2) * (R @ k)
    alpha = _solve(A, Y, params.ridge_jitter)
    epsilon = K.epsilon if isinstance(K, KernelMatrix) else None
    return Classifier(alpha, ds.points, epsilon, meta={"model": kind, "labeled": l})


def nhkrls_fit(ds, K, M, params):
    """Solve the NHKRLS normal equations for the current labelling of ``ds``."""
    R = M.M if isinstance(M, PenaltyMatrix) else np.asarray(M, dtype=float)
    return _manifold_fit(ds, K, R, params, "nhkrls")


def laprls_fit(ds, K, W, params):
    """Solve the LapRLS normal equations with ``L = D - W``."""
    return _manifold_fit(ds, K, graph_laplacian(W), params, "laprls")


def ls_fit(ds):
    """Ordinary least squares on the labeled points with an unpenalised intercept.

    Features are centred before the minimum-norm solve, so one labeled point
    yields the constant predictor equal to its label.
    """
    if ds.labeled_idx.shape[0] == 0:
        raise InvalidArgumentError("at least one labeled point is required")
    X = ds.points[ds.labeled_idx]
    y = ds.labels[ds.labeled_idx]
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    w, *_ = np.linalg.lstsq(X - x_mean, y - y_mean, rcond=None)
    return Classifier(np.empty(0), X, None, weights=w, intercept=float(y_mean - x_mean @ w),
                      meta={"model": "ls", "labeled": X.shape[0]})


def regularized_loss(alpha, ds, K, R, params):
    """The least-squares objective whose stationary point the fits return."""
    k = K.K if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    l, J, Y = _label_system(ds)
    n = len(ds)
    f = k @ alpha
    resid = Y - J * f
    return (resid @ resid / l + params.gamma_A * alpha @ f
            + params.gamma_I / n ** 2 * f @ (R @ f))


# -- end-to-end pipelines --------------------------------------------------

def rkhs_kernel(ds, params):
    D = pairwise_distances(ds.points)
    eps = params.kernel_epsilon if params.kernel_epsilon is not None else median_epsilon(D)
    return gaussian_kernel_matrix(D, eps)


def fit_nhkrls(ds, params=ModelParams()):
    """Propagate labels, relabel confident points, then solve NHKRLS.

    The diffusion matrix uses ``params.metric`` distances; the RKHS kernel
    always uses Euclidean distances so the classifier extends to new points.
    """
    P = diffusion_operator(ds.points, params.metric, params.knn_k, params.epsilon,
                           params.steps_per_unit, params.passes, params.epsilon_rule)
    state = propagate(P, PropagationState.from_labels(ds.labels), params.diffusion_steps)
    relabeled = ds.with_labels(relabel_from_propagation(state, params.tau))
    K = rkhs_kernel(ds, params)
    M = nhk_penalty_matrix(P, max(1, params.diffusion_steps))
    c = nhkrls_fit(relabeled, K, M, params)
    c.meta["propagated_labels"] = int(relabeled.labeled_idx.shape[0])
    return c


def fit_laprls(ds, params=ModelParams()):
    K = rkhs_kernel(ds, params)
    W = knn_kernel_weights(ds.points, params.knn_k, K.epsilon)
    return laprls_fit(ds, K, W, params)


def fit_ls(ds, params=None):
    return ls_fit(ds)


MODELS = {
    "nhkrls": fit_nhkrls,
    "laprls": fit_laprls,
    "ls": fit_ls,
}
