"""Reference configurations for the synthetic, spiral and MNIST experiments.

Kernel widths and relabelling thresholds were fixed once on our generators
and are not tuned per run.
"""
from __future__ import annotations

import numpy as np

from .datasets import (LabeledDataset, generate_ring, generate_spiral,
                       generate_two_clusters, generate_two_moons,
                       label_k_per_class, load_idx, select_digits)
from .diffusion import PropagationState, diffusion_operator, propagation_trace
from .solvers import ModelParams, fit_laprls, fit_nhkrls

SYNTHETIC_PARAMS = ModelParams(
    gamma_A=0.00025, gamma_I=10.0, kernel_epsilon=0.2, knn_k=8,
    diffusion_steps=1, tau=0.001)

MNIST_PARAMS = ModelParams(
    gamma_A=0.00025, gamma_I=0.925, diffusion_steps=10, knn_k=5,
    tau=0.01, epsilon_rule="knn")

SYNTHETIC_SETS = {
    "two-moons": (generate_two_moons, 0.05),
    "ring": (generate_ring, 0.05),
    "two-clusters": (generate_two_clusters, 0.5),
}

# spiral diffusion: one application of P per step so steps stay comparable
SPIRAL_CONFIG = dict(n=300, turns=3.0, knn_k=4, epsilon=0.01, steps_per_unit=1)


def binary_truth(ds):
    """Ground truth as ±1 with class 0 positive."""
    return np.where(ds.classes == ds.classes.min(), 1, -1)


def accuracy(clf, ds):
    return float(np.mean(clf.predict_sign(ds.points) == binary_truth(ds)))


def synthetic_comparison(name, seed=0, n=400, labels_per_class=1, params=SYNTHETIC_PARAMS):
    """Train NHKRLS and LapRLS on one labelling; return their training accuracies."""
    gen, noise = SYNTHETIC_SETS[name]
    ds = gen(n, noise, seed)
    ds = label_k_per_class(ds, ds.classes, labels_per_class, seed)
    return accuracy(fit_nhkrls(ds, params), ds), accuracy(fit_laprls(ds, params), ds)


def spiral_trace(metric, steps, seed=0, config=SPIRAL_CONFIG):
    """Propagate a single +1 clamp from the middle of the spiral."""
    ds = generate_spiral(config["n"], config["turns"], seed)
    P = diffusion_operator(ds.points, metric, config["knn_k"], config["epsilon"],
                           config["steps_per_unit"])
    labels = np.zeros(len(ds))
    labels[len(ds) // 2] = 1.0
    return propagation_trace(P, PropagationState.from_labels(labels), steps)


def mnist_binary(images, labels, digits=(0, 8), train_per_class=200, test_per_class=50):
    """Disjoint train/test splits for a two-digit task, taken in file order."""
    X, y = load_idx(images, labels)
    Xtr, ytr = select_digits(X, y, digits, train_per_class)
    Xte, yte = select_digits(X, y, digits, test_per_class, offset=train_per_class)
    return LabeledDataset(Xtr, np.zeros(Xtr.shape[0]), ytr), Xte, yte
