"""One-vs-rest training over the ten digits and argmax prediction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import LabeledDataset, label_k_per_class
from .errors import InvalidArgumentError

N_CLASSES = 10


@dataclass(frozen=True, eq=False)
class OvrModel:
    """``classifiers[i]`` scores membership of digit ``i``."""

    classifiers: tuple

    def __post_init__(self):
        dims = {c.dim for c in self.classifiers}
        if len(dims) > 1:
            raise InvalidArgumentError(f"classifiers disagree on dimension: {sorted(dims)}")

    @property
    def dim(self):
        return self.classifiers[0].dim

    def scores(self, X):
        """Raw scores, one column per digit."""
        return np.column_stack([c.decision_function(X) for c in self.classifiers])


def build_ovr_subsets(points, classes, positives=950, seed=0):
    """Balanced one-vs-rest training sets, one per digit.

    Each subset has ``positives`` examples of its digit and as many
    negatives spread over the other nine digits: ``positives // 9`` of each
    and the remainder on the last one (950 gives 105 each and 110 of the
    last). Returns ``(subsets, digit_of_each_point)``; every subset's labels
    are zero and its ``classes`` mark the positive digit as 1, others as 0.
    """
    classes = np.asarray(classes)
    points = np.asarray(points, dtype=float)
    rng = np.random.default_rng(seed)
    base = positives // (N_CLASSES - 1)
    subsets, digits = [], []
    for d in range(N_CLASSES):
        others = [o for o in range(N_CLASSES) if o != d]
        counts = {o: base for o in others}
        counts[others[-1]] = positives - base * (len(others) - 1)
        idx = [_draw(rng, classes, d, positives)]
        idx += [_draw(rng, classes, o, counts[o]) for o in others]
        idx = np.concatenate(idx)
        binary = (classes[idx] == d).astype(int)
        subsets.append(LabeledDataset(points[idx], np.zeros(idx.shape[0]), binary))
        digits.append(classes[idx])
    return subsets, digits


def _draw(rng, classes, digit, count):
    members = np.flatnonzero(classes == digit)
    if members.shape[0] < count:
        raise InvalidArgumentError(
            f"digit {digit} has {members.shape[0]} examples, {count} requested")
    return np.sort(rng.choice(members, size=count, replace=False))


def label_ovr_subsets(subsets, k_per_class, seed=0):
    """Reveal ``k_per_class`` positive and negative labels in every subset."""
    return [label_k_per_class(s, s.classes, k_per_class, seed + i, positive_class=1)
            for i, s in enumerate(subsets)]


def ovr_train(subsets, params, fit_fn):
    """Fit one binary classifier per digit, in digit order."""
    if len(subsets) != N_CLASSES:
        raise InvalidArgumentError(f"need {N_CLASSES} subsets, got {len(subsets)}")
    return OvrModel(tuple(fit_fn(s, params) for s in subsets))


def ovr_predict(m, x):
    """Digit with the highest score; ties go to the lowest digit."""
    return int(np.argmax(m.scores(np.asarray(x, dtype=float).ravel())[0]))


def ovr_predict_many(m, X):
    return np.argmax(m.scores(X), axis=1)
