"""Error rates, labeled-count sweeps and decision-boundary samples."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .datasets import label_k_per_class
from .errors import InvalidArgumentError
from .solvers import MODELS

DEFAULT_COUNTS = tuple(2 ** i for i in range(1, 9))
SWEEP_HEADER = ("model", "count", "trial", "error", "seconds")


def error_rate(predictions, truths):
    predictions = np.asarray(predictions)
    truths = np.asarray(truths)
    if predictions.shape != truths.shape or predictions.size == 0:
        raise InvalidArgumentError("need equal, nonzero numbers of predictions and truths")
    return float(np.mean(predictions != truths))


@dataclass(frozen=True)
class SweepRow:
    model: str
    count: int
    trial: int
    error: float
    seconds: float | None = None


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def mean_error(self, model, count):
        errs = [r.error for r in self.rows if r.model == model and r.count == count]
        if not errs:
            raise KeyError((model, count))
        return float(np.mean(errs))

    def table(self):
        """``{model: {count: mean error}}``."""
        out = {}
        for r in self.rows:
            out.setdefault(r.model, {})
        for model in out:
            counts = sorted({r.count for r in self.rows if r.model == model})
            out[model] = {c: self.mean_error(model, c) for c in counts}
        return out

    def errors(self):
        """Rows without timings, for comparing runs."""
        return [(r.model, r.count, r.trial, r.error) for r in self.rows]

    def to_csv(self, with_time=False):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for r in self.rows:
            seconds = f"{r.seconds:.6f}" if with_time and r.seconds is not None else ""
            writer.writerow([r.model, r.count, r.trial, repr(r.error), seconds])
        return buf.getvalue()

    def to_json(self, with_time=False):
        rows = []
        for r in self.rows:
            row = asdict(r)
            if not with_time:
                row["seconds"] = None
            rows.append(row)
        return json.dumps({"rows": rows, "mean_error": {
            m: {str(c): e for c, e in t.items()} for m, t in self.table().items()}},
            indent=2, sort_keys=True) + "\n"


def _binary_truth(classes, positive):
    return np.where(np.asarray(classes) == positive, 1, -1)


def sweep_labeled_counts(ds, truths, models, counts=DEFAULT_COUNTS, trials=1, seed=0,
                         params=None, test_points=None, test_truths=None):
    """Error of each model as the number of labels per class grows.

    For every ``(count, trial)`` one labelling is drawn with
    :func:`label_k_per_class` (seed ``seed + 1000 * trial + count``) and
    shared by all models. Errors are measured on the held-out set when given,
    otherwise on all points of ``ds``. ``models`` maps names to fit functions
    ``fit(ds, params)``, or is a sequence of names from :data:`MODELS`.
    """
    truths = np.asarray(truths)
    counts = list(counts)
    if not counts:
        raise InvalidArgumentError("counts must be nonempty")
    if int(trials) != trials or trials < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    if not isinstance(models, dict):
        models = {name: MODELS[name] for name in models}
    values, sizes = np.unique(truths, return_counts=True)
    if values.shape[0] != 2:
        raise InvalidArgumentError("sweeps need exactly two classes")
    for c in counts:
        if int(c) != c or c < 1 or c > sizes.min():
            raise InvalidArgumentError(
                f"count {c} infeasible: smallest class has {sizes.min()} points")
    positive = values[0]
    if test_points is None:
        eval_points, eval_truth = ds.points, _binary_truth(truths, positive)
    else:
        eval_points, eval_truth = test_points, _binary_truth(test_truths, positive)
    result = SweepResult()
    for count in counts:
        for trial in range(int(trials)):
            labeled = label_k_per_class(ds, truths, count, seed + 1000 * trial + count,
                                        positive_class=positive)
            for name, fit in models.items():
                start = time.perf_counter()
                clf = fit(labeled, params)
                pred = clf.predict_sign(eval_points)
                elapsed = time.perf_counter() - start
                result.rows.append(
                    SweepRow(name, int(count), trial, error_rate(pred, eval_truth), elapsed))
    return result


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    points: np.ndarray
    signs: np.ndarray
    bounds: tuple

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("x1", "x2", "prediction"))
        for (x1, x2), s in zip(self.points, self.signs):
            writer.writerow([repr(float(x1)), repr(float(x2)), int(s)])
        return buf.getvalue()


def boundary_grid(c, bounds, n_samples=6000, seed=0):
    """Classify ``n_samples`` uniform random points inside ``bounds``.

    ``bounds`` is ``(xmin, xmax, ymin, ymax)``.
    """
    if c.dim != 2:
        raise InvalidArgumentError(f"boundary sampling needs 2-D features, got {c.dim}")
    xmin, xmax, ymin, ymax = map(float, bounds)
    if not (xmin < xmax and ymin < ymax):
        raise InvalidArgumentError(f"empty bounds {bounds}")
    if int(n_samples) != n_samples or n_samples < 1:
        raise InvalidArgumentError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(xmin, xmax, int(n_samples)),
                           rng.uniform(ymin, ymax, int(n_samples))])
    return BoundaryGrid(pts, c.predict_sign(pts), (xmin, xmax, ymin, ymax))


def padded_bounds(points, pad=0.5):
    p = np.asarray(points)
    return (p[:, 0].min() - pad, p[:, 0].max() + pad, p[:, 1].min() - pad, p[:, 1].max() + pad)
