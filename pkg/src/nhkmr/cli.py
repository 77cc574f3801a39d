"""Command-line interface.

Subcommands: ``generate``, ``propagate``, ``train``, ``sweep``, ``boundary``.
Exit status is 0 on success, 2 on invalid arguments and 1 on numerical
failure. Outputs are written only after every argument has been validated
and the computation has finished.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import experiments
from .datasets import GENERATORS, LabeledDataset, label_k_per_class, load_idx, select_digits
from .diffusion import (PropagationState, contiguity_violations, diffusion_operator,
                        propagation_trace)
from .errors import NumericalFailureError
from .evaluation import DEFAULT_COUNTS, boundary_grid, error_rate, padded_bounds, sweep_labeled_counts
from .solvers import MODELS, Classifier, ModelParams

log = logging.getLogger("nhkmr")

PRESETS = {
    "default": ModelParams(),
    "synthetic": experiments.SYNTHETIC_PARAMS,
    "mnist": experiments.MNIST_PARAMS,
}
DEFAULT_NOISE = {"two-moons": 0.05, "ring": 0.05, "two-clusters": 0.5, "spiral": 0.0}

# flag dest -> ModelParams field
PARAM_FLAGS = {
    "gamma_a": "gamma_A",
    "gamma_i": "gamma_I",
    "epsilon": "epsilon",
    "kernel_epsilon": "kernel_epsilon",
    "steps": "diffusion_steps",
    "knn": "knn_k",
    "tau": "tau",
    "ridge_jitter": "ridge_jitter",
    "steps_per_unit": "steps_per_unit",
    "metric": "metric",
    "passes": "passes",
    "epsilon_rule": "epsilon_rule",
}


class UsageError(ValueError):
    pass


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_dataset_args(p, labels=True):
    g = p.add_argument_group("dataset")
    g.add_argument("--dataset", default="two-moons",
                   choices=sorted(GENERATORS) + ["csv", "mnist"])
    g.add_argument("--n", type=int, default=400, help="points for generated sets")
    g.add_argument("--noise", type=float, default=None)
    g.add_argument("--turns", type=float, default=3.0, help="spiral turns")
    g.add_argument("--data", help="CSV written by 'generate' (--dataset csv)")
    g.add_argument("--images", help="IDX3 image file (--dataset mnist)")
    g.add_argument("--labels", help="IDX1 label file (--dataset mnist)")
    g.add_argument("--digits", type=_int_list, default=[0, 8])
    g.add_argument("--train-per-class", type=int, default=200)
    g.add_argument("--test-per-class", type=int, default=50)
    if labels:
        g.add_argument("--labels-per-class", type=int, default=1,
                       help="labels revealed per class; 0 keeps the file's labels")


def _add_param_args(p):
    g = p.add_argument_group("model parameters")
    g.add_argument("--preset", choices=sorted(PRESETS), default="default",
                   help="base parameter set; explicit flags override it")
    g.add_argument("--gamma-a", type=float)
    g.add_argument("--gamma-i", type=float)
    g.add_argument("--epsilon", type=float, help="diffusion kernel width")
    g.add_argument("--kernel-epsilon", type=float, help="RKHS kernel width")
    g.add_argument("--steps", type=int, help="diffusion steps")
    g.add_argument("--knn", type=int)
    g.add_argument("--tau", type=float)
    g.add_argument("--ridge-jitter", type=float)
    g.add_argument("--steps-per-unit", type=int)
    g.add_argument("--metric", choices=["geodesic", "euclidean"])
    g.add_argument("--passes", type=int, help="Floyd-Warshall intermediates (default all)")
    g.add_argument("--epsilon-rule", choices=["median", "knn"])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nhkmr", description="Neumann heat kernel manifold regularization")
    parser.add_argument("--config", help="key=value file supplying flag defaults")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("-v", "--verbose", action="store_true")
    # repeated on every subcommand so they may follow it; SUPPRESS keeps the
    # top-level value when the flag is absent
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic dataset as CSV")
    _add_dataset_args(p)
    p.set_defaults(labels_per_class=0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("propagate", parents=[common], help="trace clamped label propagation")
    _add_dataset_args(p)
    _add_param_args(p)
    p.add_argument("--clamp", type=_int_list,
                   help="indices clamped to +1 (default: the middle point for spirals)")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("train", parents=[common], help="fit a model and save it as JSON")
    _add_dataset_args(p)
    _add_param_args(p)
    p.add_argument("--model", choices=sorted(MODELS), default="nhkrls")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("sweep", parents=[common], help="error versus labeled count")
    _add_dataset_args(p, labels=False)
    _add_param_args(p)
    p.add_argument("--models", default="nhkrls,laprls,ls")
    p.add_argument("--counts", type=_int_list, default=list(DEFAULT_COUNTS))
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--record-time", action="store_true",
                   help="fill the seconds column (makes output run-dependent)")
    p.add_argument("-o", "--output", required=True, help=".csv or .json")

    p = sub.add_parser("boundary", parents=[common], help="classify random points in the plane")
    _add_dataset_args(p)
    _add_param_args(p)
    p.add_argument("--model", choices=sorted(MODELS), default="nhkrls")
    p.add_argument("--model-file", help="JSON from 'train' instead of fitting here")
    p.add_argument("--samples", type=int, default=6000)
    p.add_argument("--bounds", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("-o", "--output", required=True)
    return parser


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    values = read_config(known.config)
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in parser._actions + sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("config", "help", "command"):
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
        else:
            value = action.type(raw) if action.type else raw
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config {key}: {value!r} not in {sorted(action.choices)}")
        defaults[key] = value
    top = {k: v for k, v in defaults.items() if k in ("seed", "verbose")}
    parser.set_defaults(**top)
    sub.set_defaults(**{k: v for k, v in defaults.items() if k not in top})
    return parser.parse_args(argv)


# -- datasets --------------------------------------------------------------

def read_dataset_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[-2:] != ["label", "true_class"]:
        raise UsageError(f"{path}: expected columns x1..xn,label,true_class")
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return LabeledDataset(data[:, :-2], data[:, -2], data[:, -1].astype(int))


def write_dataset_csv(ds):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(ds.dim)] + ["label", "true_class"])
    classes = ds.classes if ds.classes is not None else np.zeros(len(ds), dtype=int)
    for x, lab, c in zip(ds.points, ds.labels, classes):
        writer.writerow([repr(float(v)) for v in x] + [int(lab), int(c)])
    return buf.getvalue()


def load_dataset(args):
    """Return ``(train, test_points, test_classes)``; the test part may be None."""
    if args.dataset == "csv":
        if not args.data:
            raise UsageError("--dataset csv needs --data")
        return read_dataset_csv(args.data), None, None
    if args.dataset == "mnist":
        if not (args.images and args.labels):
            raise UsageError("--dataset mnist needs --images and --labels")
        if len(args.digits) != 2:
            raise UsageError("--digits must name two digits")
        X, y = load_idx(args.images, args.labels)
        Xtr, ytr = select_digits(X, y, args.digits, args.train_per_class)
        test = (None, None)
        if args.test_per_class > 0:
            test = select_digits(X, y, args.digits, args.test_per_class,
                                 offset=args.train_per_class)
        # the first listed digit is the positive class
        ytr_bin = np.where(ytr == args.digits[0], 0, 1)
        yte_bin = None if test[1] is None else np.where(test[1] == args.digits[0], 0, 1)
        return LabeledDataset(Xtr, np.zeros(Xtr.shape[0]), ytr_bin), test[0], yte_bin
    gen = GENERATORS[args.dataset]
    noise = DEFAULT_NOISE[args.dataset] if args.noise is None else args.noise
    if args.dataset == "spiral":
        ds = gen(args.n, args.turns, args.seed, noise=noise)
    else:
        ds = gen(args.n, noise, args.seed)
    return ds, None, None


def apply_labels(ds, args):
    k = getattr(args, "labels_per_class", 0)
    if not k:
        return ds
    return label_k_per_class(ds, ds.classes, k, args.seed)


def model_params(args):
    base = PRESETS[args.preset]
    overrides = {field: getattr(args, flag) for flag, field in PARAM_FLAGS.items()
                 if getattr(args, flag, None) is not None}
    return replace(base, **overrides)


# -- output ----------------------------------------------------------------

def write_atomic(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _check_output_dir(path):
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise UsageError(f"output directory {parent} does not exist")


def classifier_to_json(clf, name, params):
    payload = {
        "model": name,
        "params": asdict(params) if params is not None else None,
        "alpha": clf.alpha.tolist(),
        "epsilon": clf.epsilon,
        "support_points": clf.support_points.tolist(),
        "weights": None if clf.weights is None else clf.weights.tolist(),
        "intercept": clf.intercept,
        "meta": clf.meta,
    }
    return json.dumps(payload, sort_keys=True) + "\n"


def classifier_from_json(text):
    obj = json.loads(text)
    weights = None if obj["weights"] is None else np.array(obj["weights"], dtype=float)
    return Classifier(np.array(obj["alpha"], dtype=float),
                      np.array(obj["support_points"], dtype=float).reshape(
                          len(obj["support_points"]), -1),
                      obj["epsilon"], weights, obj["intercept"], obj.get("meta", {}))


# -- commands --------------------------------------------------------------

def cmd_generate(args):
    if args.dataset in ("csv", "mnist"):
        raise UsageError("generate only writes synthetic datasets")
    ds = apply_labels(load_dataset(args)[0], args)
    write_atomic(args.output, write_dataset_csv(ds))
    print(f"wrote {len(ds)} points to {args.output}")


def cmd_propagate(args):
    params = model_params(args)
    ds, _, _ = load_dataset(args)
    if args.clamp:
        labels = np.zeros(len(ds))
        if min(args.clamp) < 0 or max(args.clamp) >= len(ds):
            raise UsageError("clamp index out of range")
        labels[args.clamp] = 1.0
    elif args.dataset == "spiral":
        labels = np.zeros(len(ds))
        labels[len(ds) // 2] = 1.0
    else:
        labels = apply_labels(ds, args).labels
    P = diffusion_operator(ds.points, params.metric, params.knn_k, params.epsilon,
                           params.steps_per_unit, params.passes, params.epsilon_rule)
    trace = propagation_trace(P, PropagationState.from_labels(labels), params.diffusion_steps)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("step", "index", "u"))
    summary = []
    for state in trace:
        for i, v in enumerate(state.u):
            writer.writerow([state.t, i, repr(float(v))])
        gaps = contiguity_violations(state.u)
        summary.append((state.t, int(np.count_nonzero(state.u)), gaps))
    write_atomic(args.output, buf.getvalue())
    for t, colored, gaps in summary:
        flag = "contiguous" if gaps == 0 else f"NON-CONTIGUOUS ({gaps} gaps)"
        print(f"step {t}: {colored} colored, {flag}")


def _fit(args, ds, params):
    return MODELS[args.model](ds, params)


def cmd_train(args):
    params = model_params(args)
    ds, Xte, yte = load_dataset(args)
    ds = apply_labels(ds, args)
    clf = _fit(args, ds, params)
    write_atomic(args.output, classifier_to_json(clf, args.model, params))
    if ds.classes is not None:
        truth = np.where(ds.classes == ds.classes.min(), 1, -1)
        print(f"training error: {error_rate(clf.predict_sign(ds.points), truth):.4f}")
    if Xte is not None:
        truth = np.where(yte == 0, 1, -1)
        print(f"test error: {error_rate(clf.predict_sign(Xte), truth):.4f}")


def cmd_sweep(args):
    params = model_params(args)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = [m for m in models if m not in MODELS]
    if unknown or not models:
        raise UsageError(f"unknown models {unknown}; choose from {sorted(MODELS)}")
    suffix = Path(args.output).suffix.lower()
    if suffix not in (".csv", ".json"):
        raise UsageError("sweep output must end in .csv or .json")
    ds, Xte, yte = load_dataset(args)
    result = sweep_labeled_counts(ds, ds.classes, models, args.counts, args.trials,
                                  args.seed, params, Xte, yte)
    text = (result.to_json(args.record_time) if suffix == ".json"
            else result.to_csv(args.record_time))
    write_atomic(args.output, text)
    for model, row in result.table().items():
        print(model, " ".join(f"{c}:{e:.4f}" for c, e in row.items()))


def cmd_boundary(args):
    params = model_params(args)
    ds, _, _ = load_dataset(args)
    if args.model_file:
        clf = classifier_from_json(Path(args.model_file).read_text())
    else:
        clf = _fit(args, apply_labels(ds, args), params)
    bounds = args.bounds if args.bounds else padded_bounds(ds.points)
    grid = boundary_grid(clf, bounds, args.samples, args.seed)
    write_atomic(args.output, grid.to_csv())
    print(f"wrote {grid.points.shape[0]} samples to {args.output}")


COMMANDS = {
    "generate": cmd_generate,
    "propagate": cmd_propagate,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "boundary": cmd_boundary,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except (OSError, ValueError, argparse.ArgumentTypeError) as exc:
        print(f"nhkmr: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse usage errors and --help
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _check_output_dir(args.output)
        COMMANDS[args.command](args)
    except NumericalFailureError as exc:
        print(f"nhkmr: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"nhkmr: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
