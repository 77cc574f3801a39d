"""Synthetic point sets, MNIST IDX reading/writing and label partitions.

Every generator returns a :class:`LabeledDataset` whose labels are all zero
and whose ``classes`` array holds the ground-truth class (0 or 1) of each
point. Use :func:`label_k_per_class` to reveal a few labels.

Geometry of the synthetic sets
------------------------------
two moons
    Upper moon ``(cos t, sin t)`` for ``t`` evenly spaced on ``[0, pi]``.
    Lower moon is the upper one reflected through the origin, then shifted
    right by 0.5 and down by 0.25: ``(0.5 - cos t, -0.25 - sin t)``.
ring
    Inner circle of radius 1 and outer circle of radius 2, random angles.
two clusters
    Isotropic Gaussian blobs centred at ``(-2, 0)`` and ``(2, 0)`` whose
    standard deviation is ``noise``.
spiral
    Archimedean spiral ``r = a * theta``; returned in increasing ``theta``.
"""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (IdxConsistencyError, IdxFormatError, IdxTruncatedError,
                     InvalidArgumentError)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Points with a partial +1/-1 labelling.

    ``labels[i]`` is +1 or -1 for labeled points and 0 for unlabeled ones.
    ``classes`` optionally carries ground truth (any integer coding).
    """

    points: np.ndarray
    labels: np.ndarray
    classes: np.ndarray | None = None
    labeled_idx: np.ndarray = field(init=False)
    unlabeled_idx: np.ndarray = field(init=False)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] == 0:
            raise InvalidArgumentError("points must be a nonempty 2-D array")
        if not np.all(np.isfinite(points)):
            raise InvalidArgumentError("points must be finite")
        labels = np.asarray(self.labels, dtype=float)
        if labels.shape != (points.shape[0],):
            raise InvalidArgumentError("one label per point is required")
        if not np.all(np.isin(labels, (-1.0, 0.0, 1.0))):
            raise InvalidArgumentError("labels must lie in {-1, 0, +1}")
        classes = self.classes
        if classes is not None:
            classes = np.asarray(classes)
            if classes.shape != labels.shape:
                raise InvalidArgumentError("one class per point is required")
            classes.setflags(write=False)
        points.setflags(write=False)
        labels.setflags(write=False)
        labeled = np.flatnonzero(labels != 0)
        unlabeled = np.flatnonzero(labels == 0)
        labeled.setflags(write=False)
        unlabeled.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "labeled_idx", labeled)
        object.__setattr__(self, "unlabeled_idx", unlabeled)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def with_labels(self, labels):
        return LabeledDataset(self.points, labels, self.classes)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        classes = None if self.classes is None else self.classes[idx]
        return LabeledDataset(self.points[idx], self.labels[idx], classes)


def _check_even(n):
    if int(n) != n or n < 2 or n % 2:
        raise InvalidArgumentError(f"n must be an even count >= 2, got {n}")
    return int(n)


def _check_noise(noise):
    if not noise >= 0:
        raise InvalidArgumentError(f"noise must be >= 0, got {noise}")


def _two_class(points, half):
    classes = np.repeat([0, 1], half)
    return LabeledDataset(points, np.zeros(2 * half), classes)


def generate_two_moons(n=400, noise=0.1, seed=0):
    """Two interleaving unit half-circles, ``n/2`` points each."""
    half = _check_even(n) // 2
    _check_noise(noise)
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, np.pi, half)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([0.5 - np.cos(t), -0.25 - np.sin(t)])
    points = np.vstack([upper, lower])
    if noise > 0:
        points = points + rng.normal(scale=noise, size=points.shape)
    return _two_class(points, half)


def generate_ring(n=400, noise=0.1, seed=0):
    """Inner circle of radius 1 and outer circle of radius 2."""
    half = _check_even(n) // 2
    _check_noise(noise)
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0.0, 2 * np.pi, size=2 * half)
    radii = np.repeat([1.0, 2.0], half)
    points = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    if noise > 0:
        points = points + rng.normal(scale=noise, size=points.shape)
    return _two_class(points, half)


def generate_two_clusters(n=400, noise=0.5, seed=0):
    """Gaussian blobs at (-2, 0) and (2, 0) with standard deviation ``noise``."""
    half = _check_even(n) // 2
    _check_noise(noise)
    rng = np.random.default_rng(seed)
    centres = np.repeat([[-2.0, 0.0], [2.0, 0.0]], half, axis=0)
    points = centres + rng.normal(scale=noise, size=centres.shape)
    return _two_class(points, half)


def generate_spiral(n=300, turns=3.0, seed=0, noise=0.0, pitch=1.0):
    """Archimedean spiral with ``pitch`` spacing between successive turns.

    Parameters are spaced so that consecutive points are roughly equidistant
    along the curve (``theta`` proportional to ``sqrt`` of the index). The
    returned order is the order along the curve, starting at the centre.
    All points belong to class 0.
    """
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")
    if not turns > 0:
        raise InvalidArgumentError(f"turns must be > 0, got {turns}")
    _check_noise(noise)
    n = int(n)
    rng = np.random.default_rng(seed)
    theta = 2 * np.pi * turns * np.sqrt(np.linspace(0.0, 1.0, n))
    r = pitch * theta / (2 * np.pi)
    points = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    if noise > 0:
        points = points + rng.normal(scale=noise, size=points.shape)
    return LabeledDataset(points, np.zeros(n), np.zeros(n, dtype=int))


GENERATORS = {
    "two-moons": generate_two_moons,
    "ring": generate_ring,
    "two-clusters": generate_two_clusters,
    "spiral": generate_spiral,
}


# -- IDX ------------------------------------------------------------------

def _read_bytes(path):
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_header(raw, path, expected, ndim, kind):
    if len(raw) < 4:
        raise IdxTruncatedError(f"{path}: truncated IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic != expected:
        raise IdxFormatError(
            f"{path}: expected {kind} magic 0x{expected:08x}, got 0x{magic:08x}")
    need = 4 * (1 + ndim)
    if len(raw) < need:
        raise IdxTruncatedError(f"{path}: truncated IDX header")
    return struct.unpack(f">{ndim}I", raw[4:need]), need


def read_idx_images(path):
    raw = _read_bytes(path)
    (count, rows, cols), offset = _parse_header(raw, path, IDX_IMAGES_MAGIC, 3, "image")
    size = count * rows * cols
    if len(raw) - offset < size:
        raise IdxTruncatedError(
            f"{path}: expected {size} pixel bytes, found {len(raw) - offset}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=size, offset=offset)
    return pixels.reshape(count, rows, cols)


def read_idx_labels(path):
    raw = _read_bytes(path)
    (count,), offset = _parse_header(raw, path, IDX_LABELS_MAGIC, 1, "label")
    if len(raw) - offset < count:
        raise IdxTruncatedError(
            f"{path}: expected {count} label bytes, found {len(raw) - offset}")
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=offset).copy()


def load_idx(images_path, labels_path):
    """Read an IDX3 image file and its IDX1 label file.

    Returns ``(points, classes)`` where ``points`` has one flattened image per
    row scaled to ``[0, 1]``. Gzip-compressed files are accepted as well.
    """
    images = read_idx_images(images_path)
    classes = read_idx_labels(labels_path)
    if images.shape[0] != classes.shape[0]:
        raise IdxConsistencyError(
            f"{images.shape[0]} images but {classes.shape[0]} labels")
    points = images.reshape(images.shape[0], -1).astype(float) / 255.0
    return points, classes.astype(int)


def write_idx_images(path, images, compress=False):
    images = np.asarray(images)
    if images.ndim != 3:
        raise InvalidArgumentError("images must have shape (count, rows, cols)")
    if images.dtype != np.uint8:
        if images.min() < 0 or images.max() > 255:
            raise InvalidArgumentError("pixel values must lie in [0, 255]")
        images = images.astype(np.uint8)
    header = struct.pack(">4I", IDX_IMAGES_MAGIC, *images.shape)
    _write(path, header + images.tobytes(), compress)


def write_idx_labels(path, labels, compress=False):
    labels = np.asarray(labels).astype(np.uint8)
    header = struct.pack(">2I", IDX_LABELS_MAGIC, labels.shape[0])
    _write(path, header + labels.tobytes(), compress)


def _write(path, payload, compress):
    if compress:
        payload = gzip.compress(payload, mtime=0)
    Path(path).write_bytes(payload)


def select_digits(points, classes, digits, per_class, offset=0):
    """Take ``per_class`` examples of each digit, in file order, after skipping ``offset``.

    Handy for carving disjoint train/test splits out of one IDX file.
    """
    idx = []
    for d in digits:
        members = np.flatnonzero(classes == d)[offset:offset + per_class]
        if members.shape[0] < per_class:
            raise InvalidArgumentError(
                f"digit {d} has only {members.shape[0]} examples past offset {offset}")
        idx.append(members)
    idx = np.concatenate(idx)
    return points[idx], classes[idx]


# -- labelling ------------------------------------------------------------

def label_k_per_class(ds, true_classes, k_per_class, seed=0, positive_class=None):
    """Reveal ``k_per_class`` uniformly chosen labels in each of two classes.

    Points of ``positive_class`` get +1 and the rest -1; by default the
    smaller class value is positive (so digit 0 is +1 against digit 8).
    Every other point becomes unlabeled.
    """
    true_classes = np.asarray(true_classes)
    if true_classes.shape != (len(ds),):
        raise InvalidArgumentError("one true class per point is required")
    values = np.unique(true_classes)
    if positive_class is None:
        if values.shape[0] != 2:
            raise InvalidArgumentError(
                f"binary labelling needs exactly two classes, got {values.shape[0]}")
        positive_class = values[0]
    positive = true_classes == positive_class
    if int(k_per_class) != k_per_class or k_per_class < 1:
        raise InvalidArgumentError(f"k_per_class must be a positive count, got {k_per_class}")
    k = int(k_per_class)
    rng = np.random.default_rng(seed)
    labels = np.zeros(len(ds))
    for mask, sign in ((positive, 1.0), (~positive, -1.0)):
        members = np.flatnonzero(mask)
        if members.shape[0] < k:
            raise InvalidArgumentError(
                f"class has {members.shape[0]} members, cannot label {k}")
        chosen = rng.choice(members, size=k, replace=False)
        labels[chosen] = sign
    return LabeledDataset(ds.points, labels, ds.classes)
