"""Dataset loading (UCI breast-cancer CSV, IDX images, CIFAR-10 binary) and
mini-batch index sampling in three modes: static, dynamic, full."""

import gzip
import os
import struct
from dataclasses import dataclass

import numpy as np

SAMPLER_MODES = ("static", "dynamic", "full")


class ParseError(ValueError):
    """File content does not match the expected format."""


class BadMagicError(ParseError):
    """Binary header magic number is wrong."""


class LengthMismatchError(ParseError):
    """Paired files disagree on the sample count."""


class BadBatchSizeError(ValueError):
    """Requested batch size is impossible for the dataset."""


class WrongModeError(RuntimeError):
    """Operation not defined for this sampler mode."""


@dataclass(frozen=True)
class Dataset:
    """Normalized train/test split: float64 inputs and targets, row per sample."""

    name: str
    train_inputs: np.ndarray
    train_targets: np.ndarray
    test_inputs: np.ndarray
    test_targets: np.ndarray

    @property
    def n_train(self):
        return self.train_inputs.shape[0]

    @property
    def n_test(self):
        return self.test_inputs.shape[0]

    @property
    def n_features(self):
        return self.train_inputs.shape[1]

    @property
    def n_outputs(self):
        return self.train_targets.shape[1]


def one_hot(labels, n_classes):
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ParseError(f"labels must lie in [0, {n_classes}), got range "
                         f"[{labels.min()}, {labels.max()}]")
    return np.eye(n_classes, dtype=np.float64)[labels]


# ---------------------------------------------------------------- breast cancer

def parse_wdbc(path):
    """Parse the UCI diagnostic breast-cancer CSV: id, M/B, 30 features per row."""
    features = []
    labels = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 32:
                raise ParseError(f"line {lineno}: expected 32 fields, got {len(fields)}")
            diag = fields[1]
            if diag not in ("M", "B"):
                raise ParseError(f"line {lineno}: diagnosis must be M or B, got {diag!r}")
            try:
                row = [float(v) for v in fields[2:]]
            except ValueError as err:
                raise ParseError(f"line {lineno}: {err}") from err
            features.append(row)
            labels.append(1.0 if diag == "M" else 0.0)
    if not features:
        raise ParseError(f"{path}: no data rows")
    return np.array(features, dtype=np.float64), np.array(labels, dtype=np.float64)


def load_wdbc(path, seed=0, train_size=400):
    """Seeded shuffle split of the breast-cancer table, features standardized
    with train-split statistics. Malignant maps to 1, benign to 0."""
    features, labels = parse_wdbc(path)
    n = features.shape[0]
    if not 0 < train_size < n:
        raise ValueError(f"train_size must be in (0, {n}), got {train_size}")
    perm = np.random.default_rng(seed).permutation(n)
    tr, te = perm[:train_size], perm[train_size:]
    mean = features[tr].mean(axis=0)
    std = features[tr].std(axis=0)
    std[std == 0.0] = 1.0
    scaled = (features - mean) / std
    return Dataset(
        name="wdbc",
        train_inputs=scaled[tr],
        train_targets=labels[tr, None],
        test_inputs=scaled[te],
        test_targets=labels[te, None],
    )


def write_wdbc_csv(path, features, diagnoses, ids=None):
    """Write rows in the UCI CSV layout; used to materialize a local copy."""
    features = np.asarray(features, dtype=np.float64)
    if ids is None:
        ids = [str(800000 + i) for i in range(features.shape[0])]
    with open(path, "w", encoding="ascii") as fh:
        for row_id, diag, row in zip(ids, diagnoses, features):
            if diag not in ("M", "B"):
                raise ValueError(f"diagnosis must be M or B, got {diag!r}")
            fh.write(",".join([str(row_id), diag] + [repr(float(v)) for v in row]))
            fh.write("\n")


# ------------------------------------------------------------------- IDX images

def _open_binary(path):
    # transparently handle gzip-compressed copies
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def read_idx_images(path):
    """Big-endian IDX image file to a (n, rows*cols) float64 array scaled to [0, 1]."""
    with _open_binary(path) as fh:
        header = fh.read(16)
        if len(header) < 16:
            raise ParseError(f"{path}: truncated header")
        magic, n, rows, cols = struct.unpack(">IIII", header)
        if magic != 2051:
            raise BadMagicError(f"{path}: expected magic 2051, got {magic}")
        raw = fh.read(n * rows * cols)
    if len(raw) != n * rows * cols:
        raise ParseError(f"{path}: expected {n * rows * cols} pixel bytes, got {len(raw)}")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(n, rows * cols)
    return pixels.astype(np.float64) / 255.0


def read_idx_labels(path):
    """Big-endian IDX label file to an int array."""
    with _open_binary(path) as fh:
        header = fh.read(8)
        if len(header) < 8:
            raise ParseError(f"{path}: truncated header")
        magic, n = struct.unpack(">II", header)
        if magic != 2049:
            raise BadMagicError(f"{path}: expected magic 2049, got {magic}")
        raw = fh.read(n)
    if len(raw) != n:
        raise ParseError(f"{path}: expected {n} label bytes, got {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def _find_file(data_dir, name):
    for candidate in (name, name + ".gz"):
        full = os.path.join(data_dir, candidate)
        if os.path.exists(full):
            return full
    raise FileNotFoundError(f"{name} not found under {data_dir}")


def load_mnist(data_dir):
    """Canonical four-file MNIST directory to a Dataset (one-hot 10-class targets)."""
    train_x = read_idx_images(_find_file(data_dir, "train-images-idx3-ubyte"))
    train_y = read_idx_labels(_find_file(data_dir, "train-labels-idx1-ubyte"))
    test_x = read_idx_images(_find_file(data_dir, "t10k-images-idx3-ubyte"))
    test_y = read_idx_labels(_find_file(data_dir, "t10k-labels-idx1-ubyte"))
    if train_x.shape[0] != train_y.shape[0]:
        raise LengthMismatchError(
            f"train images/labels disagree: {train_x.shape[0]} vs {train_y.shape[0]}")
    if test_x.shape[0] != test_y.shape[0]:
        raise LengthMismatchError(
            f"test images/labels disagree: {test_x.shape[0]} vs {test_y.shape[0]}")
    return Dataset(
        name="mnist",
        train_inputs=train_x,
        train_targets=one_hot(train_y, 10),
        test_inputs=test_x,
        test_targets=one_hot(test_y, 10),
    )


# ---------------------------------------------------------------- CIFAR-10 binary

def read_cifar_batch(path):
    """One CIFAR-10 binary batch: 3073-byte records of label + 3072 pixels."""
    with _open_binary(path) as fh:
        raw = fh.read()
    if not raw or len(raw) % 3073 != 0:
        raise ParseError(f"{path}: size {len(raw)} is not a multiple of 3073")
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3073)
    labels = records[:, 0].astype(np.int64)
    if labels.max(initial=0) >= 10:
        raise ParseError(f"{path}: label {labels.max()} out of range")
    pixels = records[:, 1:].astype(np.float64) / 255.0
    return pixels, labels


def load_cifar10(data_dir, train_files=("data_batch_1",), test_file="test_batch"):
    """CIFAR-10 binary batches to a Dataset. train_files picks which of the five
    batch files make up the train split (one by default)."""

    def resolve(name):
        for candidate in (name, name + ".bin"):
            try:
                return _find_file(data_dir, candidate)
            except FileNotFoundError:
                continue
        raise FileNotFoundError(f"{name} not found under {data_dir}")

    xs, ys = [], []
    for name in train_files:
        x, y = read_cifar_batch(resolve(name))
        xs.append(x)
        ys.append(y)
    test_x, test_y = read_cifar_batch(resolve(test_file))
    return Dataset(
        name="cifar10",
        train_inputs=np.vstack(xs),
        train_targets=one_hot(np.concatenate(ys), 10),
        test_inputs=test_x,
        test_targets=one_hot(test_y, 10),
    )


# -------------------------------------------------------------------- sampling

class MiniBatchSampler:
    """Draws batches of train-set indices.

    static: holds one batch until refresh_static() draws a new one.
    dynamic: every next_batch() call draws a fresh batch.
    full: always the whole index range.

    Batches are sorted index arrays drawn without replacement. frozen=True pins
    the static batch for good: refresh_static() keeps the original draw.
    """

    def __init__(self, mode, n_total, m=None, seed=0, frozen=False):
        if mode not in SAMPLER_MODES:
            raise ValueError(f"mode must be one of {SAMPLER_MODES}, got {mode!r}")
        if frozen and mode != "static":
            raise ValueError("frozen only applies to static mode")
        n_total = int(n_total)
        if n_total < 1:
            raise ValueError(f"n_total must be positive, got {n_total}")
        if mode == "full":
            m = n_total
        else:
            if m is None:
                raise BadBatchSizeError(f"mode {mode!r} needs an explicit batch size")
            m = int(m)
            if not 1 <= m <= n_total:
                raise BadBatchSizeError(f"batch size must be in [1, {n_total}], got {m}")
        self.mode = mode
        self.n_total = n_total
        self.m = m
        self.frozen = bool(frozen)
        self._rng = np.random.default_rng(seed)
        self._current = None
        if mode == "static":
            self._current = self._draw()

    def _draw(self):
        batch = np.sort(self._rng.choice(self.n_total, size=self.m, replace=False))
        batch.flags.writeable = False
        return batch

    def next_batch(self):
        """Index batch for the next function evaluation."""
        if self.mode == "full":
            return np.arange(self.n_total)
        if self.mode == "dynamic":
            return self._draw()
        return self._current

    def refresh_static(self):
        """Replace the held static batch with a fresh draw. No-op when frozen."""
        if self.mode != "static":
            raise WrongModeError(f"refresh_static is only valid in static mode, not {self.mode!r}")
        if not self.frozen:
            self._current = self._draw()
        return self._current
