"""Feed-forward networks in float64 with hand-written backprop.

Weights live in a single flat vector so optimizers can treat the model as a
plain function of one array. Losses are averaged over the batch.
"""

import struct
from dataclasses import dataclass

import numpy as np

HIDDEN_KINDS = ("sigmoid", "tanh")
LOSS_KINDS = ("bce", "ce", "squared")
INIT_KINDS = ("normal", "xavier")

_MAGIC = b"QLSW"
_VERSION = 1


class NonFiniteError(FloatingPointError):
    """Forward or backward pass produced a non-finite value."""


class CheckpointError(ValueError):
    """Weight file is malformed or inconsistent."""


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description: layer sizes plus activation, loss and init choices."""

    sizes: tuple
    hidden: str = "sigmoid"
    loss: str = "bce"
    init: str = "normal"

    def __post_init__(self):
        if len(self.sizes) < 2 or any(int(s) <= 0 for s in self.sizes):
            raise ValueError(f"sizes must be >= 2 positive layer widths, got {self.sizes}")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if self.hidden not in HIDDEN_KINDS:
            raise ValueError(f"hidden must be one of {HIDDEN_KINDS}, got {self.hidden!r}")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.init not in INIT_KINDS:
            raise ValueError(f"init must be one of {INIT_KINDS}, got {self.init!r}")

    @property
    def n_params(self):
        return sum((a + 1) * b for a, b in zip(self.sizes[:-1], self.sizes[1:]))


def logistic_spec(n_inputs=30):
    """Single sigmoid unit with binary cross-entropy."""
    return NetworkSpec(sizes=(n_inputs, 1), hidden="sigmoid", loss="bce", init="normal")


def nn1_spec(n_inputs=784, n_hidden=800, n_outputs=10, softmax_output=False):
    """One sigmoid hidden layer; element-wise cross-entropy on sigmoid outputs
    by default, softmax cross-entropy when softmax_output is set."""
    loss = "ce" if softmax_output else "bce"
    return NetworkSpec(sizes=(n_inputs, n_hidden, n_outputs), hidden="sigmoid",
                       loss=loss, init="normal")


def nn2_spec(n_inputs=3072, hidden=(1000, 500, 250), n_outputs=10):
    """Deep tanh network with summed squared error."""
    return NetworkSpec(sizes=(n_inputs, *hidden, n_outputs), hidden="tanh",
                       loss="squared", init="xavier")


def init_weights(spec, seed=0):
    """Draw a flat weight vector. normal: every parameter is standard normal.
    xavier: weights scaled by sqrt(2/(fan_in+fan_out)), biases zero."""
    rng = np.random.default_rng(seed)
    if spec.init == "normal":
        return rng.standard_normal(spec.n_params)
    chunks = []
    for n_in, n_out in zip(spec.sizes[:-1], spec.sizes[1:]):
        scale = np.sqrt(2.0 / (n_in + n_out))
        chunks.append(rng.standard_normal(n_in * n_out) * scale)
        chunks.append(np.zeros(n_out))
    return np.concatenate(chunks)


def _unpack(spec, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.n_params,):
        raise ValueError(f"weight vector must have shape ({spec.n_params},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("weight vector contains non-finite values")
    layers = []
    pos = 0
    for n_in, n_out in zip(spec.sizes[:-1], spec.sizes[1:]):
        w = x[pos:pos + n_in * n_out].reshape(n_in, n_out)
        pos += n_in * n_out
        b = x[pos:pos + n_out]
        pos += n_out
        layers.append((w, b))
    return layers


def _act(kind, z):
    if kind == "tanh":
        return np.tanh(z)
    out = np.empty_like(z)
    pos = z >= 0
    neg = ~pos
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[neg])
    out[neg] = ez / (1.0 + ez)
    return out


def _act_prime_from_value(kind, y):
    if kind == "tanh":
        return 1.0 - y * y
    return y * (1.0 - y)


def _batch_arrays(dataset, batch):
    inputs = dataset.train_inputs
    targets = dataset.train_targets
    if batch is not None:
        batch = np.asarray(batch)
        inputs = inputs[batch]
        targets = targets[batch]
    return inputs, targets


def _forward(spec, layers, inputs):
    """Run all layers; returns hidden activations list and output pre-activation."""
    acts = [np.asarray(inputs, dtype=np.float64)]
    for w, b in layers[:-1]:
        acts.append(_act(spec.hidden, acts[-1] @ w + b))
    w, b = layers[-1]
    z_out = acts[-1] @ w + b
    return acts, z_out


def _loss_from_z(spec, z_out, targets):
    m = z_out.shape[0]
    if spec.loss == "bce":
        # stable -[t log s(z) + (1-t) log(1-s(z))] summed over outputs
        per = targets * np.logaddexp(0.0, -z_out) + (1.0 - targets) * np.logaddexp(0.0, z_out)
        return float(per.sum() / m)
    if spec.loss == "ce":
        zmax = z_out.max(axis=1, keepdims=True)
        lse = zmax[:, 0] + np.log(np.exp(z_out - zmax).sum(axis=1))
        return float((lse - (targets * z_out).sum(axis=1)).sum() / m)
    y = _act(spec.hidden, z_out)
    return float(((y - targets) ** 2).sum() / m)


def _output_delta(spec, z_out, targets):
    """d(mean loss)/d z_out, already divided by the batch size."""
    m = z_out.shape[0]
    if spec.loss == "bce":
        return (_act("sigmoid", z_out) - targets) / m
    if spec.loss == "ce":
        zmax = z_out.max(axis=1, keepdims=True)
        ez = np.exp(z_out - zmax)
        return (ez / ez.sum(axis=1, keepdims=True) - targets) / m
    y = _act(spec.hidden, z_out)
    return 2.0 * (y - targets) * _act_prime_from_value(spec.hidden, y) / m


def batch_loss(spec, x, dataset, batch=None):
    """Mean loss of weights x over the given train-set batch (None = full train set)."""
    inputs, targets = _batch_arrays(dataset, batch)
    layers = _unpack(spec, x)
    _, z_out = _forward(spec, layers, inputs)
    loss = _loss_from_z(spec, z_out, targets)
    if not np.isfinite(loss):
        raise NonFiniteError(f"loss is {loss!r}")
    return loss


def batch_grad(spec, x, dataset, batch=None):
    """Mean loss and its gradient as a flat vector, via backprop."""
    inputs, targets = _batch_arrays(dataset, batch)
    layers = _unpack(spec, x)
    acts, z_out = _forward(spec, layers, inputs)
    loss = _loss_from_z(spec, z_out, targets)
    delta = _output_delta(spec, z_out, targets)

    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        grads[i] = (acts[i].T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = (delta @ w.T) * _act_prime_from_value(spec.hidden, acts[i])
    flat = np.concatenate([np.concatenate((gw.ravel(), gb)) for gw, gb in grads])
    if not (np.isfinite(loss) and np.all(np.isfinite(flat))):
        raise NonFiniteError("gradient or loss is non-finite")
    return loss, flat


def directional_derivative(grad, direction):
    """Slope of the loss along direction, from a full gradient."""
    return float(np.dot(grad, direction))


def classification_error(spec, x, dataset, split="train"):
    """Fraction of misclassified samples on the train or test split."""
    if split == "train":
        inputs, targets = dataset.train_inputs, dataset.train_targets
    elif split == "test":
        inputs, targets = dataset.test_inputs, dataset.test_targets
    else:
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    layers = _unpack(spec, x)
    _, z_out = _forward(spec, layers, inputs)
    if z_out.shape[1] == 1:
        pred = z_out[:, 0] > 0.0
        truth = targets[:, 0] > 0.5
    else:
        # argmax of z matches argmax of any monotone output activation
        pred = z_out.argmax(axis=1)
        truth = targets.argmax(axis=1)
    return float(np.mean(pred != truth))


def save_weights(path, spec, x):
    """Write weights as little-endian float64 after a fixed-layout header."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.n_params,):
        raise ValueError(f"weight vector must have shape ({spec.n_params},), got {x.shape}")
    header = struct.pack(
        "<4sHBBBBI", _MAGIC, _VERSION,
        HIDDEN_KINDS.index(spec.hidden), LOSS_KINDS.index(spec.loss),
        INIT_KINDS.index(spec.init), 0, len(spec.sizes),
    )
    sizes = struct.pack(f"<{len(spec.sizes)}I", *spec.sizes)
    count = struct.pack("<Q", x.size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(sizes)
        fh.write(count)
        fh.write(x.astype("<f8").tobytes())


def load_weights(path):
    """Read a weight file back; returns (spec, weight vector)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    head_fmt = "<4sHBBBBI"
    head_len = struct.calcsize(head_fmt)
    if len(blob) < head_len:
        raise CheckpointError("file too short for header")
    magic, version, hidden_id, loss_id, init_id, _, n_layers = struct.unpack_from(head_fmt, blob)
    if magic != _MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise CheckpointError(f"unsupported version {version}")
    if not (hidden_id < len(HIDDEN_KINDS) and loss_id < len(LOSS_KINDS)
            and init_id < len(INIT_KINDS) and 2 <= n_layers <= 64):
        raise CheckpointError("header fields out of range")
    pos = head_len
    if len(blob) < pos + 4 * n_layers + 8:
        raise CheckpointError("file too short for layer sizes")
    sizes = struct.unpack_from(f"<{n_layers}I", blob, pos)
    pos += 4 * n_layers
    (count,) = struct.unpack_from("<Q", blob, pos)
    pos += 8
    spec = NetworkSpec(sizes=sizes, hidden=HIDDEN_KINDS[hidden_id],
                       loss=LOSS_KINDS[loss_id], init=INIT_KINDS[init_id])
    if count != spec.n_params:
        raise CheckpointError(f"parameter count {count} does not match sizes {sizes}")
    if len(blob) != pos + 8 * count:
        raise CheckpointError("file length does not match parameter count")
    x = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).astype(np.float64)
    return spec, x
