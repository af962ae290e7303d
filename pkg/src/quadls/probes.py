"""Probing the loss along one search direction.

A probe evaluates the restricted function f(alpha) = loss(x0 + alpha*d), and
optionally its slope, on whatever batch the sampler supplies. Every probe costs
one function evaluation (FE): the accounting unit is one forward+backward pass
on one batch, whether or not the backward half is used.
"""

from dataclasses import dataclass, field

import numpy as np

from .network import batch_grad, batch_loss


class FECounter:
    """Monotone counter of function evaluations."""

    def __init__(self):
        self.count = 0

    def add(self, n=1):
        if n < 0:
            raise ValueError("FE counter only moves forward")
        self.count += n


@dataclass
class LineSample:
    """One probe result on the line: step, value, slope if measured."""

    alpha: float
    f: float = None
    fprime: float = None
    grad: np.ndarray = None
    fe_cost: int = 1

    def __post_init__(self):
        if self.f is None and self.fprime is None:
            raise ValueError("a sample must carry a value or a slope")


class NetworkObjective:
    """Adapter giving a network the two-method objective interface."""

    def __init__(self, spec, dataset):
        self.spec = spec
        self.dataset = dataset

    def loss(self, x, batch=None):
        return batch_loss(self.spec, x, self.dataset, batch)

    def loss_grad(self, x, batch=None):
        return batch_grad(self.spec, x, self.dataset, batch)


class QuadraticObjective:
    """Deterministic quadratic 0.5*x'Ax + b'x + c; batches are ignored.

    Useful wherever an exactly-quadratic restricted loss is needed.
    """

    def __init__(self, a, b, c=0.0):
        self.a = np.asarray(a, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.c = float(c)
        if self.a.ndim != 2 or self.a.shape[0] != self.a.shape[1]:
            raise ValueError(f"a must be square, got shape {self.a.shape}")
        if self.b.shape != (self.a.shape[0],):
            raise ValueError("b must match a")

    def loss(self, x, batch=None):
        x = np.asarray(x, dtype=np.float64)
        return float(0.5 * x @ self.a @ x + self.b @ x + self.c)

    def loss_grad(self, x, batch=None):
        x = np.asarray(x, dtype=np.float64)
        return self.loss(x), self.a @ x + self.b


@dataclass
class ProbeContext:
    """Everything needed to probe one direction: objective, anchor point,
    direction, batch source, and the shared FE counter."""

    objective: object
    x0: np.ndarray
    direction: np.ndarray
    sampler: object
    fe: FECounter = field(default_factory=FECounter)

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=np.float64)
        self.direction = np.asarray(self.direction, dtype=np.float64)
        if self.x0.shape != self.direction.shape:
            raise ValueError("x0 and direction must have the same shape")
        if not np.any(self.direction):
            raise ValueError("direction must be non-zero")

    def point_at(self, alpha):
        return self.x0 + alpha * self.direction


def _check_alpha(alpha):
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise ValueError(f"alpha must be finite, got {alpha!r}")
    return alpha


def probe_f(ctx, alpha):
    """Value-only probe at alpha on the sampler's next batch. One FE."""
    alpha = _check_alpha(alpha)
    batch = ctx.sampler.next_batch()
    f = ctx.objective.loss(ctx.point_at(alpha), batch)
    ctx.fe.add(1)
    return LineSample(alpha=alpha, f=f, fe_cost=1)


def probe_fg(ctx, alpha):
    """Value+slope probe at alpha: one shared pass, one FE. Keeps the full
    gradient so a later iteration can reuse it."""
    alpha = _check_alpha(alpha)
    batch = ctx.sampler.next_batch()
    f, grad = ctx.objective.loss_grad(ctx.point_at(alpha), batch)
    ctx.fe.add(1)
    return LineSample(alpha=alpha, f=f, fprime=float(grad @ ctx.direction),
                      grad=grad, fe_cost=1)


def sign_change_scan(ctx, grid):
    """Scan a grid of step sizes for slope sign changes from negative to
    non-negative. Intended for full-batch contexts, where the restricted loss
    is deterministic; returns the bracketing (low, high) grid pairs."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be a 1-d array of at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    slopes = [probe_fg(ctx, a).fprime for a in grid]
    intervals = []
    for lo, hi, s_lo, s_hi in zip(grid[:-1], grid[1:], slopes[:-1], slopes[1:]):
        if s_lo < 0.0 <= s_hi:
            intervals.append((float(lo), float(hi)))
    return intervals
