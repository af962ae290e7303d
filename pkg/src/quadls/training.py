"""Training loop: steepest descent with a fitted or exact line search.

Each iteration takes the batch gradient at the current weights, resolves a step
along the negative gradient, updates the weights, and logs progress. The cost
unit is the function evaluation (FE): one forward+backward pass on one batch.
Error measurements are instrumentation and cost no FEs.

FE bookkeeping: the run opens with one bootstrap probe for the first gradient,
so the total comes to 1 + the sum of per-outcome costs (see fe_cost). A static
sampler that is not frozen adds one more probe per new direction, because the
refreshed batch needs its own gradient at the current point.
"""

from dataclasses import dataclass

import numpy as np

from .dataio import SAMPLER_MODES, MiniBatchSampler
from .linesearch import (
    LineSearchConfig,
    ZeroDirectionError,
    exact_step,
    fe_cost,
    initial_guess,
    line_search_step,
    sgd_direction,
)
from .network import NonFiniteError, classification_error, init_weights
from .probes import FECounter, NetworkObjective, ProbeContext, probe_f, probe_fg

# floor applied before log10 so zero steps stay finite on log-scale reports
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class TrainConfig:
    """One run: data id, network, sampling policy, search policy, FE budget.

    Weights are seeded with `seed`, the sampler stream with `seed + 1`.
    exact=True replaces the quadratic fit by a golden-section search on the
    current batch; such iterations log the outcome tag "exact".
    freeze_batch=True pins the static batch for the whole run.
    """

    dataset: str
    net: object
    sampler_mode: str
    search: LineSearchConfig
    m: int = None
    budget: int = 10_000
    seed: int = 0
    eval_every: int = 50
    max_iterations: int = None
    exact: bool = False
    exact_tol: float = 1e-6
    freeze_batch: bool = False

    def __post_init__(self):
        if self.sampler_mode not in SAMPLER_MODES:
            raise ValueError(f"sampler_mode must be one of {SAMPLER_MODES}")
        if self.budget < 1:
            raise ValueError(f"FE budget must be positive, got {self.budget}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be positive, got {self.eval_every}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive when set")
        if self.freeze_batch and self.sampler_mode != "static":
            raise ValueError("freeze_batch only applies to static sampling")


@dataclass
class TrainRecord:
    """One iteration of a run. fe is the cumulative count after the iteration;
    dtheta is the angle to the previous direction, nan on the first iteration.
    Errors repeat the last measurement between evaluation points."""

    fe: int
    iter: int
    alpha: float
    train_error: float
    test_error: float
    dtheta: float
    outcome: str


def angle_between(d_prev, d_cur):
    """Angle between two directions, in degrees.

    Directions are rescaled by their largest component first, so vectors of
    tiny (subnormal) magnitude still measure correctly instead of underflowing.
    """
    d_prev = np.asarray(d_prev, dtype=np.float64)
    d_cur = np.asarray(d_cur, dtype=np.float64)
    scale_prev = float(np.max(np.abs(d_prev)))
    scale_cur = float(np.max(np.abs(d_cur)))
    if scale_prev == 0.0 or scale_cur == 0.0:
        raise ZeroDirectionError("angle needs two non-zero directions")
    u = d_prev / scale_prev
    v = d_cur / scale_cur
    cosang = float(u @ v) / (float(np.linalg.norm(u)) * float(np.linalg.norm(v)))
    return float(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))


def _exact_iteration(obj, x, d, sampler, fe, config):
    """Golden-section step on the current batch, plus the carry probe."""
    ctx = ProbeContext(obj, x, d, sampler, fe)
    bounds = config.search.bounds
    cap = bounds.alpha_max if bounds.enforced else 1e10
    start = initial_guess(d, bounds)
    alpha = exact_step(lambda a: probe_f(ctx, a).f, start, cap, config.exact_tol)
    carry = probe_fg(ctx, alpha)
    return alpha, (carry.f, carry.grad)


def train(config, dataset):
    """Run steepest descent until the FE budget is spent (the last iteration
    may overshoot by its own cost). Returns one TrainRecord per iteration.

    The caller resolves the dataset id in config to the loaded arrays. A
    non-finite loss or gradient aborts the run; the partial log is returned.
    """
    spec = config.net
    obj = NetworkObjective(spec, dataset)
    sampler = MiniBatchSampler(config.sampler_mode, dataset.n_train, config.m,
                               seed=config.seed + 1, frozen=config.freeze_batch)
    x = init_weights(spec, config.seed)
    fe = FECounter()
    records = []
    carry = None
    prev_outcome = None
    prev_d = None
    tr_err = te_err = None
    it = 0

    while fe.count < config.budget:
        if config.max_iterations is not None and it >= config.max_iterations:
            break
        it += 1
        try:
            fresh_direction_batch = (sampler.mode == "static" and not sampler.frozen
                                     and prev_outcome != "resample")
            if carry is None or fresh_direction_batch:
                if carry is not None:
                    sampler.refresh_static()
                f0, g0 = obj.loss_grad(x, sampler.next_batch())
                fe.add(1)
            else:
                f0, g0 = carry
            d = sgd_direction(g0)
            if not d.any():
                # flat on this batch: hold position, redraw where possible
                if sampler.mode == "static":
                    sampler.refresh_static()
                f0, g0 = obj.loss_grad(x, sampler.next_batch())
                fe.add(1)
                carry = (f0, g0)
                alpha, outcome, d = 0.0, "resample", None
            elif config.exact:
                alpha, carry = _exact_iteration(obj, x, d, sampler, fe, config)
                outcome = "exact"
                x = x + alpha * d
            else:
                ctx = ProbeContext(obj, x, d, sampler, fe)
                res = line_search_step(ctx, f0, g0, config.search)
                alpha, outcome = res.alpha, res.decision.outcome
                carry = (res.next_loss, res.next_grad)
                x = x + alpha * d
            measure = it == 1 or it % config.eval_every == 0
            if measure:
                tr_err = classification_error(spec, x, dataset, "train")
                te_err = classification_error(spec, x, dataset, "test")
        except NonFiniteError:
            break
        dtheta = float("nan")
        if d is not None and prev_d is not None:
            dtheta = angle_between(prev_d, d)
        if d is not None:
            prev_d = d
        records.append(TrainRecord(fe=fe.count, iter=it, alpha=float(alpha),
                                   train_error=tr_err, test_error=te_err,
                                   dtheta=dtheta, outcome=outcome))
        prev_outcome = outcome

    if records and not (records[-1].iter == 1 or
                        records[-1].iter % config.eval_every == 0):
        # the log always ends on a freshly measured error
        try:
            records[-1].train_error = classification_error(spec, x, dataset, "train")
            records[-1].test_error = classification_error(spec, x, dataset, "test")
        except NonFiniteError:
            pass
    return records


def fe_decomposition(records, kind):
    """Sum of per-outcome costs for a quadratic-fit run log.

    For dynamic or full sampling the run's total FE count is exactly
    1 (bootstrap) + this sum.
    """
    total = 0
    for rec in records:
        if rec.outcome == "exact":
            raise ValueError("cost table does not cover exact-search iterations")
        total += fe_cost(kind, rec.outcome)
    return total


def summarize(runs, grid=None):
    """Mean and population sigma of step and errors across runs per FE point.

    Logs align on a shared FE grid (default: the union of all recorded counts)
    by carrying each run's last record at or before the grid point forward;
    points before a run's first record backfill from that first record.
    """
    if not runs or any(len(run) == 0 for run in runs):
        raise ValueError("summarize needs at least one non-empty run")
    if grid is None:
        grid = sorted({rec.fe for run in runs for rec in run})
    grid = np.asarray(grid)
    fields = ("alpha", "train_error", "test_error")
    stacked = {name: np.empty((len(runs), grid.size)) for name in fields}
    for i, run in enumerate(runs):
        fes = np.array([rec.fe for rec in run])
        idx = np.clip(np.searchsorted(fes, grid, side="right") - 1, 0, len(run) - 1)
        for name in fields:
            vals = np.array([getattr(rec, name) for rec in run], dtype=np.float64)
            stacked[name][i] = vals[idx]
    out = {"fe": grid, "n_runs": len(runs)}
    for name in fields:
        out[name + "_mean"] = stacked[name].mean(axis=0)
        out[name + "_sigma"] = stacked[name].std(axis=0)
    return out


def log10_floored(values, floor=LOG_FLOOR):
    """log10 with a tiny positive floor so exact zeros stay finite."""
    return np.log10(np.maximum(np.asarray(values, dtype=np.float64), floor))


def final_quartile_median(records, accepted_only=False):
    """Median step over the last quarter of a run's iterations.

    accepted_only=True drops resample rows (step 0, position held), so the
    median describes the steps actually taken near convergence.
    """
    if not records:
        raise ValueError("empty run")
    start = (3 * len(records)) // 4
    tail = records[start:]
    if accepted_only:
        tail = [rec for rec in tail if rec.outcome != "resample"]
        if not tail:
            raise ValueError("no accepted steps in the final quarter")
    return float(np.median([rec.alpha for rec in tail]))
