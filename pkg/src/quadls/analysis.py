"""Distribution of fitted step sizes under per-evaluation batch redraws.

Holding the weights and direction fixed, each fit draws fresh batches for its
probes, so the spread of the resulting minimizers isolates how sampling noise
propagates through each fit rule. Minimizers are recorded before any bound
clamping; concave or non-positive proposals go to a separate rejection tally
instead of distorting the statistics.
"""

from dataclasses import dataclass

import numpy as np

from .dataio import MiniBatchSampler
from .linesearch import exact_step, fit_decision, initial_guess
from .probes import NetworkObjective, ProbeContext, probe_f, probe_fg
from .quadfit import EPS_K, KINDS, NO_BOUNDS

HIST_BINS = 40


@dataclass
class DistributionStats:
    """Summary of the recorded minimizers of one study.

    n counts the fits that produced a usable (convex, positive) minimizer and
    equals the histogram total; n_rejected counts the rest of the n_fits.
    """

    n: int
    mu: float
    sigma: float
    q1: float
    q2: float
    q3: float
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    reference_minimizer: float
    n_rejected: int


def quartiles(values):
    """Linear-interpolation quartiles (q1, q2, q3) of a non-empty sample."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("quartiles need at least one value")
    q1, q2, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    return float(q1), float(q2), float(q3)


def step_histogram(values, n_bins=HIST_BINS):
    """Counts over uniform bins spanning the 1st to 99th percentile.

    Values outside the span are clipped into the end bins so the total always
    matches the sample size.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("histogram needs at least one value")
    lo, hi = np.percentile(values, [1.0, 99.0])
    if hi <= lo:
        # zero spread: one centered cell of token width
        half = max(1e-12, abs(lo) * 1e-9)
        lo, hi = lo - half, lo + half
    edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(np.clip(values, lo, hi), bins=edges)
    return edges, counts


def reference_minimizer(spec, dataset, x, d, cap=1e8, tol=1e-8):
    """Full-batch minimizer along d from golden section with a doubling bracket."""
    obj = NetworkObjective(spec, dataset)
    ctx = ProbeContext(obj, x, d, MiniBatchSampler("full", dataset.n_train))
    return exact_step(lambda a: probe_f(ctx, a).f, initial_guess(d, NO_BOUNDS),
                      cap, tol)


def distribution_study(spec, dataset, x, d, kind, m=None, n_fits=200,
                       mode="dynamic", seed=0, eps_k=EPS_K):
    """Fit the same point/direction n_fits times on independently drawn batches.

    Returns DistributionStats over the pre-clamp minimizers. The trial step is
    the unclamped inverse direction norm, identical across fits, so all spread
    comes from batch noise. Every fit is rejected only if it is concave,
    degenerate, or proposes a non-positive step.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    if n_fits < 1:
        raise ValueError(f"n_fits must be positive, got {n_fits}")
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    obj = NetworkObjective(spec, dataset)
    sampler = MiniBatchSampler(mode, dataset.n_train, m, seed=seed)
    ctx = ProbeContext(obj, x, d, sampler)
    alpha1 = initial_guess(d, NO_BOUNDS)

    minima = []
    rejected = 0
    for _ in range(n_fits):
        s0 = probe_fg(ctx, 0.0)
        s1 = probe_fg(ctx, alpha1)
        s2 = probe_f(ctx, alpha1 / 2.0) if kind == "fff" else None
        decision = fit_decision(kind, alpha1, s0.f, s0.fprime, s1, s2,
                                NO_BOUNDS, eps_k)
        vertex = decision.vertex
        if vertex is None or vertex <= 0.0:
            rejected += 1
        else:
            minima.append(float(vertex))

    if not minima:
        raise ValueError("every fit was rejected; no distribution to report")
    minima = np.asarray(minima)
    if np.ptp(minima) == 0.0:
        # identical fits must report exactly zero spread, not mean-rounding dust
        mu, sigma = float(minima[0]), 0.0
    else:
        mu, sigma = float(minima.mean()), float(minima.std())
    q1, q2, q3 = quartiles(minima)
    edges, counts = step_histogram(minima)
    ref = reference_minimizer(spec, dataset, x, d)
    return DistributionStats(n=len(minima), mu=mu, sigma=sigma,
                             q1=q1, q2=q2, q3=q3,
                             bin_edges=edges, bin_counts=counts,
                             reference_minimizer=ref, n_rejected=rejected)
