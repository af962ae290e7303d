"""One line-search iteration: resample guard, initial step, probe, fit, accept.

Also provides the golden-section search used as the exact line search baseline
on deterministic (static or full batch) restricted losses.
"""

from dataclasses import dataclass, field

import numpy as np

from .network import NonFiniteError
from .probes import probe_f, probe_fg
from .quadfit import (
    EPS_K,
    KINDS,
    NO_BOUNDS,
    Bounds,
    StepDecision,
    step_size_ffg,
    step_size_fff,
    step_size_fgf,
    step_size_fgfg,
    step_size_gg,
)

# |slope at 0| below this means the direction carries no usable signal
RESAMPLE_EPS = 1e-16


class ZeroDirectionError(ValueError):
    """Search direction has zero norm."""


class BadIntervalError(ValueError):
    """Interval endpoints are not ordered."""


@dataclass(frozen=True)
class LineSearchConfig:
    """Which fit to use and how to guard its proposal.

    accept_extrapolation=False keeps only proposals strictly inside (0, alpha1);
    True also accepts convex proposals beyond alpha1.
    """

    kind: str
    accept_extrapolation: bool = False
    eps: float = RESAMPLE_EPS
    eps_k: float = EPS_K
    bounds: Bounds = field(default_factory=Bounds)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.eps <= 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")


@dataclass
class IterationResult:
    """Outcome of one iteration: the step taken and the carried-over probe."""

    alpha: float
    decision: StepDecision
    next_loss: float
    next_grad: np.ndarray
    fe_used: int
    alpha1: float = None


def fe_cost(kind, outcome):
    """Function evaluations one iteration costs, by fit kind and outcome."""
    if outcome == "resample":
        return 1
    probes = 2 if kind == "fff" else 1
    if outcome == "immediate-accept":
        return probes
    return probes + 1


def sgd_direction(grad):
    """Steepest-descent direction."""
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise ValueError("gradient must be finite")
    return -grad


def initial_guess(direction, bounds):
    """First trial step: inverse direction norm, clamped when bounds are on."""
    norm = float(np.linalg.norm(direction))
    if not np.isfinite(norm):
        raise ValueError("direction must be finite")
    if norm == 0.0:
        raise ZeroDirectionError("direction has zero norm")
    return bounds.clamp(1.0 / norm)


def _numeric_guard(*values):
    # overflow in a slope dot product must abort like any other blow-up
    for v in values:
        if v is not None and not np.isfinite(v):
            raise NonFiniteError(f"restricted loss data went non-finite: {v!r}")


def fit_decision(kind, alpha1, f0, fprime0, s1, s2=None, bounds=NO_BOUNDS,
                 eps_k=EPS_K):
    """Build the chosen quadratic fit from probe data and classify its step.

    s1 is the value+slope sample at alpha1; s2 (fff only) the value sample at
    alpha1/2. Kinds that skip a quantity ignore the corresponding argument.
    """
    if kind == "fff":
        return step_size_fff(alpha1, s2.alpha, f0, s1.f, s2.f, bounds, eps_k)
    if kind == "fgf":
        return step_size_fgf(alpha1, f0, s1.f, fprime0, bounds, eps_k)
    if kind == "ffg":
        return step_size_ffg(alpha1, f0, s1.f, s1.fprime, bounds, eps_k)
    if kind == "fgfg":
        return step_size_fgfg(alpha1, f0, s1.f, fprime0, s1.fprime, bounds, eps_k)
    if kind == "gg":
        return step_size_gg(alpha1, fprime0, s1.fprime, bounds, eps_k)
    raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")


def line_search_step(ctx, f0, g0, config):
    """Resolve one step along ctx.direction from loss/gradient data at the start.

    f0 and g0 come from the previous iteration (or a bootstrap probe) on the
    batch that defined the direction; they cost nothing here. Returns the
    accepted step plus the loss/gradient probe at the accepted point, which the
    caller carries into the next iteration.
    """
    g0 = np.asarray(g0, dtype=np.float64)
    with np.errstate(over="ignore"):  # overflow turns into NonFiniteError below
        fprime0 = float(g0 @ ctx.direction)
    _numeric_guard(f0, fprime0)
    fe_before = ctx.fe.count

    if abs(fprime0) < config.eps:
        # direction signal below noise: stay put, redraw the batch
        if ctx.sampler.mode == "static":
            ctx.sampler.refresh_static()
        sample = probe_fg(ctx, 0.0)
        return IterationResult(alpha=0.0, decision=StepDecision(0.0, "resample"),
                               next_loss=sample.f, next_grad=sample.grad,
                               fe_used=ctx.fe.count - fe_before)

    alpha1 = initial_guess(ctx.direction, config.bounds)
    s1 = probe_fg(ctx, alpha1)
    _numeric_guard(s1.f, s1.fprime)
    s2 = None
    if config.kind == "fff":
        s2 = probe_f(ctx, alpha1 / 2.0)
        _numeric_guard(s2.f)
    decision = fit_decision(config.kind, alpha1, f0, fprime0, s1, s2,
                            config.bounds, config.eps_k)

    if decision.outcome == "immediate-accept":
        # alpha1 stands; the probe there doubles as the next iteration's data
        return IterationResult(alpha=alpha1, decision=decision, next_loss=s1.f,
                               next_grad=s1.grad, fe_used=ctx.fe.count - fe_before,
                               alpha1=alpha1)

    candidate = decision.alpha_star
    usable = candidate > 0.0 and candidate != alpha1
    if not config.accept_extrapolation:
        usable = usable and candidate < alpha1
    alpha = candidate if usable else alpha1
    carry = probe_fg(ctx, alpha)
    return IterationResult(alpha=alpha, decision=decision, next_loss=carry.f,
                           next_grad=carry.grad, fe_used=ctx.fe.count - fe_before,
                           alpha1=alpha1)


def golden_section(f, a, b, tol=1e-6):
    """Golden-section minimum of a unimodal f on [a, b].

    Shrinks the bracket until its width drops below tol relative to the
    interval's magnitude, then returns the bracket midpoint.
    """
    a = float(a)
    b = float(b)
    if a >= b:
        raise BadIntervalError(f"need a < b, got [{a}, {b}]")
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = f(c)
    fd = f(d)
    while (b - a) > tol * max(1.0, abs(a), abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def expand_bracket(f, start, cap):
    """Double the trial step while the value keeps falling; cap the expansion.

    Returns an upper bound enclosing a minimum of a unimodal f on [0, cap].
    """
    start = float(start)
    cap = float(cap)
    if start <= 0.0 or cap <= 0.0:
        raise ValueError("start and cap must be positive")
    t = min(start, cap)
    f_prev = f(0.0)
    f_t = f(t)
    if f_t >= f_prev:
        return t
    while t < cap:
        nxt = min(2.0 * t, cap)
        f_n = f(nxt)
        if f_n >= f_t:
            return nxt
        t, f_t = nxt, f_n
    return cap


def exact_step(f, start, cap, tol=1e-6):
    """Exact line search: doubling pre-bracket from start, then golden section."""
    upper = expand_bracket(f, start, cap)
    return golden_section(f, 0.0, upper, tol)
