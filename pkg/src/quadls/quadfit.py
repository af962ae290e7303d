"""Quadratic models of the restricted loss and the five step-size rules.

Each rule fits k1*a^2 + k2*a + k3 (the g-g rule fits only the derivative
2*k1*a + k2) to a different mix of value and slope samples at 0 and alpha1,
then proposes the vertex -k2/(2*k1) when the fit is convex. Degenerate or
concave fits fall through to alpha1. Builders are pure: probing and
acceptance guards live elsewhere.

Fits are solved in the normalized variable u = a/alpha1, where every system
matrix has entries of order one regardless of alpha1; the coefficients and
the vertex are then rescaled exactly. Solving in the raw variable squares the
condition number with alpha1 and loses the vertex long before alpha1 reaches
the allowed 1e6.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import (
    RankDeficientError,
    SingularMatrixError,
    solve_least_squares,
    solve_square,
)

KINDS = ("fff", "fgf", "ffg", "fgfg", "gg")

# curvature below this counts as non-convex
EPS_K = 1e-18

OUTCOMES = ("resample", "immediate-accept", "interpolation",
            "bounded-extrapolation", "clamped-min", "clamped-max")


@dataclass(frozen=True)
class Bounds:
    """Step-size clamp interval; enforced=False keeps the values for reference only."""

    alpha_min: float = 1e-7
    alpha_max: float = 1e8
    enforced: bool = True

    def __post_init__(self):
        if not (0.0 < self.alpha_min < self.alpha_max):
            raise ValueError(
                f"need 0 < alpha_min < alpha_max, got {self.alpha_min}, {self.alpha_max}")

    def clamp(self, alpha):
        if not self.enforced:
            return alpha
        return min(max(alpha, self.alpha_min), self.alpha_max)


NO_BOUNDS = Bounds(enforced=False)


@dataclass(frozen=True)
class QuadraticModel:
    """Fitted coefficients. k3 is None for the derivative-only g-g fit."""

    k1: float
    k2: float
    k3: float
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")

    def value(self, alpha):
        if self.k3 is None:
            raise ValueError("model has no intercept; use gg_to_loss_domain first")
        return self.k1 * alpha * alpha + self.k2 * alpha + self.k3

    def slope(self, alpha):
        return 2.0 * self.k1 * alpha + self.k2

    def vertex(self):
        if self.k1 == 0.0:
            raise ValueError("linear model has no vertex")
        return -self.k2 / (2.0 * self.k1)


@dataclass(frozen=True)
class StepDecision:
    """Proposed step with its classification.

    vertex keeps the raw (pre-clamp) minimizer whenever the fit was convex,
    so studies can look at the proposal even when clamps or guards replace it.
    """

    alpha_star: float
    outcome: str
    model: QuadraticModel = None
    vertex: float = None


def classify_outcome(model, vertex, alpha1, eps_k=EPS_K, bounds_enforced=False):
    """Outcome tag for a raw (pre-clamp) vertex proposal.

    Non-convex fits and non-positive vertices cannot be used as steps: the
    former accept alpha1 immediately, the latter clamp to the lower bound when
    bounds are on and fall back to alpha1 otherwise. A vertex exactly at
    alpha1 adds no new point and counts as immediate acceptance.
    """
    if not np.isfinite(model.k1) or model.k1 <= eps_k:
        return "immediate-accept"
    if vertex <= 0.0:
        return "clamped-min" if bounds_enforced else "immediate-accept"
    if vertex == alpha1:
        return "immediate-accept"
    if vertex < alpha1:
        return "interpolation"
    return "bounded-extrapolation"


def _finite(**named):
    for name, value in named.items():
        if not np.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


def _accept_alpha1(kind, alpha1):
    return StepDecision(alpha1, "immediate-accept",
                        QuadraticModel(0.0, 0.0, None if kind == "gg" else 0.0, kind))


def _resolve(kind, kappa, alpha1, bounds, eps_k):
    """Rescale normalized-fit coefficients, classify, clamp.

    The branch structure mirrors classify_outcome but works entirely on the
    normalized coefficients, so it stays correct even where the raw-variable
    coefficients over- or underflow (alpha1 far outside [1e-6, 1e6]).
    """
    with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
        k1 = float(kappa[0] / (alpha1 * alpha1))
        k2 = float(kappa[1] / alpha1)
    k3 = float(kappa[2]) if len(kappa) == 3 else None
    model = QuadraticModel(k1, k2, k3, kind)
    kappa1 = float(kappa[0])
    # k1 <= eps_k in normalized terms; exact within one rounding of the scale factor
    if not np.isfinite(kappa1) or kappa1 <= eps_k * alpha1 * alpha1:
        return StepDecision(alpha1, "immediate-accept", model)
    # vertex straight from the normalized coefficients: one rounding each
    vertex = float(-kappa[1] * alpha1 / (2.0 * kappa[0]))
    if not np.isfinite(vertex):
        return StepDecision(alpha1, "immediate-accept", model)
    if vertex <= 0.0:
        if bounds.enforced:
            return StepDecision(bounds.alpha_min, "clamped-min", model, vertex)
        return StepDecision(alpha1, "immediate-accept", model, vertex)
    if vertex == alpha1:
        return StepDecision(alpha1, "immediate-accept", model, vertex)
    alpha_star = float(bounds.clamp(vertex))
    if alpha_star != vertex:
        outcome = "clamped-min" if alpha_star == bounds.alpha_min else "clamped-max"
    else:
        outcome = "interpolation" if vertex < alpha1 else "bounded-extrapolation"
    return StepDecision(alpha_star, outcome, model, vertex)


def step_size_fff(alpha1, alpha2, f0, f1, f2, bounds=NO_BOUNDS, eps_k=EPS_K):
    """Three values: at 0, alpha1 and alpha2 (the line search uses alpha2 = alpha1/2)."""
    _finite(alpha1=alpha1, alpha2=alpha2, f0=f0, f1=f1, f2=f2)
    if alpha1 <= 0.0 or alpha2 <= 0.0 or alpha2 == alpha1:
        raise ValueError(f"need 0 < alpha2 != alpha1, got {alpha2}, {alpha1}")
    u2 = alpha2 / alpha1
    a = np.array([[0.0, 0.0, 1.0],
                  [1.0, 1.0, 1.0],
                  [u2 * u2, u2, 1.0]])
    try:
        kappa = solve_square(a, np.array([f0, f1, f2]))
    except SingularMatrixError:
        return _accept_alpha1("fff", alpha1)
    return _resolve("fff", kappa, alpha1, bounds, eps_k)


def step_size_fgf(alpha1, f0, f1, fprime0, bounds=NO_BOUNDS, eps_k=EPS_K):
    """Value and slope at 0, value at alpha1."""
    _finite(alpha1=alpha1, f0=f0, f1=f1, fprime0=fprime0)
    if alpha1 <= 0.0:
        raise ValueError(f"alpha1 must be positive, got {alpha1}")
    a = np.array([[0.0, 0.0, 1.0],
                  [0.0, 1.0, 0.0],
                  [1.0, 1.0, 1.0]])
    try:
        kappa = solve_square(a, np.array([f0, fprime0 * alpha1, f1]))
    except SingularMatrixError:
        return _accept_alpha1("fgf", alpha1)
    return _resolve("fgf", kappa, alpha1, bounds, eps_k)


def step_size_ffg(alpha1, f0, f1, fprime1, bounds=NO_BOUNDS, eps_k=EPS_K):
    """Value at 0, value and slope at alpha1."""
    _finite(alpha1=alpha1, f0=f0, f1=f1, fprime1=fprime1)
    if alpha1 <= 0.0:
        raise ValueError(f"alpha1 must be positive, got {alpha1}")
    a = np.array([[0.0, 0.0, 1.0],
                  [1.0, 1.0, 1.0],
                  [2.0, 1.0, 0.0]])
    try:
        kappa = solve_square(a, np.array([f0, f1, fprime1 * alpha1]))
    except SingularMatrixError:
        return _accept_alpha1("ffg", alpha1)
    return _resolve("ffg", kappa, alpha1, bounds, eps_k)


def step_size_fgfg(alpha1, f0, f1, fprime0, fprime1, bounds=NO_BOUNDS, eps_k=EPS_K):
    """Values and slopes at both 0 and alpha1: overdetermined, least squares."""
    _finite(alpha1=alpha1, f0=f0, f1=f1, fprime0=fprime0, fprime1=fprime1)
    if alpha1 <= 0.0:
        raise ValueError(f"alpha1 must be positive, got {alpha1}")
    a = np.array([[0.0, 0.0, 1.0],
                  [0.0, 1.0, 0.0],
                  [1.0, 1.0, 1.0],
                  [2.0, 1.0, 0.0]])
    try:
        kappa = solve_least_squares(
            a, np.array([f0, fprime0 * alpha1, f1, fprime1 * alpha1]))
    except RankDeficientError:
        return _accept_alpha1("fgfg", alpha1)
    return _resolve("fgfg", kappa, alpha1, bounds, eps_k)


def step_size_gg(alpha1, fprime0, fprime1, bounds=NO_BOUNDS, eps_k=EPS_K):
    """Slopes at 0 and alpha1; fits the derivative line only (no intercept)."""
    _finite(alpha1=alpha1, fprime0=fprime0, fprime1=fprime1)
    if alpha1 <= 0.0:
        raise ValueError(f"alpha1 must be positive, got {alpha1}")
    a = np.array([[0.0, 1.0],
                  [2.0, 1.0]])
    try:
        kappa = solve_square(a, np.array([fprime0 * alpha1, fprime1 * alpha1]))
    except SingularMatrixError:
        return _accept_alpha1("gg", alpha1)
    return _resolve("gg", kappa, alpha1, bounds, eps_k)


def gg_to_loss_domain(model, k3):
    """Attach an intercept to a derivative-only fit so values can be read off."""
    if model.kind != "gg":
        raise ValueError(f"only g-g models lack an intercept, got kind {model.kind!r}")
    _finite(k3=k3)
    return QuadraticModel(model.k1, model.k2, float(k3), "gg")


BUILDERS = {
    "fff": step_size_fff,
    "fgf": step_size_fgf,
    "ffg": step_size_ffg,
    "fgfg": step_size_fgfg,
    "gg": step_size_gg,
}
