"""Unbiased functional estimators built from the envelope.

The headline estimator combines the plug-in integral of phi over the envelope
with a derivative-weighted count of the points sitting on it:

    Fhat = integral_0^1 phi(ghat(x)) dx
           - (1/n) * sum_j phi'(Y_j) * 1( min_{k != j}(Y_k + R|X_j-X_k|**beta) >= Y_j ).

Dropping the j = k term from the minimum makes the indicator free of
floating-point ties: a point is counted exactly when the envelope of the
*other* points does not undercut it.  The same construction with a known
deterministic majorant gbar in place of ghat gives the pseudo-estimator, and
clipping the power-preset value at zero before taking the p-th root gives the
norm estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envelope import cone_min, support_indices
from .model import (
    BoundaryFunction,
    DEFAULT_GRID,
    FunctionalSpec,
    HolderClass,
    NoObservationsError,
    power_functional,
    trapezoid,
    uniform_grid,
)
from .simulate import PppSample


@dataclass(frozen=True)
class EstimateResult:
    value: float
    integral_term: float
    sum_term: float
    count_on_envelope: int
    cap_valid: bool


def _checked_derivative(spec: FunctionalSpec, ys: np.ndarray) -> np.ndarray:
    vals = np.asarray(spec.phi_prime(ys), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError(
            f"derivative of functional '{spec.label}' overflowed on an observation; "
            "the integrability condition is the caller's responsibility for custom functionals"
        )
    return vals


def estimate_functional(
    sample: PppSample,
    holder: HolderClass,
    spec: FunctionalSpec,
    grid_size: int = DEFAULT_GRID,
) -> EstimateResult:
    """Envelope-based estimate of integral phi(g); unbiased over the ball."""
    if sample.is_empty():
        raise NoObservationsError("no observations")
    support = support_indices(sample.xs, sample.ys, holder.beta, holder.radius)
    sum_term = float(np.sum(_checked_derivative(spec, sample.ys[support]))) / sample.n
    grid = uniform_grid(grid_size)
    ghat = cone_min(sample.xs[support], sample.ys[support], holder.beta, holder.radius, grid)
    phi_vals = np.asarray(spec.phi(ghat), dtype=float)
    if not np.all(np.isfinite(phi_vals)):
        raise ValueError(f"functional '{spec.label}' produced non-finite envelope values")
    integral_term = trapezoid(phi_vals, grid)
    return EstimateResult(
        value=integral_term - sum_term,
        integral_term=integral_term,
        sum_term=sum_term,
        count_on_envelope=int(len(support)),
        cap_valid=sample.cap_valid,
    )


def estimate_pseudo(
    sample: PppSample,
    gbar: BoundaryFunction,
    spec: FunctionalSpec,
    grid_size: int = DEFAULT_GRID,
) -> EstimateResult:
    """Oracle variant using a known majorant gbar of the true boundary.

    That gbar dominates g pointwise is the caller's responsibility; the
    estimate is unbiased only under that hypothesis.
    """
    if sample.is_empty():
        raise NoObservationsError("no observations")
    fired = np.asarray(gbar.evaluate(sample.xs), dtype=float) >= sample.ys
    sum_term = float(np.sum(_checked_derivative(spec, sample.ys[fired]))) / sample.n
    grid = uniform_grid(grid_size)
    integral_term = trapezoid(np.asarray(spec.phi(gbar.evaluate(grid)), dtype=float), grid)
    return EstimateResult(
        value=integral_term - sum_term,
        integral_term=integral_term,
        sum_term=sum_term,
        count_on_envelope=int(np.count_nonzero(fired)),
        cap_valid=sample.cap_valid,
    )


def estimate_lp_norm(
    sample: PppSample, holder: HolderClass, p: float, grid_size: int = DEFAULT_GRID
) -> float:
    """Norm estimate max(Fhat_p, 0)**(1/p); clipping never hurts since the
    target is nonnegative."""
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    result = estimate_functional(sample, holder, power_functional(p), grid_size)
    return max(result.value, 0.0) ** (1.0 / p)


# ---------------------------------------------------------------------------
# Exact breakpoint integrator for Lipschitz envelopes (test oracle).
# ---------------------------------------------------------------------------

def _abs_power_segment(y0: float, y1: float, width: float, p: float) -> float:
    """integral |l(x)|**p over a linear segment from y0 to y1 of given width."""
    if width <= 0.0:
        return 0.0
    b = (y1 - y0) / width
    if b == 0.0:
        return abs(y0) ** p * width
    if y0 * y1 < 0.0:
        # split at the root
        x_root = -y0 / b
        return _abs_power_segment(y0, 0.0, x_root, p) + _abs_power_segment(0.0, y1, width - x_root, p)
    hi = abs(y1) ** (p + 1.0) * np.sign(y1)
    lo = abs(y0) ** (p + 1.0) * np.sign(y0)
    return float((hi - lo) / (b * (p + 1.0)))


def exact_power_envelope_integral(
    sample: PppSample, holder: HolderClass, p: float
) -> float:
    """integral_0^1 |ghat|**p computed from the exact breakpoints (beta = 1 only).

    With beta = 1 all cones share slope magnitude radius, so between two
    neighbouring support points the envelope is the lower of their two cones
    with a single peak at the intersection; this integrates the resulting
    piecewise-linear curve segment by segment, independently of the trapezoid
    path.
    """
    if holder.beta != 1.0:
        raise ValueError("exact breakpoint integration requires beta = 1")
    if sample.is_empty():
        raise NoObservationsError("no observations")
    R = holder.radius
    sup = support_indices(sample.xs, sample.ys, 1.0, R)
    sx = sample.xs[sup]
    sy = sample.ys[sup]
    order = np.argsort(sx, kind="stable")
    sx = sx[order]
    sy = sy[order]
    total = _abs_power_segment(sy[0] + R * sx[0], sy[0], sx[0], p)
    for i in range(len(sx) - 1):
        x0, y0 = sx[i], sy[i]
        x1, y1 = sx[i + 1], sy[i + 1]
        x_peak = 0.5 * (x0 + x1) + (y1 - y0) / (2.0 * R)
        x_peak = min(max(x_peak, x0), x1)
        y_peak = y0 + R * (x_peak - x0)
        total += _abs_power_segment(y0, y_peak, x_peak - x0, p)
        total += _abs_power_segment(y_peak, y1, x1 - x_peak, p)
    total += _abs_power_segment(sy[-1], sy[-1] + R * (1.0 - sx[-1]), 1.0 - sx[-1], p)
    return float(total)
