"""Closed-form bounds, constants and exponent tables for the boundary model.

Everything here is deterministic: the envelope deviation bound, the Gamma
moment of its first branch, the variance identity evaluated against an
exceedance table, the explicit four-term mean-squared-error bound for the
power functional, the local asymptotic constant, a sharp interpolation
inequality between L^p and sup norms on the Hoelder ball, and the rate
exponent tables for the point-process and white-noise models.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .envelope import ExceedanceTable
from .model import BoundaryFunction, FunctionalSpec, HolderClass, ModelConfig, uniform_grid


@dataclass(frozen=True)
class DeviationBoundParams:
    beta: float
    radius: float
    n: int
    u: float

    def __post_init__(self) -> None:
        if self.u < 0.0:
            raise ValueError(f"u must be nonnegative, got {self.u}")


def deviation_bound_curve(u, beta: float, radius: float, n: int) -> np.ndarray:
    """Upper bound for P(ghat(x) - g(x) >= u), vectorised in u.

    exp(-n*beta*(2R)**(-1/beta) * u**((beta+1)/beta) / (beta+1))  for u <= 2R,
    exp(-n*(u - 2R/(beta+1)))                                     for u >  2R;
    the two branches agree at u = 2R.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0.0):
        raise ValueError("u must be nonnegative")
    two_r = 2.0 * radius
    inner = -n * beta * two_r ** (-1.0 / beta) * u ** ((beta + 1.0) / beta) / (beta + 1.0)
    outer = -n * (u - two_r / (beta + 1.0))
    # the selected exponent is nonpositive on its branch, so exp cannot overflow
    return np.exp(np.where(u <= two_r, inner, outer))


def deviation_bound(params: DeviationBoundParams) -> float:
    return float(deviation_bound_curve(params.u, params.beta, params.radius, params.n))


def gamma_moment(q: float, beta: float, radius: float, n: int) -> float:
    """Closed form dominating integral_0^{2R} u**q exp(-first branch) du:

        ((beta+1)/beta)**((beta*q-1)/(beta+1)) * (2R)**((q+1)/(beta+1))
            * Gamma(beta*(q+1)/(beta+1)) * n**(-beta*(q+1)/(beta+1)).

    The closed form extends the substituted integral to infinity, so it always
    sits above the finite-range quadrature, with vanishing gap as n grows.
    """
    if q < 0.0:
        raise ValueError(f"q must be nonnegative, got {q}")
    bp1 = beta + 1.0
    return float(
        ((bp1 / beta) ** ((beta * q - 1.0) / bp1))
        * (2.0 * radius) ** ((q + 1.0) / bp1)
        * special.gamma(beta * (q + 1.0) / bp1)
        * float(n) ** (-beta * (q + 1.0) / bp1)
    )


def variance_rhs(config: ModelConfig, spec: FunctionalSpec, table: ExceedanceTable) -> float:
    """Variance identity right side, (1/n) * double integral of
    (phi'(g(x)+u))**2 * P(ghat(x)-g(x) >= u), by double trapezoid over the
    supplied exceedance table."""
    tail = float(np.max(table.p_hat[:, -1]))
    if tail > 1e-3:
        warnings.warn(
            f"exceedance table still has mass {tail:.2e} at its largest u; "
            "extend the u grid for a trustworthy variance value",
            stacklevel=2,
        )
    g_at_x = np.asarray(config.boundary.evaluate(table.x), dtype=float)
    weights = np.asarray(spec.phi_prime(g_at_x[:, None] + table.u[None, :]), dtype=float) ** 2
    inner = np.trapezoid(weights * table.p_hat, table.u, axis=1)
    return float(np.trapezoid(inner, table.x)) / config.n


def local_asymptotic_constant(beta: float, radius: float, phi_prime_norm_sq: float) -> float:
    """Gamma(beta/(beta+1)) * (2*R*beta/(beta+1))**(1/(beta+1)) * ||phi' o f||_2**2."""
    if beta <= 0.0 or radius <= 0.0 or phi_prime_norm_sq < 0.0:
        raise ValueError("inputs must be positive (norm may be zero)")
    bp1 = beta + 1.0
    return float(
        special.gamma(beta / bp1) * (2.0 * radius * beta / bp1) ** (1.0 / bp1) * phi_prime_norm_sq
    )


def risk_upper_bound_power(
    p: float, beta: float, radius: float, n: int, g_norm_2p_minus_2: float
) -> float:
    """Explicit four-term bound for E[(Fhat_p - ||g||_p^p)**2].

    With a = p**2 * 2**(2p-2), G = ||g||_{2p-2}^{2p-2} and M_q the
    gamma_moment closed form, the four terms are:

      T1 = (a/n) * G * M_0(n)            ~ R**(1/(beta+1))   * G * n**(-(2b+1)/(b+1))
      T2 = (a/n) * M_{2p-2}(n)           ~ R**((2p-1)/(b+1)) *     n**(-(2bp+1)/(b+1))
      T3 = a * G * n**-2 * exp(-2bRn/(b+1))
      T4 = (a/n) * ((b+1)/(n*b))**(2p-1) * K(p) * exp(-bRn/(b+1))

    T1/T2 integrate the first deviation branch against G + u**(2p-2); T3 is
    the exact tail integral of the constant part; T4 dominates the tail
    moment integral int_A^inf v**(2p-2) e**-v dv (A = 2bRn/(b+1)) through
    Gamma(2p-1, A) <= K(p) * exp(-A/2), with
    K(p) = max(Gamma(2p-1) * e**(2p-2), 2 * (2(2p-2)/e)**(2p-2)),
    splitting at A = 2(2p-2) where the incomplete-Gamma series is summable.
    For p = 1 the norm convention ||g||_0^0 = 1 applies regardless of the
    supplied norm.
    """
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    bp1 = beta + 1.0
    a = p**2 * 2.0 ** (2.0 * p - 2.0)
    gpow = 1.0 if p == 1.0 else float(g_norm_2p_minus_2) ** (2.0 * p - 2.0)

    t1 = (a / n) * gpow * gamma_moment(0.0, beta, radius, n)
    t2 = (a / n) * gamma_moment(2.0 * p - 2.0, beta, radius, n)
    t3 = a * gpow * n**-2.0 * math.exp(-2.0 * beta * radius * n / bp1)
    s = 2.0 * p - 1.0
    if p == 1.0:
        k_p = 1.0  # Gamma(1, A) = e**-A <= e**(-A/2) exactly
    else:
        k_p = max(
            special.gamma(s) * math.exp(2.0 * p - 2.0),
            2.0 * (2.0 * (2.0 * p - 2.0) / math.e) ** (2.0 * p - 2.0),
        )
    t4 = (a / n) * (bp1 / (n * beta)) ** s * k_p * math.exp(-beta * radius * n / bp1)
    return float(t1 + t2 + t3 + t4)


# ---------------------------------------------------------------------------
# Interpolation inequality on the ball (in its sharp proof form)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InterpolationCheck:
    lhs: float
    rhs: float
    holds: bool


def one_minus_power_norm(beta: float, p: float) -> float:
    """||1 - y**beta||_p on [0,1]; closed form via the Beta function:
    integral (1-y**beta)**p dy = B(1/beta, p+1) / beta."""
    return float(
        math.exp(special.betaln(1.0 / beta, p + 1.0) - math.log(beta)) ** (1.0 / p)
    )


def interpolation_check(
    f: BoundaryFunction, p: float, grid_size: int = 2048
) -> InterpolationCheck:
    """Check  ||f||_p >= ||f||_inf * min(1, ||f||_inf/R)**(1/(beta p)) * ||1-y**beta||_p.

    Norms are grid trapezoids; a margin of 2R * grid**(-beta) is added to the
    favourable side so discretisation can never report a false violation
    (the grid sup-norm already under-estimates the true one, which only
    lowers the right side).
    """
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    hol = f.holder
    grid = uniform_grid(grid_size)
    vals = np.abs(np.asarray(f.evaluate(grid), dtype=float))
    sup = float(np.max(vals))
    lhs = float(np.trapezoid(vals**p, grid) ** (1.0 / p))
    rhs = sup * min(1.0, sup / hol.radius) ** (1.0 / (hol.beta * p)) * one_minus_power_norm(hol.beta, p)
    margin = 2.0 * hol.radius * float(grid_size) ** (-hol.beta)
    return InterpolationCheck(lhs=lhs, rhs=rhs, holds=bool(lhs + margin >= rhs))


# ---------------------------------------------------------------------------
# Rate exponents (point-process vs white-noise model)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentTable:
    beta: float
    p: float
    ppp_estimation: float
    ppp_lp_norm_and_testing: float
    gwn_testing: float


def rate_exponents(beta: float, p: float) -> ExponentTable:
    """Negated log-log slopes of the minimax rates as functions of (beta, p):

      point process, power functional:  (beta + 1/2) / (beta + 1)
      point process, norm and testing:  (beta + 1/(2p)) / (beta + 1)
      white noise, testing:             beta / (2*beta + 1/2 + (1/2 - 1/p)_+)
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    return ExponentTable(
        beta=beta,
        p=p,
        ppp_estimation=(beta + 0.5) / (beta + 1.0),
        ppp_lp_norm_and_testing=(beta + 0.5 / p) / (beta + 1.0),
        gwn_testing=beta / (2.0 * beta + 0.5 + max(0.5 - 1.0 / p, 0.0)),
    )
