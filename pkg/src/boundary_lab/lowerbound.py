"""Bernoulli bump priors and the chi-square certificate.

The least favourable configurations for this model are sums of small
triangular bumps switched on by independent Bernoulli variables.  Against the
base measure the likelihood ratio of the resulting mixture factorises over
cells,

    LR = prod_k ( 1 - p_k + p_k * e**(n*I) * 1(every point in cell k clears bump k) ),

with I = c * radius * h**(beta+1) the bump integral, and its chi-square
divergence has the exact product form prod_k (1 + p_k**2 (e**(n*I) - 1)) - 1.
When the weights satisfy sum p_k**2 = 1 that value is dominated by
exp(exp(n*I) - 1) - 1, which is the quantity certifying that no test can
separate the base from the mixture once it is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    BoundaryFunction,
    BumpSumBoundary,
    ConstantBoundary,
    DEFAULT_GRID,
    FunctionalSpec,
    HolderClass,
    MAX_BUMP_AMPLITUDE,
    ModelConfig,
    kernel_norm,
    triangular_kernel,
    uniform_grid,
)
from .simulate import PppSample, sample_ppp
from .streams import DOMAIN_PRIOR, rng_from_seed, substream_seed

#: Normalisation slack accepted when the certificate branch assumes sum p**2 = 1.
NORMALISATION_TOL = 1e-12


@dataclass(frozen=True)
class PriorConfig:
    """Bump prior: m cells of width h = 1/m, amplitude factor c, Bernoulli
    weights, and the base curve the bumps ride on."""

    m: int
    c: float
    holder: HolderClass
    weights: tuple[float, ...]
    base: BoundaryFunction = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"need at least one cell, got m={self.m}")
        if len(self.weights) != self.m:
            raise ValueError("need one weight per cell")
        if any(not 0.0 <= w <= 1.0 for w in self.weights):
            raise ValueError("weights must lie in [0, 1]")
        if not 0.0 < self.c <= MAX_BUMP_AMPLITUDE:
            raise ValueError(
                f"amplitude factor must lie in (0, {MAX_BUMP_AMPLITUDE}] "
                "so the bump sum is a certified ball member"
            )
        if self.base is None:
            object.__setattr__(self, "base", ConstantBoundary(0.0, self.holder))

    @property
    def h(self) -> float:
        return 1.0 / self.m

    @property
    def cell_integral(self) -> float:
        """integral of one bump over its cell: c * radius * h**(beta+1)."""
        return self.c * self.holder.radius * self.h ** (self.holder.beta + 1.0)

    @property
    def normalised(self) -> bool:
        return abs(sum(w * w for w in self.weights) - 1.0) <= NORMALISATION_TOL

    def boundary_for(self, theta: tuple[int, ...]) -> BumpSumBoundary:
        base = None if isinstance(self.base, ConstantBoundary) and self.base.value == 0.0 else self.base
        return BumpSumBoundary(theta=theta, c=self.c, holder=self.holder, base=base)


def uniform_weights(m: int) -> tuple[float, ...]:
    """p_k = 1/sqrt(m); the identity choice with sum p**2 = 1."""
    return tuple([1.0 / math.sqrt(m)] * m)


def matched_weights(
    config_m: int,
    spec: FunctionalSpec,
    base: BoundaryFunction,
    cell_grid: int = 256,
) -> tuple[float, ...]:
    """Weights proportional to a_k = <phi' o base, K_h(. - (k-1)h)>.

    Where phi' o base changes sign the positive part is kept and normalised
    (the mirror-image negative-part choice certifies the other one-sided
    bound); weights are clipped into [0, 1].
    """
    m = config_m
    h = 1.0 / m
    a = np.empty(m)
    for k in range(m):
        t = np.linspace(0.0, 1.0, cell_grid)
        x = (k + t) * h
        integrand = np.asarray(spec.phi_prime(base.evaluate(x)), dtype=float) * triangular_kernel(t) / h
        a[k] = np.trapezoid(integrand, x)
    a_plus = np.maximum(a, 0.0)
    norm = float(np.linalg.norm(a_plus))
    if norm == 0.0:
        a_plus = np.maximum(-a, 0.0)
        norm = float(np.linalg.norm(a_plus))
    if norm == 0.0:
        raise ValueError("matched weights are identically zero; use uniform weights instead")
    return tuple(np.clip(a_plus / norm, 0.0, 1.0).tolist())


def draw_prior(config: PriorConfig, seed: int) -> tuple[tuple[int, ...], BumpSumBoundary]:
    """theta_k ~ Bernoulli(p_k) independently; returns theta and base + bumps."""
    rng = rng_from_seed(substream_seed(seed, DOMAIN_PRIOR))
    draws = rng.random(config.m) < np.asarray(config.weights)
    theta = tuple(int(t) for t in draws)
    return theta, config.boundary_for(theta)


def bump_sum_norm(active: int, c: float, radius: float, h: float, beta: float, p: float) -> float:
    """Norm display for a sum of disjoint bumps:
    ||g||_p = active**(1/p) * c * radius * h**(beta + 1/p) * ||K||_p."""
    if active == 0:
        return 0.0
    return active ** (1.0 / p) * c * radius * h ** (beta + 1.0 / p) * kernel_norm(p)


def theta_norm(config: PriorConfig, theta: tuple[int, ...], p: float) -> float:
    hol = config.holder
    return bump_sum_norm(sum(theta), config.c, hol.radius, config.h, hol.beta, p)


def _cell_clear_flags(sample: PppSample, config: PriorConfig) -> np.ndarray:
    """Per cell: does every point of the cell sit on or above base + bump?"""
    m = config.m
    if sample.is_empty():
        return np.ones(m, dtype=bool)
    x = sample.xs
    cell = np.minimum(np.floor(x * m).astype(int), m - 1)
    cell = np.maximum(cell, 0)
    frac = x * m - cell
    amplitude = config.c * config.holder.radius * config.h ** config.holder.beta
    bump_vals = amplitude * triangular_kernel(frac)
    base_vals = np.asarray(config.base.evaluate(x), dtype=float)
    violating = sample.ys < base_vals + bump_vals
    viol_count = np.bincount(cell[violating], minlength=m)
    return viol_count == 0


def likelihood_ratio(sample: PppSample, config: PriorConfig) -> float:
    """Exact mixture likelihood ratio against the base measure.

    Requires the sample's cap to exceed every base + bump value so the cell
    indicators are decidable from the retained points.
    """
    needed = config.base.grid_max(DEFAULT_GRID) + 2.0 * config.c * config.holder.radius * config.h ** config.holder.beta
    if sample.y_cap < needed:
        raise ValueError(
            f"sample cap {sample.y_cap} is below the bump ceiling {needed}; indicators undecidable"
        )
    clear = _cell_clear_flags(sample, config)
    boost = math.exp(sample.n * config.cell_integral)
    weights = np.asarray(config.weights)
    factors = 1.0 - weights + weights * boost * clear
    return float(np.prod(factors))


@dataclass(frozen=True)
class Chi2Report:
    exact_value: float
    lemma_bound: float
    mc_estimate: float
    mc_stderr: float
    lr_mean: float
    lr_stderr: float
    reps: int


def chi2_certificate(config: PriorConfig, n: int, mc_reps: int, seed: int) -> Chi2Report:
    """Exact chi-square of the bump mixture, its certificate bound, and an
    optional Monte Carlo cross-check under the base measure (mc_reps = 0
    skips the simulation)."""
    if mc_reps < 0:
        raise ValueError("mc_reps must be >= 0")
    a = n * config.cell_integral
    boost = math.exp(a)
    weights = np.asarray(config.weights)
    exact = float(np.prod(1.0 + weights**2 * (boost - 1.0))) - 1.0
    lemma = math.exp(boost - 1.0) - 1.0 if config.normalised else math.nan

    mc_est = math.nan
    mc_se = math.nan
    lr_mean = math.nan
    lr_se = math.nan
    if mc_reps > 0:
        model = ModelConfig(n=n, boundary=config.base)
        bump_peak = 2.0 * config.c * config.holder.radius * config.h ** config.holder.beta
        y_cap = config.base.grid_max(DEFAULT_GRID) + bump_peak + 0.25 * config.holder.radius
        lrs = np.empty(mc_reps)
        for rep in range(mc_reps):
            rep_seed = substream_seed(seed, DOMAIN_PRIOR, 1, rep)
            sample = sample_ppp(model, y_cap, rep_seed)
            lrs[rep] = likelihood_ratio(sample, config)
        sq = lrs**2
        mc_est = float(np.mean(sq)) - 1.0
        mc_se = float(np.std(sq, ddof=1) / math.sqrt(mc_reps)) if mc_reps > 1 else math.inf
        lr_mean = float(np.mean(lrs))
        lr_se = float(np.std(lrs, ddof=1) / math.sqrt(mc_reps)) if mc_reps > 1 else math.inf
    return Chi2Report(
        exact_value=exact,
        lemma_bound=lemma,
        mc_estimate=mc_est,
        mc_stderr=mc_se,
        lr_mean=lr_mean,
        lr_stderr=lr_se,
        reps=mc_reps,
    )


def prior_geometry(config: PriorConfig, r_target: float, p: float) -> tuple[int, float]:
    """Cell count and width for a prior aimed at alternatives of norm r_target.

    The width follows h = c1 * r_target**(1/(beta + 1/(2p))).  Solving the
    typical-norm display (sqrt(m)/2 active bumps) for h gives
    c1 = (2**(1/p) / (c * radius * ||K||_p))**(1/(beta+1/(2p))); that value is
    capped at 1 because the uncapped width leaves the chi-square certificate
    useless at practical scales (see the decisions ledger), while the capped
    one keeps the certificate small whenever r_target sits below the
    separation rate.
    """
    if r_target <= 0.0:
        raise ValueError(f"r_target must be positive, got {r_target}")
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    hol = config.holder
    expo = 1.0 / (hol.beta + 0.5 / p)
    c1_matched = (2.0 ** (1.0 / p) / (config.c * hol.radius * kernel_norm(p))) ** expo
    c1 = min(c1_matched, 1.0)
    h_raw = c1 * r_target**expo
    m = int(round(1.0 / h_raw))
    if m < 1:
        raise ValueError(f"r_target={r_target} is infeasible: it asks for fewer than one cell")
    return m, 1.0 / m


def estimation_prior_cells(c: float, radius: float, n: int, beta: float) -> int:
    """Cell-count preset for the estimation lower bound: floor(2 * (c*R*n)**(1/(beta+1)))."""
    return int(math.floor(2.0 * (c * radius * n) ** (1.0 / (beta + 1.0))))
