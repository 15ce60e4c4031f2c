"""Plug-in threshold test for the boundary-norm testing problem.

The null "boundary equals g0" is rejected when the power-functional estimate
of the shifted observations reaches half the separation threshold:

    reject  iff  Fhat_p >= r_n**p / 2.

Alternatives separated in L^p norm by r_n well above the separation rate are
then detected with vanishing error on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functionals import estimate_functional
from .model import (
    BoundaryFunction,
    BumpSumBoundary,
    ConstantBoundary,
    DEFAULT_GRID,
    HolderClass,
    MAX_BUMP_AMPLITUDE,
    ModelConfig,
    functional_value,
    holder_membership_check,
    kernel_norm,
    power_functional,
)
from .simulate import PppSample, default_cap, sample_ppp
from .streams import DOMAIN_TEST, substream_seed


@dataclass(frozen=True)
class TestConfig:
    p: float
    r_n: float
    holder: HolderClass
    n: int
    g0: BoundaryFunction = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.p < 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.r_n <= 0.0:
            raise ValueError(f"separation radius must be positive, got {self.r_n}")
        if self.g0 is None:
            object.__setattr__(self, "g0", ConstantBoundary(0.0, self.holder))

    @property
    def threshold(self) -> float:
        return self.r_n**self.p / 2.0


def _shift_by_null(sample: PppSample, g0: BoundaryFunction) -> PppSample:
    """Reduce a general null to zero by subtracting g0 from the observations."""
    if isinstance(g0, ConstantBoundary) and g0.value == 0.0:
        return sample
    g0_at = np.asarray(g0.evaluate(sample.xs), dtype=float)
    shifted_ys = sample.ys - g0_at
    # conservative shifted ceiling: any truncated point sits above cap - max(g0)
    y_cap = sample.y_cap - g0.grid_max(DEFAULT_GRID)
    cap_valid = sample.cap_valid and (
        sample.is_empty() or bool(np.min(shifted_ys) + g0.holder.radius <= y_cap)
    )
    return PppSample(
        xs=sample.xs.copy(),
        ys=shifted_ys,
        n=sample.n,
        y_cap=y_cap,
        cap_valid=cap_valid,
        seed=sample.seed,
    )


def run_test(sample: PppSample, config: TestConfig, grid_size: int = DEFAULT_GRID) -> tuple[int, float]:
    """Returns (decision, statistic); decision 1 means reject the null."""
    shifted = _shift_by_null(sample, config.g0)
    result = estimate_functional(shifted, config.holder, power_functional(config.p), grid_size)
    statistic = result.value
    return (1 if statistic >= config.threshold else 0), statistic


def scaled_bump_alternative(
    target_norm: float, m: int, pattern: tuple[int, ...], holder: HolderClass, p: float
) -> BumpSumBoundary:
    """Bump sum with amplitude solved so that its L^p norm equals target_norm.

    Raises if the required amplitude factor would leave the certified range.
    """
    active = sum(pattern)
    if active == 0:
        raise ValueError("pattern must switch on at least one bump")
    if len(pattern) != m:
        raise ValueError("pattern length must equal m")
    h = 1.0 / m
    c = target_norm / (
        active ** (1.0 / p) * holder.radius * h ** (holder.beta + 1.0 / p) * kernel_norm(p)
    )
    if c > MAX_BUMP_AMPLITUDE:
        raise ValueError(
            f"target norm {target_norm} needs amplitude factor {c:.4g} > {MAX_BUMP_AMPLITUDE}; "
            "use more active bumps or coarser cells"
        )
    return BumpSumBoundary(theta=pattern, c=c, holder=holder)


def default_alternatives(config: TestConfig) -> list[BoundaryFunction]:
    """Alternative suite at the separation boundary: scaled bump sums in the
    least-favourable shape plus a constant of the same norm."""
    alts: list[BoundaryFunction] = [ConstantBoundary(config.r_n, config.holder)]
    for m, pattern in ((4, (1, 1, 1, 1)), (8, (1,) * 8)):
        try:
            alts.append(scaled_bump_alternative(config.r_n, m, pattern, config.holder, config.p))
        except ValueError:
            continue
    return alts


def decision_table(
    config: TestConfig,
    alternatives: list[BoundaryFunction],
    reps: int,
    seed: int,
    grid_size: int = DEFAULT_GRID,
) -> list[tuple[str, int, float, int]]:
    """Per-replication (hypothesis, rep, statistic, decision) rows for the
    null and each alternative; discarded replications carry nan statistics."""
    rows: list[tuple[str, int, float, int]] = []
    for stream, (label, boundary) in enumerate(
        [("null", config.g0)] + [(f"alt{i}", g) for i, g in enumerate(alternatives)]
    ):
        model = ModelConfig(n=config.n, boundary=boundary)
        y_cap = default_cap(model)
        for rep in range(reps):
            sample = sample_ppp(model, y_cap, substream_seed(seed, DOMAIN_TEST, stream, rep))
            if sample.is_empty() or not sample.cap_valid:
                rows.append((label, rep, math.nan, 0))
                continue
            decision, statistic = run_test(sample, config, grid_size)
            rows.append((label, rep, statistic, decision))
    return rows


@dataclass(frozen=True)
class ErrorExperimentResult:
    type1: float
    type1_stderr: float
    type2_rates: tuple[float, ...]
    worst_type2: float
    worst_type2_stderr: float
    reps: int
    discarded: int


def _rejection_rate(
    boundary: BoundaryFunction, config: TestConfig, reps: int, seed: int, stream: int,
    grid_size: int,
) -> tuple[float, float, int]:
    model = ModelConfig(n=config.n, boundary=boundary)
    y_cap = default_cap(model)
    rejected = 0
    used = 0
    discarded = 0
    for rep in range(reps):
        sample = sample_ppp(model, y_cap, substream_seed(seed, DOMAIN_TEST, stream, rep))
        if sample.is_empty() or not sample.cap_valid:
            discarded += 1
            continue
        decision, _ = run_test(sample, config, grid_size)
        rejected += decision
        used += 1
    rate = rejected / used if used else math.nan
    se = math.sqrt(rate * (1.0 - rate) / used) if used else math.nan
    return rate, se, discarded


def error_experiment(
    config: TestConfig,
    alternatives: list[BoundaryFunction],
    reps: int,
    seed: int,
    grid_size: int = DEFAULT_GRID,
) -> ErrorExperimentResult:
    """Monte Carlo error rates of the plug-in test.

    type1 is the rejection rate under the null boundary; worst_type2 the
    largest acceptance rate over the alternative suite.  Alternatives must be
    ball members with norm at least r_n (validated here).
    """
    if reps < 1:
        raise ValueError(f"need at least one replication, got {reps}")
    target = power_functional(config.p)
    for g in alternatives:
        if not holder_membership_check(g, 256):
            raise ValueError(f"alternative {g.describe()} fails the ball membership check")
        norm = functional_value(target, g) ** (1.0 / config.p)
        if norm < config.r_n * (1.0 - 1e-6):
            raise ValueError(
                f"alternative {g.describe()} has norm {norm:.6g} below the separation radius {config.r_n:.6g}"
            )

    type1, type1_se, disc = _rejection_rate(config.g0, config, reps, seed, 0, grid_size)
    type2: list[float] = []
    type2_se: list[float] = []
    for i, g in enumerate(alternatives):
        rate, se, d = _rejection_rate(g, config, reps, seed, i + 1, grid_size)
        type2.append(1.0 - rate)
        type2_se.append(se)
        disc += d
    worst = int(np.argmax(type2)) if type2 else -1
    return ErrorExperimentResult(
        type1=type1,
        type1_stderr=type1_se,
        type2_rates=tuple(type2),
        worst_type2=type2[worst] if type2 else math.nan,
        worst_type2_stderr=type2_se[worst] if type2 else math.nan,
        reps=reps,
        discarded=disc,
    )
