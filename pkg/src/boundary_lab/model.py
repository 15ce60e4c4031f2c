"""Domain types shared across the package.

The model under study is a Poisson point process on [0,1] x R whose points
fill the region above an unknown boundary curve g uniformly at rate n.  The
curve is only assumed to satisfy a Hoelder condition

    |g(x) - g(y)| <= radius * |x - y|**beta,       0 < beta <= 1,

and every boundary constructor here guarantees that condition by
construction.  Functionals of the boundary have the form

    F(g) = integral_0^1 phi(g(x)) dx

for a weakly differentiable phi supplied together with its derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

#: Number of nodes of the shared uniform quadrature grid.  The curves this
#: package integrates are at best Hoelder continuous, so high-order rules
#: gain nothing over the composite trapezoid; the error is O(grid**-(1+beta)).
DEFAULT_GRID = 8192

#: Largest bump amplitude factor for which bump-sum boundaries are certified
#: members of the Hoelder ball (the triangular kernel has |K(u)-K(v)| <= 4|u-v|,
#: so 4c <= 1 suffices for every beta <= 1).
MAX_BUMP_AMPLITUDE = 0.25


class NoObservationsError(ValueError):
    """An operation that needs at least one observed point got none."""


def uniform_grid(grid_size: int) -> np.ndarray:
    if grid_size < 2:
        raise ValueError(f"grid_size must be >= 2, got {grid_size}")
    return np.linspace(0.0, 1.0, int(grid_size))


def trapezoid(values: np.ndarray, grid: np.ndarray) -> float:
    return float(np.trapezoid(values, grid))


@dataclass(frozen=True)
class HolderClass:
    """Smoothness ball: exponent ``beta`` in (0, 1] and radius > 0."""

    beta: float
    radius: float

    def __post_init__(self) -> None:
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not self.radius > 0.0:
            raise ValueError(f"radius must be positive, got {self.radius}")


class BoundaryFunction:
    """Evaluable curve on [0,1] claiming membership of a Hoelder ball.

    Subclasses implement :meth:`evaluate` (vectorised, deterministic) and
    :meth:`describe` (a JSON-serialisable record of the construction).
    """

    holder: HolderClass

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray | float:
        arr = np.asarray(x, dtype=float)
        out = self.evaluate(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out

    def describe(self) -> dict:
        raise NotImplementedError

    def grid_values(self, grid_size: int = DEFAULT_GRID) -> np.ndarray:
        return self.evaluate(uniform_grid(grid_size))

    def grid_max(self, grid_size: int = DEFAULT_GRID) -> float:
        return float(np.max(self.grid_values(grid_size)))


@dataclass(frozen=True)
class ConstantBoundary(BoundaryFunction):
    value: float
    holder: HolderClass

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def describe(self) -> dict:
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class PowerRampBoundary(BoundaryFunction):
    """f(x) = scale * x**beta; a member of the ball iff |scale| <= radius."""

    scale: float
    holder: HolderClass

    def __post_init__(self) -> None:
        if abs(self.scale) > self.holder.radius:
            raise ValueError("|scale| must not exceed the Hoelder radius")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.scale * np.power(np.abs(x), self.holder.beta)

    def describe(self) -> dict:
        return {"kind": "power_ramp", "scale": self.scale}


def triangular_kernel(u: np.ndarray) -> np.ndarray:
    """Unit-integral triangle K(u) = 4 min(u, 1-u) on [0,1], zero outside."""
    u = np.asarray(u, dtype=float)
    inside = (u >= 0.0) & (u <= 1.0)
    return np.where(inside, 4.0 * np.minimum(u, 1.0 - u), 0.0)


def kernel_norm(p: float) -> float:
    """L^p norm of the triangular kernel: ||K||_p = 2 / (p+1)**(1/p)."""
    return 2.0 / (p + 1.0) ** (1.0 / p)


@dataclass(frozen=True)
class BumpSumBoundary(BoundaryFunction):
    """Sum of disjoint triangular bumps, optionally riding on a base curve.

    Cell k of width h = 1/m carries theta_k * c * radius * h**beta * K((x-x_k)/h).
    Membership of the ball is certified by c <= 1/4.
    """

    theta: tuple[int, ...]
    c: float
    holder: HolderClass
    base: BoundaryFunction | None = None

    def __post_init__(self) -> None:
        if len(self.theta) < 1:
            raise ValueError("need at least one cell")
        if any(t not in (0, 1) for t in self.theta):
            raise ValueError("theta must be a 0/1 vector")
        if not 0.0 < self.c <= MAX_BUMP_AMPLITUDE:
            raise ValueError(
                f"bump amplitude factor must lie in (0, {MAX_BUMP_AMPLITUDE}] "
                f"to stay inside the Hoelder ball, got {self.c}"
            )

    @property
    def m(self) -> int:
        return len(self.theta)

    @property
    def h(self) -> float:
        return 1.0 / len(self.theta)

    @property
    def amplitude(self) -> float:
        return self.c * self.holder.radius * self.h ** self.holder.beta

    def bumps_only(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        m = self.m
        cell = np.minimum(np.floor(x * m).astype(int), m - 1)
        cell = np.maximum(cell, 0)
        frac = x * m - cell
        active = np.asarray(self.theta, dtype=float)[cell]
        return active * self.amplitude * triangular_kernel(frac)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        out = self.bumps_only(x)
        if self.base is not None:
            out = out + self.base.evaluate(x)
        return out

    def describe(self) -> dict:
        d = {"kind": "bump_sum", "theta": list(self.theta), "c": self.c}
        if self.base is not None:
            d["base"] = self.base.describe()
        return d


@dataclass(frozen=True)
class GridBoundary(BoundaryFunction):
    """Piecewise-linear interpolant through (xs, values) node pairs."""

    xs: tuple[float, ...]
    values: tuple[float, ...]
    holder: HolderClass

    def __post_init__(self) -> None:
        if len(self.xs) != len(self.values) or len(self.xs) < 2:
            raise ValueError("need matching node arrays with at least 2 nodes")
        if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("node abscissae must be strictly increasing")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.xs, self.values)

    def describe(self) -> dict:
        return {"kind": "grid", "nodes": len(self.xs)}


@dataclass(frozen=True)
class ShiftedBoundary(BoundaryFunction):
    base: BoundaryFunction
    offset: float

    @property
    def holder(self) -> HolderClass:  # type: ignore[override]
        return self.base.holder

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.base.evaluate(x) + self.offset

    def describe(self) -> dict:
        return {"kind": "shifted", "offset": self.offset, "base": self.base.describe()}


@dataclass(frozen=True)
class FunctionalSpec:
    """The pair (phi, phi') defining the target functional.

    ``phi`` must satisfy phi(u) = phi(0) + integral_0^u phi'(v) dv; that is the
    caller's responsibility for custom functionals (checked on a test grid for
    the built-in presets).  ``power`` is set for the |u|**p preset.
    """

    phi: Callable[[np.ndarray], np.ndarray]
    phi_prime: Callable[[np.ndarray], np.ndarray]
    label: str
    power: float | None = None


class _PowerPhi:
    """phi(u) = |u|**p, picklable for process pools."""

    def __init__(self, p: float):
        self.p = p

    def __call__(self, u):
        return np.abs(np.asarray(u, dtype=float)) ** self.p


class _PowerPhiPrime:
    """phi'(u) = p |u|**(p-1) sgn(u), with phi'(0) = 0."""

    def __init__(self, p: float):
        self.p = p

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        mag = np.zeros_like(u)
        nz = u != 0.0
        mag[nz] = self.p * np.abs(u[nz]) ** (self.p - 1.0)
        return mag * np.sign(u)


def power_functional(p: float) -> FunctionalSpec:
    """Preset turning F into the p-th power of the L^p norm."""
    if p < 1.0:
        raise ValueError(f"power must be >= 1, got {p}")
    return FunctionalSpec(
        phi=_PowerPhi(float(p)),
        phi_prime=_PowerPhiPrime(float(p)),
        label=f"power:{p:g}",
        power=float(p),
    )


@dataclass(frozen=True)
class ModelConfig:
    """Intensity scale n plus the boundary curve and its smoothness ball."""

    n: int
    boundary: BoundaryFunction
    holder: HolderClass = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"intensity scale must be a positive integer, got {self.n}")
        if self.holder is None:
            object.__setattr__(self, "holder", self.boundary.holder)
        elif self.holder != self.boundary.holder:
            raise ValueError("config holder must equal the boundary's holder")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def holder_membership_check(f: BoundaryFunction, grid_size: int) -> bool:
    """Spot-check |f(x_i) - f(x_j)| <= radius |x_i - x_j|**beta on a grid.

    Membership cannot be decided from finitely many evaluations; constructors
    certify it and this check guards against implementation slips.  A small
    float slack keeps members whose increments attain the bound exactly from
    failing by rounding.
    """
    grid = uniform_grid(grid_size)
    vals = f.evaluate(grid)
    hol = f.holder
    dx = np.abs(grid[:, None] - grid[None, :])
    df = np.abs(vals[:, None] - vals[None, :])
    allowed = hol.radius * dx ** hol.beta
    slack = 1e-10 * max(1.0, hol.radius, float(np.max(np.abs(vals))))
    return bool(np.all(df <= allowed + slack))


def functional_value(
    spec: FunctionalSpec, g: BoundaryFunction, grid_size: int = DEFAULT_GRID
) -> float:
    """Ground-truth F(g) by composite trapezoid quadrature of phi o g."""
    grid = uniform_grid(grid_size)
    vals = spec.phi(g.evaluate(grid))
    if not np.all(np.isfinite(vals)):
        raise ValueError(
            f"functional '{spec.label}' produced non-finite values on the grid"
        )
    return trapezoid(vals, grid)


# ---------------------------------------------------------------------------
# Boundary spec mini-language (CLI surface):  const:<v> | powb |
# bumps:<bitstring>:<c> | grid:<path.csv>
# ---------------------------------------------------------------------------

def parse_boundary(spec: str, holder: HolderClass) -> BoundaryFunction:
    if spec == "powb":
        return PowerRampBoundary(scale=holder.radius, holder=holder)
    head, _, rest = spec.partition(":")
    if head == "const":
        try:
            return ConstantBoundary(value=float(rest), holder=holder)
        except ValueError as exc:
            raise ValueError(f"bad constant boundary spec {spec!r}") from exc
    if head == "bumps":
        bits, _, cpart = rest.partition(":")
        if not bits or any(b not in "01" for b in bits):
            raise ValueError(f"bad bump bitstring in {spec!r}")
        c = float(cpart) if cpart else MAX_BUMP_AMPLITUDE
        return BumpSumBoundary(theta=tuple(int(b) for b in bits), c=c, holder=holder)
    if head == "grid":
        data = np.loadtxt(rest, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] < 2:
            raise ValueError(f"grid boundary file {rest!r} needs x,value columns")
        return GridBoundary(
            xs=tuple(float(v) for v in data[:, 0]),
            values=tuple(float(v) for v in data[:, 1]),
            holder=holder,
        )
    raise ValueError(f"unknown boundary spec {spec!r}")


def boundary_spec_string(g: BoundaryFunction) -> str:
    """Inverse of :func:`parse_boundary` where one exists."""
    d = g.describe()
    kind = d["kind"]
    if kind == "constant":
        return f"const:{d['value']:.17g}"
    if kind == "power_ramp":
        return "powb"
    if kind == "bump_sum" and "base" not in d:
        bits = "".join(str(t) for t in d["theta"])
        return f"bumps:{bits}:{d['c']:.17g}"
    raise ValueError(f"no mini-language spelling for boundary kind {kind!r}")


# ---------------------------------------------------------------------------
# Randomised corpus of certified ball members (used by the inequality checker)
# ---------------------------------------------------------------------------

def random_certified_boundary(rng: np.random.Generator, holder: HolderClass) -> BoundaryFunction:
    kind = rng.integers(0, 5)
    if kind == 0:
        return ConstantBoundary(value=float(rng.uniform(-2.0, 2.0)), holder=holder)
    if kind == 1:
        scale = float(rng.uniform(-1.0, 1.0)) * holder.radius
        return PowerRampBoundary(scale=scale, holder=holder)
    m = int(rng.integers(1, 17))
    theta = tuple(int(t) for t in rng.integers(0, 2, size=m))
    if not any(theta):
        theta = theta[:-1] + (1,)
    c = float(rng.uniform(0.01, MAX_BUMP_AMPLITUDE))
    bumps = BumpSumBoundary(theta=theta, c=c, holder=holder)
    if kind == 2:
        return bumps
    if kind == 3:
        return ShiftedBoundary(base=bumps, offset=float(rng.uniform(-1.0, 1.0)))
    ramp = PowerRampBoundary(scale=float(rng.uniform(0.0, 1.0)) * holder.radius, holder=holder)
    return ShiftedBoundary(base=ramp, offset=float(rng.uniform(-0.5, 0.5)))


def certified_corpus(count: int, holder: HolderClass, seed: int) -> list[BoundaryFunction]:
    from .streams import DOMAIN_CORPUS, rng_from_seed, substream_seed

    rng = rng_from_seed(substream_seed(seed, DOMAIN_CORPUS))
    return [random_certified_boundary(rng, holder) for _ in range(count)]
