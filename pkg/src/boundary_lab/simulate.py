"""Sampling from the Poisson point process above a boundary curve.

The process on [0,1] x R with intensity n * 1(y >= g(x)) is simulated on a
truncated window y <= y_cap: the point count is Poisson with mean
n * integral (y_cap - g), the x-coordinates follow the column-area density,
and y is uniform on [g(x), y_cap].  Truncation is harmless for everything
downstream as long as no discarded point could have touched the envelope;
``cap_valid`` records exactly that condition (min_j Y_j + radius <= y_cap).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import BoundaryFunction, ConstantBoundary, DEFAULT_GRID, ModelConfig, uniform_grid
from .streams import rng_from_seed


@dataclass(frozen=True)
class PppSample:
    """Observed points plus the truncation record.

    Identical (config, seed) pairs reproduce identical samples bit for bit.
    """

    xs: np.ndarray
    ys: np.ndarray
    n: int
    y_cap: float
    cap_valid: bool
    seed: int

    def __post_init__(self) -> None:
        self.xs.setflags(write=False)
        self.ys.setflags(write=False)

    @property
    def count(self) -> int:
        return len(self.xs)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.xs.tolist(), self.ys.tolist()))

    def is_empty(self) -> bool:
        return len(self.xs) == 0


def default_cap(config: ModelConfig, margin: float = 0.0) -> float:
    """Truncation ceiling max g + 2*radius + margin.

    The envelope never exceeds min_j Y_j + radius, so points above
    min_j Y_j + radius are irrelevant; the band of height radius above g has
    area radius, hence the no-effect condition fails with probability at most
    exp(-n * radius).
    """
    if margin < 0.0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    return config.boundary.grid_max(DEFAULT_GRID) + 2.0 * config.holder.radius + margin


def _inverse_cdf_x(rng: np.random.Generator, grid: np.ndarray, heights: np.ndarray, count: int) -> np.ndarray:
    """Draw x from the density proportional to the column heights.

    The density is treated as piecewise linear between grid nodes (exact for
    piecewise-linear boundaries whose kinks sit on nodes), so each cell's mass
    is a trapezoid and inversion within a cell solves a quadratic.
    """
    dx = grid[1] - grid[0]
    cell_mass = 0.5 * (heights[:-1] + heights[1:]) * dx
    cum = np.concatenate(([0.0], np.cumsum(cell_mass)))
    total = cum[-1]
    targets = rng.random(count) * total
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(cell_mass) - 1)
    local = targets - cum[idx]
    a = heights[idx]
    slope = (heights[idx + 1] - heights[idx]) / dx
    t = np.empty(count)
    flat = np.abs(slope) * dx <= 1e-12 * np.maximum(a, 1e-300)
    t[flat] = local[flat] / np.maximum(a[flat], 1e-300)
    curved = ~flat
    disc = a[curved] ** 2 + 2.0 * slope[curved] * local[curved]
    t[curved] = (np.sqrt(np.maximum(disc, 0.0)) - a[curved]) / slope[curved]
    t = np.clip(t, 0.0, dx)
    return grid[idx] + t


def sample_ppp(config: ModelConfig, y_cap: float, seed: int, grid_size: int = DEFAULT_GRID) -> PppSample:
    """Draw one sample of the truncated process, rejection-free."""
    grid = uniform_grid(grid_size)
    g_vals = config.boundary.evaluate(grid)
    g_max = float(np.max(g_vals))
    if y_cap < g_max:
        raise ValueError(
            f"y_cap={y_cap} lies below the boundary maximum {g_max} (grid check)"
        )
    heights = y_cap - g_vals
    area = float(np.trapezoid(heights, grid))
    rng = rng_from_seed(seed)
    count = int(rng.poisson(config.n * area)) if area > 0.0 else 0
    if count == 0:
        xs = np.empty(0)
        ys = np.empty(0)
        return PppSample(xs=xs, ys=ys, n=config.n, y_cap=y_cap, cap_valid=True, seed=seed)

    if isinstance(config.boundary, ConstantBoundary):
        xs = rng.random(count)
    else:
        xs = _inverse_cdf_x(rng, grid, heights, count)
    g_at_x = np.asarray(config.boundary.evaluate(xs), dtype=float)
    ys = g_at_x + (y_cap - g_at_x) * rng.random(count)

    if not (np.all(ys >= g_at_x) and np.all(ys <= y_cap)):
        raise AssertionError("internal error: emitted point outside the admissible region")
    cap_valid = bool(np.min(ys) + config.holder.radius <= y_cap)
    return PppSample(xs=xs, ys=ys, n=config.n, y_cap=y_cap, cap_valid=cap_valid, seed=seed)


# ---------------------------------------------------------------------------
# Persistence:  `x,y` CSV at 17 significant digits + JSON metadata sidecar.
# ---------------------------------------------------------------------------

def sidecar_path(csv_path: str | Path) -> Path:
    return Path(str(csv_path) + ".json")


def write_sample_csv(
    sample: PppSample, path: str | Path, boundary_spec: str | None = None,
    extra_meta: dict | None = None,
) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write("x,y\n")
        for x, y in zip(sample.xs, sample.ys):
            fh.write(f"{x:.17g},{y:.17g}\n")
    meta = {
        "n": sample.n,
        "y_cap": sample.y_cap,
        "seed": sample.seed,
        "cap_valid": sample.cap_valid,
        "count": sample.count,
    }
    if boundary_spec is not None:
        meta["boundary"] = boundary_spec
    if extra_meta:
        meta.update(extra_meta)
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_sample_csv(path: str | Path, n: int | None = None) -> tuple[PppSample, dict]:
    """Load a sample CSV and its sidecar; ``n`` overrides the sidecar value."""
    path = Path(path)
    meta: dict = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    if n is None:
        if "n" not in meta:
            raise ValueError(f"no sidecar metadata for {path}; pass the intensity scale explicitly")
        n = int(meta["n"])
    with path.open() as fh:
        header = fh.readline().strip()
        if header.split(",")[:2] != ["x", "y"]:
            raise ValueError(f"sample file {path} must start with an 'x,y' header")
        xs: list[float] = []
        ys: list[float] = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            sx, sy = line.split(",")[:2]
            xs.append(float(sx))
            ys.append(float(sy))
    sample = PppSample(
        xs=np.asarray(xs),
        ys=np.asarray(ys),
        n=n,
        y_cap=float(meta.get("y_cap", np.inf)),
        cap_valid=bool(meta.get("cap_valid", True)),
        seed=int(meta.get("seed", 0)),
    )
    return sample, meta
