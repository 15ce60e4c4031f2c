"""Replication engine: risk tables over an n-grid and rate-slope fits.

Each (n, replication) pair owns a derived random stream, so the engine is
deterministic for any worker count and any execution order; reductions always
happen in fixed index order.  Parallelism uses a process pool over contiguous
replication blocks.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bounds import variance_rhs
from .envelope import Envelope, ExceedanceTable
from .functionals import estimate_functional
from .model import (
    BoundaryFunction,
    DEFAULT_GRID,
    FunctionalSpec,
    ModelConfig,
    functional_value,
    power_functional,
)
from .simulate import default_cap, sample_ppp
from .streams import DOMAIN_RISK, substream_seed

ESTIMATORS = ("fphi", "fp", "that")

RISK_COLUMNS = (
    "n",
    "reps",
    "mean_estimate",
    "bias",
    "mse",
    "rmse",
    "mean_abs_error",
    "var_empirical",
    "var_rhs",
    "discarded",
)


@dataclass(frozen=True)
class RiskRow:
    n: int
    reps: int
    mean_estimate: float
    bias: float
    mse: float
    rmse: float
    mean_abs_error: float
    var_empirical: float
    var_rhs: float
    discarded: int


@dataclass(frozen=True)
class RiskTable:
    rows: tuple[RiskRow, ...]
    estimator: str
    truth: tuple[float, ...]
    valid: bool


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    slope_stderr: float
    target_exponent: float
    within_tolerance: bool


@dataclass(frozen=True)
class _BlockTask:
    boundary: BoundaryFunction
    spec: FunctionalSpec
    estimator: str
    n: int
    seed: int
    rep_start: int
    rep_stop: int
    grid_size: int
    margin: float
    x_grid: np.ndarray
    u_grid: np.ndarray


def _run_block(task: _BlockTask) -> tuple[int, np.ndarray, np.ndarray, np.ndarray, int]:
    """One contiguous block of replications for a single n."""
    config = ModelConfig(n=task.n, boundary=task.boundary)
    y_cap = default_cap(config, task.margin)
    g_at_x = np.asarray(task.boundary.evaluate(task.x_grid), dtype=float)
    nreps = task.rep_stop - task.rep_start
    estimates = np.full(nreps, np.nan)
    ok = np.zeros(nreps, dtype=bool)
    counts = np.zeros((len(task.x_grid), len(task.u_grid)), dtype=np.int64)
    discarded = 0
    for i, rep in enumerate(range(task.rep_start, task.rep_stop)):
        sample = sample_ppp(config, y_cap, substream_seed(task.seed, DOMAIN_RISK, task.n, rep))
        if sample.is_empty() or not sample.cap_valid:
            discarded += 1
            continue
        result = estimate_functional(sample, config.holder, task.spec, task.grid_size)
        if task.estimator == "that":
            estimates[i] = max(result.value, 0.0) ** (1.0 / task.spec.power)
        else:
            estimates[i] = result.value
        ok[i] = True
        env = Envelope(sample, config.holder)
        dev = env.evaluate(task.x_grid) - g_at_x
        counts += dev[:, None] >= task.u_grid[None, :]
    return task.rep_start, estimates, ok, counts, discarded


def run_risk_grid(
    boundary: BoundaryFunction,
    estimator: str,
    ns: list[int],
    reps: int,
    seed: int,
    spec: FunctionalSpec | None = None,
    p: float | None = None,
    grid_size: int = DEFAULT_GRID,
    margin: float = 0.0,
    workers: int = 1,
    exceedance_shape: tuple[int, int] = (17, 33),
) -> RiskTable:
    """Monte Carlo risk estimates of one estimator across an n-grid.

    ``estimator`` is one of fphi (general functional, needs ``spec``), fp
    (power functional, needs ``p``) or that (clipped norm estimate, needs
    ``p``).  var_rhs is the variance identity evaluated on an exceedance
    table accumulated from the same replications.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")
    if reps < 100:
        raise ValueError(f"need at least 100 replications per n, got {reps}")
    if len(ns) < 1 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("ns must be a nonempty strictly increasing list")
    if estimator == "fphi":
        if spec is None:
            raise ValueError("estimator fphi needs a FunctionalSpec")
    else:
        if p is None:
            raise ValueError(f"estimator {estimator} needs the power p")
        spec = power_functional(p)

    hol = boundary.holder
    nx, nu = exceedance_shape
    x_grid = np.linspace(0.0, 1.0, nx)
    u_grid = np.linspace(0.0, 2.0 * hol.radius, nu)

    base_truth = functional_value(spec, boundary, grid_size)
    truth = base_truth ** (1.0 / spec.power) if estimator == "that" else base_truth

    rows: list[RiskRow] = []
    valid = True
    block = max(1, math.ceil(reps / max(1, workers * 4)))
    with _pool(workers) as pool:
        for n in ns:
            tasks = [
                _BlockTask(
                    boundary=boundary,
                    spec=spec,
                    estimator=estimator,
                    n=n,
                    seed=seed,
                    rep_start=s,
                    rep_stop=min(s + block, reps),
                    grid_size=grid_size,
                    margin=margin,
                    x_grid=x_grid,
                    u_grid=u_grid,
                )
                for s in range(0, reps, block)
            ]
            estimates = np.full(reps, np.nan)
            ok = np.zeros(reps, dtype=bool)
            counts = np.zeros((nx, nu), dtype=np.int64)
            discarded = 0
            results = pool.map(_run_block, tasks) if pool else map(_run_block, tasks)
            for start, est, okb, cnt, disc in results:
                estimates[start : start + len(est)] = est
                ok[start : start + len(est)] = okb
                counts += cnt
                discarded += disc
            used = int(np.count_nonzero(ok))
            if used == 0:
                raise RuntimeError(f"all replications discarded at n={n}")
            if discarded / reps >= 0.01:
                warnings.warn(f"n={n}: {discarded}/{reps} replications discarded; run flagged invalid")
                valid = False
            est_used = estimates[ok]
            err = est_used - truth
            table = ExceedanceTable(x=x_grid, u=u_grid, p_hat=counts / used, reps=used, discarded=discarded)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rhs = variance_rhs(ModelConfig(n=n, boundary=boundary), spec, table)
            rows.append(
                RiskRow(
                    n=n,
                    reps=used,
                    mean_estimate=float(np.mean(est_used)),
                    bias=float(np.mean(err)),
                    mse=float(np.mean(err**2)),
                    rmse=float(np.sqrt(np.mean(err**2))),
                    mean_abs_error=float(np.mean(np.abs(err))),
                    var_empirical=float(np.var(est_used, ddof=1)) if used > 1 else 0.0,
                    var_rhs=rhs,
                    discarded=discarded,
                )
            )
    return RiskTable(rows=tuple(rows), estimator=estimator, truth=(truth,) * len(rows), valid=valid)


class _NullPool:
    def __enter__(self):
        return None

    def __exit__(self, *exc):
        return False


def _pool(workers: int):
    if workers <= 1:
        return _NullPool()
    return ProcessPoolExecutor(max_workers=workers)


def resolve_workers(cli_value: int | None = None) -> int:
    """Worker count: --threads flag beats BOUNDARY_LAB_THREADS beats 1."""
    if cli_value is not None:
        return max(1, cli_value)
    env = os.environ.get("BOUNDARY_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"BOUNDARY_LAB_THREADS must be an integer, got {env!r}") from exc
    return 1


def fit_rate_slope(table: RiskTable, column: str, target: float, tol: float) -> RateFit:
    """OLS of log(risk column) on log(n); the slope should be close to -target."""
    if column not in ("rmse", "mean_abs_error"):
        raise ValueError(f"column must be rmse or mean_abs_error, got {column!r}")
    if len(table.rows) < 4:
        raise ValueError(f"need at least 4 rows to fit a rate, got {len(table.rows)}")
    risks = np.asarray([getattr(r, column) for r in table.rows], dtype=float)
    if np.any(risks <= 0.0):
        raise ValueError("risk values must be positive to fit a log-log slope")
    x = np.log(np.asarray([r.n for r in table.rows], dtype=float))
    y = np.log(risks)
    k = len(x)
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    sigma2 = float(np.sum(resid**2) / (k - 2)) if k > 2 else 0.0
    stderr = math.sqrt(sigma2 / sxx)
    return RateFit(
        slope=slope,
        intercept=intercept,
        slope_stderr=stderr,
        target_exponent=target,
        within_tolerance=bool(abs(slope - (-target)) <= tol),
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def write_risk_csv(table: RiskTable, path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(",".join(RISK_COLUMNS) + "\n")
        for r in table.rows:
            fh.write(
                f"{r.n},{r.reps},{r.mean_estimate:.17g},{r.bias:.17g},{r.mse:.17g},"
                f"{r.rmse:.17g},{r.mean_abs_error:.17g},{r.var_empirical:.17g},"
                f"{r.var_rhs:.17g},{r.discarded}\n"
            )


def read_risk_csv(path: str | Path) -> RiskTable:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != RISK_COLUMNS:
            raise ValueError(f"risk file {path} must carry the header {','.join(RISK_COLUMNS)}")
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            rows.append(
                RiskRow(
                    n=int(parts[0]),
                    reps=int(parts[1]),
                    mean_estimate=float(parts[2]),
                    bias=float(parts[3]),
                    mse=float(parts[4]),
                    rmse=float(parts[5]),
                    mean_abs_error=float(parts[6]),
                    var_empirical=float(parts[7]),
                    var_rhs=float(parts[8]),
                    discarded=int(parts[9]),
                )
            )
    return RiskTable(rows=tuple(rows), estimator="", truth=(), valid=True)
