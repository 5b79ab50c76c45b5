"""Weighted aggregation of belief quantiles into realized-return
distributions, plus wage-transfer cost curves and cost elasticities."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .curves import Band, ReturnsCurve

#: default quantile grid for the tau-average
DEFAULT_TAU_GRID = np.round(np.arange(0.05, 0.951, 0.05), 10)

#: the four reported (alpha, beta) scenarios
DEFAULT_BETA_SCHEMES = ((1.0, 1.0), (2.0, 2.0), (5.0, 2.0), (2.0, 5.0))


@dataclass(frozen=True)
class WeightScheme:
    """Quantile weights omega_tau on a tau grid, normalised to mean one."""

    kind: str  # "uniform" | "beta" | "point"
    tau_grid: np.ndarray
    weights: np.ndarray
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        tau = np.asarray(self.tau_grid, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if tau.shape != w.shape:
            raise ValueError("tau grid and weights must align")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(np.mean(w) - 1.0) > 1e-9:
            raise ValueError("weights must average to one")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "weights", w)

    @property
    def label(self) -> str:
        if self.kind == "beta":
            return f"beta({self.alpha:g},{self.beta:g})"
        return self.kind


def make_weights(
    kind: str = "uniform",
    alpha: float = 1.0,
    beta: float = 1.0,
    tau_grid: np.ndarray | None = None,
    point: float = 0.5,
) -> WeightScheme:
    """Build a weight scheme on the tau grid.

    ``beta`` evaluates the Beta(alpha, beta) density on the grid and
    normalises it to mean one; ``uniform`` is all ones; ``point`` puts all
    mass on the grid point nearest ``point`` (degenerate beta limit).
    """
    tau = DEFAULT_TAU_GRID if tau_grid is None else np.asarray(tau_grid, dtype=float)
    if np.any(tau <= 0) or np.any(tau >= 1):
        raise ValueError("tau grid must lie strictly inside (0, 1)")
    if kind == "uniform":
        w = np.ones(len(tau))
    elif kind == "beta":
        if alpha <= 0 or beta <= 0:
            raise ValueError("beta parameters must be positive")
        w = stats.beta.pdf(tau, alpha, beta)
        w = w / np.mean(w)
    elif kind == "point":
        w = np.zeros(len(tau))
        w[int(np.argmin(np.abs(tau - point)))] = float(len(tau))
    else:
        raise ValueError(f"unknown weight kind {kind!r}")
    return WeightScheme(
        kind=kind, tau_grid=tau, weights=w, alpha=alpha if kind == "beta" else None,
        beta=beta if kind == "beta" else None,
    )


def predict_fs(fq_curves: list, scheme: WeightScheme) -> ReturnsCurve:
    """Predicted cdf of realized returns: the weighted tau-average of F_Q.

    ``fq_curves`` must hold one curve per grid tau, in grid order, on a
    common s grid.
    """
    if len(fq_curves) != len(scheme.tau_grid):
        raise ValueError("need one F_Q curve per tau grid point")
    grid = fq_curves[0].grid
    values = np.zeros(len(grid))
    mask = None
    for curve, w in zip(fq_curves, scheme.weights):
        if curve.grid.shape != grid.shape or not np.allclose(curve.grid, grid):
            raise ValueError("F_Q curves are not on a common grid")
        values += (w / len(scheme.tau_grid)) * curve.values
        if curve.mask is not None:
            mask = curve.mask if mask is None else (mask | curve.mask)
    return ReturnsCurve(
        grid=grid,
        values=np.clip(values, 0.0, 1.0),
        label=f"FS[{scheme.label}]",
        mask=mask,
    )


def invert_fs(fs: ReturnsCurve, q: float) -> float:
    """Generalised inverse of F_S with linear interpolation between knots.

    Levels above the curve's maximum return the left edge of the terminal
    flat (the cheapest transfer achieving the attainable share).
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must be in [0, 1]")
    vals = fs.values
    grid = fs.grid
    q_eff = min(q, float(vals[-1]))
    if q_eff <= vals[0]:
        return float(grid[0])
    i = int(np.searchsorted(vals, q_eff, side="left"))
    if vals[i] == q_eff:
        return float(grid[i])
    lo, hi = vals[i - 1], vals[i]
    frac = (q_eff - lo) / (hi - lo)
    return float(grid[i - 1] + frac * (grid[i] - grid[i - 1]))


@dataclass(frozen=True)
class CostTable:
    """Transfer cost curve over a grid of expansion fractions x.

    share = F_S(0) + x; transfer = F_S^{-1}(share); cost_multiplier is the
    shaded-area total transfer cost share x transfer; wage_bill is
    share x (baseline wage + transfer) when a baseline wage is supplied.
    """

    x: np.ndarray
    share: np.ndarray
    transfer: np.ndarray
    cost_multiplier: np.ndarray
    wage_bill: np.ndarray | None = None
    baseline_wage: float | None = None
    scheme: str = ""

    def to_rows(self) -> list:
        rows = []
        for i in range(len(self.x)):
            rows.append(
                {
                    "x": self.x[i],
                    "transfer_kcfa": self.transfer[i],
                    "cost_multiplier": self.cost_multiplier[i],
                    "scheme": self.scheme,
                }
            )
        return rows


def transfer_cost_curve(
    fs: ReturnsCurve,
    x_grid,
    baseline_wage: float | None = None,
    scheme: str = "",
) -> CostTable:
    """Marginal transfer and total cost of expanding hires by fraction x.

    The transfer is paid uniformly, including to infra-marginal hires, so
    the total cost at expansion x is (F_S(0) + x) * F_S^{-1}(F_S(0) + x).
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if np.any(x_grid < 0) or np.any(np.diff(x_grid) <= 0):
        raise ValueError("x grid must be nonnegative and strictly increasing")
    f0 = float(fs.values[np.argmin(np.abs(fs.grid))])
    if not np.any(np.isclose(fs.grid, 0.0)):
        raise ValueError("F_S curve must be evaluated at s = 0")
    share = f0 + x_grid
    transfer = np.array([invert_fs(fs, min(q, 1.0)) for q in share])
    cost = share * transfer
    bill = None
    if baseline_wage is not None:
        if baseline_wage <= 0:
            raise ValueError("baseline wage must be positive")
        bill = share * (baseline_wage + transfer)
    return CostTable(
        x=x_grid,
        share=share,
        transfer=transfer,
        cost_multiplier=cost,
        wage_bill=bill,
        baseline_wage=baseline_wage,
        scheme=scheme,
    )


def cost_elasticity(table: CostTable) -> float:
    """Relative wage-bill increase per relative increase in hires.

    Evaluated between x = 0 and the smallest positive grid point; without
    skill rents (zero transfers) this is one by construction.
    """
    if table.wage_bill is None:
        raise ValueError("cost_elasticity needs a table built with a baseline wage")
    if not np.isclose(table.x[0], 0.0) or len(table.x) < 2:
        raise ValueError("table must start at x = 0 and have a positive grid point")
    if table.share[0] <= 0.0:
        raise ValueError("baseline hiring share is zero; elasticity is undefined")
    bill0, bill1 = table.wage_bill[0], table.wage_bill[1]
    share0, share1 = table.share[0], table.share[1]
    d_share = (share1 - share0) / share0
    if d_share == 0.0:
        raise ValueError("no change in hires between the first two grid points")
    return float(((bill1 - bill0) / bill0) / d_share)


def write_cost_csv(path, tables: list, header_comment: str | None = None) -> None:
    """Emit cost tables as CSV (x, transfer_kcfa, cost_multiplier, scheme)."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.DictWriter(
            fh, fieldnames=["x", "transfer_kcfa", "cost_multiplier", "scheme"]
        )
        writer.writeheader()
        for table in tables:
            for row in table.to_rows():
                writer.writerow(row)
