"""Curve containers shared by the estimation, oracle, and policy layers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import isotonic_regression

from .dataset import Scenario, SupportSpec, in_identified_region


def as_mixture(x_tilde) -> list:
    """Normalise a scenario / list of (scenario, mass) pairs to unit mass."""
    if isinstance(x_tilde, Scenario):
        return [(x_tilde, 1.0)]
    pairs = [(x, float(w)) for x, w in x_tilde]
    if not pairs:
        raise ValueError("empty scenario mixture")
    total = sum(w for _, w in pairs)
    return [(x, w / total) for x, w in pairs]


def isotonic_project(values: np.ndarray) -> np.ndarray:
    """Project onto nondecreasing sequences (pool adjacent violators)."""
    return isotonic_regression(np.asarray(values, dtype=float)).x


@dataclass(frozen=True)
class Band:
    lower: np.ndarray
    upper: np.ndarray
    level: float
    kind: str  # "pointwise" | "uniform"


@dataclass(frozen=True)
class ReturnsCurve:
    """A cdf-like function on a grid, with optional confidence band.

    ``grid`` is in kCFA for return/WTP distributions and dimensionless for
    curves indexed by probabilities. ``mask`` flags extrapolated grid points
    (outside the identified region).
    """

    grid: np.ndarray
    values: np.ndarray
    label: str = ""
    mask: np.ndarray | None = None
    band: Band | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.shape != values.shape:
            raise ValueError("grid and values must have the same shape")
        if np.any(values < -1e-9) or np.any(values > 1 + 1e-9):
            raise ValueError("curve values must lie in [0, 1]")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", np.clip(values, 0.0, 1.0))
        if self.mask is not None:
            object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))

    def with_band(self, band: Band) -> "ReturnsCurve":
        return replace(self, band=band)

    def restricted_values(self) -> np.ndarray:
        """Values on the identified (unmasked) region."""
        if self.mask is None:
            return self.values
        return self.values[~self.mask]

    def to_rows(self) -> list:
        """Rows for the curve CSV: one dict per grid point."""
        rows = []
        for i, (g, v) in enumerate(zip(self.grid, self.values)):
            rows.append(
                {
                    "estimand": self.label,
                    "grid_value": g,
                    "point": v,
                    "lower": self.band.lower[i] if self.band else "",
                    "upper": self.band.upper[i] if self.band else "",
                    "extrapolated": int(self.mask[i]) if self.mask is not None else 0,
                }
            )
        return rows


def sup_distance(a: ReturnsCurve, b: ReturnsCurve, restrict_to_mask: bool = True) -> float:
    """Sup-norm distance between two curves on a common grid.

    When either curve carries a mask, masked (extrapolated) points are
    excluded from the comparison.
    """
    if a.grid.shape != b.grid.shape or not np.allclose(a.grid, b.grid):
        raise ValueError("curves are not on a common grid")
    keep = np.ones(len(a.grid), dtype=bool)
    if restrict_to_mask:
        for c in (a, b):
            if c.mask is not None:
                keep &= ~c.mask
    return float(np.max(np.abs(a.values[keep] - b.values[keep])))


@dataclass(frozen=True)
class SGrid:
    """Uniform grid of wage top-ups (kCFA); always contains 0."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if len(v) < 2 or np.any(np.diff(v) <= 0):
            raise ValueError("s-grid must be strictly increasing")
        if not np.any(np.isclose(v, 0.0)):
            raise ValueError("s-grid must contain 0")
        object.__setattr__(self, "values", v)

    @property
    def step(self) -> float:
        return float(self.values[1] - self.values[0])

    @classmethod
    def regular(cls, lo: float, hi: float, step: float) -> "SGrid":
        """Grid of multiples of ``step`` covering [lo, hi]; includes 0."""
        k_lo = int(np.floor(lo / step))
        k_hi = int(np.ceil(hi / step))
        return cls(values=step * np.arange(k_lo, k_hi + 1))

    @classmethod
    def for_support(cls, support: SupportSpec, scenarios, step: float = 25.0) -> "SGrid":
        """Span every shift that keeps some scenario's public wage in support."""
        y0s = [x.y0 for x in scenarios]
        lo = support.wage_min - max(y0s)
        hi = support.wage_max - min(y0s)
        return cls.regular(lo, hi, step)

    def region_mask(self, support: SupportSpec, scenarios) -> np.ndarray:
        """True where a grid point extrapolates for every listed scenario...

        A point is masked when any scenario's shifted wage leaves the support,
        so unmasked points are identified for the whole mixture.
        """
        mask = np.zeros(len(self.values), dtype=bool)
        for i, s in enumerate(self.values):
            for x in scenarios:
                if not in_identified_region(support, s, x):
                    mask[i] = True
                    break
        return mask


def write_curves_csv(path, curves: list, header_comment: str | None = None) -> None:
    """Emit curves as CSV (estimand, grid_value, point, lower, upper, flag)."""
    import csv

    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.DictWriter(
            fh,
            fieldnames=["estimand", "grid_value", "point", "lower", "upper", "extrapolated"],
        )
        writer.writeheader()
        for curve in curves:
            for row in curve.to_rows():
                writer.writerow(row)
