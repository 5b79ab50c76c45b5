"""Bootstrap confidence bands for curves.

Pointwise bands use a robust scale (IQR/1.349) of the replicate curves at
each grid point; uniform bands calibrate a sup-t critical value from the
replicate draws themselves.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .curves import Band, ReturnsCurve

IQR_TO_SD = 1.349


@dataclass(frozen=True)
class BandSpec:
    level: float = 0.90
    kind: str = "uniform"

    def __post_init__(self):
        if not 0.5 < self.level < 1.0:
            raise ValueError("level must be in (0.5, 1)")
        if self.kind not in ("pointwise", "uniform"):
            raise ValueError("kind must be 'pointwise' or 'uniform'")


def _draw_matrix(point: ReturnsCurve, draws) -> np.ndarray:
    if len(draws) < 50:
        raise ValueError(f"need at least 50 bootstrap draws, got {len(draws)}")
    for c in draws:
        if c.grid.shape != point.grid.shape or not np.allclose(c.grid, point.grid):
            raise ValueError("bootstrap draws are not on the point estimate's grid")
    return np.vstack([c.values for c in draws])


def robust_sd(samples: np.ndarray, axis: int = 0) -> np.ndarray:
    """IQR / 1.349, a normal-consistent scale immune to outlier replicates."""
    q75, q25 = np.percentile(samples, [75.0, 25.0], axis=axis)
    return (q75 - q25) / IQR_TO_SD


def pointwise_band(point: ReturnsCurve, draws, spec: BandSpec | None = None) -> ReturnsCurve:
    """point +/- z * sigma-hat at each grid point, clipped to [0, 1]."""
    spec = spec or BandSpec(kind="pointwise")
    mat = _draw_matrix(point, draws)
    sd = robust_sd(mat, axis=0)
    z = norm.ppf(0.5 * (1.0 + spec.level))
    lower = np.clip(point.values - z * sd, 0.0, 1.0)
    upper = np.clip(point.values + z * sd, 0.0, 1.0)
    return point.with_band(Band(lower=lower, upper=upper, level=spec.level, kind="pointwise"))


def uniform_band(
    point: ReturnsCurve,
    draws,
    spec: BandSpec | None = None,
    region_mask: np.ndarray | None = None,
) -> ReturnsCurve:
    """Sup-t band: point +/- k-hat * sigma-hat with k-hat the empirical
    level-quantile of sup_s |(draw - point) / sigma-hat| over the region.

    The same cross-replicate sigma-hat standardises every draw (single-level
    bootstrap; no per-replicate nested scale). Zero-scale grid points are
    left out of the sup.
    """
    spec = spec or BandSpec(kind="uniform")
    mat = _draw_matrix(point, draws)
    sd = robust_sd(mat, axis=0)
    keep = sd > 0
    if region_mask is None and point.mask is not None:
        region_mask = point.mask
    if region_mask is not None:
        keep &= ~np.asarray(region_mask, dtype=bool)
    if not keep.any():
        warnings.warn("all grid points have zero bootstrap scale; returning zero-width band")
        return point.with_band(
            Band(lower=point.values.copy(), upper=point.values.copy(),
                 level=spec.level, kind="uniform")
        )
    t = np.abs(mat[:, keep] - point.values[keep]) / sd[keep]
    sup_t = t.max(axis=1)
    k_hat = float(np.quantile(sup_t, spec.level))
    lower = np.clip(point.values - k_hat * sd, 0.0, 1.0)
    upper = np.clip(point.values + k_hat * sd, 0.0, 1.0)
    return point.with_band(Band(lower=lower, upper=upper, level=spec.level, kind="uniform"))


def covers(curve: ReturnsCurve, truth: ReturnsCurve, region_only: bool = True) -> bool:
    """True when the band contains the truth at every (unmasked) grid point."""
    if curve.band is None:
        raise ValueError("curve has no band")
    keep = np.ones(len(curve.grid), dtype=bool)
    if region_only and curve.mask is not None:
        keep = ~curve.mask
    return bool(
        np.all(curve.band.lower[keep] <= truth.values[keep] + 1e-12)
        and np.all(truth.values[keep] <= curve.band.upper[keep] + 1e-12)
    )
