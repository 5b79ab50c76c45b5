"""Identified distributions of returns and willingness-to-pay.

Turns a fitted conditional distribution of stated probabilities into the
population cdfs of: belief quantiles (F_Q), mean returns, inter-quantile
ranges, and quantile/mean effects of attribute shifts (qWTP/mWTP) via
paired-scenario pseudo-ranks and a copula on them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .curves import ReturnsCurve, SGrid, as_mixture, isotonic_project
from .dataset import Dataset, Scenario, SupportSpec, in_identified_region
from .dr import DRModel, rearrange


class GateError(ValueError):
    """Raised when an estimand needs paired elicitations that are absent."""


DEFAULT_RANK_GRID = np.arange(0.001, 1.0, 0.002)  # 500 midpoints for the da integral


def _region_valid(support: SupportSpec | None, x: Scenario, s_values: np.ndarray) -> np.ndarray:
    if support is None:
        return np.ones(len(s_values), dtype=bool)
    return np.array([in_identified_region(support, s, x) for s in s_values])


def _flat_fill(matrix: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Replace invalid rows by the nearest valid row (flat extrapolation)."""
    if valid.all() or not valid.any():
        return matrix
    out = matrix.copy()
    idx_valid = np.flatnonzero(valid)
    for i in np.flatnonzero(~valid):
        nearest = idx_valid[np.argmin(np.abs(idx_valid - i))]
        out[i] = matrix[nearest]
    return out


def _cdf_rows(model: DRModel, x: Scenario, s_grid: SGrid, support: SupportSpec | None,
              fill: str = "flat"):
    """(S, K) rearranged cdf values at the shifted scenarios t(s, x).

    With ``fill='flat'`` rows outside the identified region are flat
    extensions of the nearest identified row (cautious cdf reporting); with
    ``fill='model'`` the fitted index extrapolates them (needed for the
    integrals over s, whose integrands must decay in the tails).
    """
    model = rearrange(model)
    # shifts below -y0 would produce nonpositive wages; floor the shifted
    # wage (those points are deep extrapolation and always masked anyway)
    scenarios = [x.shift_y0(max(float(s), 1e-6 - x.y0)) for s in s_grid.values]
    vals = model.cdf_matrix(scenarios)
    valid = _region_valid(support, x, s_grid.values)
    if fill == "flat":
        vals = _flat_fill(vals, valid)
    return vals, valid


def fq_curve(
    model: DRModel, tau: float, s_grid: SGrid, x_tilde, support: SupportSpec | None = None
) -> ReturnsCurve:
    """F_Q(s; tau): population cdf of the tau-quantile of perceived returns."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    model = rearrange(model)
    mixture = as_mixture(x_tilde)
    p = 1.0 - tau
    values = np.zeros(len(s_grid.values))
    mask = np.zeros(len(s_grid.values), dtype=bool)
    k = int(np.searchsorted(model.grid.thresholds, p, side="left"))
    for x, massw in mixture:
        rows, valid = _cdf_rows(model, x, s_grid, support)
        mask |= ~valid
        if p >= 1.0 or k >= rows.shape[1]:
            values += massw  # at or above the top threshold: full mass
        else:
            values += massw * rows[:, k]
    values = isotonic_project(np.clip(values, 0.0, 1.0))
    return ReturnsCurve(
        grid=s_grid.values,
        values=np.clip(values, 0.0, 1.0),
        label=f"FQ(tau={tau})",
        mask=mask,
    )


# ---------------------------------------------------------------------------
# quantile-treatment-response integrals (the A functions)


def _q_matrix(model: DRModel, x: Scenario, s_grid: SGrid, a: np.ndarray, support) -> np.ndarray:
    """q(t(s, x), a) for every grid s and rank a; shape (S, len(a)).

    q is the generalised inverse of the fitted cdf over the threshold grid;
    values land on the thresholds, with right endpoint 1.
    """
    rows, _ = _cdf_rows(model, x, s_grid, support, fill="model")
    a = np.atleast_1d(np.asarray(a, dtype=float))
    # rows are sorted along axis 1 (rearranged): the index of the first value
    # >= a is the count of values below it
    idx = np.vstack([np.searchsorted(row, a, side="left") for row in rows])
    thresholds_ext = np.append(model.grid.thresholds, 1.0)
    return thresholds_ext[idx]


@dataclass(frozen=True)
class AMu:
    """A mean-returns integral with truncation diagnostics."""

    value: float
    integrand_start: float
    integrand_end: float

    def __float__(self):
        return self.value


def a_mu(
    model: DRModel, x: Scenario, a: float, s_grid: SGrid, support: SupportSpec | None = None
) -> AMu:
    """Mean perceived return at rank ``a``: integral of q(t(s,x),a) - 1{s<=0}."""
    if not 0.0 < a < 1.0:
        raise ValueError("a must be in (0, 1)")
    q = _q_matrix(model, x, s_grid, np.array([a]), support)[:, 0]
    integrand = q - (s_grid.values <= 0.0).astype(float)
    value = float(np.trapezoid(integrand, s_grid.values))
    return AMu(value=value, integrand_start=float(integrand[0]), integrand_end=float(integrand[-1]))


def _a_mu_vec(model, x, a_vec, s_grid, support) -> np.ndarray:
    q = _q_matrix(model, x, s_grid, a_vec, support)
    integrand = q - (s_grid.values <= 0.0).astype(float)[:, None]
    return np.trapezoid(integrand, s_grid.values, axis=0)


def _a_tau_vec(model, x, a_vec, tau, s_grid, support) -> np.ndarray:
    q = _q_matrix(model, x, s_grid, a_vec, support)
    hit = (q >= 1.0 - tau).astype(float)
    integrand = hit - (s_grid.values <= 0.0).astype(float)[:, None]
    return s_grid.step * np.sum(integrand, axis=0)


def a_tau(
    model: DRModel,
    x: Scenario,
    a: float,
    tau: float,
    s_grid: SGrid,
    support: SupportSpec | None = None,
) -> float:
    """Rank-a quantile of perceived returns at level tau (Riemann sum)."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    return float(_a_tau_vec(model, x, np.array([a]), tau, s_grid, support)[0])


def a_iqr(
    model: DRModel,
    x: Scenario,
    a: float,
    tau1: float,
    tau2: float,
    s_grid: SGrid,
    support: SupportSpec | None = None,
) -> float:
    """Inter-quantile range at rank a; equals a_tau(tau2) - a_tau(tau1) exactly.

    Computed as the difference of the two Riemann sums on the shared grid
    (half-open band convention at the threshold boundaries).
    """
    if not 0.0 < tau1 < tau2 < 1.0:
        raise ValueError("need 0 < tau1 < tau2 < 1")
    a_vec = np.array([a])
    return float(
        _a_tau_vec(model, x, a_vec, tau2, s_grid, support)[0]
        - _a_tau_vec(model, x, a_vec, tau1, s_grid, support)[0]
    )


# ---------------------------------------------------------------------------
# population distributions of mean returns and IQR


def _indicator_cdf(samples: np.ndarray, masses: np.ndarray, y_grid: np.ndarray) -> np.ndarray:
    """sum_i mass_i 1{samples_i <= y} on the y grid."""
    order = np.argsort(samples)
    sorted_samples = samples[order]
    cum = np.cumsum(masses[order])
    idx = np.searchsorted(sorted_samples, y_grid, side="right")
    return np.concatenate([[0.0], cum])[idx]


def dist_mu(
    model: DRModel,
    x_tilde,
    y_grid,
    s_grid: SGrid,
    support: SupportSpec | None = None,
    rank_grid: np.ndarray | None = None,
) -> ReturnsCurve:
    """Population cdf of mean perceived returns."""
    mixture = as_mixture(x_tilde)
    a_vec = DEFAULT_RANK_GRID if rank_grid is None else np.asarray(rank_grid)
    y_grid = np.asarray(y_grid, dtype=float)
    samples, masses = [], []
    for x, massw in mixture:
        samples.append(_a_mu_vec(model, x, a_vec, s_grid, support))
        masses.append(np.full(len(a_vec), massw / len(a_vec)))
    values = _indicator_cdf(np.concatenate(samples), np.concatenate(masses), y_grid)
    return ReturnsCurve(grid=y_grid, values=values, label="dist_mu")


def dist_iqr(
    model: DRModel,
    x_tilde,
    tau1: float,
    tau2: float,
    y_grid,
    s_grid: SGrid,
    support: SupportSpec | None = None,
    rank_grid: np.ndarray | None = None,
) -> ReturnsCurve:
    """Population cdf of the (tau1, tau2) inter-quantile range of beliefs."""
    if not 0.0 < tau1 < tau2 < 1.0:
        raise ValueError("need 0 < tau1 < tau2 < 1")
    mixture = as_mixture(x_tilde)
    a_vec = DEFAULT_RANK_GRID if rank_grid is None else np.asarray(rank_grid)
    y_grid = np.asarray(y_grid, dtype=float)
    samples, masses = [], []
    for x, massw in mixture:
        iqr = _a_tau_vec(model, x, a_vec, tau2, s_grid, support) - _a_tau_vec(
            model, x, a_vec, tau1, s_grid, support
        )
        samples.append(iqr)
        masses.append(np.full(len(a_vec), massw / len(a_vec)))
    values = _indicator_cdf(np.concatenate(samples), np.concatenate(masses), y_grid)
    return ReturnsCurve(grid=y_grid, values=values, label=f"dist_iqr({tau1},{tau2})")


# ---------------------------------------------------------------------------
# paired scenarios: pseudo-ranks, copula, WTP distributions


@dataclass(frozen=True)
class RankPairs:
    """Per-respondent pseudo-ranks V_k for the first two elicitations."""

    v1: np.ndarray
    v2: np.ndarray
    x1: tuple
    x2: tuple

    def __post_init__(self):
        if not (len(self.v1) == len(self.v2) == len(self.x1) == len(self.x2)):
            raise ValueError("rank pair arrays must share a length")

    def __len__(self):
        return len(self.v1)


def pseudo_ranks(model: DRModel, d: Dataset, pair_rule=None) -> RankPairs:
    """V = fitted conditional cdf of the stated probability at its scenario.

    ``pair_rule`` selects two records per respondent (default: the two
    lowest scenario indices). Needs respondents with at least two
    elicitations.
    """
    from .dr import cdf_at

    model = rearrange(model)
    if pair_rule is None:
        pair_rule = lambda records: (records[0], records[1])
    v1, v2, x1, x2 = [], [], [], []
    for records in d.respondents().values():
        if len(records) < 2:
            continue
        r1, r2 = pair_rule(records)
        v1.append(cdf_at(model, r1.p_stated, r1.scenario))
        v2.append(cdf_at(model, r2.p_stated, r2.scenario))
        x1.append(r1.scenario)
        x2.append(r2.scenario)
    if not v1:
        raise GateError(
            "qWTP/mWTP need two elicitations per respondent (just ask them twice); "
            "no respondent has a second scenario"
        )
    return RankPairs(v1=np.array(v1), v2=np.array(v2), x1=tuple(x1), x2=tuple(x2))


@dataclass(frozen=True)
class CopulaModel:
    """Joint law of the pseudo-rank pair on the unit square.

    ``checkerboard`` holds an m-by-m bin mass matrix balanced to uniform
    margins; ``independence`` and ``comonotone`` are the two reference
    copulas; ``empirical`` keeps the raw pairs.
    """

    kind: str
    bins: int = 10
    masses: np.ndarray | None = None  # (m, m), checkerboard only
    pairs: tuple | None = None  # (v1, v2) arrays, empirical only

    def representatives(self):
        """(v1, v2, mass) triplets for the double integral over the copula."""
        m = self.bins
        mids = (np.arange(m) + 0.5) / m
        if self.kind == "independence":
            v1, v2 = np.meshgrid(mids, mids, indexing="ij")
            return v1.ravel(), v2.ravel(), np.full(m * m, 1.0 / (m * m))
        if self.kind == "comonotone":
            return mids, mids, np.full(m, 1.0 / m)
        if self.kind == "checkerboard":
            v1, v2 = np.meshgrid(mids, mids, indexing="ij")
            return v1.ravel(), v2.ravel(), self.masses.ravel()
        if self.kind == "empirical":
            v1, v2 = self.pairs
            return v1, v2, np.full(len(v1), 1.0 / len(v1))
        raise ValueError(f"unknown copula kind {self.kind!r}")

    def spearman_rho(self) -> float:
        v1, v2, w = self.representatives()
        return float(12.0 * np.sum(w * (v1 - 0.5) * (v2 - 0.5)))


def _sinkhorn_balance(masses: np.ndarray, tol: float = 1e-8, max_iter: int = 10_000):
    """Scale rows/columns until both margins are uniform within tol."""
    m = masses.shape[0]
    target = 1.0 / m
    out = masses + 1e-12  # keep strictly positive so scaling is well defined
    out /= out.sum()
    for _ in range(max_iter):
        rows = out.sum(axis=1)
        out *= (target / rows)[:, None]
        cols = out.sum(axis=0)
        out *= (target / cols)[None, :]
        if np.max(np.abs(out.sum(axis=1) - target)) < tol and np.max(
            np.abs(out.sum(axis=0) - target)
        ) < tol:
            break
    return out / out.sum()


def fit_copula(pairs: RankPairs, kind: str = "checkerboard", bins: int = 10) -> CopulaModel:
    """Estimate the rank-pair copula under the pooled-invariance convention."""
    if kind in ("independence", "comonotone"):
        return CopulaModel(kind=kind, bins=bins)
    if kind == "empirical":
        return CopulaModel(kind=kind, bins=bins, pairs=(pairs.v1, pairs.v2))
    if kind != "checkerboard":
        raise ValueError(f"unknown copula kind {kind!r}")
    if len(pairs) < 50:
        raise ValueError(
            f"checkerboard copula needs >= 50 pairs (got {len(pairs)}); "
            "consider kind='independence'"
        )
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _, _ = np.histogram2d(pairs.v1, pairs.v2, bins=[edges, edges])
    masses = _sinkhorn_balance(counts / counts.sum())
    return CopulaModel(kind="checkerboard", bins=bins, masses=masses)


def _check_shifted_support(support, mixture, h):
    if support is None:
        return
    for x, _ in mixture:
        if not support.contains(x.shifted(h)):
            warnings.warn("shifted scenario x+h leaves the support; results are extrapolated")
            return


def dist_mwtp(
    model: DRModel,
    copula: CopulaModel,
    x_tilde,
    h: dict,
    y_grid,
    s_grid: SGrid,
    support: SupportSpec | None = None,
) -> ReturnsCurve:
    """Population cdf of the mean effect of attribute shift ``h`` (mWTP)."""
    mixture = as_mixture(x_tilde)
    _check_shifted_support(support, mixture, h)
    y_grid = np.asarray(y_grid, dtype=float)
    v1, v2, w = copula.representatives()
    samples, masses = [], []
    for x, massw in mixture:
        base = _a_mu_vec(model, x, v1, s_grid, support)
        shifted = _a_mu_vec(model, x.shifted(h), v2, s_grid, support)
        samples.append(shifted - base)
        masses.append(massw * w)
    values = _indicator_cdf(np.concatenate(samples), np.concatenate(masses), y_grid)
    return ReturnsCurve(grid=y_grid, values=values, label="dist_mwtp")


def dist_qwtp(
    model: DRModel,
    copula: CopulaModel,
    x_tilde,
    h: dict,
    tau: float,
    y_grid,
    s_grid: SGrid,
    support: SupportSpec | None = None,
) -> ReturnsCurve:
    """Population cdf of the tau-quantile effect of attribute shift ``h``."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    mixture = as_mixture(x_tilde)
    _check_shifted_support(support, mixture, h)
    y_grid = np.asarray(y_grid, dtype=float)
    v1, v2, w = copula.representatives()
    samples, masses = [], []
    for x, massw in mixture:
        base = _a_tau_vec(model, x, v1, tau, s_grid, support)
        shifted = _a_tau_vec(model, x.shifted(h), v2, tau, s_grid, support)
        samples.append(shifted - base)
        masses.append(massw * w)
    values = _indicator_cdf(np.concatenate(samples), np.concatenate(masses), y_grid)
    return ReturnsCurve(grid=y_grid, values=values, label=f"dist_qwtp(tau={tau})")
