"""Distribution regression for the conditional law of stated probabilities.

One penalised logistic fit per threshold p: regress 1{P <= p} on scenario
features. Monotonicity across thresholds is restored at evaluation time by
rearrangement (sorting the fitted cdf values), and bootstrap refits use
exchangeable per-respondent exponential weights.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from .dataset import Dataset, Scenario

WAGE_SCALE = 100.0  # wages enter the index in hundreds of kCFA
CLAMP = 1e-6
MAX_ABS_INDEX = 30.0  # |linear index| beyond this flags separation


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class DesignMap:
    """Deterministic feature construction from a scenario.

    The first feature is always the intercept.
    """

    name: str = "default"

    @property
    def feature_names(self) -> tuple:
        if self.name == "intercept_only":
            return ("intercept",)
        return (
            "intercept",
            "wage_pub",
            "wage_priv",
            "wage_pub_x_priv",
            "employer_pub_firm",
            "employer_large_firm",
            "hours_pub",
            "hours_priv",
            "layoff_pub",
            "layoff_priv",
            "promo_pub",
            "promo_priv",
        )

    def __len__(self):
        return len(self.feature_names)

    def row(self, x: Scenario) -> np.ndarray:
        if self.name == "intercept_only":
            return np.ones(1)
        y0 = x.y0 / WAGE_SCALE
        y1 = x.y1 / WAGE_SCALE
        return np.array(
            [
                1.0,
                y0,
                y1,
                y0 * y1,
                1.0 if x.employer_pub == "public_firm" else 0.0,
                1.0 if x.employer_priv == "large_firm" else 0.0,
                x.hours_pub,
                x.hours_priv,
                x.layoff_pub,
                x.layoff_priv,
                x.promo_pub,
                x.promo_priv,
            ]
        )

    def matrix(self, scenarios) -> np.ndarray:
        return np.vstack([self.row(x) for x in scenarios])


def design_row(design: DesignMap, x: Scenario) -> np.ndarray:
    """Feature vector for one scenario."""
    return design.row(x)


@dataclass(frozen=True)
class ThresholdGrid:
    """Strictly increasing thresholds in (0, 1]."""

    thresholds: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=float)
        if len(t) == 0 or np.any(np.diff(t) <= 0):
            raise ValueError("thresholds must be strictly increasing")
        if t[0] <= 0 or t[-1] > 1:
            raise ValueError("thresholds must lie in (0, 1]")
        object.__setattr__(self, "thresholds", t)

    def __len__(self):
        return len(self.thresholds)

    @classmethod
    def from_data(
        cls, p_values, levels=None, include_one: bool = True, include=()
    ) -> "ThresholdGrid":
        """Empirical quantiles of P at levels 0.02, ..., 0.98, plus p = 1.

        Heaped answers produce few distinct values, so the quantiles are
        deduplicated. ``include`` forces extra thresholds into the grid
        (e.g. the exact levels 1 - tau at which curves will be read off).
        """
        if levels is None:
            levels = np.arange(0.02, 0.99, 0.02)
        p = np.asarray(p_values, dtype=float)
        qs = np.unique(np.concatenate([np.quantile(p, levels), np.asarray(include, dtype=float)]))
        qs = qs[(qs > 0) & (qs < 1)]
        if include_one:
            qs = np.append(qs, 1.0)
        if len(qs) == 0:
            raise ValueError("no usable thresholds in the data")
        return cls(thresholds=qs)


@dataclass(frozen=True)
class DRModel:
    """Fitted distribution regression over a threshold grid."""

    design: DesignMap
    grid: ThresholdGrid
    coef: np.ndarray  # (K, dim(W))
    rearranged: bool = False
    diagnostics: tuple = ()

    def __post_init__(self):
        coef = np.asarray(self.coef, dtype=float)
        if coef.shape != (len(self.grid), len(self.design)):
            raise ValueError("coefficient matrix shape mismatch")
        if not np.all(np.isfinite(coef)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coef", coef)

    # -- evaluation ---------------------------------------------------------

    def cdf_values(self, x: Scenario) -> np.ndarray:
        """Clamped fitted cdf values across the grid at one scenario."""
        return self.cdf_matrix([x])[0]

    def cdf_matrix(self, scenarios) -> np.ndarray:
        """(n_scenarios, K) fitted cdf values; rearranged when flagged."""
        W = self.design.matrix(scenarios)
        vals = expit(np.clip(W @ self.coef.T, -500.0, 500.0))
        vals = np.clip(vals, CLAMP, 1.0 - CLAMP)
        if self.rearranged:
            vals = np.sort(vals, axis=1)
        return vals

    def to_json_dict(self) -> dict:
        return {
            "design": self.design.name,
            "thresholds": self.grid.thresholds.tolist(),
            "coef": self.coef.tolist(),
            "rearranged": self.rearranged,
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DRModel":
        return cls(
            design=DesignMap(name=d["design"]),
            grid=ThresholdGrid(thresholds=np.asarray(d["thresholds"])),
            coef=np.asarray(d["coef"]),
            rearranged=bool(d["rearranged"]),
            diagnostics=tuple(d.get("diagnostics", ())),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)

    @classmethod
    def load(cls, path) -> "DRModel":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def save_diagnostics_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["threshold", "loglik", "iterations", "separation", "converged"]
            )
            writer.writeheader()
            for row in self.diagnostics:
                writer.writerow(row)


def rearrange(model: DRModel) -> DRModel:
    """Enable evaluation-time monotone rearrangement (idempotent)."""
    if model.rearranged:
        return model
    return DRModel(
        design=model.design,
        grid=model.grid,
        coef=model.coef,
        rearranged=True,
        diagnostics=model.diagnostics,
    )


def cdf_at(model: DRModel, p: float, x: Scenario) -> float:
    """F_hat_{P|X}(p | x), stepwise in p over the threshold grid.

    Off-grid levels read the fitted value at the smallest threshold >= p,
    so p -> 1 saturates at the top threshold; levels that matter should be
    forced into the grid (see ``include_thresholds``).
    """
    if p <= 0.0:
        return 0.0  # convention: no mass at or below zero thresholds
    if p >= 1.0:
        return 1.0
    vals = model.cdf_values(x)
    idx = int(np.searchsorted(model.grid.thresholds, p, side="left"))
    if idx >= len(vals):
        return 1.0
    return float(vals[idx])


def quantile_at(model: DRModel, a: float, x: Scenario) -> float:
    """Smallest grid threshold p with cdf_at(p, x) >= a (right endpoint 1)."""
    if not 0.0 < a < 1.0:
        raise ValueError("a must be in (0, 1)")
    vals = model.cdf_values(x)
    idx = int(np.searchsorted(vals, a, side="left"))
    if idx >= len(vals):
        return 1.0
    return float(model.grid.thresholds[idx])


# ---------------------------------------------------------------------------
# fitting


def _penalized_loglik(W, y, w, beta, pen):
    xb = np.clip(W @ beta, -500.0, 500.0)
    # log Lambda(xb) and log(1 - Lambda(xb)) via logaddexp for stability
    ll = -np.sum(w * np.logaddexp(0.0, np.where(y > 0.5, -xb, xb)))
    return ll - np.dot(pen, beta**2)


def _fit_threshold(W, y, w, ridge, beta0, threshold):
    """Newton / IRLS with step halving; returns (beta, diagnostics)."""
    n, d = W.shape
    pen = np.full(d, ridge)
    pen[0] = 0.0  # intercept unpenalized
    share = np.dot(w, y) / np.sum(w)
    if share <= 0.0 or share >= 1.0:
        # degenerate threshold: all indicators equal; closed-form clamped fit
        beta = np.zeros(d)
        beta[0] = logit(1.0 - CLAMP) if share >= 1.0 else logit(CLAMP)
        diag = {
            "threshold": float(threshold),
            "loglik": float(_penalized_loglik(W, y, w, beta, pen)),
            "iterations": 0,
            "separation": False,
            "converged": True,
        }
        return beta, diag
    beta = beta0.copy()
    ll = _penalized_loglik(W, y, w, beta, pen)
    converged = False
    it = 0
    for it in range(1, 101):
        xb = np.clip(W @ beta, -MAX_ABS_INDEX - 5.0, MAX_ABS_INDEX + 5.0)
        mu = expit(xb)
        grad = W.T @ (w * (mu - y)) + 2.0 * pen * beta
        r = np.maximum(w * mu * (1.0 - mu), 1e-12)
        H = (W * r[:, None]).T @ W + 2.0 * np.diag(pen)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            raise FitError(f"singular penalized normal equations at threshold {threshold}")
        # step halving keeps the penalized log-likelihood nondecreasing
        scale = 1.0
        for _ in range(40):
            candidate = beta - scale * step
            ll_new = _penalized_loglik(W, y, w, candidate, pen)
            if ll_new >= ll - 1e-12:
                break
            scale *= 0.5
        beta = beta - scale * step
        ll = _penalized_loglik(W, y, w, beta, pen)
        if np.max(np.abs(scale * step)) < 1e-8:
            converged = True
            break
    separation = bool(np.max(np.abs(W @ beta)) > MAX_ABS_INDEX)
    diag = {
        "threshold": float(threshold),
        "loglik": float(ll),
        "iterations": it,
        "separation": separation,
        "converged": converged,
    }
    return beta, diag


def fit_dr(
    d: Dataset,
    grid: ThresholdGrid | None = None,
    design: DesignMap | None = None,
    weights: np.ndarray | None = None,
    ridge: float = 1e-6,
    warm_start: DRModel | None = None,
    include_thresholds=(),
) -> DRModel:
    """Fit the per-threshold logistic regressions.

    ``weights`` are per-record positive reals (bootstrap weights); they are
    normalised to mean one so that a common rescaling leaves the fit
    unchanged. ``include_thresholds`` forces levels into a data-driven grid
    so that curves read off at those levels avoid step-approximation bias.
    """
    design = design or DesignMap()
    p = np.array([r.p_stated for r in d.records])
    if grid is None:
        grid = ThresholdGrid.from_data(p, include=include_thresholds)
    W = design.matrix([r.scenario for r in d.records])
    n, dim = W.shape
    if n < dim + 1:
        raise FitError(f"need at least {dim + 1} records, got {n}")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise FitError("weights must be positive")
        w = w / np.mean(w)

    coef = np.zeros((len(grid), dim))
    diagnostics = []
    beta_prev = np.zeros(dim)
    for k, threshold in enumerate(grid.thresholds):
        y = (p <= threshold).astype(float)
        if warm_start is not None:
            beta0 = warm_start.coef[k]
        else:
            beta0 = beta_prev
        beta, diag = _fit_threshold(W, y, w, ridge, beta0, threshold)
        coef[k] = beta
        beta_prev = beta
        diagnostics.append(diag)
    return DRModel(design=design, grid=grid, coef=coef, diagnostics=tuple(diagnostics))


def respondent_weights(d: Dataset, rng: np.random.Generator) -> np.ndarray:
    """Per-record weights: one standard-exponential draw per respondent.

    Mean-one, variance-one i.i.d. weights shared across a respondent's
    scenarios, as required for an exchangeable weighted bootstrap with
    within-respondent dependence.
    """
    groups = d.respondents()
    draw = {rid: rng.standard_exponential() for rid in groups}
    return np.array([draw[r.respondent_id] for r in d.records])


def bootstrap_fits(
    d: Dataset,
    grid: ThresholdGrid,
    design: DesignMap,
    B: int,
    seed: int,
    ridge: float = 1e-6,
    base_model: DRModel | None = None,
    unit_weights: bool = False,
) -> list:
    """B weighted refits; deterministic given seed.

    Replicates whose fits fail on more than 0.1 percent of thresholds are
    dropped with a warning (recorded on stderr via warnings).
    """
    import warnings

    if B < 0:
        raise ValueError("B must be >= 0")
    out = []
    for b in range(B):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xB00, b)))
        w = np.ones(len(d.records)) if unit_weights else respondent_weights(d, rng)
        try:
            out.append(fit_dr(d, grid, design, weights=w, ridge=ridge, warm_start=base_model))
        except FitError as exc:
            warnings.warn(f"bootstrap replicate {b} dropped: {exc}")
    return out
