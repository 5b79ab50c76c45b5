"""Synthetic stated-choice generators with brute-force ground truth.

Two generative regimes are supported. ``gaussian_linear`` is the closed-form
regime: the perceived-return distribution of every respondent is normal, so
stated demands, return quantiles, means and IQRs all have analytic
expressions and can back exact tests. ``ces_lognormal`` is a CES job-choice
model where the unknown sector amenities follow a correlated lognormal
belief; its quantities are computed by deterministic Gauss-Hermite
quadrature.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import ndtr, ndtri

from .curves import ReturnsCurve, SGrid, as_mixture
from .dataset import ChoiceRecord, Dataset, Scenario, SupportSpec

_ATTR_FIELDS = (
    "employer_pub",
    "employer_priv",
    "hours_pub",
    "hours_priv",
    "layoff_pub",
    "layoff_priv",
    "promo_pub",
    "promo_priv",
)


class ConfigError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class DistSpec:
    """A small family of scalar population distributions."""

    kind: str  # constant | uniform | normal | beta | lognormal
    params: tuple

    @classmethod
    def constant(cls, value):
        return cls("constant", (float(value),))

    @classmethod
    def uniform(cls, low, high):
        return cls("uniform", (float(low), float(high)))

    @classmethod
    def normal(cls, mean, sd):
        return cls("normal", (float(mean), float(sd)))

    @classmethod
    def beta(cls, a, b):
        return cls("beta", (float(a), float(b)))

    @classmethod
    def lognormal(cls, mu, sigma):
        return cls("lognormal", (float(mu), float(sigma)))

    @classmethod
    def logistic(cls, loc, s):
        return cls("logistic", (float(loc), float(s)))

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        p = self.params
        if self.kind == "constant":
            return np.full(n, p[0])
        if self.kind == "uniform":
            return rng.uniform(p[0], p[1], size=n)
        if self.kind == "normal":
            return rng.normal(p[0], p[1], size=n)
        if self.kind == "logistic":
            return rng.logistic(p[0], p[1], size=n)
        if self.kind == "beta":
            return rng.beta(p[0], p[1], size=n)
        if self.kind == "lognormal":
            return rng.lognormal(p[0], p[1], size=n)
        raise ConfigError(f"unknown distribution kind {self.kind!r}")

    def mean(self) -> float:
        p = self.params
        if self.kind == "constant":
            return p[0]
        if self.kind == "uniform":
            return 0.5 * (p[0] + p[1])
        if self.kind in ("normal", "logistic"):
            return p[0]
        if self.kind == "beta":
            return p[0] / (p[0] + p[1])
        if self.kind == "lognormal":
            return float(np.exp(p[0] + 0.5 * p[1] ** 2))
        raise ConfigError(f"unknown distribution kind {self.kind!r}")

    def support_in(self, lo: float, hi: float) -> bool:
        """True when the law is guaranteed to stay inside (lo, hi)."""
        p = self.params
        if self.kind == "constant":
            return lo < p[0] < hi
        if self.kind == "uniform":
            return lo < p[0] and p[1] < hi and lo < p[1] and p[0] < hi
        if self.kind == "beta":
            return lo <= 0.0 and hi >= 1.0
        if self.kind == "lognormal":
            return lo <= 0.0 and hi == np.inf
        if self.kind == "logistic":
            return lo == -np.inf and hi == np.inf
        return False

    def to_json_dict(self):
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_json_dict(cls, d):
        return cls(kind=d["kind"], params=tuple(float(v) for v in d["params"]))


@dataclass(frozen=True)
class DgpConfig:
    """Parameters of a synthetic stated-choice data-generating process.

    Per-respondent traits: ``alpha`` (CES share of income, with amenity
    weight k = (1-alpha)/alpha), ``curvature`` (CES exponent, 1 in the
    gaussian_linear regime), ``rho`` (believed amenity correlation across
    sectors, CES only), ``belief_location``/``belief_scale`` (location and
    scale of the believed amenity difference, gaussian_linear only).

    ``attr_coef`` puts a linear loading on non-wage scenario attributes in
    the gaussian_linear return index; ``attr_coef_load`` scales that loading
    with the respondent's centred belief location, producing heterogeneous
    willingness-to-pay while keeping a single scalar heterogeneity driver.
    """

    kind: str = "gaussian_linear"  # gaussian_linear | ces_lognormal
    n_respondents: int = 1000
    scenarios_per_respondent: int = 2
    alpha: DistSpec = field(default_factory=lambda: DistSpec.constant(0.5))
    curvature: DistSpec = field(default_factory=lambda: DistSpec.constant(1.0))
    rho: DistSpec = field(default_factory=lambda: DistSpec.constant(0.0))
    belief_location: DistSpec = field(default_factory=lambda: DistSpec.constant(0.0))
    belief_scale: DistSpec = field(default_factory=lambda: DistSpec.constant(100.0))
    attr_coef: dict = field(default_factory=dict)
    attr_coef_load: dict = field(default_factory=dict)
    belief_scale_link: float = 0.0  # sigma_i += link * (mu_i - E mu); floored at 1e-3
    # lognormal amenity belief (ces_lognormal): log a_d ~ N(loc_d, scale_d^2)
    log_amenity_loc_pub: float = np.log(300.0)
    log_amenity_loc_priv: float = np.log(300.0)
    log_amenity_scale_pub: float = 0.5
    log_amenity_scale_priv: float = 0.5
    support: SupportSpec = field(default_factory=SupportSpec)
    round_to: float | None = None  # e.g. 0.05 rounds stated probabilities
    gh_nodes: int = 64  # hermgauss weights overflow to nan past ~180 nodes
    mc_draws: int = 200_000
    allow_signed_power: bool = False

    def __post_init__(self):
        if self.kind not in ("gaussian_linear", "ces_lognormal"):
            raise ConfigError(f"unknown dgp kind {self.kind!r}")
        if self.n_respondents < 1 or self.scenarios_per_respondent < 1:
            raise ConfigError("n_respondents and scenarios_per_respondent must be >= 1")
        if "wage_interaction" in self.attr_coef_load:
            raise ConfigError("wage_interaction cannot carry a heterogeneity loading")
        if not self.alpha.support_in(0.0, 1.0):
            raise ConfigError("alpha must be supported in (0, 1)")
        if self.kind == "ces_lognormal" and not self.allow_signed_power:
            if not self.curvature.support_in(0.0, 1.0 + 1e-12):
                raise ConfigError(
                    "curvature must be supported in (0, 1] with lognormal amenities "
                    "(set allow_signed_power to opt into signed powers)"
                )
        if self.kind == "gaussian_linear" and not self.belief_scale.support_in(0.0, np.inf):
            raise ConfigError("belief_scale must be positive")
        if self.gh_nodes < 8:
            raise ConfigError("gh_nodes must be >= 8")
        for key in list(self.attr_coef) + list(self.attr_coef_load):
            if key not in _ATTR_FIELDS and key != "wage_interaction":
                raise ConfigError(f"unknown attribute {key!r} in attr_coef")

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["alpha"] = self.alpha.to_json_dict()
        d["curvature"] = self.curvature.to_json_dict()
        d["rho"] = self.rho.to_json_dict()
        d["belief_location"] = self.belief_location.to_json_dict()
        d["belief_scale"] = self.belief_scale.to_json_dict()
        d["support"] = self.support.to_json_dict()
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "DgpConfig":
        kwargs = dict(d)
        for name in ("alpha", "curvature", "rho", "belief_location", "belief_scale"):
            if name in kwargs and isinstance(kwargs[name], dict):
                kwargs[name] = DistSpec.from_json_dict(kwargs[name])
        if "support" in kwargs and isinstance(kwargs["support"], dict):
            kwargs["support"] = SupportSpec.from_json_dict(kwargs["support"])
        return cls(**kwargs)


@dataclass(frozen=True)
class EtaValue:
    """One respondent's traits (the information they hold at elicitation)."""

    alpha: float
    curvature: float
    rho: float
    belief_location: float
    belief_scale: float

    @property
    def k(self) -> float:
        return (1.0 - self.alpha) / self.alpha


@dataclass(frozen=True)
class PopulationDraw:
    """Vectorised i.i.d. draws of respondent traits, reproducible from seed."""

    alpha: np.ndarray
    curvature: np.ndarray
    rho: np.ndarray
    belief_location: np.ndarray
    belief_scale: np.ndarray
    seed: int

    def __len__(self):
        return len(self.alpha)

    @property
    def k(self) -> np.ndarray:
        return (1.0 - self.alpha) / self.alpha

    def eta(self, i: int) -> EtaValue:
        return EtaValue(
            alpha=float(self.alpha[i]),
            curvature=float(self.curvature[i]),
            rho=float(self.rho[i]),
            belief_location=float(self.belief_location[i]),
            belief_scale=float(self.belief_scale[i]),
        )


def draw_population(cfg: DgpConfig, seed: int, n: int | None = None) -> PopulationDraw:
    """Draw ``n`` (default: cfg.n_respondents) i.i.d. trait vectors."""
    n = cfg.n_respondents if n is None else n
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0xE7A)))
    loc = cfg.belief_location.draw(rng, n)
    scale = cfg.belief_scale.draw(rng, n)
    if cfg.belief_scale_link != 0.0:
        # couple dispersion to location so individual quantiles stay
        # comonotone across the population (heterogeneous spreads without
        # rank crossings between low and high quantiles)
        scale = np.maximum(scale + cfg.belief_scale_link * (loc - cfg.belief_location.mean()), 1e-3)
    return PopulationDraw(
        alpha=cfg.alpha.draw(rng, n),
        curvature=cfg.curvature.draw(rng, n),
        rho=np.clip(cfg.rho.draw(rng, n), -1.0, 1.0),
        belief_location=loc,
        belief_scale=scale,
        seed=int(seed),
    )


def _pop_from_eta(eta: EtaValue) -> PopulationDraw:
    return PopulationDraw(
        alpha=np.array([eta.alpha]),
        curvature=np.array([eta.curvature]),
        rho=np.array([eta.rho]),
        belief_location=np.array([eta.belief_location]),
        belief_scale=np.array([eta.belief_scale]),
        seed=0,
    )


def _attr_values(x: Scenario) -> dict:
    vals = {f: float(getattr(x, f)) for f in _ATTR_FIELDS[2:]}
    vals["employer_pub"] = 1.0 if x.employer_pub == "public_firm" else 0.0
    vals["employer_priv"] = 1.0 if x.employer_priv == "large_firm" else 0.0
    # product of the two wages in hundreds; lets the demand index carry a
    # wage complementarity, which makes willingness to pay for non-wage
    # attributes vary with the private wage level
    vals["wage_interaction"] = x.y0 * x.y1 / 1e4
    return vals


def _z_index(cfg: DgpConfig, pop: PopulationDraw, x: Scenario) -> np.ndarray:
    """Per-respondent non-wage contribution to the return index."""
    vals = _attr_values(x)
    base = sum(c * vals[f] for f, c in cfg.attr_coef.items())
    out = np.full(len(pop), float(base))
    if cfg.attr_coef_load:
        centred = pop.belief_location - cfg.belief_location.mean()
        load = sum(c * vals[f] for f, c in cfg.attr_coef_load.items())
        out = out + load * centred
    return out


def _normcdf(x, mean, sd):
    """Normal cdf that degrades to an indicator when sd == 0."""
    sd = np.broadcast_to(np.asarray(sd, dtype=float), np.broadcast_shapes(np.shape(x), np.shape(mean), np.shape(sd)))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (np.asarray(x, dtype=float) - mean) / sd
    out = ndtr(np.where(sd > 0, z, 0.0))
    return np.where(sd > 0, out, (np.asarray(x) >= np.asarray(mean)).astype(float))


@functools.lru_cache(maxsize=8)
def _gh_nodes(n: int):
    nodes, weights = np.polynomial.hermite.hermgauss(n)
    return nodes, weights / np.sqrt(np.pi)


# ---------------------------------------------------------------------------
# gaussian_linear closed forms


def _gauss_loc_scale(cfg, pop, x: Scenario):
    """Location/scale of the normal perceived-return distribution.

    With a ``wage_interaction`` coefficient the demand index slope in a
    public-wage top-up becomes d = 1 - gamma * y1 / 1e4, so the implied
    return distribution is the base normal divided by d.
    """
    k = pop.k
    loc = x.y1 - x.y0 + _z_index(cfg, pop, x) + k * pop.belief_location
    scale = k * pop.belief_scale
    gamma = cfg.attr_coef.get("wage_interaction", 0.0)
    if gamma:
        d = 1.0 - gamma * x.y1 / 1e4
        if d <= 0:
            raise EvaluationError(
                f"wage interaction {gamma} makes demand nondecreasing in the "
                f"top-up at y1={x.y1}; returns are not identified"
            )
        loc = loc / d
        scale = scale / d
    return loc, scale


# ---------------------------------------------------------------------------
# ces_lognormal quadrature

def _ces_cdf_D(cfg, pop, t: np.ndarray) -> np.ndarray:
    """cdf of the believed amenity-power gap D = a1^b - a0^b at thresholds t.

    ``t`` has shape (M, S). Integrates the public-sector log amenity with
    Gauss-Hermite nodes and closes the private-sector one analytically via
    the conditional normal (Cholesky in the bivariate normal).
    """
    la0, sa0 = cfg.log_amenity_loc_pub, cfg.log_amenity_scale_pub
    la1, sa1 = cfg.log_amenity_loc_priv, cfg.log_amenity_scale_priv
    nodes, weights = _gh_nodes(cfg.gh_nodes)
    if sa0 == 0.0:
        nodes, weights = np.zeros(1), np.ones(1)
    L0 = la0 + np.sqrt(2.0) * sa0 * nodes  # (G,)
    b = pop.curvature[:, None, None]
    rho = pop.rho[:, None, None]
    cond_mean = la1 + (rho * sa1 / sa0 if sa0 > 0 else 0.0) * (L0[None, None, :] - la0)
    cond_sd = sa1 * np.sqrt(np.maximum(0.0, 1.0 - rho**2))
    u = t[:, :, None] + np.exp(b * L0[None, None, :])  # (M, S, G)
    with np.errstate(divide="ignore"):
        logu = np.where(u > 0, np.log(np.maximum(u, 1e-300)), -np.inf)
    prob = np.where(u > 0, _normcdf(logu / b, cond_mean, cond_sd), 0.0)
    return prob @ weights  # (M, S)


def _ces_cdf_S(cfg, pop, x: Scenario, s: np.ndarray, chunk: int = 512) -> np.ndarray:
    """cdf of perceived returns at each s for each respondent, shape (M, S)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    M = len(pop)
    out = np.empty((M, len(s)))
    for lo in range(0, M, chunk):
        hi = min(lo + chunk, M)
        sub = _pop_slice(pop, lo, hi)
        b = sub.curvature[:, None]
        k = sub.k[:, None]
        y0s = x.y0 + s[None, :]
        with np.errstate(invalid="ignore"):
            t = np.where(y0s > 0, (np.maximum(y0s, 0.0) ** b - x.y1**b) / k, -np.inf)
        out[lo:hi] = _ces_cdf_D(cfg, sub, t)
    return out


def _pop_slice(pop: PopulationDraw, lo: int, hi: int) -> PopulationDraw:
    return PopulationDraw(
        alpha=pop.alpha[lo:hi],
        curvature=pop.curvature[lo:hi],
        rho=pop.rho[lo:hi],
        belief_location=pop.belief_location[lo:hi],
        belief_scale=pop.belief_scale[lo:hi],
        seed=pop.seed,
    )


# ---------------------------------------------------------------------------
# belief distribution API


def belief_cdf(cfg: DgpConfig, eta: EtaValue, x: Scenario, s) -> np.ndarray:
    """F_{S,i}(s; x): the respondent's perceived-return cdf."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = _belief_cdf_vec(cfg, _pop_from_eta(eta), x, s_arr)[0]
    return out if np.ndim(s) else float(out[0])


def _belief_cdf_vec(cfg, pop, x: Scenario, s: np.ndarray) -> np.ndarray:
    if cfg.kind == "gaussian_linear":
        loc, scale = _gauss_loc_scale(cfg, pop, x)
        return _normcdf(s[None, :], loc[:, None], scale[:, None])
    return _ces_cdf_S(cfg, pop, x, s)


def stated_demand_m(x: Scenario, eta: EtaValue, cfg: DgpConfig) -> float:
    """m(x, eta): probability the respondent states for choosing option 1."""
    if x.y0 <= 0 or x.y1 <= 0:
        raise ValueError("scenario wages must be positive")
    return 1.0 - belief_cdf(cfg, eta, x, 0.0)


def _stated_demand_vec(cfg, pop, x: Scenario) -> np.ndarray:
    return 1.0 - _belief_cdf_vec(cfg, pop, x, np.array([0.0]))[:, 0]


def belief_quantile(cfg: DgpConfig, eta: EtaValue, x: Scenario, tau: float) -> float:
    """Q_{S,i}(tau; x): a quantile of the perceived-return distribution."""
    return float(_belief_quantile_vec(cfg, _pop_from_eta(eta), x, tau)[0])


def _belief_quantile_vec(cfg, pop, x: Scenario, tau: float) -> np.ndarray:
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    if cfg.kind == "gaussian_linear":
        loc, scale = _gauss_loc_scale(cfg, pop, x)
        return loc + scale * ndtri(tau)
    # numeric inversion on a dense grid, linear interpolation between knots
    grid = _dense_s_grid(cfg, x)
    cdf = _ces_cdf_S(cfg, pop, x, grid)
    out = np.empty(len(pop))
    for i in range(len(pop)):
        out[i] = _invert_cdf(grid, cdf[i], tau)
    return out


def _dense_s_grid(cfg, x: Scenario, n: int = 400) -> np.ndarray:
    # wide enough to bracket the belief distribution for sane configs
    span = 4.0 * max(x.y0, x.y1, 1000.0)
    return np.linspace(-x.y0 + 1e-6, span, n)


def _invert_cdf(grid, cdf, tau):
    idx = np.searchsorted(cdf, tau, side="left")
    if idx == 0:
        return float(grid[0])
    if idx >= len(grid):
        return float(grid[-1])
    g0, g1 = grid[idx - 1], grid[idx]
    c0, c1 = cdf[idx - 1], cdf[idx]
    if c1 <= c0:
        return float(g1)
    return float(g0 + (tau - c0) / (c1 - c0) * (g1 - g0))


def _belief_mean_vec(cfg, pop, x: Scenario) -> np.ndarray:
    if cfg.kind == "gaussian_linear":
        loc, _ = _gauss_loc_scale(cfg, pop, x)
        return loc
    grid = _dense_s_grid(cfg, x)
    cdf = _ces_cdf_S(cfg, pop, x, grid)
    integrand = (grid[None, :] <= 0.0).astype(float) * -1.0 + (1.0 - cdf)
    # mu = int (1 - F(s) - 1{s<=0}) ds over the dense grid
    return np.trapezoid(integrand, grid, axis=1)


# ---------------------------------------------------------------------------
# survey simulation


def simulate_survey(pop: PopulationDraw, cfg: DgpConfig, seed: int) -> Dataset:
    """Emit a Dataset: T scenarios per respondent, drawn independently of eta."""
    records = []
    T = cfg.scenarios_per_respondent
    for i in range(len(pop)):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x5C, i)))
        sub = _pop_slice(pop, i, i + 1)
        for t in range(1, T + 1):
            x = cfg.support.sample_scenario(rng)
            p = float(_stated_demand_vec(cfg, sub, x)[0])
            if cfg.round_to is not None:
                p = round(p / cfg.round_to) * cfg.round_to
            records.append(
                ChoiceRecord(
                    respondent_id=f"r{i:06d}",
                    scenario_index=t,
                    scenario=x,
                    p_stated=float(np.clip(p, 0.0, 1.0)),
                )
            )
    return Dataset(records=tuple(records), support=cfg.support)


def sample_realized_returns(
    cfg: DgpConfig, pop: PopulationDraw, x: Scenario, seed: int
) -> np.ndarray:
    """Draw one realised return per respondent from their belief distribution."""
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x5EA)))
    if cfg.kind == "gaussian_linear":
        loc, scale = _gauss_loc_scale(cfg, pop, x)
        return loc + scale * rng.standard_normal(len(pop))
    la0, sa0 = cfg.log_amenity_loc_pub, cfg.log_amenity_scale_pub
    la1, sa1 = cfg.log_amenity_loc_priv, cfg.log_amenity_scale_priv
    z0 = rng.standard_normal(len(pop))
    z1 = rng.standard_normal(len(pop))
    L0 = la0 + sa0 * z0
    L1 = la1 + sa1 * (pop.rho * z0 + np.sqrt(np.maximum(0.0, 1.0 - pop.rho**2)) * z1)
    b = pop.curvature
    base = x.y1**b + pop.k * (np.exp(b * L1) - np.exp(b * L0))
    bad = np.flatnonzero(base <= 0)
    if bad.size:
        raise EvaluationError(
            f"nonpositive CES base for fractional exponent at draw {bad[0]} "
            f"(base={base[bad[0]]:.6g})"
        )
    return base ** (1.0 / b) - x.y0


# ---------------------------------------------------------------------------
# brute-force truth curves


def true_fq(
    cfg: DgpConfig, tau: float, s_grid: SGrid, x_tilde, seed: int = 0, n_draws: int | None = None
) -> ReturnsCurve:
    """Brute-force F_Q(s; tau): cdf of the tau-quantile of perceived returns.

    Uses the event identity {Q_i(tau) <= s} = {F_i(s) >= tau}, so no
    numerical quantile inversion is involved.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must be in (0, 1)")
    mixture = as_mixture(x_tilde)
    pop = draw_population(cfg, seed, n=n_draws or cfg.mc_draws)
    values = np.zeros(len(s_grid.values))
    for x, mass in mixture:
        cdf = _belief_cdf_vec(cfg, pop, x, s_grid.values)
        values += mass * np.mean(cdf >= tau, axis=0)
    mask = s_grid.region_mask(cfg.support, [x for x, _ in mixture])
    return ReturnsCurve(
        grid=s_grid.values, values=values, label=f"true_FQ(tau={tau})", mask=mask
    )


def _ecdf_on_grid(samples: np.ndarray, grid: np.ndarray) -> np.ndarray:
    sorted_samples = np.sort(samples)
    return np.searchsorted(sorted_samples, grid, side="right") / len(samples)


def true_dist_mu(cfg, x_tilde, y_grid, seed: int = 0, n_draws: int | None = None) -> ReturnsCurve:
    """Brute-force cdf of mean perceived returns over the population."""
    mixture = as_mixture(x_tilde)
    pop = draw_population(cfg, seed, n=n_draws or cfg.mc_draws)
    y_grid = np.asarray(y_grid, dtype=float)
    values = np.zeros(len(y_grid))
    for x, mass in mixture:
        values += mass * _ecdf_on_grid(_belief_mean_vec(cfg, pop, x), y_grid)
    return ReturnsCurve(grid=y_grid, values=values, label="true_dist_mu")


def true_dist_iqr(
    cfg, x_tilde, tau1: float, tau2: float, y_grid, seed: int = 0, n_draws: int | None = None
) -> ReturnsCurve:
    """Brute-force cdf of the (tau1, tau2) inter-quantile range of beliefs."""
    if not 0.0 < tau1 < tau2 < 1.0:
        raise ValueError("need 0 < tau1 < tau2 < 1")
    mixture = as_mixture(x_tilde)
    pop = draw_population(cfg, seed, n=n_draws or cfg.mc_draws)
    y_grid = np.asarray(y_grid, dtype=float)
    values = np.zeros(len(y_grid))
    for x, mass in mixture:
        iqr = _belief_quantile_vec(cfg, pop, x, tau2) - _belief_quantile_vec(cfg, pop, x, tau1)
        values += mass * _ecdf_on_grid(iqr, y_grid)
    return ReturnsCurve(grid=y_grid, values=values, label=f"true_dist_iqr({tau1},{tau2})")


def true_dist_qwtp(
    cfg, x_tilde, h: dict, tau: float, y_grid, seed: int = 0, n_draws: int | None = None
) -> ReturnsCurve:
    """Brute-force cdf of the quantile effect of attribute shift ``h``."""
    mixture = as_mixture(x_tilde)
    pop = draw_population(cfg, seed, n=n_draws or cfg.mc_draws)
    y_grid = np.asarray(y_grid, dtype=float)
    values = np.zeros(len(y_grid))
    for x, mass in mixture:
        effect = _belief_quantile_vec(cfg, pop, x.shifted(h), tau) - _belief_quantile_vec(
            cfg, pop, x, tau
        )
        values += mass * _ecdf_on_grid(effect, y_grid)
    return ReturnsCurve(grid=y_grid, values=values, label=f"true_dist_qwtp(tau={tau})")


def true_dist_mwtp(
    cfg, x_tilde, h: dict, y_grid, seed: int = 0, n_draws: int | None = None
) -> ReturnsCurve:
    """Brute-force cdf of the mean effect of attribute shift ``h``."""
    mixture = as_mixture(x_tilde)
    pop = draw_population(cfg, seed, n=n_draws or cfg.mc_draws)
    y_grid = np.asarray(y_grid, dtype=float)
    values = np.zeros(len(y_grid))
    for x, mass in mixture:
        effect = _belief_mean_vec(cfg, pop, x.shifted(h)) - _belief_mean_vec(cfg, pop, x)
        values += mass * _ecdf_on_grid(effect, y_grid)
    return ReturnsCurve(grid=y_grid, values=values, label="true_dist_mwtp")


def true_policy_objects(
    cfg: DgpConfig,
    x_tilde,
    tau_grid: np.ndarray,
    weights: np.ndarray,
    s_grid: SGrid,
    seed: int = 0,
    n_draws: int | None = None,
    expansion_grid: np.ndarray | None = None,
) -> dict:
    """Ground-truth F_S, transfer cost curve and cost elasticity.

    Mirrors the policy module's outputs, computed from the same brute-force
    quantile machinery as :func:`true_fq`.
    """
    from . import policy

    tau_grid = np.asarray(tau_grid, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if abs(np.mean(weights) - 1.0) > 1e-9:
        raise ValueError("weights must average to 1 on the tau grid")
    mixture = as_mixture(x_tilde)
    pop = draw_population(cfg, seed, n=n_draws or cfg.mc_draws)
    values = np.zeros(len(s_grid.values))
    for x, mass in mixture:
        cdf = _belief_cdf_vec(cfg, pop, x, s_grid.values)
        for tau, w in zip(tau_grid, weights):
            values += mass * (w / len(tau_grid)) * np.mean(cdf >= tau, axis=0)
    mask = s_grid.region_mask(cfg.support, [x for x, _ in mixture])
    fs = ReturnsCurve(grid=s_grid.values, values=values, label="true_FS", mask=mask)
    baseline_wage = sum(mass * x.y1 for x, mass in mixture)
    if expansion_grid is None:
        expansion_grid = np.arange(0.0, 0.101, 0.01)
    table = policy.transfer_cost_curve(fs, expansion_grid, baseline_wage=baseline_wage)
    elasticity = policy.cost_elasticity(table)
    return {"fs": fs, "cost_table": table, "elasticity": elasticity}
