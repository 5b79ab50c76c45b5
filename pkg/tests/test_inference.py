"""Bootstrap confidence bands: scale estimate, pointwise and sup-t bands."""

import numpy as np
import pytest
from scipy.stats import norm

from exante.curves import ReturnsCurve
from exante.inference import (
    BandSpec,
    covers,
    pointwise_band,
    robust_sd,
    uniform_band,
)

GRID = np.linspace(-100.0, 100.0, 9)


def curve(values, mask=None):
    return ReturnsCurve(grid=GRID, values=np.asarray(values, dtype=float), mask=mask)


def noisy_draws(rng, center, sd, n=200):
    center = np.asarray(center, dtype=float)
    return [
        curve(np.clip(center + rng.normal(0.0, sd, size=len(GRID)), 0.0, 1.0)) for _ in range(n)
    ]


def test_band_spec_validates():
    with pytest.raises(ValueError, match="level"):
        BandSpec(level=0.4)
    with pytest.raises(ValueError, match="kind"):
        BandSpec(kind="bonferroni")


def test_robust_sd_matches_normal_scale(rng):
    samples = rng.normal(0.5, 0.1, size=(20_000, 3))
    np.testing.assert_allclose(robust_sd(samples), 0.1, rtol=0.15)


def test_robust_sd_ignores_outlier_replicates(rng):
    samples = rng.normal(0.0, 1.0, size=(1000, 1))
    samples[:5] = 1e6
    assert robust_sd(samples)[0] < 2.0


def test_identical_draws_give_zero_width_pointwise():
    point = curve(np.linspace(0.1, 0.9, 9))
    draws = [curve(point.values) for _ in range(60)]
    banded = pointwise_band(point, draws)
    np.testing.assert_array_equal(banded.band.lower, point.values)
    np.testing.assert_array_equal(banded.band.upper, point.values)


def test_identical_draws_give_zero_width_uniform():
    point = curve(np.linspace(0.1, 0.9, 9))
    draws = [curve(point.values) for _ in range(60)]
    with pytest.warns(UserWarning, match="zero bootstrap scale"):
        banded = uniform_band(point, draws)
    np.testing.assert_array_equal(banded.band.lower, point.values)
    np.testing.assert_array_equal(banded.band.upper, point.values)


def test_too_few_draws_rejected():
    point = curve(np.full(9, 0.5))
    draws = [curve(np.full(9, 0.5)) for _ in range(49)]
    with pytest.raises(ValueError, match="at least 50"):
        pointwise_band(point, draws)


def test_draws_must_share_the_grid():
    point = curve(np.full(9, 0.5))
    other = ReturnsCurve(grid=GRID + 1.0, values=np.full(9, 0.5))
    with pytest.raises(ValueError, match="grid"):
        pointwise_band(point, [other] * 60)


def test_pointwise_width_matches_normal_quantile(rng):
    point = curve(np.full(9, 0.5))
    draws = noisy_draws(rng, point.values, 0.05, n=2000)
    banded = pointwise_band(point, draws, BandSpec(level=0.90, kind="pointwise"))
    half_width = 0.5 * (banded.band.upper - banded.band.lower)
    np.testing.assert_allclose(half_width, norm.ppf(0.95) * 0.05, rtol=0.15)


def test_band_stays_inside_unit_interval(rng):
    point = curve(np.full(9, 0.99))
    banded = pointwise_band(point, noisy_draws(rng, point.values, 0.2))
    assert np.all(banded.band.upper <= 1.0)
    assert np.all(banded.band.lower >= 0.0)


def test_uniform_band_at_least_as_wide_as_pointwise(rng):
    point = curve(np.linspace(0.2, 0.8, 9))
    draws = noisy_draws(rng, point.values, 0.04, n=500)
    spec_u = BandSpec(level=0.90, kind="uniform")
    spec_p = BandSpec(level=0.90, kind="pointwise")
    u = uniform_band(point, draws, spec_u)
    p = pointwise_band(point, draws, spec_p)
    assert np.all(u.band.upper >= p.band.upper - 1e-9)
    assert np.all(u.band.lower <= p.band.lower + 1e-9)


def test_uniform_band_on_single_point_region_is_t_quantile(rng):
    # with one contributing grid point the sup-t statistic reduces to |t|,
    # so k-hat is just the level-quantile of |draw - point| / sigma-hat there
    point = curve(np.full(9, 0.5))
    draws = noisy_draws(rng, point.values, 0.05, n=400)
    mask = np.ones(9, dtype=bool)
    mask[4] = False
    banded = uniform_band(point, draws, BandSpec(level=0.90, kind="uniform"), region_mask=mask)
    mat = np.vstack([c.values for c in draws])
    sd = robust_sd(mat)
    t_abs = np.abs(mat[:, 4] - 0.5) / sd[4]
    k_hat = np.quantile(t_abs, 0.90)
    np.testing.assert_allclose(banded.band.upper, np.clip(0.5 + k_hat * sd, 0.0, 1.0), atol=1e-12)


def test_uniform_band_excludes_masked_points_from_calibration(rng):
    point = curve(np.full(9, 0.5), mask=np.array([True] * 8 + [False]))
    draws = []
    rng_local = np.random.default_rng(7)
    for _ in range(200):
        vals = np.full(9, 0.5)
        vals[:8] += rng_local.normal(0.0, 0.3, size=8)  # wild only where masked
        vals[8] += rng_local.normal(0.0, 0.01)
        draws.append(curve(np.clip(vals, 0.0, 1.0)))
    banded = uniform_band(point, draws)
    # the critical value is calibrated at the quiet unmasked point
    assert banded.band.upper[8] - banded.band.lower[8] < 0.1


def test_covers_requires_band():
    with pytest.raises(ValueError, match="no band"):
        covers(curve(np.full(9, 0.5)), curve(np.full(9, 0.5)))


def test_covers_checks_unmasked_points_only(rng):
    point = curve(np.full(9, 0.5), mask=np.array([False] * 8 + [True]))
    draws = noisy_draws(rng, np.full(9, 0.5), 0.05)
    banded = uniform_band(point, draws)
    inside = np.full(9, 0.5)
    assert covers(banded, curve(inside))
    outside_masked = inside.copy()
    outside_masked[8] = 0.99  # violation only at the masked point
    assert covers(banded, curve(outside_masked))
    outside_real = inside.copy()
    outside_real[0] = 0.99
    assert not covers(banded, curve(outside_real))


def test_nominal_coverage_on_gaussian_curves():
    # 200 Monte Carlo worlds: a 90% uniform band over 5 points should cover
    # the flat truth in at least ~85% of them
    rng = np.random.default_rng(123)
    grid = np.arange(5.0)
    truth = ReturnsCurve(grid=grid, values=np.full(5, 0.5))
    hits = 0
    n_worlds = 200
    for _ in range(n_worlds):
        point_vals = np.clip(0.5 + rng.normal(0.0, 0.03, 5), 0.0, 1.0)
        point = ReturnsCurve(grid=grid, values=point_vals)
        draws = [
            ReturnsCurve(grid=grid, values=np.clip(point_vals + rng.normal(0.0, 0.03, 5), 0, 1))
            for _ in range(200)
        ]
        banded = uniform_band(point, draws, BandSpec(level=0.90, kind="uniform"))
        hits += covers(banded, truth)
    assert hits / n_worlds >= 0.85
