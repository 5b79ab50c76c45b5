"""Quantile-weighted hiring predictions and transfer cost curves."""

import csv

import numpy as np
import pytest

from exante import dgp
from exante.curves import ReturnsCurve, SGrid, sup_distance
from exante.dataset import Scenario
from exante.dr import fit_dr
from exante.policy import (
    DEFAULT_TAU_GRID,
    WeightScheme,
    cost_elasticity,
    invert_fs,
    make_weights,
    predict_fs,
    transfer_cost_curve,
    write_cost_csv,
)
from exante.returns import fq_curve


# ---------------------------------------------------------------------------
# weight schemes


def test_uniform_weights_are_all_ones():
    w = make_weights("uniform")
    np.testing.assert_array_equal(w.weights, 1.0)
    assert w.label == "uniform"


def test_beta_1_1_equals_uniform():
    np.testing.assert_allclose(make_weights("beta", 1.0, 1.0).weights, 1.0)


def test_beta_2_2_symmetric_peaked_at_half():
    w = make_weights("beta", 2.0, 2.0)
    assert np.mean(w.weights) == pytest.approx(1.0)
    np.testing.assert_allclose(w.weights, w.weights[::-1], atol=1e-12)
    assert np.argmax(w.weights) == np.argmin(np.abs(w.tau_grid - 0.5))
    assert w.label == "beta(2,2)"


def test_beta_2_5_downweights_upper_tail():
    w = make_weights("beta", 2.0, 5.0)
    assert np.mean(w.weights) == pytest.approx(1.0)
    i_low = np.argmin(np.abs(w.tau_grid - 0.2))
    i_high = np.argmin(np.abs(w.tau_grid - 0.9))
    assert w.weights[i_high] < w.weights[i_low]


def test_point_weights_concentrate_on_nearest_tau():
    w = make_weights("point", point=0.52)
    i = np.argmin(np.abs(w.tau_grid - 0.52))
    assert w.weights[i] == len(w.tau_grid)
    assert np.sum(w.weights) == len(w.tau_grid)  # mean one


def test_weight_validation():
    with pytest.raises(ValueError, match="unknown weight kind"):
        make_weights("triangular")
    with pytest.raises(ValueError, match="positive"):
        make_weights("beta", alpha=0.0)
    with pytest.raises(ValueError, match="inside"):
        make_weights("uniform", tau_grid=np.array([0.0, 0.5]))
    tau = np.array([0.25, 0.75])
    with pytest.raises(ValueError, match="nonnegative"):
        WeightScheme(kind="uniform", tau_grid=tau, weights=np.array([-0.5, 2.5]))
    with pytest.raises(ValueError, match="average to one"):
        WeightScheme(kind="uniform", tau_grid=tau, weights=np.array([2.0, 2.0]))
    with pytest.raises(ValueError, match="align"):
        WeightScheme(kind="uniform", tau_grid=tau, weights=np.ones(3))


# ---------------------------------------------------------------------------
# predicted realized-return cdf


def toy_curves(tau_grid):
    grid = np.array([-100.0, 0.0, 100.0])
    return [
        ReturnsCurve(grid=grid, values=np.clip([tau - 0.2, tau, tau + 0.2], 0, 1))
        for tau in tau_grid
    ]


def test_predict_fs_uniform_is_plain_average():
    tau = np.array([0.3, 0.5, 0.7])
    curves = toy_curves(tau)
    fs = predict_fs(curves, make_weights("uniform", tau_grid=tau))
    expected = np.mean([c.values for c in curves], axis=0)
    np.testing.assert_allclose(fs.values, expected, atol=1e-12)


def test_predict_fs_point_mass_returns_that_curve():
    tau = np.array([0.3, 0.5, 0.7])
    curves = toy_curves(tau)
    fs = predict_fs(curves, make_weights("point", tau_grid=tau, point=0.5))
    np.testing.assert_allclose(fs.values, curves[1].values, atol=1e-12)


def test_predict_fs_unions_masks():
    tau = np.array([0.4, 0.6])
    grid = np.array([-100.0, 0.0, 100.0])
    a = ReturnsCurve(grid=grid, values=[0.2, 0.4, 0.6], mask=np.array([True, False, False]))
    b = ReturnsCurve(grid=grid, values=[0.3, 0.5, 0.7], mask=np.array([False, False, True]))
    fs = predict_fs([a, b], make_weights("uniform", tau_grid=tau))
    np.testing.assert_array_equal(fs.mask, [True, False, True])


def test_predict_fs_validates_inputs():
    tau = np.array([0.3, 0.5, 0.7])
    curves = toy_curves(tau)
    with pytest.raises(ValueError, match="one F_Q curve per tau"):
        predict_fs(curves[:2], make_weights("uniform", tau_grid=tau))
    off_grid = ReturnsCurve(grid=np.array([-1.0, 0.0, 1.0]), values=[0.1, 0.2, 0.3])
    with pytest.raises(ValueError, match="common grid"):
        predict_fs([curves[0], curves[1], off_grid], make_weights("uniform", tau_grid=tau))


def test_predict_fs_matches_simulation_oracle(wellspec, x_simple):
    cfg, model = wellspec["cfg"], wellspec["model"]
    s_grid = SGrid.regular(-350, 350, 25)
    scheme = make_weights("uniform")
    curves = [fq_curve(model, t, s_grid, x_simple, support=cfg.support) for t in scheme.tau_grid]
    fs = predict_fs(curves, scheme)
    truth = dgp.true_policy_objects(
        cfg, x_simple, scheme.tau_grid, scheme.weights, s_grid, seed=17, n_draws=200_000
    )["fs"]
    assert sup_distance(fs, truth) <= 0.06


# ---------------------------------------------------------------------------
# inversion and cost curves


def linear_fs():
    # F_S uniform on [-1, 1] kCFA: F(s) = 0.5 + 0.5 s
    return ReturnsCurve(grid=np.array([-1.0, 0.0, 1.0]), values=np.array([0.0, 0.5, 1.0]))


def test_invert_fs_linear_interpolation():
    fs = linear_fs()
    assert invert_fs(fs, 0.6) == pytest.approx(0.2, abs=1e-12)
    assert invert_fs(fs, 0.5) == pytest.approx(0.0, abs=1e-12)
    assert invert_fs(fs, 0.0) == -1.0
    assert invert_fs(fs, 1.0) == 1.0
    with pytest.raises(ValueError, match="q must be"):
        invert_fs(fs, 1.2)


def test_invert_fs_terminal_flat_returns_left_edge():
    fs = ReturnsCurve(grid=np.array([-1.0, 0.0, 1.0, 2.0]), values=np.array([0.0, 0.5, 0.8, 0.8]))
    assert invert_fs(fs, 0.95) == 1.0  # cheapest transfer achieving the cap


def test_transfer_cost_uniform_calibration():
    table = transfer_cost_curve(linear_fs(), np.array([0.0, 0.1]), baseline_wage=1.0)
    np.testing.assert_allclose(table.transfer, [0.0, 0.2], atol=1e-6)
    np.testing.assert_allclose(table.cost_multiplier, [0.0, 0.12], atol=1e-6)
    # bill(x) = (0.5 + x) * (1 + transfer): elasticity ((0.72-0.5)/0.5)/0.2
    assert cost_elasticity(table) == pytest.approx(2.2, abs=1e-6)


def test_transfer_monotone_in_expansion():
    table = transfer_cost_curve(linear_fs(), np.arange(0.0, 0.41, 0.05))
    assert np.all(np.diff(table.transfer) >= -1e-12)
    assert table.wage_bill is None


def test_no_skill_rents_gives_unit_elasticity():
    # F_S steps to 1 at s = 0: expanding hires needs no transfer at all
    fs = ReturnsCurve(grid=np.array([-1.0, 0.0, 1.0]), values=np.array([0.0, 1.0, 1.0]))
    table = transfer_cost_curve(fs, np.array([0.0, 0.1]), baseline_wage=650.0)
    np.testing.assert_array_equal(table.transfer, 0.0)
    assert cost_elasticity(table) == pytest.approx(1.0, abs=1e-12)


def test_cost_curve_validation():
    fs = linear_fs()
    with pytest.raises(ValueError, match="nonnegative and strictly increasing"):
        transfer_cost_curve(fs, np.array([-0.1, 0.0]))
    with pytest.raises(ValueError, match="baseline wage"):
        transfer_cost_curve(fs, np.array([0.0, 0.1]), baseline_wage=-5.0)
    no_zero = ReturnsCurve(grid=np.array([-1.0, 1.0]), values=np.array([0.0, 1.0]))
    with pytest.raises(ValueError, match="s = 0"):
        transfer_cost_curve(no_zero, np.array([0.0, 0.1]))


def test_cost_elasticity_validation():
    table = transfer_cost_curve(linear_fs(), np.array([0.0, 0.1]))
    with pytest.raises(ValueError, match="baseline wage"):
        cost_elasticity(table)
    table2 = transfer_cost_curve(linear_fs(), np.array([0.1, 0.2]), baseline_wage=1.0)
    with pytest.raises(ValueError, match="x = 0"):
        cost_elasticity(table2)


def test_zero_baseline_share_rejected():
    fs = ReturnsCurve(grid=np.array([-1.0, 0.0, 1.0, 2.0]), values=np.array([0.0, 0.0, 0.5, 1.0]))
    table = transfer_cost_curve(fs, np.array([0.0, 0.1]), baseline_wage=1.0)
    with pytest.raises(ValueError, match="baseline hiring share"):
        cost_elasticity(table)


@pytest.fixture(scope="module")
def positive_returns_fit():
    """Beliefs mostly favour the alternative: F_S(0) sits in the lower tail.

    In this regime the baseline marginal hire is priced on the flat lower
    tail of F_S while downweighting high quantiles moves the marginal hire
    onto the steep part, so the optimism-corrected expansion is cheaper.
    """
    cfg = dgp.DgpConfig(
        kind="gaussian_linear",
        n_respondents=5000,
        scenarios_per_respondent=2,
        belief_location=dgp.DistSpec.logistic(150.0, 40.0),
        belief_scale=dgp.DistSpec.constant(200.0),
    )
    data = dgp.simulate_survey(dgp.draw_population(cfg, 13), cfg, 13)
    model = fit_dr(data, include_thresholds=(0.25, 0.5, 0.75))
    return cfg, model


def test_optimistic_weights_lower_the_elasticity(positive_returns_fit):
    cfg, model = positive_returns_fit
    x_grid = np.array([0.0, 0.1])
    for x in (Scenario(y0=650.0, y1=650.0), Scenario(y0=600.0, y1=650.0)):
        s_grid = SGrid.regular(-(x.y0 - 300.0), 1000.0 - x.y0, 25.0)
        elastic = {}
        for kind, alpha, beta in (("uniform", 1.0, 1.0), ("beta", 2.0, 5.0)):
            scheme = make_weights(kind, alpha, beta)
            curves = [fq_curve(model, t, s_grid, x) for t in scheme.tau_grid]
            fs = predict_fs(curves, scheme)
            table = transfer_cost_curve(fs, x_grid, baseline_wage=x.y1)
            elastic[kind] = cost_elasticity(table)
        assert elastic["beta"] < elastic["uniform"]


def test_lower_tau_weights_dominate_pointwise(positive_returns_fit):
    # shifting weight mass to lower quantiles raises the predicted cdf
    cfg, model = positive_returns_fit
    x = Scenario(y0=650.0, y1=650.0)
    s_grid = SGrid.regular(-350, 350, 25)
    low = make_weights("beta", 2.0, 5.0)
    high = make_weights("beta", 5.0, 2.0)
    curves = {t: fq_curve(model, t, s_grid, x) for t in low.tau_grid}
    fs_low = predict_fs([curves[t] for t in low.tau_grid], low)
    fs_high = predict_fs([curves[t] for t in high.tau_grid], high)
    assert np.all(fs_low.values >= fs_high.values - 1e-12)


def test_write_cost_csv(tmp_path):
    path = tmp_path / "cost.csv"
    table = transfer_cost_curve(linear_fs(), np.array([0.0, 0.1]), scheme="uniform")
    write_cost_csv(path, [table], header_comment="cost tables")
    with open(path) as fh:
        assert fh.readline().startswith("# cost tables")
        rows = list(csv.DictReader(fh))
    assert [r["scheme"] for r in rows] == ["uniform", "uniform"]
    assert float(rows[1]["transfer_kcfa"]) == pytest.approx(0.2, abs=1e-6)
    assert list(rows[0].keys()) == ["x", "transfer_kcfa", "cost_multiplier", "scheme"]


def test_default_tau_grid_shape():
    assert DEFAULT_TAU_GRID[0] == pytest.approx(0.05)
    assert DEFAULT_TAU_GRID[-1] == pytest.approx(0.95)
    assert len(DEFAULT_TAU_GRID) == 19
