"""End-to-end command driver: simulate -> fit -> curves -> policy."""

import csv
import json

import pytest

from exante.cli import config_hash, max_workers, run, scenario_from_dict

DGP_BLOCK = {
    "kind": "gaussian_linear",
    "n_respondents": 300,
    "scenarios_per_respondent": 2,
    "belief_location": {"kind": "logistic", "params": [0.0, 85.0]},
    "belief_scale": {"kind": "constant", "params": [150.0]},
}

X_TILDE = [{"wage_pub": 650.0, "wage_priv": 650.0, "layoff_priv": 0.2}]
S_GRID = {"lo": -200.0, "hi": 200.0, "step": 50.0}


def write_config(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh)
    return str(path)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run the four commands once and hand the artifact directories around."""
    root = tmp_path_factory.mktemp("pipeline")
    sim_dir, fit_dir, curves_dir, policy_dir = (
        root / "sim", root / "fit", root / "curves", root / "policy"
    )

    sim_cfg = write_config(
        root / "sim.json",
        {
            "dgp": DGP_BLOCK,
            "seed": 5,
            "x_tilde": X_TILDE,
            "taus": [0.5],
            "s_grid": S_GRID,
            "truth_draws": 20_000,
            "out": str(sim_dir),
        },
    )
    assert run(["simulate", "--config", sim_cfg]) == 0

    fit_cfg = write_config(
        root / "fit.json",
        {
            "dataset": str(sim_dir / "dataset.csv"),
            "taus": [0.5],
            "policy": {"tau_grid": [0.25, 0.5, 0.75]},
            "out": str(fit_dir),
        },
    )
    assert run(["fit", "--config", fit_cfg]) == 0

    curves_cfg = write_config(
        root / "curves.json",
        {
            "model": str(fit_dir / "model.json"),
            "dataset": str(sim_dir / "dataset.csv"),
            "x_tilde": X_TILDE,
            "taus": [0.5],
            "s_grid": S_GRID,
            "y_grid": {"lo": -100.0, "hi": 100.0, "step": 50.0},
            "bootstrap": 55,
            "seed": 5,
            "wtp": {"copula": "comonotone", "h": {"layoff_priv": 0.1}, "bins": 5},
            "out": str(curves_dir),
        },
    )
    assert run(["curves", "--config", curves_cfg]) == 0

    policy_cfg = write_config(
        root / "policy.json",
        {
            "model": str(fit_dir / "model.json"),
            "dataset": str(sim_dir / "dataset.csv"),
            "x_tilde": X_TILDE,
            "s_grid": S_GRID,
            "policy": {"tau_grid": [0.25, 0.5, 0.75], "x_grid": [0.0, 0.05, 0.1]},
            "out": str(policy_dir),
        },
    )
    assert run(["policy", "--config", policy_cfg]) == 0

    return {"root": root, "sim": sim_dir, "fit": fit_dir, "curves": curves_dir,
            "policy": policy_dir}


def test_simulate_artifacts(pipeline):
    sim = pipeline["sim"]
    for name in ("dataset.csv", "validation.json", "truth_curves.csv", "manifest.json"):
        assert (sim / name).exists(), name
    report = json.loads((sim / "validation.json").read_text())
    assert report["n_records"] == 600
    assert report["n_respondents"] == 300
    assert report["qwtp_gate_open"] is True


def test_fit_artifacts(pipeline):
    fit = pipeline["fit"]
    model = json.loads((fit / "model.json").read_text())
    assert len(model["coef"][0]) == 12  # full scenario design
    with open(fit / "diagnostics.csv") as fh:
        fh.readline()  # config-hash comment
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(model["thresholds"])
    assert all(r["converged"] in ("True", "False") for r in rows)


def test_curves_artifacts(pipeline):
    curves = pipeline["curves"]
    with open(curves / "curves.csv") as fh:
        fh.readline()
        rows = list(csv.DictReader(fh))
    estimands = {r["estimand"] for r in rows}
    assert any(e.startswith("FQ") for e in estimands)
    assert "dist_mu" in estimands
    assert any(e.startswith("dist_iqr") for e in estimands)
    assert "dist_mwtp" in estimands
    assert any(e.startswith("dist_qwtp") for e in estimands)
    fq_rows = [r for r in rows if r["estimand"].startswith("FQ")]
    assert all(r["lower"] != "" and r["upper"] != "" for r in fq_rows)  # banded
    for r in fq_rows:
        assert float(r["lower"]) <= float(r["point"]) <= float(r["upper"])
    # report path: figures rendered alongside the delimited output
    assert (curves / "curves.png").stat().st_size > 0
    assert (curves / "distributions.png").stat().st_size > 0


def test_policy_artifacts(pipeline):
    pol = pipeline["policy"]
    elas = json.loads((pol / "elasticities.json").read_text())["elasticity"]
    assert set(elas) == {"uniform", "beta(1,1)", "beta(2,2)", "beta(5,2)", "beta(2,5)"}
    assert all(v >= 1.0 - 1e-9 for v in elas.values())
    with open(pol / "cost_tables.csv") as fh:
        fh.readline()
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5 * 3  # five schemes, three expansion points
    assert (pol / "policy.png").stat().st_size > 0
    assert (pol / "fs_curves.png").stat().st_size > 0


def test_manifest_hashes_files(pipeline):
    import hashlib

    sim = pipeline["sim"]
    manifest = json.loads((sim / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    for name, digest in manifest["files"].items():
        assert hashlib.sha256((sim / name).read_bytes()).hexdigest() == digest


def test_simulate_deterministic_across_out_dirs(pipeline, tmp_path):
    rerun_dir = tmp_path / "rerun"
    cfg = write_config(
        tmp_path / "sim2.json",
        {
            "dgp": DGP_BLOCK,
            "seed": 5,
            "x_tilde": X_TILDE,
            "taus": [0.5],
            "s_grid": S_GRID,
            "truth_draws": 20_000,
            "out": str(rerun_dir),
        },
    )
    assert run(["simulate", "--config", cfg]) == 0
    sim = pipeline["sim"]
    assert (rerun_dir / "dataset.csv").read_bytes() == (sim / "dataset.csv").read_bytes()
    # the output directory is not part of the identity of a run
    assert (rerun_dir / "manifest.json").read_bytes() == (sim / "manifest.json").read_bytes()


def test_config_hash_ignores_out_key():
    base = {"seed": 1, "dgp": DGP_BLOCK}
    assert config_hash(base) != config_hash({**base, "seed": 2})


def test_curves_without_fit_is_a_usage_error(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", {"dataset": "x.csv", "out": str(tmp_path / "o")})
    assert run(["curves", "--config", cfg]) == 2
    assert "fit required" in capsys.readouterr().err


def test_missing_config_is_a_usage_error(capsys):
    with pytest.raises(SystemExit):
        run(["curves"])
    assert "--config is required" in capsys.readouterr().err


def test_broken_dataset_reports_module_and_row(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(
        "respondent_id,scenario_index,p_stated,wage_pub,wage_priv,employer_pub,"
        "employer_priv,hours_pub,hours_priv,layoff_pub,layoff_priv,promo_pub,promo_priv\n"
        "r1,1,1.7,650,650,administration,sme,40,40,0.05,0.1,0.1,0.1\n"
    )
    cfg = write_config(
        tmp_path / "cfg.json", {"dataset": str(bad), "out": str(tmp_path / "o")}
    )
    assert run(["fit", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "dataset:" in err and "probability out of range" in err


def test_scenario_from_dict_wage_aliases():
    x = scenario_from_dict({"wage_pub": 600.0, "wage_priv": 700.0, "mass": 2.0})
    assert x.y0 == 600.0 and x.y1 == 700.0


def test_max_workers_env(monkeypatch):
    monkeypatch.setenv("EXANTE_THREADS", "4")
    assert max_workers() == 4
    monkeypatch.setenv("EXANTE_THREADS", "junk")
    assert max_workers() == 1
    monkeypatch.setenv("EXANTE_THREADS", "-3")
    assert max_workers() == 1
    monkeypatch.delenv("EXANTE_THREADS")
    assert max_workers() == 1
