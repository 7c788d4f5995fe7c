import numpy as np
import pytest

from stfe2d.config import Config
from stfe2d.harness import (EnsembleSummary, mc_ensemble, refinement_study,
                            worker_cap)
from stfe2d.integrator import stable_dt
from stfe2d.grid import Grid
from stfe2d.material import Material


def ensemble_config(tmp_path, n=16, lambda0=0.1, steps=60, **run_overrides):
    grid = Grid(n, n, 1.0, 1.0)
    dt = stable_dt(grid, Material())
    run = {"t_max": steps * dt, "dt": dt}
    run.update(run_overrides)
    return Config(
        grid={"nx": n, "ny": n, "Lx": 1.0, "Ly": 1.0},
        material={},
        noise={"lambda0": lambda0, "seed": 100},
        run=run,
        initial={"kind": "cosine-perturbed", "base": 1.0, "amplitude": 0.1},
        output={"dir": str(tmp_path), "prefix": "mc"},
    )


def test_single_replica_reduces_to_run(tmp_path):
    from stfe2d.config import assemble
    from stfe2d.integrator import run
    cfg = ensemble_config(tmp_path, steps=20)
    summary = mc_ensemble(cfg, 1, max_workers=1)
    bundle = assemble(cfg)
    res = run(bundle.initial, bundle.run, bundle.material,
              bundle.noise.with_seed(bundle.noise.seed))
    assert summary.n_replicas == 1 and summary.n_aborted == 0
    assert summary.sup_R_mean == pytest.approx(res.sup_R, rel=1e-14)
    assert summary.diss_mean == pytest.approx(res.diss_integral, rel=1e-14)


def test_silent_noise_gives_degenerate_ensemble(tmp_path):
    cfg = ensemble_config(tmp_path, lambda0=0.0, steps=10)
    summary = mc_ensemble(cfg, 3, max_workers=1)
    sups = [o.sup_R for o in summary.outcomes]
    assert max(sups) == min(sups)
    assert summary.stopped_fraction == 0.0


def test_desk_scale_smoke_baseline(tmp_path):
    # frozen baseline: small stochastic ensemble finishes, no stops, tiny
    # mass drift, finite running supremum of the combined functional
    cfg = ensemble_config(tmp_path, n=16, lambda0=0.1, steps=60)
    summary = mc_ensemble(cfg, 8, max_workers=1)
    assert summary.n_aborted == 0
    assert summary.stopped_fraction == 0.0
    assert summary.mass_drift_max <= 1e-10
    assert np.isfinite(summary.sup_R_max)
    assert summary.sup_R_max < 10.0


def test_ensemble_summary_deterministic(tmp_path):
    cfg = ensemble_config(tmp_path, steps=15)
    s1 = mc_ensemble(cfg, 4, max_workers=1)
    s2 = mc_ensemble(cfg, 4, max_workers=1)
    assert s1.summary_row() == s2.summary_row()


def test_aborted_replicas_are_recorded_not_fatal(tmp_path):
    cfg = ensemble_config(tmp_path, lambda0=50.0, steps=5,
                          dt=1e-4, u_floor=0.999999, max_halvings=1)
    summary = mc_ensemble(cfg, 3, max_workers=1)
    assert summary.n_aborted == 3
    assert all(o.error is not None for o in summary.outcomes)


def test_worker_cap_env(monkeypatch):
    monkeypatch.setenv("STFE2D_THREADS", "3")
    assert worker_cap() == 3
    monkeypatch.delenv("STFE2D_THREADS")
    assert worker_cap() >= 1


def test_parallel_matches_serial(tmp_path):
    cfg = ensemble_config(tmp_path, steps=10)
    serial = mc_ensemble(cfg, 4, max_workers=1)
    parallel = mc_ensemble(cfg, 4, max_workers=2)
    assert serial.summary_row() == parallel.summary_row()


# ---------------------------------------------------------------------------
# refinement studies
# ---------------------------------------------------------------------------

def test_refinement_needs_three_levels():
    with pytest.raises(ValueError, match="at least 3"):
        refinement_study("interp", [8, 16])
    with pytest.raises(ValueError, match="unknown refinement"):
        refinement_study("nope", [8, 16, 32])


def test_interp_rates():
    table = refinement_study("interp", [8, 16, 32, 64, 128])
    assert 1.85 <= table.slopes["l2"] <= 2.15
    assert 0.85 <= table.slopes["dx_l2"] <= 1.15


def test_laplacian_eig_rates():
    table = refinement_study("laplacian_eig", [8, 16, 32, 64])
    assert 1.95 <= table.slopes["eig_err"] <= 2.05
    assert max(table.errors["stencil_dev"]) <= 1e-12


def test_b3star_monitor_table():
    table = refinement_study("noise_b3star", [8, 16, 32, 64, 128])
    vals = table.errors["monitor"]
    assert max(vals) <= 2.0 * vals[0]


def test_ritz_refinement_table_slopes():
    table = refinement_study("ritz", [8, 16, 32])
    assert table.slopes["l2"] == pytest.approx(2.0, abs=0.25)
    assert table.slopes["h1"] == pytest.approx(1.0, abs=0.25)


def test_summary_csv_round_trip(tmp_path):
    from stfe2d.harness import write_summary_csv
    cfg = ensemble_config(tmp_path, steps=5)
    summary = mc_ensemble(cfg, 2, max_workers=1)
    path = tmp_path / "summary.csv"
    write_summary_csv(summary, path)
    header, row = path.read_text().splitlines()
    assert header == ",".join(EnsembleSummary.SUMMARY_COLUMNS)
    cells = row.split(",")
    assert int(cells[0]) == 2 and float(cells[2]) == summary.sup_R_mean
