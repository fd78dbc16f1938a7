"""Reduced-size runs of the experiment drivers; full-size runs live in test_acceptance."""
import numpy as np

from advrisk import experiments as ex


def test_cell_seed_is_stable_and_distinct():
    assert ex.cell_seed(0, 1) == ex.cell_seed(0, 1)
    seeds = {ex.cell_seed(0, i) for i in range(100)}
    assert len(seeds) == 100
    assert ex.cell_seed(1, 5) != ex.cell_seed(0, 5)


def test_assertion_lines():
    a = ex.at_most("x", 0.5, 1.0)
    assert a.passed and a.line().startswith("[PASS] x")
    b = ex.within("y", 1.0, 0.0, 0.1)
    assert not b.passed and "[FAIL]" in b.line()


def test_noncalibration_setup_matches_construction():
    model, w, eps = ex.noncalibration_setup(d=100, k=4)
    assert np.allclose(w[:4], model.w_star[:4])
    assert np.isclose(model.w_star @ model.w_star, 2 + 2 * np.sqrt(2))
    assert np.isclose(np.abs(w[4:]).sum(), np.sqrt(96))
    assert np.isclose(eps, 2 * (2 + 2 * np.sqrt(2)) / np.sqrt(96))


def test_noncalibration_small():
    rep = ex.check_noncalibration(d=200, n=50_000, seed=1)
    assert rep.passed, rep.summary()


def test_fig_toy_small_grid_rows():
    rep = ex.fig_toy([0.5, 1.5], [0.1], n_train=5000, n_eval=20_000, iters=200)
    assert [r[:2] for r in rep.rows] == [(0.5, 0.1), (1.5, 0.1)]
    assert all(0.28 <= r[2] <= 0.32 for r in rep.rows)


def test_regularization_zero_eps_is_vacuous():
    rep = ex.check_regularization(count=3, n=5000, eps=0.0)
    assert rep.passed
    assert all(r[3] == 0.0 for r in rep.rows)


def test_lambda_sweep_small():
    rep = ex.check_lambda_sweep(lambda_grid=(0.0, 4.0), n=5000, n_eval=50_000, iters=300)
    assert rep.passed, rep.summary()
    assert rep.rows[-1][3] <= rep.rows[0][3]
