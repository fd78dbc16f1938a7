import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advrisk.model import GaussianMixture, PerturbationBudget, SquaresDistribution2D, iter_chunks, sample
from advrisk.numerics import NormKind
from advrisk.risk import mc_risk
from advrisk.train import (GaussianInit, TrainConfig, TrainingDiverged, check_gradient, gradient, objective,
                           restricted_class_check, train, train_standard, verify_lowdim_invariance,
                           write_trace_csv)

LINF = NormKind.LINF


def box(eps):
    return PerturbationBudget(LINF, eps)


@pytest.fixture(scope="module")
def small_mixture():
    return sample(GaussianMixture([1.0, -0.5, 0.3, 0.0, 0.8], 1.0), 100, 0)


def away_from_kink(rng, d, h=1e-5):
    w = rng.normal(size=d)
    return np.where(np.abs(w) < 0.05, np.sign(w + 1e-300) * 0.05, w)


@pytest.mark.parametrize("kind", [NormKind.LINF, NormKind.L2])
def test_gradient_matches_finite_differences(small_mixture, kind):
    rng = np.random.default_rng(1)
    for _ in range(10):
        cfg = TrainConfig(lam=float(rng.uniform(0, 5)), budget=PerturbationBudget(kind, float(rng.uniform(0.05, 1))))
        assert check_gradient(small_mixture, cfg, away_from_kink(rng, 5)) <= 1e-5


def test_standard_gradient_is_tighter(small_mixture):
    rng = np.random.default_rng(2)
    for _ in range(10):
        cfg = TrainConfig(lam=0.0, budget=box(0.3))
        assert check_gradient(small_mixture, cfg, rng.normal(size=5)) <= 1e-6


def test_zero_eps_adds_nothing(small_mixture):
    yx = small_mixture.y[:, None] * small_mixture.X
    w = np.random.default_rng(3).normal(size=5)
    base = gradient(yx, w, 0.0, box(0.0))
    for lam in (0.5, 1.0, 7.0):
        assert np.array_equal(gradient(yx, w, lam, box(0.0)), base)
        assert objective(yx, w, lam, box(0.0)) == objective(yx, w, 0.0, box(0.0))


def test_kink_proximity_is_refused(small_mixture):
    with pytest.raises(ValueError, match="kink"):
        check_gradient(small_mixture, TrainConfig(lam=1.0, budget=box(0.1)), [1.0, 0.0, 1.0, 1.0, 1.0])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0))
def test_lambda_zero_is_bit_identical_to_standard_trainer(seed, eps):
    data = sample(GaussianMixture([0.7, -0.2, 1.1], 1.0), 200, seed)
    init = GaussianInit(0.3, seed)
    a = train(data, TrainConfig(lam=0.0, budget=box(eps), iters=50, init=init, record_trace=True))
    b = train_standard(data, iters=50, init=init, record_trace=True)
    assert np.array_equal(a.trace, b.trace)
    assert np.array_equal(a.objective_history, b.objective_history)
    assert np.array_equal(a.w_final.w, b.w_final.w)


def test_training_is_reproducible_and_never_worse_than_init():
    data = sample(SquaresDistribution2D(), 5000, 1)
    cfg = TrainConfig(lam=2.0, budget=box(0.8), iters=300)
    a, b = train(data, cfg), train(data, cfg)
    assert np.array_equal(a.w_final.w, b.w_final.w)
    assert np.array_equal(a.objective_history, b.objective_history)
    assert len(a.objective_history) == cfg.iters + 1
    assert a.objective_history[a.best_iter] <= a.objective_history[0]
    assert a.objective_history[a.best_iter] == a.objective_history.min()


def test_squares_small_eps_recovers_bayes():
    data = sample(SquaresDistribution2D(), 100_000, 3)
    res = train(data, TrainConfig(lam=1.0, budget=box(0.5)))
    risk = mc_risk("standard", res.w_final, None, iter_chunks(SquaresDistribution2D(), 1_000_000, 4), box(0.0))
    assert abs(risk.value - 0.30) <= 0.01


def test_squares_large_eps_trend_in_lambda():
    data = sample(SquaresDistribution2D(), 20_000, 5)
    held = sample(SquaresDistribution2D(), 200_000, 6)
    risks = {}
    for lam in (0.1, 10.0):
        res = train(data, TrainConfig(lam=lam, budget=box(1.5), iters=500))
        risks[lam] = mc_risk("standard", res.w_final, None, held, box(0.0))
    lo, hi = risks[0.1], risks[10.0]
    assert hi.value > 0.31
    assert hi.value - lo.value > 3 * math.hypot(lo.std_err, hi.std_err)


def test_divergence_names_the_iteration():
    data = sample(GaussianMixture([1.0, 1.0], 1.0), 100, 0)
    with pytest.raises(TrainingDiverged) as info:
        train(data, TrainConfig(lam=50.0, budget=box(2.0), lr=1e306, iters=50, init=GaussianInit(1.0)))
    assert info.value.iteration >= 1
    assert "iteration" in str(info.value)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(lam=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(lr=0.0)
    with pytest.raises(ValueError):
        TrainConfig(iters=0)
    with pytest.raises(ValueError):
        GaussianInit(0.0)


def test_trace_csv(tmp_path):
    data = sample(GaussianMixture([1.0, 1.0], 1.0), 50, 0)
    res = train(data, TrainConfig(iters=3, record_trace=True))
    path = tmp_path / "trace.csv"
    write_trace_csv(res, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "iter,objective,w0,w1"
    assert len(lines) == 5 and lines[1].startswith("0,")
    with pytest.raises(ValueError):
        write_trace_csv(train(data, TrainConfig(iters=3)), path)


def lowdim(d, k, r):
    w_star = np.zeros(d)
    w_star[:k] = r / math.sqrt(k)
    return GaussianMixture(w_star, 1.0, np.arange(d) < k)


def test_lowdim_invariance_exact():
    d, k = 60, 4
    model = lowdim(d, k, 2.5)
    data = sample(model, 3000, 1)
    cfg = TrainConfig(iters=200, init=GaussianInit(1 / math.sqrt(d - k), 2))
    rep = verify_lowdim_invariance(model, cfg, data, iter_chunks(model, 50_000, 3))
    assert rep.max_offsupport_drift == 0.0
    assert rep.eps == pytest.approx(2 * 2.5**2 / math.sqrt(d - k))
    assert rep.offsupport_l1 > 0


def test_lowdim_zero_init_keeps_tail_at_zero():
    d, k = 60, 4
    model = lowdim(d, k, 2.5)
    data = sample(model, 3000, 1)
    rep = verify_lowdim_invariance(model, TrainConfig(iters=200), data, iter_chunks(model, 50_000, 3))
    assert rep.max_offsupport_drift == 0.0 and rep.offsupport_l1 == 0.0
    assert np.all(rep.w_final[k:] == 0.0)
    # a classifier parallel to w* with a zero tail has nothing to exploit
    exact = mc_risk("radv", 3.0 * model.w_star, model.w_star, iter_chunks(model, 50_000, 3), box(rep.eps))
    assert exact.value == 0.0


def test_lowdim_preconditions():
    model = GaussianMixture([1.0, 0.0], 1.0)
    data = sample(model, 100, 0)
    with pytest.raises(ValueError, match="mask"):
        verify_lowdim_invariance(model, TrainConfig(), data, data)
    masked = lowdim(4, 2, 1.0)
    with pytest.raises(ValueError):
        verify_lowdim_invariance(masked, TrainConfig(lam=1.0), sample(masked, 100, 0), data)


def test_restricted_class():
    rep = restricted_class_check(100, 200_000, seed=0, c_grid=[0.0, 1.0, 3.75, 5.0])
    assert rep.gap == pytest.approx(0.080005, abs=1e-6)
    assert rep.max_shift_error <= 1e-12 and rep.max_bayes_shift == 0.0
    assert rep.flip_prob[0] == 0.0
    expected = 0.5 * math.erfc(-(5 / math.sqrt(2) - 1) / math.sqrt(2)) - 0.5 * math.erfc((5 / math.sqrt(2) + 1) / math.sqrt(2))
    assert abs(rep.prob_at(5.0) - expected) <= 4 * rep.flip_se[-1]
    assert rep.c_star is not None and rep.c_star <= 5.0
    assert np.all(rep.agree_flip_prob <= rep.flip_prob)
    with pytest.raises(ValueError):
        restricted_class_check(7, 10, 0)
