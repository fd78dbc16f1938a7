import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from advrisk.attack import attack_unconstrained
from advrisk.model import GaussianMixture, PerturbationBudget, iter_chunks, sample, sample_squares
from advrisk.numerics import NormKind, logistic_loss, normal_cdf
from advrisk.risk import (CSV_HEADER, Loss, RiskName, UnsupportedRisk, cf_excess_adv_risk, cf_new_adv_risk_bound,
                          cf_offsupport_flip, cf_standard_risk, cf_worst_case_adv_risk, check_reg_bounds, mc_many,
                          mc_risk, per_sample, reports_to_csv)

LINF = NormKind.LINF
PHI_NEG_HALF = 0.308538
EXCESS_EXAMPLE = 0.149883
TWO_PHI_TWO_MINUS_ONE = 0.954500


def box(eps):
    return PerturbationBudget(LINF, eps)


def test_standard_risk_examples():
    w_star = np.array([1.0, 1.0])
    assert cf_standard_risk(w_star, GaussianMixture(w_star, 1.0)).value == pytest.approx(0.078650, abs=1e-6)
    d = 100
    w_star = np.full(d, 1 / math.sqrt(d / 2))
    top = np.where(np.arange(d) < d // 2, w_star, 0.0)
    assert cf_standard_risk(top, GaussianMixture(w_star, 1.0)).value == pytest.approx(0.158655, abs=1e-6)
    assert cf_standard_risk([0.0, 1.0], GaussianMixture([1.0, 0.0], 2.0)).value == 0.5


def test_worst_case_examples():
    model = GaussianMixture([1.0, 0.0], 1.0)
    w = model.w_star
    assert cf_worst_case_adv_risk(w, model, box(0.0)).value == cf_standard_risk(w, model).value
    assert cf_worst_case_adv_risk(w, model, box(0.5)).value == pytest.approx(PHI_NEG_HALF, abs=1e-6)
    assert cf_excess_adv_risk(w, model, box(0.5)).value == pytest.approx(EXCESS_EXAMPLE, abs=1e-6)
    assert cf_excess_adv_risk(w, model, box(0.0)).value == 0.0


def test_frozen_worst_case_values_against_monte_carlo():
    model = GaussianMixture([1.0, 0.0], 1.0)
    data = iter_chunks(model, 2_000_000, seed=21)
    worst, gadv = mc_many([("worst_case", model.w_star, None, box(0.5), Loss.ZERO_ONE),
                           ("gadv", model.w_star, None, box(0.5), Loss.ZERO_ONE)], data)
    assert abs(worst.value - PHI_NEG_HALF) <= 3 * worst.std_err
    assert abs(gadv.value - EXCESS_EXAMPLE) <= 3 * gadv.std_err


def test_orthogonal_classifier_excess():
    model = GaussianMixture([1.0, 0.0, 0.0], 1.0)
    w = np.array([0.0, 1.0, -2.0])
    eps = 0.3
    expected = normal_cdf(eps * 3 / math.sqrt(5)) - 0.5
    assert cf_excess_adv_risk(w, model, box(eps)).value == pytest.approx(expected, abs=1e-15)
    mc = mc_risk("gadv", w, None, sample(model, 400_000, 3), box(eps))
    assert abs(mc.value - expected) <= 4 * mc.std_err


def test_masked_model_uses_support_norm():
    w_star = np.array([1.0, 0.0, 0.0])
    model = GaussianMixture(w_star, 1.0, [True, False, False])
    w = np.array([1.0, 5.0, -5.0])
    assert cf_standard_risk(w, model).value == pytest.approx(normal_cdf(-1.0))
    assert cf_worst_case_adv_risk(w, model, box(0.1)).value == pytest.approx(normal_cdf(1.1 - 1.0))


def test_closed_forms_refuse_degenerate_inputs():
    with pytest.raises(ValueError):
        cf_standard_risk([0.0, 1.0], GaussianMixture([1.0, 0.0], 1.0, [True, False]))
    with pytest.raises(ValueError):
        cf_standard_risk([1.0, 0.0], GaussianMixture([1.0, 0.0], 0.0))
    with pytest.raises(ValueError, match="dimension"):
        cf_standard_risk([1.0], GaussianMixture([1.0, 0.0], 1.0))
    with pytest.raises(UnsupportedRisk):
        cf_new_adv_risk_bound([1.0, 0.0], GaussianMixture([1.0, 0.0], 1.0), PerturbationBudget(NormKind.L2, 0.1))


def noncalibration_config(d=1000, k=4):
    norm_sq = 2 + 2 * math.sqrt(2)
    w_star = np.zeros(d)
    w_star[:k] = math.sqrt(norm_sq / k)
    w = w_star.copy()
    w[k:] = np.where(np.arange(d - k) % 2 == 0, 1.0, -1.0) / math.sqrt(d - k)
    return GaussianMixture(w_star, 1.0), w, box(2 * norm_sq / math.sqrt(d - k))


def test_offsupport_flip_closed_form():
    model, w, budget = noncalibration_config()
    alpha = w[4:]
    ratio = model.w_star @ model.w_star / math.sqrt(alpha @ alpha + model.w_star @ model.w_star)
    assert ratio == pytest.approx(2.0, abs=1e-12)
    assert cf_offsupport_flip(w, model, budget).value == pytest.approx(TWO_PHI_TWO_MINUS_ONE, abs=1e-6)
    assert abs(TWO_PHI_TWO_MINUS_ONE - (2 * normal_cdf(2.0) - 1)) < 5e-7


def test_new_bound():
    model = GaussianMixture([1.0, -0.5], 1.0)
    assert cf_new_adv_risk_bound(model.w_star, model, box(0.7)).value == 0.0
    model, w, budget = noncalibration_config(d=200)
    bound = cf_new_adv_risk_bound(w, model, budget)
    assert bound.is_bound
    radv = mc_risk("radv", w, model.w_star, iter_chunks(model, 100_000, 8), budget)
    assert radv.value >= 0.95
    assert bound.value >= radv.value - 3 * radv.std_err


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bound_dominates_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 7))
    model = GaussianMixture(rng.normal(size=d), float(rng.uniform(0.5, 2)))
    w = model.w_star + rng.normal(scale=0.5, size=d)
    budget = box(float(rng.uniform(0.0, 0.5)))
    radv = mc_risk("radv", w, model.w_star, sample(model, 20_000, seed), budget)
    assert cf_new_adv_risk_bound(w, model, budget).value >= radv.value - 3 * radv.std_err


def test_radv_of_bayes_rule_is_exactly_zero():
    model = GaussianMixture([0.4, -1.0, 2.0], 1.5)
    for eps in (0.0, 0.3, 5.0):
        r = mc_risk("radv", model.w_star, model.w_star, sample(model, 50_000, 1), box(eps))
        assert r.value == 0.0 and r.std_err == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 2.0))
def test_pointwise_identity_excess_plus_standard(seed, eps):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    model = GaussianMixture(rng.normal(size=d), 1.0)
    data = sample(model, 500, seed)
    w = rng.normal(size=d)
    for kind in (NormKind.LINF, NormKind.L2):
        b = PerturbationBudget(kind, eps)
        std = per_sample("standard", w, None, data.X, data.y, b)
        worst = per_sample("worst_case", w, None, data.X, data.y, b)
        gadv = per_sample("gadv", w, None, data.X, data.y, b)
        assert np.array_equal(gadv + std, worst)


def test_logistic_gadv_matches_attack_route():
    rng = np.random.default_rng(4)
    model = GaussianMixture(rng.normal(size=4), 1.0)
    data = sample(model, 300, 0)
    w = rng.normal(size=4)
    for kind in (NormKind.LINF, NormKind.L2):
        b = PerturbationBudget(kind, 0.3)
        fast = per_sample("gadv", w, None, data.X, data.y, b, Loss.LOGISTIC)
        slow = []
        for x, y in zip(data.X, data.y):
            a = attack_unconstrained(w, x, int(y), b)
            slow.append(logistic_loss(y * a.achieved_score) - logistic_loss(y * (w @ x)))
        assert np.allclose(fast, slow, rtol=0, atol=1e-12)


def test_hadv_uses_base_labels():
    model = GaussianMixture([1.0, 0.0], 1.0)
    data = sample(model, 10_000, 2)
    g = model.w_star
    b = box(0.2)
    h = mc_risk("hadv", g, g, data, b)
    exact = np.mean(np.abs(data.X[:, 0]) <= 0.2)
    assert h.value == pytest.approx(exact, abs=1e-12)


def test_mc_risk_errors():
    data = sample_squares(100, 0)
    with pytest.raises(UnsupportedRisk):
        mc_risk("radv", [1.0, 0.0], [1.0, 0.0], data, box(0.1), Loss.LOGISTIC)
    with pytest.raises(UnsupportedRisk):
        mc_risk("radv", [1.0, 0.0], [1.0, 0.0], data, PerturbationBudget(NormKind.L2, 0.1))
    with pytest.raises(ValueError, match="needs a base classifier"):
        mc_risk("hadv", [1.0, 0.0], None, data, box(0.1))
    with pytest.raises(ValueError, match="dimension mismatch"):
        mc_risk("standard", [1.0, 0.0, 0.0], None, data, box(0.1))
    with pytest.raises(ValueError):
        mc_risk("bogus", [1.0, 0.0], None, data, box(0.1))


def test_mc_accepts_chunk_streams_and_matches_dataset():
    model = GaussianMixture([1.0, 0.5], 1.0)
    a = mc_risk("worst_case", [1.0, 1.0], None, sample(model, 10_000, 6), box(0.2))
    b = mc_risk("worst_case", [1.0, 1.0], None, iter_chunks(model, 10_000, 6), box(0.2))
    assert a.value == b.value and a.std_err == pytest.approx(b.std_err, rel=1e-9)
    assert a.risk_name is RiskName.WORST_CASE_01 and a.kind == "MonteCarlo" and a.n == 10_000


def test_reg_bounds_zero_eps_and_zero_lambda():
    model = GaussianMixture([1.0, -1.0], 1.0)
    data = sample(model, 20_000, 1)
    rep = check_reg_bounds([0.5, -2.0], model.w_star, data, box(0.0), lam=1.0)
    assert rep.gadv.value == 0.0 and rep.holds
    rep = check_reg_bounds([0.5, -2.0], model.w_star, data, box(0.2), lam=0.0)
    assert rep.holds
    weighted = [c for c in rep.checks if c.name.startswith("R + lam")]
    assert all(c.lhs == c.rhs == rep.risk.value for c in weighted)


def test_reg_bounds_at_bayes_rule():
    w_star = np.array([2.0, 0.0])
    model = GaussianMixture(w_star, 1.0)
    rep = check_reg_bounds(w_star, w_star, iter_chunks(model, 1_000_000, 2), box(0.1), lam=1.0)
    assert rep.holds
    assert all(c.slack >= -3 * c.std_err for c in rep.checks)
    assert "slack" in rep.checks[0].describe()
    with pytest.raises(ValueError):
        check_reg_bounds(w_star, w_star, sample(model, 10, 0), box(0.1), lam=-1.0)


def test_csv_output():
    model = GaussianMixture([1.0, 0.0], 1.0)
    reports = [cf_standard_risk([1.0, 1.0], model),
               mc_risk("standard", [1.0, 1.0], None, sample(model, 100, 5), box(0.0)),
               cf_new_adv_risk_bound([1.0, 1.0], model, box(0.1))]
    lines = reports_to_csv(reports).splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1].startswith("Standard01,ClosedForm,")
    assert lines[2].startswith("Standard01,MonteCarlo,") and lines[2].endswith(",5")
    assert lines[3].startswith("RAdv01Bound,Bound,")
