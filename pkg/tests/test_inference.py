import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abkit.datasets import load_seqdata
from abkit.inference import (
    BF_TYPES,
    ab_test,
    log_bf_of_type,
    posterior_probs,
    robustness_grid,
    sequential_analysis,
)
from abkit.model import Hypothesis, HypothesisProbs, PriorParams, SequentialDataset, TrialData

from conftest import INFORMED, MARKETING, SYMMETRIC, TRAINING

H = Hypothesis


@pytest.fixture(scope="module")
def marketing():
    return ab_test(MARKETING, seed=1)


def test_marketing(marketing):
    assert math.exp(marketing.log_bf10) == pytest.approx(0.259709, rel=1e-3)
    assert math.exp(marketing.log_bf_plus0) == pytest.approx(0.4866008, rel=0.02)
    assert math.exp(marketing.log_bf_minus0) == pytest.approx(0.02796485, rel=0.05)
    post = marketing.posterior_probs
    assert post.p_hplus == pytest.approx(0.1935, abs=0.005)
    assert post.p_hminus == pytest.approx(0.0111, abs=0.005)
    assert post.p_h0 == pytest.approx(0.7954, abs=0.005)


def test_training_informed():
    res = ab_test(TRAINING, INFORMED, seed=1)
    assert res.bf("BF10") == pytest.approx(0.1406443, rel=1e-3)
    assert res.bf("BF+0") == pytest.approx(0.13823, rel=0.05)
    assert res.bf("BF-0") == pytest.approx(0.4920187, rel=0.05)
    post = res.posterior_probs
    assert (post.p_hplus, post.p_hminus, post.p_h0) == pytest.approx((0.0526, 0.1871, 0.7604), abs=0.005)


def test_training_default():
    res = ab_test(TRAINING, seed=1)
    assert res.bf("BF10") == pytest.approx(0.2767214, rel=1e-3)
    assert res.bf("BF+0") == pytest.approx(0.4890489, rel=0.05)
    assert res.bf("BF-0") == pytest.approx(0.05778357, rel=0.05)
    post = res.posterior_probs
    assert (post.p_hplus, post.p_hminus, post.p_h0) == pytest.approx((0.192, 0.0227, 0.7853), abs=0.005)


def test_symmetric_data():
    res = ab_test(SYMMETRIC, seed=3)
    se = math.hypot(res.mc_se[H.HPLUS], res.mc_se[H.HMINUS])
    assert abs(res.log_bf_plus0 - res.log_bf_minus0) <= 3 * se
    assert res.posterior_probs.p_hplus == pytest.approx(res.posterior_probs.p_hminus, abs=3 * se)


def test_bf_identities(marketing):
    for j in H:
        for k in H:
            assert marketing.log_bf(j, k) == pytest.approx(marketing.log_bf(j, H.H0) - marketing.log_bf(k, H.H0))
    for t in BF_TYPES:
        rev = "BF" + t[3] + t[2]
        assert marketing.bf(t) * marketing.bf(rev) == pytest.approx(1.0, rel=1e-12)


def test_unknown_bftype():
    with pytest.raises(ValueError):
        log_bf_of_type({}, "BF+-")


@settings(max_examples=50)
@given(st.lists(st.floats(-50, 50), min_size=4, max_size=4), st.floats(-500, 500))
def test_posteriors_depend_only_on_ratios(logs, shift):
    lm = dict(zip(H, logs))
    shifted = {h: v + shift for h, v in lm.items()}
    for probs in (HypothesisProbs.default(), HypothesisProbs(0.25, 0.25, 0.25, 0.25)):
        a, b = posterior_probs(lm, probs), posterior_probs(shifted, probs)
        assert np.allclose(list(a.as_dict().values()), list(b.as_dict().values()), atol=1e-12)
        assert math.fsum(a.as_dict().values()) == pytest.approx(1.0, abs=1e-15)


def test_table_presets(marketing):
    lm = marketing.log_marginal
    default = posterior_probs(lm, HypothesisProbs.default())
    assert default.p_h1 == 0.0
    direction = posterior_probs(lm, HypothesisProbs.direction())
    assert direction.p_h0 == 0.0 and direction.p_h1 == 0.0
    assert direction.p_hplus + direction.p_hminus == pytest.approx(1.0)
    odds = direction.p_hplus / direction.p_hminus
    assert math.log(odds) == pytest.approx(lm[H.HPLUS] - lm[H.HMINUS], rel=1e-12)
    undirected = posterior_probs(lm, HypothesisProbs.undirected())
    assert undirected.p_h1 / undirected.p_h0 == pytest.approx(math.exp(marketing.log_bf10), rel=1e-12)
    positive = posterior_probs(lm, HypothesisProbs.positive())
    assert positive.p_hminus == 0.0 and positive.p_h1 == 0.0


def test_swap_symmetry_of_bayes_factors():
    prior = PriorParams(0.0, 1.0, 0.3, 0.6)
    mirrored = PriorParams(0.0, 1.0, -0.3, 0.6)
    a = ab_test(TrialData(7, 20, 12, 25), prior, samples=50_000, seed=4)
    b = ab_test(TrialData(12, 25, 7, 20), mirrored, samples=50_000, seed=4)
    assert a.log_bf10 == pytest.approx(b.log_bf10, abs=1e-9)
    se = math.hypot(a.mc_se[H.HPLUS], b.mc_se[H.HMINUS])
    assert abs(a.log_bf_plus0 - b.log_bf_minus0) <= 3 * se


def test_seed_determinism():
    a = ab_test(TRAINING, samples=10_000, seed=99)
    b = ab_test(TRAINING, samples=10_000, seed=99)
    assert a.to_dict() == b.to_dict()
    assert ab_test(TRAINING, samples=10_000, seed=100).log_marginal != a.log_marginal


def test_fresh_seed_is_echoed():
    res = ab_test(SYMMETRIC, samples=2000)
    again = ab_test(SYMMETRIC, samples=2000, seed=res.seed)
    assert res.log_marginal == again.log_marginal


def test_to_dict_layout(marketing):
    d = marketing.to_dict()
    assert set(d) == {"data", "bf", "log_bf", "log_marginal", "mc_se", "prior_probs", "posterior_probs", "settings"}
    assert d["bf"]["BF10"] == pytest.approx(math.exp(d["log_bf"]["BF10"]))
    assert d["settings"]["seed"] == 1


def test_sequential_thin_equal_to_length():
    ds = SequentialDataset([(0, 1, 0, 0), (0, 1, 1, 1), (1, 2, 1, 1), (1, 2, 2, 2)])
    trace = sequential_analysis(ds, thin=4, samples=2000, seed=5)
    assert len(trace) == 1
    full = ab_test(ds.final(), samples=2000, seed=5)
    assert trace.posterior_probs[0] == full.posterior_probs


def test_sequential_skips_rows_with_an_empty_group():
    ds = SequentialDataset([(0, 1, 0, 0), (0, 1, 1, 1), (1, 2, 1, 1)])
    trace = sequential_analysis(ds, samples=2000, seed=5)
    assert trace.indices == [2, 3]


def test_sequential_thinning_is_consistent_at_shared_rows():
    ds = load_seqdata()
    sub = SequentialDataset(ds.counts[:40])
    a = sequential_analysis(sub, thin=10, samples=2000, seed=8)
    b = sequential_analysis(sub, thin=20, samples=2000, seed=8)
    shared = dict(zip(a.indices, a.posterior_probs))
    for i, p in zip(b.indices, b.posterior_probs):
        assert shared[i] == p


def test_sequential_training_informed_final_row():
    trace = sequential_analysis(load_seqdata(), INFORMED, thin=250, seed=1)
    final = trace.posterior_probs[-1]
    assert (final.p_h0, final.p_hplus, final.p_hminus) == pytest.approx((0.7604, 0.0526, 0.1871), abs=0.005)
    assert trace.indices[-1] == 1000


def test_sequential_rejects_bad_thin():
    with pytest.raises(ValueError):
        sequential_analysis(load_seqdata(), thin=0)


def test_robustness_reciprocal_and_single_cell():
    mu, sigma = [0.0, 0.2], [0.5, 1.0]
    g_plus = robustness_grid(MARKETING, "BF+0", mu, sigma, samples=5000, seed=2)
    g_zero = robustness_grid(MARKETING, "BF0+", mu, sigma, samples=5000, seed=2)
    assert np.allclose(g_plus.bf * g_zero.bf, 1.0, rtol=1e-12)
    one = robustness_grid(MARKETING, "BF0+", [0.0], [1.0], samples=5000, seed=2)
    assert one.bf[0, 0] == pytest.approx(ab_test(MARKETING, samples=5000, seed=2).bf("BF0+"), rel=1e-14)


def test_robustness_row_major_and_order_independent():
    g = robustness_grid(SYMMETRIC, "BF10", [0.0, 0.5], [0.5, 1.0, 2.0], samples=2000, seed=1)
    rows = list(g.rows())
    assert [(r[0], r[1]) for r in rows] == [(0.0, 0.5), (0.0, 1.0), (0.0, 2.0), (0.5, 0.5), (0.5, 1.0), (0.5, 2.0)]
    rev = robustness_grid(SYMMETRIC, "BF+0", [0.5, 0.0], [2.0, 1.0, 0.5], samples=2000, seed=1)
    fwd = robustness_grid(SYMMETRIC, "BF+0", [0.0, 0.5], [0.5, 1.0, 2.0], samples=2000, seed=1)
    assert np.array_equal(rev.bf[::-1, ::-1], fwd.bf)


def test_robustness_rejects_bad_sigma():
    with pytest.raises(ValueError):
        robustness_grid(SYMMETRIC, "BF10", [0.0], [0.0, 1.0])
