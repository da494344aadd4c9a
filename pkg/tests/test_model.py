import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp
from scipy import stats

from abkit.model import (
    Hypothesis,
    HypothesisProbs,
    ModelParams,
    PriorParams,
    SequentialDataset,
    TrialData,
    log_likelihood,
    log_prior_density,
    logistic,
    logit,
    params_from_probs,
    probs_from_params,
)

finite = st.floats(-8, 8, allow_nan=False)
unit = st.floats(1e-6, 1 - 1e-6)


def counts():
    return st.integers(1, 200).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n)))


def test_probs_at_origin():
    assert probs_from_params(ModelParams(0, 0)) == (0.5, 0.5)


def test_probs_shifted():
    p1, p2 = probs_from_params(ModelParams(0.5, 1.0))
    assert p1 == pytest.approx(0.5, abs=1e-15)
    assert p2 == pytest.approx(math.e / (1 + math.e), rel=1e-14)


def test_probs_against_high_precision_logistic():
    mp.dps = 30
    p1, p2 = probs_from_params(ModelParams(-1.0, 0.4))
    assert p1 == pytest.approx(float(1 / (1 + mp.exp(1.2))), abs=1e-12)
    assert p2 == pytest.approx(float(1 / (1 + mp.exp(0.8))), abs=1e-12)


def test_params_from_probs_examples():
    m = params_from_probs(0.5, 0.5)
    assert (m.beta, m.psi) == (0.0, 0.0)
    m = params_from_probs(0.5, 0.7310586)
    assert m.beta == pytest.approx(0.5, abs=1e-6)
    assert m.psi == pytest.approx(1.0, abs=1e-6)


def test_round_trip_random_grid():
    rng = np.random.default_rng(3)
    for p1, p2 in rng.uniform(1e-6, 1 - 1e-6, size=(1000, 2)):
        q1, q2 = probs_from_params(params_from_probs(p1, p2))
        assert q1 == pytest.approx(p1, abs=1e-10)
        assert q2 == pytest.approx(p2, abs=1e-10)


@given(finite, finite)
def test_logit_identities(beta, psi):
    p1, p2 = probs_from_params(ModelParams(beta, psi))
    if min(p1, p2, 1 - p1, 1 - p2) < 1e-12:
        return
    assert 0.5 * logit(p1) + 0.5 * logit(p2) == pytest.approx(beta, abs=1e-10)
    assert logit(p2) - logit(p1) == pytest.approx(psi, abs=1e-10)


@given(finite, finite)
def test_sign_of_psi_orders_probabilities(beta, psi):
    p1, p2 = probs_from_params(ModelParams(beta, psi))
    if psi > 0:
        assert p2 >= p1
    elif psi < 0:
        assert p2 <= p1
    else:
        assert p1 == p2


def test_logistic_is_stable_for_large_arguments():
    assert logistic(800.0) == 1.0
    assert logistic(-800.0) == pytest.approx(0.0, abs=1e-300)
    assert np.isfinite(log_likelihood(TrialData(3, 10, 7, 10), ModelParams(400.0, -300.0)))


def test_logit_rejects_boundary():
    with pytest.raises(ValueError):
        logit(0.0)
    with pytest.raises(ValueError):
        logit(1.0)


def test_log_likelihood_examples():
    assert log_likelihood(TrialData(1, 2, 1, 2), ModelParams(0, 0)) == pytest.approx(4 * math.log(0.5), rel=1e-14)
    assert log_likelihood(TrialData(0, 5, 5, 5), ModelParams(0, 0)) == pytest.approx(10 * math.log(0.5), rel=1e-14)


def test_log_likelihood_high_precision():
    mp.dps = 40
    beta, psi = mp.mpf("0.1"), mp.mpf("0.2")
    a1, a2 = beta - psi / 2, beta + psi / 2
    ref = 249 * a1 - 500 * mp.log(1 + mp.exp(a1)) + 269 * a2 - 500 * mp.log(1 + mp.exp(a2))
    got = log_likelihood(TrialData(249, 500, 269, 500), ModelParams(0.1, 0.2))
    assert got == pytest.approx(float(ref), rel=1e-13)


@given(counts(), counts(), finite, finite)
def test_log_likelihood_swap_invariance(g1, g2, beta, psi):
    d = TrialData(g1[0], g1[1], g2[0], g2[1])
    a = log_likelihood(d, ModelParams(beta, psi))
    b = log_likelihood(d.swapped(), ModelParams(beta, -psi))
    assert a == pytest.approx(b, rel=1e-12, abs=1e-9)


def test_log_prior_density_examples():
    prior = PriorParams()
    assert log_prior_density(ModelParams(0, 0), prior, "H1") == pytest.approx(-math.log(2 * math.pi), rel=1e-14)
    assert log_prior_density(ModelParams(0, -0.5), prior, "H+") == -math.inf
    expected = stats.norm.logpdf(0) + stats.norm.logpdf(1) + math.log(2)
    assert log_prior_density(ModelParams(0, 1), prior, "H+") == pytest.approx(expected, rel=1e-14)


@settings(max_examples=50)
@given(finite, st.floats(-2, 2), st.floats(0.1, 3), st.floats(-5, 5).filter(lambda x: x != 0))
def test_truncated_priors_reconstruct_h1(beta, mu, sigma, psi):
    prior = PriorParams(0.0, 1.0, mu, sigma)
    m = ModelParams(beta, psi)
    plus = math.exp(prior.log_mass_positive() + log_prior_density(m, prior, "H+"))
    minus = math.exp(prior.log_mass_negative() + log_prior_density(m, prior, "H-"))
    assert plus + minus == pytest.approx(math.exp(log_prior_density(m, prior, "H1")), rel=1e-10)


def test_trial_data_validation():
    with pytest.raises(ValueError):
        TrialData(5, 3, 1, 2)
    with pytest.raises(ValueError):
        TrialData(0, 0, 1, 2)
    with pytest.raises(ValueError):
        TrialData(-1, 3, 1, 2)


def test_prior_validation():
    with pytest.raises(ValueError):
        PriorParams(sigma_beta=0.0)
    with pytest.raises(ValueError):
        PriorParams(sigma_psi=-1.0)


def test_hypothesis_probs():
    with pytest.raises(ValueError):
        HypothesisProbs(0.5, 0.5, 0.5, 0.0)
    p = HypothesisProbs.from_mapping({"H0": 0.5, "H1": 0.5})
    assert p == HypothesisProbs.undirected()
    assert p["h1"] == 0.5
    assert Hypothesis.parse("hplus") is Hypothesis.HPLUS


def test_sequential_dataset_checks_cumulative_rows():
    ds = SequentialDataset([(0, 0, 1, 1), (1, 1, 1, 1), (1, 1, 1, 2)])
    assert len(ds) == 3
    assert not ds.is_analysable(0)
    assert ds.final() == TrialData(1, 1, 1, 2)
    with pytest.raises(ValueError, match="row 2"):
        SequentialDataset([(0, 1, 0, 0), (0, 1, 1, 1), (0, 1, 0, 2)])
    with pytest.raises(ValueError, match="row 1"):
        SequentialDataset([(0, 1, 0, 0), (1, 3, 0, 0)])


def test_from_observations():
    ds = SequentialDataset.from_observations([1, 2, 2, 1], [1, 0, 1, 1])
    assert ds.final() == TrialData(2, 2, 1, 2)
    assert [ds.n_total(i) for i in range(4)] == [1, 2, 3, 4]
