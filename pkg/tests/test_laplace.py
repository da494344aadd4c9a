import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from abkit.laplace import (
    find_mode,
    inverse_2x2,
    kernel_gradient,
    kernel_hessian,
    log_kernel,
    log_marginal_h0,
    log_marginal_h1,
)
from abkit.model import Hypothesis, PriorParams, TrialData
from abkit.oracle import QuadratureSpec, quadrature_log_marginal

from conftest import INFORMED, MARKETING, SMALL, SYMMETRIC, TRAINING

HYPS = list(Hypothesis)


def _fd_gradient(h, data, prior, x, step=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (log_kernel(h, data, prior, x + e) - log_kernel(h, data, prior, x - e)) / (2 * step)
    return g


def _fd_hessian(h, data, prior, x, step=1e-5):
    k = x.size
    H = np.zeros((k, k))
    for i in range(k):
        e = np.zeros_like(x)
        e[i] = step
        H[:, i] = (kernel_gradient(h, data, prior, x + e) - kernel_gradient(h, data, prior, x - e)) / (2 * step)
    return H


def _random_cases(seed, count=100):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n1, n2 = rng.integers(1, 300, size=2)
        data = TrialData(int(rng.integers(0, n1 + 1)), int(n1), int(rng.integers(0, n2 + 1)), int(n2))
        prior = PriorParams(rng.normal(0, 1), rng.uniform(0.3, 2), rng.normal(0, 1), rng.uniform(0.2, 2))
        yield data, prior, rng.uniform(-2, 2, size=2)


def _close(a, b, rel):
    # relative agreement with an absolute floor scaled to the magnitude of the problem
    scale = max(1.0, float(np.max(np.abs(b))))
    return np.all(np.abs(a - b) <= rel * scale)


def test_h0_kernel_example():
    assert log_kernel("H0", SYMMETRIC, PriorParams(), [0.0]) == pytest.approx(-14.781883, abs=1e-6)


def test_h0_gradient_and_hessian_examples():
    assert kernel_gradient("H0", SYMMETRIC, PriorParams(), [0.0])[0] == pytest.approx(0.0, abs=1e-14)
    assert kernel_hessian("H0", SYMMETRIC, PriorParams(), [0.0])[0, 0] == pytest.approx(-6.0, rel=1e-14)


def test_h1_off_diagonal_vanishes_for_balanced_groups():
    H = kernel_hessian("H1", TrialData(3, 10, 8, 10), PriorParams(), [0.7, 0.0])
    assert H[0, 1] == pytest.approx(0.0, abs=1e-14)
    assert H[0, 1] == H[1, 0]


@pytest.mark.parametrize("h", HYPS, ids=lambda h: h.name)
def test_gradient_matches_finite_differences(h):
    for data, prior, x in _random_cases(11):
        x = x[:1] if h is Hypothesis.H0 else x
        assert _close(kernel_gradient(h, data, prior, x), _fd_gradient(h, data, prior, x), 1e-5)


@pytest.mark.parametrize("h", HYPS, ids=lambda h: h.name)
def test_hessian_matches_finite_differences(h):
    for data, prior, x in _random_cases(12):
        x = x[:1] if h is Hypothesis.H0 else x
        H = kernel_hessian(h, data, prior, x)
        assert np.allclose(H, H.T)
        assert _close(H, _fd_hessian(h, data, prior, x), 1e-4)


def _literal_hplus(data, prior, beta, xi):
    """First and second derivatives of the H+ kernel written out term by term."""
    y1, n1, y2, n2 = data.y1, data.n1, data.y2, data.n2
    ex = math.exp(xi)
    a1, a2 = beta - ex / 2, beta + ex / 2
    e1, e2 = math.exp(a1), math.exp(a2)
    gb = (y1 - (n1 - y1) * e1) / (1 + e1) + (y2 - (n2 - y2) * e2) / (1 + e2) - (beta - prior.mu_beta) / prior.sigma_beta**2
    inner = ((n1 - y1) * e1 - y1) / (1 + e1) + (y2 - (n2 - y2) * e2) / (1 + e2)
    gx = ex / 2 * inner - ex * (ex - prior.mu_psi) / prior.sigma_psi**2 + 1
    w1, w2 = n1 * e1 / (1 + e1) ** 2, n2 * e2 / (1 + e2) ** 2
    hbb = -w1 - w2 - 1 / prior.sigma_beta**2
    hbx = ex / 2 * (w1 - w2)
    hxx = ex / 2 * (inner - 0.5 * ex * w1 - 0.5 * ex * w2) - ex * (2 * ex - prior.mu_psi) / prior.sigma_psi**2
    return np.array([gb, gx]), np.array([[hbb, hbx], [hbx, hxx]])


def test_hplus_derivatives_match_written_out_formulas():
    for data, prior, (b, x) in _random_cases(13, 50):
        g, H = _literal_hplus(data, prior, b, x)
        assert _close(kernel_gradient("H+", data, prior, [b, x]), g, 1e-10)
        assert _close(kernel_hessian("H+", data, prior, [b, x]), H, 1e-10)


def test_inverse_2x2():
    a = np.array([[-4.0, 1.0], [1.0, -3.0]])
    inv, det = inverse_2x2(a)
    assert det == pytest.approx(11.0)
    assert np.allclose(inv @ a, np.eye(2))


def test_mode_h0_symmetric():
    fit = find_mode("H0", SYMMETRIC, PriorParams())
    assert fit.mode[0] == pytest.approx(0.0, abs=1e-12)


def test_mode_h1_symmetric():
    fit = find_mode("H1", SYMMETRIC, PriorParams())
    assert np.allclose(fit.mode, 0.0, atol=1e-12)


def test_mode_h1_is_a_local_maximum_on_a_fine_grid():
    fit = find_mode("H1", TRAINING, PriorParams())
    offs = np.arange(-5, 6) * 1e-4
    B, P = np.meshgrid(fit.mode[0] + offs, fit.mode[1] + offs, indexing="ij")
    vals = log_kernel("H1", TRAINING, PriorParams(), np.stack([B, P], axis=-1))
    assert np.unravel_index(np.argmax(vals), vals.shape) == (5, 5)
    assert np.max(np.abs(kernel_gradient("H1", TRAINING, PriorParams(), fit.mode))) < 1e-8


@pytest.mark.parametrize("data", [TrialData(0, 5, 0, 5), TrialData(5, 5, 0, 5), TrialData(0, 1, 1, 1), TrialData(0, 3, 0, 1)])
@pytest.mark.parametrize("h", HYPS, ids=lambda h: h.name)
def test_mode_finding_survives_boundary_counts(data, h):
    fit = find_mode(h, data, PriorParams())
    assert np.all(np.isfinite(fit.mode))
    assert np.all(np.linalg.eigvalsh(fit.neg_hessian_inverse) > 0)


def test_log_marginal_h0_against_one_dimensional_quadrature():
    prior = PriorParams()

    def f(b):
        return math.exp(log_kernel("H0", SYMMETRIC, prior, [b]) + 14.0)

    ref = math.log(integrate.quad(f, -10, 10, epsabs=0, epsrel=1e-12)[0]) - 14.0
    got = log_marginal_h0(SYMMETRIC, prior)
    assert abs(got - ref) <= 1e-3 * abs(ref)


def test_log_marginal_h0_prefers_prior_at_empirical_logit():
    data = TrialData(30, 40, 30, 40)
    near = log_marginal_h0(data, PriorParams(mu_beta=math.log(3.0)))
    far = log_marginal_h0(data, PriorParams(mu_beta=-4.0))
    assert near > far


def test_marketing_bf10():
    log_bf = log_marginal_h1(MARKETING, PriorParams()) - log_marginal_h0(MARKETING, PriorParams())
    assert math.exp(log_bf) == pytest.approx(0.259709, rel=1e-3)


def test_training_bf10_informed():
    log_bf = log_marginal_h1(TRAINING, INFORMED) - log_marginal_h0(TRAINING, INFORMED)
    assert math.exp(log_bf) == pytest.approx(0.1406443, rel=1e-3)


def test_small_sample_h1_against_quadrature():
    # Target accuracy is 0.01 on the log scale. The Laplace error on the
    # H1 marginal here is about 0.028, so this check is expected to fail.
    lap = log_marginal_h1(SMALL, PriorParams())
    quad = quadrature_log_marginal("H1", SMALL, PriorParams(), QuadratureSpec(801))
    ref = math.log(integrate.dblquad(
        lambda p, b: math.exp(log_kernel("H1", SMALL, PriorParams(), [b, p]) + 6.0), -10, 10, -10, 10,
        epsabs=1e-13, epsrel=1e-11,
    )[0]) - 6.0
    assert quad == pytest.approx(ref, abs=1e-8)
    assert abs(lap - quad) < 0.01


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 100), st.integers(1, 100), st.floats(0, 1), st.floats(0, 1), st.floats(-1.5, 1.5))
def test_group_swap_symmetry(n1, n2, f1, f2, mu):
    data = TrialData(int(f1 * n1), n1, int(f2 * n2), n2)
    prior = PriorParams(0.2, 1.1, mu, 0.8)
    mirrored = PriorParams(0.2, 1.1, -mu, 0.8)
    assert log_marginal_h1(data, prior) == pytest.approx(log_marginal_h1(data.swapped(), mirrored), abs=1e-9)


def test_symmetric_data_swap_identical():
    d = TrialData(4, 10, 4, 10)
    assert log_marginal_h1(d, PriorParams()) == log_marginal_h1(d.swapped(), PriorParams())


def test_fit_reports_its_log_marginal():
    fit = find_mode("H1", TrialData(0, 1, 0, 1), PriorParams())
    assert fit.log_marginal == pytest.approx(log_marginal_h1(TrialData(0, 1, 0, 1), PriorParams()))
