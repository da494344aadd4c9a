"""Brute-force marginal likelihoods by composite Simpson quadrature.

Deliberately simple: a fixed rectangle around the prior, a tensor Simpson
rule and a log-space max shift. It shares only the likelihood and the prior
densities with the engine; no modes, Hessians or proposals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Hypothesis, PriorParams, TrialData, log_likelihood_arrays, log_normal_pdf, log_psi_density


class RefinementError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    nodes_per_axis: int = 2001
    width: float = 10.0  # half-width of each axis in prior standard deviations

    def __post_init__(self):
        if self.nodes_per_axis < 101 or self.nodes_per_axis % 2 == 0:
            raise ValueError("nodes_per_axis must be odd and at least 101")

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.nodes_per_axis - 1, self.width)

    def beta_range(self, prior: PriorParams) -> tuple[float, float]:
        return prior.mu_beta - self.width * prior.sigma_beta, prior.mu_beta + self.width * prior.sigma_beta

    def psi_range(self, prior: PriorParams, h: Hypothesis) -> tuple[float, float]:
        lo = prior.mu_psi - self.width * prior.sigma_psi
        hi = prior.mu_psi + self.width * prior.sigma_psi
        if h is Hypothesis.HPLUS:
            lo = max(lo, 0.0)
        elif h is Hypothesis.HMINUS:
            hi = min(hi, 0.0)
        if hi <= lo:
            raise ValueError(f"{h.value}: prior support is numerically empty on the quadrature rectangle")
        return lo, hi


def simpson_weights(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.linspace(a, b, n)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return x, w * (b - a) / (n - 1) / 3.0


def _log_integral(log_f: np.ndarray, weights: np.ndarray) -> float:
    m = np.max(log_f)
    if not math.isfinite(m):
        return -math.inf
    return float(m + math.log(np.sum(weights * np.exp(log_f - m))))


def _log_marginal(h: Hypothesis, data: TrialData, prior: PriorParams, spec: QuadratureSpec) -> float:
    b, wb = simpson_weights(*spec.beta_range(prior), spec.nodes_per_axis)
    lb = log_normal_pdf(b, prior.mu_beta, prior.sigma_beta)
    if h is Hypothesis.H0:
        return _log_integral(log_likelihood_arrays(data, b, 0.0) + lb, wb)
    p, wp = simpson_weights(*spec.psi_range(prior, h), spec.nodes_per_axis)
    B, P = np.meshgrid(b, p, indexing="ij")
    lp = log_psi_density(p, prior, h.sign if h is not Hypothesis.H1 else 0)
    # the truncation endpoint psi = 0 has zero width; keep it finite
    lp = np.where(np.isfinite(lp), lp, log_psi_density(p, prior, 0) - _trunc_mass(prior, h))
    log_f = log_likelihood_arrays(data, B, P) + lb[:, None] + lp[None, :]
    return _log_integral(log_f, np.outer(wb, wp))


def _trunc_mass(prior: PriorParams, h: Hypothesis) -> float:
    if h is Hypothesis.HPLUS:
        return prior.log_mass_positive()
    if h is Hypothesis.HMINUS:
        return prior.log_mass_negative()
    return 0.0


def quadrature_log_marginal(
    h, data: TrialData, prior: PriorParams, spec: QuadratureSpec | None = None,
    check: bool = False, tol: float = 1e-6,
) -> float:
    """Log marginal likelihood by tensor Simpson quadrature.

    With ``check=True`` the node count is doubled and the two answers must
    agree within ``tol``; otherwise ``RefinementError`` is raised.
    """
    h = Hypothesis.parse(h)
    spec = QuadratureSpec() if spec is None else spec
    value = _log_marginal(h, data, prior, spec)
    if check:
        finer = _log_marginal(h, data, prior, spec.refined())
        if not abs(finer - value) < tol:
            raise RefinementError(
                f"{h.value}: refinement changed the log marginal from {value!r} to {finer!r}"
            )
        return finer
    return value


def quadrature_posterior_mean_psi(data: TrialData, prior: PriorParams, spec: QuadratureSpec | None = None) -> float:
    """Posterior mean of psi under H1 on the same Simpson grid."""
    spec = QuadratureSpec() if spec is None else spec
    b, wb = simpson_weights(*spec.beta_range(prior), spec.nodes_per_axis)
    p, wp = simpson_weights(*spec.psi_range(prior, Hypothesis.H1), spec.nodes_per_axis)
    B, P = np.meshgrid(b, p, indexing="ij")
    log_f = (
        log_likelihood_arrays(data, B, P)
        + log_normal_pdf(b, prior.mu_beta, prior.sigma_beta)[:, None]
        + log_normal_pdf(p, prior.mu_psi, prior.sigma_psi)[None, :]
    )
    f = np.exp(log_f - log_f.max()) * np.outer(wb, wp)
    return float(np.sum(f * P) / np.sum(f))


def oracle_log_marginals(data: TrialData, prior: PriorParams, spec: QuadratureSpec | None = None) -> dict:
    return {h: quadrature_log_marginal(h, data, prior, spec) for h in Hypothesis}
