"""Log posterior kernels, analytic derivatives and Laplace approximations.

Coordinates per hypothesis:

* ``H0``: ``(beta,)`` with ``psi`` fixed at 0.
* ``H1``: ``(beta, psi)``.
* ``H+``/``H-``: ``(beta, xi)`` with ``psi = +exp(xi)`` / ``psi = -exp(xi)``.
  The kernel includes the ``+xi`` log-Jacobian and the truncation
  normaliser of the half-normal prior, so it integrates over an
  unconstrained plane.

Kernels omit binomial coefficients; every reported log marginal likelihood
is therefore off by the same data-only constant, which cancels in Bayes
factors and posterior probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .model import (
    LOG_2PI,
    Hypothesis,
    PriorParams,
    TrialData,
    log_likelihood_arrays,
    log_normal_pdf,
)

MAX_ITER = 200
GRAD_TOL = 1e-10
# Accepted when Newton stalls at floating-point resolution.
GRAD_TOL_STALLED = 1e-8
MAX_HALVINGS = 50


class ModeFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class LaplaceFit:
    hypothesis: Hypothesis
    mode: np.ndarray
    neg_hessian_inverse: np.ndarray
    log_kernel_at_mode: float
    log_marginal: float | None
    iterations: int

    @property
    def dim(self) -> int:
        return self.mode.shape[0]


def _dim(h: Hypothesis) -> int:
    return 1 if h is Hypothesis.H0 else 2


def _split(h: Hypothesis, point):
    point = np.asarray(point, dtype=float)
    if point.shape[-1] != _dim(h):
        raise ValueError(f"{h.value} expects a point of dimension {_dim(h)}, got {point.shape[-1]}")
    beta = point[..., 0]
    if h is Hypothesis.H0:
        return beta, np.zeros_like(beta), None
    second = point[..., 1]
    if h is Hypothesis.H1:
        return beta, second, None
    exi = np.exp(second)
    return beta, h.sign * exi, exi


def _psi_normaliser(h: Hypothesis, prior: PriorParams) -> float:
    if h is Hypothesis.HPLUS:
        return prior.log_mass_positive()
    if h is Hypothesis.HMINUS:
        return prior.log_mass_negative()
    return 0.0


def log_kernel(h, data: TrialData, prior: PriorParams, point):
    """Log likelihood plus log prior (and log Jacobian for the one-sided fits)."""
    h = Hypothesis.parse(h)
    beta, psi, exi = _split(h, point)
    out = log_likelihood_arrays(data, beta, psi)
    out = out + log_normal_pdf(beta, prior.mu_beta, prior.sigma_beta)
    if h is not Hypothesis.H0:
        out = out + log_normal_pdf(psi, prior.mu_psi, prior.sigma_psi)
    if exi is not None:
        out = out - _psi_normaliser(h, prior) + np.asarray(point, dtype=float)[..., 1]
    return out if np.ndim(out) else float(out)


def _pieces(data: TrialData, beta: float, psi: float):
    a1, a2 = beta - psi / 2.0, beta + psi / 2.0
    e1, e2 = special.expit(a1), special.expit(a2)
    # (y - (n - y) e^a) / (1 + e^a) == y - n * expit(a)
    r1 = data.y1 - data.n1 * e1
    r2 = data.y2 - data.n2 * e2
    # n e^a / (1 + e^a)^2
    w1 = data.n1 * e1 * special.expit(-a1)
    w2 = data.n2 * e2 * special.expit(-a2)
    return r1, r2, w1, w2


def _psi_derivatives(data, prior, beta, psi):
    """First and second derivatives of the H1 kernel in ``(beta, psi)``."""
    r1, r2, w1, w2 = _pieces(data, beta, psi)
    vb, vp = prior.sigma_beta**2, prior.sigma_psi**2
    g_b = r1 + r2 - (beta - prior.mu_beta) / vb
    g_p = 0.5 * (r2 - r1) - (psi - prior.mu_psi) / vp
    h_bb = -w1 - w2 - 1.0 / vb
    h_bp = 0.5 * (w1 - w2)
    h_pp = -0.25 * (w1 + w2) - 1.0 / vp
    return g_b, g_p, h_bb, h_bp, h_pp


def kernel_gradient(h, data: TrialData, prior: PriorParams, point) -> np.ndarray:
    h = Hypothesis.parse(h)
    point = np.asarray(point, dtype=float)
    beta, psi, exi = _split(h, point)
    beta, psi = float(beta), float(psi)
    if h is Hypothesis.H0:
        g = (data.y1 + data.y2) - data.n_total * special.expit(beta)
        return np.array([g - (beta - prior.mu_beta) / prior.sigma_beta**2])
    g_b, g_p, *_ = _psi_derivatives(data, prior, beta, psi)
    if h is Hypothesis.H1:
        return np.array([g_b, g_p])
    # chain rule through psi = sign * exp(xi), plus d(xi)/d(xi) from the Jacobian
    return np.array([g_b, h.sign * float(exi) * g_p + 1.0])


def kernel_hessian(h, data: TrialData, prior: PriorParams, point) -> np.ndarray:
    h = Hypothesis.parse(h)
    point = np.asarray(point, dtype=float)
    beta, psi, exi = _split(h, point)
    beta, psi = float(beta), float(psi)
    if h is Hypothesis.H0:
        e = special.expit(beta)
        return np.array([[-data.n_total * e * (1.0 - e) - 1.0 / prior.sigma_beta**2]])
    _, g_p, h_bb, h_bp, h_pp = _psi_derivatives(data, prior, beta, psi)
    if h is Hypothesis.H1:
        return np.array([[h_bb, h_bp], [h_bp, h_pp]])
    s, ex = h.sign, float(exi)
    h_bx = s * ex * h_bp
    h_xx = ex * ex * h_pp + s * ex * g_p
    return np.array([[h_bb, h_bx], [h_bx, h_xx]])


def inverse_2x2(a: np.ndarray) -> tuple[np.ndarray, float]:
    """Inverse and determinant of a 2x2 matrix via the adjugate."""
    (p, q), (r, t) = a
    det = p * t - q * r
    if det == 0.0 or not math.isfinite(det):
        raise np.linalg.LinAlgError("singular 2x2 matrix")
    return np.array([[t, -q], [-r, p]]) / det, det


def _start(h: Hypothesis, data: TrialData, prior: PriorParams) -> np.ndarray:
    l1 = math.log((data.y1 + 0.5) / (data.n1 - data.y1 + 0.5))
    l2 = math.log((data.y2 + 0.5) / (data.n2 - data.y2 + 0.5))
    beta0, psi0 = 0.5 * (l1 + l2), l2 - l1
    if h is Hypothesis.H0:
        pooled = math.log((data.y1 + data.y2 + 0.5) / (data.n_total - data.y1 - data.y2 + 0.5))
        return np.array([pooled])
    if h is Hypothesis.H1:
        return np.array([beta0, psi0])
    signed = h.sign * psi0
    # Data pointing the other way: start near zero on the allowed side.
    return np.array([beta0, math.log(max(signed, 0.1 * prior.sigma_psi, 1e-3))])


def _newton_direction(grad, hess):
    if hess.shape == (1, 1):
        if hess[0, 0] < 0:
            return -grad / hess[0, 0], True
        return grad, False
    inv, det = inverse_2x2(hess)
    if hess[0, 0] < 0 and det > 0:
        return -inv @ grad, True
    return grad, False


def find_mode(h, data: TrialData, prior: PriorParams, start=None) -> LaplaceFit:
    """Damped Newton ascent with analytic gradient and Hessian.

    Steps are halved until the kernel increases; when the Hessian is not
    negative definite the step falls back to the gradient direction.
    """
    h = Hypothesis.parse(h)
    x = _start(h, data, prior) if start is None else np.asarray(start, dtype=float).copy()
    f = log_kernel(h, data, prior, x)
    if not math.isfinite(f):
        raise ModeFindingError(f"{h.value}: kernel not finite at start {x}")
    for it in range(1, MAX_ITER + 1):
        grad = kernel_gradient(h, data, prior, x)
        if np.max(np.abs(grad)) < GRAD_TOL:
            break
        hess = kernel_hessian(h, data, prior, x)
        step, is_newton = _newton_direction(grad, hess)
        if not is_newton:
            step = step / max(1.0, float(np.max(np.abs(step))))
        t = 1.0
        if is_newton and np.max(np.abs(step)) < 1e-6:
            # Inside the quadratic basin kernel differences drown in rounding.
            x = x + step
            f = log_kernel(h, data, prior, x)
            continue
        for _ in range(MAX_HALVINGS):
            cand = x + t * step
            # overly long trial steps in xi may overflow; they are simply rejected
            with np.errstate(over="ignore", invalid="ignore"):
                fc = log_kernel(h, data, prior, cand)
            if math.isfinite(fc) and fc >= f:
                break
            t *= 0.5
        else:
            if np.max(np.abs(grad)) < GRAD_TOL_STALLED:
                break
            raise ModeFindingError(f"{h.value}: line search failed at {x} (gradient {grad})")
        if np.array_equal(cand, x):
            if np.max(np.abs(grad)) < GRAD_TOL_STALLED:
                break
            raise ModeFindingError(f"{h.value}: stalled at {x} (gradient {grad})")
        x, f = cand, fc
    else:
        grad = kernel_gradient(h, data, prior, x)
        if np.max(np.abs(grad)) >= GRAD_TOL_STALLED:
            raise ModeFindingError(f"{h.value}: no convergence after {MAX_ITER} iterations (gradient {grad})")
        it = MAX_ITER

    hess = kernel_hessian(h, data, prior, x)
    neg = -hess
    if h is Hypothesis.H0:
        if neg[0, 0] <= 0:
            raise ModeFindingError("H0: curvature at mode is not negative")
        cov = np.array([[1.0 / neg[0, 0]]])
        log_det_cov = math.log(cov[0, 0])
    else:
        cov, det = inverse_2x2(neg)
        if not (neg[0, 0] > 0 and det > 0):
            raise ModeFindingError(f"{h.value}: Hessian at mode is not negative definite")
        log_det_cov = -math.log(det)
    k = _dim(h)
    log_marginal = None
    if h in (Hypothesis.H0, Hypothesis.H1):
        log_marginal = 0.5 * k * LOG_2PI + 0.5 * log_det_cov + f
    return LaplaceFit(h, x, cov, float(f), log_marginal, it)


def log_marginal_h0(data: TrialData, prior: PriorParams) -> float:
    return find_mode(Hypothesis.H0, data, prior).log_marginal


def log_marginal_h1(data: TrialData, prior: PriorParams) -> float:
    return find_mode(Hypothesis.H1, data, prior).log_marginal
