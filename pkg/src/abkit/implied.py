"""Prior-implied distributions of derived quantities and of ``(p1, p2)``.

Log odds ratio and odds ratio have closed forms. Relative risk and absolute
risk reduce to a one-dimensional integral over ``beta`` of the normal CDF
(or pdf) of ``psi`` evaluated at the value of ``psi`` where the quantity
crosses ``x`` for that ``beta``.
"""

from __future__ import annotations

import enum
import math

import numpy as np
from scipy import integrate, optimize, special, stats

from .model import PriorParams, log_normal_pdf

QUAD_HALF_WIDTH = 8.0
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200
AR_EDGE = 1e-12


class QuadratureError(RuntimeError):
    pass


class DerivedQuantity(str, enum.Enum):
    LOG_ODDS_RATIO = "logor"
    ODDS_RATIO = "or"
    RELATIVE_RISK = "rrisk"
    ABSOLUTE_RISK = "arisk"

    @classmethod
    def parse(cls, value) -> "DerivedQuantity":
        if isinstance(value, DerivedQuantity):
            return value
        return cls(str(value).lower())

    @property
    def support(self) -> tuple[float, float]:
        return {
            DerivedQuantity.LOG_ODDS_RATIO: (-math.inf, math.inf),
            DerivedQuantity.ODDS_RATIO: (0.0, math.inf),
            DerivedQuantity.RELATIVE_RISK: (0.0, math.inf),
            DerivedQuantity.ABSOLUTE_RISK: (-1.0, 1.0),
        }[self]


class TruncationSide(str, enum.Enum):
    NONE = "none"
    POSITIVE_PSI = "positive"
    NEGATIVE_PSI = "negative"

    @classmethod
    def parse(cls, value) -> "TruncationSide":
        if value is None:
            return cls.NONE
        if isinstance(value, TruncationSide):
            return value
        aliases = {"h1": "none", "h+": "positive", "hplus": "positive", "h-": "negative", "hminus": "negative"}
        key = str(value).lower()
        return cls(aliases.get(key, key))

    @property
    def sign(self) -> int:
        return {TruncationSide.NONE: 0, TruncationSide.POSITIVE_PSI: 1, TruncationSide.NEGATIVE_PSI: -1}[self]


# -- psi marginal (possibly truncated) -------------------------------------------


def psi_cdf(t, prior: PriorParams, trunc=TruncationSide.NONE):
    trunc = TruncationSide.parse(trunc)
    t = np.asarray(t, dtype=float)
    m, s = prior.mu_psi, prior.sigma_psi
    if trunc is TruncationSide.NONE:
        return special.ndtr((t - m) / s)
    if trunc is TruncationSide.POSITIVE_PSI:
        # (Phi(t) - Phi(0)) / (1 - Phi(0)), written with survival functions for accuracy
        tt = np.maximum(t, 0.0)
        num = stats.norm.sf(0.0, m, s) - stats.norm.sf(tt, m, s)
        return np.clip(num / stats.norm.sf(0.0, m, s), 0.0, 1.0)
    tt = np.minimum(t, 0.0)
    return np.clip(stats.norm.cdf(tt, m, s) / stats.norm.cdf(0.0, m, s), 0.0, 1.0)


def psi_logpdf(t, prior: PriorParams, trunc=TruncationSide.NONE):
    trunc = TruncationSide.parse(trunc)
    t = np.asarray(t, dtype=float)
    out = log_normal_pdf(t, prior.mu_psi, prior.sigma_psi)
    if trunc is TruncationSide.POSITIVE_PSI:
        out = np.where(t > 0, out - prior.log_mass_positive(), -np.inf)
    elif trunc is TruncationSide.NEGATIVE_PSI:
        out = np.where(t < 0, out - prior.log_mass_negative(), -np.inf)
    return out


# -- psi thresholds as functions of beta ----------------------------------------


def _log_rr_root(lam: float, beta):
    """log of exp(psi/2) solving p2 = lam * p1 at the given beta."""
    eb = np.exp(beta)
    c = (1.0 - lam) * eb
    s = np.sqrt(c * c + 4.0 * lam)
    # both forms equal (-c + s) / 2; pick the one without cancellation
    root = np.where(c > 0, 2.0 * lam / (c + s), (s - c) / 2.0)
    return np.log(root)


def _drr_bound(lam: float, beta):
    """d(psi-threshold)/d(lam) for the relative risk."""
    eb = np.exp(beta)
    c = (1.0 - lam) * eb
    s = np.sqrt(c * c + 4.0 * lam)
    g = np.where(c > 0, 4.0 * lam / (c + s), s - c)  # = -c + s
    dg = eb + (2.0 - (1.0 - lam) * eb * eb) / s
    return 2.0 * dg / g


def _ar_terms(u: float, beta):
    ch, sh = np.cosh(beta), np.sinh(beta)
    r = np.sqrt(u * u * sh * sh + 1.0)
    # u*cosh + r, with the cancelling branch rewritten via (r^2 - u^2 cosh^2) = 1 - u^2
    num = np.where(u >= 0, u * ch + r, (1.0 - u * u) / (r - u * ch))
    return ch, sh, r, num


def _log_ar_root(u: float, beta):
    """log of exp(psi/2) solving p2 - p1 = u at the given beta."""
    _, _, _, num = _ar_terms(u, beta)
    return np.log(num) - math.log1p(-u)


def _dar_bound(u: float, beta):
    ch, sh, r, num = _ar_terms(u, beta)
    dnum = ch + u * sh * sh / r
    return 2.0 * (dnum / num + 1.0 / (1.0 - u))


def psi_threshold(q, x: float, beta):
    """Value of psi at which quantity ``q`` equals ``x`` (increasing in x)."""
    q = DerivedQuantity.parse(q)
    if q is DerivedQuantity.LOG_ODDS_RATIO:
        return np.full_like(np.asarray(beta, dtype=float), x)
    if q is DerivedQuantity.ODDS_RATIO:
        return np.full_like(np.asarray(beta, dtype=float), math.log(x))
    if q is DerivedQuantity.RELATIVE_RISK:
        return 2.0 * _log_rr_root(x, beta)
    return 2.0 * _log_ar_root(x, beta)


# -- integration helpers ---------------------------------------------------------


def _beta_integral(fn, prior: PriorParams) -> float:
    lo = prior.mu_beta - QUAD_HALF_WIDTH * prior.sigma_beta
    hi = prior.mu_beta + QUAD_HALF_WIDTH * prior.sigma_beta
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        val, err, *info = integrate.quad(
            fn, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT,
            points=[prior.mu_beta], full_output=1,
        )
    if len(info) >= 2 and info[1] and err > 1e-6:
        raise QuadratureError(f"quadrature did not converge (estimate {val!r}, error {err!r})")
    return float(val)


def _check_support(q: DerivedQuantity, x: float, open_interval: bool):
    lo, hi = q.support
    if math.isnan(x):
        raise ValueError("x is NaN")
    if open_interval and not (lo < x < hi):
        raise ValueError(f"{q.value}: x={x} is outside the open support ({lo}, {hi})")
    if not open_interval and not (lo <= x <= hi):
        raise ValueError(f"{q.value}: x={x} is outside the support [{lo}, {hi}]")


def implied_cdf(q, x: float, prior: PriorParams, trunc=TruncationSide.NONE) -> float:
    """P(quantity <= x) under the (possibly truncated) prior."""
    q, trunc = DerivedQuantity.parse(q), TruncationSide.parse(trunc)
    x = float(x)
    _check_support(q, x, open_interval=False)
    lo, hi = q.support
    if x == lo:
        return 0.0
    if x == hi:
        return 1.0
    if q is DerivedQuantity.LOG_ODDS_RATIO:
        return float(psi_cdf(x, prior, trunc))
    if q is DerivedQuantity.ODDS_RATIO:
        return float(psi_cdf(math.log(x), prior, trunc))
    if q is DerivedQuantity.ABSOLUTE_RISK:
        x = min(max(x, -1.0 + AR_EDGE), 1.0 - AR_EDGE)

    def integrand(b):
        return math.exp(log_normal_pdf(b, prior.mu_beta, prior.sigma_beta)) * float(
            psi_cdf(psi_threshold(q, x, b), prior, trunc)
        )

    return min(max(_beta_integral(integrand, prior), 0.0), 1.0)


def implied_pdf(q, x: float, prior: PriorParams, trunc=TruncationSide.NONE) -> float:
    """Density of the derived quantity at ``x`` under the (possibly truncated) prior."""
    q, trunc = DerivedQuantity.parse(q), TruncationSide.parse(trunc)
    x = float(x)
    _check_support(q, x, open_interval=True)
    if q is DerivedQuantity.LOG_ODDS_RATIO:
        return float(np.exp(psi_logpdf(x, prior, trunc)))
    if q is DerivedQuantity.ODDS_RATIO:
        return float(np.exp(psi_logpdf(math.log(x), prior, trunc) - math.log(x)))
    if q is DerivedQuantity.ABSOLUTE_RISK:
        x = min(max(x, -1.0 + AR_EDGE), 1.0 - AR_EDGE)
        deriv = _dar_bound
    else:
        deriv = _drr_bound

    def integrand(b):
        t = psi_threshold(q, x, b)
        log_val = (
            log_normal_pdf(b, prior.mu_beta, prior.sigma_beta)
            + psi_logpdf(t, prior, trunc)
            + np.log(deriv(x, b))
        )
        return float(np.exp(log_val))

    return max(_beta_integral(integrand, prior), 0.0)


def implied_quantile(q, prob: float, prior: PriorParams, trunc=TruncationSide.NONE) -> float:
    """Inverse of ``implied_cdf`` by bracketing root finding."""
    q, trunc = DerivedQuantity.parse(q), TruncationSide.parse(trunc)
    if not 0 < prob < 1:
        raise ValueError("prob must lie in (0, 1)")
    if q is DerivedQuantity.LOG_ODDS_RATIO:
        return _psi_quantile(prob, prior, trunc)
    if q is DerivedQuantity.ODDS_RATIO:
        return math.exp(_psi_quantile(prob, prior, trunc))
    if q is DerivedQuantity.ABSOLUTE_RISK:
        lo, hi = -1.0 + 1e-9, 1.0 - 1e-9
    else:
        lo, hi = 1e-12, 1.0
        while implied_cdf(q, hi, prior, trunc) < prob:
            hi *= 2.0
    return float(optimize.brentq(lambda v: implied_cdf(q, v, prior, trunc) - prob, lo, hi, xtol=1e-12, rtol=1e-12))


def _psi_quantile(prob: float, prior: PriorParams, trunc: TruncationSide) -> float:
    m, s = prior.mu_psi, prior.sigma_psi
    if trunc is TruncationSide.NONE:
        return float(stats.norm.ppf(prob, m, s))
    if trunc is TruncationSide.POSITIVE_PSI:
        sf0 = stats.norm.sf(0.0, m, s)
        return float(stats.norm.isf(sf0 * (1.0 - prob), m, s))
    return float(stats.norm.ppf(prob * stats.norm.cdf(0.0, m, s), m, s))


# -- joint, marginal and conditional densities of (p1, p2) -----------------------


def _check_open_unit(*ps):
    for p in ps:
        if not (0.0 < p < 1.0):
            raise ValueError(f"probability {p} must lie strictly inside (0, 1)")


def log_joint_density_p1p2(p1, p2, prior: PriorParams, trunc=TruncationSide.NONE):
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    l1, l2 = special.logit(p1), special.logit(p2)
    log_jac = -(np.log(p1) + np.log(p2) + np.log1p(-p1) + np.log1p(-p2))
    return (
        log_jac
        + log_normal_pdf(0.5 * (l1 + l2), prior.mu_beta, prior.sigma_beta)
        + psi_logpdf(l2 - l1, prior, trunc)
    )


def joint_density_p1p2(p1: float, p2: float, prior: PriorParams, trunc=TruncationSide.NONE) -> float:
    _check_open_unit(p1, p2)
    return float(np.exp(log_joint_density_p1p2(p1, p2, prior, trunc)))


def _log_marginal_logit(which: str, p: float, prior: PriorParams, trunc: TruncationSide) -> float:
    """log of the integral over the other group's probability, done in logit space.

    Substituting ``p' = logistic(t)`` absorbs the ``p'(1-p')`` Jacobian factor,
    leaving a smooth Gaussian-like integrand in ``t``.
    """
    lp = float(special.logit(p))
    sign = 1.0 if which == "first" else -1.0

    def log_integrand(t):
        # which == "first": p1 fixed, t = logit(p2) so psi = t - lp
        psi = sign * (t - lp)
        return log_normal_pdf(0.5 * (lp + t), prior.mu_beta, prior.sigma_beta) + psi_logpdf(psi, prior, trunc)

    # mode of the Gaussian product in t (untruncated) to centre the range
    vb, vp = prior.sigma_beta**2, prior.sigma_psi**2
    mb = 2.0 * prior.mu_beta - lp
    mp = lp + sign * prior.mu_psi
    prec = 1.0 / (4.0 * vb) + 1.0 / vp
    centre = (mb / (4.0 * vb) + mp / vp) / prec
    width = 12.0 / math.sqrt(prec)
    lo, hi = centre - width, centre + width
    breaks = [centre]
    if trunc is not TruncationSide.NONE:
        lo_t, hi_t = (lp, hi) if trunc.sign * sign > 0 else (lo, lp)
        lo, hi = max(lo, lo_t), min(hi, hi_t)
        if hi <= lo:
            return -math.inf
        breaks = [b for b in breaks if lo < b < hi]
    shift = float(log_integrand(np.clip(centre, lo, hi)))
    if not math.isfinite(shift):
        grid = np.linspace(lo, hi, 2001)
        shift = float(np.max(log_integrand(grid)))
    if not math.isfinite(shift):
        return -math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        val, err, *info = integrate.quad(
            lambda t: math.exp(float(log_integrand(t)) - shift), lo, hi,
            epsabs=0.0, epsrel=1e-11, limit=QUAD_LIMIT, points=breaks or None, full_output=1,
        )
    if len(info) >= 2 and info[1] and err > 1e-6 * max(val, 1e-300):
        raise QuadratureError(f"marginal density quadrature did not converge (estimate {val!r}, error {err!r})")
    if val <= 0:
        return -math.inf
    return shift + math.log(val) - math.log(p) - math.log1p(-p)


def marginal_density_p(which: str, p: float, prior: PriorParams, trunc=TruncationSide.NONE) -> float:
    """Prior density of ``p1`` (``which="first"``) or ``p2`` (``which="second"``)."""
    if which not in ("first", "second"):
        raise ValueError("which must be 'first' or 'second'")
    _check_open_unit(p)
    return math.exp(_log_marginal_logit(which, p, prior, TruncationSide.parse(trunc)))


def conditional_density_p2_given_p1(p2: float, p1: float, prior: PriorParams, trunc=TruncationSide.NONE) -> float:
    _check_open_unit(p1, p2)
    trunc = TruncationSide.parse(trunc)
    log_den = _log_marginal_logit("first", p1, prior, trunc)
    if log_den < math.log(1e-300):
        raise ValueError(f"marginal density of p1 at {p1} is numerically zero")
    return float(np.exp(log_joint_density_p1p2(p1, p2, prior, trunc) - log_den))
