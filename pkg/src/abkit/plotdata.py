"""Numeric series behind the usual prior/posterior plots.

Everything returns plain arrays; rendering is left to the caller.
"""

from __future__ import annotations

import numpy as np
from scipy import stats

from .implied import DerivedQuantity, TruncationSide, implied_pdf, implied_quantile, log_joint_density_p1p2
from .inference import ABTestResult
from .model import Hypothesis, HypothesisProbs, PriorParams
from .sampling import PosteriorSamples, sir_sample

DEFAULT_POINTS = 201


def default_prior_grid(q, prior: PriorParams, trunc=TruncationSide.NONE, points: int = DEFAULT_POINTS) -> np.ndarray:
    q = DerivedQuantity.parse(q)
    lo = implied_quantile(q, 0.001, prior, trunc)
    hi = implied_quantile(q, 0.999, prior, trunc)
    if q is DerivedQuantity.LOG_ODDS_RATIO and TruncationSide.parse(trunc) is TruncationSide.NONE:
        lo, hi = prior.mu_psi - 4 * prior.sigma_psi, prior.mu_psi + 4 * prior.sigma_psi
    return np.linspace(lo, hi, points)


def prior_density_series(q, prior: PriorParams, grid=None, trunc=TruncationSide.NONE) -> tuple[np.ndarray, np.ndarray]:
    q = DerivedQuantity.parse(q)
    x = default_prior_grid(q, prior, trunc) if grid is None else np.asarray(grid, dtype=float)
    lo, hi = q.support
    dens = np.array([implied_pdf(q, v, prior, trunc) if lo < v < hi else 0.0 for v in x])
    return x, dens


def prior_p1p2_grid(prior: PriorParams, points: int = 99, trunc=TruncationSide.NONE):
    # cell midpoints, so density * (1/points)^2 sums to about one
    g = (np.arange(points) + 0.5) / points
    P1, P2 = np.meshgrid(g, g, indexing="ij")
    dens = np.exp(log_joint_density_p1p2(P1, P2, prior, trunc))
    return P1.ravel(), P2.ravel(), dens.ravel()


def posterior_density_series(samples: PosteriorSamples, quantity: str, grid=None, points: int = DEFAULT_POINTS):
    """Gaussian kernel density estimate of a posterior quantity from SIR draws."""
    vals = samples.column(quantity)
    if grid is None:
        lo, hi = np.quantile(vals, [0.0005, 0.9995])
        pad = 0.1 * (hi - lo)
        grid = np.linspace(lo - pad, hi + pad, points)
    grid = np.asarray(grid, dtype=float)
    kde = stats.gaussian_kde(vals)
    return grid, kde(grid)


def posterior_p1p2_grid(samples: PosteriorSamples, points: int = 51):
    p1, p2 = samples.p1, samples.p2
    lo = np.quantile(np.concatenate([p1, p2]), 0.0005)
    hi = np.quantile(np.concatenate([p1, p2]), 0.9995)
    g = np.linspace(lo, hi, points)
    P1, P2 = np.meshgrid(g, g, indexing="ij")
    kde = stats.gaussian_kde(np.vstack([p1, p2]))
    dens = kde(np.vstack([P1.ravel(), P2.ravel()]))
    return P1.ravel(), P2.ravel(), dens


def mixture_series(probs: HypothesisProbs, psi_grid: np.ndarray, slab_density: np.ndarray) -> dict:
    """Spike at psi = 0 with height P(H0); slab rescaled so its peak equals P(H1)."""
    slab_density = np.asarray(slab_density, dtype=float)
    peak = slab_density.max()
    scaled = slab_density * (probs.p_h1 / peak) if peak > 0 else slab_density
    return {"spike": probs.p_h0, "slab_weight": probs.p_h1, "x": np.asarray(psi_grid, dtype=float), "slab": scaled}


def prior_mixture(prior: PriorParams, probs: HypothesisProbs, grid=None) -> dict:
    x, dens = prior_density_series(DerivedQuantity.LOG_ODDS_RATIO, prior, grid)
    return mixture_series(probs, x, dens)


def posterior_mixture(result: ABTestResult, grid=None) -> dict:
    draws = sir_sample(Hypothesis.H1, result.data, result.prior, result.samples, result.seed, result.dof)
    x, dens = posterior_density_series(draws, "psi", grid)
    return mixture_series(result.posterior_probs, x, dens)
