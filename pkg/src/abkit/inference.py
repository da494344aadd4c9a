"""Bayes factors, posterior hypothesis probabilities, sequential traces and
prior-robustness grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .laplace import log_marginal_h0, log_marginal_h1
from .model import Hypothesis, HypothesisProbs, PriorParams, SequentialDataset, TrialData
from .sampling import (
    DEFAULT_DOF,
    DEFAULT_SAMPLES,
    RNG_VERSION,
    fresh_seed,
    log_marginal_one_sided,
)

BF_TYPES = ("BF10", "BF01", "BF+0", "BF0+", "BF-0", "BF0-")


def log_marginals(
    data: TrialData,
    prior: PriorParams,
    hypotheses=tuple(Hypothesis),
    samples: int = DEFAULT_SAMPLES,
    dof: float = DEFAULT_DOF,
    seed: int = 0,
) -> tuple[dict, dict]:
    """Log marginal likelihoods (and MC standard errors) for the requested hypotheses."""
    logml, se = {}, {}
    for h in map(Hypothesis.parse, hypotheses):
        if h is Hypothesis.H0:
            logml[h], se[h] = log_marginal_h0(data, prior), 0.0
        elif h is Hypothesis.H1:
            logml[h], se[h] = log_marginal_h1(data, prior), 0.0
        else:
            logml[h], se[h] = log_marginal_one_sided(h, data, prior, samples, seed, dof)
    return logml, se


def posterior_probs(log_ml: dict, prior_probs: HypothesisProbs) -> HypothesisProbs:
    """Combine marginal likelihoods with prior probabilities.

    Hypotheses with zero prior mass are excluded from the normalising sum.
    """
    active = [h for h in Hypothesis if prior_probs[h] > 0]
    terms = np.array([log_ml[h] + math.log(prior_probs[h]) for h in active])
    post = np.exp(terms - special.logsumexp(terms))
    post = post / post.sum()
    values = dict(zip(active, post))
    vals = [float(values.get(h, 0.0)) for h in Hypothesis]
    # Push the rounding residue onto the largest entry so the sum is exact.
    resid = 1.0 - math.fsum(vals)
    k = int(np.argmax(vals))
    vals[k] += resid
    return HypothesisProbs(*vals)


@dataclass(frozen=True)
class ABTestResult:
    data: TrialData
    prior: PriorParams
    log_marginal: dict
    mc_se: dict
    prior_probs: HypothesisProbs
    posterior_probs: HypothesisProbs
    samples: int
    dof: float
    seed: int
    rng_version: str = RNG_VERSION

    @property
    def log_bf10(self) -> float:
        return self.log_marginal[Hypothesis.H1] - self.log_marginal[Hypothesis.H0]

    @property
    def log_bf_plus0(self) -> float:
        return self.log_marginal[Hypothesis.HPLUS] - self.log_marginal[Hypothesis.H0]

    @property
    def log_bf_minus0(self) -> float:
        return self.log_marginal[Hypothesis.HMINUS] - self.log_marginal[Hypothesis.H0]

    def log_bf(self, j, k=Hypothesis.H0) -> float:
        return self.log_marginal[Hypothesis.parse(j)] - self.log_marginal[Hypothesis.parse(k)]

    def bf(self, bftype: str) -> float:
        return math.exp(log_bf_of_type(self.log_marginal, bftype))

    def to_dict(self) -> dict:
        log_bf = {t: log_bf_of_type(self.log_marginal, t) for t in ("BF10", "BF+0", "BF-0")}
        return {
            "data": self.data.as_dict(),
            "bf": {t: math.exp(v) for t, v in log_bf.items()},
            "log_bf": log_bf,
            "log_marginal": {h.value: v for h, v in self.log_marginal.items()},
            "mc_se": {h.value: v for h, v in self.mc_se.items()},
            "prior_probs": self.prior_probs.as_dict(),
            "posterior_probs": self.posterior_probs.as_dict(),
            "settings": {
                "prior": self.prior.as_dict(),
                "samples": self.samples,
                "dof": self.dof,
                "seed": self.seed,
                "rng": self.rng_version,
            },
        }


def _bftype_parts(bftype: str) -> tuple[Hypothesis, Hypothesis]:
    table = {
        "BF10": (Hypothesis.H1, Hypothesis.H0),
        "BF01": (Hypothesis.H0, Hypothesis.H1),
        "BF+0": (Hypothesis.HPLUS, Hypothesis.H0),
        "BF0+": (Hypothesis.H0, Hypothesis.HPLUS),
        "BF-0": (Hypothesis.HMINUS, Hypothesis.H0),
        "BF0-": (Hypothesis.H0, Hypothesis.HMINUS),
    }
    try:
        return table[bftype]
    except KeyError:
        raise ValueError(f"bftype must be one of {', '.join(BF_TYPES)}, got {bftype!r}") from None


def log_bf_of_type(log_ml: dict, bftype: str) -> float:
    num, den = _bftype_parts(bftype)
    return log_ml[num] - log_ml[den]


def ab_test(
    data: TrialData,
    prior: PriorParams | None = None,
    prior_probs: HypothesisProbs | None = None,
    samples: int = DEFAULT_SAMPLES,
    dof: float = DEFAULT_DOF,
    seed: int | None = None,
) -> ABTestResult:
    """Bayesian A/B test: all four marginal likelihoods and hypothesis probabilities.

    ``H0`` and ``H1`` use Laplace approximations; ``H+`` and ``H-`` use
    importance sampling with a t proposal. With ``seed=None`` a fresh seed
    is drawn and echoed in the result.
    """
    prior = PriorParams() if prior is None else prior
    prior_probs = HypothesisProbs.default() if prior_probs is None else prior_probs
    seed = fresh_seed() if seed is None else int(seed)
    logml, se = log_marginals(data, prior, tuple(Hypothesis), samples, dof, seed)
    return ABTestResult(
        data=data,
        prior=prior,
        log_marginal=logml,
        mc_se=se,
        prior_probs=prior_probs,
        posterior_probs=posterior_probs(logml, prior_probs),
        samples=samples,
        dof=dof,
        seed=seed,
    )


@dataclass(frozen=True)
class SequentialTrace:
    indices: list = field(default_factory=list)
    posterior_probs: list = field(default_factory=list)
    results: list = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.indices)

    def as_array(self) -> np.ndarray:
        """Rows of ``(n_total, p_h0, p_h1, p_hplus, p_hminus)``."""
        return np.array(
            [[i, p.p_h0, p.p_h1, p.p_hplus, p.p_hminus] for i, p in zip(self.indices, self.posterior_probs)],
            dtype=float,
        ).reshape(-1, 5)


def sequential_analysis(
    dataset: SequentialDataset,
    prior: PriorParams | None = None,
    prior_probs: HypothesisProbs | None = None,
    thin: int = 1,
    samples: int = DEFAULT_SAMPLES,
    dof: float = DEFAULT_DOF,
    seed: int | None = None,
) -> SequentialTrace:
    """Posterior hypothesis probabilities after every ``thin``-th observation.

    The last row is always evaluated. Rows where a group is still empty are
    skipped. Each row's draws depend only on ``(seed, n1 + n2)``, so the last
    entry reproduces ``ab_test`` on the full data with the same seed.
    """
    if int(thin) != thin or thin < 1:
        raise ValueError("thin must be a positive integer")
    if len(dataset) == 0:
        raise ValueError("empty sequential dataset")
    seed = fresh_seed() if seed is None else int(seed)
    last = len(dataset) - 1
    picks = [i for i in range(len(dataset)) if (i + 1) % thin == 0 or i == last]
    trace = SequentialTrace()
    for i in picks:
        if not dataset.is_analysable(i):
            continue
        res = ab_test(dataset[i], prior, prior_probs, samples, dof, seed)
        trace.indices.append(dataset.n_total(i))
        trace.posterior_probs.append(res.posterior_probs)
        trace.results.append(res)
    return trace


@dataclass(frozen=True)
class RobustnessGrid:
    mu_psi_values: np.ndarray
    sigma_psi_values: np.ndarray
    bf: np.ndarray
    bftype: str
    seed: int

    def rows(self):
        """Row-major ``(mu_psi, sigma_psi, bf)`` triples."""
        for i, mu in enumerate(self.mu_psi_values):
            for j, sd in enumerate(self.sigma_psi_values):
                yield float(mu), float(sd), float(self.bf[i, j])


def robustness_grid(
    data: TrialData,
    bftype: str,
    mu_grid,
    sigma_grid,
    beta_prior: tuple[float, float] = (0.0, 1.0),
    samples: int = DEFAULT_SAMPLES,
    dof: float = DEFAULT_DOF,
    seed: int | None = None,
) -> RobustnessGrid:
    """Requested Bayes factor over a grid of ``(mu_psi, sigma_psi)`` with the beta prior fixed.

    Every cell draws from the same master-seeded streams (common random
    numbers), so the surface is smooth in the prior parameters, cells are
    independent of evaluation order, and a one-cell grid equals ``ab_test``.
    """
    num, den = _bftype_parts(bftype)
    mu_grid = np.asarray(mu_grid, dtype=float).ravel()
    sigma_grid = np.asarray(sigma_grid, dtype=float).ravel()
    if np.any(sigma_grid <= 0):
        raise ValueError("sigma_psi grid values must be positive")
    seed = fresh_seed() if seed is None else int(seed)
    out = np.empty((mu_grid.size, sigma_grid.size))
    for i, mu in enumerate(mu_grid):
        for j, sd in enumerate(sigma_grid):
            prior = PriorParams(beta_prior[0], beta_prior[1], mu, sd)
            logml, _ = log_marginals(data, prior, (num, den), samples, dof, seed)
            out[i, j] = math.exp(logml[num] - logml[den])
    return RobustnessGrid(mu_grid, sigma_grid, out, bftype, seed)
