"""Importance sampling for one-sided marginal likelihoods and SIR posterior draws.

The proposal is a multivariate t centred on the Laplace mode with the
Laplace covariance as scale matrix. For ``H+``/``H-`` it lives in
``(beta, xi)`` space; for ``H1`` in ``(beta, psi)`` space.

Random streams come from ``numpy``'s PCG64 seeded through ``SeedSequence``
with an explicit key path, so a given ``(seed, key)`` pair always yields the
same draws regardless of what else was computed before.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .laplace import find_mode, log_kernel
from .model import Hypothesis, PriorParams, TrialData, logistic

RNG_VERSION = "pcg64-seedsequence-v1"
DEFAULT_SAMPLES = 100_000
DEFAULT_DOF = 5.0
MIN_SAMPLES = 1000

_HYP_KEY = {Hypothesis.H0: 0, Hypothesis.H1: 1, Hypothesis.HPLUS: 2, Hypothesis.HMINUS: 3}


class ImportanceSamplingError(RuntimeError):
    pass


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit child seed for ``(seed, *keys)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> np.uint64(1))


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return np.random.Generator(np.random.PCG64(ss))


def fresh_seed() -> int:
    return int(np.random.SeedSequence().generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> np.uint64(1))


def stream_for(seed: int, data: TrialData, h: Hypothesis, purpose: int = 0) -> np.random.Generator:
    """Stream used for hypothesis ``h`` on ``data``.

    Keyed on the total sample size so that sequential analyses and the full
    data analysis share draws at matching rows.
    """
    return make_rng(seed, data.n_total, _HYP_KEY[h], purpose)


@dataclass(frozen=True)
class TProposal:
    location: np.ndarray
    scale: np.ndarray
    dof: float = DEFAULT_DOF
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.dof > 0:
            raise ValueError("degrees of freedom must be positive")
        loc = np.asarray(self.location, dtype=float)
        scale = np.asarray(self.scale, dtype=float)
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "chol", np.linalg.cholesky(scale))

    @property
    def dim(self) -> int:
        return self.location.shape[0]

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((size, self.dim))
        u = rng.chisquare(self.dof, size)
        return self.location + (z @ self.chol.T) * np.sqrt(self.dof / u)[:, None]

    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d, nu = self.dim, self.dof
        sol = np.linalg.solve(self.chol, (x - self.location).T)
        maha = np.sum(sol * sol, axis=0)
        log_det = 2.0 * np.sum(np.log(np.diag(self.chol)))
        return (
            special.gammaln((nu + d) / 2.0)
            - special.gammaln(nu / 2.0)
            - 0.5 * d * math.log(nu * math.pi)
            - 0.5 * log_det
            - 0.5 * (nu + d) * np.log1p(maha / nu)
        )


def build_proposal(h, data: TrialData, prior: PriorParams, dof: float = DEFAULT_DOF) -> TProposal:
    h = Hypothesis.parse(h)
    if h is Hypothesis.H0:
        raise ValueError("no proposal is needed under H0")
    fit = find_mode(h, data, prior)
    return TProposal(fit.mode, fit.neg_hessian_inverse, dof)


@dataclass(frozen=True)
class WeightedSamples:
    draws: np.ndarray
    log_weights: np.ndarray

    @property
    def normalized_weights(self) -> np.ndarray:
        return np.exp(self.log_weights - special.logsumexp(self.log_weights))

    @property
    def effective_sample_size(self) -> float:
        v = self.normalized_weights
        return float(1.0 / np.sum(v * v))

    def log_mean_weight(self) -> float:
        return float(special.logsumexp(self.log_weights) - math.log(self.log_weights.size))

    def log_mean_se(self) -> float:
        """Delta-method standard error of ``log(mean(w))``."""
        w = np.exp(self.log_weights - np.max(self.log_weights))
        m = w.mean()
        return float(w.std(ddof=1) / (math.sqrt(w.size) * m))


def importance_sample(
    h, data: TrialData, prior: PriorParams, samples: int, rng: np.random.Generator,
    dof: float = DEFAULT_DOF, proposal: TProposal | None = None,
) -> WeightedSamples:
    h = Hypothesis.parse(h)
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    if proposal is None:
        proposal = build_proposal(h, data, prior, dof)
    draws = proposal.sample(samples, rng)
    with np.errstate(over="ignore", invalid="ignore"):
        lw = log_kernel(h, data, prior, draws) - proposal.logpdf(draws)
    ws = WeightedSamples(draws, np.asarray(lw, dtype=float))
    if not np.all(np.isfinite(ws.log_weights)):
        finite = ws.log_weights[np.isfinite(ws.log_weights)]
        ess = WeightedSamples(draws, finite).effective_sample_size if finite.size else 0.0
        raise ImportanceSamplingError(
            f"{h.value}: non-finite importance weights (ESS of finite part {ess:.1f})"
        )
    return ws


def log_marginal_one_sided(
    h, data: TrialData, prior: PriorParams, samples: int = DEFAULT_SAMPLES,
    seed: int = 0, dof: float = DEFAULT_DOF,
) -> tuple[float, float]:
    """Importance-sampling estimate of ``log p(data | H+)`` or ``log p(data | H-)``.

    Returns the estimate and its Monte Carlo standard error.
    """
    h = Hypothesis.parse(h)
    if h not in (Hypothesis.HPLUS, Hypothesis.HMINUS):
        raise ValueError("one-sided marginal likelihood needs H+ or H-")
    ws = importance_sample(h, data, prior, samples, stream_for(seed, data, h), dof)
    return ws.log_mean_weight(), ws.log_mean_se()


@dataclass(frozen=True)
class PosteriorSamples:
    hypothesis: Hypothesis
    beta: np.ndarray
    psi: np.ndarray
    effective_sample_size: float = float("nan")

    @property
    def p1(self) -> np.ndarray:
        return logistic(self.beta - self.psi / 2.0)

    @property
    def p2(self) -> np.ndarray:
        return logistic(self.beta + self.psi / 2.0)

    def column(self, name: str) -> np.ndarray:
        name = name.lower()
        if name in ("beta",):
            return self.beta
        if name in ("psi", "logor"):
            return self.psi
        if name == "or":
            return np.exp(self.psi)
        if name == "p1":
            return self.p1
        if name == "p2":
            return self.p2
        if name == "rrisk":
            return self.p2 / self.p1
        if name == "arisk":
            return self.p2 - self.p1
        raise ValueError(f"unknown posterior quantity {name!r}")


def resample(draws: np.ndarray, log_weights: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial resampling with replacement proportional to the weights."""
    v = np.exp(log_weights - special.logsumexp(log_weights))
    v = v / v.sum()
    idx = rng.choice(draws.shape[0], size=size, replace=True, p=v)
    return draws[idx]


def sir_sample(
    h, data: TrialData, prior: PriorParams, samples: int = DEFAULT_SAMPLES,
    seed: int = 0, dof: float = DEFAULT_DOF,
) -> PosteriorSamples:
    """Sampling importance resampling under ``H1``, ``H+`` or ``H-``."""
    h = Hypothesis.parse(h)
    if h is Hypothesis.H0:
        raise ValueError("posterior samples are only available under H1, H+ and H-")
    rng = stream_for(seed, data, h, purpose=1)
    ws = importance_sample(h, data, prior, samples, rng, dof)
    ess = ws.effective_sample_size
    if ess < 0.01 * samples:
        raise ImportanceSamplingError(f"{h.value}: effective sample size {ess:.1f} below 1% of {samples}")
    draws = resample(ws.draws, ws.log_weights, samples, rng)
    beta, second = draws[:, 0], draws[:, 1]
    psi = second if h is Hypothesis.H1 else h.sign * np.exp(second)
    return PosteriorSamples(h, beta, psi, ess)


def summarize(values, level: float = 0.95) -> tuple[float, tuple[float, float]]:
    """Median and central credible interval, midpoint-interpolated quantiles."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot summarise an empty sample")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    lo, med, hi = np.quantile(values, [(1 - level) / 2, 0.5, (1 + level) / 2], method="midpoint")
    return float(med), (float(lo), float(hi))
