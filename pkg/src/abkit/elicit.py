"""Least-squares fit of the psi prior to user-supplied quantiles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .implied import DerivedQuantity, implied_cdf
from .model import PriorParams

MAX_ITER = 2000
SIMPLEX_TOL = 1e-8
# objective differences below this are quadrature noise
OBJECTIVE_TOL = 1e-14


class ElicitationError(RuntimeError):
    def __init__(self, message, best: PriorParams | None = None, objective: float | None = None):
        super().__init__(message)
        self.best = best
        self.objective = objective


@dataclass(frozen=True)
class QuantileSpec:
    values: tuple
    probs: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        if len(values) != len(probs):
            raise ValueError(f"values and probs differ in length ({len(values)} vs {len(probs)})")
        if len(values) < 2:
            raise ValueError("at least two quantiles are needed")
        if any(not (0.0 < p < 1.0) for p in probs):
            raise ValueError("probabilities must lie strictly inside (0, 1)")
        if any(b <= a for a, b in zip(probs, probs[1:])):
            raise ValueError("probabilities must be strictly increasing")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("quantile values must be strictly increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    def check_support(self, q: DerivedQuantity):
        lo, hi = q.support
        for v in self.values:
            if not (lo < v < hi):
                raise ValueError(f"quantile value {v} lies outside the support ({lo}, {hi}) of {q.value}")


@dataclass(frozen=True)
class ElicitationResult:
    prior: PriorParams
    objective: float
    quantity: DerivedQuantity
    spec: QuantileSpec
    iterations: int

    def implied_probs(self) -> list[float]:
        return [implied_cdf(self.quantity, v, self.prior) for v in self.spec.values]


def elicitation_objective(spec: QuantileSpec, q, mu_psi: float, sigma_psi: float,
                          beta_prior: tuple[float, float] = (0.0, 1.0)) -> float:
    """Sum of squared differences between implied CDF values and target probabilities."""
    q = DerivedQuantity.parse(q)
    prior = PriorParams(beta_prior[0], beta_prior[1], mu_psi, sigma_psi)
    return math.fsum((implied_cdf(q, v, prior) - p) ** 2 for v, p in zip(spec.values, spec.probs))


def _initial_mu(spec: QuantileSpec, q: DerivedQuantity) -> float:
    med = spec.values[int(np.argmin([abs(p - 0.5) for p in spec.probs]))]
    if q is DerivedQuantity.LOG_ODDS_RATIO:
        return med
    if q is DerivedQuantity.ODDS_RATIO:
        return math.log(med)
    return 0.0


def elicit_prior(spec: QuantileSpec, q, beta_prior: tuple[float, float] = (0.0, 1.0),
                 start: tuple[float, float] | None = None) -> ElicitationResult:
    """Fit ``(mu_psi, sigma_psi)`` so the implied CDF of ``q`` matches ``spec``.

    Nelder-Mead over ``(mu_psi, log sigma_psi)``. The beta prior is held
    fixed and returned unchanged. Inconsistent quantile sets are not an
    error; the residual objective is reported instead.
    """
    q = DerivedQuantity.parse(q)
    spec.check_support(q)
    PriorParams(beta_prior[0], beta_prior[1])  # validates the beta prior
    x0 = np.array([_initial_mu(spec, q), 0.0]) if start is None else np.array([start[0], math.log(start[1])])

    def fun(x):
        if not np.all(np.isfinite(x)) or abs(x[1]) > 30:
            return math.inf
        return elicitation_objective(spec, q, x[0], math.exp(x[1]), beta_prior)

    res = optimize.minimize(
        fun, x0, method="Nelder-Mead",
        options={"xatol": SIMPLEX_TOL, "fatol": OBJECTIVE_TOL, "maxiter": MAX_ITER, "maxfev": 4 * MAX_ITER,
                 "initial_simplex": [x0, x0 + [0.5, 0.0], x0 + [0.0, -0.5]]},
    )
    best = PriorParams(beta_prior[0], beta_prior[1], float(res.x[0]), float(math.exp(res.x[1])))
    if not res.success:
        raise ElicitationError(
            f"elicitation did not converge after {res.nit} iterations: {res.message}",
            best=best, objective=float(res.fun),
        )
    return ElicitationResult(best, float(res.fun), q, spec, int(res.nit))
