"""Data model and log-likelihood / log-prior kernels for the two-proportion test.

The two success probabilities are tied to a grand mean of the log odds
(``beta``) and a log odds ratio (``psi``)::

    logit(p1) = beta - psi / 2
    logit(p2) = beta + psi / 2

All kernels accept numpy arrays and broadcast, which lets the quadrature and
importance-sampling code evaluate them on whole grids at once.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import special, stats

LOG_2PI = math.log(2.0 * math.pi)


class Hypothesis(str, enum.Enum):
    H0 = "H0"
    H1 = "H1"
    HPLUS = "H+"
    HMINUS = "H-"

    @classmethod
    def parse(cls, value: "str | Hypothesis") -> "Hypothesis":
        if isinstance(value, Hypothesis):
            return value
        key = str(value).strip().lower().replace("hplus", "h+").replace("hminus", "h-")
        for h in cls:
            if h.value.lower() == key:
                return h
        raise ValueError(f"unknown hypothesis {value!r}")

    @property
    def sign(self) -> int:
        """+1 for H+, -1 for H-, 0 otherwise."""
        return {Hypothesis.HPLUS: 1, Hypothesis.HMINUS: -1}.get(self, 0)


@dataclass(frozen=True)
class TrialData:
    """Aggregated counts: ``y`` successes out of ``n`` trials per group."""

    y1: int
    n1: int
    y2: int
    n2: int

    def __post_init__(self):
        for name in ("y1", "n1", "y2", "n2"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("n1 and n2 must be at least 1")
        if not (0 <= self.y1 <= self.n1):
            raise ValueError(f"y1 must lie in [0, n1], got y1={self.y1}, n1={self.n1}")
        if not (0 <= self.y2 <= self.n2):
            raise ValueError(f"y2 must lie in [0, n2], got y2={self.y2}, n2={self.n2}")

    @property
    def n_total(self) -> int:
        return self.n1 + self.n2

    def swapped(self) -> "TrialData":
        return TrialData(self.y2, self.n2, self.y1, self.n1)

    def as_dict(self) -> dict:
        return {"y1": self.y1, "n1": self.n1, "y2": self.y2, "n2": self.n2}


class SequentialDataset:
    """Cumulative counts after each single observation.

    Each row holds ``(y1, n1, y2, n2)`` after one more observation arrived in
    one of the groups. Leading rows may have an empty group; those rows are
    kept for bookkeeping but cannot be analysed on their own.
    """

    def __init__(self, rows: Iterable[Iterable[int]]):
        arr = np.asarray([tuple(r) for r in rows], dtype=np.int64)
        if arr.ndim != 2 or arr.shape[1] != 4 or arr.shape[0] == 0:
            raise ValueError("sequential data needs a non-empty list of (y1, n1, y2, n2) rows")
        self._rows = arr
        self._validate()

    def _validate(self):
        y1, n1, y2, n2 = self._rows.T
        bad = (y1 < 0) | (y2 < 0) | (y1 > n1) | (y2 > n2)
        if bad.any():
            i = int(np.argmax(bad))
            raise ValueError(f"row {i}: counts must satisfy 0 <= y <= n")
        if n1[0] + n2[0] < 1:
            raise ValueError("row 0: no observations")
        dn1, dn2 = np.diff(n1), np.diff(n2)
        dy1, dy2 = np.diff(y1), np.diff(y2)
        ok = (
            (dn1 >= 0) & (dn2 >= 0) & (dn1 + dn2 == 1)
            & (dy1 >= 0) & (dy2 >= 0) & (dy1 <= dn1) & (dy2 <= dn2)
        )
        if not ok.all():
            i = int(np.argmin(ok)) + 1
            raise ValueError(
                f"row {i}: not cumulative (each row must add exactly one observation "
                "to one group, with successes only in that group)"
            )

    def __len__(self) -> int:
        return self._rows.shape[0]

    def __getitem__(self, i: int) -> TrialData:
        return TrialData(*(int(v) for v in self._rows[i]))

    @property
    def counts(self) -> np.ndarray:
        """Read-only ``(rows, 4)`` view of the cumulative counts."""
        view = self._rows.view()
        view.flags.writeable = False
        return view

    def is_analysable(self, i: int) -> bool:
        return bool(self._rows[i, 1] >= 1 and self._rows[i, 3] >= 1)

    def n_total(self, i: int) -> int:
        return int(self._rows[i, 1] + self._rows[i, 3])

    def final(self) -> TrialData:
        return self[len(self) - 1]

    @classmethod
    def from_observations(cls, groups: Iterable[int], outcomes: Iterable[int]) -> "SequentialDataset":
        """Build cumulative rows from a stream of ``(group, outcome)`` pairs.

        ``group`` is 1 or 2, ``outcome`` is 0 or 1.
        """
        y = [0, 0, 0, 0]
        rows = []
        for g, o in zip(groups, outcomes):
            if g not in (1, 2) or o not in (0, 1):
                raise ValueError(f"bad observation (group={g}, outcome={o})")
            k = 0 if g == 1 else 2
            y[k] += o
            y[k + 1] += 1
            rows.append(tuple(y))
        return cls(rows)


@dataclass(frozen=True)
class ModelParams:
    beta: float
    psi: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and math.isfinite(self.psi)):
            raise ValueError("beta and psi must be finite")


@dataclass(frozen=True)
class PriorParams:
    """Normal priors ``beta ~ N(mu_beta, sigma_beta^2)``, ``psi ~ N(mu_psi, sigma_psi^2)``."""

    mu_beta: float = 0.0
    sigma_beta: float = 1.0
    mu_psi: float = 0.0
    sigma_psi: float = 1.0

    def __post_init__(self):
        for name in ("mu_beta", "sigma_beta", "mu_psi", "sigma_psi"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.sigma_beta <= 0 or self.sigma_psi <= 0:
            raise ValueError("prior standard deviations must be positive")

    def with_psi(self, mu_psi: float, sigma_psi: float) -> "PriorParams":
        return PriorParams(self.mu_beta, self.sigma_beta, mu_psi, sigma_psi)

    def as_dict(self) -> dict:
        return {
            "mu_beta": self.mu_beta,
            "sigma_beta": self.sigma_beta,
            "mu_psi": self.mu_psi,
            "sigma_psi": self.sigma_psi,
        }

    def log_mass_positive(self) -> float:
        """log P(psi > 0) under the untruncated prior."""
        return float(stats.norm.logsf(0.0, self.mu_psi, self.sigma_psi))

    def log_mass_negative(self) -> float:
        """log P(psi < 0) under the untruncated prior."""
        return float(stats.norm.logcdf(0.0, self.mu_psi, self.sigma_psi))


_PROB_TOL = 1e-12


@dataclass(frozen=True)
class HypothesisProbs:
    """Probability mass over the four hypotheses."""

    p_h0: float = 0.5
    p_h1: float = 0.0
    p_hplus: float = 0.25
    p_hminus: float = 0.25

    def __post_init__(self):
        vals = [float(v) for v in (self.p_h0, self.p_h1, self.p_hplus, self.p_hminus)]
        if any(not (0.0 <= v <= 1.0) for v in vals):
            raise ValueError("hypothesis probabilities must lie in [0, 1]")
        if abs(math.fsum(vals) - 1.0) > _PROB_TOL:
            raise ValueError(f"hypothesis probabilities must sum to 1, got {math.fsum(vals)!r}")
        for name, v in zip(("p_h0", "p_h1", "p_hplus", "p_hminus"), vals):
            object.__setattr__(self, name, v)

    # Presets mirroring the common test flavours.
    @classmethod
    def default(cls) -> "HypothesisProbs":
        return cls(0.5, 0.0, 0.25, 0.25)

    @classmethod
    def undirected(cls) -> "HypothesisProbs":
        return cls(0.5, 0.5, 0.0, 0.0)

    @classmethod
    def positive(cls) -> "HypothesisProbs":
        return cls(0.5, 0.0, 0.5, 0.0)

    @classmethod
    def negative(cls) -> "HypothesisProbs":
        return cls(0.5, 0.0, 0.0, 0.5)

    @classmethod
    def direction(cls) -> "HypothesisProbs":
        return cls(0.0, 0.0, 0.5, 0.5)

    def __getitem__(self, h) -> float:
        h = Hypothesis.parse(h)
        return {
            Hypothesis.H0: self.p_h0,
            Hypothesis.H1: self.p_h1,
            Hypothesis.HPLUS: self.p_hplus,
            Hypothesis.HMINUS: self.p_hminus,
        }[h]

    def as_dict(self) -> dict:
        return {h.value: self[h] for h in Hypothesis}

    @classmethod
    def from_mapping(cls, mapping) -> "HypothesisProbs":
        probs = {Hypothesis.parse(k): float(v) for k, v in mapping.items()}
        return cls(*(probs.get(h, 0.0) for h in Hypothesis))


def logistic(x):
    return special.expit(x)


def logit(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("logit is only defined on the open interval (0, 1)")
    out = special.logit(p)
    return out if out.ndim else float(out)


def probs_from_params(params: ModelParams) -> tuple[float, float]:
    b, s = params.beta, params.psi
    return float(logistic(b - s / 2.0)), float(logistic(b + s / 2.0))


def params_from_probs(p1: float, p2: float) -> ModelParams:
    l1, l2 = logit(p1), logit(p2)
    return ModelParams(beta=0.5 * (l1 + l2), psi=l2 - l1)


def log_likelihood_arrays(data: TrialData, beta, psi):
    """Binomial log likelihood without the binomial coefficients.

    ``log_expit`` keeps the result finite for large ``|beta +- psi/2|``.
    """
    a1 = np.subtract(beta, np.multiply(psi, 0.5))
    a2 = np.add(beta, np.multiply(psi, 0.5))
    out = (
        data.y1 * special.log_expit(a1)
        + (data.n1 - data.y1) * special.log_expit(-a1)
        + data.y2 * special.log_expit(a2)
        + (data.n2 - data.y2) * special.log_expit(-a2)
    )
    return out


def log_likelihood(data: TrialData, params: ModelParams) -> float:
    return float(log_likelihood_arrays(data, params.beta, params.psi))


def log_normal_pdf(x, mu, sigma):
    z = (np.asarray(x, dtype=float) - mu) / sigma
    return -0.5 * LOG_2PI - math.log(sigma) - 0.5 * z * z


def log_psi_density(psi, prior: PriorParams, sign: int = 0):
    """Log density of ``psi`` under the (possibly truncated) normal prior.

    ``sign`` is +1 (support psi > 0), -1 (psi < 0) or 0 (no truncation).
    Values outside the support get ``-inf``.
    """
    psi = np.asarray(psi, dtype=float)
    out = log_normal_pdf(psi, prior.mu_psi, prior.sigma_psi)
    if sign > 0:
        out = np.where(psi > 0, out - prior.log_mass_positive(), -np.inf)
    elif sign < 0:
        out = np.where(psi < 0, out - prior.log_mass_negative(), -np.inf)
    return out if out.ndim else float(out)


def log_prior_density(params: ModelParams, prior: PriorParams, h) -> float:
    h = Hypothesis.parse(h)
    lb = float(log_normal_pdf(params.beta, prior.mu_beta, prior.sigma_beta))
    if h is Hypothesis.H0:
        return lb
    return lb + float(log_psi_density(params.psi, prior, h.sign))
