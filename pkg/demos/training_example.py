"""Resilience training: does a short course raise the proportion of employees
who pass a stress test?  500 employees per arm, 249 and 269 successes."""

import numpy as np

import abkit
from abkit import HypothesisProbs, PriorParams, QuantileSpec

SEED = 1

# The bundled dataset holds the cumulative counts after every employee.
seq = abkit.load_seqdata()
data = seq.final()
print("final counts:", data)

# Prior knowledge: an absolute risk increase of about 15 points, plausibly
# anywhere between 2.5 and 27.5 points.
spec = QuantileSpec(values=(0.025, 0.15, 0.275), probs=(0.025, 0.5, 0.975))
fit = abkit.elicit_prior(spec, "arisk")
prior = fit.prior
print(f"elicited psi prior: N({prior.mu_psi:.4f}, {prior.sigma_psi:.4f}^2)")

# The three targets cannot be matched exactly by one normal prior on psi
for v, target, got in zip(spec.values, spec.probs, fit.implied_probs()):
    print(f"  P(AR <= {v}) target {target:.3f}  fitted {got:.4f}")

# Default test: H0 against the two one-sided alternatives
res = abkit.ab_test(data, prior, seed=SEED)
for t in ("BF10", "BF+0", "BF-0"):
    print(f"{t}: {res.bf(t):.7g}")
for h, p in res.posterior_probs.as_dict().items():
    print(f"P({h} | data) = {p:.4f}")

# The informed H+ predicted far larger effects than observed, so H- ends up
# ahead of H+ even though the training arm did slightly better.

# Parameter estimates under H1
draws = abkit.sir_sample("H1", data, prior, seed=SEED)
for col in ("arisk", "logor", "p1", "p2"):
    med, (lo, hi) = abkit.summarize(draws.column(col))
    print(f"{col:>6}: median {med:.3f}, 95% CI [{lo:.3f}, {hi:.3f}]")

# Same analysis with the default standard-normal prior as a robustness check
default = abkit.ab_test(data, PriorParams(), seed=SEED)
print("default prior posteriors:", {h: round(p, 4) for h, p in default.posterior_probs.as_dict().items()})

# How the evidence developed as employees were tested
trace = abkit.sequential_analysis(seq, prior, thin=100, seed=SEED)
rows = trace.as_array()
print(" n_total   P(H0)   P(H+)   P(H-)")
for n, p0, _, pp, pm in rows:
    print(f"{int(n):8d}  {p0:.3f}   {pp:.3f}   {pm:.3f}")

# Undirected test of H1 against H0 only
undirected = abkit.ab_test(data, prior, HypothesisProbs.undirected(), seed=SEED)
print("undirected: P(H1) = %.4f" % undirected.posterior_probs.p_h1)
assert np.isclose(sum(undirected.posterior_probs.as_dict().values()), 1.0)
