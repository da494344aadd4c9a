"""Two large arms (1459/2013 versus 1513/2025) and how much the conclusion
depends on the prior for the log odds ratio."""

import numpy as np

import abkit
from abkit import TrialData

SEED = 1
data = TrialData(1459, 2013, 1513, 2025)

res = abkit.ab_test(data, seed=SEED)
print(f"BF10 {res.bf('BF10'):.6f}   BF+0 {res.bf('BF+0'):.6f}   BF-0 {res.bf('BF-0'):.6f}")
print("posterior:", {h: round(p, 4) for h, p in res.posterior_probs.as_dict().items()})
print("MC standard errors of the one-sided log marginals:",
      {h.value: round(se, 4) for h, se in res.mc_se.items() if se})

# Sweep the psi prior: location from 0 to 0.3, spread from 0.25 to 1
mu = np.linspace(0.0, 0.30, 13)
sigma = np.linspace(0.25, 1.0, 16)
grid = abkit.robustness_grid(data, "BF0+", mu, sigma, seed=SEED)

print("BF0+ over the grid: min %.3f, max %.3f" % (grid.bf.min(), grid.bf.max()))
# Every cell stays between 1/3 and 3: the evidence is weak whichever prior is used
print("all cells in (1/3, 3):", bool(np.all((grid.bf > 1 / 3) & (grid.bf < 3))))

# A coarse text rendering, rows are mu_psi and columns sigma_psi
print("        " + " ".join(f"{s:5.2f}" for s in sigma[::3]))
for i in range(0, mu.size, 3):
    print(f"mu={mu[i]:.3f} " + " ".join(f"{v:5.2f}" for v in grid.bf[i, ::3]))
