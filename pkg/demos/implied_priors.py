"""What a normal prior on the log odds ratio says about quantities people
actually think in: odds ratio, relative risk, absolute risk, (p1, p2)."""

import numpy as np

import abkit
from abkit import PriorParams

prior = PriorParams(0.0, 1.0, 0.74, 0.27)

for q in ("logor", "or", "rrisk", "arisk"):
    lo, med, hi = (abkit.implied_quantile(q, p, prior) for p in (0.025, 0.5, 0.975))
    print(f"{q:>6}: median {med:.4f}, 95% interval [{lo:.4f}, {hi:.4f}]")

# Restricting psi to one sign (H+ or H-) truncates and renormalises
for side in ("positive", "negative"):
    print(f"P(AR <= 0.05 | psi {side}) = {abkit.implied_cdf('arisk', 0.05, prior, side):.4f}")

# The density of the absolute risk, a short table
x = np.linspace(-0.1, 0.4, 11)
dens = [abkit.implied_pdf("arisk", v, prior) for v in x]
for v, f in zip(x, dens):
    print(f"  AR={v:+.2f}  density {f:7.3f}  " + "#" * int(f))

# p1 and p2 are dependent a priori: knowing p1 moves the belief about p2
for p1 in (0.1, 0.5, 0.9):
    grid = np.linspace(0.005, 0.995, 199)
    cond = np.array([abkit.conditional_density_p2_given_p1(p2, p1, PriorParams()) for p2 in grid])
    print(f"p1 = {p1}: conditional mode of p2 near {grid[np.argmax(cond)]:.3f}")
