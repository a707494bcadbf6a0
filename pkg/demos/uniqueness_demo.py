"""Uniqueness of the equilibrium: sufficient condition and its limits.

Shows the analytic uniqueness probability for circulant channels against a
quick Monte Carlo, then loads the stress fixture where the sufficient
condition fails and exhibits a pair of strategy profiles on which the
best-response mapping expands distances.
"""

import numpy as np

from fdtwoway.channel import db_to_linear
from fdtwoway.nash import (circulant_uniqueness_probability,
                           contraction_check, counterexample_channel,
                           counterexample_probe_pairs, uniqueness_condition)

M = 3
beta = db_to_linear(-60.0)
print("circulant channels, analytic P(unique) over the self-interference")
print("ratio gamma (both nodes, M = 3):")
for gamma_db in range(-80, 1, 10):
    gamma = db_to_linear(gamma_db)
    p = circulant_uniqueness_probability(M, gamma, beta)
    bar = "#" * int(round(40 * p))
    print(f"  gamma = {gamma_db:4d} dB   P = {p:.4f}  {bar}")

print("\nstress fixture (2 transmit antennas, unit gains, beta = 1):")
fix = counterexample_channel()
rep = uniqueness_condition(fix)
print(f"  spectral radii : ({rep.bound_radius[0]:.6f}, "
      f"{rep.bound_radius[1]:.6f})")
print(f"  alpha product  : {rep.product:.3f}  ->  holds = {rep.holds}")

pairs = counterexample_probe_pairs(2000, np.random.default_rng(3))
res = contraction_check(fix, pairs)
print(f"  probing {len(pairs)} profile pairs near the water-filling "
      f"mode boundary:")
print(f"  max ||Phi(a)-Phi(b)|| / ||a-b|| = {res['max_ratio']:.4f}")
if res["max_ratio"] > 1.0:
    (Q1a, Q2a), _ = res["witness"]
    print("  ratio > 1: the mapping is not a contraction here, e.g. at")
    print(f"  diag(Q1) = {np.diag(Q1a).real.round(4)}, "
          f"diag(Q2) = {np.diag(Q2a).real.round(4)}")
