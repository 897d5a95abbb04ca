"""
Probabilistic sharing through a W state
=======================================

With a|gge> + b|geg> + ic|egg> as the resource the designee finishes with a
resonant Jaynes-Cummings step in an empty cavity, tuned so that a photon-free
cavity heralds success.  The total success probability is 2|c|^2.
"""

import math

from cavityqis import PROBE_SECRET, WCoefficients, reconstruction_time, run_w_exact
from cavityqis.analysis import sweep_success_vs_c

w = WCoefficients(0.8, math.sqrt(1 - 0.64 - 0.09), 0.3)
print("g t for Charlie:", reconstruction_time(w, "charlie"))
print("g t for Bob:    ", reconstruction_time(w, "bob"))

results, p = run_w_exact(PROBE_SECRET, w, "charlie")
print(f"success {p:.6f}, 2|c|^2 = {w.success_probability:.6f}")

# failures: a photon left in the cavity, or the helper's outcome stranded the designee
for r in results:
    tag = r.correction if r.success else ("photon" if r.photons else "stranded")
    print(f"  {r.alice}/{r.helper}/n={r.photons}  p={r.probability:.4f}  {tag}")

# the symmetric W state is optimal under a = b
opt = WCoefficients.from_c(1 / math.sqrt(3))
print("a = b = c:", run_w_exact(PROBE_SECRET, opt, "bob")[1])

for row in sweep_success_vs_c(PROBE_SECRET, [0.0, 0.2, 0.4, 1 / math.sqrt(3)]).rows:
    print(f"c = {row.c:.4f}  P = {row.exact:.6f}")
