#!/usr/bin/env python3
"""Expected convergence time against inhibitor count at n = 4096.

More inhibitors buy faster convergence: two inhibitors need about log n
rounds, log n inhibitors need a constant number, and the alpha and theta
constructions sit in between.
"""

# %%
import numpy as np

from snnwta import (
    build_alpha_inhibitor,
    build_logn_inhibitor,
    build_theta_level,
    build_two_inhibitor,
    estimate_expected_time,
)

n = 4096
x = np.ones(n, dtype=np.uint8)
trials = 5000

rows = [build_two_inhibitor(n)]
rows += [build_alpha_inhibitor(n, a) for a in (3, 4, 5)]
rows += [build_theta_level(n, th) for th in (3, 2)]
rows += [build_logn_inhibitor(n)]

# %%
print(f"{'network':55s} {'alpha':>5s} {'mean ET':>8s} {'stderr':>7s} {'q99':>5s}")
for spec in rows:
    r = estimate_expected_time(spec, x, "adversarial-sweep", trials, seed=1)
    print(f"{spec.provenance:55s} {spec.alpha:5d} {r['mean']:8.3f} {r['stderr']:7.3f} {r['quantiles']['q99']:5.0f}")
