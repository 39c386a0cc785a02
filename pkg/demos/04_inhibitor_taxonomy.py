#!/usr/bin/env python3
"""Label each inhibitor as stability (S), convergence (C) or negligible (R).

S inhibitors already fire when a single output fires and hold the winner in
place.  C inhibitors act as count thresholds k(z); outside [k/2, 2k] they are
essentially deterministic.
"""

# %%
import warnings

from snnwta import build_alpha_inhibitor, build_logn_inhibitor, build_theta_level, build_two_inhibitor
from snnwta import classify_inhibitors

warnings.simplefilter("ignore", RuntimeWarning)  # small-n saturation notice

for spec in [build_two_inhibitor(256), build_logn_inhibitor(256), build_theta_level(256, 2), build_alpha_inhibitor(256, 4)]:
    cl = classify_inhibitors(spec)
    print(spec.provenance)
    print("  labels:", "".join(cl.labels))
    print("  k(z):  ", {i: k for i, k in cl.k_of_z.items()})
