#!/usr/bin/env python3
"""Walk through one run of the two-inhibitor network.

Every output whose input fires starts out firing.  With both inhibitors on,
each of them is a fair coin each round, so the crowd roughly halves until one
output is left; then only the stability inhibitor stays on and the winner
keeps firing.
"""

# %%
import numpy as np

from snnwta import build_two_inhibitor
from snnwta.model import Configuration, init_round_zero, output_potential, sigmoid_prob, step_round

n = 64
spec = build_two_inhibitor(n)
print(spec.provenance, "lambda =", spec.lam)

# %% potentials the construction is built around
for z, label in [([1, 1], "both inhibitors"), ([1, 0], "stability only"), ([0, 0], "none")]:
    pw = output_potential(spec, 1, 1, z)
    pl = output_potential(spec, 1, 0, z)
    print(f"{label:16s} winner pot {pw:+.1f} p={sigmoid_prob(pw, spec.lam):.3g}   "
          f"silent pot {pl:+.1f} p={sigmoid_prob(pl, spec.lam):.3g}")

# %% one trajectory, neuron by neuron
rng = np.random.default_rng(3)
x = np.ones(n, dtype=np.uint8)
cfg = init_round_zero(spec, x, np.ones(n), rng)
for t in range(1, 25):
    cfg = step_round(spec, cfg, rng)
    fired = np.flatnonzero(cfg.y)
    print(f"t={t:2d}  firing={len(fired):2d}  z={cfg.z.tolist()}  " + (f"winner={fired[0]}" if len(fired) == 1 else ""))

# %% a reset: once every output drops out the inhibitors fall silent and each output
# with a firing input restarts as a fair coin (w_x - b_out = 0)
cfg = Configuration(x, np.zeros(n), np.zeros(2))
print("after an all-silent round:", int(step_round(spec, cfg, rng).y.sum()), "outputs fire")
