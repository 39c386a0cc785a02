#!/usr/bin/env python3
"""Exact first-satisfaction CDF for a 4-output network next to a simulated one.

With four outputs and two inhibitors the chain has 64 states, small enough to
propagate the full distribution round by round.
"""

# %%
import numpy as np

from snnwta import build_two_inhibitor
from snnwta.cli import dkw_epsilon, empirical_first_hit_cdf
from snnwta.oracle import exact_expected_satisfaction_time

spec = build_two_inhibitor(4)
x = y0 = np.ones(4, dtype=np.uint8)
horizon, trials = 15, 100_000

exact = exact_expected_satisfaction_time(spec, x, y0, horizon)
emp = empirical_first_hit_cdf(spec, x, y0, horizon, trials, seed=1)
band = dkw_epsilon(trials)

# %%
print(f"exact E[T] (censored at {horizon}) = {exact['expectation']:.4f}, tail {exact['tail_mass']:.2e}")
print(" t   exact     simulated  |diff|")
for t, (a, b) in enumerate(zip(exact["cdf"], emp), start=1):
    print(f"{t:2d}  {a:.5f}   {b:.5f}    {abs(a - b):.5f}")
print(f"largest gap {np.max(np.abs(np.array(exact['cdf']) - emp)):.5f}, band {band:.5f}")

# %% the one-inhibitor baseline is much slower, and gets slower with c_poly
from snnwta import build_one_inhibitor

for c in (1, 2):
    e = exact_expected_satisfaction_time(build_one_inhibitor(4, c), x, y0, 5000)["expectation"]
    print(f"one inhibitor, c_poly={c}: E[T] = {e:.3f}")
