"""Acceptance criteria at their stated tolerances.

Each test records one ``criterion N: PASS|FAIL ...`` line; the lines are
printed in the pytest terminal summary and by ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
import warnings

import numpy as np
import pytest
from scipy import stats

from snnwta.cli import oracle_verdict
from snnwta.constructors import (
    build_alpha_inhibitor,
    build_logn_inhibitor,
    build_one_inhibitor,
    build_theta_level,
    build_two_inhibitor,
)
from snnwta.harness import (
    classify_inhibitors,
    estimate_expected_time,
    estimate_stability,
    hp_quantile,
    simulate_trials,
)
from snnwta.model import DEFAULT_NOISE_C, class_probabilities, sigmoid_prob
from snnwta.oracle import (
    collapse,
    exact_expected_satisfaction_time,
    initial_distribution,
    propagate,
    propagate_compressed,
)

SEED = 20240601
LINES: dict[int, str] = {}


def report(k: int, ok: bool, detail: str):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES[k] = line
    print(line)
    assert ok, line


def mean_et(spec, y0="ones", trials=10_000, seed=SEED):
    return estimate_expected_time(spec, np.ones(spec.n, dtype=np.uint8), y0, trials, seed)


def constructions(n):
    return [
        build_one_inhibitor(n), build_two_inhibitor(n), build_logn_inhibitor(n),
        build_theta_level(n, 1), build_theta_level(n, 2),
        build_alpha_inhibitor(n, 3), build_alpha_inhibitor(n, 4), build_alpha_inhibitor(n, 5),
    ]


# -- 1 -------------------------------------------------------------------------


def test_criterion_1_oracle_matches_simulation():
    t0 = time.perf_counter()
    res = oracle_verdict(build_two_inhibitor(4), np.ones(4), np.ones(4), 50, 100_000, SEED)
    dt = time.perf_counter() - t0
    ok = res["verdict"] == "pass" and dt <= 60
    report(1, ok, f"sup|F_mc - F_exact| = {res['sup_distance']:.5f} vs DKW(0.999) band {res['band']:.5f}; {dt:.1f}s")


# -- 2 -------------------------------------------------------------------------


def test_criterion_2_stability():
    t0 = time.perf_counter()
    kept = {s.provenance: estimate_stability(s, None, rounds=10_000, trials=1000, seed=SEED) for s in constructions(256)}
    dt = time.perf_counter() - t0
    worst = min(kept, key=kept.get)
    ok = min(kept.values()) >= 0.99 and dt <= 120
    report(2, ok, f"worst kept fraction {kept[worst]:.3f} ({worst}) over {len(kept)} networks; {dt:.1f}s")


# -- 3, 4, 9 -------------------------------------------------------------------

TWO_NS = [2**4, 2**6, 2**8, 2**10, 2**12]
LOGN_NS = [2**4, 2**8, 2**12]


def two_inhibitor_shape(means: list[float]):
    logs = np.log2(TWO_NS)
    fit = stats.linregress(logs, means)
    monotone = all(b >= a for a, b in zip(means, means[1:]))
    ratio = means[-1] / means[0]
    ok = monotone and fit.rvalue**2 >= 0.9 and 1.5 <= ratio <= 6
    return ok, f"R^2={fit.rvalue**2:.4f}, slope={fit.slope:.3f}, ET(2^12)/ET(2^4)={ratio:.2f}, non-decreasing={monotone}"


def logn_shape(means: list[float]):
    spread = max(means) / min(means)
    return spread <= 2, f"max/min={spread:.3f}"


def test_criterion_3_two_inhibitor_scaling():
    means = [mean_et(build_two_inhibitor(n))["mean"] for n in TWO_NS]
    ok, detail = two_inhibitor_shape(means)
    report(3, ok, f"means {[round(m, 2) for m in means]}; {detail}")


def test_criterion_4_constant_time():
    means = [mean_et(build_logn_inhibitor(n))["mean"] for n in LOGN_NS]
    ok, detail = logn_shape(means)
    report(4, ok, f"means {[round(m, 3) for m in means]}; {detail}")


def test_criterion_9_self_stabilisation():
    starts = ("zeros", "ones", "half")
    two = {y0: [mean_et(build_two_inhibitor(n), y0)["mean"] for n in TWO_NS] for y0 in starts}
    lg = {y0: [mean_et(build_logn_inhibitor(n), y0)["mean"] for n in LOGN_NS] for y0 in starts}
    fails = [f"two-inhibitor from {y0}" for y0 in starts if not two_inhibitor_shape(two[y0])[0]]
    fails += [f"logn from {y0}" for y0 in starts if not logn_shape(lg[y0])[0]]
    spread = max(
        max(v[i] for v in table.values()) / min(v[i] for v in table.values())
        for table in (two, lg) for i in range(len(next(iter(table.values()))))
    )
    ok = not fails and spread <= 3
    report(9, ok, f"worst across-start ratio {spread:.2f}; shape failures: {fails or 'none'}")


# -- 5 -------------------------------------------------------------------------


def test_criterion_5_hp_lower_bound():
    n = 4096
    b = simulate_trials(build_logn_inhibitor(n), np.ones(n, dtype=np.uint8), "ones", 10**6, SEED, jobs=None)
    q = hp_quantile(b.converged_at, 1 / n)
    mean = float(np.where(b.timeouts, b.max_rounds, b.converged_at).mean())
    ok = q >= math.log2(n) / 4 and mean < 10
    report(5, ok, f"(1-1/n)-quantile {q:g} vs log2(n)/4 = {math.log2(n) / 4:g}; mean {mean:.3f}")


# -- 6 -------------------------------------------------------------------------


def test_criterion_6_tradeoff_monotone():
    n = 4096
    res = [mean_et(build_alpha_inhibitor(n, a)) for a in (2, 3, 4, 5)]
    steps = []
    for a, (lo, hi) in zip((2, 3, 4), zip(res, res[1:])):
        diff = hi["mean"] - lo["mean"]
        se = math.hypot(lo["stderr"], hi["stderr"])
        steps.append(diff <= 2 * se)
    ok = all(steps)
    report(6, ok, "means " + ", ".join(f"a={a}: {r['mean']:.3f}+-{r['stderr']:.3f}" for a, r in zip((2, 3, 4, 5), res)))


# -- 7 -------------------------------------------------------------------------


def test_criterion_7_theta_construction():
    n = 4096
    th = mean_et(build_theta_level(n, 2))["mean"]
    lg = mean_et(build_logn_inhibitor(n))["mean"]
    two = mean_et(build_two_inhibitor(n))["mean"]
    ok = th <= 1.5 * lg and two / th >= 3
    report(7, ok, f"theta=2 {th:.3f}, logn {lg:.3f} (ratio {th / lg:.2f}), two-inhibitor {two:.3f} (speedup {two / th:.2f})")


# -- 8 -------------------------------------------------------------------------


def test_criterion_8_one_inhibitor_separation():
    x = y0 = np.ones(4)
    horizon = 5000
    et = {
        name: exact_expected_satisfaction_time(spec, x, y0, horizon)["expectation"]
        for name, spec in [("two", build_two_inhibitor(4)), ("c1", build_one_inhibitor(4, 1)), ("c2", build_one_inhibitor(4, 2))]
    }
    r1, r2 = et["c1"] / et["two"], et["c2"] / et["c1"]
    ok = r1 >= 3 and r2 >= 4
    report(8, ok, f"exact ET two={et['two']:.3f}, c_poly=1 {et['c1']:.3f} (x{r1:.2f}), c_poly=2 {et['c2']:.3f} (x{r2:.3f})")


# -- 10 ------------------------------------------------------------------------


def _lemma_checks(c_cls=4.0):
    problems = []
    for n in (16, 256, 4096):
        log_c = math.log2(n) ** c_cls
        for s in constructions(n):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                cl = classify_inhibitors(s, c_cls)
            for i, lab in enumerate(cl.labels):
                p = lambda k: sigmoid_prob(k * s.w_y[i] - s.b_z[i], s.lam)  # noqa: E731
                if lab == "S" and p(2) < 1 - 1 / n:
                    problems.append(f"S {s.provenance} z{i}")
                if lab == "C":
                    k = cl.k_of_z[i]
                    if p(k // 2) > 1 / log_c or p(2 * k) < 1 - 1 / log_c:
                        problems.append(f"C {s.provenance} z{i}")
            # threshold correctness
            bound = n**-DEFAULT_NOISE_C
            ks = np.arange(n + 1)
            for i, tau in enumerate(s.thresholds):
                col = s.inhibitor_table[:, i]
                if np.any(col[ks >= tau] < 1 - bound) or np.any(col[ks <= tau - 1] > bound):
                    problems.append(f"threshold {s.provenance} z{i}")
            # winner maintenance: lone active winner, same (y, z) next round
            table = s.inhibitor_table[1]
            z = (table >= 0.5).astype(int)
            pz = float(np.prod(np.where(z == 1, table, 1 - table)))
            pr = class_probabilities(s, z)
            recur = pz * pr[0] * (1 - pr[1]) ** (n - 1) * pz
            if recur < 1 - (s.alpha + n) / n**DEFAULT_NOISE_C:
                problems.append(f"maintenance {s.provenance}")
    # compressed vs exact at n=4
    for s in constructions(4):
        for x in (np.ones(4), np.array([1, 1, 0, 0])):
            d = initial_distribution(s, np.ones(4))
            for _ in range(3):
                nxt = propagate(s, x, d)
                a, b = propagate_compressed(s, collapse(s, x, d)), collapse(s, x, nxt)
                if max(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in set(a) | set(b)) > 1e-9:
                    problems.append(f"compression {s.provenance}")
                d = nxt
    return problems


def test_criterion_10_lemma_suite():
    t0 = time.perf_counter()
    problems = _lemma_checks()
    dt = time.perf_counter() - t0
    ok = not problems and dt <= 10
    report(10, ok, f"{len(problems)} violations {problems[:3]}; {dt:.2f}s")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:warnings"]))
