"""Command-line front end.

Subcommands::

    snnwta build VARIANT --n N [--alpha A] [--theta T] [--c1 C] [--c-prob P] [--c-poly K]
    snnwta simulate SPEC [--x-density D] [--y0 POLICY] [--trials M] [--seed S] [--delta D]
    snnwta sweep PLAN [--out CSV]
    snnwta classify SPEC [--c C]
    snnwta oracle-compare SPEC [--horizon T] [--trials M] [--seed S]

Exit codes: 0 success, 1 failed oracle verdict, 2 usage or validation error.
All output is JSON except ``sweep``, which appends CSV rows.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from .constructors import (
    BUILDERS,
    DEFAULT_C_POLY,
    DEFAULT_C_PROB_ALPHA,
    DEFAULT_C_PROB_THETA,
    ConstructionError,
)
from .harness import (
    Y0_POLICIES,
    classify_inhibitors,
    default_window,
    estimate_expected_time,
    hp_quantile,
    initial_outputs,
    make_input,
    simulate_trials,
)
from .model import DEFAULT_C1, NetworkSpec, SpecValidationError
from .oracle import OracleCapacityError, exact_first_satisfaction_cdf

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SWEEP_FIELDS = [
    "variant", "n", "alpha", "theta", "input_density", "y0_policy",
    "trials", "mean_et", "stderr", "q99", "timeout_fraction",
]
CHECKSUM_FIELD = "checksum"
# Cells are identified by everything before the results.
CELL_KEY = SWEEP_FIELDS[:7]
DEFAULT_CONFIDENCE = 0.999


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    s = int(text)
    if not 0 <= s < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return s


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _density(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"density must lie in [0, 1], got {text}")
    return v


# ---------------------------------------------------------------------------
# building blocks shared with tests


def build_spec(variant: str, n: int, alpha=None, theta=None, c1=DEFAULT_C1, c_prob=None, c_poly=None) -> NetworkSpec:
    if variant not in BUILDERS:
        raise UsageError(f"unknown variant {variant!r}; choose from {', '.join(BUILDERS)}")
    if variant == "alpha":
        if alpha is None:
            raise UsageError("variant 'alpha' needs --alpha")
        return BUILDERS[variant](n, alpha, c1=c1, c_prob=DEFAULT_C_PROB_ALPHA if c_prob is None else c_prob)
    if variant == "theta-level":
        if theta is None:
            raise UsageError("variant 'theta-level' needs --theta")
        return BUILDERS[variant](n, theta, c1=c1, c_prob=DEFAULT_C_PROB_THETA if c_prob is None else c_prob)
    if variant == "one-inhibitor":
        return BUILDERS[variant](n, c_poly=DEFAULT_C_POLY if c_poly is None else c_poly, c1=c1)
    return BUILDERS[variant](n, c1=c1)


def load_spec(path: str) -> NetworkSpec:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read spec {path}: {exc}") from exc
    try:
        return NetworkSpec.from_json(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"spec {path} is not valid JSON: {exc}") from exc


def dkw_epsilon(trials: int, confidence: float = DEFAULT_CONFIDENCE) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band for an empirical CDF."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * trials))


def empirical_first_hit_cdf(spec: NetworkSpec, x, y0, horizon: int, trials: int, seed: int, jobs=None) -> np.ndarray:
    """Fraction of trials whose first satisfying round ``t >= 1`` is ``<= t``, for ``t = 1..horizon``."""
    batch = simulate_trials(
        spec, x, y0, trials, seed, max_rounds=horizon, window=min(default_window(spec.n), horizon), jobs=jobs
    )
    hits = batch.first_hit[batch.first_hit > 0]
    counts = np.bincount(np.minimum(hits, horizon + 1), minlength=horizon + 2)[1 : horizon + 1]
    return np.cumsum(counts) / trials


def oracle_verdict(
    spec: NetworkSpec,
    x,
    y0,
    horizon: int,
    trials: int,
    seed: int,
    confidence: float = DEFAULT_CONFIDENCE,
    jobs=None,
    simulated: NetworkSpec | None = None,
) -> dict:
    """Compare the exact first-satisfaction CDF of ``spec`` with a Monte Carlo one.

    ``simulated`` (default ``spec``) is the network actually sampled; tests
    pass a corrupted copy to check that the comparison can fail.
    """
    exact = exact_first_satisfaction_cdf(spec, x, y0, horizon)
    emp = empirical_first_hit_cdf(simulated or spec, x, y0, horizon, trials, seed, jobs)
    gaps = np.abs(emp - exact)
    band = dkw_epsilon(trials, confidence)
    sup = float(gaps.max())
    return {
        "verdict": "pass" if sup <= band else "fail",
        "sup_distance": sup,
        "argmax_round": int(gaps.argmax()) + 1,
        "band": band,
        "confidence": confidence,
        "horizon": horizon,
        "trials": trials,
        "seed": seed,
        "exact_cdf": exact.tolist(),
        "empirical_cdf": emp.tolist(),
        "provenance": spec.provenance,
    }


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# sweep


def _row_checksum(row: dict) -> str:
    payload = ",".join(str(row[f]) for f in SWEEP_FIELDS)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _load_plan(path: str) -> dict:
    try:
        plan = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read plan {path}: {exc}") from exc
    if not isinstance(plan, dict):
        raise UsageError("plan must be a JSON object")
    variants = plan.get("variant")
    variants = [variants] if isinstance(variants, str) else variants
    if not variants:
        raise UsageError("plan needs a variant")
    plan["variant"] = list(variants)
    for axis, default in [("n", None), ("input_density", [1.0]), ("y0_policy", ["ones"])]:
        vals = plan.get(axis, default)
        if not isinstance(vals, list) or not vals:
            raise UsageError(f"plan axis {axis!r} must be a non-empty list")
        plan[axis] = vals
    for axis in ("alpha", "theta"):
        vals = plan.get(axis, [None])
        if not isinstance(vals, list) or not vals:
            raise UsageError(f"plan axis {axis!r} must be a non-empty list")
        plan[axis] = vals
    trials = plan.get("trials", 1000)
    if not isinstance(trials, int) or trials < 1:
        raise UsageError("plan trials must be an integer >= 1")
    plan["trials"] = trials
    plan.setdefault("seed", 0)
    return plan


def sweep_cells(plan: dict) -> list[dict]:
    """Cartesian product of the plan axes; ``alpha``/``theta`` only vary for the variant that uses them."""
    cells = []
    for variant in plan["variant"]:
        alphas = plan["alpha"] if variant == "alpha" else [None]
        thetas = plan["theta"] if variant == "theta-level" else [None]
        for n, a, th, dens, y0 in itertools.product(
            plan["n"], alphas, thetas, plan["input_density"], plan["y0_policy"]
        ):
            cells.append(dict(variant=variant, n=n, alpha=a, theta=th, input_density=dens,
                              y0_policy=y0, trials=plan["trials"]))
    return cells


def _cell_key(row: dict) -> tuple:
    return tuple(_fmt(row[f]) for f in CELL_KEY)


def _read_completed(path: Path) -> list[dict]:
    """Rows of an existing sweep file whose checksum verifies; partial or corrupted rows are dropped."""
    if not path.exists():
        return []
    rows = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_FIELDS + [CHECKSUM_FIELD]:
            raise UsageError(f"{path} exists but does not have the sweep header")
        for row in reader:
            if None in row.values() or _row_checksum(row) != row[CHECKSUM_FIELD]:
                continue
            rows.append(row)
    return rows


def run_sweep(plan: dict, out: Path, jobs=None, log=sys.stderr) -> int:
    """Fill ``out`` with one row per cell, skipping cells already present. Returns the number computed."""
    done = _read_completed(out)
    have = {_cell_key(r) for r in done}
    # Rewrite the verified rows so a torn last line does not linger.
    with out.open("w", newline="") as fh:
        w = csv.DictWriter(fh, SWEEP_FIELDS + [CHECKSUM_FIELD])
        w.writeheader()
        w.writerows(done)
    computed = 0
    for cell in sweep_cells(plan):
        row = {k: _fmt(v) for k, v in cell.items()}
        if _cell_key(row) in have:
            continue
        spec = build_spec(cell["variant"], cell["n"], cell["alpha"], cell["theta"],
                          plan.get("c1", DEFAULT_C1), plan.get("c_prob"), plan.get("c_poly"))
        x = make_input(cell["n"], cell["input_density"])
        agg = estimate_expected_time(spec, x, cell["y0_policy"], cell["trials"], plan["seed"],
                                     plan.get("max_rounds"), plan.get("window"), jobs)
        row.update(mean_et=_fmt(agg["mean"]), stderr=_fmt(agg["stderr"]),
                   q99=_fmt(agg["quantiles"]["q99"]), timeout_fraction=_fmt(agg["timeout_fraction"]))
        row[CHECKSUM_FIELD] = _row_checksum(row)
        with out.open("a", newline="") as fh:
            csv.DictWriter(fh, SWEEP_FIELDS + [CHECKSUM_FIELD]).writerow(row)
        have.add(_cell_key(row))
        computed += 1
        print(f"{row['variant']} n={row['n']} alpha={row['alpha']} theta={row['theta']} "
              f"-> {agg['mean']:.3f}", file=log)
    return computed


# ---------------------------------------------------------------------------
# commands


def cmd_build(args) -> int:
    spec = build_spec(args.variant, args.n, args.alpha, args.theta, args.c1, args.c_prob, args.c_poly)
    _emit(spec.to_json() + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = load_spec(args.spec)
    x = make_input(spec.n, args.x_density)
    y0 = args.y0
    out = estimate_expected_time(spec, x, y0, args.trials, args.seed, args.max_rounds, args.window, args.jobs)
    out["x_density"] = args.x_density
    if args.delta is not None:
        if args.trials < 10.0 / args.delta:
            raise UsageError(f"--delta {args.delta} needs at least {math.ceil(10 / args.delta)} trials")
        batch = simulate_trials(spec, x, y0, args.trials, args.seed, args.max_rounds, args.window, args.jobs)
        hp = hp_quantile(batch.converged_at, args.delta)
        out["delta"] = args.delta
        out["hp_time"] = hp if math.isfinite(hp) else None
        if args.per_trial:
            out["per_trial"] = [r.to_dict() for r in batch.results()]
    elif args.per_trial:
        batch = simulate_trials(spec, x, y0, args.trials, args.seed, args.max_rounds, args.window, args.jobs)
        out["per_trial"] = [r.to_dict() for r in batch.results()]
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    plan = _load_plan(args.plan)
    out = args.out or plan.get("out")
    if not out:
        raise UsageError("sweep needs --out or an 'out' entry in the plan")
    run_sweep(plan, Path(out), args.jobs)
    return EXIT_OK


def cmd_classify(args) -> int:
    spec = load_spec(args.spec)
    _emit(_dump(classify_inhibitors(spec, args.c).to_dict()), args.out)
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    spec = load_spec(args.spec)
    x = make_input(spec.n, args.x_density)
    if args.y0 == "random":
        raise UsageError("oracle-compare needs a deterministic --y0 (zeros, ones or half)")
    y_vec = initial_outputs(spec.n, args.y0)
    res = oracle_verdict(spec, x, y_vec, args.horizon, args.trials, args.seed, args.confidence, args.jobs)
    _emit(_dump(res), args.out)
    return EXIT_OK if res["verdict"] == "pass" else EXIT_FAIL


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snnwta", description="Stochastic spiking winner-take-all networks.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sim=True):
        sp.add_argument("--out", help="write output here instead of stdout")
        if sim:
            sp.add_argument("--x-density", type=_density, default=1.0, help="fraction of firing inputs")
            sp.add_argument("--y0", choices=Y0_POLICIES, default="ones", help="initial output policy")
            sp.add_argument("--trials", type=_positive_int, default=1000)
            sp.add_argument("--seed", type=_seed, default=0)
            sp.add_argument("--jobs", type=_positive_int, default=1, help="worker processes (WTA_JOBS overrides)")

    b = sub.add_parser("build", help="emit a constructed network as JSON")
    b.add_argument("variant", choices=list(BUILDERS))
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--alpha", type=int)
    b.add_argument("--theta", type=int)
    b.add_argument("--c1", type=float, default=DEFAULT_C1)
    b.add_argument("--c-prob", type=float)
    b.add_argument("--c-poly", type=float)
    common(b, sim=False)
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("simulate", help="estimate convergence time of a spec")
    s.add_argument("spec", help="spec JSON path, or - for stdin")
    common(s)
    s.add_argument("--max-rounds", type=_positive_int)
    s.add_argument("--window", type=_positive_int)
    s.add_argument("--delta", type=float, help="also report the (1-delta)-quantile")
    s.add_argument("--per-trial", action="store_true", help="include per-trial records")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a JSON sweep plan into a resumable CSV")
    w.add_argument("plan")
    w.add_argument("--out")
    w.add_argument("--jobs", type=_positive_int, default=1)
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("classify", help="label inhibitors S, C or R")
    c.add_argument("spec")
    c.add_argument("--c", type=float, default=4.0)
    common(c, sim=False)
    c.set_defaults(func=cmd_classify)

    o = sub.add_parser("oracle-compare", help="exact vs Monte Carlo first-satisfaction CDF")
    o.add_argument("spec")
    common(o)
    o.add_argument("--horizon", type=_positive_int, default=50)
    o.add_argument("--confidence", type=float, default=DEFAULT_CONFIDENCE)
    o.set_defaults(func=cmd_oracle_compare)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, SpecValidationError, ConstructionError, OracleCapacityError, ValueError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
