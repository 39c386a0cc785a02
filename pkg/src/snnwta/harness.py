"""Trial runner, convergence-time estimators and inhibitor classification.

Convergence follows the WTA definition: round ``t`` converges when ``y^t`` is
a valid WTA output for ``x`` and the exact same output vector is repeated in
each of the next ``window`` rounds.  A trial times out when no such window
completes within ``max_rounds`` rounds.

Bulk estimates run on count-compressed states, vectorised over a chunk of
trials.  Chunk ``c`` draws from ``SeedSequence(seed, spawn_key=(c,))`` and
results are folded in chunk order, so they depend only on ``seed`` and the
trial count, never on the number of worker processes.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .model import (
    CLASS_AF,
    CLASS_AI,
    CLASS_NF,
    CLASS_NI,
    NetworkSpec,
    compressed_draw,
    init_round_zero,
    sigmoid_prob,
    step_round,
)

log = logging.getLogger(__name__)

__all__ = [
    "CHUNK_SIZE",
    "Y0_POLICIES",
    "ANONYMOUS_WINNER",
    "TrialResult",
    "TrialBatch",
    "InhibitorClassification",
    "wta_predicate",
    "default_window",
    "default_max_rounds",
    "make_input",
    "initial_outputs",
    "run_trial",
    "simulate_trials",
    "estimate_expected_time",
    "estimate_hp_time",
    "hp_quantile",
    "estimate_stability",
    "classify_inhibitors",
    "density_class_inputs",
]

CHUNK_SIZE = 2048
Y0_POLICIES = ("zeros", "ones", "half", "random")
ADVERSARIAL = ("zeros", "ones", "half")
#: Winner reported by compressed runs: some output with a firing input, identity not tracked.
ANONYMOUS_WINNER = -1


def wta_predicate(x, y) -> bool:
    """True iff ``y <= x`` elementwise and ``||y||_1 == min(1, ||x||_1)``."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: x has {x.shape}, y has {y.shape}")
    return bool(np.all(y <= x) and int(y.sum()) == min(1, int(x.sum())))


def default_window(n: int) -> int:
    return max(1, math.ceil(10 * math.log2(max(n, 2))))


def default_max_rounds(n: int) -> int:
    return math.ceil(50 * math.log2(max(n, 2)) ** 2)


def make_input(n: int, density: float = 1.0) -> np.ndarray:
    """Input with ``round(density * n)`` firing neurons at the lowest indices."""
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {density}")
    x = np.zeros(n, dtype=np.uint8)
    x[: int(round(density * n))] = 1
    return x


def initial_outputs(n: int, policy: str, rng: np.random.Generator | None = None) -> np.ndarray:
    if policy == "zeros":
        return np.zeros(n, dtype=np.uint8)
    if policy == "ones":
        return np.ones(n, dtype=np.uint8)
    if policy == "half":
        y = np.zeros(n, dtype=np.uint8)
        y[: n // 2] = 1
        return y
    if policy == "random":
        if rng is None:
            raise ValueError("random initial outputs need an rng")
        return rng.integers(0, 2, size=n, dtype=np.uint8)
    raise ValueError(f"unknown y0 policy {policy!r}; expected one of {Y0_POLICIES}")


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one trial.

    ``converged_at`` is ``None`` on timeout.  ``winner`` is the index of the
    maintained output, ``ANONYMOUS_WINNER`` for compressed runs, or ``None``
    when the input is empty or the trial timed out.
    """

    converged_at: int | None
    winner: int | None
    first_satisfaction: int | None
    reset_count: int

    def to_dict(self) -> dict:
        return asdict(self)


class _Tracker:
    """Convergence bookkeeping shared by the per-neuron and compressed runners."""

    def __init__(self, size: int, window: int):
        self.window = window
        self.run_start = np.full(size, -1, dtype=np.int64)
        self.converged_at = np.full(size, -1, dtype=np.int64)
        self.first_sat = np.full(size, -1, dtype=np.int64)
        self.first_hit = np.full(size, -1, dtype=np.int64)
        self.resets = np.zeros(size, dtype=np.int64)
        self.ever_fired = np.zeros(size, dtype=bool)

    def start(self, sat: np.ndarray, firing: np.ndarray):
        self.run_start[sat] = 0
        self.first_sat[sat] = 0
        self.ever_fired |= firing > 0

    def update(self, idx: np.ndarray, t: int, sat: np.ndarray, unchanged: np.ndarray, firing: np.ndarray):
        """Record round ``t`` for trials ``idx``; returns mask of trials that just converged."""
        rs = self.run_start[idx]
        keep = sat & unchanged & (rs >= 0)
        rs = np.where(keep, rs, np.where(sat, t, -1))
        self.run_start[idx] = rs
        fs = self.first_sat[idx]
        self.first_sat[idx] = np.where((fs < 0) & sat, t, fs)
        fh = self.first_hit[idx]
        self.first_hit[idx] = np.where((fh < 0) & sat, t, fh)
        self.resets[idx] += (firing == 0) & self.ever_fired[idx]
        self.ever_fired[idx] |= firing > 0
        done = (rs >= 0) & (t - rs >= self.window)
        self.converged_at[idx[done]] = rs[done]
        return done


def run_trial(
    spec: NetworkSpec,
    x,
    y0,
    seed: int,
    max_rounds: int | None = None,
    window: int | None = None,
) -> TrialResult:
    """Simulate one trial neuron by neuron from round 0."""
    window = default_window(spec.n) if window is None else int(window)
    max_rounds = default_max_rounds(spec.n) if max_rounds is None else int(max_rounds)
    if not max_rounds >= window >= 1:
        raise ValueError(f"need max_rounds >= window >= 1, got {max_rounds}, {window}")
    rng = np.random.default_rng(seed)
    if isinstance(y0, str):
        y0 = initial_outputs(spec.n, y0, rng)
    cfg = init_round_zero(spec, x, y0, rng)
    n_on = int(cfg.x.sum())
    tr = _Tracker(1, window)
    idx = np.zeros(1, dtype=np.intp)
    tr.start(np.array([wta_predicate(cfg.x, cfg.y)]), np.array([cfg.y.sum()]))
    done = window == 0
    for t in range(1, max_rounds + 1):
        nxt = step_round(spec, cfg, rng)
        sat = np.array([wta_predicate(nxt.x, nxt.y)])
        unchanged = np.array([np.array_equal(nxt.y, cfg.y)])
        done = tr.update(idx, t, sat, unchanged, np.array([nxt.y.sum()]))[0]
        cfg = nxt
        if done:
            break
    converged = int(tr.converged_at[0]) if done else None
    winner = None
    if converged is not None and n_on >= 1:
        winner = int(np.flatnonzero(cfg.y)[0])
    first = int(tr.first_sat[0])
    return TrialResult(
        converged_at=converged,
        winner=winner,
        first_satisfaction=first if first >= 0 else None,
        reset_count=int(tr.resets[0]),
    )


# ---------------------------------------------------------------------------
# Compressed, chunked batches


@dataclass
class TrialBatch:
    """Per-trial arrays from :func:`simulate_trials`; ``-1`` marks "never"."""

    converged_at: np.ndarray
    first_satisfaction: np.ndarray
    first_hit: np.ndarray
    reset_count: np.ndarray
    max_rounds: int
    window: int
    seed: int
    has_input: bool = True

    def __len__(self):
        return len(self.converged_at)

    @property
    def timeouts(self) -> np.ndarray:
        return self.converged_at < 0

    def results(self) -> list[TrialResult]:
        out = []
        for c, f, r in zip(self.converged_at, self.first_satisfaction, self.reset_count):
            conv = int(c) if c >= 0 else None
            out.append(
                TrialResult(
                    converged_at=conv,
                    winner=ANONYMOUS_WINNER if conv is not None and self.has_input else None,
                    first_satisfaction=int(f) if f >= 0 else None,
                    reset_count=int(r),
                )
            )
        return out


def _initial_counts(x: np.ndarray, y0, size: int, rng: np.random.Generator) -> np.ndarray:
    n_on = int(x.sum())
    n_off = len(x) - n_on
    counts = np.empty((size, 4), dtype=np.int64)
    if isinstance(y0, str) and y0 == "random":
        af = rng.binomial(n_on, 0.5, size)
        nf = rng.binomial(n_off, 0.5, size)
    else:
        y = initial_outputs(len(x), y0) if isinstance(y0, str) else np.asarray(y0, dtype=np.uint8)
        if len(y) != len(x):
            raise ValueError("y0 must have the same length as x")
        xb = x.astype(bool)
        af = np.full(size, int(np.sum(xb & (y == 1))))
        nf = np.full(size, int(np.sum(~xb & (y == 1))))
    counts[:, CLASS_AF] = af
    counts[:, CLASS_AI] = n_on - af
    counts[:, CLASS_NF] = nf
    counts[:, CLASS_NI] = n_off - nf
    return counts


def _is_wta(n_on: int, af: np.ndarray, nf: np.ndarray) -> np.ndarray:
    return (nf == 0) & (af == min(1, n_on))


def _run_chunk(spec: NetworkSpec, x: np.ndarray, y0, size: int, seed: int, chunk: int,
               max_rounds: int, window: int):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))
    n_on = int(x.sum())
    n_off = spec.n - n_on
    counts = _initial_counts(x, y0, size, rng)
    firing = counts[:, CLASS_AF] + counts[:, CLASS_NF]
    u = rng.random((size, spec.alpha))
    z = (u < spec.inhibitor_table[firing]).astype(np.uint8)
    tr = _Tracker(size, window)
    tr.start(_is_wta(n_on, counts[:, CLASS_AF], counts[:, CLASS_NF]), firing)
    active = np.arange(size)
    for t in range(1, max_rounds + 1):
        if active.size == 0:
            break
        c = counts[active]
        fired, z_new = compressed_draw(spec, c, z[active], rng)
        af = fired[:, CLASS_AF] + fired[:, CLASS_AI]
        nf = fired[:, CLASS_NF] + fired[:, CLASS_NI]
        unchanged = (
            (fired[:, CLASS_AF] == c[:, CLASS_AF])
            & (fired[:, CLASS_AI] == 0)
            & (fired[:, CLASS_NF] == c[:, CLASS_NF])
            & (fired[:, CLASS_NI] == 0)
        )
        new = np.stack([af, n_on - af, nf, n_off - nf], axis=1)
        counts[active] = new
        z[active] = z_new
        done = tr.update(active, t, _is_wta(n_on, af, nf), unchanged, af + nf)
        active = active[~done]
    return tr.converged_at, tr.first_sat, tr.first_hit, tr.resets


def _resolve_jobs(jobs: int | None) -> int:
    env = os.environ.get("WTA_JOBS")
    if env:
        jobs = int(env)
    return max(1, int(jobs or 1))


def simulate_trials(
    spec: NetworkSpec,
    x,
    y0="ones",
    trials: int = 1000,
    seed: int = 0,
    max_rounds: int | None = None,
    window: int | None = None,
    jobs: int | None = None,
) -> TrialBatch:
    """Run ``trials`` independent compressed trials.

    ``y0`` is a policy name from :data:`Y0_POLICIES` or an explicit bit vector.
    ``jobs`` (or the ``WTA_JOBS`` environment variable) sets the number of
    worker processes; it never changes the result.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    window = default_window(spec.n) if window is None else int(window)
    max_rounds = default_max_rounds(spec.n) if max_rounds is None else int(max_rounds)
    if not max_rounds >= window >= 1:
        raise ValueError(f"need max_rounds >= window >= 1, got {max_rounds}, {window}")
    x = np.asarray(x, dtype=np.uint8)
    if len(x) != spec.n:
        raise ValueError(f"x must have length n={spec.n}")
    sizes = [min(CHUNK_SIZE, trials - s) for s in range(0, trials, CHUNK_SIZE)]
    args = [(spec, x, y0, size, seed, c, max_rounds, window) for c, size in enumerate(sizes)]
    jobs = _resolve_jobs(jobs)
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(args))) as pool:
            parts = list(pool.map(_run_chunk, *zip(*args)))
    else:
        parts = [_run_chunk(*a) for a in args]
    conv, first, hit, resets = (np.concatenate(p) for p in zip(*parts))
    return TrialBatch(conv, first, hit, resets, max_rounds, window, seed, has_input=bool(x.any()))


def _summarise(batch: TrialBatch) -> dict:
    # Timeouts enter at max_rounds (censored from below).
    values = np.where(batch.timeouts, batch.max_rounds, batch.converged_at).astype(float)
    m = len(values)
    stderr = float(values.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    q = np.quantile(values, [0.1, 0.5, 0.9, 0.99], method="inverted_cdf")
    return {
        "mean": float(values.mean()),
        "stderr": stderr,
        "quantiles": {"q10": float(q[0]), "q50": float(q[1]), "q90": float(q[2]), "q99": float(q[3])},
        "timeout_fraction": float(batch.timeouts.mean()),
        "mean_first_satisfaction": float(
            np.where(batch.first_satisfaction < 0, batch.max_rounds, batch.first_satisfaction).mean()
        ),
        "mean_resets": float(batch.reset_count.mean()),
        "trials": m,
        "seed": batch.seed,
        "max_rounds": batch.max_rounds,
        "window": batch.window,
    }


def estimate_expected_time(
    spec: NetworkSpec,
    x,
    y0_policy="ones",
    trials: int = 1000,
    seed: int = 0,
    max_rounds: int | None = None,
    window: int | None = None,
    jobs: int | None = None,
) -> dict:
    """Mean convergence round with standard error, quantiles and timeout fraction.

    ``y0_policy="adversarial-sweep"`` runs the zeros, ones and half starts
    (each with ``trials`` trials) and reports the one with the largest mean,
    plus a ``per_policy`` breakdown.
    """
    if y0_policy == "adversarial-sweep":
        per = {
            p: estimate_expected_time(spec, x, p, trials, seed, max_rounds, window, jobs)
            for p in ADVERSARIAL
        }
        worst = max(per, key=lambda p: per[p]["mean"])
        out = dict(per[worst])
        out["y0_policy"] = "adversarial-sweep"
        out["worst_policy"] = worst
        out["per_policy"] = {p: per[p]["mean"] for p in ADVERSARIAL}
        return out
    batch = simulate_trials(spec, x, y0_policy, trials, seed, max_rounds, window, jobs)
    out = _summarise(batch)
    out["y0_policy"] = y0_policy if isinstance(y0_policy, str) else "explicit"
    out["provenance"] = spec.provenance
    return out


def hp_quantile(values: np.ndarray, delta: float) -> float:
    """Empirical ``(1 - delta)``-quantile; ``-1`` entries (timeouts) count as infinity."""
    v = np.where(np.asarray(values) < 0, np.inf, np.asarray(values, dtype=float))
    return float(np.quantile(v, 1.0 - delta, method="inverted_cdf"))


def estimate_hp_time(
    spec: NetworkSpec,
    x,
    y0_policy="ones",
    trials: int = 1000,
    delta: float = 0.01,
    seed: int = 0,
    max_rounds: int | None = None,
    window: int | None = None,
    jobs: int | None = None,
) -> float:
    """Round count by which a ``1 - delta`` fraction of trials have converged."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if trials < 10.0 / delta:
        raise ValueError(f"need at least 10/delta = {math.ceil(10 / delta)} trials, got {trials}")
    batch = simulate_trials(spec, x, y0_policy, trials, seed, max_rounds, window, jobs)
    return hp_quantile(batch.converged_at, delta)


def estimate_stability(
    spec: NetworkSpec,
    x=None,
    rounds: int = 10_000,
    trials: int = 1000,
    seed: int = 0,
) -> float:
    """Fraction of trials in which a lone winner keeps the exact output vector for ``rounds`` rounds.

    Each trial starts from a converged state: one output with a firing input
    fires, inhibitors sampled from that state.
    """
    x = np.ones(spec.n, dtype=np.uint8) if x is None else np.asarray(x, dtype=np.uint8)
    n_on = int(x.sum())
    if n_on < 1:
        raise ValueError("stability needs at least one firing input")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    counts = np.tile(np.array([1, n_on - 1, 0, spec.n - n_on]), (trials, 1))
    u = rng.random((trials, spec.alpha))
    z = (u < spec.inhibitor_table[1]).astype(np.uint8)
    alive = np.arange(trials)
    for _ in range(rounds):
        if alive.size == 0:
            break
        fired, z_new = compressed_draw(spec, counts[alive], z[alive], rng)
        same = (fired[:, CLASS_AF] == 1) & (fired[:, CLASS_AI] == 0) & (fired[:, CLASS_NI] == 0)
        alive = alive[same]
        z[alive] = z_new[same]
    return alive.size / trials


# ---------------------------------------------------------------------------
# Inhibitor taxonomy


@dataclass
class InhibitorClassification:
    """Labels ``S`` (stability), ``C`` (convergence) or ``R`` (remaining) per inhibitor.

    ``k_of_z`` and ``critical_range`` are keyed by inhibitor index and only
    hold ``C`` inhibitors.
    """

    labels: list[str]
    k_of_z: dict[int, int]
    critical_range: dict[int, tuple[float, float]]
    c_used: float
    degenerate: bool = False
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "k_of_z": {str(i): k for i, k in self.k_of_z.items()},
            "critical_range": {str(i): list(r) for i, r in self.critical_range.items()},
            "c_used": self.c_used,
            "degenerate": self.degenerate,
            "warnings": self.warnings,
            "counts": {lab: self.labels.count(lab) for lab in "SCR"},
        }


def classify_inhibitors(spec: NetworkSpec, c: float = 4.0) -> InhibitorClassification:
    """Split inhibitors into stability, convergence and negligible classes.

    S: firing probability with one output firing is at least ``1/log2(n)**(3c)``.
    C: not S, and firing probability with all ``n`` outputs firing is at least
    ``1/log2(n)**c``.  ``k(z)`` is the smallest firing count reaching that
    level (binary search; the potential is monotone in the count).
    """
    if c < 4:
        raise ValueError(f"classification constant must be >= 4, got {c}")
    log_n = math.log2(max(spec.n, 2))
    s_level = log_n ** (-3 * c)
    c_level = log_n ** (-c)
    notes = []
    degenerate = s_level < 1.0 / spec.n
    if degenerate:
        notes.append(
            f"1/log^(3c) n = {s_level:.3g} is below 1/n = {1 / spec.n:.3g}; "
            "S/C bands overlap sigmoid saturation at this n"
        )
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    labels, k_of_z, ranges = [], {}, {}
    for i in range(spec.alpha):
        def prob(k):
            return sigmoid_prob(k * spec.w_y[i] - spec.b_z[i], spec.lam)

        if prob(1) >= s_level:
            labels.append("S")
        elif prob(spec.n) >= c_level:
            lo, hi = 1, spec.n
            while lo < hi:
                mid = (lo + hi) // 2
                if prob(mid) >= c_level:
                    hi = mid
                else:
                    lo = mid + 1
            labels.append("C")
            k_of_z[i] = lo
            ranges[i] = (lo / 2, 2.0 * lo)
        else:
            labels.append("R")
    return InhibitorClassification(labels, k_of_z, ranges, c, degenerate, notes)


def density_class_inputs(n: int) -> list[np.ndarray]:
    """Inputs ``X_1..X_l`` (``l = floor(log2 n)``) with ``2**i`` firing inputs at the lowest indices."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    out = []
    for i in range(1, int(math.floor(math.log2(n))) + 1):
        x = np.zeros(n, dtype=np.uint8)
        x[: 2**i] = 1
        out.append(x)
    return out
