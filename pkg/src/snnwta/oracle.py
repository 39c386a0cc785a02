"""Exact distribution propagation for small networks.

The joint state of a round is ``(Y, Z)``; ``X`` is fixed.  A state is packed
into one integer index ``y_code * 2**alpha + z_code`` where bit ``j`` of
``y_code`` is output ``j`` and bit ``i`` of ``z_code`` is inhibitor ``i``.

One round factorises: given the previous ``Z`` every output flips an
independent coin whose bias depends on its own ``(x_j, y_j)``, and the new
inhibitors depend only on the new firing count.  Propagation therefore applies
a 2x2 kernel along each output axis (per previous ``Z``) and then an
outer product with the inhibitor distribution, costing
``O(2**alpha * n * 2**n)`` per round instead of a dense ``4**(n+alpha)``
matrix product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.stats import binom

from .harness import wta_predicate
from .model import CompressedState, NetworkSpec, class_probabilities

__all__ = [
    "MAX_STATE_BITS",
    "FLUSH_BELOW",
    "OracleCapacityError",
    "DistributionVector",
    "state_index",
    "transition_probability",
    "initial_distribution",
    "propagate",
    "exact_first_satisfaction_cdf",
    "exact_expected_satisfaction_time",
    "collapse",
    "propagate_compressed",
    "inactive_firing_probability",
    "min_persistence",
]

MAX_STATE_BITS = 22
FLUSH_BELOW = 1e-300


class OracleCapacityError(ValueError):
    """The network is too large to enumerate."""


@dataclass
class DistributionVector:
    """Probability of each packed ``(Y, Z)`` state after ``round`` rounds.

    ``residual`` accumulates mass flushed below :data:`FLUSH_BELOW`.
    """

    probs: np.ndarray
    round: int = 0
    residual: float = 0.0

    @property
    def total(self) -> float:
        return float(self.probs.sum())


def _check_capacity(spec: NetworkSpec):
    if spec.n + spec.alpha > MAX_STATE_BITS:
        raise OracleCapacityError(
            f"n + alpha = {spec.n + spec.alpha} exceeds the enumeration bound {MAX_STATE_BITS}"
        )


def _bits(code: int, width: int) -> np.ndarray:
    return (code >> np.arange(width)) & 1


def _codes_bits(width: int) -> np.ndarray:
    """``out[c, j]`` is bit ``j`` of integer ``c``."""
    return (np.arange(2**width)[:, None] >> np.arange(width)) & 1


def state_index(spec: NetworkSpec, y, z) -> int:
    y_code = int(np.dot(np.asarray(y, dtype=np.int64), 1 << np.arange(spec.n)))
    z_code = int(np.dot(np.asarray(z, dtype=np.int64), 1 << np.arange(spec.alpha))) if spec.alpha else 0
    return (y_code << spec.alpha) | z_code


def _inhibitor_joint(spec: NetworkSpec) -> np.ndarray:
    """``out[k, z_code]`` = P(Z = z_code | k outputs fire)."""
    table = spec.inhibitor_table
    zb = _codes_bits(spec.alpha)
    out = np.ones((spec.n + 1, 2**spec.alpha))
    for i in range(spec.alpha):
        p = table[:, i][:, None]
        out *= np.where(zb[:, i][None, :] == 1, p, 1.0 - p)
    return out


def transition_probability(spec: NetworkSpec, x, from_state, to_state) -> float:
    """Probability of moving from ``(Y, Z)`` to ``(Y', Z')`` in one round."""
    _check_capacity(spec)
    x = np.asarray(x, dtype=np.intp)
    y, z = (np.asarray(v, dtype=np.intp) for v in from_state)
    y2, z2 = (np.asarray(v, dtype=np.intp) for v in to_state)
    probs = class_probabilities(spec, z)
    p_out = probs[2 * (1 - x) + (1 - y)]
    py = float(np.prod(np.where(y2 == 1, p_out, 1.0 - p_out)))
    p_in = spec.inhibitor_table[int(y2.sum())]
    pz = float(np.prod(np.where(z2 == 1, p_in, 1.0 - p_in)))
    return py * pz


def initial_distribution(spec: NetworkSpec, y0) -> DistributionVector:
    """Round-0 distribution: ``Y = y0`` with inhibitors sampled from ``||y0||_1``."""
    _check_capacity(spec)
    y0 = np.asarray(y0, dtype=np.intp)
    if len(y0) != spec.n:
        raise ValueError(f"y0 must have length n={spec.n}")
    probs = np.zeros(2 ** (spec.n + spec.alpha))
    base = state_index(spec, y0, np.zeros(spec.alpha, dtype=int))
    probs[base : base + 2**spec.alpha] = _inhibitor_joint(spec)[int(y0.sum())]
    return DistributionVector(probs, 0)


class _Kernel:
    """Precomputed pieces of the one-round operator for a fixed input."""

    def __init__(self, spec: NetworkSpec, x):
        _check_capacity(spec)
        self.spec = spec
        self.x = np.asarray(x, dtype=np.intp)
        if len(self.x) != spec.n:
            raise ValueError(f"x must have length n={spec.n}")
        n, a = spec.n, spec.alpha
        zb = _codes_bits(a)
        # probs[z_code, class]
        self.class_probs = class_probabilities(spec, zb) if a else class_probabilities(spec, np.zeros(0))[None, :]
        self.inh = _inhibitor_joint(spec)
        self.popcount = _codes_bits(n).sum(axis=1)

    def output_kernels(self, z_code: int) -> list[np.ndarray]:
        """2x2 matrices ``K_j[y, y']`` for each output, given previous inhibitors."""
        p = self.class_probs[z_code]
        out = []
        for xj in self.x:
            p1 = p[0] if xj else p[2]  # fired last round
            p0 = p[1] if xj else p[3]
            out.append(np.array([[1.0 - p0, p0], [1.0 - p1, p1]]))
        return out


def _apply(kernel: _Kernel, dist: DistributionVector) -> DistributionVector:
    spec = kernel.spec
    n, a = spec.n, spec.alpha
    joint = dist.probs.reshape(2**n, 2**a)
    new_y = np.zeros(2**n)
    for z_code in range(2**a):
        col = joint[:, z_code]
        if not col.any():
            continue
        # tensor axis order is (y_{n-1}, ..., y_0) for C-ordered reshape of y_code
        t = col.reshape((2,) * n) if n else col
        for j, K in enumerate(kernel.output_kernels(z_code)):
            axis = n - 1 - j
            t = np.moveaxis(np.tensordot(t, K, axes=([axis], [0])), -1, axis)
        new_y += t.reshape(-1)
    out = (new_y[:, None] * kernel.inh[kernel.popcount]).reshape(-1)
    small = (out > 0) & (out < FLUSH_BELOW)
    residual = dist.residual + float(out[small].sum())
    out[small] = 0.0
    return DistributionVector(out, dist.round + 1, residual)


def propagate(spec: NetworkSpec, x, dist: DistributionVector) -> DistributionVector:
    """Exact one-round evolution of a state distribution."""
    return _apply(_Kernel(spec, x), dist)


def _satisfying_mask(spec: NetworkSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.intp)
    yb = _codes_bits(spec.n)
    ok = np.array([wta_predicate(x, y) for y in yb])
    return np.repeat(ok, 2**spec.alpha)


def exact_first_satisfaction_cdf(spec: NetworkSpec, x, y0, horizon: int) -> np.ndarray:
    """``cdf[t-1] = P[first round t >= 1 with Y^t a valid WTA output is <= t]`` for ``t = 1..horizon``.

    Satisfying states are made absorbing: their mass is removed after each
    round.  Satisfaction is judged on ``Y`` alone.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    kernel = _Kernel(spec, x)
    mask = _satisfying_mask(spec, x)
    dist = initial_distribution(spec, y0)
    cdf = np.empty(horizon)
    absorbed = 0.0
    for t in range(horizon):
        dist = _apply(kernel, dist)
        absorbed += float(dist.probs[mask].sum())
        dist.probs[mask] = 0.0
        cdf[t] = min(absorbed, 1.0)
    return np.maximum.accumulate(cdf)


def exact_expected_satisfaction_time(spec: NetworkSpec, x, y0, horizon: int) -> dict:
    """Expected first-satisfaction round, censored at ``horizon``.

    Returns ``expectation`` (sum of ``t * P[T = t]`` plus ``horizon * tail_mass``),
    ``tail_mass`` (``P[T > horizon]``), the ``cdf`` and ``state_count``.
    """
    cdf = exact_first_satisfaction_cdf(spec, x, y0, horizon)
    pmf = np.diff(np.concatenate([[0.0], cdf]))
    t = np.arange(1, horizon + 1)
    tail = max(0.0, 1.0 - float(cdf[-1]))
    return {
        "horizon": horizon,
        "cdf": cdf.tolist(),
        "expectation": float(np.dot(t, pmf) + horizon * tail),
        "tail_mass": tail,
        "state_count": 2 ** (spec.n + spec.alpha),
        "min_persistence": min_persistence(spec, x),
    }


def min_persistence(spec: NetworkSpec, x) -> float:
    """Smallest one-round probability that a valid WTA output vector repeats exactly.

    Inhibitors are drawn from the satisfying state's own firing count, as they
    would be once the state is reached.
    """
    x = np.asarray(x, dtype=np.intp)
    inh = _inhibitor_joint(spec)
    zb = _codes_bits(spec.alpha)
    probs = class_probabilities(spec, zb) if spec.alpha else class_probabilities(spec, np.zeros(0))[None, :]
    worst = 1.0
    for y in _codes_bits(spec.n):
        if not wta_predicate(x, y):
            continue
        cls = 2 * (1 - x) + (1 - y)
        p = probs[:, cls]
        stay = np.prod(np.where(y == 1, p, 1.0 - p), axis=1)
        worst = min(worst, float(np.dot(inh[int(y.sum())], stay)))
    return worst


# ---------------------------------------------------------------------------
# Compressed (class-count) chain


def collapse(spec: NetworkSpec, x, dist: DistributionVector) -> dict[CompressedState, float]:
    """Sum the exact distribution over states with equal class counts."""
    x = np.asarray(x, dtype=bool)
    yb = _codes_bits(spec.n).astype(bool)
    af = (yb & x).sum(axis=1)
    nf = (yb & ~x).sum(axis=1)
    n_on, n_off = int(x.sum()), int((~x).sum())
    joint = dist.probs.reshape(2**spec.n, 2**spec.alpha)
    out: dict[CompressedState, float] = {}
    for y_code in range(2**spec.n):
        for z_code in range(2**spec.alpha):
            p = joint[y_code, z_code]
            if p == 0.0:
                continue
            key = CompressedState(
                int(af[y_code]), n_on - int(af[y_code]), int(nf[y_code]), n_off - int(nf[y_code]),
                tuple(_bits(z_code, spec.alpha)),
            )
            out[key] = out.get(key, 0.0) + float(p)
    return out


def propagate_compressed(spec: NetworkSpec, dist: dict[CompressedState, float]) -> dict[CompressedState, float]:
    """Exact one-round evolution on class counts (product of four binomials, then inhibitors)."""
    inh = _inhibitor_joint(spec)
    out: dict[CompressedState, float] = {}
    for s, mass in dist.items():
        p = class_probabilities(spec, np.array(s.z, dtype=float))
        on, off = s.k_af + s.k_ai, s.k_nf + s.k_ni
        pmfs = [binom.pmf(np.arange(c + 1), c, p[i]) for i, c in enumerate(s.counts)]
        for f in product(*(range(c + 1) for c in s.counts)):
            w = mass * pmfs[0][f[0]] * pmfs[1][f[1]] * pmfs[2][f[2]] * pmfs[3][f[3]]
            if w == 0.0:
                continue
            af, nf = f[0] + f[1], f[2] + f[3]
            for z_code in range(2**spec.alpha):
                q = w * inh[af + nf, z_code]
                if q == 0.0:
                    continue
                key = CompressedState(af, on - af, nf, off - nf, tuple(_bits(z_code, spec.alpha)))
                out[key] = out.get(key, 0.0) + q
    return out


def inactive_firing_probability(spec: NetworkSpec, x, dist: DistributionVector) -> tuple[float, float]:
    """Probability that some output silent this round fires next round, given >= 1 output fires.

    Returns ``(exact, bound)``.  ``bound`` is ``n`` times the largest inactive
    firing probability over the inhibitor vectors that occur w.h.p. for some
    firing count ``k >= 1``, plus the conditional mass on all other inhibitor
    vectors.
    """
    x = np.asarray(x, dtype=np.intp)
    n, a = spec.n, spec.alpha
    yb = _codes_bits(n)
    joint = dist.probs.reshape(2**n, 2**a)
    firing = yb.sum(axis=1) >= 1
    mass = float(joint[firing].sum())
    if mass == 0.0:
        return 0.0, 0.0
    zb = _codes_bits(a)
    probs = class_probabilities(spec, zb) if a else class_probabilities(spec, np.zeros(0))[None, :]
    exact = 0.0
    for y_code in np.flatnonzero(firing):
        y = yb[y_code]
        inactive = y == 0
        if not inactive.any():
            continue
        cls = 2 * (1 - x[inactive]) + 1
        none = np.prod(1.0 - probs[:, cls], axis=1)
        exact += float(np.dot(joint[y_code], 1.0 - none))
    exact /= mass
    codes = 1 << np.arange(a)
    typical = {int(np.dot(spec.inhibitor_table[k] >= 0.5, codes)) for k in range(1, n + 1)}
    worst = max(float(max(probs[z, 1], probs[z, 3])) for z in typical)
    z_mass = joint[firing].sum(axis=0) / mass
    atypical = float(sum(z_mass[z] for z in range(2**a) if z not in typical))
    return exact, n * worst + atypical
