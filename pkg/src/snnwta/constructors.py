"""Network constructions for WTA with a given inhibitor budget.

All constructions share the output parameters ``w_x = 3``, ``w_self = 2``,
``b_out = 3`` (except the one-inhibitor network, see below) and a stability
inhibitor with ``w_y = 1``, ``b_z = 0.5``, ``w_z = -1`` that fires whenever at
least one output fires.  Convergence inhibitors are count thresholds: with
``w_y = 1`` and ``b_z = tau - 0.5`` an inhibitor fires w.h.p. exactly when at
least ``tau`` outputs fire.

Where a construction only prescribes the firing probability an active output
should have under a given set of firing inhibitors, the inhibitory weights are
solved from the inverse sigmoid, in increasing threshold order.
"""

from __future__ import annotations

import math

import numpy as np

from .model import DEFAULT_C1, NetworkSpec, sigmoid_prob, temperature

__all__ = [
    "ConstructionError",
    "DEFAULT_C_PROB_THETA",
    "DEFAULT_C_PROB_ALPHA",
    "DEFAULT_C_POLY",
    "solve_weight_for_target",
    "build_two_inhibitor",
    "build_logn_inhibitor",
    "build_theta_level",
    "build_alpha_inhibitor",
    "build_one_inhibitor",
    "prefix_probabilities",
    "BUILDERS",
]

DEFAULT_C_PROB_THETA = 1.0
DEFAULT_C_PROB_ALPHA = 0.05
DEFAULT_C_POLY = 2.0

W_X, W_SELF, B_OUT = 3.0, 2.0, 3.0
STABILITY = dict(w_z=-1.0, w_y=1.0, b_z=0.5)


class ConstructionError(ValueError):
    """Requested network parameters cannot be realised."""


def _check_n(n: int, minimum: int = 2):
    if int(n) != n or n < minimum:
        raise ConstructionError(f"n must be an integer >= {minimum}, got {n}")


def solve_weight_for_target(existing_potential: float, target_p: float, lam: float) -> float:
    """Weight increment that moves ``existing_potential`` to firing probability ``target_p``.

    Closed form: ``-lam * ln(1/target_p - 1) - existing_potential``.
    """
    if not 0.0 < target_p < 1.0:
        raise ValueError(f"target probability must lie in (0, 1), got {target_p}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    # log1p keeps precision for target_p close to 1
    logit = math.log(target_p) - math.log1p(-target_p)
    return lam * logit - existing_potential


def _solve_ladder(base_potential: float, targets, lam: float, labels) -> list[float]:
    """Weights so that the first ``j`` inhibitors firing gives ``targets[j-1]``."""
    weights = []
    pot = base_potential
    for target, label in zip(targets, labels):
        if not 0.0 < target < 1.0:
            raise ConstructionError(f"target probability {target:g} for inhibitor {label} is outside (0, 1)")
        dw = solve_weight_for_target(pot, target, lam)
        if dw > 0:
            raise ConstructionError(
                f"inhibitor {label} would need an excitatory weight ({dw:+.4g}) to reach "
                f"target probability {target:.4g}"
            )
        weights.append(dw)
        pot += dw
    return weights


def build_two_inhibitor(n: int, c1: float = DEFAULT_C1) -> NetworkSpec:
    """Stability inhibitor plus one convergence inhibitor firing at >= 2 outputs."""
    _check_n(n)
    return NetworkSpec(
        n=n,
        alpha=2,
        lam=temperature(n, c1),
        w_x=W_X,
        w_self=W_SELF,
        b_out=B_OUT,
        w_z=[-1.0, -1.0],
        w_y=[1.0, 1.0],
        b_z=[0.5, 1.5],
        provenance=f"two-inhibitor(n={n}, c1={c1:g})",
    )


def build_logn_inhibitor(n: int, c1: float = DEFAULT_C1) -> NetworkSpec:
    """``ceil(log2 n)`` inhibitors: stability plus thresholds ``2, 4, ..., 2**(alpha-1)``.

    With the stability inhibitor and the first ``i`` convergence inhibitors
    firing, an active output fires with probability ``1 / (1 + 2**(i-1))``.
    """
    _check_n(n)
    lam = temperature(n, c1)
    alpha = max(2, math.ceil(math.log2(n)))
    w_z = [-1.0, -1.0] + [-lam * math.log(2.0)] * (alpha - 2)
    b_z = [0.5] + [2.0**i - 0.5 for i in range(1, alpha)]
    return NetworkSpec(
        n=n,
        alpha=alpha,
        lam=lam,
        w_x=W_X,
        w_self=W_SELF,
        b_out=B_OUT,
        w_z=w_z,
        w_y=[1.0] * alpha,
        b_z=b_z,
        provenance=f"logn(n={n}, c1={c1:g})",
    )


def theta_level_thresholds(n: int, theta: int) -> list[tuple[int, int, float]]:
    """``(group, index, tau)`` for each convergence inhibitor, ``tau = 2**(j * d_i)``."""
    log_n = math.log2(n)
    size = math.ceil(log_n ** (1.0 / theta))
    out = []
    for i in range(1, theta + 1):
        d_i = log_n ** ((i - 1) / theta)
        for j in range(1, size + 1):
            out.append((i, j, 2.0 ** (j * d_i)))
    return out


def build_theta_level(
    n: int, theta: int, c1: float = DEFAULT_C1, c_prob: float = DEFAULT_C_PROB_THETA
) -> NetworkSpec:
    """Stability inhibitor plus ``theta`` groups of ``ceil(log2(n)**(1/theta))`` thresholds.

    Group ``i`` has thresholds ``2**(j * d_i)`` with ``d_i = log2(n)**((i-1)/theta)``.
    Weights are solved so that, with every inhibitor up to threshold ``tau``
    firing, an active output fires with probability ``c_prob / tau``.
    """
    _check_n(n, 4)
    if int(theta) != theta or theta < 1:
        raise ConstructionError(f"theta must be an integer >= 1, got {theta}")
    if not c_prob > 0:
        raise ConstructionError(f"c_prob must be positive, got {c_prob}")
    lam = temperature(n, c1)
    ladder = sorted(theta_level_thresholds(n, theta), key=lambda t: (t[2], t[0], t[1]))
    base = W_X + W_SELF + STABILITY["w_z"] - B_OUT
    labels = [f"(i={i}, j={j})" for i, j, _ in ladder]
    targets = [c_prob / tau for _, _, tau in ladder]
    weights = _solve_ladder(base, targets, lam, labels)
    taus = [tau for _, _, tau in ladder]
    return NetworkSpec(
        n=n,
        alpha=1 + len(ladder),
        lam=lam,
        w_x=W_X,
        w_self=W_SELF,
        b_out=B_OUT,
        w_z=[STABILITY["w_z"]] + weights,
        w_y=[1.0] * (1 + len(ladder)),
        b_z=[STABILITY["b_z"]] + [tau - 0.5 for tau in taus],
        provenance=f"theta-level(n={n}, theta={theta}, c1={c1:g}, c_prob={c_prob:g})",
    )


def build_alpha_inhibitor(
    n: int, alpha: int, c1: float = DEFAULT_C1, c_prob: float = DEFAULT_C_PROB_ALPHA
) -> NetworkSpec:
    """Two-inhibitor core plus ``alpha - 2`` coarse thresholds ``2**d_i``.

    ``d_i = log2(n)**(i/(alpha-1))``; with the core and ``z_1..z_i`` firing an
    active output fires with probability ``c_prob * log2(n) / 2**d_i``.
    ``alpha = 2`` is exactly :func:`build_two_inhibitor`.
    """
    if int(alpha) != alpha or alpha < 2:
        raise ConstructionError(f"alpha must be an integer >= 2, got {alpha}")
    if alpha == 2:
        _check_n(n)
        return build_two_inhibitor(n, c1)
    _check_n(n, 4)
    if not c_prob > 0:
        raise ConstructionError(f"c_prob must be positive, got {c_prob}")
    lam = temperature(n, c1)
    log_n = math.log2(n)
    d = [log_n ** (i / (alpha - 1)) for i in range(1, alpha - 1)]
    targets = [c_prob * log_n / 2.0**d_i for d_i in d]
    base = W_X + W_SELF - 1.0 - 1.0 - B_OUT
    labels = [f"z_{i}" for i in range(1, alpha - 1)]
    weights = _solve_ladder(base, targets, lam, labels)
    return NetworkSpec(
        n=n,
        alpha=alpha,
        lam=lam,
        w_x=W_X,
        w_self=W_SELF,
        b_out=B_OUT,
        w_z=[-1.0, -1.0] + weights,
        w_y=[1.0] * alpha,
        b_z=[0.5, 1.5] + [2.0**d_i - 0.5 for d_i in d],
        provenance=f"alpha(n={n}, alpha={alpha}, c1={c1:g}, c_prob={c_prob:g})",
    )


def build_one_inhibitor(n: int, c_poly: float = DEFAULT_C_POLY, c1: float = DEFAULT_C1) -> NetworkSpec:
    """Single inhibitor firing whenever any output fires.

    Under inhibition an active output drops out with probability
    ``n**-(c_poly+1)`` per round, so competitors are eliminated one at a time
    and a lone winner is kept for about ``n**(c_poly+1)`` rounds.  With the
    inhibitor silent every output with a firing input fires w.h.p.; this needs
    ``w_x - b_out >= 1/2`` so ``w_x`` is raised to 4.
    """
    _check_n(n)
    if not c_poly >= 1:
        raise ConstructionError(f"c_poly must be >= 1, got {c_poly}")
    lam = temperature(n, c1)
    w_x = 4.0
    stop = float(n) ** -(c_poly + 1.0)
    (w_z,) = _solve_ladder(w_x + W_SELF - B_OUT, [1.0 - stop], lam, ["z"])
    return NetworkSpec(
        n=n,
        alpha=1,
        lam=lam,
        w_x=w_x,
        w_self=W_SELF,
        b_out=B_OUT,
        w_z=[w_z],
        w_y=[1.0],
        b_z=[0.5],
        provenance=f"one-inhibitor(n={n}, c_poly={c_poly:g}, c1={c1:g})",
    )


def prefix_probabilities(spec: NetworkSpec) -> np.ndarray:
    """Active-output firing probability as inhibitors fire in threshold order.

    Entry ``j`` is the probability when the ``j`` lowest-threshold inhibitors
    fire (entry 0: none fire).
    """
    order = np.argsort(spec.thresholds, kind="stable")
    pot = spec.w_x + spec.w_self - spec.b_out + np.concatenate([[0.0], np.cumsum(spec.w_z_array[order])])
    return sigmoid_prob(pot, spec.lam)


BUILDERS = {
    "one-inhibitor": build_one_inhibitor,
    "two-inhibitor": build_two_inhibitor,
    "logn": build_logn_inhibitor,
    "theta-level": build_theta_level,
    "alpha": build_alpha_inhibitor,
}
