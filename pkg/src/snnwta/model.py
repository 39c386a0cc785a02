"""Basic stochastic spiking WTA network: data model and round dynamics.

A basic network has ``n`` inputs, ``n`` outputs and ``alpha`` inhibitory
auxiliary neurons.  Every output shares the same parameters, so the network is
fully described by a handful of scalars plus one (weight, weight, bias) triple
per inhibitor.

Each round ``t`` runs three sub-rounds: inputs fire (static), then outputs
fire with a sigmoid probability of their potential, then inhibitors fire in
response to the *new* output states.  Round ``t``'s configuration is therefore
``(x, y^t, z^t)`` where ``z^t`` was sampled from ``||y^t||_1``.

Random draws follow a fixed order so that trajectories are reproducible:
outputs by index, then inhibitors by index (per-neuron stepping), or the four
output classes ``(af, ai, nf, ni)`` followed by inhibitors by index
(compressed stepping).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import expit

__all__ = [
    "DEFAULT_C1",
    "DEFAULT_NOISE_C",
    "MAX_ABS_WEIGHT",
    "NetworkSpec",
    "Configuration",
    "CompressedState",
    "SpecValidationError",
    "temperature",
    "sigmoid_prob",
    "output_potential",
    "inhibitor_potential",
    "class_probabilities",
    "check_no_noise",
    "init_round_zero",
    "step_round",
    "compress",
    "step_round_compressed",
    "compressed_draw",
]

#: Temperature constant: ``lambda = 1 / (c1 * log2 n)``.
DEFAULT_C1 = 20.0
#: Exponent ``c`` in "with high probability" (probability >= 1 - 1/n**c).
DEFAULT_NOISE_C = 3.0
MAX_ABS_WEIGHT = 1e6

# Class order used throughout the compressed representation.
CLASS_AF, CLASS_AI, CLASS_NF, CLASS_NI = range(4)
_CLASS_X = np.array([1, 1, 0, 0])
_CLASS_Y = np.array([1, 0, 1, 0])


class SpecValidationError(ValueError):
    """A network description violates the basic-network rules."""


def temperature(n: int, c1: float = DEFAULT_C1) -> float:
    """Return ``1 / (c1 * log2 n)``."""
    if n < 2:
        raise ValueError(f"temperature needs n >= 2, got {n}")
    if not c1 > 0:
        raise ValueError(f"c1 must be positive, got {c1}")
    return 1.0 / (c1 * math.log2(n))


def sigmoid_prob(pot, lam: float):
    """Firing probability ``1 / (1 + exp(-pot / lam))``.

    Accepts scalars or arrays.  Saturates cleanly to 0 or 1 for huge
    ``|pot| / lam`` instead of overflowing.
    """
    if not (math.isfinite(lam) and lam > 0):
        raise ValueError(f"lambda must be a positive finite number, got {lam}")
    a = np.asarray(pot, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("potential must be finite")
    p = expit(a / lam)
    if p.ndim == 0:
        return float(p)
    return p


def _as_float_tuple(values) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class NetworkSpec:
    """Immutable description of a basic WTA network.

    Attributes
    ----------
    n : int
        Number of inputs (and outputs).
    alpha : int
        Number of inhibitors.
    lam : float
        Sigmoid temperature (``"lambda"`` in JSON).
    w_x, w_self, b_out : float
        Input-to-output weight, output self-loop weight and output bias,
        shared by every output.
    w_z : tuple of float
        Weight from inhibitor ``i`` onto every output (``<= 0``).
    w_y : tuple of float
        Weight from every output onto inhibitor ``i`` (``>= 0``).
    b_z : tuple of float
        Inhibitor biases.
    provenance : str
        Free-form note naming the constructor and its arguments.
    """

    n: int
    alpha: int
    lam: float
    w_x: float
    w_self: float
    b_out: float
    w_z: tuple[float, ...]
    w_y: tuple[float, ...]
    b_z: tuple[float, ...]
    provenance: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "w_z", _as_float_tuple(self.w_z))
        object.__setattr__(self, "w_y", _as_float_tuple(self.w_y))
        object.__setattr__(self, "b_z", _as_float_tuple(self.b_z))
        for name in ("lam", "w_x", "w_self", "b_out"):
            object.__setattr__(self, name, float(getattr(self, name)))
        self._validate()

    def _validate(self):
        if int(self.n) != self.n or self.n < 1:
            raise SpecValidationError(f"n must be a positive integer, got {self.n}")
        if int(self.alpha) != self.alpha or self.alpha < 0:
            raise SpecValidationError(f"alpha must be a non-negative integer, got {self.alpha}")
        for name in ("w_z", "w_y", "b_z"):
            if len(getattr(self, name)) != self.alpha:
                raise SpecValidationError(
                    f"{name} has {len(getattr(self, name))} entries, expected alpha={self.alpha}"
                )
        values = (self.lam, self.w_x, self.w_self, self.b_out, *self.w_z, *self.w_y, *self.b_z)
        if not all(math.isfinite(v) for v in values):
            raise SpecValidationError("all parameters must be finite")
        if any(abs(v) > MAX_ABS_WEIGHT for v in values[1:]):
            raise SpecValidationError(f"parameter magnitude exceeds {MAX_ABS_WEIGHT:g}")
        if not self.lam > 0:
            raise SpecValidationError("lambda must be positive")
        if not self.w_x > 0:
            raise SpecValidationError("w_x must be positive")
        if not self.w_self > 0:
            raise SpecValidationError("w_self must be positive")
        bad = [i for i, w in enumerate(self.w_z) if w > 0]
        if bad:
            raise SpecValidationError(f"inhibitor weights w_z must be <= 0 (offending: {bad})")
        bad = [i for i, w in enumerate(self.w_y) if w < 0]
        if bad:
            raise SpecValidationError(f"output-to-inhibitor weights w_y must be >= 0 (offending: {bad})")

    # -- derived arrays -------------------------------------------------

    @cached_property
    def w_z_array(self) -> np.ndarray:
        a = np.array(self.w_z, dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def inhibitor_table(self) -> np.ndarray:
        """``table[k, i]``: probability that inhibitor ``i`` fires when ``k`` outputs fire."""
        k = np.arange(self.n + 1, dtype=float)[:, None]
        pots = k * np.array(self.w_y) - np.array(self.b_z)
        t = expit(pots / self.lam) if self.alpha else np.zeros((self.n + 1, 0))
        t.setflags(write=False)
        return t

    @property
    def thresholds(self) -> np.ndarray:
        """Firing-count threshold ``(b_z + 1/2) / w_y`` of each inhibitor (inf when ``w_y = 0``)."""
        w_y = np.array(self.w_y)
        b_z = np.array(self.b_z)
        with np.errstate(divide="ignore"):
            return np.where(w_y > 0, (b_z + 0.5) / np.where(w_y > 0, w_y, 1.0), np.inf)

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "lambda": self.lam,
            "w_x": self.w_x,
            "w_self": self.w_self,
            "b_out": self.b_out,
            "w_z": list(self.w_z),
            "w_y": list(self.w_y),
            "b_z": list(self.b_z),
            "provenance": self.provenance,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        expected = {"n", "alpha", "lambda", "w_x", "w_self", "b_out", "w_z", "w_y", "b_z"}
        missing = expected - d.keys()
        if missing:
            raise SpecValidationError(f"missing keys: {sorted(missing)}")
        extra = d.keys() - expected - {"provenance"}
        if extra:
            raise SpecValidationError(f"unexpected keys: {sorted(extra)}")
        return cls(
            n=int(d["n"]),
            alpha=int(d["alpha"]),
            lam=d["lambda"],
            w_x=d["w_x"],
            w_self=d["w_self"],
            b_out=d["b_out"],
            w_z=d["w_z"],
            w_y=d["w_y"],
            b_z=d["b_z"],
            provenance=str(d.get("provenance", "")),
        )

    @classmethod
    def from_json(cls, text: str) -> "NetworkSpec":
        return cls.from_dict(json.loads(text))


def check_no_noise(spec: NetworkSpec, c: float = DEFAULT_NOISE_C) -> list[str]:
    """List violations of the quiet-network bias condition.

    Every output and inhibitor bias must be at least ``c * lam * ln n`` so an
    unstimulated neuron fires with probability at most ``1/n**c``.
    """
    floor = c * spec.lam * math.log(max(spec.n, 2))
    problems = []
    if spec.b_out < floor:
        problems.append(f"b_out={spec.b_out:g} < {floor:g}")
    for i, b in enumerate(spec.b_z):
        if b < floor:
            problems.append(f"b_z[{i}]={b:g} < {floor:g}")
    return problems


def output_potential(spec: NetworkSpec, x_j: int, y_prev_j: int, z_prev: Sequence[int]) -> float:
    if len(z_prev) != spec.alpha:
        raise ValueError(f"z_prev has length {len(z_prev)}, expected {spec.alpha}")
    inhibition = float(np.dot(np.asarray(z_prev, dtype=float), spec.w_z_array)) if spec.alpha else 0.0
    return x_j * spec.w_x + y_prev_j * spec.w_self + inhibition - spec.b_out


def inhibitor_potential(spec: NetworkSpec, i: int, k_firing_outputs: int) -> float:
    if not 0 <= i < spec.alpha:
        raise ValueError(f"inhibitor index {i} out of range for alpha={spec.alpha}")
    if not 0 <= k_firing_outputs <= spec.n:
        raise ValueError(f"firing count {k_firing_outputs} outside [0, {spec.n}]")
    return k_firing_outputs * spec.w_y[i] - spec.b_z[i]


def class_probabilities(spec: NetworkSpec, z) -> np.ndarray:
    """Firing probability of an output in each class given inhibitor states.

    ``z`` may be a single vector (shape ``(alpha,)``) or a batch
    ``(B, alpha)``; the result has shape ``(4,)`` or ``(B, 4)`` in class
    order ``(af, ai, nf, ni)``: (input on, fired) ... (input off, silent).
    """
    z = np.asarray(z, dtype=float)
    inhibition = z @ spec.w_z_array if spec.alpha else np.zeros(z.shape[:-1])
    base = _CLASS_X * spec.w_x + _CLASS_Y * spec.w_self - spec.b_out
    pots = np.asarray(inhibition)[..., None] + base
    return expit(pots / spec.lam)


# ---------------------------------------------------------------------------
# Per-neuron configurations


@dataclass(frozen=True)
class Configuration:
    """Firing state of one round: input ``x``, outputs ``y``, inhibitors ``z``."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z"):
            a = np.asarray(getattr(self, name), dtype=np.uint8).copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have equal length")

    def check(self, spec: NetworkSpec):
        if len(self.x) != spec.n or len(self.z) != spec.alpha:
            raise ValueError(
                f"configuration shape ({len(self.x)}, {len(self.z)}) does not match "
                f"spec (n={spec.n}, alpha={spec.alpha})"
            )

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.z, other.z)
        )

    __hash__ = None


def _sample_inhibitors(spec: NetworkSpec, k: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(spec.alpha)
    return (u < spec.inhibitor_table[k]).astype(np.uint8)


def init_round_zero(spec: NetworkSpec, x, y0, rng: np.random.Generator) -> Configuration:
    """Round-0 configuration: given ``x`` and ``y0``, inhibitors sampled from ``||y0||_1``."""
    x = np.asarray(x, dtype=np.uint8)
    y0 = np.asarray(y0, dtype=np.uint8)
    if len(x) != spec.n or len(y0) != spec.n:
        raise ValueError(f"x and y0 must have length n={spec.n}")
    z0 = _sample_inhibitors(spec, int(y0.sum()), rng)
    return Configuration(x, y0, z0)


def step_round(spec: NetworkSpec, cfg: Configuration, rng: np.random.Generator) -> Configuration:
    """Advance one round, neuron by neuron."""
    cfg.check(spec)
    probs = class_probabilities(spec, cfg.z)
    cls = 2 * (1 - cfg.x.astype(np.intp)) + (1 - cfg.y.astype(np.intp))
    y = (rng.random(spec.n) < probs[cls]).astype(np.uint8)
    z = _sample_inhibitors(spec, int(y.sum()), rng)
    return Configuration(cfg.x, y, z)


# ---------------------------------------------------------------------------
# Count-compressed states


@dataclass(frozen=True)
class CompressedState:
    """Output counts per (input on/off, fired/silent last round) class plus inhibitors."""

    k_af: int
    k_ai: int
    k_nf: int
    k_ni: int
    z: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(int(v) for v in self.z))
        if min(self.k_af, self.k_ai, self.k_nf, self.k_ni) < 0:
            raise ValueError("class counts must be non-negative")

    @property
    def counts(self) -> np.ndarray:
        return np.array([self.k_af, self.k_ai, self.k_nf, self.k_ni])

    @property
    def firing(self) -> int:
        return self.k_af + self.k_nf


def compress(cfg: Configuration) -> CompressedState:
    x = cfg.x.astype(bool)
    y = cfg.y.astype(bool)
    return CompressedState(
        k_af=int(np.sum(x & y)),
        k_ai=int(np.sum(x & ~y)),
        k_nf=int(np.sum(~x & y)),
        k_ni=int(np.sum(~x & ~y)),
        z=tuple(cfg.z),
    )


def compressed_draw(spec: NetworkSpec, counts: np.ndarray, z: np.ndarray, rng: np.random.Generator):
    """Vectorised compressed step over a batch of states.

    Parameters
    ----------
    counts : ndarray, shape (B, 4)
        Class counts ``(k_af, k_ai, k_nf, k_ni)``.
    z : ndarray, shape (B, alpha)
        Inhibitor states of the previous round.

    Returns
    -------
    fired : ndarray, shape (B, 4)
        Number of outputs of each previous class that fire this round.
    z_new : ndarray, shape (B, alpha)
        Inhibitor states sampled from the new firing count.
    """
    probs = class_probabilities(spec, z)
    fired = rng.binomial(counts, probs)
    k = fired.sum(axis=1)
    u = rng.random((len(counts), spec.alpha))
    z_new = (u < spec.inhibitor_table[k]).astype(np.uint8)
    return fired, z_new


def step_round_compressed(
    spec: NetworkSpec, state: CompressedState, rng: np.random.Generator
) -> CompressedState:
    """Advance one round on class counts (four binomials, then inhibitors)."""
    counts = state.counts
    if counts.sum() != spec.n or len(state.z) != spec.alpha:
        raise ValueError("compressed state inconsistent with spec")
    fired, z_new = compressed_draw(spec, counts[None, :], np.array([state.z]), rng)
    f = fired[0]
    on_total = state.k_af + state.k_ai
    off_total = state.k_nf + state.k_ni
    k_af = int(f[CLASS_AF] + f[CLASS_AI])
    k_nf = int(f[CLASS_NF] + f[CLASS_NI])
    return CompressedState(k_af, on_total - k_af, k_nf, off_total - k_nf, tuple(z_new[0]))
