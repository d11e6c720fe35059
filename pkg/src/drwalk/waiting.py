"""Holding-time laws, the norming sequence a_t and a stable reference sampler."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

LIGHT = "light"
FAMILIES = ("pareto", "exponential", "lognormal", "deterministic", "pareto_mixture")

_EPS_OPEN = 2.0 ** -54
_OVERFLOW_GUARD = 2.0 ** 1000
PREDICATE_TOL = 1e-12


class TailNotAvailable(ValueError):
    pass


class NoBracket(RuntimeError):
    pass


def _open_uniform(rng: np.random.Generator, size):
    # strictly inside (0, 1) so inverse-CDF draws are finite and positive
    return rng.random(size) + _EPS_OPEN


@dataclass(frozen=True)
class WaitingTimeModel:
    """A holding-time law. ``params`` depend on ``family``:

    * pareto: ``alpha``, ``scale`` (P(T > s) = (s/scale)^-alpha for s >= scale)
    * exponential: ``rate``
    * lognormal: ``m``, ``s`` (parameters of log T)
    * deterministic: ``c``
    * pareto_mixture: ``weights``, ``alphas``, ``scales``
    """

    family: str
    params: dict

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown waiting-time family {self.family!r}; expected one of {FAMILIES}")
        p = {k: (tuple(v) if isinstance(v, list) else v) for k, v in self.params.items()}
        object.__setattr__(self, "params", p)
        f = self.family
        try:
            if f == "pareto":
                _require(0 < p["alpha"] <= 2 and p.get("scale", 1.0) > 0, "need 0 < alpha <= 2, scale > 0")
            elif f == "exponential":
                _require(p["rate"] > 0, "rate must be positive")
            elif f == "lognormal":
                _require(p["s"] > 0, "s must be positive")
            elif f == "deterministic":
                _require(p["c"] > 0, "c must be positive")
            else:
                w, a, sc = (np.asarray(p[k], float) for k in ("weights", "alphas", "scales"))
                _require(len(w) == len(a) == len(sc) and len(w) > 0, "mixture lists must have equal length")
                _require(np.all(w > 0) and abs(w.sum() - 1) < 1e-12, "weights must be positive and sum to 1")
                _require(np.all((a > 0) & (a <= 2)) and np.all(sc > 0), "need 0 < alpha <= 2, scale > 0")
        except KeyError as exc:
            raise ValueError(f"{f} model missing parameter {exc}") from None

    # constructors
    @classmethod
    def pareto(cls, alpha: float, scale: float = 1.0):
        return cls("pareto", {"alpha": float(alpha), "scale": float(scale)})

    @classmethod
    def exponential(cls, rate: float = 1.0):
        return cls("exponential", {"rate": float(rate)})

    @classmethod
    def lognormal(cls, m: float = 0.0, s: float = 1.0):
        return cls("lognormal", {"m": float(m), "s": float(s)})

    @classmethod
    def deterministic(cls, c: float):
        return cls("deterministic", {"c": float(c)})

    @classmethod
    def pareto_mixture(cls, weights, alphas, scales):
        return cls("pareto_mixture", {"weights": tuple(map(float, weights)),
                                      "alphas": tuple(map(float, alphas)),
                                      "scales": tuple(map(float, scales))})

    @classmethod
    def from_dict(cls, spec: dict) -> "WaitingTimeModel":
        return cls(spec["family"], dict(spec.get("params", {})))

    def to_dict(self) -> dict:
        return {"family": self.family, "params": {k: (list(v) if isinstance(v, tuple) else v)
                                                  for k, v in self.params.items()}}

    # metadata
    @property
    def tail_index(self):
        if self.family == "pareto":
            return self.params["alpha"]
        if self.family == "pareto_mixture":
            return min(self.params["alphas"])
        return LIGHT

    @property
    def heavy(self) -> bool:
        return self.tail_index != LIGHT

    @property
    def support_min(self) -> float:
        if self.family == "pareto":
            return self.params.get("scale", 1.0)
        if self.family == "pareto_mixture":
            return min(self.params["scales"])
        if self.family == "deterministic":
            return self.params["c"]
        return 0.0

    @property
    def mean(self) -> float:
        """E(T_1); ``inf`` when the first moment diverges."""
        p = self.params
        if self.family == "pareto":
            a, sc = p["alpha"], p.get("scale", 1.0)
            return a * sc / (a - 1) if a > 1 else math.inf
        if self.family == "exponential":
            return 1.0 / p["rate"]
        if self.family == "lognormal":
            return math.exp(p["m"] + p["s"] ** 2 / 2)
        if self.family == "deterministic":
            return p["c"]
        return sum(w * (a * sc / (a - 1) if a > 1 else math.inf)
                   for w, a, sc in zip(p["weights"], p["alphas"], p["scales"]))

    @property
    def finite_variance(self) -> bool:
        return not self.heavy or self.tail_index > 2

    def tail(self, s):
        """P(T_1 > s), vectorized."""
        s = np.asarray(s, dtype=float)
        p = self.params
        if self.family == "pareto":
            sc = p.get("scale", 1.0)
            return np.where(s < sc, 1.0, (np.maximum(s, sc) / sc) ** -p["alpha"])
        if self.family == "exponential":
            return np.exp(-p["rate"] * np.maximum(s, 0.0))
        if self.family == "lognormal":
            from scipy.special import ndtr
            with np.errstate(divide="ignore"):
                z = (np.log(np.maximum(s, 0.0)) - p["m"]) / p["s"]
            return 1.0 - ndtr(z)
        if self.family == "deterministic":
            return np.where(s < p["c"], 1.0, 0.0)
        out = np.zeros_like(s)
        for w, a, sc in zip(p["weights"], p["alphas"], p["scales"]):
            out = out + w * np.where(s < sc, 1.0, (np.maximum(s, sc) / sc) ** -a)
        return out

    def truncated_second_moment(self, s):
        """E(T_1^2; T_1 <= s) for the Pareto families."""
        s = np.asarray(s, dtype=float)
        p = self.params
        if self.family == "pareto":
            comps = [(1.0, p["alpha"], p.get("scale", 1.0))]
        elif self.family == "pareto_mixture":
            comps = list(zip(p["weights"], p["alphas"], p["scales"]))
        else:
            raise TailNotAvailable(f"no truncated second moment for family {self.family}")
        out = np.zeros_like(s)
        for w, a, sc in comps:
            x = np.maximum(s, sc)
            if a == 2:
                m2 = 2 * sc ** 2 * np.log(x / sc)
            else:
                m2 = a * sc ** a * (x ** (2 - a) - sc ** (2 - a)) / (2 - a)
            out = out + w * m2
        return out

    def sample(self, rng: np.random.Generator, size=None):
        p = self.params
        if self.family == "pareto":
            return p.get("scale", 1.0) * _open_uniform(rng, size) ** (-1.0 / p["alpha"])
        if self.family == "exponential":
            return -np.log(_open_uniform(rng, size)) / p["rate"]
        if self.family == "lognormal":
            return rng.lognormal(p["m"], p["s"], size)
        if self.family == "deterministic":
            return p["c"] if size is None else np.full(size, p["c"])
        u = _open_uniform(rng, size)
        comp = np.searchsorted(np.cumsum(p["weights"])[:-1], rng.random(size), side="right")
        a = np.asarray(p["alphas"])[comp]
        sc = np.asarray(p["scales"])[comp]
        return sc * u ** (-1.0 / a)


def _require(cond, msg):
    if not cond:
        raise ValueError(msg)


def sample_waiting(model: WaitingTimeModel, rng: np.random.Generator) -> float:
    return float(model.sample(rng))


def _bisect_infimum(pred: Callable[[float], bool], start: float) -> float:
    """Smallest ``s >= start`` where ``pred`` switches from false to true.

    The bracket grows geometrically from ``start``; the last false point and
    the first true point after it are then bisected (in log scale) to full
    double precision.
    """
    lo = start if start > 0 else 1e-300
    if pred(lo):
        return lo
    hi = max(lo * 2.0, 1.0)
    while not pred(hi):
        lo = hi
        hi *= 2.0
        if hi > _OVERFLOW_GUARD:
            raise NoBracket("norming predicate never satisfied before overflow guard")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def norming(model: WaitingTimeModel, t: float) -> float:
    """a_t = inf{s: t P(T > s) <= 1}, or for index 2 the truncated-second-moment
    criterion t s^-2 E(T^2; T <= s) <= 1. The search starts at the lower edge of
    the support, so a_1 equals that edge for Pareto laws."""
    if not model.heavy:
        raise TailNotAvailable(f"family {model.family} has no heavy tail to norm")
    if t <= 0:
        raise ValueError("t must be positive")
    t = float(t)
    if model.tail_index == 2:
        # the criterion is trivially true where the truncated moment vanishes,
        # so start where it is already positive
        start = model.support_min * (1 + 1e-9)

        def pred(s):
            return t * float(model.truncated_second_moment(s)) / (s * s) <= 1 + PREDICATE_TOL
        probe = start
        while pred(probe):
            probe *= 2.0
            if probe > _OVERFLOW_GUARD:
                return start
        start = probe
    else:
        start = model.support_min

        def pred(s):
            return t * float(model.tail(s)) <= 1 + PREDICATE_TOL
    return _bisect_infimum(pred, start)


@dataclass(frozen=True)
class StableReference:
    alpha: float
    beta: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError("alpha must be in (0, 2]")
        if not -1 <= self.beta <= 1:
            raise ValueError("beta must be in [-1, 1]")
        if self.scale <= 0:
            raise ValueError("scale must be positive")


def sample_stable(ref: StableReference, rng: np.random.Generator, size=None):
    """Chambers-Mallows-Stuck draws; at alpha = 2 the output is N(0, 2 scale^2)."""
    a, b = ref.alpha, ref.beta
    v = np.pi * (_open_uniform(rng, size) - 0.5)
    w = -np.log(_open_uniform(rng, size))
    if a == 1:
        hb = np.pi / 2 + b * v
        x = (2 / np.pi) * (hb * np.tan(v) - b * np.log((np.pi / 2) * w * np.cos(v) / hb))
    else:
        zeta = b * np.tan(np.pi * a / 2)
        shift = np.arctan(zeta) / a
        fac = (1 + zeta ** 2) ** (1 / (2 * a))
        x = (fac * np.sin(a * (v + shift)) / np.cos(v) ** (1 / a)
             * (np.cos(v - a * (v + shift)) / w) ** ((1 - a) / a))
    return ref.scale * x
