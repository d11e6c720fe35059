"""Scaled statistics of the walk under each limit regime, and the
regeneration-cycle sum used as an independent comparison sample."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .directions import DirectionSet, stationary_distribution, DoeblinKernel
from .rng import member_rng
from .walk import (Trajectory, ensemble_positions, position_at, regeneration_probability,
                   simulate_cycles, stationary_pi)
from .waiting import LIGHT, WaitingTimeModel, norming


class RegimeError(ValueError):
    pass


class DomainError(ValueError):
    pass


def drift(dirs: DirectionSet, kernel) -> np.ndarray:
    return stationary_pi(kernel) @ dirs.vectors


def renewal_rate(dirs: DirectionSet, kernel, model: WaitingTimeModel) -> float:
    """b = (regeneration probability per step) / E(T_1): cycles per unit time."""
    return regeneration_probability(dirs, kernel) / model.mean


def default_projections(dirs: DirectionSet, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of span(U) (Gram-Schmidt over U) followed by the
    normalized projection of the all-ones vector, unless it is parallel to a
    basis vector or vanishes."""
    basis: list[np.ndarray] = []
    for v in dirs.vectors:
        w = v - sum((v @ b) * b for b in basis) if basis else v.copy()
        nrm = np.linalg.norm(w)
        if nrm > tol:
            basis.append(w / nrm)
    ones = np.ones(dirs.dim)
    proj = sum((ones @ b) * b for b in basis)
    out = list(basis)
    nrm = np.linalg.norm(proj)
    if nrm > tol:
        p = proj / nrm
        if all(abs(abs(p @ b) - 1) > tol for b in basis):
            out.append(p)
    return np.array(out)


@dataclass
class Ensemble:
    """Independent walks sharing one configuration; member ``i`` owns stream
    ``(seed, stream, i)``."""

    dirs: DirectionSet
    kernel: object
    model: WaitingTimeModel
    seed: int
    size: int
    threads: int = 1
    stream: int = 0

    def positions(self, times) -> np.ndarray:
        return ensemble_positions(self.dirs, self.kernel, self.model, times, self.seed,
                                  self.size, self.threads, self.stream)


@dataclass
class ScaledSample:
    kind: str
    t: np.ndarray
    values: np.ndarray  # (members, len(t), d) or (members, len(t))
    normalization: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def at(self, i: int = -1) -> np.ndarray:
        return self.values[:, i]

    def project(self, x, i: int = -1) -> np.ndarray:
        return self.values[:, i] @ np.asarray(x, float)

    def rows(self, projections=None):
        """(member_id, statistic, t, component, value) records."""
        vals = self.values
        for m in range(vals.shape[0]):
            for j, tj in enumerate(self.t):
                v = vals[m, j]
                if np.ndim(v) == 0:
                    yield m, self.kind, float(tj), "value", float(v)
                    continue
                for c, vc in enumerate(v):
                    yield m, self.kind, float(tj), f"c{c}", float(vc)
                if projections is not None:
                    for p, x in enumerate(projections):
                        yield m, self.kind, float(tj), f"x{p}", float(v @ x)

    def write_csv(self, path, projections=None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["member_id", "statistic", "t", "component", "value"])
            for row in self.rows(projections):
                w.writerow(row)


def max_norm(x, axis=-1):
    return np.abs(x).max(axis=axis)


def lln_error(traj: Trajectory, dirs, mu, times, p: float = 1.5) -> dict:
    """||X_t - mu t|| / t^(1/p) and ||X_t / t - mu|| on a time grid (max norm)."""
    times = np.asarray(times, dtype=float)
    x = position_at(traj, dirs, times)
    err = max_norm(x - np.outer(times, mu))
    return {"t": times, "ratio": err / times ** (1.0 / p), "velocity_error": err / times}


def _require_regime(model: WaitingTimeModel, lo, hi, hi_closed, what):
    if model.tail_index == LIGHT:
        raise RegimeError(f"{what} needs a heavy-tailed waiting-time law, got {model.family}")
    a = model.tail_index
    if not (lo < a and (a <= hi if hi_closed else a < hi)):
        raise RegimeError(f"{what} needs tail index in ({lo}, {hi}{']' if hi_closed else ')'}, got {a}")


def diffusive_path(ens: Ensemble, mu, n: float, grid=None) -> ScaledSample:
    """S_n(t) = (X_{nt} - mu n t) / sqrt(n) on a grid of t in [0, 1]."""
    grid = np.linspace(0, 1, 11) if grid is None else np.asarray(grid, float)
    note = {}
    if not ens.model.finite_variance:
        note["warning"] = "waiting-time law has infinite variance"
    x = ens.positions(n * grid)
    vals = (x - (n * grid)[None, :, None] * np.asarray(mu)[None, None, :]) / math.sqrt(n)
    return ScaledSample("diffusive_path", grid, vals,
                        {"mu": np.asarray(mu).tolist(), "sqrt_n": math.sqrt(n), **note})


def stable_scaled(ens: Ensemble, mu, model: WaitingTimeModel, t: float) -> ScaledSample:
    """S_t = (X_t - mu t) / a_t for tail index in (1, 2]."""
    _require_regime(model, 1, 2, True, "stable scaling")
    a_t = norming(model, t)
    x = ens.positions([t])
    vals = (x - t * np.asarray(mu)) / a_t
    return ScaledSample("stable_scaled", np.array([t], float), vals,
                        {"mu": np.asarray(mu).tolist(), "a_t": a_t})


def ballistic_ratio(ens: Ensemble, t: float) -> ScaledSample:
    """X_t / t for tail index in (0, 1); every value lies in the unit ball."""
    _require_regime(ens.model, 0, 1, False, "ballistic scaling")
    x = ens.positions([t])
    vals = x / t
    norms = np.linalg.norm(vals, axis=-1)
    if np.any(norms > 1 + 1e-12):
        raise AssertionError(f"ballistic ratio left the unit ball: max norm {norms.max()}")
    return ScaledSample("ballistic_ratio", np.array([t], float), vals, {"t": t})


def cycle_sum_oracle(dirs: DirectionSet, kernel, model: WaitingTimeModel, n_cycles: int,
                     rng: np.random.Generator | None = None, *, size: int = 1,
                     seed: int | None = None, norm: float | None = None, stream: int = 1) -> np.ndarray:
    """Sums of ``n_cycles`` i.i.d. centered cycle increments, divided by ``norm``.

    Each increment is the cycle displacement of the drift-removed walk,
    xi_k - mu r_k, whose mean is zero. ``norm`` defaults to a_t at the walk
    time t = n_cycles / b that these cycles cover on average. With ``seed``
    the members use independent per-member streams; otherwise all are drawn
    from ``rng``. Returns an array of shape (size, d).
    """
    mu = drift(dirs, kernel)
    if norm is None:
        norm = norming(model, n_cycles / renewal_rate(dirs, kernel, model)) if n_cycles else 1.0
    out = np.zeros((size, dirs.dim))
    for i in range(size):
        g = member_rng(seed, i, stream) if seed is not None else rng
        xi, r, _ = simulate_cycles(dirs, kernel, model, n_cycles, g)
        if n_cycles:
            out[i] = (xi - np.outer(r, mu)).sum(axis=0) / norm
    return out


@dataclass
class CycleMeanCheck:
    estimate: np.ndarray
    stderr: np.ndarray
    predicted: np.ndarray
    mean_length: float
    predicted_length: float

    @property
    def zscores(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.estimate - self.predicted) / self.stderr


def cycle_mean_check(dirs: DirectionSet, kernel, model: WaitingTimeModel, n_cycles: int,
                     rng: np.random.Generator) -> CycleMeanCheck:
    """Estimate E(xi) from a cycle pre-run next to the prediction
    E(T_1) * mu / p, where p is the per-step regeneration probability."""
    xi, _, lengths = simulate_cycles(dirs, kernel, model, n_cycles, rng)
    p = regeneration_probability(dirs, kernel)
    mu = drift(dirs, kernel)
    return CycleMeanCheck(xi.mean(axis=0), xi.std(axis=0, ddof=1) / math.sqrt(n_cycles),
                          model.mean * mu / p, float(lengths.mean()), 1.0 / p)


def log_grid(t0: float, t1: float, per_octave: int = 1) -> np.ndarray:
    """Geometric grid t0 * 2^(k/per_octave) up to t1 (dyadic for per_octave=1)."""
    k = int(math.floor(per_octave * math.log2(t1 / t0) + 1e-9))
    return t0 * 2.0 ** (np.arange(k + 1) / per_octave)


@dataclass
class EnvelopeReport:
    t: np.ndarray
    ratio: np.ndarray
    running_sup: np.ndarray
    mode: str
    epsilon: float | None = None
    root_series: np.ndarray | None = None

    @property
    def sup(self) -> float:
        return float(self.running_sup[-1])

    def to_dict(self) -> dict:
        return {"mode": self.mode, "epsilon": self.epsilon, "sup": self.sup,
                "t": self.t.tolist(), "ratio": self.ratio.tolist()}


def lil_envelope(traj: Trajectory, dirs, mu, x, grid, *, model: WaitingTimeModel | None = None,
                 epsilon: float | None = None) -> EnvelopeReport:
    """Running envelope ratio of (X_t - mu t).x along a time grid.

    Without ``epsilon`` the normalizer is sqrt(t ln ln t). With ``epsilon``
    (heavy mode) it is a_t (ln t)^(1/alpha + epsilon), and ``root_series``
    carries ((X_t - mu t).x / a_t)^(1 / ln ln t) as a raw diagnostic.
    """
    grid = np.asarray(grid, float)
    lnln = np.log(np.log(grid)) if np.all(grid > 1) else None
    if lnln is None or np.any(lnln <= 0):
        raise DomainError("ln ln t must be positive on the whole grid (use t > e)")
    num = (position_at(traj, dirs, grid) - np.outer(grid, mu)) @ np.asarray(x, float)
    root = None
    if epsilon is None:
        ratio = num / np.sqrt(grid * lnln)
        mode = "finite_variance"
    else:
        if model is None or not model.heavy:
            raise RegimeError("heavy envelope mode needs a heavy-tailed model")
        alpha = model.tail_index
        a = np.array([norming(model, t) for t in grid])
        ratio = num / (a * np.log(grid) ** (1.0 / alpha + epsilon))
        with np.errstate(invalid="ignore"):
            root = np.power(num / a, 1.0 / lnln)
        mode = "heavy"
    return EnvelopeReport(grid, ratio, np.maximum.accumulate(ratio), mode, epsilon, root)
