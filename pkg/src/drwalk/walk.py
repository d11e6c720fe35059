"""Trajectories of the walk, positions, and the regeneration-cycle decomposition.

Indexing: step ``n`` (1-based, as in the walk's definition) is stored at
array position ``n - 1``. ``s[k]`` is the start time of step ``k + 1``, so
``s[0] = 0`` and ``s[N]`` is the end of the last stored leg.
"""

from __future__ import annotations

import csv
import math
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._kernels import cycle_sums, kahan_cumsum, leg_prefix
from .directions import (DirectionSet, DoeblinKernel, TransitionKernel, run_chain,
                         run_split_chain, sample_initial, stationary_distribution)
from .rng import member_rng
from .waiting import WaitingTimeModel


class OutOfHorizon(ValueError):
    pass


class NoRegeneration(RuntimeError):
    pass


_pi_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def stationary_pi(kernel) -> np.ndarray:
    pi = _pi_cache.get(kernel)
    if pi is None:
        tk = kernel.as_transition_kernel() if isinstance(kernel, DoeblinKernel) else kernel
        pi = stationary_distribution(tk).pi
        _pi_cache[kernel] = pi
    return pi


@dataclass(eq=False)
class Trajectory:
    states: np.ndarray
    durations: np.ndarray
    s: np.ndarray
    horizon: float
    regen: np.ndarray | None = None  # regen[n-1]: the transition out of step n used the base measure
    _prefix: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.states)

    def count(self, t):
        """N_t = sup{k >= 1: s_k <= t}."""
        return np.searchsorted(self.s, t, side="right")

    def prefix(self, vectors: np.ndarray) -> np.ndarray:
        key = id(vectors)
        hit = self._prefix.get(key)
        if hit is None or hit[0] is not vectors:
            hit = (vectors, leg_prefix(np.ascontiguousarray(vectors, dtype=float),
                                       self.states, self.durations))
            self._prefix[key] = hit
        return hit[1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "direction_index", "duration", "s_n"])
            for n in range(len(self)):
                w.writerow([n + 1, int(self.states[n]), repr(float(self.durations[n])),
                            repr(float(self.s[n]))])


def _draw_durations(model: WaitingTimeModel, horizon: float, rng) -> np.ndarray:
    mean = model.mean
    chunk = int(1.1 * horizon / mean) + 64 if math.isfinite(mean) else 1024
    parts = []
    total = 0.0
    while True:
        d = np.asarray(model.sample(rng, chunk), dtype=float)
        parts.append(d)
        total += math.fsum(d)
        if total > horizon:
            break
        chunk = max(chunk // 4, 64)
    return np.concatenate(parts)


def simulate(dirs: DirectionSet, kernel, model: WaitingTimeModel, horizon: float,
             rng: np.random.Generator, initial: int | None = None) -> Trajectory:
    """Generate legs until their cumulative length first exceeds ``horizon``.

    ``kernel`` is a :class:`TransitionKernel` or a :class:`DoeblinKernel`; the
    latter also records split-chain regeneration flags. The first direction is
    drawn from the stationary law unless ``initial`` is given.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if kernel.size != len(dirs):
        raise ValueError("kernel size does not match direction set")
    first = sample_initial(stationary_pi(kernel), rng) if initial is None else int(initial)
    durations = _draw_durations(model, horizon, rng)
    s = kahan_cumsum(durations, 0.0)
    n = int(np.searchsorted(s, horizon, side="right"))
    durations = durations[:n]
    s = s[:n + 1]
    regen = None
    if isinstance(kernel, DoeblinKernel):
        nxt, flags = run_split_chain(kernel, first, n, rng)
        regen = flags
    else:
        nxt = run_chain(kernel, first, n - 1, rng) if n > 1 else np.empty(0, np.int64)
    states = np.concatenate([[first], nxt[:n - 1]]).astype(np.int64)
    return Trajectory(states, durations, s, float(horizon), regen)


def _vectors(dirs) -> np.ndarray:
    return dirs.vectors if isinstance(dirs, DirectionSet) else np.asarray(dirs, dtype=float)


def position_at(traj: Trajectory, dirs, t):
    """X_t = sum of completed legs + (t - s_{N_t}) eta_{N_t}; vectorized in ``t``.

    ``dirs`` may be a DirectionSet or a raw array of (possibly shifted) vectors.
    """
    v = _vectors(dirs)
    tt = np.asarray(t, dtype=float)
    if np.any(tt > traj.horizon) or np.any(tt < 0):
        raise OutOfHorizon(f"t must lie in [0, {traj.horizon}]")
    pre = traj.prefix(v)
    k = traj.count(tt) - 1  # 0-based index of the current leg
    out = pre[k] + (tt - traj.s[k])[..., None] * v[traj.states[k]]
    return out


@dataclass(eq=False)
class RenewalDecomposition:
    """Cycle data of one trajectory.

    ``tau[0] = 0`` and ``tau[i]`` (i >= 1) are the 1-based regeneration steps.
    ``xi[i]`` and ``r[i]`` are displacement and duration of steps
    ``tau[i]+1 .. tau[i+1]``.
    """

    traj: Trajectory
    vectors: np.ndarray
    tau: np.ndarray
    xi: np.ndarray
    r: np.ndarray
    _visits: list = field(repr=False, default_factory=list)

    @property
    def cycle_lengths(self) -> np.ndarray:
        return np.diff(self.tau)

    def N(self, t):
        return self.traj.count(t)

    def c(self, t):
        """Number of regeneration steps among the first N_t steps."""
        return np.searchsorted(self.tau[1:], self.N(t), side="right")

    def c_v(self, t) -> np.ndarray:
        n = self.N(t)
        return np.array([np.searchsorted(p, n, side="right") for p in self._visits])

    def reconstruct(self, t) -> np.ndarray:
        """X_t rebuilt from completed cycles plus the in-progress one.

        The in-progress part runs over steps tau_k + 1 .. N_t - 1 with the
        partial leg of step N_t added on top; ``k`` counts the cycles that
        closed strictly before step N_t.
        """
        t = float(t)
        tr = self.traj
        n = int(self.N(t))
        k = int(np.searchsorted(self.tau[1:], n, side="left"))
        head = self.xi[:k].sum(axis=0) if k else np.zeros(self.vectors.shape[1])
        lo = int(self.tau[k])
        legs = tr.durations[lo:n - 1] @ self.vectors[tr.states[lo:n - 1]]
        last = (t - tr.s[n - 1]) * self.vectors[tr.states[n - 1]]
        return head + legs + last


def regeneration_steps(traj: Trajectory, dirs: DirectionSet) -> np.ndarray:
    if traj.regen is not None:
        return np.flatnonzero(traj.regen) + 1
    return np.flatnonzero(traj.states == dirs.distinguished_index) + 1


def decompose(traj: Trajectory, dirs) -> RenewalDecomposition:
    """Split a trajectory at the visits to the distinguished direction (or at
    the split-chain regenerations when the trajectory carries them)."""
    steps = regeneration_steps(traj, dirs)
    vectors = dirs.vectors
    k = len(dirs)
    if len(steps) == 0:
        raise NoRegeneration("no regeneration step within the horizon; retry with a larger horizon")
    xi, r = cycle_sums(vectors, traj.states, traj.durations, steps - 1)
    tau = np.concatenate([[0], steps]).astype(np.int64)
    visits = [np.flatnonzero(traj.states == v) + 1 for v in range(k)]
    return RenewalDecomposition(traj, vectors, tau, xi, r, visits)


def occupation_rates(decomp: RenewalDecomposition, t: float) -> dict[int, float]:
    return {v: c / t for v, c in enumerate(decomp.c_v(t))}


@dataclass(frozen=True)
class TailReport:
    thresholds: np.ndarray
    exceedance: np.ndarray
    stderr: np.ndarray
    rate: float
    intercept: float
    r2: float
    envelope: float
    bounded: bool

    def to_dict(self) -> dict:
        return {"thresholds": self.thresholds.tolist(), "exceedance": self.exceedance.tolist(),
                "rate": self.rate, "intercept": self.intercept, "r2": self.r2,
                "envelope": self.envelope, "bounded": self.bounded}


def cycle_length_tail(lengths, min_count: int = 20, min_cycles: int = 1000) -> TailReport:
    """Empirical P(length > k) at integer k and a least-squares fit of its log.

    The fit uses thresholds with at least ``min_count`` exceedances. ``envelope``
    is the smallest K1 with P(length > k) <= K1 exp(-rate k) at every fitted k;
    ``bounded`` requires a positive decay rate.
    """
    x = np.asarray(lengths)
    if len(x) < min_cycles:
        raise ValueError(f"need at least {min_cycles} cycles, got {len(x)}")
    ks = np.arange(1, int(x.max()) + 1)
    srt = np.sort(x)
    exceed = (len(x) - np.searchsorted(srt, ks, side="right")) / len(x)
    se = np.sqrt(exceed * (1 - exceed) / len(x))
    use = exceed * len(x) >= min_count
    if use.sum() < 2:
        # degenerate (e.g. constant) lengths: nothing beyond the support
        return TailReport(ks, exceed, se, math.inf, 0.0, 1.0, 1.0, True)
    kx, ly = ks[use], np.log(exceed[use])
    slope, intercept = np.polyfit(kx, ly, 1)
    fit = intercept + slope * kx
    ss_res = float(((ly - fit) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    rate = -float(slope)
    envelope = float(np.max(exceed[use] * np.exp(rate * kx)))
    return TailReport(ks, exceed, se, rate, float(intercept), r2, envelope, rate > 0)


def simulate_cycles(dirs: DirectionSet, kernel, model: WaitingTimeModel, n_cycles: int,
                    rng: np.random.Generator):
    """Directly simulate ``n_cycles`` i.i.d. regeneration cycles.

    Returns ``(xi, r, lengths)``. The chain starts at the distinguished
    direction (or, for a Doeblin kernel, just after a regeneration) and the
    cycle boundaries are the subsequent regeneration steps.
    """
    if n_cycles == 0:
        return np.zeros((0, dirs.dim)), np.zeros(0), np.zeros(0, np.int64)
    doeblin = isinstance(kernel, DoeblinKernel)
    if doeblin:
        p = kernel.regeneration_probability
        state = sample_initial(kernel.base, rng)
    else:
        p = regeneration_probability(dirs, kernel)
        state = dirs.distinguished_index
    states_parts, end_parts = [], []
    found, offset = 0, 0
    chunk = int(1.05 * n_cycles / p) + 64
    while found < n_cycles:
        if doeblin:
            # flags[i] is the outgoing coin of seg[i]; nxt[-1] carries over
            nxt, flags = run_split_chain(kernel, state, chunk, rng)
            seg = np.concatenate([[state], nxt[:-1]])
            ends = np.flatnonzero(flags)
            state = int(nxt[-1])
        else:
            seg = run_chain(kernel, state, chunk, rng)
            ends = np.flatnonzero(seg == dirs.distinguished_index)
            state = int(seg[-1])
        states_parts.append(seg)
        end_parts.append(ends + offset)
        found += len(ends)
        offset += len(seg)
        chunk = max(int(1.05 * (n_cycles - found) / p) + 64, 64)
    states = np.concatenate(states_parts).astype(np.int64)
    ends = np.concatenate(end_parts)[:n_cycles]
    n_steps = int(ends[-1]) + 1
    states = states[:n_steps]
    durations = np.asarray(model.sample(rng, n_steps), dtype=float)
    xi, r = cycle_sums(dirs.vectors, states, durations, ends)
    lengths = np.diff(np.concatenate([[-1], ends]))
    return xi, r, lengths


def ensemble_positions(dirs: DirectionSet, kernel, model: WaitingTimeModel, times,
                       master_seed: int, size: int, threads: int = 1, stream: int = 0,
                       start: int = 0) -> np.ndarray:
    """Positions of ``size`` independent walks at ``times``: shape (size, len(times), d).

    Member ``i`` uses the stream ``member_rng(master_seed, start + i, stream)``,
    so results are independent of ``threads``.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    horizon = float(times.max())

    def one(i):
        rng = member_rng(master_seed, start + i, stream)
        traj = simulate(dirs, kernel, model, horizon, rng)
        return position_at(traj, dirs, times)

    if threads <= 1:
        out = [one(i) for i in range(size)]
    else:
        with ThreadPoolExecutor(threads) as ex:
            out = list(ex.map(one, range(size)))
    return np.stack(out) if out else np.zeros((0, len(times), dirs.dim))


def regeneration_probability(dirs: DirectionSet, kernel) -> float:
    """Per-step regeneration chance: pi of the distinguished direction, or 1/c_r
    for a split Doeblin chain. Its inverse is the mean cycle length."""
    if isinstance(kernel, DoeblinKernel):
        return kernel.regeneration_probability
    return float(stationary_pi(kernel)[dirs.distinguished_index])
