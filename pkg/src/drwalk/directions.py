"""Direction sets, the direction chain and its stationary law.

The chain lives on a finite set of unit vectors. A second kernel type covers
the minorized (Doeblin) variant on a finite grid of sphere points, sampled via
the split-chain construction so that regeneration times are observable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

from ._kernels import chain_path, split_chain_path

ROW_TOL = 1e-12
UNIT_TOL = 1e-12
RENORM_TOL = 1e-9


class DirectionsError(ValueError):
    pass


class NonIrreducible(DirectionsError):
    pass


class NonConvergent(RuntimeError):
    pass


class InvalidKernel(DirectionsError):
    pass


@dataclass(frozen=True, eq=False)
class DirectionSet:
    vectors: np.ndarray
    distinguished_index: int = 0

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 2:
            raise DirectionsError("vectors must be a 2-d array (one row per direction)")
        if v.shape[0] < 2:
            raise DirectionsError("need at least two directions")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise DirectionsError(f"directions must have unit norm, got norms {norms}")
        diff = v[:, None, :] - v[None, :, :]
        dist = np.abs(diff).max(axis=2) + np.eye(len(v))
        if np.any(dist == 0):
            raise DirectionsError("directions must be pairwise distinct")
        if not 0 <= self.distinguished_index < len(v):
            raise DirectionsError(f"distinguished index {self.distinguished_index} out of range")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @classmethod
    def normalized(cls, vectors, distinguished_index: int = 0) -> "DirectionSet":
        """Accept vectors within ``RENORM_TOL`` of unit norm and rescale them."""
        v = np.asarray(vectors, dtype=float)
        norms = np.linalg.norm(v, axis=1)
        bad = np.abs(norms - 1.0) > RENORM_TOL
        if np.any(bad):
            raise DirectionsError(f"vectors {np.flatnonzero(bad).tolist()} are not unit vectors")
        return cls(v / norms[:, None], distinguished_index)

    @classmethod
    def circle(cls, n: int, distinguished_index: int = 0) -> "DirectionSet":
        ang = 2 * np.pi * np.arange(n) / n
        return cls(np.column_stack([np.cos(ang), np.sin(ang)]), distinguished_index)

    @classmethod
    def axes(cls, dim: int) -> "DirectionSet":
        """The 2*dim signed coordinate directions, ordered e1, e2, ..., -e1, -e2, ..."""
        eye = np.eye(dim)
        return cls(np.vstack([eye, -eye]))


def is_irreducible(matrix) -> bool:
    graph = (np.asarray(matrix) > 0).astype(np.int8)
    ncomp, _ = connected_components(graph, directed=True, connection="strong")
    return ncomp == 1


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    matrix: np.ndarray
    cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DirectionsError("kernel must be a square matrix")
        if np.any(m < 0):
            raise DirectionsError("kernel has negative entries")
        rows = m.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > ROW_TOL):
            raise DirectionsError(f"kernel rows must sum to 1, got {rows}")
        if not is_irreducible(m):
            raise NonIrreducible("kernel is not irreducible")
        cdf = np.cumsum(m, axis=1)
        cdf[:, -1] = 1.0
        m.setflags(write=False)
        cdf.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "cdf", cdf)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class StationaryLaw:
    pi: np.ndarray
    drift: np.ndarray


def _solve_stationary(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    a = m.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(a, b)


def stationary_power(matrix, tol: float = 1e-13, max_iter: int = 1_000_000) -> np.ndarray:
    """Power iteration on the lazy chain (I + P)/2, which converges even for
    periodic kernels."""
    m = np.asarray(matrix, dtype=float)
    lazy = 0.5 * (m + np.eye(m.shape[0]))
    pi = np.full(m.shape[0], 1.0 / m.shape[0])
    for _ in range(max_iter):
        nxt = pi @ lazy
        nxt /= nxt.sum()
        if np.abs(nxt - pi).max() < tol:
            return nxt
        pi = nxt
    raise NonConvergent(f"power iteration did not converge in {max_iter} steps")


def stationary_distribution(kernel: TransitionKernel, dirs: DirectionSet | None = None,
                            tol: float = 1e-10) -> StationaryLaw:
    m = kernel.matrix
    if not is_irreducible(m):
        raise NonIrreducible("kernel is not irreducible")
    pi = None
    try:
        pi = _solve_stationary(m)
    except np.linalg.LinAlgError:
        pass
    if pi is None or np.abs(pi @ m - pi).max() > tol or np.any(pi <= 0):
        pi = stationary_power(m)
    pi = pi / pi.sum()
    if np.abs(pi @ m - pi).max() > tol or np.any(pi <= 0):
        raise NonConvergent("stationary law failed the fixed-point check")
    if dirs is None:
        drift = np.zeros(0)
    else:
        if len(dirs) != kernel.size:
            raise DirectionsError("direction set and kernel sizes differ")
        drift = pi @ dirs.vectors
    pi.setflags(write=False)
    drift.setflags(write=False)
    return StationaryLaw(pi, drift)


def step(kernel: TransitionKernel, state: int, rng: np.random.Generator) -> int:
    u = rng.random()
    return int(np.searchsorted(kernel.cdf[state], u, side="right"))


def run_chain(kernel: TransitionKernel, start: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` successive states after ``start``."""
    return chain_path(kernel.cdf, int(start), rng.random(n))


def sample_initial(pi, rng: np.random.Generator) -> int:
    cdf = np.cumsum(pi)
    return int(min(np.searchsorted(cdf, rng.random(), side="right"), len(pi) - 1))


@dataclass(frozen=True, eq=False)
class DoeblinKernel:
    """Transition matrix ``H`` on a finite sphere grid with
    ``psi/c_r < H(x, .) < c_r * psi`` row by row."""

    base: np.ndarray
    ratio_bound: float
    matrix: np.ndarray
    base_cdf: np.ndarray = field(init=False, repr=False)
    resid_cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        psi = np.array(self.base, dtype=float)
        h = np.array(self.matrix, dtype=float)
        c = float(self.ratio_bound)
        if c <= 1:
            raise InvalidKernel("ratio bound must exceed 1")
        if np.any(psi <= 0) or abs(psi.sum() - 1) > ROW_TOL:
            raise InvalidKernel("base measure must be a strictly positive probability vector")
        if h.shape != (len(psi), len(psi)) or np.any(np.abs(h.sum(axis=1) - 1) > ROW_TOL):
            raise InvalidKernel("kernel must be a row-stochastic square matrix matching the base")
        if not (np.all(h > psi / c) and np.all(h < c * psi)):
            raise InvalidKernel("two-sided minorization bound violated")
        resid = (h - psi / c) / (1 - 1 / c)
        if np.any(resid < 0):
            raise InvalidKernel("negative residual mass")
        bcdf = np.cumsum(psi)
        bcdf[-1] = 1.0
        rcdf = np.cumsum(resid, axis=1)
        rcdf[:, -1] = 1.0
        for name, val in [("base", psi), ("matrix", h), ("base_cdf", bcdf), ("resid_cdf", rcdf)]:
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "ratio_bound", c)

    @property
    def size(self) -> int:
        return len(self.base)

    @property
    def regeneration_probability(self) -> float:
        return 1.0 / self.ratio_bound

    def row(self, state: int) -> np.ndarray:
        return self.matrix[state]

    def as_transition_kernel(self) -> TransitionKernel:
        return TransitionKernel(self.matrix)

    @classmethod
    def smeared(cls, dirs: DirectionSet, ratio_bound: float = 2.0, concentration: float = 0.8,
                base=None) -> "DoeblinKernel":
        """Mixture ``H(x,.) = psi/c_r + (1 - 1/c_r) Q(x,.)`` where ``Q(x,.)`` is a
        von Mises style smear around ``x``. The upper bound is checked, not assumed."""
        n = len(dirs)
        psi = np.full(n, 1.0 / n) if base is None else np.asarray(base, dtype=float)
        cos = dirs.vectors @ dirs.vectors.T
        q = psi[None, :] * np.exp(concentration * cos)
        q /= q.sum(axis=1, keepdims=True)
        w = 1.0 / ratio_bound
        return cls(psi, ratio_bound, w * psi[None, :] + (1 - w) * q)


def doeblin_step(k: DoeblinKernel, state: int, rng: np.random.Generator) -> tuple[int, bool]:
    regenerated = bool(rng.random() < k.regeneration_probability)
    row = k.base_cdf if regenerated else k.resid_cdf[state]
    nxt = int(min(np.searchsorted(row, rng.random(), side="right"), k.size - 1))
    return nxt, regenerated


def run_split_chain(k: DoeblinKernel, start: int, n: int, rng: np.random.Generator):
    """``n`` split-chain steps after ``start``: (states, regeneration flags)."""
    u_coin = rng.random(n)
    u_draw = rng.random(n)
    return split_chain_path(k.base_cdf, k.resid_cdf, k.regeneration_probability,
                            int(start), u_coin, u_draw)


def load_directions(source) -> tuple[DirectionSet, TransitionKernel]:
    """Parse ``{"dim", "vectors", "distinguished", "kernel"}`` from a dict or JSON path."""
    if isinstance(source, (str, Path)):
        source = json.loads(Path(source).read_text())
    vectors = np.asarray(source["vectors"], dtype=float)
    if vectors.ndim != 2 or vectors.shape[1] != int(source["dim"]):
        raise DirectionsError(f"vectors must have dimension {source['dim']}")
    dirs = DirectionSet.normalized(vectors, int(source.get("distinguished", 0)))
    kernel = TransitionKernel(source["kernel"])
    if kernel.size != len(dirs):
        raise DirectionsError("kernel size does not match number of directions")
    return dirs, kernel
