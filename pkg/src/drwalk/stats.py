"""Statistical primitives used by the experiments: ECDF distances, KS tests,
a Gaussianity check, the Hill estimator and a few concentration helpers."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


class TooSmall(ValueError):
    pass


class Degenerate(ValueError):
    pass


class NonPositive(ValueError):
    pass


class BadK(ValueError):
    pass


@dataclass(frozen=True)
class EmpiricalSample:
    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size < 1:
            raise TooSmall("empty sample")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def cdf(self, x):
        return np.searchsorted(self.values, x, side="right") / self.n


def as_sample(a) -> EmpiricalSample:
    return a if isinstance(a, EmpiricalSample) else EmpiricalSample(a)


@dataclass
class TestReport:
    """Outcome of one check. ``p_value`` is None for plain threshold checks."""

    name: str
    statistic: float
    p_value: float | None
    n1: int
    n2: int = 0
    level: float = 0.01
    passed: bool = True
    note: str = ""

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("statistic", "p_value", "level"):
            if d[k] is not None:
                d[k] = float(d[k])
        d["passed"] = bool(d["passed"])
        return d


def kolmogorov_sf(lam: float, terms: int = 100, tol: float = 1e-10) -> float:
    """P(K > lam) for the Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # theta-function form converges fast for small lam
        c = -math.pi ** 2 / (8 * lam * lam)
        acc = 0.0
        for k in range(1, terms + 1, 2):
            term = math.exp(c * k * k)
            acc += term
            if term < tol:
                break
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * acc))
    acc = 0.0
    for k in range(1, terms + 1):
        term = math.exp(-2.0 * k * k * lam * lam)
        acc += term if k % 2 else -term
        if term < tol:
            break
    return min(1.0, max(0.0, 2.0 * acc))


def ks_distance(a, b) -> float:
    """Exact sup |F_a - F_b| over the pooled jump points."""
    x, y = as_sample(a).values, as_sample(b).values
    pts = np.concatenate([x, y])
    fa = np.searchsorted(x, pts, side="right") / x.size
    fb = np.searchsorted(y, pts, side="right") / y.size
    return float(np.abs(fa - fb).max())


def ks_two_sample(a, b, level: float = 0.01, min_size: int = 10) -> TestReport:
    sa, sb = as_sample(a), as_sample(b)
    if sa.n < min_size or sb.n < min_size:
        raise TooSmall(f"need at least {min_size} values per sample, got {sa.n} and {sb.n}")
    d = ks_distance(sa, sb)
    ne = sa.n * sb.n / (sa.n + sb.n)
    p = kolmogorov_sf(math.sqrt(ne) * d)
    return TestReport("ks_two_sample", d, p, sa.n, sb.n, level, p > level)


def ks_one_sample(a, cdf, level: float = 0.01) -> TestReport:
    s = as_sample(a)
    f = cdf(s.values)
    i = np.arange(1, s.n + 1)
    d = float(max((i / s.n - f).max(), (f - (i - 1) / s.n).max()))
    p = kolmogorov_sf(math.sqrt(s.n) * d)
    return TestReport("ks_one_sample", d, p, s.n, 0, level, p > level)


def _normal_cdf(x):
    from scipy.special import ndtr
    return ndtr(x)


def moment_zscores(a) -> tuple[float, float]:
    """Skewness and excess-kurtosis z-scores under normality (large-n variances 6/n, 24/n)."""
    v = as_sample(a).values
    n = v.size
    z = v - v.mean()
    m2 = (z ** 2).mean()
    skew = (z ** 3).mean() / m2 ** 1.5
    kurt = (z ** 4).mean() / m2 ** 2 - 3.0
    return float(skew / math.sqrt(6.0 / n)), float(kurt / math.sqrt(24.0 / n))


def gaussian_fit_test(a, level: float = 0.01, min_size: int = 100) -> TestReport:
    """KS distance to the normal law with the sample's own mean and variance.

    The parameters are estimated, so the Kolmogorov p-value is conservative
    (no Lilliefors correction); the note carries the moment z-scores.
    """
    s = as_sample(a)
    if s.n < min_size:
        raise TooSmall(f"need at least {min_size} values, got {s.n}")
    mu = s.values.mean()
    sd = s.values.std(ddof=1)
    if not sd > 0:
        raise Degenerate("sample has zero variance")
    rep = ks_one_sample(s, lambda x: _normal_cdf((x - mu) / sd), level)
    zs, zk = moment_zscores(s)
    rep.name = "gaussian_fit"
    rep.note = f"estimated-parameter null (conservative); skew_z={zs:.3f} kurt_z={zk:.3f}"
    return rep


def default_k(n: int) -> int:
    return int(math.ceil(n ** 0.6))


def hill_index(a, k: int | None = None) -> float:
    """Hill estimate of the tail index from the top ``k`` order statistics:
    1 / mean(log X_(n-i+1) - log X_(n-k)), i = 1..k."""
    v = as_sample(a).values
    if v[0] <= 0:
        raise NonPositive("Hill estimator needs positive values")
    n = v.size
    k = default_k(n) if k is None else int(k)
    if not 10 <= k < n:
        raise BadK(f"k must satisfy 10 <= k < n (k={k}, n={n})")
    logs = np.log(v[n - k - 1:])
    h = (logs[1:] - logs[0]).mean()
    return float(1.0 / h)


def binomial_sigma(n: int, p: float) -> float:
    return math.sqrt(n * p * (1 - p))


def within_sigmas(observed, expected, sigma, k: float = 3.0) -> bool:
    return bool(np.all(np.abs(np.asarray(observed) - np.asarray(expected)) <= k * np.asarray(sigma)))


def binomial_upper_p(failures: int, n: int, p: float) -> float:
    """P(Bin(n, p) >= failures)."""
    return float(min(1.0, sum(math.comb(n, j) * p ** j * (1 - p) ** (n - j)
                              for j in range(failures, n + 1))))


def linear_fit_r2(x, y) -> tuple[float, float, float]:
    """Least-squares line through (x, y): (slope, intercept, R^2)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (intercept + slope * x)
    tot = ((y - y.mean()) ** 2).sum()
    return float(slope), float(intercept), float(1 - (res ** 2).sum() / tot) if tot > 0 else 1.0


def lag1_autocorr(x) -> float:
    x = np.asarray(x, float)
    z = x - x.mean()
    den = (z * z).sum()
    return float((z[1:] * z[:-1]).sum() / den) if den > 0 else 0.0


def iqr_normalize(x) -> np.ndarray:
    x = np.asarray(x, float)
    q1, q3 = np.percentile(x, [25, 75])
    if q3 <= q1:
        raise Degenerate("zero interquartile range")
    return x / (q3 - q1)
