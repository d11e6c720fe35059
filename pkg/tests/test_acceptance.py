"""Acceptance criteria 1-11. Each test records one PASS/FAIL line, printed in
the terminal summary (and inline with ``pytest -s``)."""

import math
import time

import numpy as np
import pytest

from drwalk.directions import DirectionSet, DoeblinKernel, TransitionKernel, stationary_distribution
from drwalk.experiment import load_config, run
from drwalk.rng import member_rng
from drwalk.stats import hill_index
from drwalk.walk import (NoRegeneration, cycle_length_tail, decompose, position_at,
                         regeneration_probability, simulate, simulate_cycles)
from drwalk.waiting import WaitingTimeModel, norming

from conftest import ACCEPTANCE, CONFIGS, REFERENCE_KERNEL

EXP1 = WaitingTimeModel.exponential(1)
FAMILIES = [WaitingTimeModel.pareto(0.5), WaitingTimeModel.pareto(1.2), WaitingTimeModel.pareto(1.5),
            WaitingTimeModel.pareto(2.0), EXP1, WaitingTimeModel.exponential(3.0),
            WaitingTimeModel.lognormal(0.0, 1.0), WaitingTimeModel.deterministic(0.7),
            WaitingTimeModel.pareto_mixture([0.4, 0.6], [0.8, 1.6], [1.0, 0.3])]


def record(number, passed, detail, elapsed, budget):
    in_time = elapsed < budget
    ok = passed and in_time
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail} "
            f"({elapsed:.1f}s, budget {budget:g}s)")
    ACCEPTANCE.append(line)
    print(line)
    assert passed, line
    assert in_time, line


def run_config(name):
    cfg = load_config(CONFIGS / name)
    status, summary = run(cfg)
    return status, summary


def fmt_tests(summary):
    return "; ".join(f"{t['name']}={t['statistic']:.4g}{'' if t['passed'] else '(fail)'}"
                     for t in summary["tests"])


# --- shared checks for the finite chain and the Doeblin variant -------------

def renewal_identities(dirs, kernel, seed):
    """Cycle mean, mean cycle length and occupation rates (exponential(1) durations)."""
    pi = stationary_distribution(kernel.as_transition_kernel() if isinstance(kernel, DoeblinKernel)
                                 else kernel).pi
    mu = pi @ dirs.vectors
    p = regeneration_probability(dirs, kernel)
    xi, _, lengths = simulate_cycles(dirs, kernel, EXP1, 10**4, member_rng(seed, 0))
    pred = mu / p * EXP1.mean
    se = xi.std(axis=0, ddof=1) / math.sqrt(len(xi))
    z = np.abs(xi.mean(axis=0) - pred) / se
    len_err = abs(lengths.mean() * p - 1)
    t = 1e5
    d = decompose(simulate(dirs, kernel, EXP1, t, member_rng(seed, 1)), dirs)
    occ_err = np.abs(d.c_v(t) / t / (pi / EXP1.mean) - 1)
    passed = bool(np.all(z <= 3) and len_err < 0.02 and np.all(occ_err < 0.02))
    detail = (f"max |z(E xi)|={z.max():.2f} (<=3), cycle-length rel err={len_err:.4f} (<0.02), "
              f"max occupation rel err={occ_err.max():.4f} (<0.02) over {len(pi)} directions")
    return passed, detail


def reconstruction_residual(make_config, seed, n_configs=100, n_times=100, horizon=1000.0):
    worst, used = 0.0, 0
    for c in range(n_configs):
        rng = member_rng(seed, c)
        dirs, kernel = make_config(rng)
        model = FAMILIES[c % len(FAMILIES)]
        h = horizon
        while True:
            tr = simulate(dirs, kernel, model, h, rng)
            try:
                d = decompose(tr, dirs)
                break
            except NoRegeneration:
                h *= 4
        ts = rng.uniform(0, h, n_times)
        x = position_at(tr, dirs, ts)
        worst = max(worst, max(np.abs(d.reconstruct(t) - xt).max() for t, xt in zip(ts, x)))
        used += 1
    return worst, used


def random_finite_config(rng):
    n = int(rng.integers(2, 7))
    d = int(rng.integers(1, 4)) if n == 2 else int(rng.integers(2, 4))
    if d == 1:
        dirs = DirectionSet(np.array([[1.0], [-1.0]]), int(rng.integers(2)))
    else:
        v = rng.normal(size=(n, d))
        dirs = DirectionSet(v / np.linalg.norm(v, axis=1, keepdims=True), int(rng.integers(n)))
    while True:
        m = rng.random((n, n)) * (rng.random((n, n)) < 0.7)
        m[np.arange(n), rng.permutation(n)] += 0.05
        m[np.arange(n), (np.arange(n) + 1) % n] += 0.05
        try:
            return dirs, TransitionKernel(m / m.sum(axis=1, keepdims=True))
        except ValueError:
            continue


CIRCLE16 = DirectionSet.circle(16)


def random_doeblin_config(rng):
    psi = rng.uniform(0.5, 1.5, 16)
    k = DoeblinKernel.smeared(CIRCLE16, 2.0, float(rng.uniform(0.0, 1.2)), psi / psi.sum())
    return CIRCLE16, k


# --- criteria ------------------------------------------------------------

def test_criterion_01_renewal_identities():
    t0 = time.perf_counter()
    dirs = DirectionSet.axes(2)
    passed, detail = renewal_identities(dirs, TransitionKernel(REFERENCE_KERNEL), 101)
    record(1, passed, "renewal identities: " + detail, time.perf_counter() - t0, 60)


def test_criterion_02_decomposition_exactness():
    t0 = time.perf_counter()
    worst, n = reconstruction_residual(random_finite_config, 102)
    record(2, worst <= 1e-9, f"max reconstruction residual {worst:.2e} (<=1e-9) over {n} configs x 100 times",
           time.perf_counter() - t0, 60)


def test_criterion_03_lln():
    t0 = time.perf_counter()
    status, s = run_config("lln.json")
    q = s["details"]["velocity_error_quantiles"]
    record(3, status == 0, f"LLN {fmt_tests(s)} (need >=0.95); error quantiles 50/90/95/99% = "
           + "/".join(f"{v:.4f}" for v in q), time.perf_counter() - t0, 300)


def test_criterion_04_diffusive():
    t0 = time.perf_counter()
    status, s = run_config("diffusive.json")
    record(4, status == 0, f"diffusive {fmt_tests(s)}", time.perf_counter() - t0, 600)


def test_criterion_05_stable_oracle():
    t0 = time.perf_counter()
    status, s = run_config("stable_1_2.json")
    record(5, status == 0, f"stable vs cycle oracle {fmt_tests(s)}", time.perf_counter() - t0, 600)


def test_criterion_06_alpha2():
    t0 = time.perf_counter()
    status, s = run_config("stable_alpha2.json")
    record(6, status == 0, f"alpha=2 a_t={s['details']['a_t']:.2f} {fmt_tests(s)}",
           time.perf_counter() - t0, 600)


def test_criterion_07_ballistic():
    t0 = time.perf_counter()
    status, s = run_config("ballistic.json")
    record(7, status == 0, f"ballistic {fmt_tests(s)}", time.perf_counter() - t0, 300)


def test_criterion_08_tail_inheritance():
    t0 = time.perf_counter()
    dirs = DirectionSet.axes(2)
    xi, _, lengths = simulate_cycles(dirs, TransitionKernel(REFERENCE_KERNEL), WaitingTimeModel.pareto(1.5),
                                     10**5, member_rng(108, 0))
    h = hill_index(np.linalg.norm(xi, axis=1))
    rep = cycle_length_tail(lengths)
    passed = 1.3 <= h <= 1.7 and rep.bounded and rep.r2 > 0.98
    record(8, passed, f"Hill(|xi|)={h:.3f} in [1.3,1.7]; cycle-length tail rate={rep.rate:.3f}, "
           f"K1={rep.envelope:.3f}, R2={rep.r2:.5f} (>0.98)", time.perf_counter() - t0, 120)


def test_criterion_09_norming():
    t0 = time.perf_counter()
    worst = 0.0
    for a in (0.5, 1.2, 1.5, 1.9):
        m = WaitingTimeModel.pareto(a)
        for t in (1e3, 1e4, 1e5, 1e6):
            worst = max(worst, abs(norming(m, t) / t ** (1 / a) - 1))
    record(9, worst < 1e-6, f"max relative error of a_t vs t^(1/alpha) = {worst:.2e} (<1e-6)",
           time.perf_counter() - t0, 1)


def test_criterion_10_lil():
    t0 = time.perf_counter()
    st1, s1 = run_config("lil.json")
    st2, s2 = run_config("lil_heavy.json")
    q = s1["details"]["sup_quantiles"]
    record(10, st1 == 0 and st2 == 0,
           f"LIL (diagnostic) {fmt_tests(s1)} [sup 10/50/90%: {q[0]:.2f}/{q[1]:.2f}/{q[2]:.2f}]; "
           f"{fmt_tests(s2)} (need >=0.9)", time.perf_counter() - t0, 300)


def test_criterion_11_doeblin():
    t0 = time.perf_counter()
    k = DoeblinKernel.smeared(CIRCLE16, ratio_bound=2.0)
    p1, d1 = renewal_identities(CIRCLE16, k, 111)
    worst, n = reconstruction_residual(random_doeblin_config, 112)
    p2 = worst <= 1e-9
    record(11, p1 and p2, f"Doeblin c_r=2, 16 points: [1] {'ok' if p1 else 'FAIL'}: {d1}; "
           f"[2] {'ok' if p2 else 'FAIL'}: residual {worst:.2e} over {n} configs",
           time.perf_counter() - t0, 120)
