"""Acceptance checks, one test per criterion.

Closed forms come from ``helpers``; nothing here reuses the solver being
checked as its own oracle.
"""

import math
import time

import numpy as np
import pytest

from helpers import (CLOSED_FORMS, box_spike, lam_centered_exponential, lam_gaussian,
                     random_path, step, tent_spike, zero_path)
from ldpath.cli import experiment_from_config, load_config
from ldpath.laws import (LegendreTransform, bernoulli_pm1, catalog, centered_exponential,
                         compound_poisson, exponential, gaussian, laplace_symmetric, legendre)
from ldpath.metrics import rho_borovkov, rho_borovkov_paths, rho_hat, rho_uniform, rho_weighted
from ldpath.montecarlo import CrossingExperiment, estimate_crossing, rate_table
from ldpath.pathspace import BVPath, graph, make_path
from ldpath.ratefn import (NEGATIVE_JUMP, crossing_rate, dyadic_partition, growth_bound_check, j,
                           j_partition_oracle)

CATALOG = catalog()
CP_RATE = 3 - 2 * math.sqrt(2)


def test_criterion_01_legendre_exactness():
    start = time.perf_counter()
    g1, ce = LegendreTransform(gaussian(1)), LegendreTransform(centered_exponential())
    for a in np.arange(-3.0, 3.0 + 1e-9, 0.25):
        assert abs(legendre(g1, float(a))[0] - lam_gaussian(float(a))) <= 1e-8
    for a in np.arange(-0.9, 5.0 + 1e-9, 0.1):
        a = float(round(a, 10))
        assert abs(legendre(ce, a)[0] - lam_centered_exponential(a)) <= 1e-8
    assert time.perf_counter() - start < 1.0


def test_criterion_02_compound_poisson_conjugate():
    law = compound_poisson(1.0, exponential(1.0))
    assert abs(legendre(law, 1.0)[0] - CP_RATE) <= 1e-8


def test_criterion_03_crossing_rate():
    vs = np.arange(1, 10_001) * 1e-4
    for name, law in CATALOG.items():
        lam = CLOSED_FORMS[name]
        for c in (0.5, 1.0, 2.0):
            res = crossing_rate(law, c)
            brute = min(v * lam(c / v) for v in vs)
            assert res.v0 == 1.0, (name, c)
            if math.isinf(brute):
                assert res.rate == math.inf and lam(c) == math.inf
                continue
            assert abs(res.rate - brute) <= 1e-6, (name, c)
            assert abs(res.rate - lam(c)) <= 1e-6, (name, c)


def test_criterion_04_bernoulli_rare_event():
    start = time.perf_counter()
    exp = CrossingExperiment(bernoulli_pm1(), "random_walk", 1.0, (20, 40), 100_000, seed=4)
    first, second = estimate_crossing(exp).rows
    assert abs(first.p_hat - 2.0**-20) <= 3 * first.std_err
    assert abs(second.empirical_rate - math.log(2)) <= 0.02
    assert time.perf_counter() - start < 30.0


def test_criterion_05_empirical_convergence():
    start = time.perf_counter()
    gauss = rate_table(experiment_from_config(load_config("gaussian_rw")))
    assert [r.scale for r in gauss.rows] == [25, 50, 100]
    rates = [r.empirical_rate for r in gauss.rows]
    assert rates[0] > rates[1] > rates[2] > 0.5
    assert gauss.final_gap <= 0.1

    cp = rate_table(experiment_from_config(load_config("cp_exp")))
    assert [r.scale for r in cp.rows] == [25, 50, 100]
    assert cp.rows[-1].theoretical_rate == pytest.approx(0.1715729, abs=1e-7)
    assert abs(cp.rows[-1].empirical_rate - 0.1715729) <= 0.03
    assert time.perf_counter() - start < 120.0


def test_criterion_06_metric_inequalities():
    rng = np.random.default_rng(606)
    for _ in range(1000):
        f, g = random_path(rng), random_path(rng)
        b, u = rho_borovkov_paths(f, g), rho_uniform(f, g)
        assert b.value <= u.value + b.certified_error + u.certified_error
        w, h = rho_weighted(f, g), rho_hat(f, g)
        assert w.value <= h.value + w.certified_error + h.certified_error


def test_criterion_07_triangle_inequality():
    rng = np.random.default_rng(707)
    for _ in range(300):
        f, g, h = (random_path(rng) for _ in range(3))
        fg, fh, hg = rho_weighted(f, g), rho_weighted(f, h), rho_weighted(h, g)
        err = max(fg.certified_error, fh.certified_error, hg.certified_error)
        assert fg.value <= fh.value + hg.value + 3 * err


def test_criterion_08_step_shift():
    for delta in (0.01, 0.1, 0.3):
        f, g = step(0.5), step(0.5 + delta)
        assert abs(rho_borovkov(graph(f), graph(g), 1e-4).value - delta) <= 1e-3
        assert rho_uniform(f, g).value == 1.0


def test_criterion_09_spike_non_convergence():
    zero = zero_path()
    for spike in (tent_spike, box_spike):
        for n in (16, 64, 256):
            f = spike(n)
            assert abs(rho_borovkov(graph(f), graph(zero), 1e-4).value - 1.0) <= 1e-3
            assert abs(rho_weighted(f, zero).value - 2 / 3) <= 0.05


def test_criterion_10_partition_oracle():
    law = gaussian(1)
    vals = [j_partition_oracle(lambda t: t * t, law, dyadic_partition(1.0, d)) for d in range(11)]
    assert abs(vals[-1] - 2 / 3) <= 1e-3
    assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))

    rng = np.random.default_rng(1010)
    laws = [gaussian(1), centered_exponential(), laplace_symmetric()]
    for i in range(100):
        law = laws[i % 3]
        p = random_path(rng, continuous=True, slope_scale=0.4)
        assert abs(j_partition_oracle(p, law, p.times) - j(p, law).value) <= 1e-12


def _parts(rng, horizon):
    k = int(rng.integers(1, 6))
    times = np.concatenate([[0.0], np.sort(rng.uniform(0, horizon, k - 1)), [horizon]])
    vals = np.concatenate([[0.0], np.cumsum(rng.normal(0, 0.3, k) * np.diff(times))])
    jumps = sorted((float(rng.uniform(0, horizon)), float(abs(rng.normal())))
                   for _ in range(int(rng.integers(0, 4))))
    return list(zip(times.tolist(), vals.tolist())), jumps


def test_criterion_11_jump_term():
    rng = np.random.default_rng(1111)
    law = centered_exponential()
    checked = 0
    while checked < 300:
        horizon = float(rng.uniform(0.5, 3.0))
        points, jumps = _parts(rng, horizon)
        base = j(make_path(points, jumps), law)
        if not base.finite:
            continue
        taken = {t for t, _ in jumps}
        at = float(rng.uniform(0, horizon))
        if at in taken:
            continue
        for h in (0.5, 1.0, 2.0):
            bumped = j(make_path(points, sorted(jumps + [(at, h)])), law)
            assert abs(bumped.value - base.value - h) <= 1e-10
        neg = j(make_path(points, sorted(jumps + [(at, -float(rng.uniform(1e-3, 2)))])), law)
        assert neg.value == math.inf and neg.infinite_reason == NEGATIVE_JUMP
        checked += 1


def _scaled(p, s):
    return BVPath(p.times, s * p.left, s * p.right)


def _scale_to_rate(p, law, target):
    """Largest scale (by bisection) whose rate stays at or below ``target``."""
    lo, hi = 0.0, 1.0
    while j(_scaled(p, hi), law).value <= target and hi < 1e6:
        lo, hi = hi, 2 * hi
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if j(_scaled(p, mid), law).value <= target:
            lo = mid
        else:
            hi = mid
    return _scaled(p, lo)


def test_criterion_12_growth_bound():
    rng = np.random.default_rng(1212)
    # (law, paths may jump, negative jumps allowed)
    laws = [(gaussian(1), False, False), (bernoulli_pm1(), False, False),
            (centered_exponential(), True, False), (laplace_symmetric(), True, True),
            (compound_poisson(1.0, exponential(1.0)), True, False)]
    for N in (1.0, 5.0):
        for i in range(1000):
            law, jumps, negative = laws[i % len(laws)]
            p = random_path(rng, horizon=float(rng.uniform(0.5, 8.0)), slope_scale=2.0,
                            jump_scale=2.0, continuous=not jumps,
                            positive_jumps_only=not negative)
            f = _scale_to_rate(p, law, N * float(rng.uniform(0.1, 1.0)))
            assert j(f, law).value <= N
            assert growth_bound_check(f, law, N)
