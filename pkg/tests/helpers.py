"""Closed-form oracles and random path generators shared by the test modules."""

import math

import numpy as np

from ldpath.pathspace import BVPath, make_path


# Closed-form deviation functions, independent of the numerical solver.

def lam_gaussian(a, var=1.0):
    return a * a / (2.0 * var)


def lam_bernoulli(a):
    if abs(a) > 1:
        return math.inf
    if abs(a) == 1:
        return math.log(2.0)
    return 0.5 * (1 + a) * math.log1p(a) + 0.5 * (1 - a) * math.log1p(-a)


def lam_centered_exponential(a):
    return math.inf if a <= -1 else a - math.log1p(a)


def lam_laplace(a):
    if a == 0:
        return 0.0
    r = math.sqrt(1.0 + a * a)
    return r - 1.0 + math.log(2.0 * (r - 1.0) / (a * a))


def lam_centered_poisson(a, m=1.0):
    if a < -m:
        return math.inf
    if a == -m:
        return m
    return (m + a) * math.log((m + a) / m) - a


def lam_cp_exp(a):
    """Rate-1 compound Poisson with Exp(1) jumps and drift -1."""
    if a < -1:
        return math.inf
    if a == -1:
        return 1.0
    lam = 1.0 - 1.0 / math.sqrt(1.0 + a)
    return lam * a - lam * lam / (1.0 - lam)


CLOSED_FORMS = {
    "gaussian": lam_gaussian,
    "bernoulli_pm1": lam_bernoulli,
    "centered_exponential": lam_centered_exponential,
    "laplace_symmetric": lam_laplace,
    "centered_poisson": lam_centered_poisson,
    "compound_poisson": lam_cp_exp,
}


# Random paths

def random_path(rng, max_segments=6, max_jumps=5, horizon=None, slope_scale=1.0,
                jump_scale=1.0, positive_jumps_only=False, continuous=False):
    """Random piecewise-linear path starting at 0 with up to ``max_jumps`` jumps."""
    T = float(rng.uniform(0.5, 5.0)) if horizon is None else float(horizon)
    k = int(rng.integers(1, max_segments + 1))
    knots = np.sort(rng.uniform(0.0, T, k - 1))
    times = np.concatenate([[0.0], knots, [T]])
    slopes = rng.normal(0.0, slope_scale, k)
    vals = np.concatenate([[0.0], np.cumsum(slopes * np.diff(times))])
    points = list(zip(times.tolist(), vals.tolist()))
    jumps = []
    if not continuous:
        for _ in range(int(rng.integers(0, max_jumps + 1))):
            size = float(rng.normal(0.0, jump_scale))
            if positive_jumps_only:
                size = abs(size)
            jumps.append((float(rng.uniform(0.0, T)), size))
    jumps.sort()
    return make_path(points, jumps)


def step(at, height=1.0, horizon=1.0):
    return make_path([(0.0, 0.0), (horizon, 0.0)], [(at, height)])


def zero_path(horizon=1.0):
    return make_path([(0.0, 0.0), (horizon, 0.0)])


def linear(slope=1.0, horizon=1.0):
    return make_path([(0.0, 0.0), (horizon, slope * horizon)])


def tent_spike(n, horizon=1.0):
    """Zero except a unit tent on ``[1/2 - 1/n, 1/2]`` with apex at its midpoint."""
    a, b = 0.5 - 1.0 / n, 0.5
    return make_path([(0.0, 0.0), (a, 0.0), (0.5 * (a + b), 1.0), (b, 0.0), (horizon, 0.0)])


def box_spike(n, horizon=1.0):
    """Indicator of ``(1/2 - 1/n, 1/2]``."""
    a, b = 0.5 - 1.0 / n, 0.5
    return BVPath([0.0, a, b, horizon], [0.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 0.0])


def dense_graph_points(path, t_max, spacing):
    """Points along the completed graph at Chebyshev spacing at most ``spacing``."""
    from ldpath.pathspace import graph

    v = graph(path, t_max).vertices
    pts = [v[:1]]
    for p, q in zip(v[:-1], v[1:]):
        k = max(1, int(math.ceil(np.max(np.abs(q - p)) / spacing)))
        s = np.linspace(0.0, 1.0, k + 1)[1:, None]
        pts.append(p + s * (q - p))
    return np.concatenate(pts)


def dense_hausdorff(f, g, t_max, spacing=2e-3):
    """Chebyshev Hausdorff distance between densely sampled graphs."""
    a = dense_graph_points(f, t_max, spacing)
    b = dense_graph_points(g, t_max, spacing)

    def directed(x, y):
        best = 0.0
        for i in range(0, len(x), 512):
            d = np.max(np.abs(x[i:i + 512, None, :] - y[None, :, :]), axis=2).min(axis=1)
            best = max(best, float(d.max()))
        return best

    return max(directed(a, b), directed(b, a))
