"""Rate functional on bounded-variation paths and boundary-crossing rates.

For a path ``f = f_a + f_{s+} - f_{s-}`` and a centered law,

    J_0^U(f) = int_0^U Lambda(f_a'(t)) dt + lambda_+ f_{s+}(U) + |lambda_-| f_{s-}(U)

and ``J`` is its limit in ``U``. Paths here have constant tails, so the
limit is reached at the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import BadPartition
from .laws import INF, LegendreTransform, Law
from .pathspace import BVPath

VALUE_TOL = 1e-12

POSITIVE_JUMP = "positive-jump"
NEGATIVE_JUMP = "negative-jump"
DIVERGENT_AC = "divergent-ac-integral"
DIVERGENT_TAIL = "divergent-tail"


@dataclass(frozen=True)
class RateValue:
    value: float
    numeric_error: float = 0.0
    infinite_reason: str | None = None

    def __post_init__(self):
        if (self.value == INF) != (self.infinite_reason is not None):
            raise ValueError("infinite_reason must be set exactly when the value is infinite")

    @property
    def finite(self) -> bool:
        return self.infinite_reason is None


def _transform(law: Law | LegendreTransform) -> LegendreTransform:
    return law if isinstance(law, LegendreTransform) else LegendreTransform(law)


def _ac_integral(lt: LegendreTransform, slopes, dts) -> float:
    total = 0.0
    for s, dt in zip(slopes, dts):
        if dt <= 0:
            continue
        val = lt.value(float(s))
        if val == INF:
            return INF
        total += val * float(dt)
    return total


def j0u(path: BVPath, law: Law | LegendreTransform, U: float) -> RateValue:
    """``J_0^U`` of ``path``; jumps at times ``<= U`` are charged."""
    lt = _transform(law)
    dom = lt.law.domain
    t = path.times
    if path.times.size > 1:
        ends = np.minimum(t[1:], U)
        dts = np.where(t[:-1] < U, ends - t[:-1], 0.0)
        ac = _ac_integral(lt, path.slopes, dts)
    else:
        ac = 0.0
    if ac == INF:
        return RateValue(INF, 0.0, DIVERGENT_AC)

    jumps = path.jumps[t <= U]
    up = float(jumps[jumps > 0].sum())
    down = float(-jumps[jumps < 0].sum())
    total = ac
    if up > 0:
        if dom.lambda_plus == INF:
            return RateValue(INF, 0.0, POSITIVE_JUMP)
        total += dom.lambda_plus * up
    if down > 0:
        if dom.lambda_minus == -INF:
            return RateValue(INF, 0.0, NEGATIVE_JUMP)
        total += abs(dom.lambda_minus) * down
    return RateValue(total, VALUE_TOL * max(1.0, min(U, path.horizon)))


def j(path: BVPath, law: Law | LegendreTransform) -> RateValue:
    """Rate function ``J``; the constant tail adds nothing past the horizon."""
    return j0u(path, law, path.horizon)


def j_partition_oracle(path: BVPath | Callable[[float], float], law: Law | LegendreTransform,
                       partition) -> float:
    """``I`` of the chordal interpolant of ``path`` through ``partition``.

    Callables are evaluated pointwise; for a :class:`BVPath` the left limit
    is used at partition times.
    """
    ts = np.asarray(partition, dtype=float)
    if ts.ndim != 1 or ts.size < 2:
        raise BadPartition("a partition needs at least two times")
    if ts[0] != 0.0:
        raise BadPartition("a partition must start at 0")
    if np.any(np.diff(ts) <= 0):
        raise BadPartition("partition times must be strictly increasing")
    lt = _transform(law)
    if isinstance(path, BVPath):
        vals = path.value_left(ts)
    else:
        vals = np.array([float(path(x)) for x in ts])
    dts = np.diff(ts)
    return _ac_integral(lt, np.diff(vals) / dts, dts)


def dyadic_partition(U: float, depth: int) -> np.ndarray:
    return np.linspace(0.0, U, 2**depth + 1)


# Boundary crossing ----------------------------------------------------------

@dataclass(frozen=True)
class CrossingRate:
    c: float
    v0: float
    rate: float


V_MIN = 1e-6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(fn: Callable[[float], float], a: float, b: float,
                       tol: float = 1e-10) -> tuple[float, float]:
    """Minimize a convex function on ``[a, b]``; returns ``(x, fn(x))``."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def crossing_rate(law: Law | LegendreTransform, c: float, grid: float = 1e-3,
                  allow_drift: bool = False) -> CrossingRate:
    """``inf_{0<v<=1} v Lambda(c / v)`` with its minimizer.

    The map is convex in ``v``; golden-section search is cross-checked on a
    uniform grid of step ``grid`` and at ``v = 1``. Times below ``V_MIN``
    are not evaluated: there the map tends to ``c * lambda_+``, which is
    only used if it beats every evaluated point. ``allow_drift`` admits a
    non-centered law (the crossing path then continues with the mean slope).
    """
    if isinstance(law, LegendreTransform):
        lt = law
    else:
        lt = LegendreTransform(law, require_centered=not allow_drift)
    if c < 0:
        raise ValueError("crossing level must be nonnegative")
    if c == 0:
        return CrossingRate(0.0, 1.0, 0.0)

    def phi(v):
        val = lt.value(c / v)
        return INF if val == INF else v * val

    hi_s = lt.law.support[1]
    lo_v = max(V_MIN, c / hi_s) if math.isfinite(hi_s) else V_MIN
    if lo_v > 1.0:
        return CrossingRate(float(c), 1.0, INF)

    cands = [(phi(1.0), 1.0)]
    if lo_v < 1.0:
        vg, fg = golden_section_min(phi, lo_v, 1.0)
        cands.append((fg, vg))
        for v in np.arange(1.0, lo_v, -grid)[1:]:
            cands.append((phi(float(v)), float(v)))
        cands.append((phi(lo_v), lo_v))
    # ties resolve to the latest time
    rate, v0 = min(cands, key=lambda fv: (fv[0], -fv[1]))
    lam_plus = lt.law.domain.lambda_plus
    if math.isfinite(lam_plus) and c * lam_plus < rate:
        rate, v0 = c * lam_plus, V_MIN
    return CrossingRate(float(c), float(v0), float(rate))


def truncate_overshoot(path: BVPath, c: float, t_end: float = 1.0) -> tuple[BVPath, float, float]:
    """Remove the overshoot over level ``c`` at the first hitting time.

    Returns ``(path_bar, v, overshoot)`` where ``path_bar`` equals ``path``
    minus ``overshoot`` after ``v``. Raises ``ValueError`` for paths that
    never reach ``c`` on ``[0, t_end]``.
    """
    t, lv, rv = path.times, path.left, path.right
    for i in range(t.size):
        if t[i] > t_end:
            break
        if i > 0 and lv[i] >= c:
            s = (lv[i] - rv[i - 1]) / (t[i] - t[i - 1])
            return path, float(t[i - 1] + (c - rv[i - 1]) / s), 0.0
        if t[i] < t_end and rv[i] >= c:
            b = float(rv[i] - c)
            if b == 0.0:
                return path, float(t[i]), 0.0
            new_l, new_r = lv.copy(), rv.copy()
            new_r[i:] -= b
            new_l[i + 1:] -= b
            return BVPath(t, new_l, new_r), float(t[i]), b
    if path.horizon < t_end and path.tail_value >= c:
        return path, path.horizon, 0.0
    raise ValueError(f"path does not reach level {c} on [0, {t_end}]")


# Growth bound ---------------------------------------------------------------

@lru_cache(maxsize=256)
def _growth_constant(law: Law, alpha_max: float, num: int) -> float:
    lt = LegendreTransform(law)
    grid = np.linspace(-alpha_max, alpha_max, num)
    grid = grid[grid != 0.0]
    return float(min(lt.value(a) / min(a * a, abs(a)) for a in grid))


def fit_growth_constant(law: Law, alpha_max: float = 2.0, num: int = 4001) -> float:
    """Largest ``c`` with ``Lambda(a) >= c * min(a^2, |a|)`` on a grid over ``|a| <= alpha_max``.

    ``Lambda(a) / |a|`` is nondecreasing in ``|a|`` (convexity and
    ``Lambda(0) = 0``), so for ``alpha_max >= 1`` the grid minimum is a
    global one up to grid resolution on ``[-1, 1]``.
    """
    return _growth_constant(law, float(alpha_max), int(num))


def growth_constant(c: float) -> float:
    return 1.0 / math.sqrt(c) + 1.0 / c


def growth_bound_check(path: BVPath, law: Law, N: float) -> bool:
    """``|f(U)| <= C sqrt(U) N`` at every breakpoint ``U >= 1`` and at ``U = 1``.

    ``C = 1/sqrt(c) + 1/c`` with ``c`` from :func:`fit_growth_constant`.
    The bound is guaranteed for ``J(f) <= N`` when ``N >= 1``.
    """
    us = np.concatenate([[1.0], path.times[path.times >= 1.0]])
    vals = np.maximum(np.abs(path.value_left(us)), np.abs(path.value_right(us)))
    big_c = growth_constant(fit_growth_constant(law))
    return bool(np.all(vals <= big_c * np.sqrt(us) * N))
