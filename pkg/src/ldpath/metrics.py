"""Path metrics: graph Hausdorff (rho_B), weighted, uniform and compact-uniform.

Every metric returns a :class:`MetricResult` whose ``certified_error``
bounds the distance between the reported value and the true one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import WindowMismatch
from .pathspace import BVPath, GraphPolyline, graph, weight_transform

_CHUNK = 1 << 21  # point-segment pairs evaluated per numpy batch


@dataclass(frozen=True)
class MetricResult:
    value: float
    certified_error: float = 0.0

    @property
    def upper(self) -> float:
        return self.value + self.certified_error

    @property
    def lower(self) -> float:
        return max(0.0, self.value - self.certified_error)


def _chebyshev_to_segment(p: np.ndarray, s0: np.ndarray, s1: np.ndarray) -> np.ndarray:
    """Elementwise Chebyshev distance from points ``p`` to segments ``[s0, s1]``.

    ``s -> max(|ex - s dx|, |ey - s dy|)`` is convex and piecewise linear on
    ``[0, 1]``, so its minimum sits at an endpoint, at a zero of either term
    or where the two terms have equal magnitude.
    """
    ex = p[..., 0] - s0[..., 0]
    ey = p[..., 1] - s0[..., 1]
    dx = s1[..., 0] - s0[..., 0]
    dy = s1[..., 1] - s0[..., 1]
    ex, ey, dx, dy = np.broadcast_arrays(ex, ey, dx, dy)
    best = np.maximum(np.abs(ex), np.abs(ey))
    with np.errstate(divide="ignore", invalid="ignore"):
        for s in (np.ones_like(ex), ex / dx, ey / dy, (ex - ey) / (dx - dy), (ex + ey) / (dx + dy)):
            s = np.clip(np.nan_to_num(s, nan=0.0, posinf=1.0, neginf=0.0), 0.0, 1.0)
            np.minimum(best, np.maximum(np.abs(ex - s * dx), np.abs(ey - s * dy)), out=best)
    return best


def point_segment_distances(points: np.ndarray, s0: np.ndarray, s1: np.ndarray) -> np.ndarray:
    """Chebyshev distances from each point to each segment, shape ``(n, m)``."""
    return _chebyshev_to_segment(points[:, None, :], s0[None, :, :], s1[None, :, :])


def _aligned_pieces(a: GraphPolyline, b: GraphPolyline) -> tuple[np.ndarray, np.ndarray]:
    """Segments of ``a`` cut at the vertex times of ``b``."""
    bt = np.unique(b.vertices[:, 0])
    p0, p1 = [], []
    for u, v in zip(a.starts, a.ends):
        if u[0] == v[0]:
            p0.append(u)
            p1.append(v)
            continue
        lo, hi = np.searchsorted(bt, [u[0], v[0]], side="right")
        cuts = bt[lo:hi]
        cuts = cuts[(cuts > u[0]) & (cuts < v[0])]
        ts = np.concatenate([[u[0]], cuts, [v[0]]])
        vals = u[1] + (v[1] - u[1]) * (ts - u[0]) / (v[0] - u[0])
        vals[-1] = v[1]
        pts = np.column_stack([ts, vals])
        p0.extend(pts[:-1])
        p1.extend(pts[1:])
    return np.array(p0), np.array(p1)


class _SegmentIndex:
    """Segments of a graph with the bookkeeping for time-windowed queries.

    For a piece of the other graph aligned to this graph's vertex times the
    vertical gap at its endpoints, ``R``, bounds the distance of every point
    of the piece, and only segments within ``R`` in time can come closer.
    """

    def __init__(self, g: GraphPolyline):
        self.s0, self.s1 = g.starts, g.ends
        self.t_lo = self.s0[:, 0]
        self.t_hi = self.s1[:, 0]
        vt, vy = g.vertices[:, 0], g.vertices[:, 1]
        self.ut, first = np.unique(vt, return_index=True)
        last = len(vt) - 1 - np.unique(vt[::-1], return_index=True)[1]
        self.y_left, self.y_right = vy[first], vy[last]

    def vertical_gap(self, x: np.ndarray) -> np.ndarray:
        """Largest gap to either one-sided value of this graph at the times of ``x``.

        Along a piece aligned to the vertex times the gap to the affine part
        is linear, so the endpoint maximum bounds it over the whole piece.
        """
        t, y = x[:, 0], x[:, 1]
        ut = self.ut
        k = np.clip(np.searchsorted(ut, t, side="right") - 1, 0, len(ut) - 1)
        on_vertex = ut[k] == t
        nxt = np.minimum(k + 1, len(ut) - 1)
        span = ut[nxt] - ut[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(span > 0, (t - ut[k]) / span, 0.0)
        inner = self.y_right[k] + frac * (self.y_left[nxt] - self.y_right[k])
        a = np.where(on_vertex, self.y_left[k], inner)
        b = np.where(on_vertex, self.y_right[k], inner)
        return np.maximum(np.abs(y - a), np.abs(y - b))

    def bounds(self, x0: np.ndarray, x1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Exact endpoint distances (their max is a lower bound) and an upper bound per piece."""
        reach = np.maximum(self.vertical_gap(x0), self.vertical_gap(x1))
        reach = reach * (1.0 + 1e-12) + 1e-300
        ta = np.minimum(x0[:, 0], x1[:, 0]) - reach
        tb = np.maximum(x0[:, 0], x1[:, 0]) + reach
        lo = np.searchsorted(self.t_hi, ta, side="left")
        hi = np.maximum(np.searchsorted(self.t_lo, tb, side="right"), lo + 1)
        hi = np.minimum(hi, len(self.s0))
        lo = np.minimum(lo, hi - 1)
        counts = hi - lo
        lower = np.empty(len(x0))
        upper = np.empty(len(x0))
        csum = np.cumsum(counts)
        i = 0
        while i < len(x0):
            base = csum[i - 1] if i else 0
            j = max(i + 1, int(np.searchsorted(csum, base + _CHUNK, side="right")))
            c = counts[i:j]
            total = int(c.sum())
            owner = np.repeat(np.arange(j - i), c)
            first = np.cumsum(c) - c
            seg = np.arange(total) - np.repeat(first, c) + np.repeat(lo[i:j], c)
            d0 = _chebyshev_to_segment(x0[i:j][owner], self.s0[seg], self.s1[seg])
            d1 = _chebyshev_to_segment(x1[i:j][owner], self.s0[seg], self.s1[seg])
            lower[i:j] = np.maximum(np.minimum.reduceat(d0, first), np.minimum.reduceat(d1, first))
            upper[i:j] = np.minimum(np.minimum.reduceat(np.maximum(d0, d1), first), reach[i:j])
            i = j
        return lower, upper


def directed_hausdorff(a: GraphPolyline, b: GraphPolyline, tol: float) -> float:
    """Lower bound ``h`` with ``sup_{x in a} dist(x, b) in [h, h + tol]``.

    Branch and bound over pieces of ``a``: on a piece with endpoints ``x0,
    x1`` the distance to any fixed segment of ``b`` is convex along the
    piece, so ``min_j max(d_j(x0), d_j(x1))`` bounds it from above.
    """
    index = _SegmentIndex(b)
    p0, p1 = _aligned_pieces(a, b) if len(a.vertices) > 1 else (a.vertices, a.vertices)
    lower, upper = index.bounds(p0, p1)
    best = float(lower.max())
    live = upper > best + tol
    p0, p1 = p0[live], p1[live]
    while len(p0):
        mid = 0.5 * (p0 + p1)
        c0 = np.concatenate([p0, mid])
        c1 = np.concatenate([mid, p1])
        lower, upper = index.bounds(c0, c1)
        best = max(best, float(lower.max()))
        live = (upper > best + tol) & (np.max(np.abs(c1 - c0), axis=1) > tol)
        p0, p1 = c0[live], c1[live]
    return best


def rho_borovkov(f: GraphPolyline, g: GraphPolyline, tol: float = 1e-4) -> MetricResult:
    """Hausdorff distance between completed graphs in the square norm."""
    if abs(f.t_start - g.t_start) > 1e-12 or abs(f.t_end - g.t_end) > 1e-12:
        raise WindowMismatch(f"windows [{f.t_start}, {f.t_end}] and [{g.t_start}, {g.t_end}] differ")
    if not tol > 0:
        raise ValueError("tol must be positive")
    value = max(directed_hausdorff(f, g, tol), directed_hausdorff(g, f, tol))
    return MetricResult(float(value), float(tol + f.approx_error + g.approx_error))


def rho_borovkov_paths(f: BVPath, g: BVPath, tol: float = 1e-4) -> MetricResult:
    """Unweighted graph distance of two paths on the whole half-line.

    Past the common window both tails are horizontal rays, which adds the
    tail gap ``|f(inf) - g(inf)|`` as a candidate and nothing else.
    """
    window = max(f.horizon, g.horizon)
    res = rho_borovkov(graph(f, window), graph(g, window), tol)
    return MetricResult(max(res.value, abs(f.tail_value - g.tail_value)), res.certified_error)


def truncation_time(f: BVPath, g: BVPath, tail_tol: float) -> float:
    """Time after which both weighted tails stay below ``tail_tol``."""
    mag = max(abs(f.tail_value), abs(g.tail_value))
    t = max(f.horizon, g.horizon)
    if mag > 0:
        t = max(t, mag / tail_tol - 1.0)
    return t


def rho_weighted(f: BVPath, g: BVPath, tol: float = 1e-4) -> MetricResult:
    """``rho_B`` between ``f(t)/(1+t)`` and ``g(t)/(1+t)``.

    The budget ``tol`` is split in four: weighted tails beyond the
    truncation time, the chord error of each transformed graph, and the
    branch-and-bound search.
    """
    quarter = tol / 4.0
    t_star = truncation_time(f, g, quarter)
    mag = max(abs(f.tail_value), abs(g.tail_value))
    tail_err = mag / (1.0 + t_star)
    gf = weight_transform(graph(f, t_star), quarter)
    gg = weight_transform(graph(g, t_star), quarter)
    res = rho_borovkov(gf, gg, quarter)
    return MetricResult(res.value, float(res.certified_error + tail_err))


def _union_discrepancy(f: BVPath, g: BVPath):
    ts = np.union1d(f.times, g.times)
    dl = np.abs(f.value_left(ts) - g.value_left(ts))
    dr = np.abs(f.value_right(ts) - g.value_right(ts))
    return ts, dl, dr


def rho_uniform(f: BVPath, g: BVPath) -> MetricResult:
    """``sup_t |f(t) - g(t)|`` over one-sided limits; exact."""
    _, dl, dr = _union_discrepancy(f, g)
    return MetricResult(float(max(dl.max(), dr.max())), 0.0)


def rho_hat(f: BVPath, g: BVPath) -> MetricResult:
    """``sup_t |f(t) - g(t)| / (1 + t)``; exact.

    On each affine piece ``(a + b t) / (1 + t)`` is monotone and on the
    constant tail it decreases, so breakpoints carry the supremum.
    """
    ts, dl, dr = _union_discrepancy(f, g)
    w = 1.0 + ts
    return MetricResult(float(max((dl / w).max(), (dr / w).max())), 0.0)


def rho_compact(f: BVPath, g: BVPath, terms: int = 40) -> MetricResult:
    """Partial sum of ``sum_k 2^-k min(sup_[0,k] |f - g|, 1)``."""
    ts, dl, dr = _union_discrepancy(f, g)
    both = np.maximum(dl, dr)
    total = 0.0
    for k in range(1, terms + 1):
        inside = ts < k
        sup = max(float(both[inside].max(initial=0.0)),
                  abs(f.eval(k)[0] - g.eval(k)[0]))
        total += math.ldexp(min(sup, 1.0), -k)
    return MetricResult(total, math.ldexp(1.0, -terms))
