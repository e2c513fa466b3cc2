"""Bounded-variation paths on the half-line and their completed graphs.

A :class:`BVPath` is stored as strictly increasing breakpoint times with
the one-sided limits ``left = f(t-)`` and ``right = f(t+)`` at each of
them. Between breakpoints the path is affine, it vanishes for ``t <= 0``
and it stays constant at ``right[-1]`` after the horizon.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import NegativeTime, NonzeroOrigin, UnsortedInput

MERGE_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BVPath:
    times: np.ndarray
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        t, lv, rv = (np.asarray(x, dtype=float) for x in (self.times, self.left, self.right))
        if not (t.ndim == lv.ndim == rv.ndim == 1) or not (t.size == lv.size == rv.size) or t.size == 0:
            raise ValueError("times, left and right must be equal-length 1-d sequences")
        if np.any(t < 0):
            raise NegativeTime("breakpoint times must be nonnegative")
        if np.any(np.diff(t) <= 0):
            raise UnsortedInput("breakpoint times must be strictly increasing")
        if t[0] != 0.0 or lv[0] != 0.0:
            raise NonzeroOrigin("the first breakpoint must be t=0 with left value 0")
        if not (np.all(np.isfinite(lv)) and np.all(np.isfinite(rv))):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "times", _frozen(t))
        object.__setattr__(self, "left", _frozen(lv))
        object.__setattr__(self, "right", _frozen(rv))

    @classmethod
    def from_breakpoints(cls, rows: Iterable[Sequence[float]]) -> BVPath:
        """Build from ``(t, left, right)`` rows, merging times closer than 1e-12."""
        rows = [tuple(map(float, r)) for r in rows]
        if not rows:
            raise ValueError("empty path")
        merged = [list(rows[0])]
        for t, lv, rv in rows[1:]:
            gap = t - merged[-1][0]
            if gap <= 0:
                raise UnsortedInput("breakpoint times must be strictly increasing")
            if gap <= MERGE_TOL:
                merged[-1][2] = rv
            else:
                merged.append([t, lv, rv])
        arr = np.array(merged)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    # basic views
    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def tail_value(self) -> float:
        return float(self.right[-1])

    @property
    def jumps(self) -> np.ndarray:
        return self.right - self.left

    @property
    def slopes(self) -> np.ndarray:
        """Slope on each open interval between consecutive breakpoints."""
        return (self.left[1:] - self.right[:-1]) / np.diff(self.times)

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.times.tolist(), self.left.tolist(), self.right.tolist()))

    def is_continuous(self) -> bool:
        return bool(np.all(self.jumps == 0.0))

    # evaluation
    def eval(self, t: float) -> tuple[float, float]:
        """One-sided limits ``(f(t-), f(t+))``."""
        if t < 0:
            return 0.0, 0.0
        i = int(np.searchsorted(self.times, t))
        if i < self.times.size and self.times[i] == t:
            return float(self.left[i]), float(self.right[i])
        if i >= self.times.size:
            return self.tail_value, self.tail_value
        t0, t1 = self.times[i - 1], self.times[i]
        v = self.right[i - 1] + (self.left[i] - self.right[i - 1]) * (t - t0) / (t1 - t0)
        return float(v), float(v)

    def value_left(self, ts) -> np.ndarray:
        return self._values(np.asarray(ts, dtype=float), self.left)

    def value_right(self, ts) -> np.ndarray:
        return self._values(np.asarray(ts, dtype=float), self.right)

    def _values(self, ts, at_breakpoint):
        out = np.zeros_like(ts, dtype=float)
        idx = np.searchsorted(self.times, ts)
        n = self.times.size
        exact = (idx < n) & (self.times[np.minimum(idx, n - 1)] == ts)
        tail = idx >= n
        inner = ~exact & ~tail & (ts >= 0) & (idx > 0)
        out[exact] = at_breakpoint[idx[exact]]
        out[tail] = self.tail_value
        i = idx[inner]
        t0, t1 = self.times[i - 1], self.times[i]
        out[inner] = self.right[i - 1] + (self.left[i] - self.right[i - 1]) * (ts[inner] - t0) / (t1 - t0)
        return out

    def running_max(self, t_end: float = 1.0) -> float:
        """Exact ``sup_{0<=t<=t_end} f(t)`` using one-sided limits (left limit at ``t_end``)."""
        inside = self.times < t_end
        best = max(0.0, float(np.max(np.maximum(self.left[inside], self.right[inside]), initial=0.0)))
        return max(best, self.eval(t_end)[0])

    def total_variation(self, upto: float | None = None) -> float:
        d = decompose(self)
        upto = self.horizon if upto is None else upto
        ac = sum(abs(s) * max(0.0, min(b, upto) - a) for (a, b), s in d.ac_segments if a < upto)
        return ac + d.f_s_plus(upto) + d.f_s_minus(upto)

    def with_jump(self, t: float, size: float) -> BVPath:
        """Copy of the path with an extra jump of ``size`` at time ``t``."""
        if t < 0:
            raise NegativeTime("jump time must be nonnegative")
        times, left, right = self.times.tolist(), self.left.tolist(), self.right.tolist()
        if t > self.horizon:
            times.append(t)
            left.append(self.tail_value)
            right.append(self.tail_value)
        i = int(np.searchsorted(np.array(times), t))
        if times[i] != t:
            v = self.eval(t)[0]
            times.insert(i, t)
            left.insert(i, v)
            right.insert(i, v)
        right[i] += size
        for j in range(i + 1, len(times)):
            left[j] += size
            right[j] += size
        return BVPath(times, left, right)

    def scaled(self, factor: float) -> BVPath:
        return BVPath(self.times, self.left * factor, self.right * factor)


def make_path(points: Sequence[tuple[float, float]], jumps: Sequence[tuple[float, float]] = (),
              horizon: float | None = None) -> BVPath:
    """Path equal to the linear interpolation of ``points`` plus the jumps.

    ``points`` describe the absolutely continuous part and must start at
    ``(0, 0)``; each jump ``(t, size)`` adds ``size`` from ``t+`` on. The
    continuous part is held constant after the last point.
    """
    pts = [(float(t), float(v)) for t, v in points]
    jps = [(float(t), float(h)) for t, h in jumps]
    if not pts:
        raise NonzeroOrigin("a path needs at least the origin point")
    if any(t < 0 for t, _ in pts) or any(t < 0 for t, _ in jps):
        raise NegativeTime("times must be nonnegative")
    for seq in (pts, jps):
        if any(b[0] <= a[0] for a, b in zip(seq, seq[1:])):
            raise UnsortedInput("times must be strictly increasing")
    if pts[0] != (0.0, 0.0):
        raise NonzeroOrigin("the first point must be (0, 0)")

    pt = np.array([t for t, _ in pts])
    pv = np.array([v for _, v in pts])
    jt = np.array([t for t, _ in jps])
    grid = sorted(set(pt.tolist()) | set(jt.tolist()))
    if horizon is not None and horizon > grid[-1]:
        grid.append(float(horizon))
    merged = [grid[0]]
    for t in grid[1:]:
        if t - merged[-1] > MERGE_TOL:
            merged.append(t)
    times = np.array(merged)

    ac = np.interp(times, pt, pv)
    left = ac.copy()
    right = ac.copy()
    for t, h in jps:
        k = int(np.argmin(np.abs(times - t)))
        right[k] += h
        left[k + 1:] += h
        right[k + 1:] += h
    return BVPath(times, left, right)


@dataclass(frozen=True)
class JordanDecomposition:
    """``f = f_a + f_{s+} - f_{s-}`` for a piecewise-linear path with jumps."""

    ac_knots: tuple[tuple[float, float], ...]
    ac_segments: tuple[tuple[tuple[float, float], float], ...]
    pos_jumps: tuple[tuple[float, float], ...]
    neg_jumps: tuple[tuple[float, float], ...]

    def f_s_plus(self, upto: float) -> float:
        return float(sum(h for t, h in self.pos_jumps if t <= upto))

    def f_s_minus(self, upto: float) -> float:
        return float(sum(h for t, h in self.neg_jumps if t <= upto))

    def f_a(self, t: float) -> float:
        kt = [k[0] for k in self.ac_knots]
        kv = [k[1] for k in self.ac_knots]
        return float(np.interp(max(t, 0.0), kt, kv)) if t > 0 else 0.0

    def value(self, t: float) -> tuple[float, float]:
        """Reconstructed one-sided limits at ``t``."""
        if t < 0:
            return 0.0, 0.0
        before = sum(h for s, h in self.pos_jumps if s < t) - sum(h for s, h in self.neg_jumps if s < t)
        at = sum(h for s, h in self.pos_jumps if s == t) - sum(h for s, h in self.neg_jumps if s == t)
        base = self.f_a(t) + before
        return base, base + at

    def to_path(self) -> BVPath:
        jumps = sorted(list(self.pos_jumps) + [(t, -h) for t, h in self.neg_jumps])
        return make_path(self.ac_knots, jumps, horizon=self.ac_knots[-1][0])


def decompose(path: BVPath) -> JordanDecomposition:
    t = path.times
    jumps = path.jumps
    cum_before = np.concatenate([[0.0], np.cumsum(jumps)[:-1]])
    ac_vals = path.left - cum_before
    knots = tuple(zip(t.tolist(), ac_vals.tolist()))
    segs = tuple(((float(a), float(b)), float(s)) for a, b, s in zip(t[:-1], t[1:], path.slopes))
    pos = tuple((float(s), float(h)) for s, h in zip(t, jumps) if h > 0)
    neg = tuple((float(s), float(-h)) for s, h in zip(t, jumps) if h < 0)
    return JordanDecomposition(knots, segs, pos, neg)


def evaluate(path: BVPath, t: float) -> tuple[float, float]:
    return path.eval(t)


@dataclass(frozen=True, eq=False)
class GraphPolyline:
    """Completed graph as a planar polyline of ``(t, alpha)`` vertices.

    ``approx_error`` bounds the Hausdorff distance (square norm) between the
    polyline and the exact curve it stands for.
    """

    vertices: np.ndarray
    approx_error: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 1:
            raise ValueError("vertices must be an (N, 2) array")
        if np.any(np.diff(v[:, 0]) < 0):
            raise UnsortedInput("graph vertices must be ordered in time")
        object.__setattr__(self, "vertices", _frozen(v))

    @property
    def t_start(self) -> float:
        return float(self.vertices[0, 0])

    @property
    def t_end(self) -> float:
        return float(self.vertices[-1, 0])

    @property
    def starts(self) -> np.ndarray:
        return self.vertices[:-1] if len(self.vertices) > 1 else self.vertices

    @property
    def ends(self) -> np.ndarray:
        return self.vertices[1:] if len(self.vertices) > 1 else self.vertices

    @property
    def vertical(self) -> np.ndarray:
        return self.starts[:, 0] == self.ends[:, 0]

    def vertical_segments(self) -> list[tuple[float, float, float]]:
        """``(t, alpha_from, alpha_to)`` for every vertical segment."""
        s, e = self.starts, self.ends
        return [(float(a[0]), float(a[1]), float(b[1]))
                for a, b in zip(s, e) if a[0] == b[0] and a[1] != b[1]]

    def section(self, u: float) -> tuple[float, float]:
        """``(min, max)`` of the alpha values of the graph at time ``u``."""
        v = self.vertices
        at = v[v[:, 0] == u, 1]
        vals = list(at)
        for a, b in zip(self.starts, self.ends):
            if a[0] < u < b[0]:
                vals.append(a[1] + (b[1] - a[1]) * (u - a[0]) / (b[0] - a[0]))
        if not vals:
            raise ValueError(f"time {u} outside the graph window")
        return float(min(vals)), float(max(vals))


def graph(path: BVPath, t_max: float | None = None) -> GraphPolyline:
    """Completed graph of ``path`` on ``[0, t_max]`` with the constant tail."""
    t_max = path.horizon if t_max is None else float(t_max)
    if t_max < path.horizon:
        raise ValueError("t_max must be at least the path horizon")
    verts = []
    for t, lv, rv in zip(path.times, path.left, path.right):
        verts.append((t, lv))
        if rv != lv:
            verts.append((t, rv))
    if t_max > path.horizon:
        verts.append((t_max, path.tail_value))
    dedup = [verts[0]]
    for p in verts[1:]:
        if p != dedup[-1]:
            dedup.append(p)
    return GraphPolyline(np.array(dedup))


def weight_transform(g: GraphPolyline, chord_tol: float) -> GraphPolyline:
    """Image of the graph under ``(t, a) -> (t, a / (1 + t))``.

    A straight piece with slope ``s`` maps to ``s + K / (1 + t)``; its chord
    over ``[p - 1, q - 1]`` deviates by ``|K| (p**-0.5 - q**-0.5)**2`` at most,
    so pieces are cut uniformly in ``(1 + t)**-0.5`` to keep every chord
    within ``chord_tol``.
    """
    if not chord_tol > 0:
        raise ValueError("chord_tol must be positive")
    v = g.vertices
    out = [(v[0, 0], v[0, 1] / (1.0 + v[0, 0]))]
    worst = 0.0
    for (t0, a0), (t1, a1) in zip(v[:-1], v[1:]):
        if t1 == t0:
            out.append((t1, a1 / (1.0 + t1)))
            continue
        p, q = 1.0 + t0, 1.0 + t1
        s = (a1 - a0) / (t1 - t0)
        k = abs(a0 - s * p)
        w0, w1 = 1.0 / math.sqrt(p), 1.0 / math.sqrt(q)
        pieces = 1 if k == 0.0 else max(1, math.ceil((w0 - w1) * math.sqrt(k / chord_tol)))
        w = np.linspace(w0, w1, pieces + 1)[1:]
        u = 1.0 / (w * w)
        u[-1] = q
        # rounding in 1/w^2 must not push cut times out of order
        ts = np.maximum.accumulate(np.clip(u - 1.0, t0, t1))
        u = 1.0 + ts
        vals = a0 + (a1 - a0) * (ts - t0) / (t1 - t0)
        out.extend(zip(ts.tolist(), (vals / u).tolist()))
        worst = max(worst, k * ((w0 - w1) / pieces) ** 2)
    return GraphPolyline(np.array(out), approx_error=worst)


# CSV interchange ------------------------------------------------------------

CSV_HEADER = ("t", "left", "right")


def path_to_csv(path: BVPath) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for t, lv, rv in path.rows():
        w.writerow([repr(t), repr(lv), repr(rv)])
    return buf.getvalue()


def path_from_csv(text: str) -> BVPath:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise ValueError(f"path CSV must start with the header {','.join(CSV_HEADER)}")
    rows = [tuple(float(x) for x in r) for r in reader if r]
    return BVPath.from_breakpoints(rows)


def read_path(file: str | Path) -> BVPath:
    return path_from_csv(Path(file).read_text())


def write_path(path: BVPath, file: str | Path) -> None:
    Path(file).write_text(path_to_csv(path))
