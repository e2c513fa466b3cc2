import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import linear, random_path, step
from ldpath.errors import NegativeTime, NonzeroOrigin, UnsortedInput
from ldpath.pathspace import (BVPath, GraphPolyline, decompose, evaluate, graph, make_path,
                              path_from_csv, path_to_csv, weight_transform)


class TestMakePath:
    def test_linear(self):
        p = linear()
        assert p.times.tolist() == [0.0, 1.0]
        assert p.right.tolist() == [0.0, 1.0]
        assert p.is_continuous()

    def test_step(self):
        p = step(0.5)
        assert p.rows() == [(0.0, 0.0, 0.0), (0.5, 0.0, 1.0), (1.0, 1.0, 1.0)]

    def test_duplicate_times(self):
        with pytest.raises(UnsortedInput):
            make_path([(0, 0), (1, 1), (1, 2)])
        with pytest.raises(UnsortedInput):
            BVPath([0.0, 1.0, 1.0], [0, 0, 0], [0, 0, 0])

    def test_negative_time(self):
        with pytest.raises(NegativeTime):
            make_path([(0, 0), (1, 1)], [(-0.5, 1.0)])

    def test_nonzero_origin(self):
        with pytest.raises(NonzeroOrigin):
            make_path([(0, 1), (1, 1)])
        with pytest.raises(NonzeroOrigin):
            BVPath([0.1, 1.0], [0, 0], [0, 0])

    def test_jump_at_kink_merges(self):
        p = make_path([(0, 0), (0.5, 0.5), (1, 0)], [(0.5, 2.0)])
        assert p.rows() == [(0.0, 0.0, 0.0), (0.5, 0.5, 2.5), (1.0, 2.0, 2.0)]

    def test_merge_close_times(self):
        p = BVPath.from_breakpoints([(0, 0, 0), (0.5, 0, 1), (0.5 + 1e-13, 1, 2), (1, 2, 2)])
        assert p.rows() == [(0.0, 0.0, 0.0), (0.5, 0.0, 2.0), (1.0, 2.0, 2.0)]

    def test_immutable(self):
        p = linear()
        with pytest.raises(ValueError):
            p.times[0] = 1.0


class TestDecompose:
    def test_linear(self):
        d = decompose(linear())
        assert d.ac_segments == (((0.0, 1.0), 1.0),)
        assert d.pos_jumps == () and d.neg_jumps == ()

    def test_step(self):
        d = decompose(step(0.5))
        assert all(s == 0 for _, s in d.ac_segments)
        assert d.pos_jumps == ((0.5, 1.0),)
        assert d.f_s_plus(1.0) == 1.0

    def test_negative_jump(self):
        p = make_path([(0, 0), (1, 1)], [(0.3, -2.0)])
        d = decompose(p)
        assert all(s == pytest.approx(1.0) for _, s in d.ac_segments)
        assert d.neg_jumps == ((0.3, 2.0),)
        assert p.eval(1.0)[0] == pytest.approx(-1.0)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_reconstruction(self, seed):
        p = random_path(np.random.default_rng(seed))
        d = decompose(p)
        for t in p.times:
            assert d.value(float(t)) == pytest.approx(p.eval(float(t)), abs=1e-12)
        q = d.to_path()
        assert np.allclose(q.times, p.times) and np.allclose(q.left, p.left, atol=1e-12)
        assert np.allclose(q.right, p.right, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_singular_parts_monotone(self, seed):
        d = decompose(random_path(np.random.default_rng(seed)))
        us = np.linspace(0, 6, 50)
        plus = [d.f_s_plus(u) for u in us]
        minus = [d.f_s_minus(u) for u in us]
        assert np.all(np.diff(plus) >= 0) and np.all(np.diff(minus) >= 0)


class TestEval:
    def test_linear_midpoint(self):
        assert evaluate(linear(), 0.5) == (0.5, 0.5)

    def test_step_at_jump(self):
        assert step(0.5).eval(0.5) == (0.0, 1.0)

    def test_negative_time(self):
        assert step(0.5).eval(-1.0) == (0.0, 0.0)

    def test_tail(self):
        assert step(0.5).eval(7.0) == (1.0, 1.0)


class TestGraph:
    def test_step_vertices(self):
        g = graph(step(0.5), 1.0)
        assert g.vertices.tolist() == [[0, 0], [0.5, 0], [0.5, 1], [1, 1]]

    def test_linear_two_vertices(self):
        assert len(graph(linear(), 1.0).vertices) == 2

    def test_three_jumps(self):
        p = make_path([(0, 0), (1, 0.3)], [(0.2, 1.0), (0.5, -0.5), (0.8, 2.0)])
        assert len(graph(p).vertical_segments()) == 3

    def test_tail_appended(self):
        g = graph(step(0.5), 3.0)
        assert g.vertices[-1].tolist() == [3.0, 1.0]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_sections(self, seed):
        p = random_path(np.random.default_rng(seed))
        g = graph(p)
        for u in np.linspace(0.0, p.horizon, 37):
            lv, rv = p.eval(float(u))
            lo, hi = g.section(float(u))
            assert lo == pytest.approx(min(lv, rv), abs=1e-12)
            assert hi == pytest.approx(max(lv, rv), abs=1e-12)

    def test_connected(self):
        p = make_path([(0, 0), (1, 1)], [(0.5, -2.0)])
        v = graph(p).vertices
        steps = np.diff(v, axis=0)
        assert np.all(steps[:, 0] >= 0)


class TestWeightTransform:
    def test_vertex_images(self):
        g = weight_transform(GraphPolyline(np.array([[0.0, 3.0], [1.0, 2.0]])), 1e-3)
        assert g.vertices[0].tolist() == [0.0, 3.0]
        assert g.vertices[-1].tolist() == [1.0, 1.0]

    def test_chord_error_segment(self):
        g = GraphPolyline(np.array([[0.0, 0.0], [10.0, 10.0]]))
        coarse = weight_transform(g, 10.0)
        fine = weight_transform(g, 1e-4)
        ts = np.linspace(0, 10, 200_001)
        exact = ts / (1 + ts)

        def err(poly):
            v = poly.vertices
            return float(np.max(np.abs(np.interp(ts, v[:, 0], v[:, 1]) - exact)))

        assert err(coarse) > 1e-2
        assert err(fine) <= 1e-4
        assert err(fine) <= fine.approx_error + 1e-12

    def test_weighted_tail_decay(self):
        p = step(0.5, height=3.0)
        g = weight_transform(graph(p, 1000.0), 1e-3)
        tail = g.vertices[g.vertices[:, 0] >= 1.0]
        assert np.all(np.abs(tail[:, 1]) <= 3.0 / (1 + tail[:, 0]) + 1e-12)


class TestPathMethods:
    def test_running_max_uses_left_limit_at_end(self):
        p = BVPath([0.0, 1.0], [0.0, 0.4], [0.0, 2.0])
        assert p.running_max(1.0) == pytest.approx(0.4)

    def test_running_max_jump_tops(self):
        p = make_path([(0, 0), (1, -1)], [(0.3, 1.5)])
        assert p.running_max() == pytest.approx(1.5 - 0.3)

    def test_total_variation(self):
        p = make_path([(0, 0), (1, 1)], [(0.3, -2.0)])
        assert p.total_variation() == pytest.approx(3.0)

    def test_with_jump(self):
        p = linear().with_jump(0.25, 2.0)
        assert p.eval(0.25) == pytest.approx((0.25, 2.25))
        assert p.tail_value == pytest.approx(3.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_csv_round_trip(self, seed):
        p = random_path(np.random.default_rng(seed))
        q = path_from_csv(path_to_csv(p))
        assert q.rows() == p.rows()

    def test_csv_header_required(self):
        with pytest.raises(ValueError):
            path_from_csv("0,0,0\n1,1,1\n")

    def test_slopes(self):
        p = make_path([(0, 0), (2, 1), (3, -1)])
        assert p.slopes.tolist() == [0.5, -2.0]
        assert math.isclose(p.horizon, 3.0)
