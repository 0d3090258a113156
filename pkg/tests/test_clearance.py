import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import grid_segment_distance
from tforge.clearance import clearance_report, segment_distance
from tforge.model import Configuration, TopologyMap

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
point = arrays(float, 3, elements=coord)


def test_parallel_offset():
    d, p, q = segment_distance([0, 0, 0], [1, 0, 0], [0, 0, 1], [1, 0, 1])
    assert d == 1.0
    assert p[2] == 0.0 and q[2] == 1.0


def test_crossing():
    d, p, q = segment_distance([0, 0, 0], [1, 1, 0], [1, 0, 0], [0, 1, 0])
    assert d == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(p, [0.5, 0.5, 0])


def test_degenerate_points():
    d, p, q = segment_distance([0, 0, 0], [0, 0, 0], [3, 4, 0], [3, 4, 0])
    assert d == 5.0
    d, _, q = segment_distance([0, 0, 0], [0, 0, 0], [-1, 1, 0], [1, 1, 0])
    assert d == 1.0 and np.allclose(q, [0, 1, 0])


def test_collinear_overlap():
    d, p, q = segment_distance([0, 0, 0], [2, 0, 0], [1, 0, 0], [3, 0, 0])
    assert d == 0.0
    assert np.allclose(p, q)


def test_against_grid(rng):
    for _ in range(100):
        p1, p2, q1, q2 = rng.random((4, 3))
        d, _, _ = segment_distance(p1, p2, q1, q2)
        assert abs(d - grid_segment_distance(p1, p2, q1, q2)) < 1e-3
        assert d <= grid_segment_distance(p1, p2, q1, q2) + 1e-12


@settings(max_examples=200)
@given(point, point, point, point)
def test_symmetric_and_consistent(p1, p2, q1, q2):
    d, p, q = segment_distance(p1, p2, q1, q2)
    d2, q_, p_ = segment_distance(q1, q2, p1, p2)
    assert d == d2
    assert np.array_equal(p, p_) and np.array_equal(q, q_)
    assert abs(np.linalg.norm(p - q) - d) <= 1e-12 * max(1.0, d)
    assert d >= 0


@settings(max_examples=100)
@given(point, point, point, point)
def test_closest_points_on_segments(p1, p2, q1, q2):
    _, p, q = segment_distance(p1, p2, q1, q2)
    for a, b, x in ((p1, p2, p), (q1, q2, q)):
        seg = b - a
        n2 = seg @ seg
        t = 0.0 if n2 == 0 else np.clip((x - a) @ seg / n2, 0, 1)
        assert np.linalg.norm(a + t * seg - x) <= 1e-9 * (1 + np.abs(x).max())


def test_isometry_invariance(rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    shift = rng.normal(size=3)
    for _ in range(200):
        P = rng.random((4, 3))
        d = segment_distance(*P)[0]
        d2 = segment_distance(*(P @ q.T + shift))[0]
        assert abs(d - d2) <= 1e-12 * max(1.0, d)


def two_parallel(gap):
    topo = TopologyMap(2, [(1, 2), (3, 4)], [(1, 3)])
    return Configuration([[0, 0, 0], [5, 0, 0], [0, gap, 0], [5, gap, 0]]), topo


def test_report_no_violation():
    cfg, topo = two_parallel(2.0)
    rep = clearance_report(cfg, topo, 1.0)
    assert rep.violations == ()
    assert rep.entries[0].distance == 2.0


def test_report_violation():
    cfg, topo = two_parallel(2.0)
    rep = clearance_report(cfg, topo, 3.0)
    assert len(rep.violations) == 1 and rep.violations[0].distance == 2.0
    assert rep.to_csv().splitlines() == ["strut_i,strut_j,distance_in,violation", "1,2,2.0000,1"]


def test_prism_report_matches_recomputation(prism3, prism_eq):
    rep = clearance_report(prism_eq.config, prism3, 1.0)
    assert [(e.i, e.j) for e in rep.entries] == [(1, 2), (1, 3), (2, 3)]
    X = prism_eq.config.coords
    for e in rep.entries:
        a, b = prism3.struts[e.i - 1], prism3.struts[e.j - 1]
        ref = grid_segment_distance(X[a[0] - 1], X[a[1] - 1], X[b[0] - 1], X[b[1] - 1], n=4000)
        assert abs(e.distance - ref) < 1e-2
        assert e.distance <= ref + 1e-12
        assert np.linalg.norm(e.closest_point_i - e.closest_point_j) == pytest.approx(e.distance, abs=1e-12)
    assert rep.distance(2, 1) == rep.distance(1, 2)


def test_violations_sorted(rng):
    topo = TopologyMap(4, [(1, 2), (3, 4), (5, 6), (7, 8)], [(1, 3)])
    cfg = Configuration(rng.random((8, 3)))
    rep = clearance_report(cfg, topo, 10.0)
    d = [v.distance for v in rep.violations]
    assert d == sorted(d) and len(d) == 6
