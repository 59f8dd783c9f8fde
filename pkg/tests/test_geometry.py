import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dikinwalk.barriers import BarrierOracle
from dikinwalk.body import BodySpec, ball, cube
from dikinwalk.errors import InfeasiblePointError, NumericalError, UnboundedBodyError
from dikinwalk.geometry import (
    chord_endpoints,
    cross_ratio,
    dikin_ellipsoid_points,
    gauge_sandwich_check,
    hilbert_distance,
    local_norm,
    riemannian_distance_approx,
    symmetric_gauge,
)
from dikinwalk.linalg import HessianFactor
from dikinwalk.rng import make_rng

from .conftest import interior_points, random_polytope


class TestLocalNorm:
    @pytest.mark.parametrize(
        "H, v, expect",
        [(np.eye(2), [3, 4], 5.0), (np.diag([4.0, 1.0]), [1, 0], 2.0), (2 * np.eye(2), [1, 1], 2.0)],
    )
    def test_examples(self, H, v, expect):
        assert local_norm(H, v) == pytest.approx(expect, rel=1e-15)

    def test_zero(self):
        assert local_norm(np.eye(3), np.zeros(3)) == 0.0


class TestHessianFactor:
    def test_reconstruction(self, rng):
        G = rng.standard_normal((5, 5))
        f = HessianFactor(G @ G.T + np.eye(5))
        assert f.reconstruction_error() <= 1e-10
        v = rng.standard_normal(5)
        np.testing.assert_allclose(f.H @ f.solve(v), v, atol=1e-12)

    def test_not_spd(self):
        with pytest.raises(NumericalError):
            HessianFactor(-np.eye(2), x=np.zeros(2))


class TestChords:
    def test_square(self, square):
        ch = chord_endpoints(square, [0, 0], [1, 0])
        np.testing.assert_allclose(ch.p, [-1, 0])
        np.testing.assert_allclose(ch.q, [1, 0])

    def test_interval(self, interval):
        ch = chord_endpoints(interval, [0.5], [1.0])
        assert sorted([ch.p[0], ch.q[0]]) == pytest.approx([-1.0, 1.0], abs=1e-15)

    def test_ball(self):
        ch = chord_endpoints(ball(2), [0.5, 0], [0, 1])
        pts = sorted([tuple(ch.p), tuple(ch.q)], key=lambda p: p[1])
        np.testing.assert_allclose(pts, [(0.5, -math.sqrt(3) / 2), (0.5, math.sqrt(3) / 2)], atol=1e-15)

    @pytest.mark.parametrize("name", ["disk", "two_balls", "mixed"])
    def test_membership_flips(self, name, request, rng):
        body = request.getfixturevalue(name)
        for x in interior_points(body, 20, rng):
            ch = chord_endpoints(body, x, rng.standard_normal(body.n))
            u = ch.direction
            for end in (ch.t_hi, ch.t_lo):
                s = math.copysign(1.0, end)
                assert body.contains(x + (end - s * 1e-8) * u)
                assert not body.contains(x + (end + s * 1e-8) * u)

    def test_unbounded(self):
        half = BodySpec(1, A=np.array([[1.0]]), b=np.array([1.0]))
        with pytest.raises(UnboundedBodyError):
            chord_endpoints(half, [0.0], [1.0])


class TestHilbert:
    def test_interval(self, interval):
        assert hilbert_distance(interval, [0.0], [0.5]) == pytest.approx(math.log(3), abs=1e-12)

    def test_same_point(self, square):
        assert hilbert_distance(square, [0.1, 0.2], [0.1, 0.2]) == 0.0

    def test_symmetric_and_additive(self, mixed, rng):
        for _ in range(30):
            x, y = interior_points(mixed, 2, rng)
            z = x + rng.uniform() * (y - x)
            dxy = hilbert_distance(mixed, x, y)
            assert hilbert_distance(mixed, y, x) == pytest.approx(dxy, abs=1e-10)
            assert hilbert_distance(mixed, x, z) + hilbert_distance(mixed, z, y) == pytest.approx(dxy, abs=1e-9)

    def test_half_line_limit(self):
        half = BodySpec(1, A=np.array([[-1.0]]), b=np.array([1.0]))
        # p = -1, q = +inf: d = ln(1 + |x - y| / |p - x|)
        assert hilbert_distance(half, [0.0], [2.0]) == pytest.approx(math.log(3.0))


class TestCrossRatio:
    def test_scalar(self):
        assert cross_ratio(0.0, 1.0, 2.0, 3.0) == pytest.approx((0 - 2) * (1 - 3) / ((0 - 3) * (1 - 2)))

    def test_infinity(self):
        # limit of the finite formula as a -> inf
        big = 1e9
        assert cross_ratio(np.inf, 1.0, 2.0, 3.0) == pytest.approx(cross_ratio(big, 1.0, 2.0, 3.0), rel=1e-8)

    def test_vector_points(self):
        u = np.array([0.6, 0.8])
        pts = [s * u for s in (0.0, 1.0, 2.0, 3.0)]
        assert cross_ratio(*pts) == pytest.approx(cross_ratio(0.0, 1.0, 2.0, 3.0))


class TestGauge:
    def test_ball(self):
        assert symmetric_gauge(ball(2), [0, 0], [1, 0]) == pytest.approx(1.0)

    def test_square(self, square):
        assert symmetric_gauge(square, [0.5, 0], [1, 0]) == pytest.approx(2.0)

    def test_homogeneous(self, mixed, rng):
        x = np.array([0.1, 0.1, 0.1])
        v = rng.standard_normal(3)
        assert symmetric_gauge(mixed, x, 3.5 * v) == pytest.approx(3.5 * symmetric_gauge(mixed, x, v))

    def test_unbounded_both_ways(self):
        slab = BodySpec(2, A=np.array([[1.0, 0], [-1.0, 0]]), b=np.array([1.0, 1.0]))
        assert symmetric_gauge(slab, [0, 0], [0, 1]) == 0.0

    def test_sandwich_examples(self, interval):
        (r,) = gauge_sandwich_check(ball(2), np.zeros(2), np.array([1.0, 0.0]))
        assert (r.gauge, r.norm) == pytest.approx((1.0, math.sqrt(2)))
        assert r.ok()
        (r,) = gauge_sandwich_check(interval, np.array([0.9]), np.array([1.0]))
        assert r.gauge == pytest.approx(10.0)
        assert r.norm == pytest.approx(math.sqrt(1 / 0.01 + 1 / 3.61))
        assert r.ok()
        (r,) = gauge_sandwich_check(interval, np.array([0.9]), np.array([0.0]))
        assert r.gauge == 0.0 and r.norm == 0.0

    @pytest.mark.parametrize("name", ["disk", "two_balls", "mixed"])
    def test_sandwich_sweep(self, name, request, rng):
        body = request.getfixturevalue(name)
        for x in interior_points(body, 30, rng):
            for r in gauge_sandwich_check(body, x, rng.standard_normal(body.n)):
                assert r.ok(), r


class TestRiemannian:
    def test_zero(self, square):
        assert riemannian_distance_approx(square, [0.1, 0], [0.1, 0]) == 0.0

    def test_converges(self, interval):
        a = riemannian_distance_approx(interval, [0.0], [0.5], segments=64)
        b = riemannian_distance_approx(interval, [0.0], [0.5], segments=128)
        assert abs(a - b) < 0.01 * b
        # closed form of the segment length: int_0^1/2 sqrt(1/(1-t)^2 + 1/(1+t)^2) dt
        from scipy.integrate import quad

        exact = quad(lambda t: math.sqrt(1 / (1 - t) ** 2 + 1 / (1 + t) ** 2), 0, 0.5)[0]
        assert b == pytest.approx(exact, rel=1e-4)

    def test_lemma_sandwich(self, mixed, rng):
        oracle = BarrierOracle(mixed)
        for x in interior_points(mixed, 20, rng):
            ev = oracle.evaluate(x)
            r = rng.uniform(0.05, 0.9)
            y = dikin_ellipsoid_points(ev, x, 1, rng, radius=r)[0]
            d = riemannian_distance_approx(mixed, x, y, segments=256)
            assert r - r * r <= d <= -math.log(1 - r)

    def test_leaves_body(self, square):
        with pytest.raises(InfeasiblePointError):
            riemannian_distance_approx(square, [0, 0], [2, 0])


class TestDikinEllipsoid:
    @pytest.mark.parametrize("name", ["square", "disk", "two_balls"])
    def test_unit_ellipsoid_inside(self, name, request, rng):
        body = request.getfixturevalue(name)
        oracle = BarrierOracle(body)
        for x in interior_points(body, 5, rng):
            ev = oracle.evaluate(x)
            pts = dikin_ellipsoid_points(ev, x, 200, rng)
            for z in pts:
                assert ev.quad(z - x) == pytest.approx(1.0)
                assert body.contains(x + (1 - 1e-9) * (z - x))

    def test_nesterov_todd_ordering(self, rng):
        """``z in D_y`` maps into ``D_x`` under the homothety about ``p`` sending ``y`` to ``x``."""
        for _ in range(5):
            spec = random_polytope(rng, 3, 10)
            oracle = BarrierOracle(spec)
            x, y = interior_points(spec, 2, rng)
            ch = chord_endpoints(spec, x, y - x)
            # p is the endpoint on x's side, so the order is p, x, y
            p = ch.p
            ratio = np.linalg.norm(p - x) / np.linalg.norm(p - y)
            ev_x, ev_y = oracle.evaluate(x), oracle.evaluate(y)
            for z in dikin_ellipsoid_points(ev_y, y, 1000, rng):
                w = p + ratio * (z - p)
                assert ev_x.quad(w - x) <= 1.0 + 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_hilbert_symmetry_property(seed):
    rng = make_rng(seed)
    spec = random_polytope(rng, 2, 7)
    x, y = interior_points(spec, 2, rng)
    assert hilbert_distance(spec, x, y) == pytest.approx(hilbert_distance(spec, y, x), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_cube_chord_property(seed, n):
    rng = make_rng(seed)
    x = rng.uniform(-0.9, 0.9, n)
    ch = chord_endpoints(cube(n), x, rng.standard_normal(n))
    assert np.max(np.abs(ch.p)) == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(ch.q)) == pytest.approx(1.0, abs=1e-12)
