import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entroflow.errors import CurveIngestionError, NotLocallyConvexError
from entroflow.spectral import GridFunction, PeriodicGrid, integrate
from entroflow.support import (CurveSample, SupportGrid, circle_support,
                               convexity_margin, curvature, ellipse_support,
                               fourier_support, read_curve_file,
                               read_support_file, reconstruct,
                               support_from_curve)


def grid(omega=1, n=64):
    return PeriodicGrid(omega=omega, n=n)


def support(values_fn, omega=1, n=64):
    g = grid(omega, n)
    return SupportGrid(GridFunction(g, values_fn(g.nodes)))


class TestValidation:
    def test_positive_required(self):
        g = grid()
        with pytest.raises(NotLocallyConvexError):
            SupportGrid(GridFunction(g, np.cos(g.nodes)))

    def test_convexity_required(self):
        with pytest.raises(NotLocallyConvexError) as exc:
            support(lambda th: 1 + 0.8 * np.cos(2 * th))
        assert exc.value.margin == pytest.approx(-1.4, abs=1e-10)

    def test_margin_values(self):
        # h = 1 + 0.2 cos 2theta has h'' + h = 1 - 0.6 cos 2theta, min 0.4
        s = support(lambda th: 1 + 0.2 * np.cos(2 * th))
        assert convexity_margin(s) == pytest.approx(0.4, abs=1e-12)
        assert convexity_margin(circle_support(grid(), 2.5)) == pytest.approx(2.5)

    def test_margin_on_invalid_raw_data(self):
        g = grid()
        f = GridFunction(g, 1 + 0.8 * np.cos(2 * g.nodes))
        assert convexity_margin(f) == pytest.approx(-1.4, abs=1e-10)


class TestCurvature:
    def test_circle(self):
        k = curvature(circle_support(grid(), 2.0))
        assert np.max(np.abs(k.values - 0.5)) < 1e-13

    def test_translated_circle(self):
        # the cos-theta mode is in the kernel of (d^2/dtheta^2 + 1)
        k = curvature(support(lambda th: 1 + 0.1 * np.cos(th)))
        assert np.max(np.abs(k.values - 1.0)) < 1e-12

    def test_two_mode(self):
        s = support(lambda th: 1 + 0.2 * np.cos(2 * th))
        k = curvature(s)
        assert k.values[0] == pytest.approx(2.5, abs=1e-12)
        assert k.values[s.n // 4] == pytest.approx(0.625, abs=1e-12)

    def test_scale_inverse(self):
        s = support(lambda th: 1 + 0.2 * np.cos(2 * th) + 0.05 * np.sin(3 * th))
        lam = 2.7
        s2 = SupportGrid(GridFunction(s.grid, lam * s.values))
        assert np.allclose(curvature(s2).values, curvature(s).values / lam,
                           rtol=1e-13)


class TestReconstruct:
    def test_unit_circle(self):
        c = reconstruct(circle_support(grid(), 1.0))
        r = np.hypot(c.points[:, 0], c.points[:, 1])
        assert np.max(np.abs(r - 1.0)) < 1e-13

    def test_translated_unit_circle(self):
        # brute force: every point at distance 1 from (0.1, 0)
        c = reconstruct(support(lambda th: 1 + 0.1 * np.cos(th)))
        d = np.hypot(c.points[:, 0] - 0.1, c.points[:, 1])
        assert np.max(np.abs(d - 1.0)) < 1e-12

    def test_doubly_covered_circle(self):
        s = circle_support(grid(omega=2, n=64), 1.0)
        c = reconstruct(s)
        assert np.max(np.abs(c.points[:32] - c.points[32:])) < 1e-13

    def test_support_recovered(self):
        s = support(lambda th: 1 + 0.15 * np.cos(2 * th))
        c = reconstruct(s)
        th = s.grid.nodes
        h = c.points[:, 0] * np.cos(th) + c.points[:, 1] * np.sin(th)
        assert np.max(np.abs(h - s.values)) < 1e-13

    def test_tangent_is_uperp(self):
        s = support(lambda th: 1 + 0.15 * np.cos(2 * th))
        c = reconstruct(s)
        th = s.grid.nodes
        assert np.max(np.abs(c.tangents - np.stack([-np.sin(th), np.cos(th)], 1))) == 0


class TestIngestion:
    def test_circle_polyline_embedded(self):
        phi = np.arange(4096) * 2 * math.pi / 4096
        pts = 3.0 * np.stack([np.cos(phi), np.sin(phi)], axis=1)
        s = support_from_curve(pts, omega=1, n=64)
        # inscribed-polygon sup error is ~ 3*(pi/m)^2/2
        assert np.max(np.abs(s.values - 3.0)) < 2e-6

    def test_translated_circle_closed_form(self):
        phi = np.arange(8192) * 2 * math.pi / 8192
        pts = np.stack([0.5 + np.cos(phi), np.sin(phi)], axis=1)
        s = support_from_curve(pts, omega=1, n=64)
        expect = 1 + 0.5 * np.cos(s.grid.nodes)
        assert np.max(np.abs(s.values - expect)) < 2e-6

    def test_ellipse_closed_form(self):
        phi = np.arange(8192) * 2 * math.pi / 8192
        pts = np.stack([2.0 * np.cos(phi), np.sin(phi)], axis=1)
        s = support_from_curve(pts, omega=1, n=64)
        th = s.grid.nodes
        expect = np.sqrt(4 * np.cos(th) ** 2 + np.sin(th) ** 2)
        assert np.max(np.abs(s.values - expect)) < 5e-6

    def test_immersed_curve_sample(self):
        phi = np.arange(1024) * 2 * math.pi / 1024
        pts = np.stack([0.5 + np.cos(phi), np.sin(phi)], axis=1)
        tangents = np.stack([-np.sin(phi), np.cos(phi)], axis=1)
        thetas = phi  # outward-normal angle equals phi for this circle
        c = CurveSample(points=pts, tangents=tangents, thetas=thetas)
        s = support_from_curve(c, omega=1, n=64)
        expect = 1 + 0.5 * np.cos(s.grid.nodes)
        assert np.max(np.abs(s.values - expect)) < 1e-6

    def test_origin_outside_recenters(self):
        phi = np.arange(4096) * 2 * math.pi / 4096
        pts = np.stack([10.0 + np.cos(phi), np.sin(phi)], axis=1)
        s = support_from_curve(pts, omega=1, n=32)
        assert np.max(np.abs(s.values - 1.0)) < 1e-4

    def test_nonconvex_rejected(self):
        t = np.arange(512) * 2 * math.pi / 512
        pts = np.stack([(1 + 0.5 * np.cos(3 * t)) * np.cos(t),
                        (1 + 0.5 * np.cos(3 * t)) * np.sin(t)], axis=1)
        with pytest.raises(CurveIngestionError):
            support_from_curve(pts, omega=1, n=64)

    def test_round_trip(self):
        s = support(lambda th: 1 + 0.1 * np.cos(2 * th) + 0.03 * np.sin(3 * th))
        back = support_from_curve(reconstruct(s), omega=1, n=s.n)
        assert np.max(np.abs(back.values - s.values)) < 1e-8

    def test_round_trip_omega2(self):
        s = support(lambda th: 0.5 + 0.02 * np.cos(1.5 * th), omega=2, n=64)
        back = support_from_curve(reconstruct(s), omega=2, n=64)
        assert np.max(np.abs(back.values - s.values)) < 1e-8


class TestLengthTwoWays:
    def test_length_identity(self):
        s = support(lambda th: 1 + 0.2 * np.cos(2 * th) + 0.05 * np.sin(3 * th))
        k = curvature(s)
        L1 = integrate(s.h)
        L2 = integrate(k.copy_with(1.0 / k.values))
        assert abs(L1 - L2) <= 1e-10 * abs(L1)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_translation_equivariance(a, b):
    g = grid(n=32)
    base = 1 + 0.1 * np.cos(2 * g.nodes)
    s0 = SupportGrid(GridFunction(g, base))
    s1 = SupportGrid(GridFunction(
        g, base + a * np.cos(g.nodes) + b * np.sin(g.nodes)))
    assert np.max(np.abs(curvature(s1).values - curvature(s0).values)) < 1e-11
    shift = reconstruct(s1).points - reconstruct(s0).points
    assert np.max(np.abs(shift - np.array([a, b]))) < 1e-11


class TestBuildersAndFiles:
    def test_ellipse_support_formula(self):
        s = ellipse_support(grid(), 2.0, 1.0)
        th = s.grid.nodes
        assert np.allclose(s.values, np.sqrt(4 * np.cos(th)**2 + np.sin(th)**2))

    def test_fourier_builder_omega(self):
        s = fourier_support(grid(omega=2, n=32), 1.0, [(1, 0.1, 0.0)])
        assert s.values[0] == pytest.approx(1.1)

    def test_curve_file_roundtrip(self, tmp_path):
        phi = np.arange(1024) * 2 * math.pi / 1024
        pts = np.stack([2 * np.cos(phi), np.sin(phi)], axis=1)
        p = tmp_path / "curve.txt"
        np.savetxt(p, pts)
        s = support_from_curve(read_curve_file(p), omega=1, n=32)
        assert s.n == 32

    def test_support_file(self, tmp_path):
        p = tmp_path / "h.txt"
        with open(p, "w") as fh:
            for _ in range(16):
                fh.write("2.0\n")
        s = read_support_file(p, omega=1)
        assert s.n == 16
        assert np.all(s.values == 2.0)
