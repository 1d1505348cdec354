"""Support-function description of locally convex closed planar curves.

Conventions (fixed throughout the package): theta is the angle of the
outward direction u(theta) = (cos theta, sin theta), the inward normal is
N = -u, the support function is h(theta) = <gamma, u>, and the curve is
recovered from h by gamma = h*u + h_theta*u_perp with u_perp =
(-sin theta, cos theta).  Curvature is k = 1/(h_thth + h) > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import CurveIngestionError, NotLocallyConvexError
from .spectral import (GridFunction, PeriodicGrid, integrate,
                       periodic_deriv_values)

# validation floor for min(h_thth + h), relative to mean(h); exact zero is
# the degenerate boundary the flow must stay away from
CONVEXITY_RTOL = 1e-10


def radius_of_curvature_values(h: GridFunction) -> np.ndarray:
    """Samples of h_thth + h (= 1/k where the curve is convex)."""
    return periodic_deriv_values(h.values, h.grid.period, 2) + h.values


def convexity_margin(h) -> float:
    """min over nodes of (h_thth + h); may be <= 0 for invalid data."""
    if isinstance(h, SupportGrid):
        h = h.h
    return float(np.min(radius_of_curvature_values(h)))


class SupportGrid:
    """Validated support-function samples of a locally convex curve."""

    def __init__(self, h: GridFunction, validate: bool = True):
        self.h = h
        if validate:
            self._validate()

    def _validate(self):
        v = self.h.values
        if np.any(v <= 0.0):
            j = int(np.argmin(v))
            raise NotLocallyConvexError(
                f"support function must be positive; h[{j}] = {v[j]:.6g}",
                node=j, margin=float(v[j]))
        w = radius_of_curvature_values(self.h)
        j = int(np.argmin(w))
        threshold = CONVEXITY_RTOL * float(np.mean(v))
        if w[j] <= threshold:
            raise NotLocallyConvexError(
                f"not strictly locally convex: min(h_thth + h) = {w[j]:.6g} "
                f"at node {j} (threshold {threshold:.3g})",
                node=j, margin=float(w[j]))

    @property
    def grid(self) -> PeriodicGrid:
        return self.h.grid

    @property
    def omega(self) -> int:
        return self.h.grid.omega

    @property
    def n(self) -> int:
        return self.h.grid.n

    @property
    def values(self) -> np.ndarray:
        return self.h.values

    def copy(self) -> "SupportGrid":
        return SupportGrid(self.h.copy_with(self.h.values.copy()), validate=False)


@dataclass
class CurveSample:
    """Points of a locally convex closed curve with unit tangents and
    strictly increasing tangent angles."""

    points: np.ndarray
    tangents: np.ndarray = field(repr=False)
    thetas: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.tangents = np.asarray(self.tangents, dtype=float)
        self.thetas = np.asarray(self.thetas, dtype=float)
        m = len(self.thetas)
        if self.points.shape != (m, 2) or self.tangents.shape != (m, 2):
            raise ValueError("points and tangents must have shape (m, 2)")
        norms = np.hypot(self.tangents[:, 0], self.tangents[:, 1])
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ValueError("tangents must be unit vectors to 1e-12")
        if np.any(np.diff(self.thetas) <= 0.0):
            raise ValueError("tangent angles must be strictly increasing")


def curvature(s: SupportGrid) -> GridFunction:
    """Curvature k = 1/(h_thth + h), positive on valid support grids."""
    w = radius_of_curvature_values(s.h)
    threshold = CONVEXITY_RTOL * float(np.mean(s.values))
    j = int(np.argmin(w))
    if w[j] <= threshold:
        raise NotLocallyConvexError(
            f"not strictly locally convex: min(h_thth + h) = {w[j]:.6g} at node {j}",
            node=j, margin=float(w[j]))
    return s.h.copy_with(1.0 / w)


def reconstruct(s: SupportGrid) -> CurveSample:
    """Recover curve points gamma = h*u + h_theta*u_perp at the grid nodes."""
    theta = s.grid.nodes
    hv = s.values
    hp = periodic_deriv_values(hv, s.grid.period, 1)
    c, sn = np.cos(theta), np.sin(theta)
    points = np.stack([hv * c - hp * sn, hv * sn + hp * c], axis=1)
    tangents = np.stack([-sn, c], axis=1)
    curvature(s)  # propagate convexity error
    return CurveSample(points=points, tangents=tangents, thetas=theta.copy())


def _polygon_area_centroid(points: np.ndarray):
    x, y = points[:, 0], points[:, 1]
    xr, yr = np.roll(x, -1), np.roll(y, -1)
    cross = x * yr - xr * y
    area = 0.5 * np.sum(cross)
    if abs(area) < 1e-30:
        raise CurveIngestionError("degenerate polygon (zero area)")
    cx = np.sum((x + xr) * cross) / (6.0 * area)
    cy = np.sum((y + yr) * cross) / (6.0 * area)
    return area, np.array([cx, cy])


def _origin_strictly_inside(points: np.ndarray) -> bool:
    p, q = points, np.roll(points, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]  # edge cross with origin
    return bool(np.all(cross > 0.0) or np.all(cross < 0.0))


def _check_convex_polygon(points: np.ndarray):
    e = np.roll(points, -1, axis=0) - points
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    scale = np.max(np.abs(cross))
    if scale <= 0.0:
        raise CurveIngestionError("degenerate polyline")
    if np.any(cross * np.sign(np.sum(cross)) < -1e-9 * scale):
        raise CurveIngestionError(
            "embedded input is not convex (edge turning changes sign)")


def _support_from_embedded(points: np.ndarray, grid: PeriodicGrid) -> SupportGrid:
    _check_convex_polygon(points)
    pts = points
    if not _origin_strictly_inside(pts):
        _, centroid = _polygon_area_centroid(pts)
        pts = pts - centroid
        if not _origin_strictly_inside(pts):
            raise CurveIngestionError(
                "origin not interior to the curve even after centering")
    theta = grid.nodes
    u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    h = np.max(pts @ u.T, axis=0)
    try:
        return SupportGrid(GridFunction(grid, h))
    except NotLocallyConvexError as exc:
        raise CurveIngestionError(
            f"hull support is not C^1-consistent on this grid: {exc}") from exc


def _tangent_angles_from_points(points: np.ndarray) -> np.ndarray:
    d = np.roll(points, -1, axis=0) - np.roll(points, 1, axis=0)
    theta = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
    return theta


def _support_from_immersed(points, thetas, omega, grid: PeriodicGrid) -> SupportGrid:
    period = grid.period
    total = thetas[-1] - thetas[0]
    if np.any(np.diff(thetas) <= 0.0):
        raise CurveIngestionError("tangent angle is not strictly increasing")
    spacing = total / max(len(thetas) - 1, 1)
    if abs(total + spacing - period) > 4.0 * spacing:
        raise CurveIngestionError(
            f"tangent angle increases by {total + spacing:.6g} over the closed "
            f"curve; expected 2*omega*pi = {period:.6g} for omega={omega}")
    target = grid.nodes
    # fast path: samples already on the target nodes (mod period)
    if len(thetas) == grid.n:
        shift = (thetas - target) % period
        if np.max(np.abs(shift - shift[0])) < 1e-12 and abs(shift[0]) < 1e-12:
            h = points[:, 0] * np.cos(target) + points[:, 1] * np.sin(target)
            return SupportGrid(GridFunction(grid, h))
    # monotone interpolation of the inverse map theta -> point, tiled one
    # period each way so any target angle falls in the covered range
    th = np.concatenate([thetas - period, thetas, thetas + period])
    px = np.tile(points[:, 0], 3)
    py = np.tile(points[:, 1], 3)
    fx = PchipInterpolator(th, px)
    fy = PchipInterpolator(th, py)
    t = target.copy()
    # pull target angles into the sampled window
    lo = thetas[0] - period / 2
    t = lo + (t - lo) % period
    h = fx(t) * np.cos(t) + fy(t) * np.sin(t)
    return SupportGrid(GridFunction(grid, h))


def support_from_curve(curve, omega: int, n: int | None = None,
                       mode: str = "auto") -> SupportGrid:
    """Resample a closed locally convex curve onto a uniform theta grid.

    Parameters
    ----------
    curve : CurveSample or (m, 2) array
        Curve data; a raw array is a closed polyline (first point not
        repeated).
    omega : int
        Winding number of the curve.
    n : int, optional
        Output grid size; defaults to the input sample count (made even).
    mode : {"auto", "embedded", "immersed"}
        "embedded" evaluates the polygonal-hull support (omega must be 1);
        "immersed" inverts the monotone tangent-angle map.  "auto" picks
        "immersed" for CurveSample input, otherwise "embedded" when
        omega == 1.
    """
    if isinstance(curve, CurveSample):
        pts, thetas = curve.points, curve.thetas
        if mode == "auto":
            mode = "immersed"
    else:
        pts = np.asarray(curve, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 8:
            raise CurveIngestionError("need at least 8 planar points")
        thetas = None
        if mode == "auto":
            mode = "embedded" if omega == 1 else "immersed"
    if n is None:
        n = len(pts) - (len(pts) % 2)
    grid = PeriodicGrid(omega=omega, n=n)
    if mode == "embedded":
        if omega != 1:
            raise CurveIngestionError("embedded ingestion requires omega == 1")
        return _support_from_embedded(pts, grid)
    if mode == "immersed":
        if thetas is None:
            thetas = _tangent_angles_from_points(pts)
        return _support_from_immersed(pts, thetas, omega, grid)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# built-in initial data

def circle_support(grid: PeriodicGrid, radius: float) -> SupportGrid:
    if radius <= 0:
        raise ValueError("radius must be positive")
    return SupportGrid(GridFunction(grid, np.full(grid.n, float(radius))))


def ellipse_support(grid: PeriodicGrid, a: float, b: float) -> SupportGrid:
    """Support of the origin-centered axis-aligned ellipse with semi-axes a, b."""
    if a <= 0 or b <= 0:
        raise ValueError("semi-axes must be positive")
    th = grid.nodes
    h = np.sqrt(a**2 * np.cos(th)**2 + b**2 * np.sin(th)**2)
    return SupportGrid(GridFunction(grid, h))


def fourier_support(grid: PeriodicGrid, constant: float, modes) -> SupportGrid:
    """constant + sum of (m, cos_coeff, sin_coeff) modes with wavenumber m/omega."""
    th = grid.nodes
    h = np.full(grid.n, float(constant))
    for m, ac, bs in modes:
        xi = m / grid.omega
        h = h + ac * np.cos(xi * th) + bs * np.sin(xi * th)
    return SupportGrid(GridFunction(grid, h))


# ---------------------------------------------------------------------------
# file formats

def read_curve_file(path) -> np.ndarray:
    """Closed polyline, one "x y" pair per line, first point not repeated."""
    pts = np.loadtxt(path, dtype=float, comments="#", ndmin=2)
    if pts.shape[1] != 2:
        raise CurveIngestionError(f"{path}: expected two columns, got {pts.shape[1]}")
    return pts


def read_support_file(path, omega: int) -> SupportGrid:
    """One h value per line; the line count fixes n."""
    vals = np.loadtxt(path, dtype=float, comments="#", ndmin=1)
    grid = PeriodicGrid(omega=omega, n=len(vals))
    return SupportGrid(GridFunction(grid, vals))


def length_from_support(s: SupportGrid) -> float:
    return integrate(s.h)


def length_from_curvature(s: SupportGrid) -> float:
    k = curvature(s)
    return integrate(k.copy_with(1.0 / k.values))
