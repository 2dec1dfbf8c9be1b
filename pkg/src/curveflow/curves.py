"""Discrete differential geometry of closed polygonal plane curves.

A closed curve is an ordered list of vertices with implicit wraparound.  All
quantities are the polygon analogues of their smooth counterparts: edge
lengths play the role of the parametric speed ``|c_theta|``, the turning
angle divided by the mean adjacent edge length plays the role of curvature,
and the rotated angle-bisector direction plays the role of the unit normal
``i c_theta / |c_theta|``.

Orientation matters: traversing a convex curve counterclockwise gives
positive curvature, and reversing the vertex order negates it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurve

# An edge shorter than this fraction of the total length violates the
# discrete immersion condition |c_theta| > 0.
DEGENERACY_RATIO = 1e-12


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DegenerateCurve(f"expected an (n, 2) array of vertices, got shape {pts.shape}")
    if pts.shape[0] < 3:
        raise DegenerateCurve(f"a closed polygon needs at least 3 vertices, got {pts.shape[0]}")
    if not np.isfinite(pts).all():
        raise DegenerateCurve("vertex coordinates must be finite")
    return pts


@dataclass(frozen=True)
class PolygonCurve:
    """Closed polygon: vertices ``points[i]``, edges ``points[i+1] - points[i]`` mod n."""

    points: np.ndarray

    def __post_init__(self):
        pts = _as_points(self.points)
        lengths = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        total = lengths.sum()
        if total <= 0.0 or lengths.min() < DEGENERACY_RATIO * total:
            raise DegenerateCurve(
                f"degenerate edge: min {lengths.min():.3e} vs total length {total:.3e}"
            )
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def reversed(self) -> "PolygonCurve":
        """Same vertex set traversed in the opposite orientation (vertex 0 kept)."""
        return PolygonCurve(np.roll(self.points[::-1], 1, axis=0))

    def transformed(self, rotation=None, translation=(0.0, 0.0)) -> "PolygonCurve":
        pts = self.points
        if rotation is not None:
            pts = pts @ np.asarray(rotation, dtype=float).T
        return PolygonCurve(pts + np.asarray(translation, dtype=float))


@dataclass(frozen=True)
class NormalField:
    """Scalar normal-velocity coefficients, one per vertex of a curve.

    ``values[i]`` multiplies the unit normal at vertex i, representing the
    purely normal tangent vector ``a * i c_theta / |c_theta|``.
    """

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError(f"NormalField values must be 1-d, got shape {vals.shape}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class VectorField:
    """A full 2-d vector attached to every vertex of a curve."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[1] != 2:
            raise ValueError(f"VectorField values must be (n, 2), got shape {vals.shape}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _check_sizes(curve: PolygonCurve, field) -> None:
    if field.n != curve.n:
        raise ValueError(f"field has {field.n} entries but curve has {curve.n} vertices")


def _perp(v: np.ndarray) -> np.ndarray:
    """Rotation by +90 degrees, the planar analogue of multiplication by i."""
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


def _edges(pts: np.ndarray) -> np.ndarray:
    return np.roll(pts, -1, axis=0) - pts


def edge_lengths(curve: PolygonCurve) -> np.ndarray:
    """Lengths of the n edges; entry i is ``|points[i+1] - points[i]|``."""
    return np.linalg.norm(_edges(curve.points), axis=1)


def total_length(curve: PolygonCurve) -> float:
    """Perimeter of the polygon."""
    return float(edge_lengths(curve).sum())


def vertex_weights(curve: PolygonCurve) -> np.ndarray:
    """Quadrature weight at vertex i: mean of the two adjacent edge lengths."""
    el = edge_lengths(curve)
    return 0.5 * (el + np.roll(el, 1))


def turning_angles(pts: np.ndarray) -> np.ndarray:
    """Signed exterior angle at each vertex (positive for a left turn)."""
    e = _edges(pts)
    prev = np.roll(e, 1, axis=0)
    cross = prev[:, 0] * e[:, 1] - prev[:, 1] * e[:, 0]
    dot = (prev * e).sum(axis=1)
    return np.arctan2(cross, dot)


def vertex_curvature(curve: PolygonCurve) -> np.ndarray:
    """Discrete curvature: turning angle over mean adjacent edge length.

    Exact value 1/r on regular polygons inscribed in a circle of radius r up
    to O(1/n^2); scales like 1/s under scaling by s and flips sign under
    orientation reversal, both exactly.
    """
    return turning_angles(curve.points) / vertex_weights(curve)


def vertex_normals(curve: PolygonCurve) -> np.ndarray:
    """Unit normal at each vertex: +90-degree rotation of the angle-bisector
    tangent direction.  For a counterclockwise convex polygon the normals
    point towards the enclosed region."""
    e = _edges(curve.points)
    t = e / np.linalg.norm(e, axis=1)[:, None]
    bis = t + np.roll(t, 1, axis=0)
    norms = np.linalg.norm(bis, axis=1)
    if norms.min() < 1e-14:
        raise DegenerateCurve("adjacent edges fold back onto each other (cusp vertex)")
    return _perp(bis / norms[:, None])


def curvature_differential(curve: PolygonCurve, field: VectorField) -> np.ndarray:
    """Directional derivative of the discrete curvature along a vertex field.

    This is the exact differential of :func:`vertex_curvature`, so it agrees
    with central finite differences of the discrete curvature to roundoff.
    In the smooth limit it realizes the classical first variation of
    curvature: tangential transport of kappa, plus kappa^2 times the normal
    component, plus the second arc-length derivative of the normal component.
    """
    _check_sizes(curve, field)
    pts = curve.points
    h = field.values
    e = _edges(pts)
    de = _edges_of_values(h)
    el2 = (e * e).sum(axis=1)
    el = np.sqrt(el2)
    # d(angle of edge) = cross(e, de) / |e|^2
    dang = (e[:, 0] * de[:, 1] - e[:, 1] * de[:, 0]) / el2
    dphi = dang - np.roll(dang, 1)
    ddl = (e * de).sum(axis=1) / el
    dw = 0.5 * (ddl + np.roll(ddl, 1))
    w = vertex_weights(curve)
    phi = turning_angles(pts)
    return dphi / w - phi * dw / (w * w)


def _edges_of_values(vals: np.ndarray) -> np.ndarray:
    return np.roll(vals, -1, axis=0) - vals


def resample_constant_speed(curve: PolygonCurve, m: int) -> PolygonCurve:
    """Resample to m vertices equally spaced in arc length along the polygon.

    Vertex 0 of the output coincides with vertex 0 of the input, which fixes
    the rotational parametrization gauge.
    """
    if m < 3:
        raise DegenerateCurve(f"resampling needs at least 3 vertices, got {m}")
    pts = curve.points
    seg = edge_lengths(curve)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    targets = np.arange(m) * (total / m)
    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, curve.n - 1)
    frac = (targets - cum[idx]) / seg[idx]
    closed = np.vstack([pts, pts[:1]])
    return PolygonCurve(closed[idx] + frac[:, None] * (closed[idx + 1] - closed[idx]))


def decompose(curve: PolygonCurve, field: VectorField):
    """Split a vertex field into tangential and normal parts.

    Returns ``(tangential, normal, normal_coeff)`` with
    ``field = tangential + normal`` pointwise, the tangential part parallel
    to the discrete tangent and ``normal_coeff[i]`` the signed coefficient
    along the unit vertex normal.
    """
    _check_sizes(curve, field)
    nrm = vertex_normals(curve)
    a = (field.values * nrm).sum(axis=1)
    normal = a[:, None] * nrm
    return (
        VectorField(field.values - normal),
        VectorField(normal),
        NormalField(a),
    )


def normal_field_to_vector(curve: PolygonCurve, coeff: NormalField) -> VectorField:
    """Lift scalar normal coefficients to the full 2-d vertex field ``a * n``."""
    _check_sizes(curve, coeff)
    return VectorField(coeff.values[:, None] * vertex_normals(curve))


def regular_polygon(radius: float, n: int, center=(0.0, 0.0)) -> PolygonCurve:
    """Counterclockwise regular n-gon inscribed in a circle."""
    th = 2.0 * np.pi * np.arange(n) / n
    cx, cy = center
    return PolygonCurve(np.stack([cx + radius * np.cos(th), cy + radius * np.sin(th)], axis=1))


def ellipse_polygon(a: float, b: float, n: int, angle: float = 0.0,
                    center=(0.0, 0.0), oversample: int = 16) -> PolygonCurve:
    """Constant-speed n-gon approximation of an ellipse with semi-axes a, b,
    rotated counterclockwise by ``angle``."""
    th = 2.0 * np.pi * np.arange(oversample * n) / (oversample * n)
    pts = np.stack([a * np.cos(th), b * np.sin(th)], axis=1)
    ca, sa = np.cos(angle), np.sin(angle)
    pts = pts @ np.array([[ca, sa], [-sa, ca]])
    return resample_constant_speed(PolygonCurve(pts + np.asarray(center, dtype=float)), n)
