"""The curvature-weighted H0 metric on plane curves and its path functionals.

The inner product weights the pointwise Euclidean pairing by
``(1 + A * kappa^2)`` and integrates against arc length.  For ``A = 0`` this
is the plain H0 metric, whose induced distance on unparametrized curves
collapses to zero; the ``A kappa^2`` term acts as a geometric regularizer
that makes the distance nondegenerate.  The module also evaluates the two
a-priori bounds that any path must satisfy (a Lipschitz bound on the square
root of length, and an area bound for the swept region / graph surface),
which downstream solvers use as correctness certificates.

Time derivatives along paths are forward differences weighted with geometric
quantities from the earlier slice; reductions run in fixed index order so
results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .curves import (
    PolygonCurve,
    VectorField,
    edge_lengths,
    vertex_curvature,
    vertex_normals,
    vertex_weights,
)
from .errors import DegenerateCurve, NonHorizontalPath, RequiresPositiveA

# A path counts as horizontal when tangential motion is below this fraction
# of normal motion; the energy/area equivalence only holds for such paths.
HORIZONTALITY_RATIO = 1e-6


@dataclass(frozen=True)
class MetricParams:
    """Metric constants: curvature weight A (length^2) and the tangential
    penalty weight epsilon used by the discrete path energy."""

    A: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.A < 0.0:
            raise ValueError(f"curvature weight A must be >= 0, got {self.A}")
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class CurvePath:
    """Time-indexed family of closed polygons with a shared vertex count.

    ``points[j]`` is the j-th slice; times are the implicit uniform grid
    ``t_j = j / (T - 1)`` on [0, 1].
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 3 or pts.shape[2] != 2:
            raise ValueError(f"expected a (T, n, 2) array, got shape {pts.shape}")
        if pts.shape[0] < 2:
            raise ValueError("a path needs at least 2 time slices")
        if not np.isfinite(pts).all():
            raise DegenerateCurve("path coordinates must be finite")
        for j in range(pts.shape[0]):
            PolygonCurve(pts[j])  # validates each slice
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def T(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def dt(self) -> float:
        return 1.0 / (self.T - 1)

    def slice(self, j: int) -> PolygonCurve:
        return PolygonCurve(self.points[j])

    def reversed(self) -> "CurvePath":
        return CurvePath(self.points[::-1])


@dataclass
class GeodesicReport:
    """Summary of a solved or validated path: energy, length, certificate
    values and solver diagnostics."""

    energy: float = 0.0
    path_length: float = 0.0
    lipschitz_lhs: float = 0.0
    lipschitz_rhs: float = 0.0
    area_swept: float = 0.0
    iterations: int = 0
    converged: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("extra"))
        return d


def _slice_geometry(pts: np.ndarray):
    """(weights, normals, curvature, edge lengths) of one (n, 2) slice."""
    e = np.roll(pts, -1, axis=0) - pts
    el = np.linalg.norm(e, axis=1)
    if el.min() < 1e-300:
        raise DegenerateCurve("zero edge in path slice")
    w = 0.5 * (el + np.roll(el, 1))
    t = e / el[:, None]
    bis = t + np.roll(t, 1, axis=0)
    bn = np.linalg.norm(bis, axis=1)
    if bn.min() < 1e-14:
        raise DegenerateCurve("cusp vertex in path slice")
    bis /= bn[:, None]
    nrm = np.stack([-bis[:, 1], bis[:, 0]], axis=1)
    prev = np.roll(e, 1, axis=0)
    ang = np.arctan2(prev[:, 0] * e[:, 1] - prev[:, 1] * e[:, 0], (prev * e).sum(axis=1))
    return w, nrm, ang / w, el


def inner_product(params: MetricParams, curve: PolygonCurve,
                  h: VectorField, k: VectorField) -> float:
    """Weighted inner product of two vertex fields at a curve.

    Discrete quadrature of ``(1 + A kappa^2) <h, k>`` against arc length,
    with vertex weights equal to the mean of the adjacent edge lengths.
    Symmetric, bilinear, and positive definite on nonzero fields.
    """
    if h.n != curve.n or k.n != curve.n:
        raise ValueError("field sizes must match the curve")
    w = vertex_weights(curve)
    kap = vertex_curvature(curve)
    return float(((1.0 + params.A * kap**2) * (h.values * k.values).sum(axis=1) * w).sum())


def inner_product_normal(params: MetricParams, curve: PolygonCurve,
                         a: np.ndarray, b: np.ndarray) -> float:
    """Same inner product restricted to scalar normal coefficients."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (curve.n,) or b.shape != (curve.n,):
        raise ValueError("coefficient arrays must have one entry per vertex")
    w = vertex_weights(curve)
    kap = vertex_curvature(curve)
    return float(((1.0 + params.A * kap**2) * a * b * w).sum())


def _step_quadratic_form(params: MetricParams, pts0, pts1, dt):
    """Per-step normal-motion quadratic form sum_i (1+A kap^2) <c_t, n>^2 w,
    with all geometry taken from the earlier slice."""
    w, nrm, kap, _ = _slice_geometry(pts0)
    ct = (pts1 - pts0) / dt
    an = (ct * nrm).sum(axis=1)
    return ((1.0 + params.A * kap**2) * an**2 * w).sum()


def path_energy(params: MetricParams, path: CurvePath) -> float:
    """Energy of the projected path: half the time integral of the normal
    motion measured in the weighted metric.

    Only the component of the velocity along the vertex normals contributes,
    so tangential (reparametrization) motion is energy-free, matching the
    quotient-space picture.
    """
    dt = path.dt
    total = 0.0
    for j in range(path.T - 1):
        total += _step_quadratic_form(params, path.points[j], path.points[j + 1], dt)
    return 0.5 * total * dt


def full_speed_energy(params: MetricParams, path: CurvePath) -> float:
    """Energy with the full velocity (tangential motion included)."""
    dt = path.dt
    total = 0.0
    for j in range(path.T - 1):
        w, _, kap, _ = _slice_geometry(path.points[j])
        ct = (path.points[j + 1] - path.points[j]) / dt
        total += ((1.0 + params.A * kap**2) * (ct * ct).sum(axis=1) * w).sum()
    return 0.5 * total * dt


def horizontal_path_length(params: MetricParams, path: CurvePath) -> float:
    """Length of the projected path: time sum of the square roots of the
    per-step normal-motion quadratic forms.  Invariant (up to O(dt)) under
    refinement of the time grid."""
    dt = path.dt
    total = 0.0
    for j in range(path.T - 1):
        total += np.sqrt(_step_quadratic_form(params, path.points[j], path.points[j + 1], dt))
    return float(total * dt)


def full_speed_length(params: MetricParams, path: CurvePath) -> float:
    """Path length using the full velocity; equals the horizontal length on
    horizontal paths and dominates it otherwise."""
    dt = path.dt
    total = 0.0
    for j in range(path.T - 1):
        w, _, kap, _ = _slice_geometry(path.points[j])
        ct = (path.points[j + 1] - path.points[j]) / dt
        total += np.sqrt(((1.0 + params.A * kap**2) * (ct * ct).sum(axis=1) * w).sum())
    return float(total * dt)


def tangential_normal_ratio(path: CurvePath) -> float:
    """Max over time steps of (rms tangential speed) / (rms normal speed)."""
    dt = path.dt
    worst = 0.0
    for j in range(path.T - 1):
        w, nrm, _, _ = _slice_geometry(path.points[j])
        ct = (path.points[j + 1] - path.points[j]) / dt
        an = (ct * nrm).sum(axis=1)
        tang = ct - an[:, None] * nrm
        num = np.sqrt(((tang * tang).sum(axis=1) * w).sum())
        den = np.sqrt((an**2 * w).sum())
        if den < 1e-300:
            if num > 1e-300:
                return np.inf
            continue
        worst = max(worst, num / den)
    return float(worst)


def is_horizontal(path: CurvePath, ratio: float = HORIZONTALITY_RATIO) -> bool:
    return tangential_normal_ratio(path) <= ratio


def _graph_triangles(path: CurvePath):
    """Triangulate the graph surface (t, x, y) of the path; yields per-triangle
    (area, |t-component of unit normal|, mean curvature weight position)."""
    T, n = path.T, path.n
    ts = np.linspace(0.0, 1.0, T)
    P = np.concatenate(
        [np.broadcast_to(ts[:, None, None], (T, n, 1)), path.points], axis=2
    )  # (T, n, 3)
    kappas = np.stack([_slice_geometry(path.points[j])[2] for j in range(T)])
    i_next = np.roll(np.arange(n), -1)
    a = P[:-1]
    b = P[:-1][:, i_next]
    c = P[1:]
    d = P[1:][:, i_next]
    k_a = kappas[:-1]
    k_b = kappas[:-1][:, i_next]
    k_c = kappas[1:]
    k_d = kappas[1:][:, i_next]
    tris = []
    for (p, q, r, kp, kq, kr) in (
        (a, b, c, k_a, k_b, k_c),
        (b, d, c, k_b, k_d, k_c),
    ):
        cr = np.cross(q - p, r - p)
        dbl = np.linalg.norm(cr, axis=2)
        area = 0.5 * dbl
        with np.errstate(invalid="ignore", divide="ignore"):
            nt = np.where(dbl > 0, np.abs(cr[..., 0]) / np.where(dbl > 0, dbl, 1.0), 0.0)
        ksq = (kp**2 + kq**2 + kr**2) / 3.0
        tris.append((area, nt, ksq))
    return tris


def graph_surface_area(path: CurvePath) -> float:
    """Area of the triangulated graph surface of the path in (t, x, y)."""
    return float(sum(area.sum() for area, _, _ in _graph_triangles(path)))


def anisotropic_area_energy(params: MetricParams, path: CurvePath) -> float:
    """Path energy recomputed as a weighted surface functional of the graph.

    The graph of a horizontal path in (t, x, y) carries the energy as the
    integral of ``(1 + A kappa^2) |n0|^2 / sqrt(1 - |n0|^2)`` against surface
    area, with ``n0`` the time component of the unit surface normal.  The
    quadrature here is genuinely different from :func:`path_energy` (flat
    triangles instead of per-slice forms), so agreement between the two is a
    meaningful consistency check.  Raises for paths with non-negligible
    tangential motion, where the identity fails.
    """
    ratio = tangential_normal_ratio(path)
    if ratio > HORIZONTALITY_RATIO:
        raise NonHorizontalPath(
            f"tangential/normal speed ratio {ratio:.3e} exceeds {HORIZONTALITY_RATIO:.0e}"
        )
    total = 0.0
    for area, nt, ksq in _graph_triangles(path):
        nt = np.clip(nt, 0.0, 1.0 - 1e-15)
        total += ((1.0 + params.A * ksq) * nt**2 / np.sqrt(1.0 - nt**2) * area).sum()
    return 0.5 * float(total)


def area_swept(path: CurvePath) -> float:
    """Area of the region swept by the moving curve, with multiplicity:
    the discrete integral of |det(c_t, c_theta)| over the (t, theta) grid."""
    total = 0.0
    for j in range(path.T - 1):
        d_t = path.points[j + 1] - path.points[j]
        d_th = np.roll(path.points[j], -1, axis=0) - path.points[j]
        total += np.abs(d_t[:, 0] * d_th[:, 1] - d_t[:, 1] * d_th[:, 0]).sum()
    return float(total)


def lipschitz_certificate(params: MetricParams, path: CurvePath):
    """Both sides of the square-root-of-length Lipschitz bound.

    Returns ``(lhs, rhs)`` with ``lhs = sqrt(l(end)) - sqrt(l(start))`` and
    ``rhs = horizontal_path_length / (2 sqrt(A))``.  Any valid path satisfies
    ``lhs <= rhs`` up to discretization slack.  Requires A > 0.
    """
    if params.A <= 0.0:
        raise RequiresPositiveA("the Lipschitz length bound needs A > 0")
    l0 = edge_lengths(path.slice(0)).sum()
    l1 = edge_lengths(path.slice(path.T - 1)).sum()
    lhs = float(np.sqrt(l1) - np.sqrt(l0))
    rhs = horizontal_path_length(params, path) / (2.0 * np.sqrt(params.A))
    return lhs, rhs


def certificate_report(params: MetricParams, path: CurvePath,
                       slack=lambda v: 1e-6 + 0.05 * abs(v)) -> dict:
    """Evaluate every a-priori bound on a path and report pass/fail.

    Checks, each with slack ``1e-6 + 0.05 * bound``:

    * Lipschitz: ``sqrt(l1) - sqrt(l0) <= length / (2 sqrt(A))`` (A > 0 only);
    * swept area ``<= max_t sqrt(l(t)) * length`` (full-speed length, which
      coincides with the horizontal length on horizontal paths);
    * graph area ``<= 2 * energy + max_t l(t)``.
    """
    lengths = np.array([edge_lengths(path.slice(j)).sum() for j in range(path.T)])
    energy = path_energy(params, path)
    report = {
        "A": params.A,
        "energy": energy,
        "horizontal_length": horizontal_path_length(params, path),
        "max_length": float(lengths.max()),
        "all_passed": True,
    }
    checks = {}
    if params.A > 0.0:
        lhs, rhs = lipschitz_certificate(params, path)
        checks["lipschitz"] = (lhs, rhs + slack(rhs))
        report["lipschitz_lhs"] = lhs
        report["lipschitz_rhs"] = rhs
    swept = area_swept(path)
    swept_bound = float(np.sqrt(lengths.max())) * full_speed_length(params, path)
    checks["area_swept"] = (swept, swept_bound + slack(swept_bound))
    report["area_swept"] = swept
    report["area_swept_bound"] = swept_bound
    garea = graph_surface_area(path)
    gbound = 2.0 * energy + float(lengths.max())
    checks["graph_area"] = (garea, gbound + slack(gbound))
    report["graph_area"] = garea
    report["graph_area_bound"] = gbound
    for name, (value, bound) in checks.items():
        ok = bool(value <= bound)
        report[f"{name}_ok"] = ok
        report["all_passed"] = report["all_passed"] and ok
    return report


def energy_density(params: MetricParams, path: CurvePath) -> np.ndarray:
    """Per-time-step energy density: rows ``(t_mid, density)`` where density
    is the step's quadratic form (the integrand whose half-integral is the
    path energy)."""
    dt = path.dt
    out = np.empty((path.T - 1, 2))
    for j in range(path.T - 1):
        out[j, 0] = (j + 0.5) * dt
        out[j, 1] = _step_quadratic_form(params, path.points[j], path.points[j + 1], dt)
    return out
