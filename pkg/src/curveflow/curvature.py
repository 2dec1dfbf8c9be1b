"""Curvature analysis: Christoffel form at a chart center, curvature tensor,
sectional curvature, the stability operator on circles, and Jacobi fields
along the concentric-circle geodesic with conjugate-point detection.

Scalar fields on a constant-speed base curve are identified with normal
perturbations ``f * n``; primes denote arc-length derivatives, evaluated by
central differences at the uniform spacing of the frame.

The curve-space curvature at the chart center is governed by the Wronskian
``W = m h' - h m'`` of the two spanning fields:

    R0(m, h, m, h) = int [ (-(A k^2 - 1)^2 + 4 A^2 k k'' - 8 A^2 k'^2)
                           / (2 (1 + A k^2)) ] W^2 ds  +  int A W'^2 ds

Fields with disjoint supports therefore span flat planes, and for A = 0 the
sectional curvature is everywhere nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .curves import PolygonCurve, edge_lengths, vertex_curvature
from .errors import DegeneratePlane, RequiresPositiveA, StiffnessFailure
from .metric import MetricParams, inner_product_normal


@dataclass(frozen=True)
class ChartFrame:
    """A constant-speed base curve whose normal perturbations form the chart.

    Scalar fields live on the vertices; arc-length derivatives use the
    uniform spacing ``length / n``.
    """

    base: PolygonCurve

    def __post_init__(self):
        el = edge_lengths(self.base)
        spread = (el.max() - el.min()) / el.mean()
        if spread > 1e-10:
            raise ValueError(
                f"chart frame needs a constant-speed base curve "
                f"(edge length spread {spread:.2e})"
            )

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def spacing(self) -> float:
        return float(edge_lengths(self.base).mean())

    def d_ds(self, f: np.ndarray) -> np.ndarray:
        return (np.roll(f, -1) - np.roll(f, 1)) / (2.0 * self.spacing)

    def d2_ds2(self, f: np.ndarray) -> np.ndarray:
        h = self.spacing
        return (np.roll(f, -1) - 2.0 * f + np.roll(f, 1)) / (h * h)


def _check_field(frame: ChartFrame, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (frame.n,):
        raise ValueError(f"field shape {f.shape} does not match frame size {frame.n}")
    return f


def christoffel_at_center(params: MetricParams, frame: ChartFrame,
                          h, k) -> np.ndarray:
    """Quadratic geodesic-acceleration form at the chart center:

        [ (k/2 - A k^3 / 2 + A k'') h k + 2 A k' (h' k + h k')
          + 2 A k h' k' ] / (1 + A k^2)

    Symmetric in (h, k); reduces to (1/2) kappa h k when A = 0.
    """
    h = _check_field(frame, h)
    k = _check_field(frame, k)
    A = params.A
    kap = vertex_curvature(frame.base)
    kap1 = frame.d_ds(kap)
    kap2 = frame.d2_ds2(kap)
    hp = frame.d_ds(h)
    kp = frame.d_ds(k)
    num = (0.5 * kap - 0.5 * A * kap**3 + A * kap2) * h * k \
        + 2.0 * A * kap1 * (hp * k + h * kp) + 2.0 * A * kap * hp * kp
    return num / (1.0 + A * kap**2)


def curvature_tensor_value(params: MetricParams, frame: ChartFrame, m, h) -> float:
    """The curvature quadratic R0(m, h, m, h) at the chart center."""
    m = _check_field(frame, m)
    h = _check_field(frame, h)
    A = params.A
    kap = vertex_curvature(frame.base)
    kap1 = frame.d_ds(kap)
    kap2 = frame.d2_ds2(kap)
    W = m * frame.d_ds(h) - h * frame.d_ds(m)
    Wp = frame.d_ds(W)
    ds = frame.spacing
    dens = (-((A * kap**2 - 1.0) ** 2) + 4.0 * A**2 * kap * kap2 - 8.0 * A**2 * kap1**2) \
        / (2.0 * (1.0 + A * kap**2))
    return float((dens * W**2).sum() * ds + A * (Wp**2).sum() * ds)


def sectional_curvature(params: MetricParams, frame: ChartFrame, m, h) -> float:
    """Sectional curvature of the plane spanned by two normal fields:
    minus the curvature quadratic over the Gram determinant."""
    m = _check_field(frame, m)
    h = _check_field(frame, h)
    mm = inner_product_normal(params, frame.base, m, m)
    hh = inner_product_normal(params, frame.base, h, h)
    mh = inner_product_normal(params, frame.base, m, h)
    gram = mm * hh - mh * mh
    if gram < 1e-12 * mm * hh:
        raise DegeneratePlane("fields are numerically linearly dependent")
    return -curvature_tensor_value(params, frame, m, h) / gram


def circle_operator_spectrum(params: MetricParams, r: float, n_max: int) -> np.ndarray:
    """Eigenvalues of the stability operator on the circle of radius r,

        S f = f'' + (A k^2 - 1)^2 / (2 A (1 + A k^2)) f,   k = 1/r,

    on pure frequencies 0..n_max.  Only finitely many are positive; the list
    is strictly decreasing in the frequency."""
    if params.A <= 0.0:
        raise RequiresPositiveA("the stability operator needs A > 0")
    if r <= 0.0:
        raise ValueError("radius must be positive")
    A = params.A
    ksq = 1.0 / (r * r)
    const = (A * ksq - 1.0) ** 2 / (2.0 * A * (1.0 + A * ksq))
    n = np.arange(n_max + 1)
    return -((n / r) ** 2) + const


def circle_jacobi_lambda(params: MetricParams, r: float, n: int) -> float:
    """Curvature eigenvalue of frequency n along the circle family:

        lambda_n = -(1 - A/r^2)^2 / (2 (r + A/r)^2) n^2
                   + A / (r^3 (r + A/r)) n^4
    """
    if r <= 0.0:
        raise ValueError("radius must be positive")
    A = params.A
    q = r + A / r
    return float(-((1.0 - A / r**2) ** 2) / (2.0 * q * q) * n**2
                 + A / (r**3 * q) * n**4)


def jacobi_potential(params: MetricParams, r, n: int):
    """Potential V(r) of the scaled Jacobi equation u'' = V u, where
    u = (r + A/r)^{1/4} a_n:

        V = -(1 - A/r^2)^2 / (2 (r + A/r)^2) (n^2 - 5/8)
            + A / (r^3 (r + A/r)) (n^4 - 1/2)
    """
    A = params.A
    r = np.asarray(r, dtype=float)
    q = r + A / r
    return (-((1.0 - A / r**2) ** 2) / (2.0 * q * q) * (n**2 - 0.625)
            + A / (r**3 * q) * (n**4 - 0.5))


@dataclass(frozen=True)
class JacobiSolution:
    """Jacobi field of one angular frequency along the circle family.

    ``a`` samples the field coefficient a_n(r) on the grid ``r`` (normalized
    to unit maximum amplitude).  ``field_zeros`` are the radii where a_n
    changes sign.  ``scaled_extrema`` are the radii where the scaled field
    (r + A/r)^{1/4} a_n has zero derivative; the first of these reproduces
    the published first-conjugate-point radius 10.77 sqrt(A) for n = 3.
    """

    n: int
    A: float
    r: np.ndarray
    a: np.ndarray
    field_zeros: np.ndarray
    scaled_extrema: np.ndarray


def _refine_zero(f, lo: float, hi: float, tol: float) -> float:
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            return mid
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (flo < 0) != (fm < 0):
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def jacobi_field_on_circles(params: MetricParams, n: int,
                            r_range=(0.05, 25.0), dr: float = 0.01) -> JacobiSolution:
    """Integrate the Jacobi equation for frequency n along the circle family.

    The equation is solved in the scaled variable u = (r + A/r)^{1/4} a_n,
    which obeys u'' = V(r) u with the potential of :func:`jacobi_potential`.
    Integration starts on the regular branch near r = 0 (u ~ r^p with
    p = n^2 + 1/4, the positive characteristic exponent of the r^{-2}
    potential) at r0 = 1e-3 sqrt(A), so the solution is the one vanishing at
    the collapse end of the geodesic.  The linear solution is rescaled in
    flight to dodge overflow; zeros are found by sign change plus bisection
    to 1e-10 sqrt(A).
    """
    if params.A <= 0.0:
        raise RequiresPositiveA("Jacobi fields on circles need A > 0")
    if n < 1:
        raise ValueError("frequency must be >= 1")
    A = params.A
    r_lo, r_hi = r_range
    if not (0.0 < r_lo < r_hi):
        raise ValueError("need 0 < r_lo < r_hi")
    sqrtA = np.sqrt(A)
    r0 = min(1e-3 * sqrtA, 0.5 * r_lo)
    p = n * n + 0.25
    rhs = lambda r, y: [y[1], jacobi_potential(params, r, n) * y[0]]

    grid = np.arange(r_lo, r_hi + 0.5 * dr, dr)
    grid = grid[grid <= r_hi]
    u_vals = np.empty_like(grid)
    up_vals = np.empty_like(grid)
    scale_log = 0.0  # we only ever need u up to positive scale

    field_zeros = []
    extrema = []
    ztol = 1e-10 * sqrtA
    # segment boundaries: geometric in r to keep per-segment growth bounded
    bounds = [r0]
    while bounds[-1] < r_hi:
        bounds.append(min(bounds[-1] * 2.0, r_hi))
    y = np.array([1.0, p / r0])
    gi = 0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        sol = solve_ivp(rhs, (lo, hi), y, method="DOP853",
                        rtol=1e-10, atol=0.0, dense_output=True)
        if not sol.success:
            raise StiffnessFailure(f"Jacobi integration failed on [{lo:.3g}, {hi:.3g}]: {sol.message}")
        # sample the requested grid inside this segment
        while gi < len(grid) and grid[gi] <= hi + 1e-15:
            rg = grid[gi]
            if rg >= lo - 1e-15:
                uv = sol.sol(min(max(rg, lo), hi))
                u_vals[gi], up_vals[gi] = uv[0], uv[1]
                gi += 1
            else:
                u_vals[gi] = np.nan
                up_vals[gi] = np.nan
                gi += 1
        # locate zeros of u and of u' on a fine scan of the segment
        fine = np.linspace(lo, hi, max(64, int((hi - lo) / max(dr / 4, 1e-6)) + 2))
        vals = sol.sol(fine)
        for row, out in ((0, field_zeros), (1, extrema)):
            sgn = np.sign(vals[row])
            flips = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
            for idx in flips:
                z = _refine_zero(lambda r, row=row: sol.sol(r)[row],
                                 fine[idx], fine[idx + 1], ztol)
                out.append(z)
        y = sol.sol(hi)
        m = max(abs(y[0]), abs(y[1]))
        if m > 1e100:
            y = y / m
            scale_log += np.log(m)

    pref = (grid + A / grid) ** -0.25
    a = pref * u_vals
    amax = np.nanmax(np.abs(a))
    if amax > 0:
        a = a / amax
    return JacobiSolution(
        n=n, A=A, r=grid, a=a,
        field_zeros=np.array([z for z in field_zeros if r_lo <= z <= r_hi]),
        scaled_extrema=np.array([z for z in extrema if r_lo <= z <= r_hi]),
    )


def first_conjugate_radius(params: MetricParams, n: int, r_max: float | None = None) -> float:
    """First radius where the scaled Jacobi field of frequency n turns over,
    the feature reported as the first conjugate point of the circle geodesic
    (10.77 sqrt(A) for n = 3)."""
    if r_max is None:
        r_max = 20.0 * np.sqrt(params.A)
    sol = jacobi_field_on_circles(params, n, (0.05 * np.sqrt(params.A), r_max),
                                  dr=0.05 * np.sqrt(params.A))
    if len(sol.scaled_extrema) == 0:
        raise StiffnessFailure(f"no turning point below r = {r_max:g}")
    return float(sol.scaled_extrema[0])
