"""Forward geodesic integration in intrinsic variables for the unweighted
metric, plus a residual evaluator for the general geodesic equation.

For A = 0 the horizontal geodesic flow closes in the intrinsic variables
(s, a, kappa) = (parametric speed, normal velocity, curvature):

    s_t = -a kappa s
    a_t = (1/2) kappa a^2
    kappa_t = a kappa^2 + a_thth / s^2 - a_th s_th / s^3

with the pointwise conservation law s a^2 = const, which serves as the
integrator's primary correctness witness.  The scheme is deliberately the
simplest one that works: explicit Euler in time with central differences in
theta.  Positions are advanced along the current vertex normals and are
diagnostic only; the intrinsic fields drive the dynamics.

For general A there is no forward stepper here (the full flow is a highly
nonlinear fourth-order problem); instead :func:`geodesic_residual` evaluates
the pointwise defect of a candidate path in the normal-velocity form of the
geodesic equation, which tends to zero under grid refinement exactly when
the path is a geodesic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import (
    PolygonCurve,
    NormalField,
    vertex_curvature,
    vertex_normals,
    vertex_weights,
)
from .errors import BlowupDetected, NonHorizontalPath
from .metric import CurvePath, MetricParams, tangential_normal_ratio

SPEED_FLOOR = 1e-12


@dataclass(frozen=True)
class IntrinsicState:
    """State of the intrinsic flow at one time: parametric speed s = |c_theta|,
    normal velocity a, curvature kappa (all per vertex on a uniform theta
    grid) and the reconstructed vertex positions."""

    t: float
    s: np.ndarray
    a: np.ndarray
    kappa: np.ndarray
    positions: np.ndarray

    @property
    def n(self) -> int:
        return self.s.shape[0]

    def conserved(self) -> np.ndarray:
        """The pointwise invariant s * a^2."""
        return self.s * self.a**2


@dataclass
class Trajectory:
    states: list
    blew_up: bool = False
    conservation_drift: float = 0.0
    reconstruction_drift: float = 0.0
    notes: dict = field(default_factory=dict)

    @property
    def t_reached(self) -> float:
        return self.states[-1].t if self.states else 0.0


def initial_state(curve: PolygonCurve, velocity: NormalField) -> IntrinsicState:
    """Intrinsic state of a constant-speed curve with a given normal velocity."""
    if velocity.n != curve.n:
        raise ValueError("velocity size must match the curve")
    dtheta = 2.0 * np.pi / curve.n
    s = vertex_weights(curve) / dtheta
    return IntrinsicState(
        t=0.0,
        s=s.copy(),
        a=velocity.values.copy(),
        kappa=vertex_curvature(curve),
        positions=curve.points.copy(),
    )


def stability_dt(state: IntrinsicState) -> float:
    """Largest stable explicit step: 0.25 (min_i s_i dtheta)^2 / max |a|."""
    dtheta = 2.0 * np.pi / state.n
    h = state.s.min() * dtheta
    return 0.25 * h * h / max(np.abs(state.a).max(), SPEED_FLOOR)


def _dth(f: np.ndarray, dtheta: float) -> np.ndarray:
    return (np.roll(f, -1) - np.roll(f, 1)) / (2.0 * dtheta)


def _dthth(f: np.ndarray, dtheta: float) -> np.ndarray:
    return (np.roll(f, -1) - 2.0 * f + np.roll(f, 1)) / (dtheta * dtheta)


def step_a0(state: IntrinsicState, dt: float,
            kappa_ceiling: float = np.inf) -> IntrinsicState:
    """One explicit Euler step of the intrinsic flow.

    Raises :class:`BlowupDetected` when the curvature exceeds the ceiling
    (the expected end state of corner formation), and ``ValueError`` when dt
    violates the stability bound.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if dt > stability_dt(state) * (1.0 + 1e-12):
        raise ValueError(
            f"dt={dt:.3e} exceeds the stability bound {stability_dt(state):.3e}"
        )
    n = state.n
    dtheta = 2.0 * np.pi / n
    s, a, kap = state.s, state.a, state.kappa
    s_t = -a * kap * s
    a_t = 0.5 * kap * a * a
    kap_t = a * kap**2 + _dthth(a, dtheta) / s**2 - _dth(a, dtheta) * _dth(s, dtheta) / s**3
    normals = vertex_normals(PolygonCurve(state.positions))
    new = IntrinsicState(
        t=state.t + dt,
        s=s + dt * s_t,
        a=a + dt * a_t,
        kappa=kap + dt * kap_t,
        positions=state.positions + dt * a[:, None] * normals,
    )
    if np.abs(new.kappa).max() > kappa_ceiling:
        raise BlowupDetected(
            f"curvature {np.abs(new.kappa).max():.3e} exceeded ceiling "
            f"{kappa_ceiling:.3e} at t={new.t:.6f}",
            states=[new],
        )
    return new


def integrate_a0(curve: PolygonCurve, velocity: NormalField, t_end: float,
                 dt: float, kappa_ceiling: float | None = None,
                 store_every: int = 1, recon_check_every: int = 200) -> Trajectory:
    """Integrate the intrinsic flow from a constant-speed curve.

    Stops at ``t_end`` or when curvature blows past the ceiling (default
    1e3 divided by the initial length), in which case the partial trajectory
    is returned with ``blew_up`` set.  Tracks the worst relative drift of the
    conserved field s a^2 and the divergence between the intrinsic curvature
    and the curvature rebuilt from the reconstructed positions.
    """
    state = initial_state(curve, velocity)
    if kappa_ceiling is None:
        dtheta = 2.0 * np.pi / curve.n
        kappa_ceiling = 1e3 / float(state.s.sum() * dtheta)
    ref = state.conserved()
    scale = max(float(np.abs(velocity.values).max()) ** 2 * float(state.s.mean()), SPEED_FLOOR)
    traj = Trajectory(states=[state])
    steps = int(round(t_end / dt))
    blew = False
    recon = 0.0
    for k in range(steps):
        try:
            state = step_a0(state, dt, kappa_ceiling)
        except BlowupDetected:
            blew = True
            break
        drift = np.abs(state.conserved() - ref).max() / scale
        traj.conservation_drift = max(traj.conservation_drift, float(drift))
        if (k + 1) % recon_check_every == 0:
            rebuilt = vertex_curvature(PolygonCurve(state.positions))
            recon = max(recon, float(np.abs(rebuilt - state.kappa).max()))
        if (k + 1) % store_every == 0 or k == steps - 1:
            traj.states.append(state)
    traj.blew_up = blew
    traj.reconstruction_drift = recon
    return traj


def geodesic_residual(params: MetricParams, path: CurvePath,
                      horizontality_ratio: float = 1e-3) -> np.ndarray:
    """Pointwise defect of a path in the normal-velocity geodesic equation.

        a_t - [ (1/2) kappa a^2
                + A (a^2 (kappa_ss - kappa^3 / 2) + 4 kappa_s a a_s
                     + 2 kappa a_s^2) ] / (1 + A kappa^2)

    evaluated with central differences in time and arc length on the interior
    slices; returns a (T-2, n) array.  The path must be horizontal (up to the
    given ratio) and each slice constant speed, since arc-length derivatives
    are taken at uniform spacing.
    """
    ratio = tangential_normal_ratio(path)
    if ratio > horizontality_ratio:
        raise NonHorizontalPath(
            f"tangential/normal speed ratio {ratio:.3e} exceeds {horizontality_ratio:.0e}"
        )
    T, n = path.T, path.n
    dt = path.dt
    a = np.empty((T, n))
    kap = np.empty((T, n))
    ds = np.empty(T)
    for j in range(T):
        c = path.slice(j)
        nrm = vertex_normals(c)
        if j == 0:
            ct = (path.points[1] - path.points[0]) / dt
        elif j == T - 1:
            ct = (path.points[-1] - path.points[-2]) / dt
        else:
            ct = (path.points[j + 1] - path.points[j - 1]) / (2.0 * dt)
        a[j] = (ct * nrm).sum(axis=1)
        kap[j] = vertex_curvature(c)
        ds[j] = vertex_weights(c).mean()
    res = np.empty((T - 2, n))
    for j in range(1, T - 1):
        h = ds[j]
        a_t = (a[j + 1] - a[j - 1]) / (2.0 * dt)
        a_s = (np.roll(a[j], -1) - np.roll(a[j], 1)) / (2.0 * h)
        k_s = (np.roll(kap[j], -1) - np.roll(kap[j], 1)) / (2.0 * h)
        k_ss = (np.roll(kap[j], -1) - 2.0 * kap[j] + np.roll(kap[j], 1)) / (h * h)
        rhs = (
            0.5 * kap[j] * a[j] ** 2
            + params.A
            * (
                a[j] ** 2 * (k_ss - 0.5 * kap[j] ** 3)
                + 4.0 * k_s * a[j] * a_s
                + 2.0 * kap[j] * a_s**2
            )
        ) / (1.0 + params.A * kap[j] ** 2)
        res[j - 1] = a_t - rhs
    return res
