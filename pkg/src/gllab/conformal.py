"""Conformal plane charts of closed surfaces of revolution.

The chart composes the surface parametrization with stereographic
coordinates: a planar point x at radius r corresponds to the latitude
phi = 2*arctan(1/r) and the arclength S(phi), where S solves the singular
boundary-value problem

    S'(phi) sin(phi) = alpha(S(phi)),   S(0) = 0,  S(pi) = l.

Both endpoints are singular; every solution family behaves like S ~ C*phi
at the north pole and l - S ~ C_s*(pi - phi) at the south pole, and the
overall scale of the chart is a gauge choice.  We fix the gauge by imposing
unit slope at the south pole (C_s = 1), which puts the conformal factor at
the origin at f(0) = ln 2 and reduces to S = phi, f = ln(2/(1+r^2)) on the
unit sphere.  The remaining north-pole constant C is found by bidirectional
shooting with the match point at the equator, where the sensitivity to C is
O(1) (a single-sided shoot to phi = pi is ill-conditioned: the endpoint
value is gauge-degenerate).

The metric in the chart is e^{2f} (dx1^2 + dx2^2) with

    f = ln(alpha(S(phi)) / r) = ln(2 S'(phi) / (1 + r^2)),

the second form following from the chart ODE and sin(phi) = 2r/(1+r^2); it
is smooth through both poles and is what the evaluator uses.  The curvature
combinations

    A = (alpha'(S) + 1)/r^2 >= 0,     B = -alpha(S)^2 K / r^2

give the gradient and Hessian of f in closed form:

    grad f = -A x,     D^2 f = -A I + (2A + B) (x x^T)/r^2,

so Tr D^2 f = B and det D^2 f = -A^2 - A B.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import (BadParameter, NonMonotone, OriginUndefined,
                     PoleAtInfinity, ShootingFailed)
from .geometry import Surface, SurfaceKind, gauss_curvature, symmetrized_closed_surface

DEFAULT_N_PHI = 4096
DEFAULT_ODE_TOL = 1e-10

# Integration starts this far from each singular endpoint.
PHI_CUT = 1e-4
# Within this distance of an endpoint, S' switches to its pole series.
PHI_SERIES = 1e-3
# Evaluations with r below this are refused (1/r^2 factors).
R_MIN = 1e-8


def _phi_of_r(r):
    """Latitude phi = 2 arctan(1/r); r = 0 -> pi, r -> inf -> 0."""
    return 2.0 * np.arctan2(1.0, r)


def _r_of_phi(phi):
    """Planar radius r = cot(phi/2), computed stably near phi = pi."""
    return np.tan(0.5 * (np.pi - phi))


def _log1p_r2(r):
    """log(1 + r^2) without overflow for large r."""
    r = np.asarray(r, float)
    big = r > 1.0
    out = np.empty_like(r)
    out[big] = 2.0 * np.log(r[big]) + np.log1p(r[big] ** -2)
    out[~big] = np.log1p(r[~big] ** 2)
    return out


@dataclass(frozen=True)
class ConformalChart:
    """Tabulated chart of a closed surface of revolution.

    Immutable; safe for concurrent evaluation.  Planar points are length-2
    arrays (x1, x2); radial quantities also have vectorized *_of_r forms.
    """

    surface: Surface
    n_phi: int
    ode_tol: float
    c_north: float
    c_south: float
    k_pole_north: float
    k_pole_south: float
    phi_nodes: np.ndarray
    s_nodes: np.ndarray
    sp_nodes: np.ndarray
    ode_residual: float
    _spline: CubicHermiteSpline
    _dspline: object

    is_flat = False

    @property
    def l(self) -> float:
        return self.surface.l

    # --- chart functions of phi ---

    def S(self, phi):
        return self._spline(np.clip(phi, 0.0, np.pi))

    def Sprime(self, phi):
        """dS/dphi from the tabulated interpolant, with pole series at the ends.

        Evaluating through the interpolant (rather than re-deriving from the
        ODE right-hand side) keeps laplace_check an honest measure of how
        well the stored chart solves its equation between collocation nodes.
        """
        phi = np.asarray(phi, float)
        scalar = phi.ndim == 0
        phi = np.atleast_1d(np.clip(phi, 0.0, np.pi))
        out = np.empty_like(phi)
        north = phi < PHI_SERIES
        south = phi > np.pi - PHI_SERIES
        mid = ~(north | south)
        if np.any(mid):
            out[mid] = self._dspline(phi[mid])
        if np.any(north):
            c = self.c_north
            out[north] = c * (1 + (1 - self.k_pole_north * c * c) * phi[north] ** 2 / 4)
        if np.any(south):
            c = self.c_south
            d = np.pi - phi[south]
            out[south] = c * (1 + (1 - self.k_pole_south * c * c) * d * d / 4)
        return out[0] if scalar else out

    def S_inv(self, s):
        """phi with S(phi) = s, by monotone Newton on the tabulated spline."""
        s = np.asarray(s, float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        if np.any(s < -1e-12) or np.any(s > self.l * (1 + 1e-12)):
            raise BadParameter("arclength outside [0, l]")
        phi = np.interp(s, self.s_nodes, self.phi_nodes)
        for _ in range(6):
            phi = np.clip(phi - (self._spline(phi) - s)
                          / np.maximum(self.Sprime(phi), 1e-30), 0.0, np.pi)
        return phi[0] if scalar else phi

    # --- planar evaluators ---

    def radius_of(self, s):
        """Chart radius of the parallel at arclength s; s = 0 is at infinity."""
        s = np.asarray(s, float)
        if np.any(s <= 0):
            raise PoleAtInfinity("s = 0 maps to the point at infinity")
        return _r_of_phi(self.S_inv(s))

    def coords(self, s: float, theta: float) -> np.ndarray:
        """Planar image (r cos theta, r sin theta) of the surface point."""
        r = self.radius_of(s)
        return np.array([r * np.cos(theta), r * np.sin(theta)])

    def f_of_r(self, r):
        """Conformal factor ln(alpha(S)/r); finite at r = 0 and r = inf.

        Away from the poles this goes through the C^2 chart interpolant S,
        which keeps finite differences of f clean; inside the pole windows
        it switches to the series form ln(2 S'/(1+r^2)) where the direct
        quotient degenerates to 0/0.
        """
        r = np.asarray(r, float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        phi = _phi_of_r(r)
        out = np.empty_like(phi)
        polar = (phi < PHI_SERIES) | (phi > np.pi - PHI_SERIES)
        if np.any(~polar):
            pm = phi[~polar]
            out[~polar] = (np.log(self.surface.profile.alpha(self.S(pm)))
                           - np.log(r[~polar]))
        if np.any(polar):
            out[polar] = (np.log(2.0 * self.Sprime(phi[polar]))
                          - _log1p_r2(r[polar]))
        return out[0] if scalar else out

    def _f_via_slope(self, r):
        """f from the interpolant slope, ln(2 S'/(1+r^2)); laplace_check path."""
        r = np.asarray(r, float)
        return np.log(2.0 * self.Sprime(_phi_of_r(r))) - _log1p_r2(r)

    def ab_of_r(self, r):
        """Curvature combinations (A, B); refuses r < R_MIN (1/r^2 factors)."""
        r = np.asarray(r, float)
        if np.any(r < R_MIN):
            raise OriginUndefined(f"A, B undefined for r < {R_MIN}")
        s = self.S(_phi_of_r(r))
        prof = self.surface.profile
        a_val = np.asarray(prof.alpha(s), float)
        k = gauss_curvature(self.surface, s)
        A = (np.asarray(prof.dalpha(s), float) + 1.0) / r ** 2
        B = -(a_val ** 2) * k / r ** 2
        return A, B

    def curvature_of_r(self, r):
        """Gauss curvature of the surface point imaged at radius r."""
        return gauss_curvature(self.surface, self.S(_phi_of_r(np.asarray(r, float))))

    # point-wise forms used by the vortex-energy module

    def f(self, x) -> float:
        return float(self.f_of_r(np.hypot(*np.asarray(x, float))))

    def grad_f(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        A, _ = self.ab_of_r(np.hypot(*x))
        return -float(A) * x

    def hessian_f(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        r2 = x @ x
        A, B = (float(v) for v in self.ab_of_r(np.sqrt(r2)))
        return -A * np.eye(2) + (2 * A + B) * np.outer(x, x) / r2

    def ab_values(self, x) -> tuple[float, float]:
        A, B = self.ab_of_r(np.hypot(*np.asarray(x, float)))
        return float(A), float(B)

    def curvature_at(self, x) -> float:
        return float(self.curvature_of_r(np.hypot(*np.asarray(x, float))))

    def laplace_check(self, x) -> float:
        """Residual of Delta f + K e^{2f}, with Delta f = Tr(D^2 f) = B.

        e^{2f} is taken through the interpolant-slope form of f, so the
        residual measures how well the stored chart solves its ODE between
        collocation nodes; it vanishes identically for an exact chart.
        """
        x = np.asarray(x, float)
        r = np.hypot(*x)
        _, B = self.ab_of_r(r)
        k = self.curvature_of_r(r)
        return float(B + k * np.exp(2.0 * self._f_via_slope(r)))


class FlatChart:
    """f == 0 test chart: isolates the interaction term of the vortex energy."""

    is_flat = True

    def f(self, x) -> float:
        return 0.0

    def grad_f(self, x) -> np.ndarray:
        return np.zeros(2)

    def hessian_f(self, x) -> np.ndarray:
        return np.zeros((2, 2))

    def ab_values(self, x):
        return 0.0, 0.0

    def curvature_at(self, x) -> float:
        return 0.0


def _alpha_extended(profile) -> Callable:
    """alpha continued past l by even reflection, so overshooting trajectories
    in the shooting iteration stay defined and keep growing."""
    l = profile.l

    def ext(s):
        s = np.clip(s, 0.0, 2.0 * l)
        return profile.alpha(np.where(s <= l, s, 2.0 * l - s))

    return ext


def solve_chart(surface: Surface, n_phi: int = DEFAULT_N_PHI,
                ode_tol: float = DEFAULT_ODE_TOL) -> ConformalChart:
    """Solve the chart ODE for a closed surface by bidirectional shooting.

    Integrates from phi = PHI_CUT with the north series S = C*phi and from
    the south pole with the gauge-fixing unit slope, matching at the
    equator; C is bracketed and solved by brentq.  Raises ShootingFailed
    when no bracket exists and NonMonotone if the tabulated S ever fails to
    increase.
    """
    if surface.kind is not SurfaceKind.CLOSED:
        raise BadParameter("solve_chart expects a closed surface")
    if n_phi < 16:
        raise BadParameter("n_phi must be at least 16")
    prof = surface.profile
    l = prof.l
    alpha_ext = _alpha_extended(prof)
    k0 = float(gauss_curvature(surface, 0.0))
    kl = float(gauss_curvature(surface, l))
    phi_mid = np.pi / 2

    def north_rhs(phi, y):
        return alpha_ext(y[0]) / np.sin(phi)

    def south_rhs(delta, y):
        # sigma = l - S as a function of delta = pi - phi
        return alpha_ext(l - y[0]) / np.sin(delta)

    def integrate(rhs, y0, t_end, t_eval=None):
        sol = solve_ivp(rhs, [PHI_CUT, t_end], [y0], method="DOP853",
                        rtol=1e-12, atol=1e-14, t_eval=t_eval)
        if not sol.success:
            raise ShootingFailed(f"chart ODE integration failed: {sol.message}")
        return sol

    def north_start(c):
        return c * PHI_CUT + c * (1 - k0 * c * c) * PHI_CUT ** 3 / 12

    south_start = PHI_CUT + (1 - kl) * PHI_CUT ** 3 / 12
    s_match = l - float(integrate(south_rhs, south_start, np.pi - phi_mid).y[0][-1])

    def residual(c):
        return float(integrate(north_rhs, north_start(c), phi_mid).y[0][-1]) - s_match

    # bracket the shooting constant around the natural scale l/pi
    scale = l / np.pi
    lo, hi = scale, scale
    r_lo = r_hi = residual(scale)
    for _ in range(60):
        if r_lo < 0 < r_hi:
            break
        if r_lo >= 0:
            lo /= 1.5
            r_lo = residual(lo)
        if r_hi <= 0:
            hi *= 1.5
            r_hi = residual(hi)
    else:
        raise ShootingFailed(
            f"no shooting constant in [{lo:.3g}, {hi:.3g}] matches the profile")
    c_north = brentq(residual, lo, hi, xtol=1e-14 * max(1.0, scale))

    # final tabulation on the uniform phi grid
    phi_nodes = np.linspace(0.0, np.pi, n_phi)
    north_mask = (phi_nodes > PHI_CUT) & (phi_nodes <= phi_mid)
    south_mask = (phi_nodes > phi_mid) & (phi_nodes < np.pi - PHI_CUT)
    s_nodes = np.empty_like(phi_nodes)
    s_nodes[0], s_nodes[-1] = 0.0, l
    tiny_n = (phi_nodes <= PHI_CUT) & (phi_nodes > 0)
    tiny_s = (phi_nodes >= np.pi - PHI_CUT) & (phi_nodes < np.pi)
    s_nodes[tiny_n] = c_north * phi_nodes[tiny_n]
    s_nodes[tiny_s] = l - (np.pi - phi_nodes[tiny_s])
    if np.any(north_mask):
        s_nodes[north_mask] = integrate(
            north_rhs, north_start(c_north), phi_mid,
            t_eval=phi_nodes[north_mask]).y[0]
    if np.any(south_mask):
        deltas = (np.pi - phi_nodes[south_mask])[::-1]
        s_nodes[south_mask] = (l - integrate(
            south_rhs, south_start, np.pi - phi_mid, t_eval=deltas).y[0])[::-1]

    match_gap = abs(float(integrate(north_rhs, north_start(c_north), phi_mid).y[0][-1])
                    - s_match)
    if match_gap > ode_tol * max(1.0, l):
        raise ShootingFailed(
            f"bidirectional match gap {match_gap:.3g} exceeds ode_tol * l")
    if np.any(np.diff(s_nodes) <= 0):
        raise NonMonotone("tabulated S(phi) is not strictly increasing")

    sp_nodes = np.empty_like(phi_nodes)
    interior = (phi_nodes > PHI_SERIES) & (phi_nodes < np.pi - PHI_SERIES)
    sp_nodes[interior] = (prof.alpha(s_nodes[interior])
                          / np.sin(phi_nodes[interior]))
    pn = phi_nodes[~interior]
    near_n = pn < phi_mid
    c, cs = c_north, 1.0
    sp_edge = np.empty_like(pn)
    sp_edge[near_n] = c * (1 + (1 - k0 * c * c) * pn[near_n] ** 2 / 4)
    d = np.pi - pn[~near_n]
    sp_edge[~near_n] = cs * (1 + (1 - kl * cs * cs) * d * d / 4)
    sp_nodes[~interior] = sp_edge

    spline = CubicHermiteSpline(phi_nodes, s_nodes, sp_nodes)
    mids = 0.5 * (phi_nodes[1:-2] + phi_nodes[2:-1])
    resid = float(np.max(np.abs(
        spline.derivative()(mids) * np.sin(mids) - prof.alpha(spline(mids)))))

    return ConformalChart(
        surface=surface, n_phi=n_phi, ode_tol=ode_tol, c_north=float(c_north),
        c_south=1.0, k_pole_north=k0, k_pole_south=kl, phi_nodes=phi_nodes,
        s_nodes=s_nodes, sp_nodes=sp_nodes, ode_residual=resid, _spline=spline,
        _dspline=spline.derivative())


def chart_coords(chart: ConformalChart, s: float, theta: float) -> np.ndarray:
    """Planar chart point of the surface point (s, theta)."""
    return chart.coords(s, theta)


def conformal_factor(chart: ConformalChart, x) -> float:
    """f(x); depends on x through |x| only."""
    return chart.f(x)


def ab_values(chart: ConformalChart, x) -> tuple[float, float]:
    """The curvature combinations (A, B) at a planar point."""
    return chart.ab_values(x)


def hessian_f(chart: ConformalChart, x) -> np.ndarray:
    """Closed-form Hessian of the conformal factor."""
    return chart.hessian_f(x)


def laplace_check(chart: ConformalChart, x) -> float:
    """Residual of the curvature equation Delta f = -K e^{2f}."""
    return chart.laplace_check(x)


def cap_chart(cap: Surface, n_phi: int = DEFAULT_N_PHI) -> ConformalChart:
    """Chart for a boundary cap via its mirrored closed surface.

    The cap occupies s in (0, l], i.e. chart radii r >= radius_of(l); only
    relative planar positions matter for phase construction, so the kink the
    mirroring introduces at the rim is harmless.
    """
    closed = symmetrized_closed_surface(cap)
    return solve_chart(closed, n_phi=n_phi, ode_tol=1e-6)
