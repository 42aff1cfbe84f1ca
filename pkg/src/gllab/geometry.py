"""Surfaces of revolution described by arclength profile curves.

A profile (alpha(s), beta(s)) on [0, l] with alpha'^2 + beta'^2 = 1 generates
the surface (alpha cos(theta), alpha sin(theta), beta); alpha is the distance
from the rotation axis and s the arclength along the generating curve.  The
induced metric is ds^2 + alpha(s)^2 dtheta^2 and the Gauss curvature is
K = -alpha''/alpha.

Profiles are supplied as alpha only; beta is reconstructed by quadrature of
beta' = sqrt(1 - alpha'^2) so the arclength normalization holds by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import BadParameter, NegativeRadius, SlopeExceedsOne

# Fraction of l below which alpha counts as "at a pole" and curvature
# switches to the L'Hopital limit -alpha'''/alpha'.
POLE_EPS_FACTOR = 1e-6

# Fine-grid size for tabulated derivatives and quadrature (>= 4096 nodes).
FINE_GRID = 8193


class SurfaceKind(Enum):
    CLOSED = "closed"
    BOUNDARY_CAP = "boundary_cap"


@dataclass(frozen=True)
class ProfileCurve:
    """Arclength profile (alpha, beta) on [0, l] with evaluable derivatives.

    All callables accept scalars or ndarrays.  Immutable after construction;
    safe for unrestricted concurrent reads.
    """

    l: float
    alpha: Callable
    dalpha: Callable
    d2alpha: Callable
    d3alpha: Callable
    beta: Callable
    dbeta: Callable

    def sample(self, n: int = 1000) -> np.ndarray:
        """Uniform interior sample points, endpoints included."""
        return np.linspace(0.0, self.l, n)


@dataclass(frozen=True)
class Surface:
    """A profile curve plus its endpoint classification."""

    profile: ProfileCurve
    kind: SurfaceKind
    name: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def l(self) -> float:
        return self.profile.l

    @property
    def boundary_radius(self) -> float:
        if self.kind is not SurfaceKind.BOUNDARY_CAP:
            raise BadParameter("closed surfaces have no boundary circle")
        return float(self.profile.alpha(self.profile.l))

    def embed(self, s, theta) -> np.ndarray:
        """Points (alpha cos, alpha sin, beta) in R^3; broadcasts s, theta."""
        s = np.asarray(s, float)
        theta = np.asarray(theta, float)
        a = self.profile.alpha(s)
        return np.stack(np.broadcast_arrays(
            a * np.cos(theta), a * np.sin(theta), self.profile.beta(s)), axis=-1)


def _fd1_uniform(f: np.ndarray, h: float) -> np.ndarray:
    """4th-order first derivative on a uniform grid, one-sided at the ends."""
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def _beta_from_dalpha(dalpha: Callable, l: float) -> tuple[Callable, Callable]:
    """Reconstruct beta by quadrature of sqrt(1 - alpha'^2), beta(0) = 0."""
    s = np.linspace(0.0, l, FINE_GRID)
    slope = np.asarray(dalpha(s), float)
    vals = np.sqrt(np.clip(1.0 - slope * slope, 0.0, None))
    b = cumulative_simpson(vals, x=s, initial=0.0)
    spline = CubicHermiteSpline(s, b, vals)

    def beta(q):
        return spline(np.clip(q, 0.0, l))

    def dbeta(q):
        sl = np.asarray(dalpha(q), float)
        return np.sqrt(np.clip(1.0 - sl * sl, 0.0, None))

    return beta, dbeta


def _validate_profile(alpha: Callable, dalpha: Callable, l: float) -> None:
    s = np.linspace(0.0, l, 4097)
    a = np.asarray(alpha(s), float)
    sl = np.asarray(dalpha(s), float)
    if np.max(np.abs(sl)) > 1.0 + 1e-9:
        raise SlopeExceedsOne(
            f"max |alpha'| = {np.max(np.abs(sl)):.6g} > 1; no arclength completion")
    if np.min(a[1:-1]) < -1e-12 * max(1.0, l):
        raise NegativeRadius("alpha < 0 in the interior of [0, l]")
    if abs(a[0]) > 1e-8 * max(1.0, l):
        raise BadParameter(f"alpha(0) = {a[0]:.3g}, expected a pole at s = 0")


def profile_from_callables(alpha: Callable, l: float, dalpha: Callable,
                           d2alpha: Callable,
                           d3alpha: Optional[Callable] = None) -> ProfileCurve:
    """Profile with analytically supplied derivatives."""
    _validate_profile(alpha, dalpha, l)
    if d3alpha is None:
        h = 1e-5 * l

        def d3alpha(s, _h=h):
            s = np.asarray(s, float)
            lo = np.clip(s - _h, 0.0, l)
            hi = np.clip(s + _h, 0.0, l)
            return (np.asarray(d2alpha(hi), float)
                    - np.asarray(d2alpha(lo), float)) / (hi - lo)

    beta, dbeta = _beta_from_dalpha(dalpha, l)
    return ProfileCurve(l=float(l), alpha=alpha, dalpha=dalpha,
                        d2alpha=d2alpha, d3alpha=d3alpha, beta=beta, dbeta=dbeta)


def build_profile_from_alpha(alpha: Callable, l: float,
                             dalpha: Optional[Callable] = None,
                             d2alpha: Optional[Callable] = None,
                             d3alpha: Optional[Callable] = None) -> ProfileCurve:
    """Profile from a radius function alone.

    Missing derivatives come from centered 4th-order finite differences of
    alpha tabulated on a fixed fine grid; beta is reconstructed by quadrature.
    Raises SlopeExceedsOne / NegativeRadius when the preconditions fail.
    """
    if l <= 0:
        raise BadParameter(f"profile length l = {l} must be positive")
    if dalpha is None or d2alpha is None:
        s = np.linspace(0.0, l, FINE_GRID)
        h = s[1] - s[0]
        a = np.asarray(alpha(s), float)
        d1 = _fd1_uniform(a, h)
        d2 = _fd1_uniform(d1, h)
        d3 = _fd1_uniform(d2, h)
        dalpha = dalpha or CubicSpline(s, d1)
        d2alpha = d2alpha or CubicSpline(s, d2)
        d3alpha = d3alpha or CubicSpline(s, d3)
    return profile_from_callables(alpha, l, dalpha, d2alpha, d3alpha)


def profile_from_table(table: Sequence[Sequence[float]]) -> ProfileCurve:
    """Profile from tabulated (s, alpha) rows, resampled to the fine grid."""
    arr = np.asarray(table, float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 4:
        raise BadParameter("alpha_table must be an (n, 2) array of (s, alpha), n >= 4")
    s, a = arr[:, 0], arr[:, 1]
    if np.any(np.diff(s) <= 0):
        raise BadParameter("alpha_table s-column must be strictly increasing")
    if abs(s[0]) > 1e-12:
        raise BadParameter("alpha_table must start at s = 0")
    base = CubicSpline(s, a)
    return build_profile_from_alpha(base, float(s[-1]))


def _parametric_arclength_profile(rho, drho, d2rho, z, dz, d2z,
                                  t_end: float) -> ProfileCurve:
    """Reparametrize a regular curve (rho(t), z(t)) by arclength.

    The reparametrization makes alpha'^2 + beta'^2 = 1 automatic:
    alpha' = rho'/sigma with sigma = |(rho', z')|.
    """
    t = np.linspace(0.0, t_end, FINE_GRID)
    rp, zp = np.asarray(drho(t), float), np.asarray(dz(t), float)
    sigma = np.hypot(rp, zp)
    if np.min(sigma) <= 1e-12:
        raise BadParameter("generating curve is not regular (speed vanishes)")
    s_of_t = cumulative_simpson(sigma, x=t, initial=0.0)
    l = float(s_of_t[-1])
    t_of_s = CubicHermiteSpline(s_of_t, t, 1.0 / sigma)

    def _t(q):
        return t_of_s(np.clip(q, 0.0, l))

    def alpha(q):
        return rho(_t(q))

    def dalpha(q):
        tt = _t(q)
        return np.asarray(drho(tt), float) / np.hypot(drho(tt), dz(tt))

    def d2alpha(q):
        tt = _t(q)
        rp, zp = np.asarray(drho(tt), float), np.asarray(dz(tt), float)
        rpp, zpp = np.asarray(d2rho(tt), float), np.asarray(d2z(tt), float)
        sg = np.hypot(rp, zp)
        dsg = (rp * rpp + zp * zpp) / sg
        return (rpp * sg - rp * dsg) / sg ** 3

    # alpha''' via a spline of alpha'' samples; only used for pole limits.
    sf = np.linspace(0.0, l, FINE_GRID)
    d3spline = CubicSpline(sf, d2alpha(sf)).derivative()

    def d3alpha(q):
        return d3spline(np.clip(q, 0.0, l))

    return profile_from_callables(alpha, l, dalpha, d2alpha, d3alpha)


def gauss_curvature(surface: Surface | ProfileCurve, s) -> np.ndarray:
    """Gauss curvature -alpha''/alpha, with the L'Hopital limit at poles."""
    prof = surface.profile if isinstance(surface, Surface) else surface
    s = np.asarray(s, float)
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    a = np.asarray(prof.alpha(s), float)
    pole = np.abs(a) < POLE_EPS_FACTOR * prof.l
    out = np.empty_like(a)
    if np.any(~pole):
        out[~pole] = -np.asarray(prof.d2alpha(s[~pole]), float) / a[~pole]
    if np.any(pole):
        sp = s[pole]
        out[pole] = (-np.asarray(prof.d3alpha(sp), float)
                     / np.asarray(prof.dalpha(sp), float))
    return out[0] if scalar else out


def _sphere_profile(l: float) -> ProfileCurve:
    return profile_from_callables(
        np.sin, l, dalpha=np.cos,
        d2alpha=lambda s: -np.sin(s), d3alpha=lambda s: -np.cos(s))


def _apple_profile(pinch: float) -> ProfileCurve:
    """Radial graph R(t) = 1 + pinch*sin(t)^2 over the unit sphere.

    Positive curvature at both poles with a negative-curvature band in
    between for pinch >~ 0.6; validated after construction.
    """
    p = pinch

    def rho(t):
        return np.sin(t) * (1 + p * np.sin(t) ** 2)

    def drho(t):
        return np.cos(t) + 3 * p * np.sin(t) ** 2 * np.cos(t)

    def d2rho(t):
        return -np.sin(t) + 3 * p * np.sin(t) * (2 * np.cos(t) ** 2 - np.sin(t) ** 2)

    def z(t):
        return np.cos(t) * (1 + p * np.sin(t) ** 2)

    def dz(t):
        return -np.sin(t) + p * (2 * np.sin(t) * np.cos(t) ** 2 - np.sin(t) ** 3)

    def d2z(t):
        return -np.cos(t) + p * np.cos(t) * (2 * np.cos(t) ** 2 - 7 * np.sin(t) ** 2)

    return _parametric_arclength_profile(rho, drho, d2rho, z, dz, d2z, np.pi)


def _steep_cap_profile(c: float, l: float) -> ProfileCurve:
    """Cap with alpha' = c + (1-c) cos(pi s / 2l), so alpha' in [c, 1]."""
    w = np.pi / (2 * l)

    def alpha(s):
        return c * s + (1 - c) * np.sin(w * s) / w

    def dalpha(s):
        return c + (1 - c) * np.cos(w * s)

    def d2alpha(s):
        return -(1 - c) * w * np.sin(w * s)

    def d3alpha(s):
        return -(1 - c) * w * w * np.cos(w * s)

    return profile_from_callables(alpha, l, dalpha, d2alpha, d3alpha)


def symmetrized_closed_surface(cap: Surface) -> Surface:
    """Mirror a boundary cap across its rim into a closed surface of length 2l.

    Used to reuse the closed-surface conformal chart construction for caps;
    the mirrored profile is C^0 in alpha' at s = l unless alpha'(l) = 0.
    """
    if cap.kind is not SurfaceKind.BOUNDARY_CAP:
        raise BadParameter("symmetrization expects a boundary cap")
    p = cap.profile
    l = p.l

    def fold(s):
        s = np.asarray(s, float)
        return np.minimum(s, 2 * l - s), np.where(s <= l, 1.0, -1.0)

    def alpha(s):
        q, _ = fold(s)
        return p.alpha(q)

    def dalpha(s):
        q, sg = fold(s)
        return sg * np.asarray(p.dalpha(q), float)

    def d2alpha(s):
        q, _ = fold(s)
        return p.d2alpha(q)

    def d3alpha(s):
        q, sg = fold(s)
        return sg * np.asarray(p.d3alpha(q), float)

    prof = profile_from_callables(alpha, 2 * l, dalpha, d2alpha, d3alpha)
    return Surface(profile=prof, kind=SurfaceKind.CLOSED,
                   name=f"{cap.name}_symmetrized", params=dict(cap.params))


def builtin_surface(name: str, **params) -> Surface:
    """Construct a builtin surface by name.

    Names: sphere; spherical_cap(l); apple(pinch); steep_cap(c, l);
    bulb_cap(l).  Raises BadParameter when a parameter breaks the profile
    invariants.
    """
    known = {"sphere", "spherical_cap", "apple", "steep_cap", "bulb_cap"}
    if name not in known:
        raise BadParameter(f"unknown surface {name!r}; choose from {sorted(known)}")

    if name == "sphere":
        if params:
            raise BadParameter("sphere takes no parameters")
        return Surface(_sphere_profile(np.pi), SurfaceKind.CLOSED, name="sphere")

    if name == "spherical_cap":
        l = float(params.pop("l", 1.2))
        if params:
            raise BadParameter(f"unexpected spherical_cap parameters {sorted(params)}")
        if not 0 < l < np.pi:
            raise BadParameter(f"spherical_cap needs 0 < l < pi, got {l}")
        return Surface(_sphere_profile(l), SurfaceKind.BOUNDARY_CAP,
                       name="spherical_cap", params={"l": l})

    if name == "apple":
        pinch = float(params.pop("pinch", 1.0))
        if params:
            raise BadParameter(f"unexpected apple parameters {sorted(params)}")
        if not 0 < pinch <= 4:
            raise BadParameter(f"apple needs 0 < pinch <= 4, got {pinch}")
        prof = _apple_profile(pinch)
        surf = Surface(prof, SurfaceKind.CLOSED, name="apple", params={"pinch": pinch})
        k = gauss_curvature(surf, prof.sample(2001)[1:-1])
        if not (k.min() < 0 < k.max()):
            raise BadParameter(
                f"apple pinch = {pinch} gives no curvature sign change "
                f"(K in [{k.min():.3g}, {k.max():.3g}]); use pinch >~ 0.6")
        return surf

    if name == "steep_cap":
        c = float(params.pop("c", 0.4))
        l = float(params.pop("l", 1.5))
        if params:
            raise BadParameter(f"unexpected steep_cap parameters {sorted(params)}")
        if not 0 < c <= 1:
            raise BadParameter(f"steep_cap needs 0 < c <= 1, got c = {c}")
        if l <= 0:
            raise BadParameter(f"steep_cap needs l > 0, got {l}")
        return Surface(_steep_cap_profile(c, l), SurfaceKind.BOUNDARY_CAP,
                       name="steep_cap", params={"c": c, "l": l})

    # bulb_cap: sphere profile continued past the equator so alpha' changes sign
    l = float(params.pop("l", 2.2))
    if params:
        raise BadParameter(f"unexpected bulb_cap parameters {sorted(params)}")
    if not np.pi / 2 < l < np.pi:
        raise BadParameter(f"bulb_cap needs pi/2 < l < pi, got {l}")
    return Surface(_sphere_profile(l), SurfaceKind.BOUNDARY_CAP,
                   name="bulb_cap", params={"l": l})


def surface_from_profile(profile: ProfileCurve, kind: SurfaceKind,
                         name: str = "custom") -> Surface:
    """Wrap a profile, checking the endpoint conditions of the chosen kind."""
    a_l = float(profile.alpha(profile.l))
    if kind is SurfaceKind.CLOSED:
        if abs(a_l) > 1e-8 * max(1.0, profile.l):
            raise BadParameter(f"closed surface needs alpha(l) = 0, got {a_l:.3g}")
    else:
        if a_l <= 0:
            raise BadParameter(f"boundary cap needs alpha(l) > 0, got {a_l:.3g}")
    return Surface(profile=profile, kind=kind, name=name)


def area(surface: Surface) -> float:
    """Total area 2*pi * integral of alpha."""
    s = np.linspace(0.0, surface.l, FINE_GRID)
    a = np.asarray(surface.profile.alpha(s), float)
    return float(2 * np.pi * cumulative_simpson(a, x=s, initial=0.0)[-1])


def alpha_integral(surface: Surface):
    """Cumulative integral H(s) = int_0^s alpha as a callable."""
    s = np.linspace(0.0, surface.l, FINE_GRID)
    a = np.asarray(surface.profile.alpha(s), float)
    h = cumulative_simpson(a, x=s, initial=0.0)
    spline = CubicHermiteSpline(s, h, a)

    def H(q):
        return spline(np.clip(q, 0.0, surface.l))

    return H
