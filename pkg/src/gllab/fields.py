"""Discrete order-parameter fields on the (s, theta) grid.

The grid has rows s_j = j*l/n_s for j = 0..n_s and periodic columns
theta_k = 2*pi*k/n_theta.  Row 0 is the pole (all columns share one value)
and row n_s is the boundary circle for cap surfaces.  Fields are complex
arrays of shape (n_s + 1, n_theta); states are immutable snapshots.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (AtVortexCenter, BadParameter, ConfigurationInvalid,
                     DegreesDoNotCancel, VortexTooCloseToBoundary, ZeroOnLoop)
from .geometry import Surface
from .renorm import VortexConfiguration

# Boundary collar width, as a fraction of l, over which initial data is
# blended to the constant e.
BLEND_FRACTION = 0.1


@dataclass(frozen=True)
class FieldState:
    """Complex order parameter sampled on the (s, theta) grid."""

    values: np.ndarray
    s: np.ndarray
    theta: np.ndarray
    time: float
    epsilon: float = 1.0
    e: complex = 1.0 + 0.0j
    surface: Optional[Surface] = None

    def __post_init__(self):
        v = np.asarray(self.values, complex)
        if v.ndim != 2 or v.shape != (len(self.s), len(self.theta)):
            raise BadParameter("values must have shape (len(s), len(theta))")
        object.__setattr__(self, "values", v)

    @property
    def n_s(self) -> int:
        return len(self.s) - 1

    @property
    def n_theta(self) -> int:
        return len(self.theta)

    def with_values(self, values: np.ndarray, time: float) -> "FieldState":
        return replace(self, values=values, time=time)


def grid_arrays(l: float, n_s: int, n_theta: int) -> tuple[np.ndarray, np.ndarray]:
    s = np.linspace(0.0, l, n_s + 1)
    theta = np.arange(n_theta) * (2 * np.pi / n_theta)
    return s, theta


def canonical_phase(config: VortexConfiguration, x) -> complex:
    """Unit complex prod_i ((x - b_i)/|x - b_i|)^{d_i}; the harmonic phase
    is taken to be zero."""
    z = complex(x[0], x[1])
    out = 1.0 + 0.0j
    for b, d in zip(config.points, config.degrees):
        rel = z - complex(b[0], b[1])
        if abs(rel) < 1e-300:
            raise AtVortexCenter(f"phase undefined at vortex {b}")
        out *= (rel / abs(rel)) ** int(d)
    return out


def _phase_on_grid(config: VortexConfiguration, z: np.ndarray) -> np.ndarray:
    """Vectorized canonical phase at complex points z (NaN/inf rows allowed)."""
    out = np.ones_like(z)
    for b, d in zip(config.points, config.degrees):
        rel = z - complex(b[0], b[1])
        out *= (rel / np.abs(rel)) ** int(d)
    return out


def make_initial_data(surface: Surface, chart, vortices: Sequence[Sequence[float]],
                      core_radius: Optional[float] = None,
                      n_s: int = 128, n_theta: int = 256,
                      epsilon: float = 1.0, e: complex = 1.0 + 0.0j) -> FieldState:
    """Vortex initial data u_0 on a boundary cap.

    vortices is a sequence of (s, theta, degree) surface points; their
    planar chart images drive the canonical phase, and the modulus is a
    product of tanh(dist/core_radius) core profiles, with chordal distance
    in R^3 standing in for geodesic distance (they agree to second order at
    short range, and tanh saturates beyond a few cores).  A quintic cutoff
    blends u_0 to the constant e over the collar s in [l(1 - 0.1), l], so
    u_0 = e on the boundary exactly.
    """
    l = surface.l
    if core_radius is None:
        core_radius = epsilon * min(1.0, l / 10.0)
    vort = [(float(s0), float(t0), int(d0)) for s0, t0, d0 in vortices]
    if vort and sum(d for _, _, d in vort) != 0:
        raise DegreesDoNotCancel(
            f"total degree {sum(d for _, _, d in vort)} != 0")
    standoff = max(3.0 * core_radius, BLEND_FRACTION * l)
    for s0, _, _ in vort:
        if l - s0 <= standoff:
            raise VortexTooCloseToBoundary(
                f"vortex at s = {s0:.3g} is within {standoff:.3g} of s = l "
                "(3 core radii or the blend collar)")
        if not 0 < s0 < l:
            raise BadParameter(f"vortex arclength {s0} outside (0, l)")

    s, theta = grid_arrays(l, n_s, n_theta)
    values = np.full((n_s + 1, n_theta), complex(e))
    modulus = np.ones((n_s + 1, n_theta))
    phase = np.ones((n_s + 1, n_theta), complex)

    if vort:
        centers3 = np.stack([surface.embed(s0, t0) for s0, t0, _ in vort])
        if len(vort) > 1:
            d3 = centers3[:, None, :] - centers3[None, :, :]
            chord = np.sqrt(np.einsum("ijk,ijk->ij", d3, d3))
            np.fill_diagonal(chord, np.inf)
            if chord.min() <= 3.0 * core_radius:
                raise ConfigurationInvalid(
                    f"vortices separated by {chord.min():.3g} <= 3 core radii")
        config = VortexConfiguration(
            points=np.array([chart.coords(s0, t0) for s0, t0, _ in vort]),
            degrees=np.array([d for _, _, d in vort]))

        # planar grid, pole row excluded (it sits at infinity in the chart)
        r = chart.radius_of(s[1:])
        z = r[:, None] * np.exp(1j * theta)[None, :]
        phase[1:] = _phase_on_grid(config, z)
        phase[0] = 1.0  # degrees cancel, so the phase tends to 1 at infinity

        grid3 = surface.embed(s[:, None], theta[None, :])
        for p3 in centers3:
            dist = np.sqrt(np.sum((grid3 - p3) ** 2, axis=-1))
            modulus *= np.tanh(dist / core_radius)
        values = modulus * phase * complex(e)

    # Blend to the constant e over the boundary collar with a quintic cutoff.
    # Modulus and phase are blended separately: the collar loop carries zero
    # winding (vortices keep clear of it), so the phase has a continuous
    # branch there and scaling it to zero cannot create spurious zeros of u,
    # which a straight-line blend does whenever the collar phase opposes e.
    delta = BLEND_FRACTION * l
    t = np.clip((s - (l - delta)) / delta, 0.0, 1.0)
    chi = t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)
    collar = np.flatnonzero(chi > 0)
    if vort and collar.size:
        psi = np.unwrap(np.angle(phase[collar]), axis=1)
        for row in range(1, len(collar)):
            shift = np.round((psi[row - 1, 0] - psi[row, 0]) / (2 * np.pi))
            psi[row] += 2 * np.pi * shift
        cr = chi[collar][:, None]
        blended_mod = (1.0 - cr) * modulus[collar] + cr
        values[collar] = blended_mod * np.exp(1j * (1.0 - cr) * psi) * complex(e)
    values[-1, :] = complex(e)
    values[0, :] = values[0, 0]

    return FieldState(values=values, s=s, theta=theta, time=0.0,
                      epsilon=epsilon, e=complex(e), surface=surface)


def total_degree(state: FieldState, row: Optional[int] = None) -> int:
    """Winding number of u along a grid row inside the boundary collar.

    Principal-branch phase increments are accumulated along the loop
    oriented as the boundary of the vortex-carrying region (decreasing
    theta in chart orientation), giving the total enclosed degree exactly.
    """
    if row is None:
        l = state.s[-1]
        row = int(np.argmin(np.abs(state.s - (l - 0.05 * l))))
    u = state.values[row]
    if np.min(np.abs(u)) < 1e-12:
        raise ZeroOnLoop(f"|u| vanishes on measurement row {row}")
    inc = np.angle(np.roll(u, -1) / u)
    return -int(np.rint(np.sum(inc) / (2 * np.pi)))


def plaquette_winding(values: np.ndarray) -> np.ndarray:
    """Integer winding per grid plaquette, shape (n_s, n_theta).

    Plaquette (j, k) has corners at rows j, j+1 and columns k, k+1 (theta
    wraps); the traversal is oriented so a vortex of degree d contributes
    +d.  Entries are exact integers whenever no corner vanishes.
    """
    u = values
    z1 = u[:-1, :]
    z2 = np.roll(u[:-1, :], -1, axis=1)
    z3 = np.roll(u[1:, :], -1, axis=1)
    z4 = u[1:, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (np.angle(z2 / z1) + np.angle(z3 / z2)
             + np.angle(z4 / z3) + np.angle(z1 / z4))
    w = np.where(np.isfinite(w), w, 0.0)  # exact-zero corners (pole vortex)
    return np.rint(w / (2 * np.pi)).astype(int)


def jacobian_field(state: FieldState) -> np.ndarray:
    """Discrete Jacobian (curl of the supercurrent) per plaquette.

    Edge currents Im(conj(u_a) u_b) are antisymmetric, so patch sums
    telescope to the boundary circulation: over any region whose boundary
    has |u| near 1 the sum approximates 2*pi times the enclosed degree.
    """
    u = state.values
    z1 = u[:-1, :]
    z2 = np.roll(u[:-1, :], -1, axis=1)
    z3 = np.roll(u[1:, :], -1, axis=1)
    z4 = u[1:, :]
    return (np.imag(np.conj(z1) * z2) + np.imag(np.conj(z2) * z3)
            + np.imag(np.conj(z3) * z4) + np.imag(np.conj(z4) * z1))


# --- serialization ---

_HEADER = struct.Struct("<qqdd")  # n_s, n_theta, time, epsilon


def save_field_binary(state: FieldState, path) -> None:
    """Little-endian block: header (int64 n_s, int64 n_theta, float64 time,
    float64 epsilon) then row-major (n_s + 1) x n_theta complex pairs."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(state.n_s, state.n_theta, state.time, state.epsilon))
        fh.write(np.ascontiguousarray(state.values, dtype="<c16").tobytes())


def load_field_binary(path, surface: Optional[Surface] = None) -> FieldState:
    with open(path, "rb") as fh:
        n_s, n_theta, time, epsilon = _HEADER.unpack(fh.read(_HEADER.size))
        raw = np.frombuffer(fh.read(), dtype="<c16")
    if raw.size != (n_s + 1) * n_theta:
        raise BadParameter(f"field file {path} has {raw.size} values, "
                           f"expected {(n_s + 1) * n_theta}")
    values = raw.reshape(n_s + 1, n_theta).astype(complex)
    if surface is not None:
        l = surface.l
    else:
        l = 1.0
    s, theta = grid_arrays(l, int(n_s), int(n_theta))
    return FieldState(values=values, s=s, theta=theta, time=float(time),
                      epsilon=float(epsilon), surface=surface)


def save_field_csv(state: FieldState, path) -> None:
    """Rows of s, theta, Re u, Im u."""
    with open(path, "w") as fh:
        fh.write("s,theta,re_u,im_u\n")
        for j, sj in enumerate(state.s):
            for k, tk in enumerate(state.theta):
                v = state.values[j, k]
                fh.write(f"{sj:.17g},{tk:.17g},{v.real:.17g},{v.imag:.17g}\n")
