"""Ginzburg-Landau heat flow on a boundary cap of revolution.

Integrates  u_t = Delta_M u + (1 - |u|^2) u / eps^2  on the (s, theta)
grid with u = e on the boundary row, tracking the energy and the weighted
(Pohozaev) dissipation ledgers and the vortex content of the field.

Spatial operator: flux-form second-order Laplace-Beltrami
    Delta u = (alpha u_s)_s / alpha + u_tt / alpha^2,
with a flux-balance pole stencil; the discrete operator is exactly
self-adjoint for the lumped node masses, so the semi-discrete flow is the
gradient flow of the discrete energy

    E_h(u) = (1/2) sum_edges w_e |u_a - u_b|^2 + sum_nodes m_n V(u_n),

and the energy identity  E(T) - E(0) = -int ||u_t||^2  holds exactly up to
time discretization.

Time integrator: Crank-Nicolson with the reaction at the arithmetic
midpoint, solved by a short fixed-point loop; the linear solve splits into
independent tridiagonal systems per theta Fourier mode because the
theta-stencil is circulant.  The scheme is unconditionally stable and its
per-step energy defect is the cubic midpoint remainder of the quartic
potential (machine-level for the step sizes used here), which is what
makes the dissipation ledgers balance to the stated tolerances.  A fully
explicit scheme is not viable on this grid: the theta cell width alpha *
dtheta collapses near the pole and drives the diffusive stability limit to
dt ~ (ds * dtheta)^2, millions of times below the physical time scale.

Step size is an accuracy (not stability) choice, dt = dt_factor * ds^2 by
default; dt must stay below the reaction-monotonicity bound 0.45 eps^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BadParameter, CFLViolated, NonFinite
from .fields import FieldState, grid_arrays, make_initial_data, plaquette_winding
from .geometry import Surface, SurfaceKind, alpha_integral
from .conformal import cap_chart

DEFAULT_M_THR = 0.5
DEFAULT_STEADY_TOL = 1e-4
DT_STABILITY = 0.45       # reaction-monotonicity bound on dt / eps^2
ENERGY_TOL_FACTOR = 1e-6  # tol_E = factor * (1 + E(0))


@dataclass
class FlowConfig:
    """Run parameters for the heat flow."""

    surface: Surface
    n_s: int = 128
    n_theta: int = 256
    vortices: Sequence[Sequence[float]] = ()
    core_radius: Optional[float] = None
    dt: Optional[float] = None
    dt_factor: float = 10.0
    t_max: float = 50.0
    checkpoint_interval: float = 0.5
    scan_interval: float = 0.05
    m_thr: float = DEFAULT_M_THR
    steady_tol: float = DEFAULT_STEADY_TOL
    epsilon: float = 1.0
    e: complex = 1.0 + 0.0j
    fixed_point_iters: int = 2
    initial_state: Optional[FieldState] = None


@dataclass
class Vortex:
    s: float
    theta: float
    degree: int
    min_modulus: float


@dataclass
class Checkpoint:
    t: float
    energy: float
    weighted_energy: float
    cum_dissipation: float
    cum_weighted_dissipation: float
    pohozaev_slack: float
    n_vortices: int
    min_modulus: float
    sup_dist_to_e: float
    residual: float
    vortices: list


@dataclass
class FlowDiagnostics:
    checkpoints: list
    events: list
    annihilation_time: Optional[float]
    status: str                   # "converged" | "timeout"
    e0: float
    tol_e: float
    scan_history: list = field(default_factory=list)


class Stepper:
    """Grid operators, quadrature weights, and the implicit time step."""

    def __init__(self, surface: Surface, n_s: int, n_theta: int, dt: float,
                 epsilon: float = 1.0, e: complex = 1.0 + 0.0j,
                 pin_boundary: bool = True):
        if dt <= 0:
            raise BadParameter("dt must be positive")
        if dt > DT_STABILITY * epsilon ** 2:
            raise CFLViolated(
                f"dt = {dt:.3g} exceeds the reaction-monotonicity bound "
                f"{DT_STABILITY} * eps^2 = {DT_STABILITY * epsilon**2:.3g}")
        self.surface = surface
        self.n_s, self.n_theta = n_s, n_theta
        self.dt, self.epsilon, self.e = float(dt), float(epsilon), complex(e)
        self.pin_boundary = pin_boundary
        prof = surface.profile
        l = surface.l
        self.ds = l / n_s
        self.dtheta = 2 * np.pi / n_theta
        self.s, self.theta = grid_arrays(l, n_s, n_theta)

        self.alpha = np.asarray(prof.alpha(self.s), float)
        self.alpha_half = np.asarray(prof.alpha(self.s[:-1] + self.ds / 2), float)
        self.H = alpha_integral(surface)
        self.h_nodes = np.asarray(self.H(self.s), float)

        # node masses: pole is a single degree of freedom
        self.m_pole = 2 * np.pi * float(self.H(self.ds / 2))
        self.m_row = self.alpha * self.ds * self.dtheta        # per node, rows 1..J-1
        self.m_bdry = self.alpha[-1] * self.ds * self.dtheta / 2
        self.c_pole = self.alpha_half[0] / (self.ds * float(self.H(self.ds / 2)))

        # s-coupling coefficients of the Laplacian at interior rows
        j = np.arange(1, n_s)
        self.a_dn = self.alpha_half[j - 1] / (self.alpha[j] * self.ds ** 2)
        self.a_up = self.alpha_half[j] / (self.alpha[j] * self.ds ** 2)
        self.t_coef = 1.0 / (self.alpha[j] * self.dtheta) ** 2
        if not pin_boundary:
            self.a_bdry = 2 * self.alpha_half[-1] / (self.alpha[-1] * self.ds ** 2)

        self._build_tridiagonal()
        self._lap_h = self.apply_laplacian(
            np.broadcast_to(self.h_nodes[:, None],
                            (n_s + 1, n_theta)).astype(complex)).real[:, 0].copy()

    # --- explicit operators ---

    def apply_laplacian(self, u: np.ndarray) -> np.ndarray:
        """Discrete Laplace-Beltrami on the full grid; boundary row not set
        in pinned mode."""
        J = self.n_s
        lap = np.zeros_like(u)
        ui = u[1:J]
        lap[1:J] = (self.a_up[:, None] * (u[2:J + 1] - ui)
                    - self.a_dn[:, None] * (ui - u[0:J - 1])
                    + self.t_coef[:, None] * (np.roll(ui, -1, axis=1) - 2 * ui
                                              + np.roll(ui, 1, axis=1)))
        lap[0] = self.c_pole * (u[1].mean() - u[0, 0])
        if not self.pin_boundary:
            lap[J] = self.a_bdry * (u[J - 1] - u[J])
        return lap

    def reaction(self, u: np.ndarray) -> np.ndarray:
        return (1.0 - np.abs(u) ** 2) * u / self.epsilon ** 2

    # --- quadrature ---

    def _v_of(self, u):
        return (1.0 - np.abs(u) ** 2) ** 2 / (4 * self.epsilon ** 2)

    def energy(self, u: np.ndarray, weight: Optional[np.ndarray] = None) -> float:
        """Discrete energy; with weight (node values), the weighted energy
        using arithmetic edge means."""
        J = self.n_s
        ws = self.alpha_half * self.dtheta / self.ds
        wt = self.ds / (self.alpha[1:J] * self.dtheta)
        ds2 = np.abs(u[1:] - u[:-1]) ** 2            # (J, K) s-edges
        dt2 = np.abs(np.roll(u[1:J], -1, axis=1) - u[1:J]) ** 2
        v = self._v_of(u)
        if weight is None:
            grad = 0.5 * np.dot(ws, ds2.sum(axis=1)) \
                + 0.5 * np.dot(wt, dt2.sum(axis=1))
            pot = (self.m_pole * v[0, 0]
                   + np.dot(self.m_row[1:J], v[1:J].sum(axis=1))
                   + self.m_bdry * v[J].sum())
            return float(grad + pot)
        hs = 0.5 * (weight[:-1] + weight[1:])
        grad = 0.5 * np.dot(ws * hs, ds2.sum(axis=1)) \
            + 0.5 * np.dot(wt * weight[1:J], dt2.sum(axis=1))
        pot = (self.m_pole * weight[0] * v[0, 0]
               + np.dot(self.m_row[1:J] * weight[1:J], v[1:J].sum(axis=1))
               + self.m_bdry * weight[J] * v[J].sum())
        return float(grad + pot)

    def weighted_energy(self, u: np.ndarray) -> float:
        return self.energy(u, weight=self.h_nodes)

    def mass_norm2(self, w: np.ndarray, row_weight: Optional[np.ndarray] = None) -> float:
        """sum_n m_n |w_n|^2 over flow degrees of freedom (pole + interior)."""
        J = self.n_s
        rw = np.ones(J + 1) if row_weight is None else row_weight
        total = self.m_pole * rw[0] * np.abs(w[0, 0]) ** 2
        total += np.dot(self.m_row[1:J] * rw[1:J], (np.abs(w[1:J]) ** 2).sum(axis=1))
        if not self.pin_boundary:
            total += self.m_bdry * rw[J] * (np.abs(w[J]) ** 2).sum()
        return float(total)

    def v_ledger_increment(self, u_mid: np.ndarray) -> float:
        """sum_n m_n (Delta_h Htilde)_n V(u_mid_n); summation-by-parts form
        of the weighted potential term of the dissipation ledger."""
        J = self.n_s
        v = self._v_of(u_mid)
        total = self.m_pole * self._lap_h[0] * v[0, 0]
        total += np.dot(self.m_row[1:J] * self._lap_h[1:J], v[1:J].sum(axis=1))
        return float(total)

    # --- implicit machinery ---

    def _build_tridiagonal(self):
        J, K = self.n_s, self.n_theta
        eta = 0.5 * self.dt
        lam = (2.0 - 2.0 * np.cos(2 * np.pi * np.arange(K) / K)) / self.dtheta ** 2
        rows = J if self.pin_boundary else J + 1

        diag = np.ones((rows, K))
        lower = np.zeros((rows, K))
        upper = np.zeros((rows, K))

        # pole row: couples to the theta-mean of ring 1, i.e. mode 0 only
        diag[0, 0] = 1.0 + eta * self.c_pole
        upper[0, 0] = -eta * self.c_pole

        diag[1:J] = 1.0 + eta * (self.a_dn + self.a_up)[:, None] \
            + eta * self.t_coef[:, None] * lam[None, :]
        lower[1:J] = -eta * self.a_dn[:, None]
        lower[1, 1:] = 0.0            # no pole coupling for m != 0
        upper[1:J - 1] = -eta * self.a_up[:J - 2, None]
        if self.pin_boundary:
            # coupling of row J-1 to the pinned boundary row moves to the rhs
            self._bdry_rhs = eta * self.a_up[-1] * self.e * K
        else:
            upper[J - 1] = -eta * self.a_up[-1]
            diag[J] = 1.0 + eta * self.a_bdry
            lower[J] = -eta * self.a_bdry

        # Thomas factorization (matrices are constant per stepper)
        inv_den = np.empty_like(diag)
        cp = np.empty_like(diag)
        inv_den[0] = 1.0 / diag[0]
        cp[0] = upper[0] * inv_den[0]
        for j in range(1, rows):
            inv_den[j] = 1.0 / (diag[j] - lower[j] * cp[j - 1])
            cp[j] = upper[j] * inv_den[j]
        self._lower, self._cp, self._inv_den = lower, cp, inv_den
        self._rows = rows

    def _thomas(self, rhs: np.ndarray) -> np.ndarray:
        rows = self._rows
        dp = np.empty_like(rhs)
        dp[0] = rhs[0] * self._inv_den[0]
        for j in range(1, rows):
            dp[j] = (rhs[j] - self._lower[j] * dp[j - 1]) * self._inv_den[j]
        for j in range(rows - 2, -1, -1):
            dp[j] -= self._cp[j] * dp[j + 1]
        return dp

    def step(self, u: np.ndarray, n_iters: Optional[int] = None):
        """One Crank-Nicolson midpoint step.

        Returns (u_new, udot, u_mid); udot = (u_new - u)/dt is the stage
        derivative the dissipation ledgers integrate.
        """
        J, K = self.n_s, self.n_theta
        dt, eta = self.dt, 0.5 * self.dt
        iters = 2 if n_iters is None else n_iters
        rows = self._rows
        lap = self.apply_laplacian(u)
        rhs_lin = u[:rows] + eta * lap[:rows]
        w = u.copy()
        for _ in range(iters):
            mid = 0.5 * (u + w)
            rhs = rhs_lin + dt * self.reaction(mid[:rows])
            rhs_hat = np.fft.fft(rhs, axis=1)
            rhs_hat[0, 1:] = 0.0
            if self.pin_boundary:
                rhs_hat[J - 1, 0] += self._bdry_rhs
            x = np.fft.ifft(self._thomas(rhs_hat), axis=1)
            w = u.copy()
            w[:rows] = x
            w[0, :] = x[0].mean()
            if self.pin_boundary:
                w[J, :] = self.e
        udot = (w - u) / dt
        if self.pin_boundary:
            udot[J, :] = 0.0
        return w, udot, 0.5 * (u + w)

    def residual(self, u: np.ndarray) -> float:
        """Sup norm of the steady-state defect Delta u + (1-|u|^2)u/eps^2."""
        rows = self._rows
        r = self.apply_laplacian(u)[:rows] + self.reaction(u[:rows])
        return float(np.max(np.abs(r)))


# --- module-level operations on FieldStates ---

def _stepper_for(state: FieldState, dt: float, pin_boundary: bool = True) -> Stepper:
    if state.surface is None:
        raise BadParameter("FieldState carries no surface")
    return Stepper(state.surface, state.n_s, state.n_theta, dt,
                   epsilon=state.epsilon, e=state.e, pin_boundary=pin_boundary)


def laplace_beltrami(state: FieldState) -> np.ndarray:
    """Discrete Laplace-Beltrami field of the state (boundary row zero)."""
    stepper = _stepper_for(state, dt=1e-3)
    return stepper.apply_laplacian(state.values)


def step(state: FieldState, dt: float, pin_boundary: bool = True) -> FieldState:
    """Advance one time step; raises CFLViolated/NonFinite per contract."""
    stepper = _stepper_for(state, dt, pin_boundary=pin_boundary)
    u_new, _, _ = stepper.step(state.values)
    if not np.all(np.isfinite(u_new.view(float))):
        raise NonFinite(f"non-finite node after step at t = {state.time}")
    return state.with_values(u_new, state.time + dt)


def energy(state: FieldState) -> float:
    """Discrete Ginzburg-Landau energy of the state."""
    return _stepper_for(state, dt=1e-3).energy(state.values)


def steady_state_residual(state: FieldState) -> float:
    return _stepper_for(state, dt=1e-3).residual(state.values)


def h_weight(surface: Surface, s) -> tuple[np.ndarray, np.ndarray]:
    """(Htilde, Delta Htilde) at arclengths s: the monotone weight
    H(s) = int_0^s alpha and its analytic Laplacian 2 alpha'(s)."""
    H = alpha_integral(surface)
    s = np.asarray(s, float)
    return np.asarray(H(s), float), 2.0 * np.asarray(surface.profile.dalpha(s), float)


def detect_vortices(state: FieldState, m_thr: float = DEFAULT_M_THR) -> list:
    """Vortices as merged clusters of low-modulus winding plaquettes.

    Flags plaquettes whose nodal modulus dips below m_thr and whose phase
    winding is nonzero, merges edge-adjacent flags (theta wraps), and
    reports each cluster's summed degree and (1 - |u|)-weighted centroid.
    Clusters whose degrees cancel exactly are annihilation transients, not
    vortices, and are dropped.
    """
    u = state.values
    wind = plaquette_winding(u)
    mod = np.abs(u)
    corner_min = np.minimum(
        np.minimum(mod[:-1, :], np.roll(mod[:-1, :], -1, axis=1)),
        np.minimum(mod[1:, :], np.roll(mod[1:, :], -1, axis=1)))
    flagged = (wind != 0) & (corner_min < m_thr)
    if not flagged.any():
        return []
    n_s, n_theta = flagged.shape
    labels = -np.ones(flagged.shape, int)
    clusters = []
    for j0, k0 in np.argwhere(flagged):
        if labels[j0, k0] >= 0:
            continue
        idx = len(clusters)
        stack = [(j0, k0)]
        labels[j0, k0] = idx
        members = []
        while stack:
            j, k = stack.pop()
            members.append((j, k))
            for dj, dk in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                jj, kk = j + dj, (k + dk) % n_theta
                if 0 <= jj < n_s and flagged[jj, kk] and labels[jj, kk] < 0:
                    labels[jj, kk] = idx
                    stack.append((jj, kk))
        clusters.append(members)

    s_mid = 0.5 * (state.s[:-1] + state.s[1:])
    t_mid = state.theta + 0.5 * (state.theta[1] - state.theta[0])
    out = []
    for members in clusters:
        deg = int(sum(wind[j, k] for j, k in members))
        if deg == 0:
            continue
        wts = np.array([1.0 - corner_min[j, k] for j, k in members])
        ss = np.array([s_mid[j] for j, _ in members])
        tt = np.array([t_mid[k] for _, k in members])
        wsum = wts.sum()
        sc = float(np.dot(wts, ss) / wsum)
        tc = float(np.arctan2(np.dot(wts, np.sin(tt)),
                              np.dot(wts, np.cos(tt))) % (2 * np.pi))
        mm = float(min(corner_min[j, k] for j, k in members))
        out.append(Vortex(s=sc, theta=tc, degree=deg, min_modulus=mm))
    out.sort(key=lambda v: (v.s, v.theta))
    return out


def pohozaev_ledger(diagnostics: FlowDiagnostics) -> list:
    """Per-checkpoint report rows of the weighted dissipation inequality.

    LHS = cumulative (weighted dissipation + potential term) + weighted
    energy now; RHS = initial weighted energy.  slack = RHS - LHS must stay
    above -tol_E; it approximates the boundary-flux term the continuous
    inequality discards, which is nonnegative.
    """
    if not diagnostics.checkpoints:
        return []
    w0 = diagnostics.checkpoints[0].weighted_energy
    rows = []
    for cp in diagnostics.checkpoints:
        lhs = cp.cum_weighted_dissipation + cp.weighted_energy
        rows.append({"t": cp.t, "lhs": lhs, "rhs": w0, "slack": w0 - lhs})
    return rows


def _match_events(prev: list, curr: list, t: float, surface: Surface,
                  events: list, match_radius: float) -> None:
    """Diff two vortex lists into appearance/annihilation/boundary events."""

    def chord(a: Vortex, b: Vortex) -> float:
        pa = surface.embed(a.s, a.theta)
        pb = surface.embed(b.s, b.theta)
        return float(np.linalg.norm(pa - pb))

    unmatched_prev = list(prev)
    unmatched_curr = list(curr)
    pairs = sorted(((chord(a, b), i, j) for i, a in enumerate(prev)
                    for j, b in enumerate(curr)), key=lambda x: x[0])
    used_p, used_c = set(), set()
    for d, i, j in pairs:
        if d > match_radius or i in used_p or j in used_c:
            continue
        if prev[i].degree == curr[j].degree:
            used_p.add(i)
            used_c.add(j)
    unmatched_prev = [v for i, v in enumerate(prev) if i not in used_p]
    unmatched_curr = [v for j, v in enumerate(curr) if j not in used_c]

    for v in unmatched_curr:
        events.append({"t": t, "kind": "appear", "s": v.s, "theta": v.theta,
                       "degree": v.degree})
    if unmatched_prev:
        net = sum(v.degree for v in unmatched_prev)
        l = surface.l
        sc = float(np.mean([v.s for v in unmatched_prev]))
        tc = float(np.arctan2(np.mean([np.sin(v.theta) for v in unmatched_prev]),
                              np.mean([np.cos(v.theta) for v in unmatched_prev]))
                   % (2 * np.pi))
        if net == 0 and len(unmatched_prev) >= 2:
            kind = "annihilation"
        elif min(l - v.s for v in unmatched_prev) < 0.15 * l:
            kind = "boundary"
        else:
            kind = "merge"
        events.append({"t": t, "kind": kind, "s": sc, "theta": tc, "degree": net})


def run(config: FlowConfig):
    """Integrate the flow; returns (FlowDiagnostics, final FieldState).

    Terminates at t_max (status "timeout") or when the field is vortex-free
    with sup|u - e| and the elliptic residual below steady_tol (status
    "converged").  The vortex list is rescanned every scan_interval;
    annihilation_time is the first scan time at which it becomes and stays
    empty.
    """
    surface = config.surface
    if surface.kind is not SurfaceKind.BOUNDARY_CAP:
        raise BadParameter("the heat flow runs on boundary caps")
    if config.initial_state is not None:
        state0 = config.initial_state
    else:
        chart = cap_chart(surface, n_phi=1024)
        state0 = make_initial_data(surface, chart, config.vortices,
                                   core_radius=config.core_radius,
                                   n_s=config.n_s, n_theta=config.n_theta,
                                   epsilon=config.epsilon, e=config.e)
    n_s, n_theta = state0.n_s, state0.n_theta
    ds = surface.l / n_s
    dt = config.dt if config.dt is not None else min(
        config.dt_factor * ds * ds, DT_STABILITY * config.epsilon ** 2 / 2,
        config.scan_interval)
    stepper = Stepper(surface, n_s, n_theta, dt, epsilon=config.epsilon,
                      e=config.e)

    n_scan = max(1, round(config.scan_interval / dt))
    scans_per_cp = max(1, round(config.checkpoint_interval / (n_scan * dt)))

    u = state0.values.copy()
    e0 = stepper.energy(u)
    tol_e = ENERGY_TOL_FACTOR * (1.0 + e0)
    w0 = stepper.weighted_energy(u)
    cum_diss = 0.0
    cum_wdiss = 0.0

    events: list = []
    scan_history: list = []
    checkpoints: list = []
    match_radius = max(0.15 * surface.l, 8 * ds)

    vortices = detect_vortices(state0, config.m_thr)
    for v in vortices:
        events.append({"t": 0.0, "kind": "appear", "s": v.s, "theta": v.theta,
                       "degree": v.degree})
    scan_history.append((0.0, len(vortices)))

    def checkpoint(t, u, nv, vlist):
        mod = np.abs(u)
        return Checkpoint(
            t=t, energy=stepper.energy(u),
            weighted_energy=stepper.weighted_energy(u),
            cum_dissipation=cum_diss, cum_weighted_dissipation=cum_wdiss,
            pohozaev_slack=w0 - (cum_wdiss + stepper.weighted_energy(u)),
            n_vortices=nv, min_modulus=float(mod.min()),
            sup_dist_to_e=float(np.max(np.abs(u - stepper.e))),
            residual=stepper.residual(u), vortices=list(vlist))

    def is_converged(u, vlist):
        if vlist:
            return False
        if np.max(np.abs(u - stepper.e)) >= config.steady_tol:
            return False
        return stepper.residual(u) < config.steady_tol

    checkpoints.append(checkpoint(0.0, u, len(vortices), vortices))
    status = "timeout"
    t = 0.0
    if is_converged(u, vortices):
        status = "converged"
    else:
        n_steps_total = max(1, math.ceil(config.t_max / dt - 1e-9))
        step_count = 0
        scan_count = 0
        prev_vortices = vortices
        while step_count < n_steps_total:
            block = min(n_scan, n_steps_total - step_count)
            for _ in range(block):
                u_new, udot, u_mid = stepper.step(u)
                cum_diss += dt * stepper.mass_norm2(udot)
                cum_wdiss += dt * (stepper.mass_norm2(udot, stepper.h_nodes)
                                   + stepper.v_ledger_increment(u_mid))
                u = u_new
                step_count += 1
            t = step_count * dt
            if not np.all(np.isfinite(u.view(float))):
                raise NonFinite(f"non-finite node at t = {t:.4g}")
            scan_count += 1
            state_now = state0.with_values(u, t)
            vortices = detect_vortices(state_now, config.m_thr)
            _match_events(prev_vortices, vortices, t, surface, events, match_radius)
            prev_vortices = vortices
            scan_history.append((t, len(vortices)))
            if scan_count % scans_per_cp == 0:
                checkpoints.append(checkpoint(t, u, len(vortices), vortices))
            if is_converged(u, vortices):
                status = "converged"
                break
        if checkpoints[-1].t < t:
            checkpoints.append(checkpoint(t, u, len(vortices), vortices))

    annihilation_time: Optional[float] = None
    if scan_history and scan_history[-1][1] == 0:
        annihilation_time = 0.0
        for tk, nk in reversed(scan_history):
            if nk > 0:
                break
            annihilation_time = tk
    diag = FlowDiagnostics(checkpoints=checkpoints, events=events,
                           annihilation_time=annihilation_time, status=status,
                           e0=e0, tol_e=tol_e, scan_history=scan_history)
    return diag, state0.with_values(u, t)
