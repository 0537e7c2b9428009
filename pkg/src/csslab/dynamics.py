"""Strang-split time evolution, trajectory diagnostics and end-state classification.

One step of size dt is

    u <- exp(-i V dt/2) u ;  u <- exp(i dt Delta_m) u ;  u <- exp(-i V dt/2) u

The phase substeps are exact because V is real and depends on u only
through |u|, which they leave unchanged.  The free substep is exact in the
Hankel basis.  Both preserve the transform's discrete L^2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gauge, observables
from .discretization import plan_for, smooth_step
from .errors import GridMismatch, IntegrationDiverged, InvalidArgument, NonuniformSampling

DISPERSING = "dispersing"
BLOWUP = "blowup"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class EvolveOptions:
    """Time-stepping and classification settings.

    ``sample_every`` is the number of steps between diagnostic samples.
    The classifier thresholds (decay factor, growth factor, concentration
    cells, final window) are conventions, not derived quantities.
    """

    dt: float = 1e-3
    t_final: float = 1.0
    sample_every: int = 10
    disperse_factor: float = 4.0
    blowup_factor: float = 10.0
    blowup_cells: int = 8
    window: float = 1.0 / 3.0
    free_only: bool = False
    freeze_gauge: bool = False
    absorb: bool = False
    absorb_width: float = 0.1
    absorb_rate: float = 5.0
    moment_cap: float | None = None
    stop_on_blowup: bool = True
    stop_on_disperse: bool = False
    keep_states: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgument(f"dt must be positive, got {self.dt}")
        if not self.t_final > 0:
            raise InvalidArgument(f"t_final must be positive, got {self.t_final}")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise InvalidArgument("sample_every must be a positive integer")

    @property
    def steps(self):
        return int(round(self.t_final / self.dt))


@dataclass
class Trajectory:
    states: list
    records: list
    dt: float
    events: list = field(default_factory=list)

    @property
    def times(self):
        return np.array([rec.t for rec in self.records])

    def series(self, name):
        return np.array([getattr(rec, name) for rec in self.records])


def _plan(state, plan):
    if plan is None:
        plan = plan_for(state.grid)
    if plan is None or plan.m != abs(state.m) or not plan.grid.compatible(state.grid):
        raise GridMismatch("time stepping needs a bessel-zero grid of order |m|")
    return plan


def _rotate(state, potential, tau):
    return state.replace(u=np.exp(-1j * potential * tau) * state.u)


def step_strang(state, dt, plan=None, potential=None):
    """One Strang step; returns the new state.

    ``potential`` may carry V(|u|) from the previous step to skip one gauge
    solve (it is unchanged by the trailing phase rotation).
    """
    plan = _plan(state, plan)
    if potential is None:
        potential = gauge.potential(state)
    half = _rotate(state, potential, 0.5 * dt)
    moved = state.replace(u=plan.propagator(dt) @ half.u, t=state.t + dt)
    out = _rotate(moved, gauge.potential(moved), 0.5 * dt)
    if not np.all(np.isfinite(out.u)):
        raise IntegrationDiverged(f"non-finite values at t = {out.t:.6g}")
    return out


def _absorber(grid, opts, dt):
    # smooth damping on the outer band of the grid
    r = grid.nodes / grid.rmax
    start = 1.0 - opts.absorb_width
    ramp = 1.0 - smooth_step(1.0 + np.clip((r - start) / opts.absorb_width, 0.0, 1.0))
    return np.exp(-opts.absorb_rate * ramp * dt)


def concentrated(state, cells):
    """True when at least half the charge sits within ``cells`` node spacings of the origin."""
    grid = state.grid
    radius = cells * grid.spacing
    dens = state.density * grid.weights
    total = dens.sum()
    return total > 0 and dens[grid.nodes <= radius].sum() >= 0.5 * total


def evolve(state, opts, plan=None, callback=None):
    """Integrate to ``opts.t_final`` recording diagnostics every ``sample_every`` steps.

    Stops early (recording a ``blowup`` event) when the amplitude has grown by
    ``blowup_factor`` and half the charge is within ``blowup_cells`` cells of
    the origin.  Non-finite values raise IntegrationDiverged carrying the
    partial trajectory.
    """
    plan = _plan(state, plan)
    dt = opts.dt
    prop = plan.propagator(dt)
    damp = _absorber(state.grid, opts, dt) if opts.absorb else None
    traj = Trajectory(states=[], records=[], dt=dt)

    def record(s):
        traj.records.append(observables.diagnostics(s, cap=opts.moment_cap))
        if opts.keep_states:
            traj.states.append(s)
        if callback is not None:
            callback(s, traj.records[-1])

    def pot(s):
        if opts.free_only:
            return np.zeros(s.grid.n)
        return gauge.potential(s)

    record(state)
    peak0 = observables.max_abs(state)
    peak = peak0
    v = pot(state)
    frozen = opts.freeze_gauge
    u = state.u
    t0 = state.t
    for k in range(1, opts.steps + 1):
        u = np.exp(-0.5j * dt * v) * u
        u = prop @ u
        if damp is not None:
            u = damp * u
        cur = state.replace(u=u, t=t0 + k * dt)
        if not frozen:
            v = pot(cur)
        u = np.exp(-0.5j * dt * v) * u
        if k % opts.sample_every == 0 or k == opts.steps:
            cur = state.replace(u=u, t=t0 + k * dt)
            if not np.all(np.isfinite(u)):
                traj.events.append((cur.t, "diverged"))
                err = IntegrationDiverged(f"non-finite values at t = {cur.t:.6g}")
                err.trajectory = traj
                raise err
            record(cur)
            amp = traj.records[-1].max_abs_u
            peak = max(peak, amp)
            if amp >= opts.blowup_factor * peak0 and concentrated(cur, opts.blowup_cells):
                traj.events.append((cur.t, BLOWUP))
                if opts.stop_on_blowup:
                    break
            if opts.stop_on_disperse and amp * opts.disperse_factor <= peak \
                    and _dispersal_window_ok(traj, opts):
                traj.events.append((cur.t, DISPERSING))
                break
    return traj


def _dispersal_window_ok(traj, opts):
    # int |phi|^4 dt accumulates at rate l4x; require that rate to fall
    # across the final window of the run
    times = traj.times
    l4 = traj.series("l4x")
    start = times[0] + (1 - opts.window) * (times[-1] - times[0])
    tail = l4[times >= start]
    return len(tail) >= 2 and tail[-1] < tail[0]


def _uniform_spacing(times, minimum=5):
    if len(times) < minimum:
        raise NonuniformSampling(f"need at least {minimum} samples, got {len(times)}")
    gaps = np.diff(times)
    if np.max(np.abs(gaps - gaps[0])) > 1e-9 * max(1.0, abs(gaps[0])):
        raise NonuniformSampling("samples are not uniformly spaced")
    return gaps[0]


def check_virial(traj):
    """Second difference of v2 minus 8E at each interior sample.

    Returns (times, residual, eight_energy).
    """
    times = traj.times
    h = _uniform_spacing(times)
    v2 = traj.series("v2")
    energy = traj.series("energy_direct")
    second = (v2[2:] - 2 * v2[1:-1] + v2[:-2]) / h ** 2
    return times[1:-1], second - 8 * energy[1:-1], 8 * energy[1:-1]


def check_morawetz(traj, allow_m0=False):
    """Second difference of v1 minus the Morawetz right side at interior samples.

    Returns (times, residual, rhs).  The right side involves |u|^2 / r^2 with
    no r weight, which diverges logarithmically near the origin for m = 0, so
    m = 0 trajectories are rejected unless ``allow_m0``.
    """
    times = traj.times
    h = _uniform_spacing(times)
    if not traj.states or len(traj.states) != len(traj.records):
        raise InvalidArgument("Morawetz check needs the state snapshots of every sample")
    if traj.states[0].m == 0 and not allow_m0:
        raise InvalidArgument("Morawetz density is not integrable for m = 0")
    v1 = traj.series("v1")
    rhs = np.array([observables.morawetz_rhs(s) for s in traj.states[1:-1]])
    second = (v1[2:] - 2 * v1[1:-1] + v1[:-2]) / h ** 2
    return times[1:-1], second - rhs, rhs


def _cutoff(r, radius):
    """chi(r / R) and its first three r-derivatives, by exact differentiation."""
    x = np.asarray(r) / radius

    # chi = a / (a + b) with a = f(2 - x), b = f(x - 1), f(t) = exp(-1/t)
    def fd(t, k):
        out = np.zeros_like(t)
        pos = t > 0
        tp = t[pos]
        e = np.exp(-1.0 / tp)
        if k == 0:
            out[pos] = e
        elif k == 1:
            out[pos] = e / tp ** 2
        elif k == 2:
            out[pos] = e * (1 - 2 * tp) / tp ** 4
        else:
            out[pos] = e * (6 * tp ** 2 - 6 * tp + 1) / tp ** 6
        return out

    a = [fd(2 - x, k) * (-1) ** k for k in range(4)]
    b = [fd(x - 1, k) for k in range(4)]
    s = [a[k] + b[k] for k in range(4)]
    chi = smooth_step(x)
    # chi * s = a  =>  differentiate with Leibniz and solve successively
    d1 = (a[1] - chi * s[1]) / s[0]
    d2 = (a[2] - 2 * d1 * s[1] - chi * s[2]) / s[0]
    d3 = (a[3] - 3 * d2 * s[1] - 3 * d1 * s[2] - chi * s[3]) / s[0]
    return chi, d1 / radius, d2 / radius ** 2, d3 / radius ** 3


def localized_virial_rate(state, fields=None, radius=None):
    """Time derivative of I_R = int T_0r chi_R dx evaluated two ways.

    Returns (lhs, rhs).  ``lhs`` integrates the pointwise expression for
    d/dt T_0r (all derivatives taken on the grid).  ``rhs`` is the
    integrated-by-parts form

        4E + 2 int e (chi - 1) dx + 2 int (|D_r u|^2 - g/4 |u|^4) r chi' dx
           - 2 pi int |u|^2 (3/2 chi' + 5/2 r chi'' + 1/2 r^2 chi''') dr

    with e the covariant energy density |D_r u|^2 + |D_theta u|^2 / r^2 - g/2 |u|^4.
    """
    grid = state.grid
    if radius is None or not 0 < radius < grid.rmax / 2:
        raise InvalidArgument(f"cutoff radius must lie in (0, rmax/2), got {radius}")
    if fields is None:
        fields = gauge.gauge_fields(state)
    r = grid.nodes
    w = 2 * np.pi * grid.weights
    dr_u = gauge.radial_derivative(state)
    rho = state.density
    kin_r = np.abs(dr_u) ** 2
    dth2 = (state.m + fields.a_theta) ** 2 * rho
    quart = rho ** 2
    chi, c1, c2, c3 = _cutoff(r, radius)

    def d(f, k=1):
        return grid.derivative(f, k, parity=1)

    rate = (-(2 * kin_r + 2 * r * d(kin_r)) + 0.5 * r * state.g * d(quart)
            + d(dth2) / r - r * d(dth2 / r ** 2)
            + 0.5 * r * d(rho, 3) + 0.5 * d(rho, 2) - 0.5 * d(rho) / r)
    lhs = w @ (rate * chi)

    energy = observables.energy_direct(state, fields, dr_u)
    dens = kin_r + dth2 / r ** 2 - 0.5 * state.g * quart
    rhs = (4 * energy + 2 * (w @ (dens * (chi - 1)))
           + 2 * (w @ ((kin_r - 0.25 * state.g * quart) * r * c1))
           - (w @ (rho * (1.5 * c1 + 2.5 * r * c2 + 0.5 * r ** 2 * c3) / r)))
    return float(lhs), float(rhs)


def classify_endstate(traj, opts=None):
    """Finite-horizon surrogate for scattering versus blowup.

    blowup: a blowup event was recorded, or the amplitude grew by
    ``blowup_factor`` with half the charge inside ``blowup_cells`` cells.
    dispersing: the amplitude fell by ``disperse_factor`` from its running
    peak and the L^4 accumulation rate decreased over the final window.
    Anything else is undecided.
    """
    opts = opts or EvolveOptions()
    if any(kind == BLOWUP for _, kind in traj.events):
        return BLOWUP
    amp = traj.series("max_abs_u")
    if len(amp) < 3:
        return UNDECIDED
    if amp[-1] >= opts.blowup_factor * amp[0] and traj.states and \
            concentrated(traj.states[-1], opts.blowup_cells):
        return BLOWUP
    if amp[-1] * opts.disperse_factor <= np.max(amp) and _dispersal_window_ok(traj, opts):
        return DISPERSING
    return UNDECIDED
