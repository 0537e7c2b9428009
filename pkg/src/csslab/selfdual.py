"""Explicit self-dual solitons, their certification, and threshold bisection."""

from __future__ import annotations

import dataclasses
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dynamics, gauge, observables
from .discretization import make_grid, smooth_step
from .errors import BracketNotFound, InvalidArgument, UndecidedDominated, WrongCoupling
from .state import EquivariantState

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolitonParams:
    m: int = 0
    lam: float = 1.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise InvalidArgument("soliton index m must be a nonnegative integer")
        if not self.lam > 0:
            raise InvalidArgument("soliton scale must be positive")


def soliton_values(r, m, lam):
    """sqrt(8) lam (m+1) (lam r)^m / (1 + (lam r)^(2m+2))."""
    x = lam * np.asarray(r, dtype=float)
    return np.sqrt(8.0) * lam * (m + 1) * x ** m / (1.0 + x ** (2 * m + 2))


def soliton_reach(m, tail=4e-6):
    """rmax in units of 1/lam leaving a charge fraction ~ ``tail`` outside.

    The fraction beyond lam r = R is 1 / (1 + R^(2m+2)).
    """
    return float(tail ** (-1.0 / (2 * m + 2)))


def soliton_grid(m, lam=1.0, n=16384, reach=None, kind="uniform-midpoint"):
    """Grid sized for a soliton of scale ``lam``; ``reach`` is rmax * lam."""
    if reach is None:
        reach = max(soliton_reach(m), 20.0)
    return make_grid(n, reach / lam, kind, m)


def soliton_profile(params, grid=None):
    """Self-dual soliton at g = 1 and t = 0 on ``grid`` (sized automatically if omitted)."""
    if grid is None:
        grid = soliton_grid(params.m, params.lam)
    u = soliton_values(grid.nodes, params.m, params.lam)
    return EquivariantState(m=params.m, g=1.0, grid=grid, u=u.astype(complex))


def _norm(state, f):
    return float(np.sqrt(2 * np.pi * (state.grid.weights @ (np.abs(f) ** 2))))


def selfdual_residuals(state):
    """Relative residuals of D_+ u = 0, A_0 = |u|^2 / 2 and E = 0.

    Returns (r_dplus, r_a0, r_energy); the zero state gives (0, 0, 0).
    """
    if state.g != 1.0:
        raise WrongCoupling(f"self-duality needs g = 1, got g = {state.g}")
    if not np.any(state.u):
        return 0.0, 0.0, 0.0
    fields = gauge.gauge_fields(state)
    dr_u = gauge.radial_derivative(state)
    r_dplus = _norm(state, gauge.d_plus(state, fields, dr_u)) / _norm(state, dr_u)
    half = 0.5 * state.density
    r_a0 = _norm(state, fields.a0 - half) / _norm(state, half)
    energy = observables.energy_direct(state, fields, dr_u)
    r_energy = abs(energy) / observables.kinetic(state, fields, dr_u)
    return r_dplus, r_a0, r_energy


# ---------------------------------------------------------------------------
# threshold bisection
# ---------------------------------------------------------------------------

FAMILIES = ("scaled-soliton", "gaussian")


@dataclass(frozen=True)
class ThresholdOptions:
    """Settings for the dynamical threshold search.

    Amplitudes are multipliers alpha of a reference profile whose charge is
    8 pi (m + 1), so a probe carries charge alpha^2 * 8 pi (m + 1).
    """

    n: int = 1024
    reach: float = 100.0
    dt: float = 1e-3
    t_final: float = 60.0
    sample_dt: float = 0.5
    alpha_min: float = 0.6
    alpha_max: float = 1.6
    alpha_step: float = 0.1
    tol: float = 0.0125
    retry: bool = True
    workers: int | None = None


@dataclass
class ThresholdEstimate:
    m: int
    g: float
    critical_charge: float
    bracket: tuple
    runs: list
    family: str = "scaled-soliton"
    alpha_bracket: tuple = ()
    upper_edge: tuple | None = None

    def as_dict(self):
        return {
            "m": self.m, "g": self.g, "family": self.family,
            "critical_charge": self.critical_charge,
            "bracket": list(self.bracket),
            "alpha_bracket": list(self.alpha_bracket),
            "upper_edge": None if self.upper_edge is None else list(self.upper_edge),
            "runs": [list(r) for r in self.runs],
        }


def reference_profile(m, g, family, grid):
    """Profile of charge 8 pi (m + 1) for the threshold family, tapered to vanish at rmax."""
    r = grid.nodes
    if family == "scaled-soliton":
        u = soliton_values(r, m, 1.0)
    elif family == "gaussian":
        u = r ** m * np.exp(-0.5 * r ** 2)
    else:
        raise InvalidArgument(f"unknown family {family!r}")
    # the m = 0 soliton has an algebraic tail; fade it out over the outer half
    # so the Hankel basis (which vanishes at rmax) represents it without ringing
    u = u * smooth_step(1.0 + (r - 0.5 * grid.rmax) / (0.4 * grid.rmax))
    state = EquivariantState(m=m, g=g, grid=grid, u=u.astype(complex))
    scale = np.sqrt(8 * np.pi * (m + 1) / observables.charge(state))
    return state.replace(u=state.u * scale)


def thread_count(default=1):
    """Worker cap from CSS_LAB_THREADS (at least 1)."""
    raw = os.environ.get("CSS_LAB_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidArgument(f"CSS_LAB_THREADS must be an integer, got {raw!r}") from None


def classify_probe(state, opts):
    """Evolve one probe; undecided runs are retried once at twice the horizon and half dt."""
    evo = dynamics.EvolveOptions(dt=opts.dt, t_final=opts.t_final,
                                 sample_every=max(1, int(round(opts.sample_dt / opts.dt))),
                                 absorb=True, keep_states=False, stop_on_disperse=True)
    verdict = dynamics.classify_endstate(dynamics.evolve(state, evo), evo)
    if verdict == dynamics.UNDECIDED and opts.retry:
        evo = dataclasses.replace(evo, dt=0.5 * evo.dt, t_final=2 * evo.t_final,
                                  sample_every=2 * evo.sample_every)
        verdict = dynamics.classify_endstate(dynamics.evolve(state, evo), evo)
    return verdict


def threshold_bisection(m, g, family="scaled-soliton", opts=None):
    """Locate the smallest charge in a one-parameter family that fails to scatter.

    Probes alpha * reference are evolved and classified.  A probe that does
    not disperse within the horizon (blowup, or undecided after the retry)
    counts as non-scattering.  The search scans alpha upward, bisects the
    first dispersing/non-scattering transition, then keeps scanning: if the
    family scatters again at larger alpha (as multiples of the self-dual
    soliton do at g = 1), that second edge is bisected too and the estimate
    is the midpoint of the non-scattering window; otherwise it is the midpoint
    of the first bracket.
    """
    if g < 1:
        raise InvalidArgument("threshold search needs g >= 1")
    if int(m) != m or m < 0:
        raise InvalidArgument("threshold search needs m >= 0")
    opts = opts or ThresholdOptions()
    workers = opts.workers or thread_count()
    grid = make_grid(opts.n, opts.reach, "bessel-zero", m)
    base = reference_profile(m, g, family, grid)
    q0 = 8 * np.pi * (m + 1)
    cache = {}

    def probe(a):
        verdict = classify_probe(base.replace(u=a * base.u), opts)
        log.info("m=%d g=%g alpha=%.5f charge=%.5f -> %s", m, g, a, a * a * q0, verdict)
        return verdict

    def probe_many(alphas):
        todo = [a for a in alphas if a not in cache]
        if workers > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for a, v in zip(todo, pool.map(probe, todo)):
                    cache[a] = v
        else:
            for a in todo:
                cache[a] = probe(a)
        return [cache[a] for a in alphas]

    def scatters(a):
        return probe_many([a])[0] == dynamics.DISPERSING

    def bisect(lo, hi, lo_scatters):
        # lo/hi straddle a change of scattering behaviour
        while hi - lo > opts.tol:
            mid = round(0.5 * (lo + hi), 12)
            if scatters(mid) == lo_scatters:
                lo = mid
            else:
                hi = mid
        return lo, hi

    grid_alphas = list(np.round(np.arange(opts.alpha_min, opts.alpha_max + 1e-9, opts.alpha_step), 12))

    # upward scan, in batches of ``workers`` probes
    first = None
    for i in range(0, len(grid_alphas), workers):
        batch = grid_alphas[i:i + workers]
        for a, v in zip(batch, probe_many(batch)):
            if v != dynamics.DISPERSING and first is None:
                first = a
        if first is not None:
            break
    runs = lambda: [(float(a * a * q0), cache[a]) for a in sorted(cache)]  # noqa: E731
    if first is None or first == grid_alphas[0]:
        raise BracketNotFound(f"no dispersing/non-scattering transition for alpha in "
                              f"[{opts.alpha_min}, {opts.alpha_max}]: {runs()}")
    lower = bisect(first - opts.alpha_step, first, True)

    upper = None
    last_ns = first
    for a in grid_alphas[grid_alphas.index(first) + 1:]:
        if scatters(a):
            upper = bisect(last_ns, a, False)
            break
        last_ns = a

    if upper is None:
        alpha_c = 0.5 * sum(lower)
        alpha_br = lower
    else:
        alpha_c = 0.25 * (sum(lower) + sum(upper))
        alpha_br = (lower[0], upper[1])
    result = ThresholdEstimate(
        m=m, g=g, family=family, critical_charge=float(alpha_c ** 2 * q0),
        bracket=(float(alpha_br[0] ** 2 * q0), float(alpha_br[1] ** 2 * q0)),
        runs=runs(), alpha_bracket=tuple(float(a) for a in alpha_br),
        upper_edge=None if upper is None else tuple(float(a) for a in upper))
    undecided = sum(1 for _, v in result.runs if v == dynamics.UNDECIDED)
    if undecided > len(result.runs) / 2:
        err = UndecidedDominated(f"{undecided} of {len(result.runs)} probes undecided")
        err.estimate = result
        raise err
    return result
