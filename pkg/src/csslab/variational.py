"""Minimal-charge zero-J standing waves and the threshold constants c_{m,g}.

For a real profile u the functional

    J(u) = 2 pi int ( u'^2 + (m - 1/2 int_0^r u^2 s ds)^2 u^2 / r^2 - g/2 u^4 ) r dr

is a cubic in the density scale: J(sqrt(s) u) = s (a - b s + c s^2).  The
smallest positive root s_min of the quadratic gives the zero-J rescaling of a
shape, and the threshold constant is the minimum of charge(u) * s_min over
shapes.  At g = 1 the Bogomol'nyi bound makes J >= 0, so the quadratic only
touches zero on solitons; there the search minimizes the charge at the
minimizing scale s* = b / 2c plus a penalty on the gap 1 - b^2 / 4ac.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import gauge, observables
from .discretization import make_grid
from .errors import InvalidArgument, NoSignChange, NonConvergence
from .state import EquivariantState

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class StandingWave:
    profile: EquivariantState
    frequency: float
    charge: float
    j_value: float
    iterations: int = 0
    history: tuple = field(default=(), repr=False)
    gap: float = 0.0
    degenerate: bool = False


@dataclass(frozen=True)
class VariationalOptions:
    n: int = 2048
    rmax: float = 60.0
    basis: int = 36
    sigma_min: float = 0.3
    sigma_max: float = 7.5
    penalty: float = 4.0
    seed: int = 0
    max_iter: int = 4000
    rtol: float = 1e-8
    window: int = 50
    polish_evals: int = 30000

    def __post_init__(self):
        if self.n < 8 or self.basis < 1 or not self.rmax > 0:
            raise InvalidArgument("bad variational grid/basis sizes")
        if not 0 < self.sigma_min < self.sigma_max:
            raise InvalidArgument("need 0 < sigma_min < sigma_max")


# ---------------------------------------------------------------------------
# functional pieces on nodal values
# ---------------------------------------------------------------------------

def _coeffs(grid, m, u):
    """(a, b/g-part, X, c, Q, L4, A) for a real nodal profile u."""
    r = grid.nodes
    W = TWO_PI * grid.weights
    du = grid.derivative(u, 1, parity=-1 if m % 2 else 1)
    a_th = -0.5 * grid.cumulative(u * u * r, parity=-1)
    a = W @ (du * du + m * m * u * u / r ** 2)
    X = W @ (a_th * u * u / r ** 2)
    c = W @ (a_th ** 2 * u * u / r ** 2)
    return a, X, c, W @ (u * u), W @ u ** 4, a_th, du


def j_functional(profile, m=None, g=None):
    """J = 2 pi int ( |u'|^2 + (m + A_theta)^2 |u|^2 / r^2 - g/2 |u|^4 ) r dr.

    Written with (m - 1/2 int_0^r |u|^2 s ds)^2, which is the same square as
    (m + A_theta)^2 in the gauge convention used here.  J is twice the energy.
    """
    m = profile.m if m is None else m
    g = profile.g if g is None else g
    if m < 0:
        raise InvalidArgument("j_functional needs m >= 0")
    state = profile if (m == profile.m and g == profile.g) else EquivariantState(
        m=m, g=g, grid=profile.grid, u=profile.u, t=profile.t)
    if not np.any(state.u):
        return 0.0
    radial, angular = observables.kinetic_parts(state)
    return float(radial + angular - 0.5 * g * observables.l4x(state))


def j_gradient(state, fields=None):
    """Plane-density first variation G of J: dJ = 2 pi int Re(conj(G) du) r dr.

    G = 2 ( -Delta_A u + A_0 u - g |u|^2 u ); the nonlocal dependence of
    A_theta on u contributes exactly the A_0 u term.
    """
    if fields is None:
        fields = gauge.gauge_fields(state)
    return -2.0 * covariant_rhs(state, fields)


def covariant_rhs(state, fields=None):
    """Delta_A u - A_0 u + g |u|^2 u, which equals lambda u on a standing wave."""
    if fields is None:
        fields = gauge.gauge_fields(state)
    grid, r, u = state.grid, state.grid.nodes, state.u
    p = state.parity
    lap = grid.derivative(u, 2, parity=p) + grid.derivative(u, 1, parity=p) / r
    return lap - (state.m + fields.a_theta) ** 2 * u / r ** 2 - fields.a0 * u + state.g * state.density * u


def _cubic(a, X, c, L4, m, g):
    b = 0.5 * g * L4 - 2 * m * X
    return a, b, c


def _s_min(a, b, c):
    """Smallest positive root of a - b s + c s^2, or None."""
    disc = b * b - 4 * a * c
    if disc < 0 or b <= 0:
        return None
    # stable form of (b - sqrt(disc)) / 2c
    return 2 * a / (b + np.sqrt(disc))


def normalize_to_zero_j(profile, m=None, g=None, alpha_hi=None, touch=1e-6):
    """Multiplier alpha with J(alpha * profile) = 0 (smallest positive root).

    At g = 1 the zero of a soliton is a double root, which discretization
    turns into a near miss; a relative gap 1 - b^2 / 4ac below ``touch`` is
    accepted as tangency and the J-minimizing scale returned.  Raises
    NoSignChange when J(alpha * profile) > 0 for every alpha in (0, alpha_hi]
    (all alpha when alpha_hi is None).
    """
    m = profile.m if m is None else m
    g = profile.g if g is None else g
    if g < 1:
        raise InvalidArgument("zero-J normalization needs g >= 1")
    u = np.abs(profile.u)
    a, X, c, _, L4, _, _ = _coeffs(profile.grid, m, u)
    a, b, c = _cubic(a, X, c, L4, m, g)
    s = _s_min(a, b, c)
    if s is None and b > 0 and 1.0 - b * b / (4 * a * c) < touch:
        s = b / (2 * c)
    if s is not None and alpha_hi is not None and np.sqrt(s) > alpha_hi:
        s = None
    if s is None:
        raise NoSignChange("J(alpha u) > 0 on the whole search range")
    return float(np.sqrt(s))


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------

class _Problem:
    """Reduced objective over coefficients of u = r^m sum_k c_k exp(-r^2 / 2 sigma_k^2)."""

    def __init__(self, m, g, opts):
        self.m, self.g, self.opts = m, g, opts
        self.grid = make_grid(opts.n, opts.rmax, "uniform-midpoint")
        r = self.grid.nodes
        self.sigma = np.geomspace(opts.sigma_min, opts.sigma_max, opts.basis)
        self.B = r[:, None] ** m * np.exp(-0.5 * (r[:, None] / self.sigma[None, :]) ** 2)
        self.p = -1 if m % 2 else 1
        self.D = self.grid._diff_matrix(1, self.p)
        self.DB = self.D @ self.B
        self.P = self.grid._interval_matrix(-1)[:-1]
        self.W = TWO_PI * self.grid.weights

    def _ct(self, y):
        # transpose of the cumulative operator: P^T (reverse cumsum of y)
        return self.P.T @ np.cumsum(y[::-1])[::-1]

    def parts(self, coef):
        r, W, m = self.grid.nodes, self.W, self.m
        u = self.B @ coef
        du = self.DB @ coef
        A = -0.5 * np.cumsum(self.P @ (u * u * r))
        q = u * u / r ** 2
        vals = dict(a=W @ (du * du) + m * m * (W @ q), X=W @ (A * q), c=W @ (A * A * q),
                    Q=W @ (u * u), L4=W @ u ** 4)
        grads = dict(
            a=2 * self.DB.T @ (W * du) + 2 * m * m * self.B.T @ (W * u / r ** 2),
            X=self.B.T @ (2 * W * A * u / r ** 2 - u * r * self._ct(W * q)),
            c=self.B.T @ (2 * W * A * A * u / r ** 2 - 2 * u * r * self._ct(W * A * q)),
            Q=self.B.T @ (2 * W * u),
            L4=self.B.T @ (4 * W * u ** 3),
        )
        return u, vals, grads

    def objective(self, coef):
        _, v, dv = self.parts(coef)
        m, g, beta = self.m, self.g, self.opts.penalty
        a, b, c, Q = v["a"], 0.5 * g * v["L4"] - 2 * m * v["X"], v["c"], v["Q"]
        da, db, dc, dQ = dv["a"], 0.5 * g * dv["L4"] - 2 * m * dv["X"], dv["c"], dv["Q"]
        disc = b * b - 4 * a * c
        if disc >= 0 and b > 0:
            root = np.sqrt(disc)
            droot = (b * db - 2 * (da * c + a * dc)) / root if root > 0 else 0.0 * da
            s = 2 * a / (b + root)
            ds = (2 * da * (b + root) - 2 * a * (db + droot)) / (b + root) ** 2
            return Q * s, dQ * s + Q * ds
        # no zero-J rescaling: charge at the J/s minimizer plus a gap penalty
        delta = 1.0 - b * b / (4 * a * c)
        ddelta = -(2 * b * db) / (4 * a * c) + b * b / (4 * a * c) * (da / a + dc / c)
        s = b / (2 * c)
        ds = db / (2 * c) - b * dc / (2 * c * c)
        pen = 1 + beta * np.sqrt(delta)
        dpen = beta * ddelta / (2 * np.sqrt(delta))
        return Q * s * pen, (dQ * s + Q * ds) * pen + Q * s * dpen

    def seed(self):
        rng = np.random.default_rng(self.opts.seed)
        # start near a single Gaussian of unit width with a random admixture
        k = int(np.argmin(np.abs(np.log(self.sigma))))
        coef = 0.05 * rng.standard_normal(self.opts.basis)
        coef[k] += 1.0
        return coef

    def scale(self, coef):
        """Rescale to ||u'|| = 1 (the objective is invariant under amplitude)."""
        _, v, _ = self.parts(coef)
        return coef / np.sqrt(v["a"])


def minimize_charge(m, g, opts=None):
    """Minimal-charge zero-J standing wave for coupling g >= 1.

    The shape is optimized with BFGS on the reduced objective charge * s,
    where s renormalizes each shape onto J = 0; the amplitude is reset to
    ||u'|| = 1 between restarts.  Returns the wave at its zero-J scale (at the
    J-minimizing scale when J stays positive, which is the g = 1 situation).
    """
    if g < 1 or m < 0 or int(m) != m:
        raise InvalidArgument("minimize_charge needs g >= 1 and integer m >= 0")
    opts = opts or VariationalOptions()
    prob = _Problem(int(m), float(g), opts)
    coef = prob.scale(prob.seed())
    history = []
    iterations = 0
    chunk = max(opts.window, 200)
    converged = False
    while iterations < opts.max_iter:
        budget = min(chunk, opts.max_iter - iterations)
        res = optimize.minimize(prob.objective, coef, jac=True, method="BFGS",
                                callback=lambda xk: history.append(prob.objective(xk)[0]),
                                options={"maxiter": budget, "gtol": 1e-12})
        iterations += max(res.nit, 1)
        coef = prob.scale(res.x)
        if len(history) > opts.window:
            old, new = history[-opts.window - 1], history[-1]
            if (old - new) < opts.rtol * abs(new):
                converged = True
                break
        if res.nit < budget and res.status in (0, 2):
            converged = True
            break
    if not converged:
        raise NonConvergence(f"charge minimization did not settle in {opts.max_iter} iterations")
    if opts.polish_evals:
        coef = _polish(prob, coef, opts.polish_evals)
    return _finish(prob, coef, iterations, history)


def _polish(prob, coef, max_evals):
    """Least-squares refinement of the Lagrange equation at fixed charge.

    The penalized objective has a kink where the zero-J set is only touched
    (g = 1), which stalls quasi-Newton steps slightly off the standing wave.
    """
    m, g, W, sw = prob.m, prob.g, prob.W, np.sqrt(prob.W)
    u, v, _ = prob.parts(coef)
    a, b, c = v["a"], 0.5 * g * v["L4"] - 2 * m * v["X"], v["c"]
    s = _s_min(a, b, c) or b / (2 * c)
    coef = np.sqrt(s) * coef
    q0 = s * v["Q"]

    def resid(x):
        u = prob.B @ x
        state = EquivariantState(m=m, g=g, grid=prob.grid, u=u.astype(complex))
        lu = np.real(covariant_rhs(state))
        uu = W @ (u * u)
        lam = (W @ (u * lu)) / uu
        return np.concatenate([sw * (lu - lam * u) / np.sqrt(uu), [10 * (uu - q0) / q0]])

    res = optimize.least_squares(resid, coef, method="lm", xtol=1e-14, ftol=1e-14,
                                 max_nfev=max_evals)
    return res.x


def _finish(prob, coef, iterations, history):
    m, g = prob.m, prob.g
    u, v, _ = prob.parts(coef)
    a, b, c = v["a"], 0.5 * g * v["L4"] - 2 * m * v["X"], v["c"]
    s = _s_min(a, b, c)
    gap = max(0.0, 1.0 - b * b / (4 * a * c))
    if s is None:
        s = b / (2 * c)
    u = np.sqrt(s) * np.abs(u)
    state = EquivariantState(m=m, g=g, grid=prob.grid, u=u.astype(complex))
    wave = StandingWave(profile=state, frequency=0.0, charge=observables.charge(state),
                        j_value=j_functional(state), iterations=iterations,
                        history=tuple(history), gap=gap)
    return _with_frequency(wave)


def _with_frequency(wave):
    lam, degenerate = _rayleigh(wave.profile)
    return StandingWave(profile=wave.profile, frequency=lam, charge=wave.charge,
                        j_value=wave.j_value, iterations=wave.iterations,
                        history=wave.history, gap=wave.gap, degenerate=degenerate)


def _rayleigh(state):
    if not np.any(state.u):
        return 0.0, True
    W = TWO_PI * state.grid.weights
    lu = covariant_rhs(state)
    return float(np.real(W @ (np.conj(state.u) * lu)) / (W @ state.density)), False


def extract_frequency(wave):
    """Lagrange multiplier lambda = <u, L u> / <u, u> with L u = Delta_A u - A_0 u + g |u|^2 u."""
    return _rayleigh(wave.profile if isinstance(wave, StandingWave) else wave)[0]


def eigen_residual(wave):
    """||L u - lambda u|| / ||u|| in the plane L^2 norm."""
    state = wave.profile if isinstance(wave, StandingWave) else wave
    if not np.any(state.u):
        return 0.0
    lam = extract_frequency(state)
    W = TWO_PI * state.grid.weights
    res = covariant_rhs(state) - lam * state.u
    return float(np.sqrt((W @ np.abs(res) ** 2) / (W @ state.density)))


def a0_at_origin(state, a0=None):
    """A_0(0) by quadratic extrapolation from the three innermost nodes."""
    if a0 is None:
        a0 = gauge.compute_a0(state)
    r = state.grid.nodes[:3]
    return float(np.polyval(np.polyfit(r, a0[:3], 2), 0.0))


def pohozaev_residuals(wave, frequency=None):
    """Relative residuals (p1, p2) of the two Pohozaev identities.

    p1: int (lambda + A_0) |u|^2 dx = g/2 int |u|^4 dx
    p2: lambda Q + 4 pi m A_0(0) + 2 int (m + A_theta)^2 |u|^2 / r^2 dx = g/2 int |u|^4 dx
    Both are normalized by g/2 int |u|^4 dx; the zero state gives (0, 0).
    """
    state = wave.profile if isinstance(wave, StandingWave) else wave
    if not np.any(state.u):
        return 0.0, 0.0
    lam = extract_frequency(state) if frequency is None else frequency
    fields = gauge.gauge_fields(state)
    W = TWO_PI * state.grid.weights
    rho = state.density
    r = state.grid.nodes
    quart = 0.5 * state.g * (W @ rho ** 2)
    p1 = abs(W @ ((lam + fields.a0) * rho) - quart) / quart
    ang = W @ ((state.m + fields.a_theta) ** 2 * rho / r ** 2)
    lhs2 = lam * (W @ rho) + 2 * TWO_PI * state.m * a0_at_origin(state, fields.a0) + 2 * ang
    p2 = abs(lhs2 - quart) / quart
    return float(p1), float(p2)


def c_estimate(m, g, opts=None):
    """Threshold constant c_{m,g} as the minimal zero-J charge."""
    return minimize_charge(m, g, opts).charge
