"""Scalar functionals of an equivariant state.

All integrals are over the plane, so a radial integral int f r dr picks up
a factor 2 pi.  The energy is

    E = pi int ( |u'|^2 + (m + A_theta)^2 |u|^2 / r^2 - g/2 |u|^4 ) r dr

and equals its Bogomol'nyi form pi int ( |D_+ u|^2 + (1 - g)/2 |u|^4 ) r dr
up to a boundary term that vanishes for decaying states.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import gauge
from .discretization import band_multiplier, hankel_forward, plan_for
from .errors import MomentOverflow

TWO_PI = 2.0 * np.pi

CSV_COLUMNS = ("t", "charge", "energy_direct", "energy_bogo", "l4x", "v2", "v1",
               "virial_residual", "max_abs_u", "lp_tail")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    charge: float
    energy_direct: float
    energy_bogo: float
    l4x: float
    v2: float
    v1: float
    max_abs_u: float
    lp_tail: float
    kinetic: float = 0.0
    virial_residual: float = float("nan")

    def as_row(self):
        d = asdict(self)
        return [d[c] for c in CSV_COLUMNS]


def _radial(state, f):
    return TWO_PI * (state.grid.weights @ f)


def charge(state):
    """L^2 mass int |phi|^2 dx."""
    return float(_radial(state, state.density))


def spectral_charge(state):
    """Charge in the transform norm sum_i w_i |u_i|^2 of the matching Hankel plan.

    Both Strang substeps are unitary in this norm, so it is the discrete
    charge the stepper conserves to round-off.  NaN off Bessel grids.
    """
    plan = plan_for(state.grid)
    if plan is None or plan.m != abs(state.m):
        return float("nan")
    return float(TWO_PI * (plan.w @ state.density))


def l4x(state):
    """int |phi|^4 dx."""
    return float(_radial(state, state.density ** 2))


def max_abs(state):
    return float(np.max(np.abs(state.u))) if state.grid.n else 0.0


def _parts(state, fields=None, dr_u=None):
    if fields is None:
        fields = gauge.gauge_fields(state)
    if dr_u is None:
        dr_u = gauge.radial_derivative(state)
    return fields, dr_u


def kinetic_parts(state, fields=None, dr_u=None):
    """(||D_r phi||^2, ||r^{-1} D_theta phi||^2) as plane integrals."""
    fields, dr_u = _parts(state, fields, dr_u)
    r = state.grid.nodes
    radial = _radial(state, np.abs(dr_u) ** 2)
    angular = _radial(state, (state.m + fields.a_theta) ** 2 * state.density / r ** 2)
    return float(radial), float(angular)


def kinetic(state, fields=None, dr_u=None):
    """Half the covariant Dirichlet energy: the positive part of E."""
    return 0.5 * sum(kinetic_parts(state, fields, dr_u))


def energy_direct(state, fields=None, dr_u=None):
    radial, angular = kinetic_parts(state, fields, dr_u)
    return 0.5 * (radial + angular) - 0.25 * state.g * l4x(state)


def energy_bogo(state, fields=None, dr_u=None):
    fields, dr_u = _parts(state, fields, dr_u)
    dp = gauge.d_plus(state, fields, dr_u)
    return float(0.5 * _radial(state, np.abs(dp) ** 2 + 0.5 * (1.0 - state.g) * state.density ** 2))


def virial_moments(state, cap=None):
    """(v2, v1) = (int r^2 T_00 dx, int r T_00 dx) with T_00 = |phi|^2 / 2.

    Raises MomentOverflow when v2 exceeds ``cap`` (mass running off the grid).
    """
    r = state.grid.nodes
    v2 = 0.5 * _radial(state, r ** 2 * state.density)
    v1 = 0.5 * _radial(state, r * state.density)
    if cap is not None and v2 > cap:
        raise MomentOverflow(f"r^2 moment {v2:.3e} exceeds cap {cap:.3e}")
    return float(v2), float(v1)


def t0r_slice(state, fields=None, dr_u=None):
    """Radial momentum density r Im(conj(u) D_r u); A_r = 0 so D_r = d/dr."""
    if dr_u is None:
        dr_u = gauge.radial_derivative(state)
    return state.grid.nodes * np.imag(np.conj(state.u) * dr_u)


def angular_current(state, fields=None, dr_u=None):
    """int Im(conj(r^{-1} D_theta phi) D_r phi) dx; equals -1/4 int |phi|^4 dx."""
    fields, dr_u = _parts(state, fields, dr_u)
    _, dth = gauge.covariant_factors(state, fields)
    return float(_radial(state, np.imag(np.conj(dth) * dr_u)))


def gn_residuals(state, fields=None, dr_u=None):
    """Slack in the explicit-constant covariant inequalities.

    Returns
    -------
    gn4 : float
        4 ||D_r phi|| ||r^{-1} D_theta phi|| - ||phi||_4^4, nonnegative.
    cov_sobo : float
        2 ||D_x phi||^2 - ||phi||_4^4, nonnegative, zero on self-dual solitons.
    cov_gn_ratio : float
        ||phi||_4^4 / (||D_x phi||^2 ||phi||^2); zero for the zero state.
    """
    fields, dr_u = _parts(state, fields, dr_u)
    radial, angular = kinetic_parts(state, fields, dr_u)
    l4 = l4x(state)
    gn4 = 4.0 * np.sqrt(radial * angular) - l4
    cov_sobo = 2.0 * (radial + angular) - l4
    denom = (radial + angular) * charge(state)
    ratio = l4 / denom if denom > 0 else 0.0
    return float(gn4), float(cov_sobo), float(ratio)


def reverse_cs_margin(state, fields=None, dr_u=None):
    """2 g |int Im(conj(r^{-1} D_theta phi) d_r phi) dx| - ||D_x phi||^2.

    Nonnegative whenever E <= 0.  The current integral is negative for the
    orientation used here, so its magnitude is compared.
    """
    fields, dr_u = _parts(state, fields, dr_u)
    radial, angular = kinetic_parts(state, fields, dr_u)
    return 2.0 * state.g * abs(angular_current(state, fields, dr_u)) - (radial + angular)


def morawetz_rhs(state, fields=None):
    """Right side of the Morawetz identity d^2/dt^2 v1.

    2 pi int [ 2 (m + A_theta)^2 |u|^2 / r^2 - |u|^2 / (2 r^2) - g/2 |u|^4 ] dr
    (plane measure without the r weight).  For m = 0 the 1/r^2 density is
    not integrable against dr; callers should restrict to m != 0.
    """
    if fields is None:
        fields = gauge.gauge_fields(state)
    r = state.grid.nodes
    dens = state.density
    # integrand against dr is even in r (unlike the r dr densities)
    f = (2.0 * (state.m + fields.a_theta) ** 2 - 0.5) * dens / r ** 2 - 0.5 * state.g * dens ** 2
    return float(TWO_PI * state.grid.total(f, parity=1))


def lp_tail(state, rho_ref=None):
    """Charge fraction carried above frequency ``rho_ref`` (half the grid band by default).

    Needs the order-|m| transform, so it is only defined on matching Bessel
    grids; NaN is returned elsewhere.
    """
    grid = state.grid
    plan = plan_for(grid)
    if plan is None or plan.m != abs(state.m):
        return float("nan")
    total = plan.w @ state.density
    if total == 0:
        return 0.0
    if rho_ref is None:
        rho_ref = 0.25 * plan.rho_max
    u_hat = hankel_forward(state.u, plan)
    high = 1.0 - band_multiplier(plan.rho, "low", rho_ref)
    return float(plan.w_hat @ (high * np.abs(u_hat) ** 2) / total)


def diagnostics(state, cap=None, rho_ref=None):
    """All per-time scalars for one state."""
    fields = gauge.gauge_fields(state)
    dr_u = gauge.radial_derivative(state)
    v2, v1 = virial_moments(state, cap)
    return DiagnosticsRecord(
        t=state.t,
        charge=charge(state),
        energy_direct=float(energy_direct(state, fields, dr_u)),
        energy_bogo=energy_bogo(state, fields, dr_u),
        l4x=l4x(state),
        v2=v2,
        v1=v1,
        max_abs_u=max_abs(state),
        lp_tail=lp_tail(state, rho_ref),
        kinetic=kinetic(state, fields, dr_u),
    )
