"""Coulomb-gauge potentials and covariant derivatives of an equivariant state.

Under the equivariant ansatz A_r vanishes and the remaining components are
radial integrals of the density:

    A_theta(r) = -1/2 int_0^r |u|^2 s ds
    A_0(r)     = -int_r^inf (m + A_theta) |u|^2 / s ds

The evolution is then i u_t + Delta_m u = V u with the real potential
V = 2 m A_theta / r^2 + A_0 + A_theta^2 / r^2 - g |u|^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import build_spectral_plan, hankel_forward
from .state import EquivariantState, zero_state  # noqa: F401  (re-exported)


@dataclass(frozen=True, eq=False)
class GaugeFields:
    a_theta: np.ndarray
    a0: np.ndarray
    potential: np.ndarray


def compute_a_theta(state):
    """A_theta at the nodes by high-order cumulative quadrature from the origin."""
    grid = state.grid
    rho = state.density
    # |u|^2 is even through the origin, so |u|^2 r is odd
    return -0.5 * grid.cumulative(rho * grid.nodes, parity=-1)


def a_theta_limit(state):
    """A_theta(rmax), i.e. -charge / (4 pi) on the truncated domain."""
    grid = state.grid
    return -0.5 * grid.total(state.density * grid.nodes, parity=-1)


def compute_a0(state, a_theta=None):
    """A_0 at the nodes, integrated inward from A_0(rmax) = 0."""
    if a_theta is None:
        a_theta = compute_a_theta(state)
    grid = state.grid
    # (m + A_theta) |u|^2 / r is odd and regular at r = 0 for every m:
    # for m = 0, A_theta = O(r^2); for m != 0, |u|^2 = O(r^{2|m|})
    integrand = (state.m + a_theta) * state.density / grid.nodes
    return -grid.tail(integrand, parity=-1)


def potential(state, fields=None, a_theta=None, a0=None):
    """Real multiplicative potential V; the nonlinearity is V * u."""
    if fields is not None:
        a_theta, a0 = fields.a_theta, fields.a0
    if a_theta is None:
        a_theta = compute_a_theta(state)
    if a0 is None:
        a0 = compute_a0(state, a_theta)
    r = state.grid.nodes
    return (2 * state.m + a_theta) * a_theta / r ** 2 + a0 - state.g * state.density


def gauge_fields(state):
    a_theta = compute_a_theta(state)
    a0 = compute_a0(state, a_theta)
    return GaugeFields(a_theta=a_theta, a0=a0,
                       potential=potential(state, a_theta=a_theta, a0=a0))


def radial_derivative(state):
    """d u / d r using parity-reflected high-order stencils."""
    return state.grid.derivative(state.u, 1, parity=state.parity)


def covariant_factors(state, fields=None):
    """Return (D_r u, r^{-1} D_theta u) with D_theta u = i (m + A_theta) u."""
    if fields is None:
        fields = gauge_fields(state)
    dr_u = radial_derivative(state)
    dtheta_over_r = 1j * (state.m + fields.a_theta) * state.u / state.grid.nodes
    return dr_u, dtheta_over_r


def d_plus(state, fields=None, dr_u=None):
    """Radial factor of D_+ phi: u' - (m + A_theta) u / r."""
    if fields is None:
        fields = gauge_fields(state)
    if dr_u is None:
        dr_u = radial_derivative(state)
    return dr_u - (state.m + fields.a_theta) * state.u / state.grid.nodes


def spectral_relation(state):
    """Both sides of A_theta_hat = rho^{-1} d/drho f_hat with f = -|u|^2 / 2.

    Transforms are order 0, so the state must sit on a bessel-zero grid of
    order 0 (the density and A_theta are radial whatever m is).  A_theta is
    shifted by its value at rmax so that it decays like the transformed
    function must.  The rho derivative is a centred difference on the
    frequency nodes (mirrored through rho = 0).  Returns (rho, lhs, rhs).
    """
    plan = build_spectral_plan(state.grid, 0)
    f_hat = hankel_forward(-0.5 * state.density, plan)
    a_hat = hankel_forward(compute_a_theta(state) - a_theta_limit(state), plan)
    rho = plan.rho
    # f_hat is even in rho: mirror the first node so the difference stays centred
    ext = np.gradient(np.r_[f_hat[0], f_hat], np.r_[-rho[0], rho])[1:]
    return rho, a_hat, ext / rho
