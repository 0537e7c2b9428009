"""Virial, Morawetz and localized-virial identities along a focusing evolution.

Run:  python demos/virial_identities.py
"""

import numpy as np

from csslab import dynamics as dyn
from csslab import observables as obs
from csslab.discretization import make_grid
from csslab.state import EquivariantState


def gaussian(m, amp=1.5, g=0.5, n=512, rmax=30.0):
    grid = make_grid(n, rmax, "bessel-zero", m)
    r = grid.nodes
    return EquivariantState(m=m, g=g, grid=grid, u=amp * r ** m * np.exp(-r ** 2 / 2))


# v2'' = 8E: the residual is the splitting error, so it falls as dt^2
print("virial: max |v2'' - 8E| / |8E| with 2 steps per sample")
for dt in (2e-2, 1e-2, 5e-3, 2.5e-3):
    traj = dyn.evolve(gaussian(0), dyn.EvolveOptions(dt=dt, t_final=1.0, sample_every=2, keep_states=False))
    _, res, e8 = dyn.check_virial(traj)
    print(f"  dt={dt:<7} residual {np.max(np.abs(res)) / np.max(np.abs(e8)):.2e}")

print("\nMorawetz (m = 1): max |v1'' - rhs| / |rhs|")
for every in (100, 50, 25):
    traj = dyn.evolve(gaussian(1), dyn.EvolveOptions(dt=1e-4, t_final=0.5, sample_every=every))
    _, res, rhs = dyn.check_morawetz(traj)
    print(f"  sample spacing {every * 1e-4:.4f}: {np.max(np.abs(res)) / np.max(np.abs(rhs)):.2e}")

state = gaussian(0)
print(f"\nlocalized virial, 4E = {4 * obs.energy_direct(state):.6f}")
for radius in (2.0, 4.0, 10.0):
    lhs, rhs = dyn.localized_virial_rate(state, radius=radius)
    print(f"  R={radius:<5} pointwise {lhs:.6f}  integrated {rhs:.6f}")
