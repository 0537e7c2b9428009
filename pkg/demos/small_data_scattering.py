"""A charge-0.01 datum at g = 1 follows the free dispersive decay.

Run:  python demos/small_data_scattering.py
"""

import numpy as np

from csslab import dynamics as dyn
from csslab import observables as obs
from csslab.discretization import make_grid
from csslab.state import EquivariantState

# a e^{-r^2/4} evolves freely with peak a (1 + t^2)^{-1/2}
a = np.sqrt(0.01 / (2 * np.pi))
grid = make_grid(1024, 160.0, "bessel-zero", 0)
state = EquivariantState(m=0, g=1.0, grid=grid, u=a * np.exp(-grid.nodes ** 2 / 4))
opts = dyn.EvolveOptions(dt=1e-2, t_final=20.0, sample_every=200, keep_states=False)
traj = dyn.evolve(state, opts)

print(f"charge {obs.charge(state):.5f}")
print(f"{'t':>5} {'max|u|':>10} {'free':>10} {'ratio':>8}")
for t, peak in zip(traj.times, traj.series("max_abs_u")):
    free = a / np.sqrt(1 + t ** 2)
    print(f"{t:>5.1f} {peak:>10.3e} {free:>10.3e} {peak / free:>8.4f}")
print("verdict:", dyn.classify_endstate(traj, opts))
