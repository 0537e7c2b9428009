"""Certify the explicit self-dual solitons, then recover their charge variationally.

Run:  python demos/soliton_certificate.py
"""

import numpy as np

from csslab import observables as obs
from csslab import selfdual as sd
from csslab import variational as var

print("explicit solitons at g = 1")
print(f"{'m':>2} {'lam':>5} {'charge/8pi(m+1)':>16} {'|D+ u|':>9} {'A0 gap':>9} {'energy':>9}")
for m in (0, 1, 2):
    for lam in (0.5, 1.0, 2.0):
        state = sd.soliton_profile(sd.SolitonParams(m, lam))
        ratio = obs.charge(state) / (8 * np.pi * (m + 1))
        res = sd.selfdual_residuals(state)
        print(f"{m:>2} {lam:>5} {ratio:>16.8f} {res[0]:>9.1e} {res[1]:>9.1e} {res[2]:>9.1e}")

# the smallest charge carrying a zero-energy standing wave
print("\nminimal charge of J = 0 standing waves")
for m, g in [(0, 1.0), (1, 1.0), (0, 2.0)]:
    wave = var.minimize_charge(m, g)
    p1, p2 = var.pohozaev_residuals(wave)
    print(f"m={m} g={g}: charge = {wave.charge / (8 * np.pi * (m + 1)):.4f} x 8pi(m+1), "
          f"frequency {wave.frequency:+.3f}, Pohozaev residuals {p1:.1e} {p2:.1e}")
