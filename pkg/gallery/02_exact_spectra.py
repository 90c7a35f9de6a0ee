"""
Exact photocurrent spectra
==========================

Each configuration is a linear state-space model.  Its spectrum follows
from the transfer matrix ``M = C (-i w - A)^-1 B + E`` as ``M D M^H``,
divided by the mean current so that 1 is the shot floor.
"""
import numpy as np

from lumispec import LaserParams, build_coupled, closed_form, psd_classify, transfer_spectrum

params = LaserParams(kappa=1.0, kappa_tilde=1.0, kappa0=1.0, xi=0.0, pump_rate=2000.0)
system = build_coupled(params)
print("drift matrix:\n", system.drift)
print("noise covariance is", psd_classify(system.noise_cov))

grid = np.array([0.0, 0.5, 1.0, 2.0, 5.0, 1e4])
curve = transfer_spectrum(system, grid)
ref = closed_form("coupled_3l", params, None, grid)
for w, i, it, c in zip(grid, curve["i"], curve["i_tilde"], ref["i_tilde"]):
    print(f"omega={w:8g}  i={i:.6f}  i_tilde={it:.6f}  closed form {c:.6f}")
# the three-level laser sits below the shot floor, the pump laser above it
