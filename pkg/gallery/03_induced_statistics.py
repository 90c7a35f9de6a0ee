"""
Induced photon statistics
=========================

With ``kappa0 >> kappa = kappa_tilde`` the three-level laser copies the
intensity statistics of its pump laser, while the pump laser itself
becomes Poissonian.  With ``kappa0 << kappa`` the three-level laser sits at
half the shot level whatever the pump does.
"""
import numpy as np

from lumispec import LaserParams, build_coupled, ips_distance, transfer_spectrum

for xi in (-0.4, 0.4):
    base = LaserParams(kappa0=1.0, xi=xi, pump_rate=1e9)
    dist = [ips_distance(base.replace(kappa0=k0)) for k0 in (10.0, 100.0, 1000.0)]
    print(f"xi={xi:+}: distance to the isolated pump spectrum", ", ".join(f"{d:.4f}" for d in dist))

strong = LaserParams(kappa0=1e3, xi=0.4, pump_rate=1e9)
s_i = transfer_spectrum(build_coupled(strong), np.linspace(0, 3, 7))["i"]
print("pump laser channel at kappa0/kappa = 1e3:", np.round(s_i, 4))

weak = strong.replace(kappa0=1e-2)
print("three-level channel at kappa0/kappa = 1e-2, omega = 0:",
      transfer_spectrum(build_coupled(weak), [0.0])["i_tilde"][0])
