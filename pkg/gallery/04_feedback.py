"""
Optoelectronic feedback
=======================

Feeding the pump laser's photocurrent back onto its pump rate suppresses the
in-loop current noise at zero frequency as ``1 / (1 + lambda)**2``.  The
three-level laser outside the loop sees the opposite: strongly
super-Poissonian light.
"""

from lumispec import LaserParams, fano_zero

base = LaserParams(kappa0=100.0, pump_rate=1e9)
for lam in (0.0, 1.0, 10.0, 100.0):
    p = base.replace(lambda_fb=lam)
    iso = fano_zero(p, "fb_isolated")["i"]
    coupled = fano_zero(p, "fb_coupled")
    flux = fano_zero(p, "fb_coupled", detector="out_of_loop")["i"]
    print(f"lambda={lam:5g}  isolated in-loop {iso:.3e} (law {1 / (1 + lam) ** 2:.3e})  "
          f"coupled: in-loop {coupled['i']:.3f}, photon flux {flux:.3f}, three-level {coupled['i_tilde']:.3f}")
print("strong-feedback three-level limit 1 + kappa0/(4 kappa) =", 1 + 100.0 / 4)
