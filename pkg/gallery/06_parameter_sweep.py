"""
Parameter sweeps
================

``sweep`` evaluates zero-frequency Fano factors and the induced-statistics
distance along one parameter and writes them as CSV.
"""
import tempfile
from pathlib import Path

from lumispec import LaserParams, sweep

base = LaserParams(kappa0=1.0, xi=0.4, pump_rate=1e9)
res = sweep(base, "kappa0/kappa", [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0])
for k0, fano, dist in zip(res.values, res["fano_i_tilde"], res["ips_distance"]):
    print(f"kappa0/kappa={k0:8g}  three-level Fano {fano:.4f}  IPS distance {dist:.4f}")

out = Path(tempfile.mkdtemp()) / "sweep.csv"
res.to_csv(out)
print("written", out)
