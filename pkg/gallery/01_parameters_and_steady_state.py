"""
Parameters and the steady state
===============================

Rates are measured in units of the two-level cavity width ``kappa``.  The
three-level medium's coherent excitation rate ``kappa0`` is either given
directly or derived from microscopic constants.
"""
from lumispec import LaserParams, MicroParams, kappa0_from_micro, steady_state

# microscopic route to kappa0 = gamma2 * (g13/g12)**2 * N / n
micro = MicroParams(gamma2_tilde=0.1, gamma1_tilde=10.0, g13_tilde=2.0, g12_tilde=1.0, N_tilde=1000.0, n_tilde=100.0)
print("kappa0 from micro constants:", kappa0_from_micro(micro))

# pump statistics: p = -2 * xi, p = 1 is the perfectly regular pump
params = LaserParams.from_pump(0.8, kappa0=1.0, pump_rate=2000.0)
print(f"xi = {params.xi}, pump is {params.pump_statistics}")

st = steady_state(params)
print(f"n = {st.n:g}, n_tilde = {st.n_tilde:g}, mean currents {st.i_bar:g} / {st.i_tilde_bar:g}")
