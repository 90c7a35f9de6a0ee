"""Euler-Maruyama simulation of linear noise systems, including indefinite diffusion.

The sources of the laser model come from a Glauber P-representation and
their correlation matrix ``D`` has a negative diagonal entry, so no real
process reproduces it.  Writing ``D = L L^T`` with complex columns for the
negative eigenvalues gives complex trajectories whose *pair* correlations
(products at ``+omega`` and ``-omega``, never moduli) equal the analytic ones.
"""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from . import io
from .errors import BudgetError, UnstableSystemError
from .system import LinearNoiseSystem, psd_classify

__all__ = [
    "BudgetWarning",
    "NoiseFactorization",
    "factor_covariance",
    "TrajectoryEnsemble",
    "simulate",
    "worker_count",
]

CLAMP_TOL = 1e-12
STABILITY_FACTOR = 0.01
MIN_RELAXATION_TIMES = 50.0
BURN_IN_RELAXATION_TIMES = 10.0
CHUNK_STEPS = 1 << 16


class BudgetWarning(UserWarning):
    """The simulated duration is short compared with the slowest relaxation time."""


@dataclass(frozen=True)
class NoiseFactorization:
    factor: np.ndarray
    mode: str

    def reconstruct(self) -> np.ndarray:
        """``L @ L.T`` (plain transpose), which must equal ``D``."""
        return (self.factor @ self.factor.T).real if self.mode == "real" else self.factor @ self.factor.T


def _semidefinite_cholesky(D: np.ndarray) -> np.ndarray:
    # Cholesky-Banachiewicz with pivots in [-tol, tol] clamped to zero, so
    # singular psd matrices (zero pump noise, say) still factor.
    m = D.shape[0]
    L = np.zeros_like(D)
    tol = CLAMP_TOL * max(1.0, np.max(np.abs(D), initial=0.0))
    for j in range(m):
        pivot = D[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= tol:
            if pivot < -tol:
                raise np.linalg.LinAlgError(f"matrix is not positive semidefinite (pivot {pivot:g})")
            continue
        L[j, j] = np.sqrt(pivot)
        L[j + 1 :, j] = (D[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def _spectral_factor(D: np.ndarray) -> np.ndarray:
    eig, V = np.linalg.eigh(D)
    order = np.argsort(eig)[::-1]
    eig, V = eig[order], V[:, order]
    # deterministic eigenvector signs: largest-magnitude component positive
    flip = np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])])
    V = V * np.where(flip == 0, 1.0, flip)
    eig = np.where(np.abs(eig) <= CLAMP_TOL * np.max(np.abs(eig), initial=0.0), 0.0, eig)
    return V * np.sqrt(eig.astype(complex))


def factor_covariance(D) -> NoiseFactorization:
    """Factor a symmetric, possibly indefinite, noise covariance as ``L L^T``.

    Positive semidefinite ``D`` gets a real lower-triangular factor.
    Indefinite ``D`` gets ``V diag(sqrt(lambda))`` from its eigendecomposition,
    so each negative eigenvalue contributes a purely imaginary column.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("noise covariance must be square")
    if np.max(np.abs(D - D.T), initial=0.0) > 1e-14 * max(1.0, np.max(np.abs(D), initial=0.0)):
        raise ValueError("noise covariance must be symmetric")
    if psd_classify(D) == "psd":
        try:
            return NoiseFactorization(_semidefinite_cholesky(D), "real")
        except np.linalg.LinAlgError:
            pass
    return NoiseFactorization(_spectral_factor(D), "complex")


@numba.njit(cache=True, nogil=True)
def _em_chunk(x, w, phi, g, h, k, every, counters, acc, states, currents):
    # counters = [burn-in steps left, steps in current block, next record index]
    s = x.shape[0]
    m = w.shape[1]
    c = h.shape[0]
    n_records = currents.shape[0]
    record_states = states.shape[0] > 0
    xn = np.empty_like(x)
    for t in range(w.shape[0]):
        if counters[0] > 0:
            counters[0] -= 1
        elif counters[2] < n_records:
            r = counters[2]
            if counters[1] == 0 and record_states:
                for i in range(s):
                    states[r, i] = x[i]
            for i in range(c):
                y = h[i, 0] * x[0]
                for j in range(1, s):
                    y += h[i, j] * x[j]
                for j in range(m):
                    y += k[i, j] * w[t, j]
                acc[i] += y
            counters[1] += 1
            if counters[1] == every:
                for i in range(c):
                    currents[r, i] = acc[i] / every
                    acc[i] = 0.0
                counters[1] = 0
                counters[2] += 1
        for i in range(s):
            v = phi[i, 0] * x[0]
            for j in range(1, s):
                v += phi[i, j] * x[j]
            for j in range(m):
                v += g[i, j] * w[t, j]
            xn[i] = v
        for i in range(s):
            x[i] = xn[i]


@dataclass
class TrajectoryEnsemble:
    """Sampled states and photocurrent fluctuations of independent trajectories.

    ``states[j, r]`` is the state at the start of record ``r`` of trajectory
    ``j``; ``currents[j, r]`` is the photocurrent averaged over that record's
    ``record_every`` integration steps, built from the same noise draws as
    the state update.
    """

    dt: float
    t_max: float
    n_traj: int
    seed: int
    record_every: int
    burn_in: float
    mode: str
    states: np.ndarray
    currents: np.ndarray
    state_labels: tuple[str, ...]
    channel_labels: tuple[str, ...]
    shot_levels: np.ndarray
    system_digest: str

    @property
    def sample_interval(self) -> float:
        return self.dt * self.record_every

    @property
    def n_records(self) -> int:
        return self.currents.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_records) * self.sample_interval

    def metadata(self) -> dict:
        return {
            "dt": self.dt,
            "t_max": self.t_max,
            "n_traj": self.n_traj,
            "seed": self.seed,
            "record_every": self.record_every,
            "burn_in": self.burn_in,
            "mode": self.mode,
            "system_digest": self.system_digest,
        }

    def to_csv(self, path, trajectory: int = 0) -> Path:
        """Dump one trajectory (time, state and current columns) for debugging."""
        cols = {"t": self.times}
        for arr, labels in ((self.states, self.state_labels), (self.currents, self.channel_labels)):
            if arr.shape[1] == 0:
                continue
            for i, label in enumerate(labels):
                data = arr[trajectory, :, i]
                if np.iscomplexobj(data):
                    cols[f"{label}_re"], cols[f"{label}_im"] = data.real, data.imag
                else:
                    cols[label] = data
        return io.write_csv(path, cols)


def worker_count(requested: int | None = None) -> int:
    """Number of worker threads, capped by the ``LUMISPEC_THREADS`` environment variable."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("LUMISPEC_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def check_budget(system: LinearNoiseSystem, dt: float, t_max: float) -> tuple[float, float]:
    """Validate ``dt`` against the drift spectrum; return (spectral radius, slowest relaxation time)."""
    eig = np.linalg.eigvals(system.drift)
    if np.any(eig.real >= 0):
        raise UnstableSystemError(f"drift matrix has eigenvalues {eig} with non-negative real part")
    radius = float(np.max(np.abs(eig)))
    if not dt > 0 or dt > STABILITY_FACTOR / radius * (1 + 1e-12):
        raise BudgetError(f"dt={dt} exceeds {STABILITY_FACTOR}/rho(A) = {STABILITY_FACTOR / radius:.4g}")
    tau = 1.0 / float(np.min(np.abs(eig.real)))
    if t_max < MIN_RELAXATION_TIMES * tau:
        warnings.warn(
            f"t_max={t_max} is shorter than {MIN_RELAXATION_TIMES:g} relaxation times ({tau:.3g} each)",
            BudgetWarning,
            stacklevel=3,
        )
    return radius, tau


def simulate(
    system: LinearNoiseSystem,
    dt: float,
    t_max: float,
    n_traj: int,
    seed: int,
    *,
    record_every: int = 1,
    burn_in: float | None = None,
    x0=None,
    noise=None,
    record_states: bool = True,
    workers: int | None = None,
) -> TrajectoryEnsemble:
    """Integrate ``dx = A x dt + L dW`` for ``n_traj`` independent trajectories.

    Parameters
    ----------
    system : LinearNoiseSystem
    dt : float
        Euler-Maruyama step, at most ``0.01 / rho(A)``.
    t_max : float
        Recorded duration after burn-in.
    n_traj : int
    seed : int
        Root seed; trajectory ``j`` draws from its own Philox stream spawned
        from it, so results do not depend on ``workers``.
    record_every : int
        Steps per stored record.  Currents are averaged over the record
        (an integrating detector), states are sampled at its start.
    burn_in : float, optional
        Discarded lead-in time; defaults to 10 slowest relaxation times.
    x0 : array_like, optional
        Initial state, zero by default.
    noise : callable, optional
        ``noise(j, count)`` returning ``(count, m)`` standard normal draws for
        trajectory ``j``; called with consecutive chunks.  Replaces the
        internal generator, e.g. to couple runs at different ``dt``.
    record_states : bool
        Store state samples as well as currents.
    workers : int, optional
        Thread count (capped by ``LUMISPEC_THREADS``).

    Raises
    ------
    UnstableSystemError, BudgetError
    """
    _, tau = check_budget(system, dt, t_max)
    if n_traj < 1 or record_every < 1:
        raise BudgetError("n_traj and record_every must be positive")
    burn_in = BURN_IN_RELAXATION_TIMES * tau if burn_in is None else float(burn_in)
    n_burn = int(round(burn_in / dt))
    n_records = int(round(t_max / dt)) // record_every
    total_steps = n_burn + n_records * record_every

    fac = factor_covariance(system.noise_cov)
    dtype = np.complex128 if fac.mode == "complex" else np.float64
    L = fac.factor.astype(dtype)
    phi = np.eye(system.state_dim) + system.drift * dt
    g = np.ascontiguousarray(system.input_map @ L * np.sqrt(dt), dtype=dtype)
    k = np.ascontiguousarray(system.feedthrough @ L / np.sqrt(dt), dtype=dtype)
    h = np.ascontiguousarray(system.output_map.astype(dtype))
    start = np.zeros(system.state_dim, dtype=dtype) if x0 is None else np.asarray(x0, dtype=dtype).ravel()
    m = system.noise_dim

    states = np.zeros((n_traj, n_records if record_states else 0, system.state_dim), dtype=dtype)
    currents = np.zeros((n_traj, n_records, system.n_channels), dtype=dtype)
    children = np.random.SeedSequence(seed).spawn(n_traj)

    def run(j):
        if noise is None:
            rng = np.random.Generator(np.random.Philox(children[j]))
            draw = lambda count: rng.standard_normal((count, m))  # noqa: E731
        else:
            draw = lambda count: np.asarray(noise(j, count), dtype=float).reshape(count, m)  # noqa: E731
        x = start.copy()
        acc = np.zeros(system.n_channels, dtype=dtype)
        counters = np.array([n_burn, 0, 0], dtype=np.int64)
        done = 0
        while done < total_steps:
            count = min(CHUNK_STEPS, total_steps - done)
            w = np.ascontiguousarray(draw(count))
            _em_chunk(x, w, phi, g, h, k, record_every, counters, acc, states[j], currents[j])
            done += count

    n_workers = min(worker_count(workers), n_traj)
    if n_workers == 1:
        for j in range(n_traj):
            run(j)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(run, range(n_traj)))

    return TrajectoryEnsemble(
        dt=float(dt),
        t_max=float(t_max),
        n_traj=int(n_traj),
        seed=int(seed),
        record_every=int(record_every),
        burn_in=burn_in,
        mode=fac.mode,
        states=states,
        currents=currents,
        state_labels=system.state_labels,
        channel_labels=system.channel_labels,
        shot_levels=system.shot_levels.copy(),
        system_digest=system.digest(),
    )
