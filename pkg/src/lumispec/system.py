"""Linear Langevin models of the laser pair as state-space noise systems.

Every configuration is stored as real matrices of the Fourier-domain equations

    -i*omega * x = A x + B f,        y = C x + E f,

with white sources ``f`` whose pairwise correlators are ``D * delta(t - t')``.
Because the sources come from a Glauber P-representation, ``D`` can be
indefinite.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .model import LaserParams, SteadyState, steady_state

__all__ = [
    "LinearNoiseSystem",
    "CONFIGURATIONS",
    "build",
    "build_coupled",
    "build_isolated_2l",
    "build_feedback_isolated",
    "build_feedback_coupled",
    "psd_classify",
    "perturb_drift",
]

SYMMETRY_TOL = 1e-14


def _frozen(a, ndim):
    arr = np.array(a, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LinearNoiseSystem:
    """Immutable state-space description consumed by the spectral and Monte Carlo engines."""

    drift: np.ndarray
    input_map: np.ndarray
    output_map: np.ndarray
    feedthrough: np.ndarray
    noise_cov: np.ndarray
    shot_levels: np.ndarray
    state_labels: tuple[str, ...]
    source_labels: tuple[str, ...]
    channel_labels: tuple[str, ...]
    name: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for attr in ("drift", "input_map", "output_map", "feedthrough", "noise_cov"):
            object.__setattr__(self, attr, _frozen(getattr(self, attr), 2))
        object.__setattr__(self, "shot_levels", _frozen(self.shot_levels, 1))
        for attr in ("state_labels", "source_labels", "channel_labels"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))

        s, m, c = self.state_dim, self.noise_dim, self.n_channels
        expected = {
            "drift": (s, s),
            "input_map": (s, m),
            "output_map": (c, s),
            "feedthrough": (c, m),
            "noise_cov": (m, m),
        }
        for attr, shape in expected.items():
            if getattr(self, attr).shape != shape:
                raise ValueError(f"{attr} has shape {getattr(self, attr).shape}, expected {shape}")
        if self.shot_levels.shape != (c,) or len(self.state_labels) != s or len(self.source_labels) != m:
            raise ValueError("label or shot-level lengths do not match the matrix dimensions")
        for attr in expected:
            if not np.all(np.isfinite(getattr(self, attr))):
                raise ValueError(f"{attr} contains non-finite entries")
        D = self.noise_cov
        if np.max(np.abs(D - D.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.max(np.abs(D), initial=0.0)):
            raise ValueError("noise_cov must be symmetric")
        if not np.all(self.shot_levels > 0):
            raise ValueError("shot_levels must be strictly positive for every channel")

    @property
    def state_dim(self) -> int:
        return self.drift.shape[0]

    @property
    def noise_dim(self) -> int:
        return self.noise_cov.shape[0]

    @property
    def n_channels(self) -> int:
        return len(self.channel_labels)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "drift": self.drift.tolist(),
            "input_map": self.input_map.tolist(),
            "output_map": self.output_map.tolist(),
            "feedthrough": self.feedthrough.tolist(),
            "noise_cov": self.noise_cov.tolist(),
            "shot_levels": self.shot_levels.tolist(),
            "state_labels": list(self.state_labels),
            "source_labels": list(self.source_labels),
            "channel_labels": list(self.channel_labels),
            "meta": self.meta,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> LinearNoiseSystem:
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> LinearNoiseSystem:
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; identifies the system in provenance records."""
        return hashlib.sha256(self.to_json(sort_keys=True).encode()).hexdigest()

    def equals(self, other: LinearNoiseSystem) -> bool:
        """Matrix-by-matrix equality, ignoring ``name`` and ``meta``."""
        same_arrays = all(
            np.array_equal(getattr(self, a), getattr(other, a))
            for a in ("drift", "input_map", "output_map", "feedthrough", "noise_cov", "shot_levels")
        )
        return same_arrays and (self.state_labels, self.source_labels, self.channel_labels) == (
            other.state_labels,
            other.source_labels,
            other.channel_labels,
        )


def _steady(params, steady):
    return steady_state(params) if steady is None else steady


def _coupled_cov(params: LaserParams, st: SteadyState) -> np.ndarray:
    k, kt, k0 = params.kappa, params.kappa_tilde, params.kappa0
    D = np.zeros((4, 4))
    D[0, 0] = 2.0 * params.xi * (k + k0) * st.n
    D[1, 1] = -2.0 * kt * st.n_tilde
    D[0, 1] = D[1, 0] = kt * st.n_tilde
    D[2, 2] = k * st.n
    D[3, 3] = kt * st.n_tilde
    return D


def _coupled(params: LaserParams, st: SteadyState, lam: float, name: str) -> LinearNoiseSystem:
    k, kt, k0 = params.kappa, params.kappa_tilde, params.kappa0
    if k0 <= 0 or kt <= 0:
        raise ParameterError("the coupled configuration needs kappa0 > 0 and kappa_tilde > 0")
    return LinearNoiseSystem(
        drift=[[-(k + k0) * (1.0 + lam), kt], [k0, -2.0 * kt]],
        input_map=[[1.0, 0.0, -lam * (1.0 + k0 / k), 0.0], [0.0, 1.0, 0.0, 0.0]],
        output_map=[[k, 0.0], [0.0, kt]],
        feedthrough=[[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
        noise_cov=_coupled_cov(params, st),
        shot_levels=[st.i_bar, st.i_tilde_bar],
        state_labels=("eps", "eps_tilde"),
        source_labels=("F", "F_tilde", "S", "S_tilde"),
        channel_labels=("i", "i_tilde"),
        name=name,
        meta={"params": params.to_dict(), "n": st.n, "n_tilde": st.n_tilde},
    )


def _single(params: LaserParams, n: float, lam: float, name: str) -> LinearNoiseSystem:
    k = params.kappa
    return LinearNoiseSystem(
        drift=[[-k * (1.0 + lam)]],
        input_map=[[1.0, -lam]],
        output_map=[[k]],
        feedthrough=[[0.0, 1.0]],
        noise_cov=[[2.0 * params.xi * k * n, 0.0], [0.0, k * n]],
        shot_levels=[k * n],
        state_labels=("eps",),
        source_labels=("F", "S"),
        channel_labels=("i",),
        name=name,
        meta={"params": params.to_dict(), "n": n},
    )


def build_coupled(params: LaserParams, steady: SteadyState | None = None) -> LinearNoiseSystem:
    """Two-level laser coherently pumping the three-level laser, no feedback."""
    if params.lambda_fb != 0:
        raise ParameterError("build_coupled requires lambda_fb = 0; use build_feedback_coupled")
    return _coupled(params, _steady(params, steady), 0.0, "coupled")


def _isolated_n(params, steady):
    if steady is not None:
        return steady.n
    return steady_state(params.replace(kappa0=0.0, kappa_tilde=0.0)).n


def build_isolated_2l(params: LaserParams, steady: SteadyState | None = None) -> LinearNoiseSystem:
    """Two-level laser alone (``kappa0 = kappa_tilde = 0``).

    Without ``steady`` the photon number is ``R / kappa``, the isolated-laser balance.
    """
    if params.lambda_fb != 0:
        raise ParameterError("build_isolated_2l requires lambda_fb = 0; use build_feedback_isolated")
    return _single(params, _isolated_n(params, steady), 0.0, "isolated_2l")


def build_feedback_isolated(params: LaserParams, steady: SteadyState | None = None) -> LinearNoiseSystem:
    """Isolated two-level laser whose pump is modulated by its own photocurrent.

    The detection noise ``S`` drives the state with weight ``-lambda`` and
    reaches the output directly; both uses share source index 1.
    """
    return _single(params, _isolated_n(params, steady), params.lambda_fb, "fb_isolated")


def build_feedback_coupled(params: LaserParams, steady: SteadyState | None = None) -> LinearNoiseSystem:
    """Coupled pair with the two-level laser in the feedback loop.

    The 2-laser photocurrent (full output, no beamsplitter) modulates the
    pump, so ``S`` enters the ``eps`` row with weight ``-lambda*(1 + kappa0/kappa)``.
    The three-level rows carry no feedback term.
    """
    return _coupled(params, _steady(params, steady), params.lambda_fb, "fb_coupled")


CONFIGURATIONS = {
    "coupled": build_coupled,
    "isolated_2l": build_isolated_2l,
    "fb_isolated": build_feedback_isolated,
    "fb_coupled": build_feedback_coupled,
}


def build(configuration: str, params: LaserParams, steady: SteadyState | None = None) -> LinearNoiseSystem:
    try:
        builder = CONFIGURATIONS[configuration]
    except KeyError:
        raise ParameterError(
            f"unknown configuration {configuration!r}; choose from {sorted(CONFIGURATIONS)}"
        ) from None
    return builder(params, steady)


def psd_classify(D, tol: float = 1e-12) -> str:
    """Return ``"psd"`` if every eigenvalue of symmetric ``D`` is >= ``-tol * max|eig|``, else ``"indefinite"``."""
    eig = np.linalg.eigvalsh(np.asarray(D, dtype=float))
    scale = np.max(np.abs(eig), initial=0.0)
    return "psd" if np.all(eig >= -tol * scale) else "indefinite"


def perturb_drift(system: LinearNoiseSystem, row: int = 0, col: int = 0, rel: float = 0.01) -> LinearNoiseSystem:
    """Copy of ``system`` with one drift entry scaled by ``1 + rel``; used for fault injection."""
    drift = system.drift.copy()
    drift[row, col] *= 1.0 + rel
    data = system.to_dict()
    data["drift"] = drift
    data["name"] = system.name + "+fault"
    return LinearNoiseSystem.from_dict(data)
