"""Photocurrent spectra: exact transfer-function engine and closed-form references.

Spectra are two-sided and follow the delta-function convention

    <y(omega) y(omega')> = S(omega) * delta(omega + omega'),

with the symmetric ``1/sqrt(2*pi)`` Fourier transform, so a white source with
correlator ``c * delta(t - t')`` has ``S = c``.  By default every channel is
divided by its mean current (the shot level), making 1 the shot floor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .errors import NumericalError, ParameterError, SingularResolventError
from .model import LaserParams, SteadyState
from .system import (
    LinearNoiseSystem,
    build_coupled,
    build_feedback_coupled,
    build_feedback_isolated,
    build_isolated_2l,
)

__all__ = [
    "SpectrumCurve",
    "transfer_spectrum",
    "closed_form",
    "CLOSED_FORMS",
    "PairResult",
    "ValidationReport",
    "validate_engine",
    "validate_limits",
    "random_draws",
    "max_rel_dev",
]

IMAG_TOL = 1e-10
EXACT_TOL = 1e-10


@dataclass
class SpectrumCurve:
    """Spectral values on a frequency grid, one row per photocurrent channel."""

    omega: np.ndarray
    values: np.ndarray
    channel_labels: tuple[str, ...]
    meta: dict = field(default_factory=dict)
    cross: np.ndarray | None = None

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.channel_labels = tuple(self.channel_labels)
        if self.values.shape != (len(self.channel_labels), self.omega.size):
            raise ValueError(f"values shape {self.values.shape} does not match labels/grid")

    def __getitem__(self, label: str) -> np.ndarray:
        return self.values[self.channel_labels.index(label)]

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"omega": self.omega}
        cols.update(zip(self.channel_labels, self.values))
        return cols

    def to_csv(self, path, comment: str | None = None) -> Path:
        return io.write_csv(path, self.columns(), comment)

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "channels": dict(zip(self.channel_labels, self.values)),
            "meta": self.meta,
        }

    def to_json(self, path) -> Path:
        return io.write_json(path, self.to_dict())


def _grid(grid) -> np.ndarray:
    omega = np.atleast_1d(np.asarray(grid, dtype=float))
    if omega.ndim != 1 or not np.all(np.isfinite(omega)):
        raise ValueError("frequency grid must be a finite 1-D sequence")
    return omega


def transfer_matrix(system: LinearNoiseSystem, grid, *, feedthrough: bool = True) -> np.ndarray:
    """``M(omega) = C (-i*omega*I - A)^-1 B + E`` stacked over the grid, shape ``(G, c, m)``.

    Each grid point is solved by LU with partial pivoting.
    """
    omega = _grid(grid)
    s = system.state_dim
    resolvent = -1j * omega[:, None, None] * np.eye(s) - system.drift
    cond = np.linalg.cond(resolvent)
    bad = ~np.isfinite(cond) | (cond > 1.0 / np.finfo(float).eps)
    if np.any(bad):
        raise SingularResolventError(float(omega[np.argmax(bad)]))
    X = np.linalg.solve(resolvent, np.broadcast_to(system.input_map, (omega.size,) + system.input_map.shape))
    M = system.output_map @ X
    if feedthrough:
        M = M + system.feedthrough
    return M


def transfer_spectrum(
    system: LinearNoiseSystem,
    grid,
    *,
    normalize: bool = True,
    full: bool = False,
    detector: str = "in_loop",
) -> SpectrumCurve:
    """Exact stationary spectra of every output channel.

    Parameters
    ----------
    system : LinearNoiseSystem
    grid : array_like
        Angular frequencies.
    normalize : bool
        Divide each channel by its shot level (default).  ``False`` returns
        raw delta-function coefficients.
    full : bool
        Also attach the cross-spectral matrices ``M D M^H`` as ``curve.cross``,
        shape ``(G, c, c)``, normalised by ``sqrt(shot_a * shot_b)``.
    detector : {"in_loop", "out_of_loop"}
        ``"in_loop"`` reports the currents ``C x + E f`` exactly as built,
        including the detection noise that feedback re-injects.
        ``"out_of_loop"`` reports what an independent ideal detector on the
        same beam would record: the field part ``C x`` plus its own
        uncorrelated shot noise.  The two coincide without feedback.

    Raises
    ------
    SingularResolventError
        ``-i*omega*I - A`` is singular at some grid point.
    NumericalError
        A diagonal spectral value has an imaginary residue above ``1e-10``
        of its magnitude scale.
    """
    if detector not in ("in_loop", "out_of_loop"):
        raise ValueError(f"unknown detector {detector!r}")
    omega = _grid(grid)
    M = transfer_matrix(system, omega, feedthrough=detector == "in_loop")
    D = system.noise_cov
    S = M @ D @ np.conj(np.swapaxes(M, 1, 2))
    diag = np.diagonal(S, axis1=1, axis2=2)
    scale = np.diagonal(np.abs(M) @ np.abs(D) @ np.swapaxes(np.abs(M), 1, 2), axis1=1, axis2=2)
    if np.any(np.abs(diag.imag) > IMAG_TOL * np.maximum(scale, np.abs(diag))):
        raise NumericalError("spectral diagonal has a non-negligible imaginary part")
    values = diag.real.T.copy()
    shot = system.shot_levels
    if detector == "out_of_loop":
        values += shot[:, None]
    cross = None
    if full:
        cross = S.copy()
        if detector == "out_of_loop":
            cross += np.diag(shot)
    if normalize:
        values /= shot[:, None]
        if cross is not None:
            cross /= np.sqrt(np.outer(shot, shot))
    meta = {
        "source": "transfer",
        "system": system.name,
        "detector": detector,
        "normalized": normalize,
        "system_digest": system.digest(),
    }
    return SpectrumCurve(omega, values, system.channel_labels, meta, cross)


# --- closed forms ------------------------------------------------------------


def _delta_sq(w2, k, kt, k0):
    return (w2 - kt * (2 * k + k0)) ** 2 + w2 * (2 * kt + k + k0) ** 2


def _coupled_3l(w2, P):
    k, kt, k0, xi = P.kappa, P.kappa_tilde, P.kappa0, P.xi
    return {"i_tilde": 1 - 2 * kt**2 * (w2 + (k + k0) * (k - k0 * xi)) / _delta_sq(w2, k, kt, k0)}


def _coupled_2l(w2, P):
    k, kt, k0, xi = P.kappa, P.kappa_tilde, P.kappa0, P.xi
    num = k0 * kt**2 + xi * (k + k0) * (w2 + 4 * kt**2)
    return {"i": 1 + 2 * k * num / _delta_sq(w2, k, kt, k0)}


def _isolated_2l(w2, P):
    k = P.kappa
    return {"i": 1 + 2 * P.xi * k**2 / (w2 + k**2)}


def _low_pump_3l(w2, P):
    k, kt = P.kappa, P.kappa_tilde
    return {"i_tilde": 1 - 2 * kt**2 * (w2 + k**2) / ((w2 - 2 * kt * k) ** 2 + w2 * (2 * kt + k) ** 2)}


def _ips_limit_3l(w2, P):
    k, k0, xi = P.kappa, P.kappa0, P.xi
    return {
        "i_tilde": 1 + 2 * xi * k**2 * (w2 + k0**2) / ((w2 - k * k0) ** 2 + w2 * k0**2),
        "i_tilde_lorentzian": 1 + 2 * xi * k**2 / (w2 + k**2),
    }


def _fb_isolated(w2, P):
    k, lam = P.kappa, P.lambda_fb
    return {"i": 1 - k**2 * ((1 + lam) ** 2 - 1) / (w2 + (1 + lam) ** 2 * k**2)}


def _fb_den(w2, k, lam):
    return w2 * (1 + lam) ** 2 + k**2 * (1 + 2 * lam) ** 2


def _fb_coupled_2l(w2, P):
    k, k0, lam = P.kappa, P.kappa0, P.lambda_fb
    return {"i": 1 + k**2 / k0**2 * (-2 * k**2 + 4 * lam**2 * k0**2) / _fb_den(w2, k, lam)}


def _fb_coupled_3l(w2, P):
    k, k0, lam = P.kappa, P.kappa0, P.lambda_fb
    return {"i_tilde": 1 - k / k0 * (2 * k**2 + 2 * lam * k * k0 - lam**2 * k0**2) / _fb_den(w2, k, lam)}


def _fb_coupled_3l_high_lambda(w2, P):
    k, k0 = P.kappa, P.kappa0
    return {"i_tilde": 1 + k * k0 / (w2 + 4 * k**2)}


def _ratios(P, *names):
    available = {
        "kappa0/kappa": P.kappa0 / P.kappa,
        "kappa/kappa0": P.kappa / P.kappa0 if P.kappa0 > 0 else np.inf,
        "kappa_tilde/kappa": P.kappa_tilde / P.kappa,
        "lambda": P.lambda_fb,
        "1/lambda": 1.0 / P.lambda_fb if P.lambda_fb > 0 else np.inf,
        "xi": P.xi,
    }
    return {n: available[n] for n in names}


# kind -> (formula, is_limit, validity ratios recorded, description)
CLOSED_FORMS = {
    "coupled_3l": (_coupled_3l, False, (), "three-level channel, arbitrary rates"),
    "coupled_2l": (_coupled_2l, False, (), "two-level channel, arbitrary rates"),
    "isolated_2l": (_isolated_2l, False, (), "isolated two-level laser"),
    "low_pump_3l": (_low_pump_3l, True, ("kappa0/kappa",), "three-level channel, kappa0 << kappa"),
    "ips_limit_3l": (
        _ips_limit_3l,
        True,
        ("kappa/kappa0", "kappa_tilde/kappa"),
        "three-level channel, kappa0 >> kappa = kappa_tilde; exact-in-limit and Lorentzian forms",
    ),
    "fb_isolated": (_fb_isolated, False, ("lambda",), "isolated two-level laser in the feedback loop, xi = 0"),
    "fb_coupled_2l": (
        _fb_coupled_2l,
        True,
        ("kappa/kappa0", "kappa_tilde/kappa", "lambda"),
        "two-level photon flux with feedback, kappa0 >> kappa = kappa_tilde, xi = 0",
    ),
    "fb_coupled_3l": (
        _fb_coupled_3l,
        True,
        ("kappa/kappa0", "kappa_tilde/kappa", "lambda"),
        "three-level channel with feedback, kappa0 >> kappa = kappa_tilde, xi = 0",
    ),
    "fb_coupled_3l_high_lambda": (
        _fb_coupled_3l_high_lambda,
        True,
        ("kappa/kappa0", "kappa_tilde/kappa", "1/lambda"),
        "three-level channel, strong feedback lambda >> 1",
    ),
}


def closed_form(kind: str, params: LaserParams, steady: SteadyState | None, grid) -> SpectrumCurve:
    """Evaluate a closed-form shot-normalised spectrum on ``grid``.

    ``steady`` is accepted for signature symmetry with the builders; the
    normalised formulas depend on rates and ``xi`` only.  Limit kinds carry
    the ratios that control their accuracy in ``meta["validity"]``.
    """
    try:
        formula, is_limit, ratio_names, description = CLOSED_FORMS[kind]
    except KeyError:
        raise ParameterError(f"unknown closed form {kind!r}; choose from {sorted(CLOSED_FORMS)}") from None
    omega = _grid(grid)
    channels = formula(omega**2, params)
    values = np.vstack([np.broadcast_to(v, omega.shape) for v in channels.values()])
    meta = {
        "source": "closed_form",
        "kind": kind,
        "description": description,
        "limit": is_limit,
        "validity": _ratios(params, *ratio_names),
        "normalized": True,
    }
    return SpectrumCurve(omega, values, tuple(channels), meta)


# --- engine validation ---------------------------------------------------------


def max_rel_dev(a, b) -> float:
    """``max |a - b| / |b|``, falling back to the absolute difference where ``b == 0``."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    denom = np.where(b == 0, 1.0, np.abs(b))
    return float(np.max(np.abs(a - b) / denom))


@dataclass
class PairResult:
    name: str
    builder: str
    kind: str
    channel: str
    exact: bool
    max_rel_dev: float
    tolerance: float | None
    validity: dict

    @property
    def passed(self) -> bool | None:
        if self.tolerance is None:
            return None
        return bool(self.max_rel_dev < self.tolerance)


@dataclass
class ValidationReport:
    entries: list[PairResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries if e.exact)

    def extend(self, other: ValidationReport) -> None:
        self.entries.extend(other.entries)

    def worst(self, name: str) -> float:
        return max(e.max_rel_dev for e in self.entries if e.name == name)

    def format_table(self) -> str:
        lines = [f"{'pair':<34} {'type':<6} {'max rel dev':>12} {'tol':>8}  result"]
        for e in self.entries:
            tol = f"{e.tolerance:.0e}" if e.tolerance is not None else "-"
            verdict = {True: "PASS", False: "FAIL", None: "report"}[e.passed]
            lines.append(f"{e.name:<34} {'exact' if e.exact else 'limit':<6} {e.max_rel_dev:12.3e} {tol:>8}  {verdict}")
        return "\n".join(lines)


def _pair(name, builder, system, kind, params, grid, channel, *, detector="in_loop", ref_channel=None):
    engine = transfer_spectrum(system, grid, detector=detector)
    ref = closed_form(kind, params, None, grid)
    exact = not ref.meta["limit"]
    return PairResult(
        name=name,
        builder=builder,
        kind=kind,
        channel=channel,
        exact=exact,
        max_rel_dev=max_rel_dev(engine[channel], ref[ref_channel or channel]),
        tolerance=EXACT_TOL if exact else None,
        validity=ref.meta["validity"],
    )


def validate_engine(params: LaserParams, grid=None, *, system_hook=None) -> ValidationReport:
    """Compare the transfer engine with every applicable closed form.

    Exact pairs must agree to ``1e-10`` relative.  Limit pairs only report
    their deviation next to the ratio that controls it.  Feedback pairs are
    evaluated at ``xi = 0``, the case the feedback formulas describe.
    ``system_hook`` maps each built system before evaluation (fault injection).
    """
    grid = np.linspace(0.0, 10.0, 201) if grid is None else grid
    hook = system_hook or (lambda s: s)
    report = ValidationReport()
    plain = params.replace(lambda_fb=0.0)
    fb0 = params.replace(xi=0.0)

    def add(*args, **kwargs):
        report.entries.append(_pair(*args, **kwargs))

    add("isolated_2l vs isolated_2l", "build_isolated_2l", hook(build_isolated_2l(plain)), "isolated_2l", plain, grid, "i")
    add("fb_isolated vs fb_isolated", "build_feedback_isolated", hook(build_feedback_isolated(fb0)), "fb_isolated", fb0, grid, "i")
    if params.kappa0 > 0 and params.kappa_tilde > 0:
        coupled = hook(build_coupled(plain))
        add("coupled[i_tilde] vs coupled_3l", "build_coupled", coupled, "coupled_3l", plain, grid, "i_tilde")
        add("coupled[i] vs coupled_2l", "build_coupled", coupled, "coupled_2l", plain, grid, "i")
        add("coupled[i_tilde] vs low_pump_3l", "build_coupled", coupled, "low_pump_3l", plain, grid, "i_tilde")
        add("coupled[i_tilde] vs ips_limit_3l", "build_coupled", coupled, "ips_limit_3l", plain, grid, "i_tilde")
        fbc = hook(build_feedback_coupled(fb0))
        add("fb_coupled[i, out] vs fb_coupled_2l", "build_feedback_coupled", fbc, "fb_coupled_2l", fb0, grid, "i",
            detector="out_of_loop")
        add("fb_coupled[i_tilde] vs fb_coupled_3l", "build_feedback_coupled", fbc, "fb_coupled_3l", fb0, grid, "i_tilde")
        add("fb_coupled[i_tilde] vs high_lambda", "build_feedback_coupled", fbc, "fb_coupled_3l_high_lambda", fb0,
            grid, "i_tilde")
    return report


# (pair name, parameters inside the regime where the limit formula applies)
LIMIT_REGIMES = (
    ("coupled[i_tilde] vs low_pump_3l", LaserParams(kappa0=1e-2, xi=0.4, pump_rate=1e9)),
    ("coupled[i_tilde] vs ips_limit_3l", LaserParams(kappa0=1e3, xi=0.4, pump_rate=1e9)),
    ("fb_coupled[i, out] vs fb_coupled_2l", LaserParams(kappa0=1e3, lambda_fb=1.0, pump_rate=1e9)),
    ("fb_coupled[i_tilde] vs fb_coupled_3l", LaserParams(kappa0=1e3, lambda_fb=1.0, pump_rate=1e9)),
    ("fb_coupled[i_tilde] vs high_lambda", LaserParams(kappa0=1e3, lambda_fb=1e3, pump_rate=1e9)),
)


def validate_limits(grid=None) -> ValidationReport:
    """Deviation of each limit formula from the engine inside its own regime."""
    report = ValidationReport()
    for name, params in LIMIT_REGIMES:
        report.entries.extend(e for e in validate_engine(params, grid).entries if e.name == name)
    return report


def random_draws(n: int = 100, seed: int = 0, *, rate_range=(0.1, 10.0), xi_range=(-0.5, 1.0),
                 lambda_range=(0.0, 10.0), pump_rate: float = 1.0e7) -> list[LaserParams]:
    """Uniform random parameter sets used by the engine cross-checks."""
    rng = np.random.default_rng(seed)
    draws = []
    for _ in range(n):
        k, kt, k0 = rng.uniform(*rate_range, size=3)
        draws.append(
            LaserParams(
                kappa=k,
                kappa_tilde=kt,
                kappa0=k0,
                xi=rng.uniform(*xi_range),
                lambda_fb=rng.uniform(*lambda_range),
                pump_rate=pump_rate,
            )
        )
    return draws
