"""Physical parameters of the coupled two-level / three-level laser pair.

All rates are measured in units of the two-level cavity width, so the
default ``kappa`` is 1 and every other rate is a multiple of it.  The
normalised spectra computed elsewhere in the package depend only on rate
ratios and the Mandel parameter ``xi``; ``pump_rate`` fixes the absolute
photon numbers, which matter only for the validity of the linearisation.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any, NamedTuple

from .errors import ConfigError, InconsistentSteadyStateError, ParameterError

__all__ = [
    "RegimeWarning",
    "MicroParams",
    "LaserParams",
    "SteadyState",
    "PumpStatistics",
    "steady_state",
    "kappa0_from_micro",
    "xi_from_pump",
    "params_from_mapping",
    "load_params",
    "load_config",
]

MIN_PHOTON_NUMBER = 100.0
DEFAULT_DECAY_RATIO = 0.1


class RegimeWarning(UserWarning):
    """Parameters sit at or beyond the edge of the linearised model's validity."""


@dataclass(frozen=True)
class MicroParams:
    """Microscopic constants of the three-level medium.

    Only used to derive the coherent excitation rate ``kappa0``.
    ``max_decay_ratio`` bounds ``gamma2_tilde / gamma1_tilde``.
    """

    gamma2_tilde: float
    gamma1_tilde: float
    g13_tilde: float
    g12_tilde: float
    N_tilde: float
    n_tilde: float
    max_decay_ratio: float = DEFAULT_DECAY_RATIO

    def __post_init__(self):
        for name in ("gamma2_tilde", "gamma1_tilde", "g13_tilde", "g12_tilde", "N_tilde"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"micro.{name} must be positive and finite, got {value!r}")
        if not (math.isfinite(self.n_tilde) and self.n_tilde >= 0):
            raise ParameterError(f"micro.n_tilde must be non-negative, got {self.n_tilde!r}")
        ratio = self.gamma2_tilde / self.gamma1_tilde
        if ratio > self.max_decay_ratio:
            raise ParameterError(
                f"gamma2_tilde/gamma1_tilde = {ratio:g} exceeds {self.max_decay_ratio:g}; "
                "the saturation formulas need gamma2_tilde << gamma1_tilde"
            )


def kappa0_from_micro(micro: MicroParams) -> float:
    """Mean coherent-excitation rate ``gamma2 * (g13/g12)**2 * N / n`` of the 3-laser medium."""
    if micro.n_tilde == 0:
        raise ZeroDivisionError("micro.n_tilde is zero; kappa0 is undefined")
    return micro.gamma2_tilde * (micro.g13_tilde / micro.g12_tilde) ** 2 * micro.N_tilde / micro.n_tilde


class PumpStatistics(NamedTuple):
    xi: float
    label: str


def _pump_label(p: float) -> str:
    if p == 0:
        return "Poissonian"
    return "sub-Poissonian" if p > 0 else "super-Poissonian"


def xi_from_pump(p: float) -> PumpStatistics:
    """Convert the pump-statistics parameter ``p`` into the Mandel parameter ``xi = -p/2``.

    ``p = 1`` (a perfectly regular pump) is accepted with a :class:`RegimeWarning`;
    larger values raise :class:`ParameterError`.
    """
    if not math.isfinite(p) or p > 1:
        raise ParameterError(f"pump parameter p must satisfy p <= 1, got {p!r}")
    if p == 1:
        warnings.warn("p = 1 (xi = -1/2) is the regular-pump boundary", RegimeWarning, stacklevel=2)
    return PumpStatistics(-p / 2.0, _pump_label(p))


@dataclass(frozen=True)
class LaserParams:
    """Rates and statistical parameters of the coupled laser pair.

    Parameters
    ----------
    kappa : float
        Mode width of the two-level (pump) laser cavity.
    kappa_tilde : float
        Mode width of the three-level laser cavity.
    kappa0 : float, optional
        Coherent excitation rate of the three-level medium.  Derived from
        ``micro`` when omitted.
    xi : float
        Mandel parameter of the two-level laser, ``xi >= -1/2``.
    pump_rate : float
        Mean incoherent pump rate ``R`` of the two-level laser.
    lambda_fb : float
        Optoelectronic feedback strength; 0 disables feedback.
    micro : MicroParams, optional
    gamma1, gamma2 : float, optional
        Two-level medium decay rates.  Recorded for provenance, not used.
    """

    kappa: float = 1.0
    kappa_tilde: float = 1.0
    kappa0: float | None = None
    xi: float = 0.0
    pump_rate: float = 1.0e5
    lambda_fb: float = 0.0
    micro: MicroParams | None = None
    gamma1: float | None = None
    gamma2: float | None = None

    def __post_init__(self):
        if self.kappa0 is None:
            if self.micro is None:
                raise ParameterError("either kappa0 or micro must be given")
            object.__setattr__(self, "kappa0", kappa0_from_micro(self.micro))
        for name in ("kappa", "kappa_tilde", "kappa0", "xi", "pump_rate", "lambda_fb"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.kappa <= 0:
            raise ParameterError(f"kappa must be positive, got {self.kappa}")
        if self.pump_rate <= 0:
            raise ParameterError(f"pump_rate must be positive, got {self.pump_rate}")
        for name in ("kappa_tilde", "kappa0", "lambda_fb"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.xi < -0.5:
            raise ParameterError(f"xi must satisfy xi >= -1/2 (p <= 1), got {self.xi}")
        if self.xi == -0.5:
            warnings.warn("xi = -1/2 (p = 1) is the regular-pump boundary", RegimeWarning, stacklevel=3)

    @classmethod
    def from_pump(cls, p: float, **kwargs) -> LaserParams:
        return cls(xi=xi_from_pump(p).xi, **kwargs)

    @property
    def p(self) -> float:
        """Pump-statistics parameter, ``-2 * xi``."""
        return -2.0 * self.xi

    @property
    def pump_statistics(self) -> str:
        return _pump_label(self.p)

    def replace(self, **changes) -> LaserParams:
        """Return a copy with fields replaced; ``p=`` is translated to ``xi``."""
        if "p" in changes:
            if "xi" in changes:
                raise ParameterError("give either p or xi, not both")
            changes["xi"] = -changes.pop("p") / 2.0
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["p"] = self.p
        return out


@dataclass(frozen=True)
class SteadyState:
    """Semiclassical photon numbers and mean photocurrents."""

    n: float
    n_tilde: float
    i_bar: float
    i_tilde_bar: float


def steady_state(params: LaserParams) -> SteadyState:
    """Solve the balance equations ``kappa_t * n_t = kappa0 * n`` and ``(kappa + kappa0) * n = R``.

    Raises
    ------
    InconsistentSteadyStateError
        If ``kappa_tilde == 0`` while ``kappa0 > 0``: the three-level mode
        would have to hold infinitely many photons.
    """
    n = params.pump_rate / (params.kappa + params.kappa0)
    if params.kappa_tilde > 0:
        n_tilde = params.kappa0 * n / params.kappa_tilde
    elif params.kappa0 == 0:
        n_tilde = 0.0
    else:
        raise InconsistentSteadyStateError(
            "kappa_tilde = 0 with kappa0 > 0 leaves the three-level photon number unbounded"
        )
    if n < MIN_PHOTON_NUMBER or (params.kappa0 > 0 and n_tilde < MIN_PHOTON_NUMBER):
        warnings.warn(
            f"photon numbers n={n:.3g}, n_tilde={n_tilde:.3g} are not >> 1; "
            "the small-fluctuation linearisation is questionable",
            RegimeWarning,
            stacklevel=2,
        )
    return SteadyState(n=n, n_tilde=n_tilde, i_bar=params.kappa * n, i_tilde_bar=params.kappa_tilde * n_tilde)


# --- configuration ingestion -------------------------------------------------

_PARAM_KEYS = {"kappa", "kappa_tilde", "kappa0", "xi", "p", "pump_rate", "lambda_fb", "gamma1", "gamma2"}
_MICRO_KEYS = {f.name for f in dataclasses.fields(MicroParams)}


def params_from_mapping(mapping: Mapping[str, Any], *, ignore=()) -> LaserParams:
    """Build :class:`LaserParams` from a flat mapping of documented key names.

    ``micro`` may be a nested table or dotted keys (``micro.gamma2_tilde``).
    Keys listed in ``ignore`` (command blocks of a run config) are skipped;
    anything else unknown is a :class:`ConfigError`.
    """
    kwargs: dict[str, Any] = {}
    micro: dict[str, Any] = {}
    for key, value in mapping.items():
        if key in ignore:
            continue
        if key == "micro":
            if not isinstance(value, Mapping):
                raise ConfigError("micro must be a table")
            micro.update(value)
        elif key.startswith("micro."):
            micro[key.split(".", 1)[1]] = value
        elif key in _PARAM_KEYS:
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown parameter key {key!r}")
    unknown = set(micro) - _MICRO_KEYS
    if unknown:
        raise ConfigError(f"unknown micro keys: {sorted(unknown)}")
    if "p" in kwargs:
        p = kwargs.pop("p")
        if "xi" in kwargs:
            if not math.isclose(p, -2.0 * kwargs["xi"], rel_tol=1e-12, abs_tol=1e-15):
                raise ConfigError(f"p={p} and xi={kwargs['xi']} violate p = -2*xi")
        else:
            try:
                kwargs["xi"] = xi_from_pump(float(p)).xi
            except ParameterError as exc:
                raise ConfigError(str(exc)) from exc
    try:
        if micro:
            kwargs["micro"] = MicroParams(**micro)
        return LaserParams(**kwargs)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a TOML run configuration into a plain dictionary."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc


def load_params(path: str | Path, *, ignore=()) -> LaserParams:
    return params_from_mapping(load_config(path), ignore=ignore)
