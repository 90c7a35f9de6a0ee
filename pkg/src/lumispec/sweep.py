"""Parameter scans of the induced-photon-statistics and feedback effects."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .errors import ParameterError
from .model import LaserParams, RegimeWarning
from .montecarlo import worker_count
from .spectra import SpectrumCurve, closed_form, transfer_spectrum
from .system import CONFIGURATIONS, build, build_coupled

__all__ = ["SweepResult", "ips_distance", "fano_zero", "sweep", "apply_parameter"]


def _ips_grid(params):
    return np.linspace(0.0, 3.0 * params.kappa, 301)


def ips_distance(params: LaserParams, grid=None, *, norm: str = "sup", strict: bool = True) -> float:
    """Distance between the three-level spectrum and the isolated two-level one.

    Compares channel ``i_tilde`` of the coupled system with the isolated
    two-level closed form over ``grid`` (default 301 points on
    ``[0, 3*kappa]``).  ``norm="sup"`` takes the maximum absolute difference,
    ``norm="l2"`` the root-mean-square over the grid.

    The comparison is only meaningful for ``kappa == kappa_tilde``; otherwise
    a :class:`ParameterError` is raised, or a warning if ``strict=False``.
    """
    if not math.isclose(params.kappa, params.kappa_tilde, rel_tol=1e-12):
        msg = f"IPS needs kappa == kappa_tilde, got {params.kappa} and {params.kappa_tilde}"
        if strict:
            raise ParameterError(msg)
        warnings.warn(msg, RegimeWarning, stacklevel=2)
    grid = _ips_grid(params) if grid is None else np.asarray(grid, dtype=float)
    if grid.min() < 0 or grid.max() > 3.0 * params.kappa * (1 + 1e-12):
        raise ParameterError("IPS grid must lie within [0, 3*kappa]")
    plain = params.replace(lambda_fb=0.0)
    three = transfer_spectrum(build_coupled(plain), grid)["i_tilde"]
    iso = closed_form("isolated_2l", plain, None, grid)["i"]
    diff = np.abs(three - iso)
    if norm == "sup":
        return float(diff.max())
    if norm == "l2":
        return float(np.sqrt(np.mean(diff**2)))
    raise ValueError(f"unknown norm {norm!r}")


def fano_zero(params: LaserParams, configuration: str, *, detector: str = "in_loop") -> dict[str, float]:
    """Shot-normalised zero-frequency spectrum of every channel of a configuration."""
    if configuration not in CONFIGURATIONS:
        raise ParameterError(f"unknown configuration {configuration!r}; choose from {sorted(CONFIGURATIONS)}")
    if configuration in ("coupled", "isolated_2l"):
        params = params.replace(lambda_fb=0.0)
    curve = transfer_spectrum(build(configuration, params), [0.0], detector=detector)
    return {label: float(v[0]) for label, v in zip(curve.channel_labels, curve.values)}


def apply_parameter(params: LaserParams, name: str, value: float) -> LaserParams:
    """Set one swept parameter; ``kappa0/kappa`` scales ``kappa0`` relative to ``kappa``."""
    if name == "kappa0/kappa":
        return params.replace(kappa0=value * params.kappa)
    if name in ("micro", "gamma1", "gamma2") or (name != "p" and not hasattr(params, name)):
        raise ParameterError(f"cannot sweep {name!r}")
    return params.replace(**{name: value})


@dataclass
class SweepResult:
    parameter: str
    values: np.ndarray
    metrics: dict[str, np.ndarray]
    configuration: str
    curves: list[SpectrumCurve] | None = None
    meta: dict = field(default_factory=dict)

    def __getitem__(self, metric: str) -> np.ndarray:
        return self.metrics[metric]

    def is_monotone(self, metric: str, *, decreasing: bool = True) -> bool:
        """Strict monotonicity of a metric along the sweep order."""
        d = np.diff(self.metrics[metric])
        return bool(np.all(d < 0) if decreasing else np.all(d > 0))

    def columns(self) -> dict[str, np.ndarray]:
        return {self.parameter: self.values, **self.metrics}

    def to_csv(self, path, comment: str | None = None) -> Path:
        return io.write_csv(path, self.columns(), comment)

    def to_json(self, path) -> Path:
        doc = {
            "parameter": self.parameter,
            "configuration": self.configuration,
            "rows": [dict(zip(self.columns(), row)) for row in zip(*self.columns().values())],
            "meta": self.meta,
        }
        if self.curves is not None:
            doc["curves"] = [c.to_dict() for c in self.curves]
        return io.write_json(path, doc)


def _point(params, configuration, grid, attach):
    metrics = {f"fano_{k}": v for k, v in fano_zero(params, configuration).items()}
    if configuration.startswith("fb_"):
        photon = fano_zero(params, configuration, detector="out_of_loop")
        metrics.update({f"fano_{k}_photon": v for k, v in photon.items()})
    ips = math.nan
    if configuration == "coupled" and math.isclose(params.kappa, params.kappa_tilde, rel_tol=1e-12):
        ips = ips_distance(params)
    metrics["ips_distance"] = ips
    metrics["kappa0/kappa"] = params.kappa0 / params.kappa
    metrics["lambda"] = params.lambda_fb
    curve = None
    if attach:
        p = params.replace(lambda_fb=0.0) if configuration in ("coupled", "isolated_2l") else params
        curve = transfer_spectrum(build(configuration, p), grid)
    return metrics, curve


def sweep(params: LaserParams, parameter: str, values, configuration: str = "coupled", *, grid=None,
          attach_curves: bool = False, workers: int | None = None) -> SweepResult:
    """Evaluate zero-frequency Fano values and the IPS distance along one parameter.

    Every point is independent; they are evaluated on a thread pool and
    returned in the order of ``values``.
    """
    if configuration not in CONFIGURATIONS:
        raise ParameterError(f"unknown configuration {configuration!r}")
    values = np.asarray(values, dtype=float)
    points = [apply_parameter(params, parameter, v) for v in values]
    grid = np.linspace(0.0, 10.0, 201) if grid is None else grid
    n_workers = min(worker_count(workers), max(1, len(points)))
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        results = list(pool.map(lambda p: _point(p, configuration, grid, attach_curves), points))
    names = list(results[0][0]) if results else []
    metrics = {n: np.array([r[0][n] for r in results]) for n in names}
    for n, arr in metrics.items():
        if n != "ips_distance" and not np.all(np.isfinite(arr)):
            raise ValueError(f"metric {n} is not finite along the sweep")
    meta = {"base_params": params.to_dict()}
    curves = [r[1] for r in results] if attach_curves else None
    return SweepResult(parameter, values, metrics, configuration, curves, meta)
