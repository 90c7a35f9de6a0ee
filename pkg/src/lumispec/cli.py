"""Command-line entry point: ``lumispec {spectrum,simulate,sweep,validate}``.

Exit codes: 0 success, 1 validation failure, 2 configuration or budget
error, 3 numerical-consistency error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, io
from .dsp import ensemble_spectrum
from .errors import BudgetError, ConfigError, NumericalError, ParameterError, UnstableSystemError
from .model import LaserParams, load_config, params_from_mapping
from .montecarlo import simulate
from .spectra import (
    CLOSED_FORMS,
    EXACT_TOL,
    ValidationReport,
    closed_form,
    random_draws,
    transfer_spectrum,
    validate_engine,
    validate_limits,
)
from .sweep import sweep
from .system import CONFIGURATIONS, build, perturb_drift

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
COMMAND_BLOCKS = ("spectrum", "grid", "mc", "sweep", "output", "validate")


@dataclass
class GridSpec:
    omega_min: float = 0.0
    omega_max: float = 10.0
    n_points: int = 512
    spacing: str = "linear"

    def __post_init__(self):
        if self.n_points < 2:
            raise ConfigError("grid n_points must be at least 2")
        if not (self.omega_max > self.omega_min >= 0):
            raise ConfigError("grid needs omega_max > omega_min >= 0")
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"grid spacing must be linear or log, got {self.spacing!r}")
        if self.spacing == "log" and self.omega_min <= 0:
            raise ConfigError("log grid needs omega_min > 0")

    @classmethod
    def parse(cls, text: str) -> GridSpec:
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(f"--grid expects min:max:n[:log], got {text!r}")
        try:
            spacing = "log" if len(parts) == 4 and parts[3] == "log" else "linear"
            if len(parts) == 4 and parts[3] not in ("log", "linear"):
                raise ValueError(parts[3])
            return cls(float(parts[0]), float(parts[1]), int(parts[2]), spacing)
        except ValueError as exc:
            raise ConfigError(f"bad --grid {text!r}: {exc}") from exc

    def points(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.omega_min, self.omega_max, self.n_points)
        return np.linspace(self.omega_min, self.omega_max, self.n_points)


@dataclass
class McSpec:
    configuration: str | None = None
    dt: float = 0.01
    t_max: float = 1000.0
    n_traj: int = 64
    seed: int = 0
    record_every: int = 1
    segment_length: float | None = 100.0
    window: str = "hann"
    overlap: float = 0.5
    n_points: int = 21
    workers: int | None = None


@dataclass
class SweepSpec:
    parameter: str = "kappa0"
    values: list = field(default_factory=lambda: [10.0, 100.0, 1000.0])
    configuration: str = "coupled"


@dataclass
class RunConfig:
    params: LaserParams
    grid: GridSpec
    configuration: str
    closed_forms: list[str]
    detector: str
    mc: McSpec
    sweep: SweepSpec
    out_dir: Path
    echo: dict

    def provenance(self, **extra) -> dict:
        return io.provenance(config=self.echo, **extra)


def _block(raw, name, spec_cls):
    data = dict(raw.get(name, {}))
    try:
        return spec_cls(**data)
    except TypeError as exc:
        raise ConfigError(f"[{name}] {exc}") from exc


def _coerce(value: str):
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            pass
    return value


def build_run_config(args) -> RunConfig:
    """Merge the TOML config file with command-line overrides (flags win)."""
    raw = load_config(args.config) if args.config else {}
    params_map = {k: v for k, v in raw.items() if k not in COMMAND_BLOCKS}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        if key == "xi":
            params_map.pop("p", None)
        if key == "p":
            params_map.pop("xi", None)
        params_map[key] = _coerce(value)
    if "kappa0" not in params_map and "micro" not in params_map and not any(k.startswith("micro.") for k in params_map):
        params_map["kappa0"] = 1.0
    params = params_from_mapping(params_map)

    grid = _block(raw, "grid", GridSpec)
    if args.grid:
        grid = GridSpec.parse(args.grid)
    spec_block = dict(raw.get("spectrum", {}))
    configuration = args.configuration or spec_block.get("configuration", "coupled")
    if configuration not in CONFIGURATIONS:
        raise ConfigError(f"unknown configuration {configuration!r}")
    closed = list(args.closed_form or spec_block.get("closed_forms", []))
    for kind in closed:
        if kind not in CLOSED_FORMS:
            raise ConfigError(f"unknown closed form {kind!r}")
    detector = spec_block.get("detector", "in_loop")
    if detector not in ("in_loop", "out_of_loop"):
        raise ConfigError(f"unknown detector {detector!r}")

    mc = _block(raw, "mc", McSpec)
    if args.seed is not None:
        mc.seed = args.seed
    if getattr(args, "workers", None) is not None:
        mc.workers = args.workers
    sw = _block(raw, "sweep", SweepSpec)
    if getattr(args, "parameter", None):
        sw.parameter = args.parameter
    if getattr(args, "values", None):
        sw.values = [float(v) for v in args.values.split(",")]
    if getattr(args, "sweep_configuration", None):
        sw.configuration = args.sweep_configuration

    out_dir = Path(args.out or raw.get("output", {}).get("dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"output directory {out_dir} is not writable")

    echo = {
        "params": params.to_dict(),
        "grid": vars(grid),
        "configuration": configuration,
        "closed_forms": closed,
        "detector": detector,
        # thread count does not affect results, so it stays out of the provenance
        "mc": {k: v for k, v in vars(mc).items() if k != "workers"},
        "sweep": vars(sw),
    }
    return RunConfig(params, grid, configuration, closed, detector, mc, sw, out_dir, echo)


def _comment(prov: dict) -> str:
    return "lumispec provenance " + json.dumps(io.jsonable(prov), sort_keys=True)


def _emit_plot_script(path: Path, csv_name: str, columns: list[str], ylabel: str) -> None:
    plots = ", ".join(f"'{csv_name}' using 1:{i + 2} with lines title '{c}'" for i, c in enumerate(columns))
    path.write_text(
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 'omega / kappa'\n"
        f"set ylabel '{ylabel}'\n"
        f"plot {plots}\n",
        newline="\n",
    )


def cmd_spectrum(cfg: RunConfig, args) -> int:
    grid = cfg.grid.points()
    system = build(cfg.configuration, cfg.params)
    curve = transfer_spectrum(system, grid, detector=cfg.detector)
    cols = curve.columns()
    for kind in cfg.closed_forms:
        ref = closed_form(kind, cfg.params, None, grid)
        cols.update((f"{kind}.{lab}", v) for lab, v in zip(ref.channel_labels, ref.values))
    prov = cfg.provenance(command="spectrum", system_digest=system.digest())
    io.write_csv(cfg.out_dir / "spectrum.csv", cols, comment=_comment(prov))
    io.write_json(cfg.out_dir / "spectrum.json", {"columns": cols, "provenance": prov})
    if args.emit_plot_script:
        _emit_plot_script(cfg.out_dir / "spectrum.gp", "spectrum.csv", list(cols)[1:], "S(omega) / shot level")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> int:
    mc = cfg.mc
    configuration = mc.configuration or cfg.configuration
    system = build(configuration, cfg.params)
    ens = simulate(system, mc.dt, mc.t_max, mc.n_traj, mc.seed, record_every=mc.record_every,
                   record_states=args.dump_trajectory, workers=mc.workers)
    grid = np.linspace(cfg.grid.omega_min, cfg.grid.omega_max, mc.n_points)
    est = ensemble_spectrum(ens, grid, segment_length=mc.segment_length, window=mc.window, overlap=mc.overlap)
    if args.one_sided:
        est = est.one_sided()
    analytic = transfer_spectrum(system, est.omega)
    if args.one_sided:
        analytic.values = analytic.values * np.where(est.omega > 0, 2.0, 1.0)
    cols = est.columns()
    cols.update((f"{lab}_analytic", v) for lab, v in zip(analytic.channel_labels, analytic.values))
    prov = cfg.provenance(command="simulate", seed=mc.seed, configuration=configuration, ensemble=ens.metadata())
    io.write_csv(cfg.out_dir / "simulate.csv", cols, comment=_comment(prov))
    io.write_json(cfg.out_dir / "simulate.json", {"columns": cols, "provenance": prov, "estimator": est.meta})
    if args.dump_trajectory:
        ens.to_csv(cfg.out_dir / "trajectory0.csv")
    if args.emit_plot_script:
        _emit_plot_script(cfg.out_dir / "simulate.gp", "simulate.csv", list(est.channel_labels), "S(omega) / shot level")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    sw = cfg.sweep
    result = sweep(cfg.params, sw.parameter, sw.values, sw.configuration, workers=cfg.mc.workers)
    prov = cfg.provenance(command="sweep")
    result.meta["provenance"] = prov
    result.to_csv(cfg.out_dir / "sweep.csv", comment=_comment(prov))
    result.to_json(cfg.out_dir / "sweep.json")
    if args.emit_plot_script:
        _emit_plot_script(cfg.out_dir / "sweep.gp", "sweep.csv", list(result.metrics), sw.parameter)
    return EXIT_OK


def _mc_checks(workers) -> list[tuple[str, bool, str]]:
    checks = []
    iso = build("isolated_2l", LaserParams(kappa=1.0, kappa0=0.0, kappa_tilde=0.0, xi=0.5, pump_rate=100.0))
    ens = simulate(iso, 1e-2, 1e3, 64, 1, workers=workers)
    grid = np.array([0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
    est = ensemble_spectrum(ens, grid, segment_length=100.0, window="hann", overlap=0.5)
    ana = transfer_spectrum(iso, grid)["i"]
    z = np.abs(est["i"] - ana) / est.err("i")
    checks.append(("mc psd isolated_2l within 3 SE", bool(np.all(z < 3)), f"max |z| = {z.max():.2f}"))

    coupled = build("coupled", LaserParams(kappa=1.0, kappa_tilde=1.0, kappa0=1.0, xi=0.0, pump_rate=2000.0))
    ens = simulate(coupled, 1 / 300, 2000.0, 256, 2, record_every=30, record_states=False, workers=workers)
    est = ensemble_spectrum(ens, [0.0], segment_length=50.0, window="hann", overlap=0.5)
    ana = transfer_spectrum(coupled, [0.0])["i_tilde"][0]
    value, imag, imag_err = est["i_tilde"][0], est.imag[1][0], est.imag_stderr[1][0]
    ok = abs(value - ana) <= 0.1 * ana and abs(imag) < 3 * imag_err
    checks.append(("mc complex coupled i_tilde(0) within 10%", bool(ok),
                   f"{value:.4f} vs {ana:.4f}, mean imag {imag:.2e} +- {imag_err:.1e}"))
    return checks


def cmd_validate(cfg: RunConfig, args) -> int:
    hook = (lambda s: perturb_drift(s, 0, 0, 0.01)) if args.inject_fault else None
    draws = [cfg.params] + random_draws(100, seed=cfg.mc.seed)
    report = ValidationReport()
    for p in draws:
        report.extend(validate_engine(p, system_hook=hook))
    print(f"exact pairs over {len(draws)} parameter sets (tolerance {EXACT_TOL:.0e} relative)")
    rows = []
    for name in dict.fromkeys(e.name for e in report.entries if e.exact):
        group = [e for e in report.entries if e.name == name]
        worst = max(e.max_rel_dev for e in group)
        ok = all(e.passed for e in group)
        rows.append({"name": name, "exact": True, "worst_rel_dev": worst, "passed": ok})
        print(f"  {name:<38} worst {worst:10.3e}  {'PASS' if ok else 'FAIL'}")
    print("limit pairs inside their regimes (reported, not gated)")
    for e in validate_limits().entries:
        ratios = ", ".join(f"{k}={v:g}" for k, v in e.validity.items())
        rows.append({"name": e.name, "exact": False, "worst_rel_dev": e.max_rel_dev, "validity": e.validity})
        print(f"  {e.name:<38} max dev {e.max_rel_dev:10.3e}  [{ratios}]")
    passed = report.passed
    checks = []
    if args.mc:
        checks = _mc_checks(cfg.mc.workers)
        for name, ok, detail in checks:
            print(f"  {name:<38} {'mc':<6} {detail}  {'PASS' if ok else 'FAIL'}")
        passed = passed and all(ok for _, ok, _ in checks)
    io.write_json(cfg.out_dir / "validate.json", {
        "pairs": rows,
        "mc_checks": [{"name": n, "passed": o, "detail": d} for n, o, d in checks],
        "passed": passed,
        "provenance": cfg.provenance(command="validate", fault_injected=bool(args.inject_fault)),
    })
    print("ALL CHECKS PASSED" if passed else "VALIDATION FAILED")
    return EXIT_OK if passed else EXIT_VALIDATION


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--grid", metavar="MIN:MAX:N[:log]", help="frequency grid override")
    common.add_argument("--seed", type=int, help="Monte Carlo root seed")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a laser parameter")
    common.add_argument("--configuration", choices=sorted(CONFIGURATIONS))
    common.add_argument("--workers", type=int, help="worker threads (capped by LUMISPEC_THREADS)")
    common.add_argument("--emit-plot-script", action="store_true", help="also write a gnuplot script")

    parser = argparse.ArgumentParser(prog="lumispec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"lumispec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="exact spectra and closed forms")
    p.add_argument("--closed-form", action="append", choices=sorted(CLOSED_FORMS))
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo spectra against the analytic curve")
    p.add_argument("--one-sided", action="store_true", help="fold spectra onto omega >= 0")
    p.add_argument("--dump-trajectory", action="store_true", help="write the first trajectory as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="parameter scan of Fano values and IPS distance")
    p.add_argument("--parameter")
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--sweep-configuration", choices=sorted(CONFIGURATIONS))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common], help="engine-versus-closed-form checks")
    p.add_argument("--mc", action="store_true", help="include the Monte Carlo cross-checks")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    for attr in ("closed_form", "one_sided", "dump_trajectory", "mc", "inject_fault", "parameter", "values",
                 "sweep_configuration"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    try:
        cfg = build_run_config(args)
        return args.func(cfg, args)
    except (ConfigError, ParameterError, BudgetError, UnstableSystemError) as exc:
        print(f"lumispec: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"lumispec: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
