"""Command-line interface.

Subcommands: ``steady``, ``sweep``, ``figure``, ``optimize``, ``paths`` and
``validate``.  Exit codes: 0 success, 1 numerical failure, 2 bad
configuration.

Parameters come from ``--config FILE`` (JSON) and/or flags; flags win.  The
``params`` block of a config file is either in kappa units (field names as
in :class:`SystemParams`) or in GHz/2pi, marked by ``"units":
"ghz_over_2pi"`` or by any ``*_ghz`` key, in which case ``kappa_ghz`` is
required::

    {"command": "steady",
     "params": {"units": "ghz_over_2pi", "kappa_ghz": 16, "e_a_ghz": 1, "gamma_ghz": 1, "g": 1}}

Dimensionless entries (``g``, ``j``, ``theta``, cutoffs) pass through as
given in either mode.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace

from . import __version__
from .errors import ComputationError, ConfigError, InvalidParams, SpecError
from .model import SystemParams
from .solver import converged_g2, observables
from .sweep import ENGINES, PRESET_NAMES, SweepSpec, atomic_write, figure_preset, minimize_g2, run_sweep
from .weakdrive import g2_weakdrive, paths_report, steady_amplitudes

COMMANDS = ("steady", "sweep", "figure", "optimize", "paths", "validate")
SUITES = ("invariants", "acceptance", "all")

log = logging.getLogger("photmol")


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: SystemParams = field(default_factory=SystemParams)
    engine: str = "full"
    output: str | None = None
    verbosity: int = 0
    workers: int = 1
    rel_tol: float | None = 1e-3
    figure: str | None = None
    var: str | None = None
    bounds: tuple[float, float] | None = None
    tol: float = 1e-3
    suite: str = "all"
    sweep: SweepSpec | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}")
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.bounds is not None:
            object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        if self.command == "figure" and self.figure is None:
            raise ConfigError("figure needs a preset name")
        if self.command == "optimize" and (self.var is None or self.bounds is None):
            raise ConfigError("optimize needs --var, --from and --to")
        if self.command == "sweep" and self.sweep is None:
            raise ConfigError("sweep needs a sweep specification (--config)")
        if self.command in ("sweep", "figure") and not self.output:
            raise ConfigError(f"{self.command} needs --out")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "params":
                value = value.to_dict()
            elif f.name == "sweep" and value is not None:
                value = value.to_dict()
            elif f.name == "bounds" and value is not None:
                value = list(value)
            out[f.name] = value
        return out


CONFIG_KEYS = tuple(f.name for f in fields(RunConfig))


def params_from_block(block: dict) -> SystemParams:
    block = dict(block)
    units = block.pop("units", None)
    ghz_keys = [k for k in block if k.endswith("_ghz")]
    try:
        if units is None and not ghz_keys:
            return SystemParams.from_dict(block)
        if units not in (None, "ghz_over_2pi"):
            raise ConfigError(f"unknown units {units!r}; expected 'ghz_over_2pi'")
        kappa = block.pop("kappa_ghz", None)
        if kappa is None:
            raise ConfigError("GHz units need kappa_ghz")
        if not isinstance(kappa, (int, float)) or not kappa > 0:
            raise ConfigError("kappa_ghz must be > 0")
        return SystemParams.from_ghz(kappa, **block)
    except InvalidParams as exc:
        raise ConfigError(str(exc)) from exc
    except TypeError as exc:
        raise ConfigError(f"bad parameter value: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict) or not data:
        raise ConfigError("empty configuration (no command)")
    if "axes" in data:  # a bare sweep specification
        data = {"command": "sweep", "sweep": data}
    unknown = set(data) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    if "command" not in data:
        raise ConfigError("configuration has no command")
    kwargs = dict(data)
    kwargs["params"] = params_from_block(data.get("params") or {})
    if data.get("sweep") is not None:
        try:
            kwargs["sweep"] = SweepSpec.from_dict(data["sweep"])
        except SpecError as exc:
            raise ConfigError(str(exc)) from exc
    return RunConfig(**kwargs)


def load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


# -- argument parsing ----------------------------------------------------------

_PARAM_FLAGS = (
    ("delta", "set both detunings"),
    ("delta_a", None),
    ("delta_b", None),
    ("g", "dot-cavity coupling"),
    ("j", "tunneling strength"),
    ("e", "set both drive amplitudes"),
    ("e_a", None),
    ("e_b", None),
    ("theta", "relative drive phase [rad]"),
    ("gamma", "dot emission rate"),
    ("kappa_a", None),
    ("kappa_b", None),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", dest="output", help="output path")
    common.add_argument("-v", "--verbose", action="count", default=None, dest="verbosity")
    common.add_argument("--workers", type=int)
    common.add_argument("--engine", choices=ENGINES)
    pg = common.add_argument_group("parameters (kappa units unless --kappa-ghz is given)")
    for name, helptext in _PARAM_FLAGS:
        pg.add_argument("--" + name.replace("_", "-"), dest="p_" + name, type=float, help=helptext)
    pg.add_argument("--n-max", dest="p_n_max", type=int, help="Fock cutoff for both modes")
    pg.add_argument("--kappa-ghz", type=float, help="read frequency flags as GHz/2pi with this kappa/2pi")
    pg.add_argument("--rel-tol", type=float, help="cutoff convergence tolerance on g2")
    pg.add_argument("--fixed-cutoff", action="store_true", help="skip the cutoff ladder")

    parser = _Parser(prog="photmol", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"photmol {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("steady", parents=[common], help="steady-state observables at one point")
    sub.add_parser("sweep", parents=[common], help="run a sweep specification")
    fig = sub.add_parser("figure", parents=[common], help="reproduce a figure preset")
    fig.add_argument("figure", choices=PRESET_NAMES)
    opt = sub.add_parser("optimize", parents=[common], help="minimize g2(0) over one parameter")
    opt.add_argument("--var", required=True)
    opt.add_argument("--from", dest="lo", type=float, required=True)
    opt.add_argument("--to", dest="hi", type=float, required=True)
    opt.add_argument("--tol", type=float)
    sub.add_parser("paths", parents=[common], help="weak-drive amplitudes and two-photon path decomposition")
    val = sub.add_parser("validate", parents=[common], help="run the self-validation suite")
    val.add_argument("--suite", choices=SUITES)
    return parser


def parse_config(argv=None) -> RunConfig:
    """Build a :class:`RunConfig` from a config dict or command-line arguments."""
    if isinstance(argv, dict):
        return config_from_dict(argv)
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise ConfigError("no command given")
    data = load_config_file(args.config) if args.config else {}
    if "axes" in data:
        data = {"command": "sweep", "sweep": data}
    data["command"] = args.command

    params = dict(data.get("params") or {})
    if args.kappa_ghz is not None:
        params["kappa_ghz"] = args.kappa_ghz
    ghz = "kappa_ghz" in params or params.get("units") == "ghz_over_2pi"
    flagged = set()
    for name, _ in _PARAM_FLAGS:
        value = getattr(args, "p_" + name)
        if value is None:
            continue
        targets = {"delta": ("delta_a", "delta_b"), "e": ("e_a", "e_b")}.get(name, (name,))
        for t in targets:
            key = t + "_ghz" if ghz and t != "theta" else t
            params.pop(t, None)
            params.pop(t + "_ghz", None)
            params[key] = value
            flagged.add(t)
    if args.p_n_max is not None:
        params["n_max_a"] = params["n_max_b"] = args.p_n_max
        flagged.update(("n_max_a", "n_max_b"))
    data["params"] = params

    if args.command == "sweep" and data.get("sweep") is not None and flagged:
        # flags given for a sweep adjust its base point
        converted = params_from_block(params).to_dict()
        sweep = dict(data["sweep"])
        sweep["base"] = {**sweep.get("base", {}), **{k: converted[k] for k in flagged}}
        data["sweep"] = sweep
    if args.command == "sweep" and data.get("sweep") is not None and args.engine is not None:
        data["sweep"] = {**data["sweep"], "engine": args.engine}

    for key in ("output", "verbosity", "workers", "engine"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.rel_tol is not None:
        data["rel_tol"] = args.rel_tol
    if args.fixed_cutoff:
        data["rel_tol"] = None
    if args.command == "figure":
        data["figure"] = args.figure
    if args.command == "optimize":
        data["var"], data["bounds"] = args.var, [args.lo, args.hi]
        if args.tol is not None:
            data["tol"] = args.tol
    if args.command == "validate" and args.suite is not None:
        data["suite"] = args.suite
    return config_from_dict(data)


# -- execution -------------------------------------------------------------------

def _emit(text: str, output: str | None) -> None:
    if output:
        atomic_write(output, text + "\n")
    else:
        print(text)


def _steady(cfg: RunConfig) -> int:
    if cfg.engine == "weakdrive":
        amps = steady_amplitudes(cfg.params)
        n_a, n_b, p_e = amps.mean_occupations()
        report = {"n_a": n_a, "n_b": n_b, "p_e": p_e, "g2_a": g2_weakdrive(amps), "cutoff_used": None, "converged": True}
    elif cfg.rel_tol is None:
        report = observables(cfg.params).to_dict()
    else:
        report = converged_g2(cfg.params, cfg.rel_tol).to_dict()
    report["engine"] = cfg.engine
    report["params"] = cfg.params.to_dict()
    _emit(json.dumps(report, indent=2), cfg.output)
    return 0


def _sweep(cfg: RunConfig, spec: SweepSpec, csv_path: str) -> int:
    result = run_sweep(spec, workers=cfg.workers)
    result.write(csv_path)
    failed = sum(1 for r in result.rows if not r[len(spec.axes) + 4])
    log.info("wrote %d rows to %s (%d not converged)", len(result.rows), csv_path, failed)
    return 0


def _figure(cfg: RunConfig) -> int:
    spec = figure_preset(cfg.figure)
    if cfg.engine != spec.engine:
        spec = replace(spec, engine=cfg.engine)
    os.makedirs(cfg.output, exist_ok=True)
    return _sweep(cfg, spec, os.path.join(cfg.output, cfg.figure + ".csv"))


def _optimize(cfg: RunConfig) -> int:
    x, y = minimize_g2(cfg.params, cfg.var, cfg.bounds, cfg.tol, engine=cfg.engine, convergence_tol=cfg.rel_tol)
    out = {"var": cfg.var, "bounds": list(cfg.bounds), "argmin": x, "g2_min": y, "engine": cfg.engine}
    if cfg.var == "theta":
        out["argmin_over_pi"] = x / math.pi
    _emit(json.dumps(out, indent=2), cfg.output)
    return 0


def _validate(cfg: RunConfig) -> int:
    from .validation import run_suite

    results = run_suite(cfg.suite, echo=print)
    failed = [c for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if cfg.output:
        atomic_write(cfg.output, json.dumps([c.__dict__ for c in results], indent=2) + "\n")
    return 0 if not failed else 1


def run(cfg: RunConfig) -> int:
    """Execute a configuration; returns the process exit code."""
    try:
        if cfg.command == "steady":
            return _steady(cfg)
        if cfg.command == "sweep":
            return _sweep(cfg, cfg.sweep, cfg.output)
        if cfg.command == "figure":
            return _figure(cfg)
        if cfg.command == "optimize":
            return _optimize(cfg)
        if cfg.command == "paths":
            _emit(json.dumps(paths_report(cfg.params), indent=2), cfg.output)
            return 0
        return _validate(cfg)
    except ComputationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (SpecError, InvalidParams, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except (ConfigError, SpecError, InvalidParams) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    level = {0: logging.WARNING, 1: logging.INFO}.get(cfg.verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
