"""Command-line front end: ``yamabe-volume <subcommand> [options]``.

Results are written as JSON (floats rounded to 12 significant digits) to
stdout or ``--output``; ``--csv`` adds plot data where a subcommand has any.

Exit codes: 0 success, 1 usage error, 2 validation failure (bad config,
unknown model, obstructed expansion, failed acceptance check), 3 numerical
guard (ill-conditioned fit, degenerate surface metric).

A TOML file given with ``--config`` supplies defaults for any
:class:`RunConfig` field; flags on the command line win.  The thread count
for per-sample surface work is read from ``YAMABE_THREADS``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .expansion.eikonal import MAX_ORDER, eikonal_expand, eikonal_residual
from .expansion.n2 import expand_n2
from .expansion.series import ObstructionHit
from .expansion.symmetric import expand_symmetric, residual_slope
from .fiber import constant, fiber_space
from .geometry.jets import fermi_point, random_jet
from .geometry.models import UnknownModel, WarpedProfile, model_catalog
from .geometry.surfaces import (DegenerateMetric, SurfaceGrid, export_invariants_csv,
                                load_surface, surface_fields)
from .indicial import classify, exceptional_sets
from .renorm.energy import (CriticalCodimension, anomaly_k4, energy_codim1, energy_n2,
                            energy_via_theta)
from .renorm.theta import theta_symmetric
from .renorm.volume import (EPS_WINDOW, N_SAMPLES, NUISANCE, IllConditioned,
                            closed_form_equatorial, expected_coefficients, export_curve_csv,
                            fit_expansion, volume_curve)
from .verify import DEFAULT_SEED, run_checks

__all__ = ["RunConfig", "ConfigError", "UsageError", "run", "main", "load_config",
           "save_config", "THREADS_ENV"]

THREADS_ENV = "YAMABE_THREADS"
COMMANDS = ("classify", "expand", "energy", "volume", "eikonal", "verify")
EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    """Malformed command line."""


class ConfigError(ValueError):
    """Configuration values that violate the :class:`RunConfig` invariants."""


@dataclass
class RunConfig:
    """Every parameter a subcommand can take.

    ``None`` means "not set"; such fields are omitted from config files.
    """

    command: str = ""
    n: int | None = None
    k: int | None = None
    model: str | None = None
    params: dict = field(default_factory=dict)
    surface: str | None = None
    order: int | None = None
    allow_log: bool = False
    eps_min: float = EPS_WINDOW[0]
    eps_max: float = EPS_WINDOW[1]
    samples: int = N_SAMPLES
    nuisance: int = NUISANCE
    tol: float = 1e-10
    omega: list | None = None
    table: bool = False
    nmax: int = 12
    via_theta: bool = False
    criteria: list | None = None
    seed: int = DEFAULT_SEED
    output: str | None = None
    csv: str | None = None

    def validate(self) -> "RunConfig":
        if self.command and self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not 0 < self.eps_min < self.eps_max:
            raise ConfigError("need 0 < eps_min < eps_max")
        if self.samples < 2:
            raise ConfigError("samples must be at least 2")
        if self.nuisance < 0:
            raise ConfigError("nuisance must be non-negative")
        for name in ("n", "k", "order"):
            val = getattr(self, name)
            if val is not None and val < (0 if name == "order" else 1):
                raise ConfigError(f"{name} out of range: {val}")
        if self.nmax < 1:
            raise ConfigError("nmax must be at least 1")
        if not isinstance(self.params, dict):
            raise ConfigError("params must be a table")
        return self

    def to_dict(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)


def load_config(path) -> RunConfig:
    try:
        data = tomli.loads(Path(path).read_text())
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return RunConfig.from_dict(data)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(tomli_w.dumps(cfg.to_dict()))


def _round(obj):
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.12g}") if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [_round(v) for v in (sorted(obj) if isinstance(obj, (set, frozenset)) else obj)]
    return obj


def format_json(obj) -> str:
    return json.dumps(_round(obj), indent=2)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        val = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if val < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return val


# subcommands --------------------------------------------------------------

def _need(cfg: RunConfig, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(cfg, n) is None]
    if missing:
        raise ConfigError(f"{cfg.command} needs {', '.join(missing)}")


def _cmd_classify(cfg: RunConfig) -> tuple:
    if cfg.table:
        rows = []
        for n in range(1, cfg.nmax + 1):
            e_set, o_set = exceptional_sets(n)
            rows.append({"n": n, "E": sorted(e_set), "O": sorted(o_set)})
        return {"table": rows}, EXIT_OK
    _need(cfg, "n", "k")
    return classify(cfg.n, cfg.k).to_dict(), EXIT_OK


def _model_params(cfg: RunConfig, symmetric: bool) -> dict:
    params = dict(cfg.params)
    if symmetric:
        params.setdefault("n", cfg.n)
        params.setdefault("k", cfg.k)
    elif cfg.k is not None and "k" not in params:
        params["k"] = cfg.k
    if cfg.model == "graph_perturbation":
        params.setdefault("seed", cfg.seed)
    return params


def _build_model(cfg: RunConfig):
    if cfg.model is None:
        raise ConfigError(f"{cfg.command} needs --model")
    symmetric = cfg.model in ("equatorial", "flat", "warped")
    if symmetric:
        _need(cfg, "n", "k")
    return model_catalog(cfg.model, _model_params(cfg, symmetric))


def _surface(cfg: RunConfig) -> SurfaceGrid:
    if cfg.surface is not None:
        return load_surface(cfg.surface)
    surf = _build_model(cfg)
    if not isinstance(surf, SurfaceGrid):
        raise ConfigError(f"model {cfg.model!r} is not a surface model")
    return surf


def _cmd_expand(cfg: RunConfig) -> tuple:
    if cfg.model == "random_jet":
        _need(cfg, "k")
        pt = fermi_point(random_jet(np.random.default_rng(cfg.seed), cfg.k))
        series = expand_n2(pt, tol=cfg.tol)
        return {"source": "random_jet", "seed": cfg.seed, "series": series.to_dict()}, EXIT_OK
    if cfg.model is not None and cfg.model not in ("equatorial", "flat", "warped") \
            or cfg.surface is not None:
        surf = _surface(cfg)
        i, j = int(cfg.params.get("i", 0)), int(cfg.params.get("j", 0))
        fields = surface_fields(surf)
        pt = fermi_point(fields.jet(i, j), area_weight=float(fields.area_weight[i, j]),
                         R_h=float(fields.R_h[i, j]))
        series = expand_n2(pt, tol=cfg.tol)
        return {"source": "surface", "point": [i, j], "series": series.to_dict()}, EXIT_OK
    prof = _build_model(cfg)
    order = cfg.order if cfg.order is not None else cfg.n
    series = expand_symmetric(cfg.n, cfg.k, prof, order, allow_log=cfg.allow_log, tol=cfg.tol)
    check = residual_slope(prof, series)
    theta = theta_symmetric(prof, series)
    out = {"source": cfg.model, "series": series.to_dict(),
           "coefficients": series.scalar_coefficients(),
           "theta": theta.averages(),
           "residual": check._asdict()}
    return out, EXIT_OK


def _cmd_energy(cfg: RunConfig) -> tuple:
    surf = _surface(cfg)
    fields = surface_fields(surf)
    k = fields.k
    out = {"k": k, "shape": list(surf.shape), "area": fields.area}
    if k == 4:
        A = anomaly_k4(fields)
        out["anomaly"] = {"integral": fields.integrate(A), "max": float(A.max()),
                          "min": float(A.min())}
    else:
        out["energy"] = energy_n2(fields)
        if cfg.via_theta:
            out["energy_via_theta"] = energy_via_theta(fields, workers=thread_count())
    if k == 1:
        out["energy_codim1"] = energy_codim1(fields)
    if surf.meta:
        out["meta"] = surf.meta
    if cfg.csv:
        export_invariants_csv(fields, cfg.csv)
    return out, EXIT_OK


def _cmd_volume(cfg: RunConfig) -> tuple:
    prof = _build_model(cfg)
    if not isinstance(prof, WarpedProfile):
        raise ConfigError("volume needs a symmetric model (equatorial, warped)")
    eps = np.geomspace(cfg.eps_min, cfg.eps_max, cfg.samples)
    curve = volume_curve(prof, eps=eps)
    fit = fit_expansion(curve.eps, curve.volume, prof.n, prof.k, nuisance=cfg.nuisance)
    out = fit.to_dict()
    out["quad_error"] = curve.quad_error
    out["expected"] = expected_coefficients(prof)
    if cfg.model == "equatorial":
        out["closed_form"] = closed_form_equatorial(prof.n, prof.k)
    if cfg.csv:
        export_curve_csv(curve, cfg.csv)
    return out, EXIT_OK


def _cmd_eikonal(cfg: RunConfig) -> tuple:
    if not cfg.omega:
        raise ConfigError("eikonal needs --omega (Taylor coefficients of omega in t)")
    order = cfg.order if cfg.order is not None else min(3, MAX_ORDER)
    space = fiber_space(cfg.k or 2)
    omega = [constant(space, float(w)) for w in cfg.omega]
    series = eikonal_expand(omega, order)
    res = max(f.norm() for f in eikonal_residual(series))
    out = series.to_dict()
    out["residual"] = res
    return out, EXIT_OK


def _cmd_verify(cfg: RunConfig) -> tuple:
    results = run_checks(cfg.criteria, seed=cfg.seed)
    for r in results:
        print(r.line(), file=sys.stderr)
    ok = all(r.passed for r in results)
    return {"passed": ok, "results": [r.to_dict() for r in results]}, \
        EXIT_OK if ok else EXIT_INVALID


HANDLERS = {
    "classify": _cmd_classify,
    "expand": _cmd_expand,
    "energy": _cmd_energy,
    "volume": _cmd_volume,
    "eikonal": _cmd_eikonal,
    "verify": _cmd_verify,
}


# argument parsing ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, val = text.split("=", 1)
    try:
        return key, json.loads(val)
    except json.JSONDecodeError:
        return key, val


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML file with RunConfig fields")
    common.add_argument("--output", help="write JSON here instead of stdout")
    common.add_argument("--csv", help="also write CSV plot data")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)

    def dims(p):
        p.add_argument("--n", type=int)
        p.add_argument("--k", type=int)

    def model(p):
        p.add_argument("--model")
        p.add_argument("--param", type=_param, action="append", metavar="KEY=VALUE",
                       help="model parameter; values are parsed as JSON when possible")

    parser = _Parser(prog="yamabe-volume", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("classify", parents=[common], help="indicial classification")
    dims(p)
    p.add_argument("--table", action="store_true", default=None)
    p.add_argument("--nmax", type=int)

    p = sub.add_parser("expand", parents=[common], help="formal expansion")
    dims(p)
    model(p)
    p.add_argument("--surface", help="surface JSON file (expands at one sample)")
    p.add_argument("--order", type=int)
    p.add_argument("--allow-log", action="store_true", default=None)

    p = sub.add_parser("energy", parents=[common], help="energy of a closed surface")
    p.add_argument("--k", type=int)
    model(p)
    p.add_argument("--surface", help="surface JSON file")
    p.add_argument("--via-theta", action="store_true", default=None)

    p = sub.add_parser("volume", parents=[common], help="volume expansion fit")
    dims(p)
    model(p)
    p.add_argument("--eps-min", type=float)
    p.add_argument("--eps-max", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--nuisance", type=int)

    p = sub.add_parser("eikonal", parents=[common], help="distance-ratio expansion")
    p.add_argument("--k", type=int)
    p.add_argument("--omega", type=_floats, help="comma-separated Taylor coefficients")
    p.add_argument("--order", type=int)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    p.add_argument("--criteria", type=_ints, help="comma-separated criterion numbers")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    cfg = load_config(args.config) if args.config else RunConfig()
    data = cfg.to_dict()
    flags = {k: v for k, v in vars(args).items()
             if k not in ("config", "param") and v is not None}
    data.update(flags)
    if getattr(args, "param", None):
        data["params"] = {**data.get("params", {}), **dict(args.param)}
    return RunConfig.from_dict(data).validate()


def run(argv=None) -> int:
    """Run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        result, code = HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (IllConditioned, DegenerateMetric) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ObstructionHit as exc:
        print(f"obstructed expansion: {exc} (rerun with --allow-log)", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, UnknownModel, CriticalCodimension, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"invalid input: {msg}", file=sys.stderr)
        return EXIT_INVALID
    text = format_json(result)
    if cfg.output:
        Path(cfg.output).write_text(text + "\n")
    else:
        print(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
