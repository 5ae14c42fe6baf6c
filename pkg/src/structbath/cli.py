"""Command-line front end.

Every run writes its outputs plus a ``manifest.json`` that records the fully
resolved inputs; ``structbath rerun --manifest PATH`` replays it.

Exit codes: 0 success, 1 usage error, 2 config/validation error,
3 numerical singularity, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernel
from .comparators import epr_sigma, heom_sigma, tn_sigma_cf
from .errors import ConfigError, SingularityError, ValidationError
from .fileio import (dump_config, parse_config, parse_model, read_grid,
                     read_manifest, render_heatmap, write_manifest, write_spectrum,
                     write_sweep)
from .network import PumpSpec, validate
from .selfenergy import spectrum
from .sweep import (DEFAULT_AXIS_POINTS, DEFAULT_OMEGA_MAX, DEFAULT_OMEGA_MIN,
                    DEFAULT_OMEGA_POINTS, PRESET_NAMES, PUMP_RANGE, Preset, SweepAxis,
                    apply_pump, preset, run_sweep)

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_SINGULAR, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_source(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--preset", metavar="NAME", help=f"one of {', '.join(PRESET_NAMES)}")
    g.add_argument("--config", metavar="PATH", help="network JSON document")


def _add_omega(p):
    p.add_argument("--omega-min", type=float, default=DEFAULT_OMEGA_MIN)
    p.add_argument("--omega-max", type=float, default=DEFAULT_OMEGA_MAX)
    p.add_argument("--omega-points", type=int, default=DEFAULT_OMEGA_POINTS)


def _add_axis(p, fixed=None):
    if fixed is None:
        p.add_argument("--axis", metavar="NAME",
                       help="J_L1L2-scale, J_L2-scale, J_SB-scale, gamma1, gamma2, pump-P or edge:A-B")
    p.add_argument("--from", dest="start", type=float)
    p.add_argument("--to", dest="stop", type=float)
    p.add_argument("--steps", type=int, default=DEFAULT_AXIS_POINTS)
    p.add_argument("--output-node", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--render", action="store_true", help="also write heatmap.pgm")
    p.add_argument("--scale", choices=("linear", "log"), default="linear")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="structbath", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sigma", help="self-energy and Green's function spectrum of one network")
    _add_source(p)
    _add_omega(p)
    p.add_argument("--pump-p", type=float, default=None, help="override the pump amplitude")
    p.add_argument("--output-node", default=None)
    p.add_argument("--out", default=".")

    p = sub.add_parser("sweep", help="gain map over one parameter and frequency")
    _add_source(p)
    _add_omega(p)
    _add_axis(p)
    p.add_argument("--out", default=".")

    p = sub.add_parser("pump-sweep", help="gain map over pump amplitude and frequency")
    _add_source(p)
    _add_omega(p)
    _add_axis(p, fixed="pump-P")
    p.add_argument("--out", default=".")

    p = sub.add_parser("compare", help="evaluate a HEOM, chain or EPR self-energy")
    p.add_argument("--model", required=True, metavar="PATH")
    _add_omega(p)
    p.add_argument("--out", default=".")

    p = sub.add_parser("presets", help="list preset parameters as JSON")
    p.add_argument("names", nargs="*")

    p = sub.add_parser("validate", help="check a network document")
    _add_source(p)

    p = sub.add_parser("render", help="render a grid file as an 8-bit graymap")
    p.add_argument("--grid", required=True, metavar="PATH")
    p.add_argument("--scale", choices=("linear", "log"), default="linear")
    p.add_argument("--out", required=True, metavar="FILE")

    p = sub.add_parser("rerun", help="replay a manifest")
    p.add_argument("--manifest", required=True, metavar="PATH")
    p.add_argument("--out", default=None, help="output directory (default: the manifest's)")
    return parser


# -- input resolution -------------------------------------------------------------

def _load_source(args) -> Preset:
    if args.preset:
        try:
            return preset(args.preset)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    text = Path(args.config).read_text(encoding="utf-8")
    spec, pump = parse_config(text)
    return Preset("config", spec, pump or PumpSpec(("B3", "B4"), g=0.0, p=0.0))


def _omega_plan(args) -> dict:
    if args.omega_points < 1 or not args.omega_max >= args.omega_min:
        raise UsageError("frequency grid needs omega-max >= omega-min and at least one point")
    return {"min": args.omega_min, "max": args.omega_max, "points": args.omega_points}


def _omega_grid(plan) -> np.ndarray:
    o = plan["omega"]
    return np.linspace(o["min"], o["max"], int(o["points"]))


def _base_plan(command, args, p: Preset | None) -> dict:
    plan = {"command": command, "version": __version__, "backend": kernel.get_backend()}
    if p is not None:
        plan["source"] = {"preset": p.name} if args.preset else {"config": str(args.config)}
        plan["preset"] = p.name
        # a config without a usable pump stays pump-free in the manifest
        pump = p.pump if not p.pump.problems(p.spec) else None
        plan["network"] = dump_config(p.spec, pump)
        plan["layers"] = [list(p.layer1), list(p.layer2)]
    return plan


def _sweep_plan(args, parameter=None) -> dict:
    p = _load_source(args)
    parameter = parameter or args.axis
    default = p.default_axis
    if parameter is None:
        if default is None:
            raise UsageError("--axis is required for this preset")
        parameter = default.parameter
    start, stop = args.start, args.stop
    if start is None and stop is None and default is not None and default.parameter == parameter:
        values = list(default.values)
        if args.steps != DEFAULT_AXIS_POINTS:
            values = list(np.linspace(default.values[0], default.values[-1], args.steps))
    else:
        if parameter == "pump-P":
            start = PUMP_RANGE[0] if start is None else start
            stop = PUMP_RANGE[1] if stop is None else stop
        if start is None or stop is None:
            raise UsageError(f"--from and --to are required for axis {parameter}")
        if args.steps < 1:
            raise UsageError("--steps must be >= 1")
        values = list(np.linspace(start, stop, args.steps))
    try:
        axis = SweepAxis(parameter, values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    plan = _base_plan("sweep", args, p)
    plan.update({
        "axis": {"parameter": axis.parameter, "values": [float(v) for v in axis.values]},
        "omega": _omega_plan(args),
        "output_node": args.output_node or p.output_node,
        "workers": max(1, args.workers),
        "render": args.scale if args.render else None,
    })
    return plan


# -- execution (shared by fresh runs and replays) --------------------------------

def _plan_preset(plan) -> Preset:
    spec, pump = parse_config(plan["network"])
    l1, l2 = plan.get("layers", [["B1", "B2"], ["B3", "B4", "B5"]])
    return Preset(plan.get("preset", "config"), spec, pump or PumpSpec(g=0.0),
                  plan.get("output_node", "B3"), layer1=tuple(l1), layer2=tuple(l2))


def _stamp(plan) -> dict:
    out = dict(plan)
    out["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return out


def _execute_sigma(plan, out: Path) -> None:
    p = _plan_preset(plan)
    pump = p.pump if plan.get("pump_p") is None else p.pump.at(plan["pump_p"])
    spec = apply_pump(p.spec, pump) if (pump.p or pump.delta_omega3) else p.spec
    trace = spectrum(spec, _omega_grid(plan), plan["output_node"])
    out.mkdir(parents=True, exist_ok=True)
    write_spectrum(trace, out / "spectrum.csv")
    manifest = _stamp(plan)
    manifest["outputs"] = {"spectrum": "spectrum.csv", "manifest": "manifest.json"}
    write_manifest(manifest, out / "manifest.json")


def _execute_sweep(plan, out: Path) -> None:
    p = _plan_preset(plan)
    axis = SweepAxis(plan["axis"]["parameter"], plan["axis"]["values"])
    result = run_sweep(p, axis, _omega_grid(plan), workers=int(plan.get("workers", 1)))
    manifest = _stamp(plan)
    manifest["meta"] = result.meta
    paths = write_sweep(result, out, manifest)
    if plan.get("render"):
        render_heatmap(result.grid, plan["render"]).save(out / "heatmap.pgm")
        doc = read_manifest(paths["manifest"])
        doc["outputs"]["heatmap"] = "heatmap.pgm"
        write_manifest(doc, paths["manifest"])


def _execute_compare(plan, out: Path) -> None:
    kind, model, opts = parse_model(plan["model"])
    omegas = _omega_grid(plan)
    if kind == "heom":
        sig = np.atleast_1d(heom_sigma(model, omegas))
    elif kind == "tn":
        sig = np.atleast_1d(tn_sigma_cf(model, omegas, opts.get("eta", 0.0)))
    else:
        sig = np.full(omegas.shape, epr_sigma(model))
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparator.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("omega_ghz,re_sigma,im_sigma\n")
        for w, s in zip(omegas, sig):
            fh.write("%.17g,%.17g,%.17g\n" % (w, s.real, s.imag))
    manifest = _stamp(plan)
    manifest["outputs"] = {"comparator": "comparator.csv", "manifest": "manifest.json"}
    write_manifest(manifest, out / "manifest.json")


_EXECUTORS = {"sigma": _execute_sigma, "sweep": _execute_sweep, "compare": _execute_compare}


def execute(plan: dict, out) -> None:
    """Run a resolved plan (a manifest) and write its outputs into ``out``."""
    backend = plan.get("backend")
    if backend not in kernel.available_backends():
        backend = kernel.get_backend()
    with kernel.use_backend(backend):
        _EXECUTORS[plan["command"]](plan, Path(out))


# -- commands -----------------------------------------------------------------

def cmd_sigma(args):
    p = _load_source(args)
    plan = _base_plan("sigma", args, p)
    plan.update({"omega": _omega_plan(args), "output_node": args.output_node or p.output_node,
                 "pump_p": args.pump_p})
    execute(plan, args.out)
    print(Path(args.out) / "spectrum.csv")
    return EXIT_OK


def cmd_sweep(args):
    plan = _sweep_plan(args)
    execute(plan, args.out)
    print(Path(args.out) / "grid.txt")
    return EXIT_OK


def cmd_pump_sweep(args):
    plan = _sweep_plan(args, parameter="pump-P")
    execute(plan, args.out)
    print(Path(args.out) / "grid.txt")
    return EXIT_OK


def cmd_compare(args):
    text = Path(args.model).read_text(encoding="utf-8")
    parse_model(text)
    doc = json.loads(text)
    plan = {"command": "compare", "version": __version__, "backend": kernel.get_backend(),
            "source": {"model": str(args.model)}, "model": doc, "omega": _omega_plan(args)}
    execute(plan, args.out)
    print(Path(args.out) / "comparator.csv")
    return EXIT_OK


def cmd_presets(args):
    names = [n.upper() for n in args.names] or list(PRESET_NAMES)
    out = {}
    for name in names:
        try:
            p = preset(name)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
        out[p.name] = {"description": p.description, "output_node": p.output_node,
                       "network": dump_config(p.spec, p.pump)}
        if p.default_axis is not None:
            out[p.name]["default_axis"] = {"parameter": p.default_axis.parameter,
                                           "from": p.default_axis.values[0],
                                           "to": p.default_axis.values[-1],
                                           "steps": len(p.default_axis.values)}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_validate(args):
    if args.preset:
        p = _load_source(args)
        problems = validate(p.spec) + p.pump.problems(p.spec)
        if problems:
            raise ValidationError(problems)
    else:
        parse_config(Path(args.config).read_text(encoding="utf-8"))
    print("valid")
    return EXIT_OK


def cmd_render(args):
    grid = read_grid(args.grid)
    render_heatmap(grid, args.scale).save(args.out)
    print(args.out)
    return EXIT_OK


def cmd_rerun(args):
    path = Path(args.manifest)
    plan = read_manifest(path)
    if plan.get("command") not in _EXECUTORS:
        raise ConfigError(f"manifest command {plan.get('command')!r} cannot be replayed")
    for key in ("timestamp", "outputs", "meta"):
        plan.pop(key, None)
    out = Path(args.out) if args.out else path.parent
    execute(plan, out)
    print(out)
    return EXIT_OK


_COMMANDS = {"sigma": cmd_sigma, "sweep": cmd_sweep, "pump-sweep": cmd_pump_sweep,
             "compare": cmd_compare, "presets": cmd_presets, "validate": cmd_validate,
             "render": cmd_render, "rerun": cmd_rerun}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularityError as exc:
        print(f"singular: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        # invalid values that slipped past argument parsing (e.g. unknown output node)
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
