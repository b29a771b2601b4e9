"""Command-line entry point: generate -> compress -> validate -> run -> bench."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import io
from .compress import TableBuildError, TableDomainError, compress_model
from .envmat import CapacityError
from .md.domain import GhostMapError
from .neighbor import StaleNeighborListError
from .presets import PRESETS, UnknownPresetError, gen_model, get_preset, reference_config
from .structure import ConfigurationError, gen_config

log = logging.getLogger("dpcompress")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

# failures of the computation itself, as opposed to bad invocations
_NUMERICAL = (FloatingPointError, StaleNeighborListError, TableBuildError, TableDomainError,
              CapacityError, ConfigurationError, GhostMapError, io.FormatError)


class UsageError(Exception):
    pass


def _floats(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals or min(vals) <= 0:
        raise argparse.ArgumentTypeError("interval sizes must be positive")
    return vals


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _nonneg(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {text}")
    return v


def _reps(text):
    try:
        reps = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected nx,ny,nz, got {text!r}")
    if len(reps) != 3 or min(reps) < 1:
        raise argparse.ArgumentTypeError("replication needs three positive integers")
    return reps


def _emit(args, payload: dict, lines):
    if args.format == "json":
        print(json.dumps(payload, indent=1))
    else:
        for line in lines:
            print(line)


def _load_model(args):
    if args.model:
        return io.read_model(args.model)
    log.info("no --model given; generating preset %s with seed %d", args.preset, args.seed)
    return gen_model(args.preset, args.seed)


def _load_config(args, model):
    if args.config:
        return io.read_xyz(args.config, type_names=model.type_names)
    p = get_preset(model.provenance.get("preset", args.preset))
    return reference_config(p, jitter=args.jitter, seed=args.seed)


def _load_tables(args, model):
    if args.table:
        tables = io.read_tables(args.table)
        if len(tables) != model.n_types:
            raise UsageError(f"{args.table} holds {len(tables)} tables, model has "
                             f"{model.n_types} species")
        return tables
    return compress_model(model, args.interval)


# -- subcommands ----------------------------------------------------------

def cmd_gen_model(args):
    model = gen_model(args.preset, args.seed)
    io.write_model(args.out, model)
    _emit(args, {"out": args.out, "preset": args.preset, "seed": args.seed},
          [f"wrote {args.out} (preset {args.preset}, seed {args.seed}, "
           f"embedding widths {model.embedding_nets[0].widths})"])


def cmd_gen_config(args):
    if args.preset:
        p = get_preset(args.preset)
        lattice, a, types = p.lattice, p.a, p.type_names
        reps = args.reps or p.reps
    else:
        lattice, a, types = args.lattice, args.a, None
        reps = args.reps or (3, 3, 3)
    if a is None:
        a = 3.634 if lattice == "fcc" else 3.104
    config = gen_config(lattice, a, reps, jitter=args.jitter, seed=args.seed, type_names=types)
    io.write_xyz(args.out, config, {"seed": args.seed, "jitter": args.jitter})
    _emit(args, {"out": args.out, "n_atoms": config.n_atoms},
          [f"wrote {args.out} ({config.n_atoms} atoms, {lattice}, a = {a})"])


def cmd_compress(args):
    model = io.read_model(args.model)
    x_end = args.x_end if args.x_end is not None else 1.0 / args.r_min
    tables = compress_model(model, args.interval, x_end=x_end)
    io.write_tables(args.out, tables)
    size = sum(t.nbytes for t in tables)
    _emit(args, {"out": args.out, "interval": args.interval, "bytes": size,
                 "intervals": [t.n for t in tables]},
          [f"wrote {args.out}: {len(tables)} table(s), {tables[0].n} intervals of "
           f"{args.interval} on [0, {tables[0].x_end:g}], {size / 2**20:.2f} MiB"])


def cmd_validate(args):
    from .validate import validate
    model = _load_model(args)
    rep = validate(model, args.intervals, args.n_configs, args.seed, jitter=args.jitter)
    lines = [f"{'h':>8} {'RMSE_E [eV/atom]':>18} {'RMSE_F [eV/A]':>16}"]
    lines += [f"{h:>8g} {e:>18.3e} {f:>16.3e}" for h, e, f in rep.rows()]
    lines.append(f"log-log slope: energy {rep.slope_e:.2f}, force {rep.slope_f:.2f} "
                 f"({rep.n_configs} configs of {rep.n_atoms} atoms)")
    _emit(args, {"rows": [{"h": h, "rmse_e": e, "rmse_f": f} for h, e, f in rep.rows()],
                 "slope_e": rep.slope_e, "slope_f": rep.slope_f,
                 "n_configs": rep.n_configs, "n_atoms": rep.n_atoms}, lines)


def cmd_run(args):
    from .md import MDConfig, run_md
    model = _load_model(args)
    config = _load_config(args, model)
    tables = None if args.exact else _load_tables(args, model)
    preset = PRESETS.get(model.provenance.get("preset", ""), None)
    dt = args.dt if args.dt is not None else (preset.dt if preset else 1.0)
    md = MDConfig(dt=dt, n_steps=args.steps, T_init=args.temperature, buffer=args.buffer,
                  rebuild_every=args.rebuild_every, thermo_every=args.thermo_every,
                  seed=args.seed, n_workers=args.workers)
    text = args.format != "json"

    def show(rec, st):
        if text:
            print(f"{rec.step:>8d} {rec.ke:>14.6f} {rec.pe:>16.6f} {rec.T:>10.2f} {rec.P:>12.2f}")

    if text:
        print(f"{'step':>8} {'KE [eV]':>14} {'PE [eV]':>16} {'T [K]':>10} {'P [bar]':>12}")
    res = run_md(config, md, model, tables, on_thermo=show)
    header = {"model_seed": model.provenance.get("seed", "n/a"), "config_seed": args.seed,
              "md_seed": args.seed, "n_workers": args.workers, "dt_fs": dt,
              "route": "exact" if tables is None else "fused"}
    if args.thermo:
        io.write_thermo(args.thermo, res.thermo, header)
    if args.out:
        io.write_xyz(args.out, config.with_positions(res.state.positions),
                     {"step": res.state.step})
    payload = {"evaluations": res.n_evaluations, "rebuilds": res.n_rebuilds,
               "thermo": [vars(r) for r in res.thermo], **header}
    _emit(args, payload, [f"{res.n_evaluations} evaluations performed, "
                          f"{res.n_rebuilds} neighbor-list builds"])


def cmd_bench(args):
    from .bench import bench
    model = _load_model(args)
    config = _load_config(args, model)
    tables = _load_tables(args, model)
    rep = bench(model, tables, config, n_workers=args.workers, repeats=args.repeats)
    payload = {k: v for k, v in vars(rep).items()}
    payload["speedup"] = rep.speedup
    _emit(args, payload, rep.lines())


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="random seed (default 0)")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS,
                        help="worker threads for force evaluation (default 1)")
    common.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS,
                        help="report format (default text)")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="dpcompress", parents=[common],
                                     description="Deep Potential tabulation and MD toolkit")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=fn)
        return p

    def model_args(p, required=False):
        p.add_argument("--model", required=required, help="model file (JSON)")
        if not required:
            p.add_argument("--preset", default="copper-like", choices=sorted(PRESETS),
                           help="preset to generate when --model is absent")

    def table_args(p):
        p.add_argument("--table", help="table file (DPTB); built on the fly if absent")
        p.add_argument("--interval", type=_positive(float), default=0.001,
                       help="interval size for on-the-fly tables (default 0.001)")

    def config_args(p):
        p.add_argument("--config", help="configuration (extended XYZ); preset lattice if absent")
        p.add_argument("--jitter", type=_nonneg, default=0.1,
                       help="jitter of the generated lattice in A (default 0.1)")

    p = add("gen-model", cmd_gen_model, "generate a seeded synthetic model")
    p.add_argument("--preset", default="copper-like", choices=sorted(PRESETS))
    p.add_argument("--out", required=True)

    p = add("gen-config", cmd_gen_config, "generate a jittered lattice configuration")
    p.add_argument("--preset", choices=sorted(PRESETS), help="take lattice and species from a preset")
    p.add_argument("--lattice", choices=("fcc", "water"), default="fcc")
    p.add_argument("--a", type=_positive(float), help="lattice constant in A")
    p.add_argument("--reps", type=_reps, help="replication nx,ny,nz")
    p.add_argument("--jitter", type=_nonneg, default=0.0)
    p.add_argument("--out", required=True)

    p = add("compress", cmd_compress, "tabulate the embedding nets of a model")
    model_args(p, required=True)
    p.add_argument("--interval", type=_positive(float), required=True)
    p.add_argument("--r-min", type=_positive(float), default=0.5,
                   help="smallest distance covered by the table, in A (default 0.5)")
    p.add_argument("--x-end", type=_positive(float), help="explicit upper end of the table domain")
    p.add_argument("--out", required=True)

    p = add("validate", cmd_validate, "RMSE of tabulated against exact predictions")
    model_args(p)
    p.add_argument("--intervals", type=_floats, default=[0.1, 0.01, 0.001])
    p.add_argument("--n-configs", type=_positive(int), default=100)
    p.add_argument("--jitter", type=_nonneg, default=0.1)

    p = add("run", cmd_run, "microcanonical Velocity-Verlet run")
    model_args(p)
    table_args(p)
    config_args(p)
    p.add_argument("--exact", action="store_true", help="evaluate the network, not tables")
    p.add_argument("--steps", type=_positive(int), default=1000)
    p.add_argument("--dt", type=_positive(float), help="time step in fs (preset default)")
    p.add_argument("--temperature", type=_nonneg, default=330.0)
    p.add_argument("--buffer", type=_positive(float), default=2.0)
    p.add_argument("--rebuild-every", type=_positive(int), default=50)
    p.add_argument("--thermo-every", type=_positive(int), default=50)
    p.add_argument("--thermo", help="write thermo CSV here")
    p.add_argument("--out", help="write final configuration here")

    p = add("bench", cmd_bench, "time exact and fused force evaluation")
    model_args(p)
    table_args(p)
    config_args(p)
    p.add_argument("--repeats", type=_positive(int), default=3)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name, default in (("seed", 0), ("workers", 1), ("format", "text"), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("dpcompress: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    np.seterr(all="ignore")
    try:
        args.func(args)
    except (UsageError, UnknownPresetError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"dpcompress: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERICAL + (ValueError,) as exc:
        print(f"dpcompress: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
