"""Command line: ``meshwalk run | experiment | mesh``.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.
Summaries go to stdout as CSV; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
import warnings
from pathlib import Path

from meshwalk.config import RunConfig, load_config
from meshwalk.errors import ConfigError, MeshwalkError, SimplificationStalled

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
DEFAULT_OUT = "meshwalk-out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems are configuration errors here, not argparse's exit 2
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--config", help="INI config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one setting (repeatable)")
    p.add_argument("--seed", type=int, help="master seed (same as --set scene.seed=N)")
    p.add_argument("--out", help=f"output directory (default: $MESHWALK_OUT or ./{DEFAULT_OUT})")
    p.add_argument("--trace", action="store_true", help="also write events.csv with channel logs")
    p.add_argument("--print-config", action="store_true", help="print the effective config and exit")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="meshwalk", description="Progressive-mesh walkthrough simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate one configuration")
    _common(r)
    r.add_argument("--run-id", help="name of the output subdirectory (default: config file stem)")

    e = sub.add_parser("experiment", help="run an experiment preset")
    e.add_argument("name", help="preset name")
    _common(e)
    e.add_argument("--jobs", type=int, default=1, help="grid cells to run in parallel")

    m = sub.add_parser("mesh", help="progressive-mesh tools")
    msub = m.add_subparsers(dest="mesh_command", required=True, parser_class=_Parser)
    s = msub.add_parser("simplify", help="mesh file -> PM stream")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--levels", type=int, default=10)
    s.add_argument("--object-id", type=int, default=0)
    c = msub.add_parser("reconstruct", help="PM stream -> mesh at a level")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--level", type=int, default=None, help="1..L (default: L)")
    i = msub.add_parser("inspect", help="print level boundaries and record sizes")
    i.add_argument("input")
    return p


def _config(args) -> RunConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"scene.seed={args.seed}")
    return load_config(args.config, overrides)


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get("MESHWALK_OUT") or DEFAULT_OUT)


def cmd_run(args) -> int:
    from meshwalk.engine import METRICS, run

    cfg = _config(args)
    if args.print_config:
        sys.stdout.write(cfg.to_ini())
        return EXIT_OK
    report = run(cfg, trace=args.trace)
    run_id = args.run_id or (Path(args.config).stem if args.config else "run")
    out = report.write(_out_dir(args) / run_id, trace=args.trace)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["metric", "full", "post_warmup"])
    for m in METRICS:
        w.writerow([m, f"{report.summary[m]:.6g}", f"{report.summary_post[m]:.6g}"])
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def cmd_experiment(args) -> int:
    from meshwalk.experiments import PRESETS, comparison_rows, run_experiment, write_experiment

    if args.name not in PRESETS:
        raise UsageError(f"unknown experiment {args.name!r}; valid presets: {', '.join(PRESETS)}")
    cfg = _config(args)
    preset = PRESETS[args.name]
    if args.print_config:
        sys.stdout.write(cfg.to_ini())
        return EXIT_OK
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    reports = run_experiment(preset, cfg, jobs=args.jobs, trace=args.trace)
    out = write_experiment(preset, reports, _out_dir(args) / preset.name, trace=args.trace)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["kind", "name", "metric", "value"])
    for kind, name, m, v in comparison_rows(preset, reports):
        w.writerow([kind, name, m, f"{v:.6g}"])
    print(f"wrote {len(reports)} cells to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_mesh(args) -> int:
    from meshwalk.pm.mesh import read_mesh, write_mesh
    from meshwalk.pm.pmfile import read_pm, write_pm
    from meshwalk.pm.records import pm_records
    from meshwalk.pm.simplify import simplify

    if args.mesh_command == "simplify":
        if args.levels < 1:
            raise UsageError("--levels must be >= 1")
        mesh = read_mesh(args.input, object_id=args.object_id)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", SimplificationStalled)
            pm = simplify(mesh, levels=args.levels)
        for wmsg in caught:
            print(f"warning: {wmsg.message}", file=sys.stderr)
        write_pm(pm, args.output)
        print(f"{args.output}: {pm.n_vertices} vertices, base {pm.base_mesh.n_vertices}, "
              f"{len(pm.splits)} splits, {pm.levels} levels", file=sys.stderr)
        return EXIT_OK
    pm = read_pm(args.input)
    if args.mesh_command == "reconstruct":
        level = pm.levels if args.level is None else args.level
        if not 1 <= level <= pm.levels:
            raise UsageError(f"--level must be in 1..{pm.levels}, got {level}")
        write_mesh(pm.reconstruct(level), args.output)
        return EXIT_OK
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["level", "splits", "vertices", "record_bytes"])
    nb = pm.base_mesh.n_vertices
    for rec, bound in zip(pm_records(pm), pm.level_boundaries):
        w.writerow([rec.level, bound, nb + bound, rec.byte_size])
    if pm.stalled:
        print("warning: simplification stalled before the base-mesh target", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "experiment": cmd_experiment, "mesh": cmd_mesh}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MeshwalkError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
