"""Command-line entry point.

Subcommands: spectrum, otoc, classical, scaling, goe, plot.  Every run
reads a JSON config (--config), applies flag overrides (--out, --seed,
--threads), and writes CSV tables with provenance headers into a directory
named by the resolved config hash.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments as ex
from . import svg
from .config import ConfigError, load_config

COMMANDS = ("spectrum", "otoc", "classical", "scaling", "goe", "plot")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otoclab",
        description="u(3) quantum-chaos laboratory: spectra, OTOC "
                    "wiggliness, classical regularity, scaling studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--out", default=None, help="output directory root")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (mandatory here or in the config)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for independent work items")
        p.add_argument("--print-config", action="store_true",
                       help="echo the fully resolved config and exit")
    return parser


def _run_plot(cfg) -> str:
    p = cfg.plot
    if not p.input or not p.x or not p.y:
        raise ConfigError("plot needs plot.input, plot.x and plot.y")
    table = ex.read_table_csv(p.input)
    run_dir = ex.write_outputs({}, cfg, "plot")
    out_path = f"{run_dir}/{p.output}"
    svg.emit_svg(table, x=p.x, ys=list(p.y), path=out_path,
                 logx=p.logx, logy=p.logy)
    return out_path


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"out": args.out, "seed": args.seed, "threads": args.threads}
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.print_config:
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        return 0
    try:
        if args.command == "plot":
            out = _run_plot(cfg)
            print(out)
            return 0
        runner = {
            "spectrum": ex.run_spectrum,
            "otoc": ex.run_otoc_scan,
            "classical": ex.run_classical_map,
            "scaling": ex.run_scaling,
            "goe": ex.run_goe,
        }[args.command]
        tables = runner(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    run_dir = ex.write_outputs(tables, cfg, args.command)
    print(run_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
