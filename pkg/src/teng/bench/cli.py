"""Command line entry point: ``python -m teng <subcommand> --config file.json``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .config import METHODS, ConfigError, apply_overrides, config_from_dict, load_raw
from .runner import (build_reference, fit_stage, initial_theta, make_grid, run_benchmark,
                     run_experiment, summary_table)


def _load(args):
    data = apply_overrides(load_raw(args.config), args.override)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output_dir"] = args.out
    return config_from_dict(data)


def cmd_fit_init(args):
    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = fit_stage(cfg)
    io.save_checkpoint(res.theta, cfg.arch(), out / "init.ckpt")
    io.write_csv(out / "fit_init.csv",
                 ["loss", "converged", "stage1_loss", "stage1_iterations", "stage2_iterations"],
                 [(res.loss, int(res.converged), res.stage1_loss, res.stage1_iterations,
                   res.stage2_iterations)])
    print(f"initial fit loss {res.loss:.6e} converged={res.converged} -> {out / 'init.ckpt'}")
    return 0


def cmd_reference(args):
    cfg = _load(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    theta = initial_theta(cfg)[0] if cfg.reference.source == "network" else None
    ref = build_reference(cfg, theta)
    grid = make_grid(cfg)
    io.save_reference(ref, grid.dims, grid.n_per_dim, grid.lengths, out / "reference.tref")
    print(f"reference with {len(ref.times)} time samples -> {out / 'reference.tref'}")
    return 0


def cmd_solve(args):
    cfg = _load(args)
    res = run_experiment(cfg)
    print(f"{cfg.method.name}: global_rel_l2 {res.global_rel_l2:.6e} "
          f"over {len(res.rows)} steps -> {res.out_dir}")
    return 0


def cmd_benchmark(args):
    cfg = _load(args)
    methods = args.methods.split(",") if args.methods else list(METHODS)
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"--methods: unknown method {m!r}")
    results = run_benchmark(cfg, methods)
    for name, res in results.items():
        print(f"{name:<10} global_rel_l2 {res.global_rel_l2:.6e}")
    return 0


def cmd_report(args):
    root = args.out or (_load(args).output_dir if args.config else ".")
    print(summary_table(root))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="teng", description="Time-evolving natural gradient runs")
    p.add_argument("-v", "--verbose", action="store_true", help="log every time step")
    sub = p.add_subparsers(dest="command", required=True)
    handlers = {"fit-init": cmd_fit_init, "reference": cmd_reference, "solve": cmd_solve,
                "benchmark": cmd_benchmark, "report": cmd_report}
    for name, fn in handlers.items():
        s = sub.add_parser(name)
        s.add_argument("--config", required=name != "report", help="JSON experiment file")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--out", help="output directory")
        s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config key with a JSON value (repeatable)")
        if name == "benchmark":
            s.add_argument("--methods", help=f"comma separated subset of {','.join(METHODS)}")
        s.set_defaults(func=fn)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (io.FormatError, OSError, ValueError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
