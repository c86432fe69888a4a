"""Command-line entry point: ``coapcc {run,figure,validate,oracle,topology}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from coapcc import oracle, sweep
from coapcc.config import ConfigError, load_config
from coapcc.engine import run
from coapcc.topology import TOPOLOGIES, build


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = Path(args.out or config.output or "results")
    t0 = time.perf_counter()
    rows = sweep.run_sweep(config, parallel=args.parallel)
    path = sweep.write_csv(rows, out / "sweep.csv")
    figures = sweep.covered_figures(rows)
    for fid in figures:
        sweep.emit_figure_data(rows, fid, out)
    if args.trace:
        trace_dir = out / "traces"
        trace_dir.mkdir(parents=True, exist_ok=True)
        for cell in config.cells:
            policy, topology, ldr, load, seed = cell
            sc = config.scenario(*cell)
            sc.trace = True
            lines = run(sc).trace_lines()
            name = f"{policy.value}_{topology}_ldr{ldr:g}_{load:g}kbps_s{seed}.ndjson"
            (trace_dir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
    errors = sum(1 for r in rows if r["status"].startswith("error"))
    print(f"{len(config.cells)} cells -> {path} ({len(figures)} figure files, "
          f"{errors} error rows, {time.perf_counter() - t0:.1f} s)")
    return 0


def _cmd_figure(args: argparse.Namespace) -> int:
    if args.figure_id not in sweep.FIGURES:
        print(f"unknown figure id {args.figure_id!r}; valid ids: {', '.join(sweep.FIGURES)}",
              file=sys.stderr)
        return 2
    rows = sweep.read_csv(args.rows)
    path = sweep.emit_figure_data(rows, args.figure_id, args.out)
    print(path)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    print(f"ok: {len(config.cells)} cells "
          f"({len(config.policies)} policies x {len(config.topologies)} topologies x "
          f"{len(config.ldrs)} ldrs x {len(config.loads_kbps)} loads x {len(config.seeds)} seeds)")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    bad, worst = oracle.cross_check(args.traces, seed=args.seed)
    status = "PASS" if bad == 0 else "FAIL"
    print(f"{status}: {args.traces} traces, {bad} mismatching, max |error| = {worst:.3e} s")
    return 0 if bad == 0 else 1


def _cmd_topology(args: argparse.Namespace) -> int:
    sys.stdout.write(build(args.name).export())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coapcc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a sweep and write CSV output")
    p.add_argument("config")
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--trace", action="store_true", help="also write NDJSON event traces per cell")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("figure", help="extract one figure's series from a sweep CSV")
    p.add_argument("figure_id")
    p.add_argument("--rows", default="results/sweep.csv")
    p.add_argument("--out", default="results")
    p.set_defaults(func=_cmd_figure)

    p = sub.add_parser("validate", help="check a config file without running it")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("oracle", help="cross-check the RTO estimators against the reference evaluator")
    p.add_argument("--traces", type=int, default=1000)
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("topology", help="print a topology with roles and next hops")
    p.add_argument("name", choices=list(TOPOLOGIES))
    p.set_defaults(func=_cmd_topology)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
