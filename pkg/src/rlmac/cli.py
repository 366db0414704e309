"""Command line entry point: ``rlmac {analytic,simulate,sweep,baseline}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from decimal import Decimal

import numpy as np

from . import analytic, output
from .config import ConfigError, load_config
from .engine import ConfigurationError
from .runner import baseline_sweep, load_sweep, run_scenario

log = logging.getLogger("rlmac")


def parse_grid(text: str, n: int) -> list[tuple[float, ...]]:
    """Grid points separated by ';'.

    Each point is either ``start:stop:step`` (inclusive range of homogeneous
    loads), a single value for every node, or ``n`` comma-separated values.
    """
    points: list[tuple[float, ...]] = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        if ":" in part:
            try:
                start, stop, step = (Decimal(x) for x in part.split(":"))
            except ValueError:
                raise ValueError(f"bad range {part!r}; expected start:stop:step") from None
            if step <= 0 or stop < start:
                raise ValueError(f"bad range {part!r}")
            g = start
            while g <= stop:
                points.append((float(g),) * n)
                g += step
            continue
        values = [float(x) for x in part.split(",")]
        if len(values) == 1:
            points.append((values[0],) * n)
        elif len(values) == n:
            points.append(tuple(values))
        else:
            raise ValueError(f"grid point {part!r} has {len(values)} values for {n} nodes")
    if not points:
        raise ValueError("empty grid")
    return points


def _config(args):
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.epochs is not None:
        changes["epochs"] = args.epochs
    if getattr(args, "replicates", None) is not None:
        changes["replicates"] = args.replicates
    return cfg.replace(**changes) if changes else cfg


def _out(args):
    return args.out if args.out else "/dev/stdout"


def cmd_analytic(args) -> None:
    loads = np.linspace(args.gmin, args.gmax, args.points)
    curve = analytic.ThroughputCurve.closed_form(loads)
    curve.write_csv(_out(args))
    best = analytic.optimal_load(interval=(args.gmin, args.gmax))
    log.info("closed-form optimum g=%.4f s=%.4f", best.load, best.throughput)


def cmd_simulate(args) -> None:
    cfg = _config(args)
    agents: list = []
    output.emit_epochs(run_scenario(cfg, args.replicate, agents_out=agents), _out(args), cfg.node_count)
    if args.qtables:
        output.emit_qtables(agents, args.qtables)


def cmd_sweep(args) -> None:
    cfg = _config(args)
    grid = parse_grid(args.grid, cfg.node_count)
    result = load_sweep(cfg, grid, jobs=args.jobs)
    output.emit_sweep(result, _out(args), cfg.node_count)


def cmd_baseline(args) -> None:
    cfg = _config(args)
    grid = parse_grid(args.grid, cfg.node_count)
    result = baseline_sweep(cfg, grid, jobs=args.jobs)
    output.emit_sweep(result, _out(args), cfg.node_count)
    totals = result.column("S")
    k = int(np.argmax(totals))
    log.info("ALOHA optimum at loads %s: S=%.4f", result.rows[k].loads, totals[k])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rlmac", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form single-node throughput curve")
    p.add_argument("--gmin", type=float, default=0.0)
    p.add_argument("--gmax", type=float, default=6.0)
    p.add_argument("--points", type=int, default=121)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analytic)

    def common(p, replicates=True):
        p.add_argument("config")
        p.add_argument("--seed", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--out")
        if replicates:
            p.add_argument("--replicates", type=int)

    p = sub.add_parser("simulate", help="per-epoch CSV for one scenario run")
    common(p, replicates=False)
    p.add_argument("--replicate", type=int, default=0, help="replicate index used to derive streams")
    p.add_argument("--qtables", help="also write final Q-tables to this CSV")
    p.set_defaults(func=cmd_simulate)

    for name, func, text in (("sweep", cmd_sweep, "load sweep with learning"),
                             ("baseline", cmd_baseline, "pure-ALOHA load sweep")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--grid", required=True, help="e.g. '0.1:1.0:0.1' or '0.2,0.28,0.2;0.3'")
        p.add_argument("--jobs", type=int, default=1)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "messages": exc.errors}), file=sys.stderr)
        return 2
    except (ConfigurationError, ValueError) as exc:
        print(json.dumps({"error": "invalid", "messages": [str(exc)]}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "io", "messages": [str(exc)]}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
