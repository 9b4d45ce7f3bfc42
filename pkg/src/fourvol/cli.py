"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 numerical or inference error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from . import io
from .config import load_config
from .errors import ConfigurationError, FourvolError
from .trigkernels import dirichlet_kernel, fejer_kernel, theta_integrals

log = logging.getLogger("fourvol")


def _estimate(args):
    from .pipeline import run_estimation

    cfg = load_config(args.config)
    if args.out:
        cfg.output = args.out
    result = run_estimation(cfg)
    sys.stdout.write(io.dumps_json(result))


def _simulate(args):
    from .pipeline import run_simulate

    cfg = load_config(args.config)
    if args.out:
        cfg.output = args.out
    sys.stdout.write(io.dumps_json(run_simulate(cfg)))


def _montecarlo(args):
    from .pipeline import run_montecarlo

    cfg = load_config(args.config)
    if args.out:
        cfg.output = args.out
    if args.reps is not None:
        cfg.replications = args.reps
    if args.workers is not None:
        cfg.workers = args.workers
    result = run_montecarlo(cfg, progress=lambda r: log.info("replication %d done", r))
    sys.stdout.write(io.dumps_json(result["summary"]))


def _kernels(args):
    if args.order < 1:
        raise ConfigurationError(f"--order must be >= 1, got {args.order}")
    x = np.linspace(-0.5, 0.5, args.points)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "dirichlet", "fejer"])
        for xi, dv, fv in zip(x, dirichlet_kernel(args.order, x), fejer_kernel(args.order, x)):
            w.writerow([repr(float(xi)), repr(float(dv)), repr(float(fv))])
    if args.ticks:
        ticks = io.parse_ticks(args.ticks)
        if len(ticks) < 2:
            ticks = ticks * 2
        gj, gk = ticks[0].grid, ticks[1].grid
        quad = min(gj.spacings.min(), gk.spacings.min())
        th = theta_integrals(gj, gk, gj, gk, args.N or args.order, quad, B=args.B)
        theta_out = args.out.rsplit(".", 1)[0] + "_theta.csv"
        with open(theta_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "tilde", "acute", "check", "grave"])
            for row in zip(th.t_grid, th.tilde, th.acute, th.check, th.grave):
                w.writerow([repr(float(v)) for v in row])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fourvol", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="estimate functionals from tick files")
    e.add_argument("--config", required=True)
    e.add_argument("--out", help="output directory (overrides config)")
    e.set_defaults(func=_estimate)

    s = sub.add_parser("simulate", help="simulate a path and write ticks plus ground truth")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=_simulate)

    m = sub.add_parser("montecarlo", help="replicated simulation and studentised summaries")
    m.add_argument("--config", required=True)
    m.add_argument("--out")
    m.add_argument("--reps", type=int)
    m.add_argument("--workers", type=int)
    m.set_defaults(func=_montecarlo)

    k = sub.add_parser("kernels", help="write kernel values (and theta-integral curves) to CSV")
    k.add_argument("--order", type=int, required=True, help="Dirichlet q and Fejer M")
    k.add_argument("--out", required=True)
    k.add_argument("--points", type=int, default=1001)
    k.add_argument("--ticks", help="tick CSV; adds <out>_theta.csv for its first two assets")
    k.add_argument("--N", type=int, help="spectrum width for the theta curves (default: --order)")
    k.add_argument("--B", type=int, default=64)
    k.set_defaults(func=_kernels)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except FourvolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
