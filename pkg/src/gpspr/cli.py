"""Command-line front end.

Exit codes: 0 success, 1 configuration error (bad flags or values),
2 runtime or numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

from gpspr import experiments, io
from gpspr.diagnostics import contraction_constants
from gpspr.errors import ConfigurationError, DimensionError, GpsprError
from gpspr.model import PriorSpec, ProblemInstance, SamplingEnsemble, gen_gaussian
from gpspr.solvers import ALGORITHMS, SolverConfig, run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def parse_ratio_range(text):
    """Parse ``"a:step:b"`` into the inclusive list ``a, a + step, ..., b``.

    Values are rounded to a 1e-12 grid so accumulated float error cannot add
    or drop the end point.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"ratio range must look like a:step:b, got {text!r}")
    try:
        a, step, b = (float(p) for p in parts)
    except ValueError:
        raise ConfigurationError(f"ratio range has non-numeric parts: {text!r}") from None
    if not step > 0:
        raise ConfigurationError("ratio step must be positive")
    if a > b:
        raise ConfigurationError(f"empty ratio range {text!r}")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + k * step, 12) for k in range(count)]


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"expected a comma-separated list of integers, got {text!r}") from None


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--quiet", action="store_true")


def _table_opts(p):
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")


def _m_opts(p):
    p.add_argument("--m", type=int, default=None, help="absolute number of measurements")
    p.add_argument("--ratios", default=None, help="m/n values as a:step:b or a comma list")


def build_parser():
    parser = _Parser(prog="gpspr", description="Graph projection splitting for phase retrieval.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("solve", help="solve one instance read from files")
    _common(p)
    p.add_argument("--matrix", required=True, help="n x m sampling matrix (.gpsmat)")
    p.add_argument("--amplitudes", required=True, help="amplitudes (.gpsvec or .csv)")
    p.add_argument("--truth", default=None, help="optional ground truth (.gpsvec)")
    p.add_argument("--algo", choices=[a for a in ALGORITHMS if a not in ("gps_tv", "hio")],
                   default="rgps")
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--stop-rule", choices=("residual", "oracle_rel_err"), default=None)
    p.add_argument("--prior", choices=("none", "real", "nonnegative", "l1", "l0"), default="none")
    p.add_argument("--p", type=float, default=None, help="soft-threshold level for --prior l1")
    p.add_argument("--s", type=int, default=None, help="sparsity for --prior l0")
    p.add_argument("--trace", default=None, help="trace CSV path (default: OUTPUT.trace.csv)")
    p.add_argument("--timing", action="store_true", help="fill the trace seconds column")

    p = sub.add_parser("phase-transition", help="success rate versus m/n")
    _common(p)
    _table_opts(p)
    _m_opts(p)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--field", choices=("real", "complex"), default="real")
    p.add_argument("--algos", default="gps,rgps")
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--max-iters", type=int, default=5000)

    p = sub.add_parser("noise-sweep", help="median error versus SNR")
    _common(p)
    _table_opts(p)
    _m_opts(p)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--field", choices=("real", "complex"), default="real")
    p.add_argument("--algos", default="gps,rgps")
    p.add_argument("--snr", default="10,15,20,25,30,35,40,45,50")
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--max-iters", type=int, default=experiments.NOISE_MAX_ITERS)

    p = sub.add_parser("sparse", help="sparse recovery with a known support")
    _common(p)
    _table_opts(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--sparsity", default="5,10")
    p.add_argument("--p", default=None, help="l1 thresholds (default: p = s)")
    p.add_argument("--variant", choices=("l1", "l0"), default="l1")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--max-iters", type=int, default=5000)

    p = sub.add_parser("tv", help="HIO followed by TV-regularized relaxed GPS")
    _common(p)
    _table_opts(p)
    p.add_argument("--h", type=int, default=16)
    p.add_argument("--w", type=int, default=16)
    p.add_argument("--snr", default="inf,30")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--pad", type=int, default=2)
    p.add_argument("--hio-iters", type=int, default=1000)
    p.add_argument("--tv-steps", type=int, default=30)
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--tv-weight", type=float, default=experiments.TV_WEIGHT)
    p.add_argument("--blocks", type=int, default=3)

    p = sub.add_parser("spectral", help="contraction constants for a Gaussian instance")
    _common(p)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--m", type=int, default=32)
    p.add_argument("--field", choices=("real", "complex"), default="complex")
    p.add_argument("--t", type=float, default=0.1)
    return parser


def _resolve_ratios(args):
    if args.m is not None and args.ratios is not None:
        raise ConfigurationError("give either --m or --ratios, not both")
    if args.m is not None:
        if args.m < 1:
            raise ConfigurationError("--m must be positive")
        return [args.m / args.n]
    if args.ratios is None:
        return [2.0]
    if ":" in args.ratios:
        return parse_ratio_range(args.ratios)
    return _float_list(args.ratios)


def _algos(text):
    algos = [a.strip() for a in text.split(",") if a.strip()]
    for a in algos:
        if a not in ("gps", "rgps", "dr", "rdr"):
            raise ConfigurationError(f"unknown algorithm {a!r}")
    return tuple(algos)


def _echo(args, extra=None):
    items = {k: v for k, v in sorted(vars(args).items())}
    if extra:
        items.update(extra)
    for k, v in items.items():
        print(f"config {k} = {v}")


def _finish_table(table, args):
    if args.output:
        experiments.emit(table, args.output, args.format)
    if not args.quiet:
        print(",".join(table.columns))
        for row in table.rows:
            print(",".join(experiments._fmt(v) for v in row))


def _load_amplitudes(path):
    if path.endswith(".csv"):
        return io.read_amplitudes_csv(path)
    return io.load_vector(path).real


def _solve_prior(args, n):
    if args.prior == "none":
        return PriorSpec.none()
    if args.prior == "real":
        return PriorSpec.indicator(real_valued=True)
    if args.prior == "nonnegative":
        return PriorSpec.indicator(nonnegative=True)
    if args.prior == "l1":
        if args.p is None:
            raise ConfigurationError("--prior l1 needs --p")
        return PriorSpec.soft_threshold(args.p)
    if args.s is None:
        raise ConfigurationError("--prior l0 needs --s")
    return PriorSpec.hard_threshold(args.s)


def cmd_solve(args):
    a = io.load_matrix(args.matrix)
    b = _load_amplitudes(args.amplitudes)
    truth = io.load_vector(args.truth) if args.truth else None
    stop = args.stop_rule or ("oracle_rel_err" if truth is not None else "residual")
    _echo(args, {"stop_rule": stop})
    ens = SamplingEnsemble.from_matrix(a)
    inst = ProblemInstance(ens, b, truth=truth, seed=args.seed)
    cfg = SolverConfig(algorithm=args.algo, t=args.t, max_iters=args.max_iters, tol=args.tol,
                       stop_rule=stop, seed=args.seed)
    x, trace = run(inst, cfg, _solve_prior(args, ens.n))
    if args.output:
        io.save_vector(args.output, x)
        trace.to_csv(args.trace or args.output + ".trace.csv", timing=args.timing)
    elif args.trace:
        trace.to_csv(args.trace, timing=args.timing)
    if not args.quiet:
        print(f"status {trace.status} after {trace.iterations} iterations, "
              f"residual {trace.residuals[-1]:.3e}")
    return EXIT_RUNTIME if trace.status == "error" else EXIT_OK


def cmd_phase_transition(args):
    ratios = _resolve_ratios(args)
    grid = experiments.ExperimentGrid(args.n, tuple(ratios), args.trials, _algos(args.algos),
                                      args.field, None, args.seed)
    _echo(args, {"resolved_ratios": ratios})
    table = experiments.phase_transition(grid, max_iters=args.max_iters, t=args.t,
                                         threads=args.threads)
    _finish_table(table, args)
    return EXIT_OK


def cmd_noise_sweep(args):
    ratios = _resolve_ratios(args)
    snr = _float_list(args.snr)
    grid = experiments.ExperimentGrid(args.n, tuple(ratios), args.trials, _algos(args.algos),
                                      args.field, tuple(snr), args.seed)
    _echo(args, {"resolved_ratios": ratios})
    table = experiments.noise_sweep(grid, max_iters=args.max_iters, t=args.t,
                                    threads=args.threads)
    _finish_table(table, args)
    return EXIT_OK


def cmd_sparse(args):
    sparsity = _int_list(args.sparsity)
    p = _float_list(args.p) if args.p else None
    _echo(args)
    table = experiments.sparse_experiment(args.n, sparsity, p, args.trials, args.variant,
                                          args.seed, args.max_iters, args.threads)
    _finish_table(table, args)
    return EXIT_OK


def cmd_tv(args):
    snr = _float_list(args.snr)
    _echo(args)
    table = experiments.tv_experiment(
        args.h, args.w, snr, args.trials, args.seed, args.threads,
        pad=args.pad, hio_iters=args.hio_iters, tv_steps=args.tv_steps, t=args.t,
        tv_weight=args.tv_weight, blocks=args.blocks,
    )
    _finish_table(table, args)
    return EXIT_OK


def cmd_spectral(args):
    _echo(args)
    inst = gen_gaussian(args.n, args.m, args.field, args.seed)
    report = contraction_constants(inst.ensemble, inst.truth)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(report.to_json() + "\n")
    if not args.quiet:
        for line in report.lines():
            print(line)
    if args.t >= report.t_max:
        print(f"warning: t = {args.t} is not below t_max = {report.t_max:.6g}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "phase-transition": cmd_phase_transition,
    "noise-sweep": cmd_noise_sweep,
    "sparse": cmd_sparse,
    "tv": cmd_tv,
    "spectral": cmd_spectral,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise ConfigurationError("--threads must be at least 1")
        return COMMANDS[args.command](args)
    except (ConfigurationError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GpsprError, ArithmeticError, FloatingPointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
