"""Command-line front end.

::

    fbis screen data.csv --response y -o report.json
    fbis ifbis data.csv --response y -o trace.json
    fbis simulate --example 2 --n 400 --p 1000 -o data.csv
    fbis bench table1 --reps 20 -o results.csv

Every failure prints a single line ``ERROR <Code>: <message>`` on stderr and
exits with 2 (usage), 3 (data) or 4 (numerical).  Variable indices in
reports are 1-based column positions of the predictor block, in file order
after the response column is removed.
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench import STANDARD_GRID, estimate_runtime, run_table1, run_table2
from .datagen import SimSpec, gen_example
from .errors import FBISError, UsageError
from .ifbis import IfbisConfig, ifbis_run
from .kernels import Kernel
from .mekro import MekroConfig
from .reports import (
    dataset_to_csv,
    envelope,
    ifbis_config_to_dict,
    read_dataset,
    screening_config_to_dict,
    screening_report_to_dict,
    trace_to_dict,
)
from .screening import ScreeningConfig, fbis_screen

log = logging.getLogger("fbis")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _q(value):
    if value.lower() == "max":
        return "max"
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'max', got {value!r}") from None


def _xi_grid(value):
    try:
        lo, hi, count = value.split(":")
        return np.geomspace(float(lo), float(hi), int(count))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:count, got {value!r}") from None


def _grid(value):
    """``example:rho:sigma2`` cells separated by commas."""
    cells = []
    for item in value.split(","):
        try:
            e, r, s = item.split(":")
            cells.append((int(e), float(r), float(s)))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"grid cells look like example:rho:sigma2, got {item!r}"
            ) from None
    return cells


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kernel", choices=[k.value for k in Kernel], default=None,
                        help="smoothing kernel (default: epanechnikov for screening, "
                             "gaussian for MEKRO)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes for bench (default: FBIS_THREADS or all cores)")
    common.add_argument("-o", "--output", default=None, help="output file (default: stdout)")
    common.add_argument("--verbose", action="store_true", help="write a sibling .log file")

    parser = _Parser(prog="fbis", description="Favored-bandwidth independence screening.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("screen", parents=[common], help="marginal FBIS screening")
    p.add_argument("data")
    p.add_argument("--response", required=True)
    p.add_argument("--q", type=_q, default="max")
    p.add_argument("--permutations", type=int, default=1)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--hard", action="store_true", help="also report the hard-rule set")
    p.add_argument("--rate", choices=["p", "logn"], default="p")

    p = sub.add_parser("ifbis", parents=[common], help="iterative FBIS with MEKRO refinement")
    p.add_argument("data")
    p.add_argument("--response", required=True)
    p.add_argument("--s0", type=int, default=None)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--max-iterations", type=int, default=10)
    p.add_argument("--xi-grid", type=_xi_grid, default=None)
    p.add_argument("--rule", choices=["permutation", "top_k"], default="permutation")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--permutations", type=int, default=1)
    p.add_argument("--rate", choices=["p", "logn"], default="p")

    p = sub.add_parser("simulate", parents=[common], help="draw a simulated dataset")
    p.add_argument("--example", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--p", type=int, default=1000)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--sigma2", type=float, default=1.0)

    p = sub.add_parser("bench", parents=[common], help="simulation benchmarks")
    p.add_argument("table", choices=["table1", "table2"])
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--grid", type=_grid, default=None,
                   help="comma-separated example:rho:sigma2 cells (default: all 12)")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--p", type=int, default=1000)
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--test-n", type=int, default=10000)
    p.add_argument("--format", choices=["csv", "json"], default=None,
                   help="default: json when -o ends in .json, else csv")
    p.add_argument("--dry-run", action="store_true",
                   help="print the estimated runtime and exit")
    return parser


def _threads(args):
    if args.threads is not None:
        n = args.threads
    elif os.environ.get("FBIS_THREADS"):
        try:
            n = int(os.environ["FBIS_THREADS"])
        except ValueError:
            raise UsageError(f"FBIS_THREADS must be an integer, got {os.environ['FBIS_THREADS']!r}")
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise UsageError(f"thread count must be at least 1, got {n}")
    return n


def _screening_config(args, seed):
    kw = dict(seed=seed, rate=args.rate, n_permutations=args.permutations)
    if args.kernel:
        kw["kernel"] = Kernel(args.kernel)
    if getattr(args, "q", None) is not None:
        kw["q"] = args.q
    if getattr(args, "tau", None) is not None:
        kw["tau"] = args.tau
    try:
        return ScreeningConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump(doc):
    return json.dumps(doc, indent=1) + "\n"


def _cmd_screen(args):
    cfg = _screening_config(args, args.seed)
    t0 = time.perf_counter()
    data = read_dataset(args.data, args.response)
    t1 = time.perf_counter()
    log.info("loaded %s: n=%d p=%d", args.data, data.n, data.p)
    report = fbis_screen(data, cfg)
    t2 = time.perf_counter()
    result = screening_report_to_dict(report, names=data.names)
    if not args.hard:
        del result["hard_selected"]
    if args.top_k is not None:
        if args.top_k < 1:
            raise UsageError("--top-k must be at least 1")
        result["top_k"] = [int(j) + 1 for j in report.top_k(args.top_k)]
    result["names"] = data.names
    log.info("h*=%.6g omega=%.6g selected=%d", report.h_star, report.omega, len(report.selected))
    config = {"command": "screen", "data": str(args.data), "response": args.response,
              "screening": screening_config_to_dict(cfg)}
    return _dump(envelope(config, result, {"load": t1 - t0, "screen": t2 - t1}))


def _cmd_ifbis(args):
    scfg = _screening_config(args, args.seed)
    try:
        mkw = dict(seed=args.seed, xi_grid=args.xi_grid)
        if args.kernel:
            mkw["kernel"] = Kernel(args.kernel)
        cfg = IfbisConfig(
            screening=scfg,
            mekro=MekroConfig(**mkw),
            s0=args.s0,
            k_max=args.k_max,
            max_iterations=args.max_iterations,
            rule=args.rule,
            top_k=args.top_k,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    t0 = time.perf_counter()
    data = read_dataset(args.data, args.response)
    t1 = time.perf_counter()
    trace = ifbis_run(data, cfg)
    t2 = time.perf_counter()
    for k, it in enumerate(trace.iterations, start=1):
        log.info("iteration %d: candidates=%s selected=%s", k,
                 [j + 1 for j in it.candidates], [j + 1 for j in it.selected])
    log.info("stop: %s", trace.stop_reason.value)
    result = trace_to_dict(trace, names=data.names)
    result["names"] = data.names
    config = {"command": "ifbis", "data": str(args.data), "response": args.response,
              "ifbis": ifbis_config_to_dict(cfg)}
    return _dump(envelope(config, result, {"load": t1 - t0, "ifbis": t2 - t1}))


def _cmd_simulate(args):
    try:
        spec = SimSpec(example=args.example, n=args.n, p=args.p, rho=args.rho,
                       sigma2=args.sigma2, seed=args.seed)
    except ValueError as exc:
        if isinstance(exc, FBISError):
            raise
        raise UsageError(str(exc)) from None
    log.info("simulating %s", spec)
    return dataset_to_csv(gen_example(spec))


def _cmd_bench(args):
    if args.grid is None:
        grid = [SimSpec(s.example, n=args.n, p=args.p, rho=s.rho, sigma2=s.sigma2)
                for s in STANDARD_GRID]
    else:
        grid = [SimSpec(e, n=args.n, p=args.p, rho=r, sigma2=s) for e, r, s in args.grid]
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    workers = _threads(args)
    seconds = estimate_runtime(args.table, args.reps, len(grid), workers)
    log.info("estimated runtime %.0f s (%d cells, %d reps, %d workers)",
             seconds, len(grid), args.reps, workers)
    if args.dry_run:
        return (f"{args.table}: {len(grid)} cells x {args.reps} replicates, "
                f"{workers} worker(s): estimated {seconds / 60:.1f} minutes\n")
    if args.table == "table1":
        scfg = ScreeningConfig(kernel=Kernel(args.kernel)) if args.kernel else None
        result = run_table1(grid, args.reps, top_k=args.top_k, seed_base=args.seed,
                            cfg=scfg, workers=workers)
    else:
        cfg = None
        if args.kernel:
            k = Kernel(args.kernel)
            cfg = IfbisConfig(screening=ScreeningConfig(kernel=k), mekro=MekroConfig(kernel=k))
        result = run_table2(grid, args.reps, test_n=args.test_n, seed_base=args.seed,
                            cfg=cfg, workers=workers)
    fmt = args.format or ("json" if str(args.output or "").endswith(".json") else "csv")
    if fmt == "json":
        return _dump(envelope({"command": "bench", "table": args.table}, result.to_dict()))
    return result.to_csv()


_COMMANDS = {
    "screen": _cmd_screen,
    "ifbis": _cmd_ifbis,
    "simulate": _cmd_simulate,
    "bench": _cmd_bench,
}


def _setup_logging(args):
    log.handlers.clear()
    log.propagate = False
    if not getattr(args, "verbose", False):
        log.setLevel(logging.WARNING)
        return
    log.setLevel(logging.INFO)
    if args.output:
        handler = logging.FileHandler(f"{args.output}.log", mode="w")
    else:
        handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)


def _fail(code, message, status):
    one_line = " ".join(str(message).split())
    sys.stderr.write(f"ERROR {code}: {one_line}\n")
    return status


def main(argv=None):
    """Entry point; returns the process exit status."""
    try:
        args = build_parser().parse_args(argv)
        _setup_logging(args)
        if args.output is not None and not Path(args.output).resolve().parent.is_dir():
            raise UsageError(f"output directory for {args.output} does not exist")
        if getattr(args, "data", None) is not None and not Path(args.data).is_file():
            raise UsageError(f"input file {args.data} does not exist")
        text = _COMMANDS[args.command](args)
        _emit(text, args.output)
        return 0
    except FBISError as exc:
        return _fail(exc.code, exc, exc.exit_code)
    except (ValueError, TypeError) as exc:
        return _fail("InvalidArgument", exc, 2)
    except ArithmeticError as exc:
        return _fail("NumericalFailure", exc, 4)
    except MemoryError:
        return _fail("OutOfMemory", "not enough memory for this problem size", 4)
    finally:
        for handler in log.handlers:
            handler.close()


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
