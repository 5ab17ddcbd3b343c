"""Command-line entry point: ``gen``, ``solve``, ``bench`` and ``verify``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .bench import (PRESETS, UsageError, emit_csv, emit_plot, generate_instance, preset,
                    run_experiment, summarize, verify_oracle)
from .engine import ConfigurationError, EngineParams, run
from .ga import GAParams, run_ga
from .storage import Instance, dump_arrangement, make_adapter

log = logging.getLogger("portstow")


def _cmd_gen(args) -> int:
    n1, n2, n3 = args.dims
    instance = generate_instance(n1, n2, n3, args.nc, args.seed)
    if args.out == "-":
        sys.stdout.write(instance.to_text())
    else:
        instance.save(args.out)
    return 0


def _cmd_solve(args) -> int:
    try:
        instance = Instance.load(args.instance)
    except ValueError as exc:
        raise UsageError(f"bad instance file {args.instance}: {exc}") from exc
    adapter = make_adapter(instance)
    stagnation = args.stagnation
    if stagnation is None and args.max_evals is None:
        stagnation = 20
    t0 = time.perf_counter()
    if args.algo == "hs":
        hms = args.hms
        max_impr = None if args.max_evals is None else max(args.max_evals - hms, 0)
        params = EngineParams(hms=hms, hmcr=args.hmcr, par=args.par,
                              max_improvisations=max_impr, stagnation_limit=stagnation,
                              seed=args.seed)
        trace = run(adapter, params, generic=args.generic)
    else:
        params = GAParams(population_size=args.pop, crossover_rate=args.crossover_rate,
                          mutation_rate=args.mutation_rate, max_evals=args.max_evals,
                          stagnation_limit=stagnation, seed=args.seed)
        trace = run_ga(instance, params)
    elapsed = (time.perf_counter() - t0) * 1e3
    print(f"F_i {trace.f_initial:.6f}")
    print(f"F_f {trace.f_final:.6f}")
    print(f"iterations {trace.iterations}")
    print(f"evals {trace.evaluations}")
    log.info("solved in %.1f ms", elapsed)
    sys.stdout.write(dump_arrangement(adapter.layout, trace.best))
    return 0


def _cmd_bench(args) -> int:
    spec = preset(args.experiment, reps=args.reps, base_seed=args.seed)
    rows = run_experiment(spec, jobs=args.jobs)
    if args.csv:
        emit_csv(rows, args.csv, timing=args.timing)
    if args.plot:
        emit_plot(rows, args.plot)
    for (algo, value), s in sorted(summarize(rows).items(), key=lambda kv: (kv[0][1], kv[0][0])):
        print(f"{algo} {spec.param}={value} F_i={s['mean_f_initial']:.6f} "
              f"F_f={s['mean_f_final']:.6f} evals={s['mean_evals']:.1f}")
    return 0


def _cmd_verify(args) -> int:
    if not args.oracle:
        raise UsageError("nothing to verify; pass --oracle")
    t0 = time.perf_counter()
    total, failures = verify_oracle(seeds=args.seeds)
    print(f"oracle vs exhaustive: {total - len(failures)}/{total} agree "
          f"({time.perf_counter() - t0:.2f} s)")
    for inst in failures:
        print(f"MISMATCH {inst.n1}x{inst.n2}x{inst.n3} dates={inst.delivery_dates}")
    return 0 if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="portstow",
                                     description="Harmony search for port container storage")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--dims", nargs=3, type=int, required=True, metavar=("N1", "N2", "N3"))
    p.add_argument("--nc", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--algo", choices=("hs", "ga"), default="hs")
    p.add_argument("--hms", type=int, default=50)
    p.add_argument("--pop", type=int, default=50)
    p.add_argument("--hmcr", type=float, default=0.95)
    p.add_argument("--par", type=float, default=0.1)
    p.add_argument("--crossover-rate", type=float, default=0.9)
    p.add_argument("--mutation-rate", type=float, default=0.1)
    p.add_argument("--stagnation", type=int, default=None)
    p.add_argument("--max-evals", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--generic", action="store_true",
                   help="use the pure-Python engine loop instead of the kernel")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="run an experiment campaign")
    p.add_argument("--experiment", choices=sorted(PRESETS), required=True)
    p.add_argument("--reps", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv")
    p.add_argument("--plot")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="write wall time into the ms column (output no longer reproducible)")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("verify", help="self-checks")
    p.add_argument("--oracle", action="store_true",
                   help="sorting oracle vs exhaustive enumeration on small bays")
    p.add_argument("--seeds", type=int, default=20)
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"portstow {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"portstow {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        log.exception("unexpected failure")
        print(f"portstow {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
