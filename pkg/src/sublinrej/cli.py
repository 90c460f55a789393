"""Command line entry point: ``sublinrej {envelope,sweep,bandit,bench,verify}``.

Exit codes: 0 on success, 2 for an invalid configuration, 3 when a check fails.
Outputs go to stdout, or to ``--out DIR`` together with a ``manifest.json``
recording the full parameter set.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys

from . import __version__
from .bandit import SCHEDULES
from .builders import ClassViolationError
from .environments import ENVIRONMENTS
from .experiments import (
    CLASSES,
    INJECTIONS,
    VERIFY_SUITES,
    band_overlap,
    bandit_experiment,
    bench,
    envelope_report,
    loglog_slope,
    shape_of,
    sweep,
    verify,
)

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 2, 3

TRACE_COLUMNS = ("seed", "t", "arm", "loss", "cum_loss", "kth_calls", "wall_ns")
REGRET_COLUMNS = ("t", "mean_regret", "std_regret", "n_seeds")
SWEEP_COLUMNS = ("N", "mean_queries", "mean_ratio")
BENCH_COLUMNS = ("K", "algo", "ns_per_iter")
SCHEDULE_ALIASES = {"prop": "proposition", "exp": "experimental"}


class ConfigError(ValueError):
    pass


def parse_size(text: str) -> int:
    """``"4096"``, ``"2^12"`` or ``"2**12"``."""
    m = re.fullmatch(r"\s*(\d+)\s*(?:(?:\^|\*\*)\s*(\d+))?\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"not a size: {text!r}")
    base, exp = int(m.group(1)), m.group(2)
    return base ** int(exp) if exp is not None else base


def parse_sizes(text: str) -> list[int]:
    """Comma-separated sizes, or ``lo..hi`` over powers of two (``2^4..2^20``)."""
    if ".." in text:
        lo, hi = (parse_size(t) for t in text.split("..", 1))
        if lo < 1 or hi < lo or lo & (lo - 1) or hi & (hi - 1):
            raise argparse.ArgumentTypeError(f"range ends must be powers of two with lo <= hi: {text!r}")
        return [2 ** k for k in range(lo.bit_length() - 1, hi.bit_length())]
    return [parse_size(t) for t in text.split(",") if t.strip()]


def parse_ints(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",") if t.strip()]


def parse_schedule(text: str):
    if text in SCHEDULE_ALIASES:
        return SCHEDULE_ALIASES[text]
    if text in SCHEDULES:
        return text
    if text.startswith("const:"):
        try:
            eta = float(text[6:])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad constant step size in {text!r}") from None
        if not eta > 0:
            raise argparse.ArgumentTypeError("constant step size must be positive")
        return eta
    raise argparse.ArgumentTypeError(f"schedule must be prop, exp or const:<eta>, got {text!r}")


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _records_csv(columns, records) -> str:
    return _csv_text(columns, ([r[c] for c in columns] for r in records))


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


class Output:
    """Collects named artifacts; writes them under ``--out`` with a manifest, or prints them."""

    def __init__(self, args, subcommand):
        self.args = args
        self.subcommand = subcommand
        self.files: dict[str, str] = {}

    def add(self, name, text):
        self.files[name] = text

    def finish(self):
        out = self.args.out
        if out is None:
            for text in self.files.values():
                sys.stdout.write(text)
            return
        os.makedirs(out, exist_ok=True)
        for name, text in self.files.items():
            with open(os.path.join(out, name), "w", newline="") as fh:
                fh.write(text)
        params = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "out")}
        manifest = {"subcommand": self.subcommand, "params": params, "seed": self.args.seed,
                    "version": __version__, "outputs": sorted(self.files)}
        with open(os.path.join(out, "manifest.json"), "w") as fh:
            fh.write(_dump_json(manifest))


def cmd_envelope(args) -> int:
    shape = shape_of(args.class_tag)
    size = args.depth if shape == "tree" else args.N
    if size is None:
        raise ConfigError("--depth is required for trees" if shape == "tree" else "--N is required")
    rep = envelope_report(args.class_tag, size, args.seed, args.offset)
    out = Output(args, "envelope")
    if args.format == "json":
        out.add("envelope.json", _dump_json(rep))
    else:
        out.add("envelope.csv", _records_csv(tuple(rep), [rep]))
    out.finish()
    if args.out is not None:
        print(f"{'PASS' if rep['passed'] else 'FAIL'} {args.class_tag} N={rep['N']} "
              f"queries={rep['queries_used']}/{rep['budget_bound']} ratio={rep['ratio']:.6f}")
    return EXIT_OK if rep["passed"] else EXIT_FAILED


def cmd_sweep(args) -> int:
    shape = shape_of(args.class_tag)
    sizes = args.depth if shape == "tree" else args.N
    if not sizes:
        raise ConfigError("--depth is required for trees" if shape == "tree" else "--N is required")
    seeds = range(args.seed, args.seed + args.seeds)
    res = sweep(args.class_tag, sizes, seeds, args.offset)
    out = Output(args, "sweep")
    if args.format == "json":
        out.add("sweep.json", _dump_json({"rows": res.rows, "fit": res.fit}))
    else:
        out.add("sweep.csv", _records_csv(SWEEP_COLUMNS, res.rows))
        out.add("sweep_fit.json", _dump_json(res.fit))
    out.finish()
    return EXIT_OK if all(r["all_passed"] for r in res.rows) else EXIT_FAILED


def _env_params(args):
    params = {}
    if args.zero_fraction is not None:
        params["zero_fraction"] = args.zero_fraction
    if args.phases is not None:
        params["phases"] = args.phases
    return params


def cmd_bandit(args) -> int:
    if args.env == "custom":
        raise ConfigError("the custom environment is available from Python only")
    algos = ("exp3", "fast") if args.algo == "both" else (args.algo,)
    seeds = range(args.seed, args.seed + args.seeds)
    out = Output(args, "bandit")
    finals, summary = {}, {}
    for algo in algos:
        runs, curve = bandit_experiment(algo, args.env, args.K, args.T, args.schedule, args.m, seeds,
                                        env_seed=args.env_seed, env_params=_env_params(args),
                                        workers=args.workers, audit=args.audit)
        trace = []
        for run in runs:
            for row in run.trace_rows():
                trace.append(row if args.record_timing else row[:-1] + (0,))
        finals[algo] = [float(run.regret_curve()[-1]) for run in runs]
        summary[algo] = {"final_mean_regret": float(curve.mean[-1]),
                         "final_std_regret": float(curve.std[-1]), "n_seeds": curve.n_seeds}
        if args.audit and algo == "fast":
            summary[algo]["max_audit_ratio"] = max(float(r.audit_ratios.max()) for r in runs)
        if args.format == "json":
            out.add(f"trace_{algo}.json", _dump_json([dict(zip(TRACE_COLUMNS, r)) for r in trace]))
            out.add(f"regret_{algo}.json",
                    _dump_json([dict(zip(REGRET_COLUMNS, r)) for r in curve.rows()]))
        else:
            out.add(f"trace_{algo}.csv", _csv_text(TRACE_COLUMNS, trace))
            out.add(f"regret_{algo}.csv", _csv_text(REGRET_COLUMNS, curve.rows()))
    if len(algos) == 2 and args.seeds > 1:
        summary["band_overlap_4sigma"] = band_overlap(finals["exp3"], finals["fast"])
    out.add("summary.json", _dump_json(summary))
    if args.out is None:
        # a full trace on stdout is rarely wanted; print the summary only
        sys.stdout.write(out.files["summary.json"])
    else:
        out.finish()
    return EXIT_OK


def cmd_bench(args) -> int:
    algos = ("exp3", "fast") if args.algo == "both" else (args.algo,)
    rows = bench(args.K, algos, warmup=args.warmup, batches=args.batches, seed=args.seed, m=args.m,
                 schedule=args.schedule)
    slopes = {}
    for algo in algos:
        sel = [r for r in rows if r["algo"] == algo]
        if len(sel) >= 2:
            slopes[algo] = loglog_slope([r["K"] for r in sel], [r["ns_per_iter"] for r in sel])
    out = Output(args, "bench")
    if args.format == "json":
        out.add("bench.json", _dump_json({"rows": rows, "loglog_slope": slopes}))
    else:
        out.add("bench.csv", _records_csv(BENCH_COLUMNS, rows))
        out.add("bench_fit.json", _dump_json({"loglog_slope": slopes}))
    out.finish()
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify(args.suite, args.seed, args.inject)
    lines = [f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.detail}" for r in results]
    out = Output(args, "verify")
    if args.format == "json":
        out.add("verify.json", _dump_json([vars(r) for r in results]))
    else:
        out.add("verify.txt", "\n".join(lines) + "\n")
    out.finish()
    if args.out is not None:
        print("\n".join(lines))
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sublinrej", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output directory (default: print to stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("envelope", help="build one envelope and score it")
    p.add_argument("--class", dest="class_tag", choices=CLASSES, required=True)
    p.add_argument("--N", type=parse_size)
    p.add_argument("--depth", type=int)
    p.add_argument("--offset", type=int, default=1, help="tree cutoff offset")
    common(p)
    p.set_defaults(func=cmd_envelope)

    p = sub.add_parser("sweep", help="queries and ratio over a size grid")
    p.add_argument("--class", dest="class_tag", choices=CLASSES, required=True)
    p.add_argument("--N", type=parse_sizes, help="e.g. 2^4..2^20 or 16,256,4096")
    p.add_argument("--depth", type=parse_ints, help="e.g. 4..16")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--offset", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bandit", help="regret curves across seeds")
    p.add_argument("--algo", choices=("exp3", "fast", "both"), default="fast")
    p.add_argument("--env", choices=ENVIRONMENTS, default="fixed_partition")
    p.add_argument("--K", type=parse_size, required=True)
    p.add_argument("--T", type=parse_size, required=True)
    p.add_argument("--schedule", type=parse_schedule, default="experimental")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--env-seed", type=int, default=0)
    p.add_argument("--zero-fraction", type=float)
    p.add_argument("--phases", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--audit", action="store_true", help="record max p/q every round (O(K) per round)")
    p.add_argument("--record-timing", action="store_true",
                   help="fill wall_ns in traces; makes the output machine dependent")
    common(p)
    p.set_defaults(func=cmd_bandit)

    p = sub.add_parser("bench", help="per-iteration time over a K grid")
    p.add_argument("--K", type=parse_sizes, default=parse_sizes("2^10..2^18"))
    p.add_argument("--algo", choices=("exp3", "fast", "both"), default="both")
    p.add_argument("--schedule", type=parse_schedule, default="experimental")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--warmup", type=int, default=50)
    p.add_argument("--batches", type=int, default=7)
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="run the property suites")
    p.add_argument("--suite", choices=("all",) + VERIFY_SUITES, default="all")
    p.add_argument("--inject", choices=INJECTIONS, default="none",
                   help="add a deliberately broken case (negative control)")
    common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ClassViolationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
