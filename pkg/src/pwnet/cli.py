"""Command-line front end: ``pwnet analyze|oracle|simulate|bench|generate``.

Exit status is 0 on success, 1 when an analysis fails or the net is
outside the supported class, and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .bench import ENGINES, BenchSpec, generate_parallel_bench, rows_to_csv, run_bench
from .errors import (
    InvalidStructure,
    NetSyntaxError,
    NotFreeChoice,
    PwnError,
    SemanticError,
    StateCapExceeded,
)
from .io import AnalysisResult, read_net, render_native
from .mdp import (
    SCHEDULERS,
    build_mdp,
    chain_value,
    check_soundness_explicit,
    confusion_free_on,
    minmax_values,
    simulate,
)
from .reduction import Verdict, reduce

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(result: AnalysisResult, out) -> None:
    print(result.to_json(), file=out, flush=True)


def _load(path: str):
    try:
        return read_net(path)
    except FileNotFoundError as exc:
        raise UsageError(f"{path}: no such file") from exc
    except (NetSyntaxError, SemanticError) as exc:
        # both render as "line[:column]: message" when a line is known
        sep = ":" if exc.line is not None else ": "
        raise PwnError(f"{path}{sep}{exc}") from exc
    except PwnError as exc:
        raise PwnError(f"{path}: {exc}") from exc


def _oracle_fields(net, cap: int, minmax: bool = True, schedulers=("min-id", "max-id")) -> dict:
    start = time.perf_counter()
    fields: dict = {}
    try:
        model = build_mdp(net, cap)
    except StateCapExceeded as exc:
        return {"status": "StateCapExceeded", "cap": exc.cap}
    except PwnError as exc:
        return {"status": type(exc).__name__, "message": str(exc)}
    fields["states"] = model.state_count
    fields["sound"] = check_soundness_explicit(net, cap)
    fields["confusion_free_on_explored"] = confusion_free_on(model)
    approx = False
    for name in schedulers:
        res = chain_value(model, SCHEDULERS[name]())
        fields[name] = res.value
        approx |= res.approximate
    if minmax:
        mm = minmax_values(model)
        fields["min"], fields["max"] = mm.minimum, mm.maximum
        approx |= mm.approximate
    fields["approximate"] = approx
    fields["status"] = "ok"
    fields["wall_ms"] = round((time.perf_counter() - start) * 1000, 3)
    return fields


def cmd_analyze(args, out) -> int:
    status = EXIT_OK
    for path in args.files:
        try:
            net = _load(path)
        except PwnError as exc:
            print(f"error: {exc}", file=sys.stderr)
            _emit(AnalysisResult(Path(path).stem, "error", message=str(exc)), out)
            status = EXIT_FAIL
            continue
        start = time.perf_counter()
        try:
            outcome = reduce(net)
        except NotFreeChoice as exc:
            result = AnalysisResult(net.name, "not_free_choice", message=str(exc))
            status = EXIT_FAIL
        except InvalidStructure as exc:
            result = AnalysisResult(net.name, "error", message=f"{path}: {exc}")
            status = EXIT_FAIL
        else:
            result = AnalysisResult(
                net.name, outcome.verdict.value, outcome.expected_reward,
                dict(outcome.rule_counts), message=outcome.reason or None)
            if outcome.verdict is Verdict.INCONCLUSIVE:
                status = EXIT_FAIL
            if args.trace:
                Path(args.trace).write_text(outcome.trace.to_text(), encoding="utf-8")
        result.timings_ms = {"reduce": (time.perf_counter() - start) * 1000}
        if args.oracle:
            result.oracle = _oracle_fields(net, args.cap)
        _emit(result, out)
    return status


def cmd_oracle(args, out) -> int:
    try:
        net = _load(args.file)
    except PwnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    fields = _oracle_fields(net, args.cap, minmax=args.minmax, schedulers=(args.scheduler,))
    if fields["status"] != "ok":
        _emit(AnalysisResult(net.name, "inconclusive", oracle=fields, message=fields.get("message")), out)
        return EXIT_FAIL
    verdict = "sound" if fields["sound"] else "unsound"
    value = fields[args.scheduler]
    _emit(AnalysisResult(net.name, verdict, value, oracle=fields), out)
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    try:
        net = _load(args.file)
        res = simulate(net, SCHEDULERS[args.scheduler](), run_count=args.runs, seed=args.seed,
                       step_bound=args.step_bound)
    except PwnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    record = {
        "net": net.name,
        "engine": "simulate",
        "runs": res.runs,
        "seed": args.seed,
        "mean": float(res.mean),
        "stderr": res.stderr,
        "first_transition": {k[0]: res.prefix_counts[k] / res.runs for k in sorted(res.prefix_counts) if len(k) == 1},
    }
    print(json.dumps(record), file=out)
    return EXIT_OK


def cmd_bench(args, out) -> int:
    engines = tuple(args.engines.split(",")) if args.engines else ENGINES
    unknown = set(engines) - set(ENGINES)
    if unknown:
        raise UsageError(f"unknown engine(s): {', '.join(sorted(unknown))}")
    rows = run_bench(args.max_n, repeat=args.repeat, engines=engines, cap=args.cap,
                     timeout=args.timeout, sim_runs=args.sim_runs, seed=args.seed)
    text = rows_to_csv(rows)
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def parse_bench_spec(text: str) -> BenchSpec:
    """Parse ``n=5,p=4/5:2/3,r=1:2,fork=0,join=0,seed=7``.

    A single ``p`` or ``r`` value applies to every process; when either is
    omitted all parameters are drawn at random from ``seed``.
    """
    fields = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep or key.strip() not in ("n", "p", "r", "fork", "join", "seed"):
            raise UsageError(f"bad bench field {part!r}")
        fields[key.strip()] = value.strip()
    if "n" not in fields:
        raise UsageError("bench spec needs n=<count>")
    try:
        n = int(fields["n"])
        extra = {"fork_reward": Fraction(fields.get("fork", "0")), "join_reward": Fraction(fields.get("join", "0"))}
        seed = int(fields.get("seed", "0"))
        if "p" not in fields or "r" not in fields:
            return BenchSpec.random(n, seed=seed, **extra)

        def vector(raw):
            vals = tuple(Fraction(v) for v in raw.split(":"))
            if len(vals) == 1:
                vals *= n
            if len(vals) != n:
                raise UsageError(f"expected {n} values in {raw!r}")
            return vals

        return BenchSpec(vector(fields["p"]), vector(fields["r"]), seed=seed, **extra)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad bench spec {text!r}: {exc}") from exc


def cmd_generate(args, out) -> int:
    net = generate_parallel_bench(parse_bench_spec(args.bench))
    text = render_native(net)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwnet", description="Expected rewards of probabilistic workflow nets.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="reduce nets and report verdict and expected reward")
    p.add_argument("files", nargs="+")
    p.add_argument("--oracle", action="store_true", help="cross-check with the explicit MDP")
    p.add_argument("--trace", metavar="PATH", help="write the rule trace of the last file")
    p.add_argument("--cap", type=int, default=10 ** 6)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("oracle", help="explicit-state expected reward")
    p.add_argument("file")
    p.add_argument("--scheduler", choices=sorted(SCHEDULERS), default="min-id")
    p.add_argument("--minmax", action="store_true", help="also compute min and max over schedulers")
    p.add_argument("--cap", type=int, default=10 ** 6)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of the expected reward")
    p.add_argument("file")
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheduler", choices=sorted(SCHEDULERS), default="min-id")
    p.add_argument("--step-bound", type=int, default=10 ** 6)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="scaling ladder on the parallel benchmark")
    p.add_argument("--max-n", type=int, required=True)
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--csv", metavar="PATH")
    p.add_argument("--engines", help=f"comma-separated subset of {','.join(ENGINES)}")
    p.add_argument("--cap", type=int, default=10 ** 6)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--sim-runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write a parallel benchmark net")
    p.add_argument("--bench", required=True, metavar="SPEC", help="n=5,p=4/5:2/3,r=1:2 (p, r optional)")
    p.add_argument("-o", "--output", metavar="PATH")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    for name in ("runs", "max_n", "cap", "repeat"):
        if getattr(args, name, 1) is not None and getattr(args, name, 1) < 1:
            print(f"error: --{name.replace('_', '-')} must be positive", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run_cli(argv=None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
