"""Command-line interface: ``tailcause <subcommand> [options]``.

Exit codes: 0 on success, 1 on data errors (unreadable or malformed input,
invalid parameters for the data at hand, failed repetitions), 2 on usage
errors.
"""

import argparse
import json
import logging
import os
import shlex
import sys

from tailcause import __version__
from tailcause.analysis import (
    build_graph,
    cross_extremogram,
    hill_estimate,
    minimal_delay,
    preprocess,
    sweep_k,
    sweep_p,
)
from tailcause.dataio import MISSING_POLICIES, DataError, csv_text, ingest_csv, series_csv_text
from tailcause.estimator import DivisorMode, GammaVariant, PreparedPair, default_k
from tailcause.experiments import EXPERIMENTS, ExperimentSpec, run_experiment
from tailcause.granger import granger_test
from tailcause.models import PRESETS, UnstableModelError, load_spec, preset, simulate
from tailcause.rng import NoiseSpec

log = logging.getLogger("tailcause")


# --------------------------------------------------------------------------
# argument types

def _int_at_least(lo, what):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{what} must be an integer, got {text!r}") from None
        if v < lo:
            raise argparse.ArgumentTypeError(f"{what} must be >= {lo}, got {v}")
        return v
    return parse


nonneg_int = _int_at_least(0, "value")
pos_int = _int_at_least(1, "value")


def seed_type(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a decimal integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def unit_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"threshold must be in [0, 1], got {v}")
    return v


def noise_type(text):
    try:
        return NoiseSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def int_grid(text):
    """``"0:12"`` (inclusive), ``"0:12:2"`` or ``"1,2,5"``."""
    try:
        if ":" in text:
            parts = [int(s) for s in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step < 1:
                raise ValueError
            return list(range(lo, hi + 1, step))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer grid {text!r}; use lo:hi[:step] or a,b,c") from None


def name_list(text):
    return [s.strip() for s in text.split(",") if s.strip()]


def key_value(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


# --------------------------------------------------------------------------
# parser

def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--seed", type=seed_type, default=0, help="master seed (unsigned 64-bit, default 0)")
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    g.add_argument("--k", type=pos_int, default=None, help="number of extremes (default: floor(sqrt(n)))")
    g.add_argument("--p", type=nonneg_int, default=None, help="extremal delay")
    g.add_argument("--variant", choices=("standard", "no0", "abs"), default="standard")
    g.add_argument("--divisor", choices=("paperk", "renormalize"), default="paperk")
    g.add_argument("--tau-hi", type=unit_float, default=0.9)
    g.add_argument("--tau-lo", type=unit_float, default=0.8)
    g.add_argument("--verbose", "-v", action="store_true")
    return common


def _input_args(p, pair=True):
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--missing", choices=MISSING_POLICIES, default="error", help="missing-value policy")
    if pair:
        p.add_argument("--x", required=True, help="column of the candidate cause")
        p.add_argument("--y", required=True, help="column of the candidate effect")


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="tailcause",
        description="Causal direction between heavy-tailed time series from their extremes.",
    )
    parser.add_argument("--version", action="version", version=f"tailcause {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("simulate", parents=[common], help="simulate a preset or JSON model spec")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", choices=sorted(PRESETS))
    src.add_argument("--spec", help="JSON model specification file")
    p.add_argument("--n", type=pos_int, required=True)
    p.add_argument("--delta", type=float, help="cross coefficient (model1)")
    p.add_argument("--noise", type=noise_type, help="noise law for every channel, e.g. pareto:1,1 or cauchy")
    p.add_argument("--noise-y", type=noise_type, help="noise law of Y (model1)")
    p.add_argument("--param", type=key_value, action="append", default=[],
                   help="extra preset parameter, e.g. --param theta_z=2")
    p.add_argument("--backend", choices=("auto", "compiled", "python"), default="auto")

    p = sub.add_parser("gamma", parents=[common], help="estimate the coefficient in both directions")
    _input_args(p)

    p = sub.add_parser("sweep-p", parents=[common], help="estimates over a grid of delays")
    _input_args(p)
    p.add_argument("--p-grid", type=int_grid, default=list(range(0, 11)))

    p = sub.add_parser("sweep-k", parents=[common], help="estimates over a grid of k")
    _input_args(p)
    p.add_argument("--k-grid", type=int_grid, required=True)

    p = sub.add_parser("min-delay", parents=[common], help="smallest delay reaching tau")
    _input_args(p)
    p.add_argument("--tau", type=unit_float, default=None, help="threshold (default: --tau-hi)")
    p.add_argument("--p-max", type=nonneg_int, default=10)

    p = sub.add_parser("extremogram", parents=[common], help="cross-extremogram over lags")
    _input_args(p)
    p.add_argument("--h-grid", type=int_grid, default=list(range(0, 11)))

    p = sub.add_parser("tailindex", parents=[common], help="Hill estimates with confidence intervals")
    _input_args(p, pair=False)
    p.add_argument("--columns", type=name_list, help="comma-separated columns (default: all)")
    p.add_argument("--confidence", type=float, default=0.95)

    p = sub.add_parser("granger", parents=[common], help="linear Granger F-test in both directions")
    _input_args(p)
    p.add_argument("--q", type=pos_int, required=True, help="number of lags")
    p.add_argument("--alpha", type=float, action="append", help="significance levels (default .01 .05 .10)")

    p = sub.add_parser("graph", parents=[common], help="pairwise decisions assembled into a causal graph")
    _input_args(p, pair=False)
    p.add_argument("--columns", type=name_list, help="comma-separated columns (default: all)")

    p = sub.add_parser("bench", parents=[common], help="run a simulation study")
    p.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    p.add_argument("--reps", type=pos_int)
    p.add_argument("--n", type=_int_at_least(50, "n"))
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on the default repetition count")
    p.add_argument("--workers", type=pos_int, default=1)
    p.add_argument("--set", type=key_value, action="append", default=[], dest="overrides",
                   help="experiment override, JSON-valued, e.g. --set ns=[1000] --set k=\"pow:0.4\"")
    p.add_argument("--json-out", help="also write the JSON mirror here")

    p = sub.add_parser("preprocess", parents=[common], help="transform columns before analysis")
    _input_args(p, pair=False)
    p.add_argument("--columns", type=name_list, help="comma-separated columns (default: all)")
    p.add_argument("--negate", type=name_list, default=[], help="columns whose sign is flipped first")
    p.add_argument("--step", action="append", default=[],
                   help="applied in order to every column: seasonal_anomaly:<period>, difference, linear_detrend")
    parser.subcommands = sub.choices
    return parser


# --------------------------------------------------------------------------
# output helpers

class _Context:
    def __init__(self, args, argv):
        self.args = args
        self.command_line = "tailcause " + " ".join(shlex.quote(a) for a in argv)

    def header(self, extra=()):
        return [f"tailcause {__version__}", f"command: {self.command_line}", f"seed: {self.args.seed}", *extra]

    def emit(self, text):
        if not text.endswith("\n"):
            text += "\n"
        if self.args.out:
            with open(self.args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)

    def emit_json(self, payload):
        payload = {"version": __version__, "command": self.command_line, "seed": self.args.seed, **payload}
        self.emit(json.dumps(payload, indent=2))


def _pair(args):
    ds = ingest_csv(args.input, [args.x, args.y] if args.x != args.y else [args.x], args.missing)
    return ds[args.x], ds[args.y]


def _variant(args):
    return GammaVariant.parse(args.variant), DivisorMode.parse(args.divisor)


def _need_p(args):
    if args.p is None:
        raise argparse.ArgumentTypeError("--p is required for this command")
    return args.p


# --------------------------------------------------------------------------
# commands

def cmd_simulate(args, ctx):
    if args.spec:
        spec = load_spec(args.spec)
        if args.delta is not None or args.noise or args.noise_y or args.param:
            raise argparse.ArgumentTypeError("--delta/--noise/--param only apply to --model presets")
    else:
        params = dict(args.param)
        if args.delta is not None:
            params["delta"] = args.delta
        if args.noise is not None:
            params["noise_x"] = args.noise
        if args.noise_y is not None:
            params["noise_y"] = args.noise_y
        try:
            spec = preset(args.model, **params)
        except TypeError as exc:
            raise argparse.ArgumentTypeError(f"bad parameters for {args.model}: {exc}") from None
    backend = None if args.backend == "auto" else args.backend
    series = simulate(spec, args.n, args.seed, backend)
    names = [s.name for s in series]
    if args.format == "json":
        ctx.emit_json({"model": spec.to_dict(), "n": args.n, "columns": {s.name: s.values.tolist() for s in series}})
    else:
        extra = [f"model: {json.dumps(spec.to_dict(), sort_keys=True)}", f"n: {args.n}"]
        ctx.emit(series_csv_text(names, [s.values for s in series], ctx.header(extra)))


def cmd_gamma(args, ctx):
    p = _need_p(args)
    x, y = _pair(args)
    variant, divisor = _variant(args)
    k = default_k(x.size) if args.k is None else args.k
    fwd = PreparedPair(x, y, variant).estimate(p, k, divisor)
    rev = PreparedPair(y, x, variant).estimate(p, k, divisor)
    if args.format == "json":
        ctx.emit_json({"x": args.x, "y": args.y, "gamma_xy": fwd.to_dict(), "gamma_yx": rev.to_dict()})
    elif args.format == "csv":
        rows = [
            (f"{args.x}->{args.y}", fwd.value, p, k, variant.value, fwd.n),
            (f"{args.y}->{args.x}", rev.value, p, k, variant.value, rev.n),
        ]
        ctx.emit(csv_text(["direction", "gamma", "p", "k", "variant", "n"], rows, ctx.header()))
    else:
        ctx.emit(
            f"gamma {args.x}->{args.y} = {fwd.value!r}\n"
            f"gamma {args.y}->{args.x} = {rev.value!r}\n"
            f"(p={p}, k={k}, variant={variant.value}, n={fwd.n})"
        )


def _sweep_out(args, ctx, result, extra):
    if args.format == "json":
        ctx.emit_json({"x": args.x, "y": args.y, **extra, "rows": result.rows()})
    else:
        ctx.emit(csv_text(["axis", "value", "gamma_xy", "gamma_yx"], result.rows(),
                          ctx.header([json.dumps(extra, sort_keys=True)])))


def cmd_sweep_p(args, ctx):
    x, y = _pair(args)
    variant, divisor = _variant(args)
    k = default_k(x.size) if args.k is None else args.k
    _sweep_out(args, ctx, sweep_p(x, y, args.p_grid, k, variant, divisor), {"k": k, "variant": variant.value})


def cmd_sweep_k(args, ctx):
    p = _need_p(args)
    x, y = _pair(args)
    variant, divisor = _variant(args)
    _sweep_out(args, ctx, sweep_k(x, y, p, args.k_grid, variant, divisor), {"p": p, "variant": variant.value})


def cmd_min_delay(args, ctx):
    x, y = _pair(args)
    variant, divisor = _variant(args)
    tau = args.tau_hi if args.tau is None else args.tau
    k = default_k(x.size) if args.k is None else args.k
    s = minimal_delay(x, y, k, tau, args.p_max, variant, divisor)
    if args.format == "json":
        ctx.emit_json({"x": args.x, "y": args.y, "minimal_delay": s, "tau": tau, "k": k, "p_max": args.p_max})
    elif args.format == "csv":
        ctx.emit(csv_text(["x", "y", "minimal_delay", "tau", "k", "p_max"],
                          [(args.x, args.y, s, tau, k, args.p_max)], ctx.header()))
    else:
        ctx.emit(f"minimal delay {args.x}->{args.y}: {'none up to ' + str(args.p_max) if s is None else s}")


def cmd_extremogram(args, ctx):
    x, y = _pair(args)
    k = default_k(x.size) if args.k is None else args.k
    ex = cross_extremogram(x, y, args.h_grid, k)
    rows = [(h, float(v), int(c)) for h, v, c in zip(ex.lags, ex.values, ex.counts)]
    if args.format == "json":
        ctx.emit_json({"x": args.x, "y": args.y, "k": k,
                       "rows": [{"h": h, "value": None if v != v else v, "count": c} for h, v, c in rows]})
    else:
        ctx.emit(csv_text(["h", "value", "count"], rows, ctx.header([f"k: {k}"])))


def cmd_tailindex(args, ctx):
    ds = ingest_csv(args.input, args.columns, args.missing)
    results = []
    for name in ds.names:
        v = ds[name]
        k = default_k(v.size) if args.k is None else args.k
        results.append((name, hill_estimate(v, k, args.confidence)))
    if args.format == "json":
        ctx.emit_json({"estimates": {name: est.to_dict() for name, est in results}})
    else:
        rows = [(name, e.gamma_hat, e.k_used, e.ci_low, e.ci_high, e.confidence_level) for name, e in results]
        ctx.emit(csv_text(["column", "gamma_hat", "k", "ci_low", "ci_high", "confidence"], rows, ctx.header()))


def cmd_granger(args, ctx):
    x, y = _pair(args)
    levels = tuple(args.alpha) if args.alpha else (0.01, 0.05, 0.10)
    fwd = granger_test(x, y, args.q, levels)
    rev = granger_test(y, x, args.q, levels)
    if args.format == "json":
        ctx.emit_json({f"{args.x}->{args.y}": fwd.to_dict(), f"{args.y}->{args.x}": rev.to_dict()})
    else:
        rows = [
            (f"{args.x}->{args.y}", fwd.f_statistic, fwd.p_value, fwd.dof[0], fwd.dof[1]),
            (f"{args.y}->{args.x}", rev.f_statistic, rev.p_value, rev.dof[0], rev.dof[1]),
        ]
        ctx.emit(csv_text(["direction", "f_statistic", "p_value", "dof1", "dof2"], rows, ctx.header([f"q: {args.q}"])))


def cmd_graph(args, ctx):
    p = _need_p(args)
    ds = ingest_csv(args.input, args.columns, args.missing)
    variant, divisor = _variant(args)
    graph = build_graph({n: ds[n] for n in ds.names}, p, args.k, args.tau_hi, args.tau_lo, variant, divisor)
    if args.format == "csv":
        d = graph.to_dict()
        rows = [(e["from"], e["to"], e["gamma_fwd"], e["gamma_rev"]) for e in d["edges"]]
        ctx.emit(csv_text(["from", "to", "gamma_fwd", "gamma_rev"], rows, ctx.header()))
    else:
        ctx.emit(graph.to_json())


def cmd_bench(args, ctx):
    overrides = dict(args.overrides)
    if args.k is not None:
        overrides.setdefault("k", args.k)
    if args.p is not None:
        overrides.setdefault("p", args.p)
    if args.variant != "standard":
        overrides.setdefault("variant", args.variant)
    if args.divisor != "paperk":
        overrides.setdefault("divisor", args.divisor)
    spec = ExperimentSpec(args.experiment, args.reps, args.n, args.seed, args.scale, overrides)
    summary = run_experiment(spec, args.workers)
    if args.format == "json":
        ctx.emit(summary.to_json())
    else:
        ctx.emit(summary.to_csv([f"command: {ctx.command_line}"]))
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(summary.to_json() + "\n")
    if summary.failures:
        log.error("%d repetition(s) failed", summary.failures)
        return 1
    return 0


def cmd_preprocess(args, ctx):
    ds = ingest_csv(args.input, args.columns, args.missing)
    for name in args.negate:
        if name not in ds.names:
            raise DataError(f"--negate: no column {name!r}")
    out = []
    for name in ds.names:
        steps = (["negate"] if name in args.negate else []) + list(args.step)
        out.append(preprocess(ds.series(name), steps).values)
    if args.format == "json":
        ctx.emit_json({"steps": args.step, "negated": args.negate,
                       "columns": {n: v.tolist() for n, v in zip(ds.names, out)}})
    else:
        extra = [f"negated: {','.join(args.negate) or '-'}", f"steps: {','.join(args.step) or '-'}"]
        ctx.emit(series_csv_text(ds.names, out, ctx.header(extra)))


COMMANDS = {
    "simulate": cmd_simulate,
    "gamma": cmd_gamma,
    "sweep-p": cmd_sweep_p,
    "sweep-k": cmd_sweep_k,
    "min-delay": cmd_min_delay,
    "extremogram": cmd_extremogram,
    "tailindex": cmd_tailindex,
    "granger": cmd_granger,
    "graph": cmd_graph,
    "bench": cmd_bench,
    "preprocess": cmd_preprocess,
}


def dispatch(argv=None):
    """Run one command and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    ctx = _Context(args, argv)
    try:
        return COMMANDS[args.command](args, ctx) or 0
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        try:
            sys.stdout = open(os.devnull, "w")
        except OSError:
            pass
        return 0
    except argparse.ArgumentTypeError as exc:
        parser.subcommands[args.command].print_usage(sys.stderr)
        print(f"tailcause {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, UnstableModelError, ValueError, ArithmeticError, OSError) as exc:
        print(f"tailcause {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
