"""Command-line entry point.

Exit codes: 0 success, 2 input/domain error, 3 degenerate result.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import analytic, bounds, channel, ingest, montecarlo
from .channel import PRESET_NAMES, ChannelDistribution, LogNormalParams
from .errors import CoverageError, DomainError

DEFAULT_RATES = ",".join(f"{r / 100:.2f}" for r in range(5, 100, 5))
DEFAULT_ALPHAS = ",".join(str(a / 4) for a in range(1, 49))


def _floats(text):
    text = str(text).strip()
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")
    return [int(v) for v in vals]


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


# output


class Output:
    def __init__(self, args):
        self.fmt = args.format
        self.path = args.output

    def emit(self, text):
        if self.path:
            with open(self.path, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)

    def table(self, columns, rows, meta=None):
        if self.fmt == "json":
            doc = {"columns": columns, "rows": [dict(zip(columns, r)) for r in rows]}
            if meta:
                doc["meta"] = meta
            self.emit(json.dumps(doc, indent=2, default=_jsonable) + "\n")
            return
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(columns)
        w.writerows([[_cell(v) for v in r] for r in rows])
        self.emit(buf.getvalue())

    def record(self, d):
        """A flat mapping: key=value lines by default, or JSON / two-column CSV."""
        if self.fmt == "json":
            self.emit(json.dumps(d, indent=2, default=_jsonable) + "\n")
        elif self.fmt == "csv":
            self.table(["key", "value"], list(d.items()))
        else:
            self.emit("".join(f"{k}={_cell(v)}\n" for k, v in d.items()))


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    if v is None:
        return ""
    return v


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")


# shared helpers


def _params(args, default="pcr10-pop"):
    if getattr(args, "mu", None) is not None or getattr(args, "sigma", None) is not None:
        if args.mu is None or args.sigma is None:
            raise DomainError("--mu and --sigma must be given together")
        return "custom", LogNormalParams(args.mu, args.sigma)
    name = args.preset or default
    return name, channel.preset_params(name, args.n)


def _channel(name, params, n):
    if name == "uniform":
        return ChannelDistribution.uniform(n)
    return ChannelDistribution.lognormal(params, n)


def _plan(args):
    if args.m is not None:
        return analytic.CodePlan(args.n, args.m, args.a)
    if args.rate is None:
        raise DomainError("give --m or --rate")
    return analytic.CodePlan.from_rate(args.n, args.rate, args.a)


# commands


def cmd_fit(args, out):
    fmt = args.table_format or ("csv" if str(args.input).lower().endswith(".csv") else "tsv")
    with open(args.input, "rb") as fh:
        table = ingest.parse_read_counts(fh, fmt)
    rep = ingest.fit_channel(table, drop_zeros=not args.keep_zeros)
    d = rep.as_dict()
    d["total_reads"] = table.total_reads
    out.record(d)


def cmd_depth_curve(args, out):
    rates = args.rates
    if any(not 0 < r < 1 for r in rates):
        raise DomainError("code rates must lie in (0, 1)")
    names = [args.preset] if args.preset else args.channels.split(",")
    rows = []
    for name in names:
        name = name.strip()
        params = channel.preset_params(name, args.n)
        if name == "uniform":
            for R in rates:
                rows.append([name, R, -math.log1p(-R)])
            continue
        ch = ChannelDistribution.lognormal(params, args.n)
        if args.mode == "realized":
            ch = ch.realize(montecarlo.channel_rng(args.seed))
        for R in rates:
            m = max(1, int(round(R * args.n)))
            res = analytic.invert_min_reads(ch, m, exact=args.exact)
            rows.append([name, R, res.alpha])
    out.table(["channel", "R", "alpha"], rows)


def cmd_variance_profile(args, out):
    name, params = _params(args)
    if args.k_grid:
        ks = args.k_grid
    else:
        ks = [a * args.n for a in args.alphas]
    rows = []
    for K in ks:
        rows.append(["grid", K, K / args.n, analytic.variance_profile(K, params, args.n),
                     analytic.variance_profile_derivative(K, params, args.n)])
    K = analytic.variance_peak(params, args.n)
    rows.append(["peak", K, K / args.n, analytic.variance_profile(K, params, args.n),
                 analytic.variance_profile_derivative(K, params, args.n)])
    out.table(["kind", "K", "alpha", "f", "f_prime"], rows, meta={"channel": name})


def cmd_bounds(args, out):
    name, params = _params(args, default="pcr10-sample")
    plan = _plan(args)
    reps = [bounds.k1_lower(params, plan, args.beta), bounds.k2_lower(params, plan)]
    rows = [[name, r.kind, r.k_reads, r.alpha, r.prob_bound, list(r.flags)] for r in reps]
    out.table(["channel", "kind", "k_reads", "alpha", "prob_bound", "flags"], rows)


def cmd_simulate(args, out):
    if args.seed is None:
        raise DomainError("simulate requires --seed")
    name, params = _params(args)
    plan = _plan(args)
    cfg = montecarlo.McConfig(_channel(name, params, args.n), plan, args.trials, args.seed,
                              resample_p_per_trial=not args.fixed_channel,
                              max_reads_cap=args.cap, workers=args.workers)
    res = montecarlo.run_experiment(cfg)
    summary = {"channel": name, "m": plan.m, "a": plan.a, "R": plan.rate,
               "seed": args.seed, "redraw": cfg.redraws}
    summary.update(res.summary())
    if out.fmt == "json":
        summary["k_samples"] = res.k_samples.tolist()
        out.record(summary)
    elif args.samples:
        out.table(["trial", "k_reads"], list(enumerate(res.k_samples.tolist())))
    else:
        out.fmt = out.fmt or "csv"
        out.record(summary)


def cmd_expect(args, out):
    if args.counts:
        with open(args.counts, "rb") as fh:
            table = ingest.parse_read_counts(fh, "csv" if args.counts.lower().endswith(".csv") else "tsv")
        counts = table.counts
        ch = ChannelDistribution.empirical(counts / counts.sum())
        name = "counts"
    else:
        name, params = _params(args, default="uniform")
        ch = _channel(name, params, args.n)
        if args.realize:
            ch = ch.realize(montecarlo.channel_rng(args.seed))
    if args.m is not None:
        if ch.kind == "lognormal":
            ch = ch.realize(montecarlo.channel_rng(args.seed))
        plan = analytic.CodePlan(ch.n, args.m, args.a)
        val = analytic.expected_K_general(ch, plan, cap=args.cap)
        out.table(["channel", "n", "m", "a", "expected_K", "alpha"],
                  [[name, ch.n, plan.m, plan.a, val, val / ch.n]])
        return
    rows = []
    for K in args.K:
        rd = analytic.recovered_distribution(K, ch, exact=args.exact)
        rows.append([name, K, rd.alpha, rd.mean, rd.variance])
    out.table(["channel", "K", "alpha", "mean", "variance"], rows)


def cmd_channel_from_pcr(args, out):
    rng = montecarlo.channel_rng(args.seed)
    c = channel.sample_copy_numbers(args.n, rng, args.copy_dist, args.copy_mean, args.copy_spread)
    r = channel.sample_efficiencies(args.n, rng, args.r_low, args.r_high)
    rows = []
    for t in args.cycles:
        ch = channel.channel_from_pcr(channel.PcrModel(c, r, t))
        p = ch.params
        rows.append([t, p.mu, p.sigma, channel.mean_p(p), channel.mean_inv_p(p)])
    out.table(["t", "mu", "sigma", "mean_p", "mean_inv_p"], rows)


# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one stable diagnostic line instead of the usage block
        self.exit(2, f"error: {self.prog}: {message}\n")


def _common():
    p = _Parser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--format", choices=["csv", "json"], default=None)
    g.add_argument("--output", metavar="PATH")
    g.add_argument("--seed", type=_seed, default=None)
    g.add_argument("--preset", choices=PRESET_NAMES)
    g.add_argument("--config", metavar="PATH", help="key=value file; command-line flags win")
    return p


def _add_params(p, n=channel.DATASET_STRANDS):
    p.add_argument("--n", type=int, default=n, help="number of designed strands")
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)


def _add_plan(p, a=1):
    p.add_argument("--m", type=int, help="information strands")
    p.add_argument("--rate", "--R", dest="rate", type=float, help="code rate m/n")
    p.add_argument("--a", type=int, default=a, help="reads needed per strand")


def build_parser():
    common = _common()
    parser = _Parser(prog="dnacoverage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit a log-normal channel to read counts")
    p.add_argument("input")
    p.add_argument("--table-format", choices=["tsv", "csv"])
    p.add_argument("--keep-zeros", type=_bool, nargs="?", const=True, default=False,
                   help="fail on zero-count strands instead of dropping them")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("depth-curve", parents=[common], help="coverage depth vs code rate")
    p.add_argument("--n", type=int, default=channel.DATASET_STRANDS)
    p.add_argument("--channels", default="uniform,pcr10-pop,pcr30-pop,pcr60-pop")
    p.add_argument("--rates", type=_floats, default=DEFAULT_RATES)
    p.add_argument("--mode", choices=["realized", "scalar"], default="realized",
                   help="realize per-strand log-normal p (default) or use the single mean rate")
    p.add_argument("--exact", type=_bool, nargs="?", const=True, default=False)
    p.set_defaults(func=cmd_depth_curve, seed_default=0)

    p = sub.add_parser("variance-profile", parents=[common], help="single-rate variance f(K) and f'(K)")
    _add_params(p)
    p.add_argument("--alphas", type=_floats, default=DEFAULT_ALPHAS)
    p.add_argument("--k-grid", type=_floats, default=None)
    p.set_defaults(func=cmd_variance_profile)

    p = sub.add_parser("bounds", parents=[common], help="K1/K2 lower bounds")
    _add_params(p)
    _add_plan(p, a=2)
    p.add_argument("--beta", type=float, default=0.0)
    p.set_defaults(func=cmd_bounds, rate=0.8)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo minimum read counts")
    _add_params(p)
    _add_plan(p)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--fixed-channel", type=_bool, nargs="?", const=True, default=False,
                   help="draw one channel for all trials instead of one per trial")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--cap", type=int, default=None, help="per-trial read cap (default 1000*n*a)")
    p.add_argument("--samples", type=_bool, nargs="?", const=True, default=False,
                   help="CSV: emit per-trial read counts instead of the summary")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("expect", parents=[common], help="recovered-strand moments or general E[K]")
    _add_params(p)
    p.add_argument("--counts", metavar="PATH", help="empirical channel from a read-count table")
    p.add_argument("--K", type=_floats, default=None)
    p.add_argument("--m", type=int, help="evaluate E[K] to recover m strands instead")
    p.add_argument("--a", type=int, default=1)
    p.add_argument("--exact", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--realize", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--cap", type=int, default=analytic.GENERAL_N_CAP)
    p.set_defaults(func=cmd_expect, seed_default=0)

    p = sub.add_parser("channel-from-pcr", parents=[common], help="log-normal channel from a PCR model")
    p.add_argument("--n", type=int, default=channel.DATASET_STRANDS)
    p.add_argument("--cycles", type=_ints, default="10,30,60")
    p.add_argument("--copy-dist", choices=["constant", "lognormal", "negbin"], default="lognormal")
    p.add_argument("--copy-mean", type=float, default=100.0)
    p.add_argument("--copy-spread", type=float, default=0.5)
    p.add_argument("--r-low", type=float, default=0.80)
    p.add_argument("--r-high", type=float, default=1.10)
    p.set_defaults(func=cmd_channel_from_pcr, seed_default=0)
    return parser, sub


def read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("["):
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            values[k.strip().replace("-", "_")] = v.strip().strip('"').strip("'")
    return values


def parse_args(argv):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        conf = read_config(args.config)
        subparser = sub.choices[args.command]
        known = {a.dest: a for a in subparser._actions}
        unknown = sorted(set(conf) - set(known))
        if unknown:
            raise DomainError(f"unknown config keys: {', '.join(unknown)}")
        defaults = {}
        for k, v in conf.items():
            action = known[k]
            defaults[k] = action.type(v) if action.type else v
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.seed is None and hasattr(args, "seed_default"):
        args.seed = args.seed_default
    if getattr(args, "K", ()) is None and getattr(args, "m", None) is None:
        raise DomainError("give --K or --m")
    return args


def main(argv=None):
    def show_warning(message, category, filename, lineno, file=None, line=None):
        print(f"warning: {message}", file=sys.stderr)

    previous = warnings.showwarning
    warnings.showwarning = show_warning
    try:
        args = parse_args(argv)
        args.func(args, Output(args))
    except CoverageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        warnings.showwarning = previous
    return 0


if __name__ == "__main__":
    sys.exit(main())
