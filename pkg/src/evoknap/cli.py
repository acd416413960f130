"""Command line interface.

Subcommands: run (full experiment), brute (exhaustive optimum), stats
(mutation and dedup diagnostics), gen (synthetic instance generation).
Exit codes: 0 success, 2 configuration error, 3 ingestion error,
4 resource refusal.
"""

import argparse
import dataclasses
import sys

import numpy as np

from .core import ResourceLimitError
from .dedup import BITS_PER_ENTRY, HASH_COUNT, BloomFilter
from .harness import (ALGORITHMS, OBJECTIVES, ConfigError, RunConfig,
                      run_experiment)
from .io import (DataFormatError, random_gnm_graph, random_powerlaw_graph,
                 write_edge_list)
from .mutation import expected_flip_stats, make_rng
from . import __version__

_FLOAT_FIELDS = {"beta", "epsilon", "p", "q", "lam", "gamma"}
_INT_FIELDS = {"T_override", "seed", "reps", "breakpoints", "ic_samples",
               "bins", "jobs", "bloom_max_bits"}
_BOOL_FIELDS = {"dedup", "brute_check", "k_in_log_term"}
_STR_FIELDS = {"algorithm", "objective", "input", "output"}
_ALL_FIELDS = _FLOAT_FIELDS | _INT_FIELDS | _BOOL_FIELDS | _STR_FIELDS

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


def _normalize_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    if key == "lambda":
        return "lam"
    if key.lower() == "t_override":
        return "T_override"
    return key


def _parse_config_value(key: str, raw: str):
    raw = raw.strip()
    if key in _BOOL_FIELDS:
        low = raw.lower()
        if low in _TRUE_WORDS:
            return True
        if low in _FALSE_WORDS:
            return False
        raise ConfigError(f"config key {key}: expected a boolean, got {raw!r}")
    try:
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key}: bad numeric value {raw!r}") from None
    return raw


def _load_config_file(path) -> dict:
    """Parse a key=value config file; '#' comments and blank lines ignored."""
    entries = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected key=value")
            key, value = line.split("=", 1)
            key = _normalize_key(key)
            if key not in _ALL_FIELDS:
                raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
            entries[key] = _parse_config_value(key, value)
    return entries


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="key=value config file; flags override it")
    parser.add_argument("--algorithm", choices=ALGORITHMS, default=None)
    parser.add_argument("--objective", choices=OBJECTIVES, default=None)
    parser.add_argument("--input", default=None, metavar="FILE")
    parser.add_argument("--output", default=None, metavar="FILE")
    parser.add_argument("--beta", type=float, default=None)
    parser.add_argument("--epsilon", type=float, default=None)
    parser.add_argument("--p", type=float, default=None)
    parser.add_argument("--t-override", dest="T_override", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--reps", type=int, default=None)
    parser.add_argument("--breakpoints", type=int, default=None)
    parser.add_argument("--q", type=float, default=None)
    parser.add_argument("--lambda", dest="lam", type=float, default=None)
    parser.add_argument("--gamma", type=float, default=None)
    parser.add_argument("--ic-samples", dest="ic_samples", type=int, default=None)
    parser.add_argument("--bins", type=int, default=None)
    parser.add_argument("--dedup", dest="dedup", action="store_true", default=None)
    parser.add_argument("--no-dedup", "--no-bloom", dest="dedup",
                        action="store_false", default=None,
                        help="disable bloom-filter deduplication")
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--brute-check", dest="brute_check",
                        action="store_true", default=None,
                        help="cross-check repetitions against the brute-force optimum")
    parser.add_argument("--k-in-log-term", dest="k_in_log_term",
                        action="store_true", default=None,
                        help="use the iteration bound variant with K inside the log term")
    parser.add_argument("--bloom-max-bits", dest="bloom_max_bits", type=int,
                        default=None)


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        for key, value in _load_config_file(args.config).items():
            setattr(cfg, key, value)
    for field in dataclasses.fields(RunConfig):
        value = getattr(args, field.name, None)
        if value is not None:
            setattr(cfg, field.name, value)
    return cfg


def _print_report(report) -> None:
    print(f"algorithm={report.algorithm} objective={report.objective} "
          f"n={report.n} beta={report.beta:g} K_beta={report.k_beta} "
          f"T={report.iterations} reps={report.reps} seed={report.seed}")
    print(f"baseline: f={report.norm_f:.6g} oracle_calls={report.norm_calls}")
    if report.rows:
        last = report.rows[-1]
        print(f"final: median_f={last.median_f:.6g} "
              f"(normalized {last.median_f_normalized:.6g}) "
              f"median_oracle_calls={last.median_oracle_calls} "
              f"(normalized {last.median_oracle_calls_normalized:.6g})")
    if report.opt_value is not None:
        members = ",".join(str(e) for e in (report.opt_members or ()))
        print(f"OPT: f={report.opt_value:.6g} members=[{members}] "
              f"costliest={report.opt_costliest}")
    if report.approx_ratios is not None:
        good = sum(1 for r in report.approx_ratios if r >= 0.5)
        print(f"approximation ratios >= 0.5 in {good}/{len(report.approx_ratios)} reps "
              f"(min {min(report.approx_ratios):.4f})")


def _cmd_run(args) -> int:
    cfg = _resolve_config(args)
    report = run_experiment(cfg)
    _print_report(report)
    if cfg.output:
        print(f"wrote {cfg.output}")
    return 0


def _cmd_brute(args) -> int:
    cfg = _resolve_config(args)
    cfg.algorithm = "brute"
    report = run_experiment(cfg)
    _print_report(report)
    print(f"oracle_calls={report.rep_final_calls[0]}")
    if cfg.output:
        print(f"wrote {cfg.output}")
    return 0


def _cmd_stats(args) -> int:
    n = args.n
    if n < 1:
        raise ConfigError("--n must be at least 1")
    if args.trials < 1 or args.inserts < 1 or args.probes < 1:
        raise ConfigError("--trials, --inserts, and --probes must be at least 1")
    rng = make_rng(args.seed)
    stats = expected_flip_stats(n, args.trials, rng)
    analytic = (1.0 - 1.0 / n) ** n
    print(f"mutation: n={n} trials={args.trials}")
    print(f"  stay_same_rate={stats.stay_same_rate:.6f} analytic={analytic:.6f}")
    print(f"  mean_flips={stats.mean_flips:.6f} analytic=1.0")

    bloom = BloomFilter(args.inserts, rng)
    seen = rng.integers(0, 1 << 64, size=args.inserts, dtype=np.uint64)
    bloom.insert_batch(seen)
    probes = rng.integers(0, 1 << 64, size=args.probes, dtype=np.uint64)
    fresh = probes[~np.isin(probes, seen)]
    hits = int(bloom.check_batch(fresh).sum())
    fp_bound = (1.0 - np.exp(-HASH_COUNT / BITS_PER_ENTRY)) ** HASH_COUNT
    load = bloom.set_bit_count() / bloom.m
    print(f"bloom: inserts={args.inserts} bits_per_entry={BITS_PER_ENTRY} "
          f"hashes={HASH_COUNT}")
    print(f"  false_positive_rate={hits / max(1, len(fresh)):.6g} "
          f"bound={fp_bound:.6g}")
    print(f"  load_factor={load:.6f} cap={HASH_COUNT / BITS_PER_ENTRY:.6f}")
    return 0


def _cmd_gen(args) -> int:
    if not args.output:
        raise ConfigError("--output is required")
    rng = make_rng(args.seed)
    try:
        if args.kind == "gnm":
            if args.m is None:
                raise ConfigError("--m is required for --kind gnm")
            graph = random_gnm_graph(args.n, args.m, rng)
        else:
            graph = random_powerlaw_graph(args.n, args.exponent, rng)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_edge_list(graph, args.output)
    print(f"wrote {args.output}: n={graph.n} edges={graph.num_edges}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evoknap",
        description="Evolutionary submodular maximization under a knapsack budget.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a full experiment")
    _add_run_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_brute = sub.add_parser("brute", help="exhaustive optimum on a small instance")
    _add_run_flags(p_brute)
    p_brute.set_defaults(func=_cmd_brute)

    p_stats = sub.add_parser("stats", help="mutation and dedup diagnostics")
    p_stats.add_argument("--n", type=int, default=100)
    p_stats.add_argument("--trials", type=int, default=200_000)
    p_stats.add_argument("--inserts", type=int, default=100_000)
    p_stats.add_argument("--probes", type=int, default=50_000)
    p_stats.add_argument("--seed", type=int, default=0)
    p_stats.set_defaults(func=_cmd_stats)

    p_gen = sub.add_parser("gen", help="generate a synthetic edge list")
    p_gen.add_argument("--kind", choices=("gnm", "powerlaw"), default="gnm")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--m", type=int, default=None)
    p_gen.add_argument("--exponent", type=float, default=2.5)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--output", required=True, metavar="FILE")
    p_gen.set_defaults(func=_cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code is not None else 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
