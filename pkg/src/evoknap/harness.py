"""Experiment harness.

Builds objective instances from input files, derives iteration budgets,
runs seeded repetitions in parallel, records equally spaced breakpoint
traces, aggregates lower-medians, normalizes against the deterministic
density-greedy baseline, and emits the results CSV.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .core import (ResourceLimitError, evo_iterations, max_feasible_size,
                   st_evo_iterations, subset_cost)
from .dedup import DEFAULT_MAX_BITS
from .io import load_edge_list, load_readings
from .mutation import substream
from .objectives import (CascadeModel, EntropyObjective, SensorDataset,
                         VertexCoverObjective, as_oracle, gaussian_costs,
                         im_costs, vc_costs)
from .optimizers import (brute_force_opt, evo_maximize, greedy_max,
                         st_evo_maximize)


class ConfigError(ValueError):
    """A run configuration is invalid or internally inconsistent."""


ALGORITHMS = ("evo", "st-evo", "greedy-max", "brute")
OBJECTIVES = ("vc", "im", "entropy")

# per-objective default budgets, matching the canonical experiment settings
DEFAULT_BUDGETS = {"vc": 30.0, "im": 20.0, "entropy": 10.0}

# fixed stream tags for instance randomness, disjoint from rep indices
COST_STREAM_TAG = 0x100000001
WORLD_STREAM_TAG = 0x100000002

CSV_HEADER = ("breakpoint,iteration,median_f,median_f_normalized,"
              "median_oracle_calls,median_oracle_calls_normalized,"
              "cost_ratio,feasible_aug_ratio,stay_same_ratio,seen_before_ratio")


@dataclass
class RunConfig:
    """Everything one experiment needs; field names mirror the CLI flags."""

    algorithm: str = "evo"
    objective: str = "vc"
    input: str = ""
    output: str = ""
    beta: float = None
    epsilon: float = 0.1
    p: float = 0.5
    T_override: int = None
    seed: int = 0
    reps: int = 20
    breakpoints: int = 15
    q: float = 5.0
    lam: float = 1.2
    gamma: float = 1.5
    ic_samples: int = 100
    bins: int = 10
    dedup: bool = True
    jobs: int = 1
    brute_check: bool = False
    k_in_log_term: bool = False
    bloom_max_bits: int = DEFAULT_MAX_BITS


@dataclass
class ReportRow:
    """One aggregated breakpoint, in output-column order."""

    breakpoint: int
    iteration: int
    median_f: float
    median_f_normalized: float
    median_oracle_calls: int
    median_oracle_calls_normalized: float
    cost_ratio: float
    feasible_aug_ratio: float
    stay_same_ratio: float
    seen_before_ratio: float


@dataclass
class AggregateReport:
    """Aggregated experiment outcome plus run metadata."""

    algorithm: str
    objective: str
    n: int
    beta: float
    k_beta: int
    iterations: int
    reps: int
    seed: int
    rows: list = field(default_factory=list)
    rep_final_f: list = field(default_factory=list)
    rep_final_calls: list = field(default_factory=list)
    norm_f: float = 0.0
    norm_calls: int = 0
    opt_value: float = None
    opt_members: tuple = None
    opt_costliest: int = None
    approx_ratios: list = None


def validate_config(cfg: RunConfig) -> None:
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {cfg.algorithm!r}; choose from {ALGORITHMS}")
    if cfg.objective not in OBJECTIVES:
        raise ConfigError(f"unknown objective {cfg.objective!r}; choose from {OBJECTIVES}")
    if not cfg.input:
        raise ConfigError("an input file is required")
    if cfg.beta is not None and cfg.beta <= 0:
        raise ConfigError("beta must be strictly positive")
    if not 0.0 < cfg.epsilon <= 1.0:
        raise ConfigError("epsilon must be in (0, 1]")
    if not 0.0 < cfg.p <= 1.0:
        raise ConfigError("p must be in (0, 1]")
    if cfg.T_override is not None and cfg.T_override < 1:
        raise ConfigError("T-override must be at least 1")
    if cfg.reps < 1:
        raise ConfigError("reps must be at least 1")
    if cfg.breakpoints < 1:
        raise ConfigError("breakpoints must be at least 1")
    if cfg.q < 0:
        raise ConfigError("q must be non-negative")
    if cfg.lam <= 0:
        raise ConfigError("lambda must be strictly positive")
    if cfg.ic_samples < 1:
        raise ConfigError("ic-samples must be at least 1")
    if cfg.bins < 1:
        raise ConfigError("bins must be at least 1")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be at least 1")


def resolved_beta(cfg: RunConfig) -> float:
    if cfg.beta is not None:
        return float(cfg.beta)
    return DEFAULT_BUDGETS[cfg.objective]


def build_instance(cfg: RunConfig):
    """Construct (objective, costs) from the configured input file.

    Instance-level randomness (sensor costs, cascade worlds) comes from
    fixed side streams of the experiment seed, so repetition streams stay
    untouched by instance construction.
    """
    if cfg.objective == "vc":
        graph = load_edge_list(cfg.input)
        return VertexCoverObjective(graph), vc_costs(graph, cfg.q)
    if cfg.objective == "im":
        graph = load_edge_list(cfg.input)
        worlds_rng = substream(cfg.seed, WORLD_STREAM_TAG)
        model = CascadeModel(graph, cfg.ic_samples, worlds_rng)
        return model, im_costs(graph, cfg.lam, cfg.gamma)
    if cfg.objective == "entropy":
        readings = load_readings(cfg.input)
        dataset = SensorDataset(readings, bins=cfg.bins)
        costs_rng = substream(cfg.seed, COST_STREAM_TAG)
        return EntropyObjective(dataset), gaussian_costs(dataset.n, costs_rng)
    raise ConfigError(f"unknown objective {cfg.objective!r}")


def derive_iterations(cfg: RunConfig, n: int, k_beta: int) -> int:
    """Iteration budget from the approximation guarantees, unless overridden.

    The stochastic bound evaluates to 0 at epsilon=1; the harness clamps to
    one iteration so a run still happens.
    """
    if cfg.T_override is not None:
        return int(cfg.T_override)
    if k_beta < 1:
        raise ConfigError("budget admits no nonempty feasible set; "
                          "iteration bounds need K_beta >= 1")
    if cfg.algorithm == "evo":
        return evo_iterations(n, k_beta, k_in_log_term=cfg.k_in_log_term)
    if cfg.algorithm == "st-evo":
        return max(1, st_evo_iterations(n, k_beta, cfg.epsilon, cfg.p))
    raise ConfigError(f"no iteration bound for algorithm {cfg.algorithm!r}")


def breakpoint_marks(iterations: int, count: int) -> list:
    """The sorted distinct marks ceil(j*T/count), j=1..count; last is T."""
    if iterations < 1 or count < 1:
        raise ValueError("need iterations >= 1 and count >= 1")
    return sorted({math.ceil(j * iterations / count) for j in range(1, count + 1)})


def lower_median(values):
    """Lower median: a realized value, never an average of two."""
    ordered = sorted(values)
    if not ordered:
        raise ValueError("median of empty sequence")
    return ordered[(len(ordered) - 1) // 2]


def _rep_worker(objective, costs, budget, iterations, algorithm, seed, rep,
                marks, epsilon, p, dedup, bloom_max_bits):
    rng = substream(seed, rep)
    if algorithm == "evo":
        return evo_maximize(objective, costs, budget, iterations, rng,
                            dedup=dedup, record_iters=marks,
                            bloom_max_bits=bloom_max_bits)
    return st_evo_maximize(objective, costs, budget, iterations, rng,
                           epsilon=epsilon, p=p, dedup=dedup,
                           record_iters=marks, bloom_max_bits=bloom_max_bits)


def _normalized(value, denom):
    return value / denom if denom > 0 else 0.0


def run_experiment(cfg: RunConfig) -> AggregateReport:
    """Run one full experiment and return the aggregated report.

    Deterministic for a fixed config and seed: per-rep streams depend only
    on (seed, rep), the baseline run is deterministic, and repetition
    results are aggregated in rep order regardless of scheduling.
    Writes the CSV when cfg.output is set.
    """
    validate_config(cfg)
    objective, costs = build_instance(cfg)
    n = objective.n
    budget = resolved_beta(cfg)
    k_beta = max_feasible_size(costs, budget)
    costs_list = [float(x) for x in costs]

    baseline = greedy_max(objective, costs, budget)
    norm_f = baseline.best_f
    norm_calls = baseline.oracle_calls

    if cfg.algorithm in ("evo", "st-evo"):
        iterations = derive_iterations(cfg, n, k_beta)
        marks = breakpoint_marks(iterations, cfg.breakpoints)
        runner = Parallel(n_jobs=cfg.jobs)
        results = runner(
            delayed(_rep_worker)(objective, costs, budget, iterations,
                                 cfg.algorithm, cfg.seed, rep, tuple(marks),
                                 cfg.epsilon, cfg.p, cfg.dedup,
                                 cfg.bloom_max_bits)
            for rep in range(cfg.reps))
        rows = []
        for j, mark in enumerate(marks):
            records = [res.trace[j] for res in results]
            med_f = lower_median([r.best_f for r in records])
            med_calls = lower_median([r.oracle_calls for r in records])
            rows.append(ReportRow(
                breakpoint=j + 1,
                iteration=mark,
                median_f=med_f,
                median_f_normalized=_normalized(med_f, norm_f),
                median_oracle_calls=med_calls,
                median_oracle_calls_normalized=_normalized(med_calls, norm_calls),
                cost_ratio=lower_median([r.cost_ratio for r in records]),
                feasible_aug_ratio=lower_median([r.feasible_aug_ratio for r in records]),
                stay_same_ratio=lower_median([r.stay_same_ratio for r in records]),
                seen_before_ratio=lower_median([r.seen_before_ratio for r in records]),
            ))
        rep_final_f = [res.best_f for res in results]
        rep_final_calls = [res.oracle_calls for res in results]
    elif cfg.algorithm == "greedy-max":
        # deterministic: the baseline run doubles as the (single) repetition
        iterations = baseline.iterations
        rows = []
        trace = baseline.trace or [None]
        for j, rec in enumerate(trace):
            if rec is None:
                rows.append(ReportRow(1, 0, baseline.best_f,
                                      _normalized(baseline.best_f, norm_f),
                                      baseline.oracle_calls,
                                      _normalized(baseline.oracle_calls, norm_calls),
                                      0.0, 0.0, 0.0, 0.0))
                continue
            rows.append(ReportRow(
                breakpoint=j + 1,
                iteration=rec.iteration,
                median_f=rec.best_f,
                median_f_normalized=_normalized(rec.best_f, norm_f),
                median_oracle_calls=rec.oracle_calls,
                median_oracle_calls_normalized=_normalized(rec.oracle_calls, norm_calls),
                cost_ratio=rec.cost_ratio,
                feasible_aug_ratio=rec.feasible_aug_ratio,
                stay_same_ratio=0.0,
                seen_before_ratio=0.0,
            ))
        rep_final_f = [baseline.best_f]
        rep_final_calls = [baseline.oracle_calls]
    else:  # brute
        oracle = as_oracle(objective)
        opt_subset, opt_value, opt_costliest = brute_force_opt(oracle, costs, budget)
        calls = oracle.counter.evaluations
        opt_cost = subset_cost(opt_subset, costs_list)
        addable = sum(1 for e in range(n)
                      if e not in opt_subset and opt_cost + costs_list[e] <= budget)
        iterations = 1
        rows = [ReportRow(1, 1, opt_value, _normalized(opt_value, norm_f),
                          calls, _normalized(calls, norm_calls),
                          opt_cost / budget, addable / n, 0.0, 0.0)]
        rep_final_f = [opt_value]
        rep_final_calls = [calls]

    report = AggregateReport(
        algorithm=cfg.algorithm,
        objective=cfg.objective,
        n=n,
        beta=budget,
        k_beta=k_beta,
        iterations=iterations,
        reps=cfg.reps,
        seed=cfg.seed,
        rows=rows,
        rep_final_f=rep_final_f,
        rep_final_calls=rep_final_calls,
        norm_f=norm_f,
        norm_calls=norm_calls,
    )
    if cfg.algorithm == "brute":
        report.opt_value = opt_value
        report.opt_members = opt_subset.members()
        report.opt_costliest = opt_costliest

    if cfg.brute_check and cfg.algorithm in ("evo", "st-evo"):
        opt_subset, opt_value, opt_costliest = brute_force_opt(objective, costs, budget)
        report.opt_value = opt_value
        report.opt_members = opt_subset.members()
        report.opt_costliest = opt_costliest
        report.approx_ratios = [
            _normalized(v, opt_value) if opt_value > 0 else 1.0
            for v in rep_final_f]

    if cfg.output:
        emit_csv(report, cfg.output)
    return report


def _fmt(value) -> str:
    return f"{float(value):.6g}"


def emit_csv(report: AggregateReport, path) -> None:
    """Write the aggregated rows as CSV: pinned header, integer counts
    plain, floats at 6 significant digits, LF line endings."""
    lines = [CSV_HEADER]
    for row in report.rows:
        lines.append(",".join([
            str(int(row.breakpoint)),
            str(int(row.iteration)),
            _fmt(row.median_f),
            _fmt(row.median_f_normalized),
            str(int(row.median_oracle_calls)),
            _fmt(row.median_oracle_calls_normalized),
            _fmt(row.cost_ratio),
            _fmt(row.feasible_aug_ratio),
            _fmt(row.stay_same_ratio),
            _fmt(row.seen_before_ratio),
        ]))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"{path}: {exc}") from exc
