"""Evolutionary algorithms for monotone submodular maximization under a
knapsack budget, with evaluation deduplication and an experiment harness."""

__version__ = "0.1.0"

from .core import (ResourceLimitError, Subset, density_score, evo_iterations,
                   level_rounds, max_feasible_size, mix64, st_evo_iterations,
                   subset_cost)
from .dedup import (BloomFilter, Decision, bloom_init, precheck,
                    subset_fingerprint)
from .harness import (AggregateReport, ConfigError, ReportRow, RunConfig,
                      breakpoint_marks, build_instance, emit_csv,
                      lower_median, run_experiment)
from .io import (DataFormatError, load_edge_list, load_readings,
                 random_gnm_graph, random_powerlaw_graph, write_edge_list)
from .mutation import expected_flip_stats, flip_mask, make_rng, mutate, substream
from .objectives import (CascadeModel, DirectedGraph, EntropyObjective, Oracle,
                         OracleCounter, SensorDataset, VertexCoverObjective,
                         as_oracle, entropy_value, gaussian_costs,
                         ic_spread_estimate, im_costs, vc_costs,
                         vertex_cover_value)
from .optimizers import (RunResult, SolutionPool, TraceRecord, best_of_pools,
                         brute_force_opt, evo_maximize, greedy_max,
                         pool_update, st_evo_maximize)

__all__ = [
    "AggregateReport", "BloomFilter", "CascadeModel", "ConfigError",
    "DataFormatError", "Decision", "DirectedGraph", "EntropyObjective",
    "Oracle", "OracleCounter", "ReportRow", "ResourceLimitError", "RunConfig",
    "RunResult", "SensorDataset", "SolutionPool", "Subset", "TraceRecord",
    "VertexCoverObjective", "as_oracle", "best_of_pools", "bloom_init",
    "breakpoint_marks", "brute_force_opt", "build_instance", "density_score",
    "emit_csv", "entropy_value", "evo_iterations", "evo_maximize",
    "expected_flip_stats", "flip_mask", "gaussian_costs", "greedy_max",
    "ic_spread_estimate", "im_costs", "level_rounds", "load_edge_list",
    "load_readings", "lower_median", "make_rng", "max_feasible_size", "mix64",
    "mutate", "pool_update", "precheck", "random_gnm_graph",
    "random_powerlaw_graph", "run_experiment", "st_evo_iterations",
    "st_evo_maximize", "subset_cost", "subset_fingerprint", "substream",
    "vc_costs", "vertex_cover_value", "write_edge_list", "__version__",
]
