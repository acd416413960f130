"""Benchmark objective families behind a counted oracle interface.

Three monotone submodular families, all normalized to f(empty) = 0:

- directed weighted coverage: f(S) = total weight of S and its out-neighbors;
- influence spread under the independent-cascade model, estimated over live-edge
  worlds that are sampled once at construction (which makes the estimate a
  deterministic coverage function, hence exactly submodular within a run);
- joint empirical entropy of discretized sensor readings.

Each family comes with its cost generator. Costs are clamped strictly
positive because density scores divide by them.
"""

import numpy as np

from .core import Subset

DEFAULT_COST_FLOOR = 1e-6
GAUSSIAN_COST_FLOOR = 0.1


class OracleCounter:
    """Count of objective evaluations actually performed."""

    __slots__ = ("evaluations",)

    def __init__(self):
        self.evaluations = 0


class Oracle:
    """Counted evaluator of a set function over bitmask-encoded subsets.

    Safe for concurrent read-only use when each concurrent run owns its own
    counter; a single run increments its counter sequentially.
    """

    __slots__ = ("n", "value_fn", "counter")

    def __init__(self, n, value_fn, counter=None):
        self.n = n
        self.value_fn = value_fn
        self.counter = counter if counter is not None else OracleCounter()

    def value_of(self, mask: int) -> float:
        """Evaluate on a bitmask; counts exactly one oracle call."""
        self.counter.evaluations += 1
        return self.value_fn(mask)

    def evaluate(self, subset: Subset) -> float:
        """Evaluate on a Subset; counts exactly one oracle call."""
        return self.value_of(subset.mask)


def as_oracle(objective) -> Oracle:
    """Wrap an objective (anything with .n and .value(mask)) as a counted oracle.

    An existing Oracle passes through unchanged, keeping its counter.
    """
    if isinstance(objective, Oracle):
        return objective
    if hasattr(objective, "n") and hasattr(objective, "value"):
        return Oracle(objective.n, objective.value)
    raise TypeError("objective must be an Oracle or expose .n and .value(mask)")


class DirectedGraph:
    """Directed graph over nodes 0..n-1 with deduplicated edges.

    Edges are stored sorted so everything downstream (degree arrays, cascade
    world sampling) is independent of input order.
    """

    def __init__(self, n, edges):
        if n < 1:
            raise ValueError("graph needs at least one node")
        unique = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside node range 0..{n - 1}")
            unique.add((int(u), int(v)))
        adjacency = [[] for _ in range(n)]
        in_degree = [0] * n
        ordered = sorted(unique)
        for u, v in ordered:
            adjacency[u].append(v)
            in_degree[v] += 1
        self.n = n
        self.edges = ordered
        self.adjacency = adjacency
        self.out_degree = np.array([len(a) for a in adjacency], dtype=np.int64)
        self.in_degree = np.array(in_degree, dtype=np.int64)
        # node plus out-neighbors as a bitmask, for coverage values
        cover = []
        for v in range(n):
            cm = 1 << v
            for u in adjacency[v]:
                cm |= 1 << u
            cover.append(cm)
        self.cover_masks = cover

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def _mask_of(subset_or_mask) -> int:
    if isinstance(subset_or_mask, Subset):
        return subset_or_mask.mask
    return int(subset_or_mask)


def _coverage_mask(graph: DirectedGraph, mask: int) -> int:
    cov = 0
    m = mask
    masks = graph.cover_masks
    while m:
        lsb = m & -m
        cov |= masks[lsb.bit_length() - 1]
        m ^= lsb
    return cov


def vertex_cover_value(graph: DirectedGraph, weights, subset) -> float:
    """Total weight of the subset's members and their out-neighbors, counted once.

    weights may be None for unit weights.
    """
    cov = _coverage_mask(graph, _mask_of(subset))
    if weights is None:
        return float(cov.bit_count())
    if len(weights) != graph.n:
        raise ValueError("weight vector length does not match the graph")
    total = 0.0
    while cov:
        lsb = cov & -cov
        total += float(weights[lsb.bit_length() - 1])
        cov ^= lsb
    return total


def vc_costs(graph: DirectedGraph, q: int, floor: float = DEFAULT_COST_FLOOR) -> np.ndarray:
    """Coverage costs 1 + max(out_degree - q, 0), clamped to the positive floor."""
    if q < 0:
        raise ValueError("q must be non-negative")
    costs = 1.0 + np.maximum(graph.out_degree - q, 0).astype(np.float64)
    return np.maximum(costs, floor)


class VertexCoverObjective:
    """Counted-oracle-ready directed weighted coverage objective."""

    def __init__(self, graph: DirectedGraph, weights=None):
        if weights is not None:
            weights = np.asarray(weights, dtype=np.float64)
            if weights.shape != (graph.n,):
                raise ValueError("weight vector length does not match the graph")
            if (weights < 0).any():
                raise ValueError("weights must be non-negative")
        self.graph = graph
        self.weights = weights
        self.n = graph.n

    def value(self, mask: int) -> float:
        cov = _coverage_mask(self.graph, mask)
        if self.weights is None:
            return float(cov.bit_count())
        w = self.weights
        total = 0.0
        while cov:
            lsb = cov & -cov
            total += w[lsb.bit_length() - 1]
            cov ^= lsb
        return float(total)


class CascadeModel:
    """Independent-cascade spread estimated over fixed live-edge worlds.

    Each of the `samples` worlds keeps every edge independently with its
    propagation probability; the spread of S is the average number of nodes
    reachable from S across worlds. Worlds are drawn once from the given rng,
    so evaluation is deterministic.

    edge_prob: None uses the weighted-cascade default 1/in_degree(target);
    a float in [0, 1] applies that constant to every edge.
    """

    def __init__(self, graph: DirectedGraph, samples: int, rng, edge_prob=None):
        if samples < 1:
            raise ValueError("need at least one sample world")
        n = graph.n
        edges = graph.edges
        if edge_prob is None:
            probs = np.array(
                [1.0 / graph.in_degree[v] for _, v in edges], dtype=np.float64
            )
        else:
            edge_prob = float(edge_prob)
            if not 0.0 <= edge_prob <= 1.0:
                raise ValueError("edge_prob must lie in [0, 1]")
            probs = np.full(len(edges), edge_prob, dtype=np.float64)
        live = rng.random((samples, len(edges))) < probs
        reach_worlds = []
        for r in range(samples):
            adjacency = [[] for _ in range(n)]
            row = live[r]
            for j, (u, v) in enumerate(edges):
                if row[j]:
                    adjacency[u].append(v)
            reach_worlds.append(_reach_masks(n, adjacency))
        self.graph = graph
        self.samples = samples
        self.edge_prob = probs
        self.n = n
        self._reach = reach_worlds

    def value(self, mask: int) -> float:
        total = 0
        for reach in self._reach:
            cov = 0
            m = mask
            while m:
                lsb = m & -m
                cov |= reach[lsb.bit_length() - 1]
                m ^= lsb
            total += cov.bit_count()
        return total / self.samples


def _reach_masks(n: int, adjacency) -> list:
    """Per-node bitmask of nodes reachable through the given live edges."""
    reach = [(1 << v) for v in range(n)]
    for v in range(n):
        for u in adjacency[v]:
            reach[v] |= 1 << u
    changed = True
    while changed:
        changed = False
        for v in range(n):
            acc = reach[v]
            for u in adjacency[v]:
                acc |= reach[u]
            if acc != reach[v]:
                reach[v] = acc
                changed = True
    return reach


def ic_spread_estimate(model: CascadeModel, subset) -> float:
    """Average reachable-node count of the subset over the model's worlds."""
    return model.value(_mask_of(subset))


def im_costs(graph: DirectedGraph, lam: float = 1.2, gamma: float = 1.5,
             floor: float = DEFAULT_COST_FLOOR) -> np.ndarray:
    """Influence costs lam * out_degree^gamma, with cost 1 for sinks."""
    if lam <= 0:
        raise ValueError("lam must be strictly positive")
    out = graph.out_degree.astype(np.float64)
    costs = lam * out**gamma
    costs[out == 0] = 1.0
    return np.maximum(costs, floor)


class SensorDataset:
    """Readings matrix (rows = time steps, columns = sensors), discretized
    into equal-width bins per column over that column's own range."""

    def __init__(self, readings, bins: int = 10):
        readings = np.asarray(readings, dtype=np.float64)
        if readings.ndim != 2 or readings.shape[0] < 1 or readings.shape[1] < 1:
            raise ValueError("readings must be a non-empty 2-D matrix")
        if not np.isfinite(readings).all():
            raise ValueError("readings must be finite")
        if bins < 1:
            raise ValueError("need at least one bin")
        lo = readings.min(axis=0)
        width = (readings.max(axis=0) - lo) / bins
        codes = np.zeros(readings.shape, dtype=np.int64)
        nonzero = width > 0
        if nonzero.any():
            scaled = (readings[:, nonzero] - lo[nonzero]) / width[nonzero]
            codes[:, nonzero] = np.clip(scaled.astype(np.int64), 0, bins - 1)
        self.readings = readings
        self.codes = codes
        self.bins = bins
        self.n = readings.shape[1]
        self.rows = readings.shape[0]


def entropy_value(dataset: SensorDataset, subset) -> float:
    """Joint empirical entropy (natural log) of the selected sensors' binned rows."""
    mask = _mask_of(subset)
    if mask == 0:
        return 0.0
    cols = Subset(dataset.n, mask).members()
    sub = dataset.codes[:, cols]
    _, counts = np.unique(sub, axis=0, return_counts=True)
    p = counts / dataset.rows
    return float(-(p * np.log(p)).sum())


class EntropyObjective:
    """Counted-oracle-ready sensor-placement entropy objective."""

    def __init__(self, dataset: SensorDataset):
        self.dataset = dataset
        self.n = dataset.n

    def value(self, mask: int) -> float:
        return entropy_value(self.dataset, mask)


def gaussian_costs(n: int, rng, floor: float = GAUSSIAN_COST_FLOOR) -> np.ndarray:
    """Folded-normal costs max(|N(0,1)|, floor)."""
    if n < 1:
        raise ValueError("need n >= 1")
    if floor <= 0:
        raise ValueError("floor must be strictly positive")
    return np.maximum(np.abs(rng.standard_normal(n)), floor)
