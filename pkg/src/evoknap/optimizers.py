"""Evolutionary subset optimizers under a knapsack budget.

Shared machinery: cardinality-indexed solution archives with a feasible
single-element augmentation step, an unchanged-set pre-check, and optional
bloom-filter deduplication of already-evaluated subsets. On top of it sit the
uniform-selection optimizer, its stochastic guided-selection variant, the
deterministic density-greedy baseline used for normalization, and a
brute-force optimum oracle for testing.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (ResourceLimitError, Subset, density_score, level_rounds,
                   subset_cost)
from .dedup import DEFAULT_MAX_BITS, BloomFilter, Decision, subset_fingerprint
from .objectives import Oracle, as_oracle

# iterations drawn per rng batch; fixed forever so seeded traces replay
_BLOCK = 1024

BRUTE_FORCE_CAP = 24


class PoolEntry:
    """One archive slot: a feasible subset with cached cost, value, and density."""

    __slots__ = ("mask", "size", "cost", "f_value", "g_value", "initialized")

    def __init__(self):
        self.mask = 0
        self.size = 0
        self.cost = 0.0
        self.f_value = 0.0
        self.g_value = 0.0
        self.initialized = False

    def as_subset(self, n: int) -> Subset:
        return Subset(n, self.mask)


class SolutionPool:
    """Cardinality-indexed archives of the best feasible sets seen so far.

    by_value[i] is the best set of size i by objective value; by_density[i]
    the best by density score; augmented[i] the best single-element
    augmentation grown from a by_density[i] entry (its stored set has size
    i + 1). Uninitialized slots stand for the empty set with value 0.
    All three run over sizes 0..n; index-n slots are reachable as mutation
    outputs but are never selected as mutation parents.
    """

    __slots__ = ("n", "by_value", "by_density", "augmented")

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need n >= 1")
        self.n = n
        self.by_value = [PoolEntry() for _ in range(n + 1)]
        self.by_density = [PoolEntry() for _ in range(n + 1)]
        self.augmented = [PoolEntry() for _ in range(n + 1)]

    def families(self):
        yield "by_value", self.by_value
        yield "by_density", self.by_density
        yield "augmented", self.augmented


@dataclass
class TraceRecord:
    """State snapshot taken at one recorded iteration."""

    iteration: int
    best_f: float
    oracle_calls: int
    cost_ratio: float
    feasible_aug_ratio: float
    stay_same_ratio: float
    seen_before_ratio: float


@dataclass
class RunResult:
    """Outcome of one optimizer run."""

    best_subset: Subset
    best_f: float
    oracle_calls: int
    iterations: int
    trace: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


class _Counters:
    __slots__ = ("stay_same", "seen_before", "evaluate_decisions", "augment_evals")

    def __init__(self):
        self.stay_same = 0
        self.seen_before = 0
        self.evaluate_decisions = 0
        self.augment_evals = 0


def _exact_cost(mask: int, costs_list) -> float:
    total = 0.0
    while mask:
        lsb = mask & -mask
        total += costs_list[lsb.bit_length() - 1]
        mask ^= lsb
    return total


def _store(entry: PoolEntry, mask, size, cost, f_value, g_value) -> None:
    entry.mask = mask
    entry.size = size
    entry.cost = cost
    entry.f_value = f_value
    entry.g_value = g_value
    entry.initialized = True


def _pool_fold(pool, mask, size, cost_hint, f_value, oracle, costs_list, budget, diag):
    """Fold an evaluated mutant into the archives. Returns the best f value
    stored by this call, or None when nothing was stored.

    The augmentation candidate is grown from the density entry being
    replaced, before the replacement, restricted to elements that still fit
    the budget; every candidate evaluation is a counted oracle call.
    """
    if cost_hint > budget:
        return None
    # incremental costs can drift by an ulp; recompute before anything is kept
    cost = _exact_cost(mask, costs_list)
    if cost > budget:
        return None
    stored_best = None

    entry = pool.by_value[size]
    if f_value > entry.f_value:
        _store(entry, mask, size, cost, f_value, density_score(f_value, cost, size))
        stored_best = f_value

    entry = pool.by_density[size]
    g_value = density_score(f_value, cost, size)
    if g_value > entry.g_value:
        base_mask, base_size, base_cost = entry.mask, entry.size, entry.cost
        best_e = -1
        best_q = -math.inf
        best_q_cost = 0.0
        for e in range(pool.n):
            bit = 1 << e
            if base_mask & bit:
                continue
            q_cost = base_cost + costs_list[e]
            if q_cost <= budget:
                diag.augment_evals += 1
                q_value = oracle.value_of(base_mask | bit)
                if q_value > best_q:
                    best_e = e
                    best_q = q_value
                    best_q_cost = q_cost
        if best_e >= 0:
            aug = pool.augmented[size]
            if best_q > aug.f_value:
                q_mask = base_mask | (1 << best_e)
                q_size = base_size + 1
                _store(aug, q_mask, q_size, best_q_cost, best_q,
                       density_score(best_q, best_q_cost, q_size))
                if stored_best is None or best_q > stored_best:
                    stored_best = best_q
        _store(entry, mask, size, cost, f_value, g_value)
        if stored_best is None or f_value > stored_best:
            stored_best = f_value
    return stored_best


def pool_update(pool, s_mut: Subset, oracle, costs, budget: float, diag=None):
    """Evaluate a mutant that passed precheck and fold it into the archives.

    The evaluation happens unconditionally, so oracle accounting equals the
    number of EVALUATE decisions exactly; an infeasible mutant is then
    discarded without touching the pool. Returns the evaluated f value.
    """
    oracle = as_oracle(oracle)
    cost = subset_cost(s_mut, costs)
    f_value = oracle.value_of(s_mut.mask)
    costs_list = [float(x) for x in costs]
    _pool_fold(pool, s_mut.mask, s_mut.size, cost, f_value, oracle, costs_list,
               float(budget), diag if diag is not None else _Counters())
    return f_value


def _members_key(mask: int) -> tuple:
    out = []
    while mask:
        lsb = mask & -mask
        out.append(lsb.bit_length() - 1)
        mask ^= lsb
    return tuple(out)


def best_of_pools(pool: SolutionPool):
    """Best stored entry by f over all three archives.

    Ties break by smaller cost, then smaller cardinality, then lexicographic
    member order; the empty set is always an implicit candidate.
    """
    best_mask, best_size, best_cost, best_f = 0, 0, 0.0, 0.0
    for _, entries in pool.families():
        for entry in entries:
            if not entry.initialized:
                continue
            if entry.f_value < best_f:
                continue
            if entry.f_value == best_f:
                if entry.cost > best_cost:
                    continue
                if entry.cost == best_cost:
                    if entry.size > best_size:
                        continue
                    if entry.size == best_size and \
                            _members_key(entry.mask) >= _members_key(best_mask):
                        continue
            best_mask, best_size = entry.mask, entry.size
            best_cost, best_f = entry.cost, entry.f_value
    return Subset(pool.n, best_mask), best_f


class _PoolWatch:
    """Per-iteration invariant checker used by debug runs.

    Verifies cardinality indexing, feasibility, cached-size and density
    consistency, and that per-index f (value archive) and g (density archive)
    never decrease.
    """

    def __init__(self, pool, costs_list, budget):
        self.pool = pool
        self.costs_list = costs_list
        self.budget = budget
        n1 = pool.n + 1
        self.low_f = [0.0] * n1
        self.low_g = [0.0] * n1
        self.low_aug = [0.0] * n1

    def check(self, iteration):
        for name, entries in self.pool.families():
            for i, entry in enumerate(entries):
                if not entry.initialized:
                    continue
                where = f"{name}[{i}] at iteration {iteration}"
                assert entry.mask.bit_count() == entry.size, f"size cache broken in {where}"
                if name == "by_value" or name == "by_density":
                    assert entry.size == i, f"cardinality index broken in {where}"
                else:
                    assert entry.size >= 1, f"augmented entry empty in {where}"
                assert entry.cost <= self.budget, f"budget exceeded in {where}"
                exact = _exact_cost(entry.mask, self.costs_list)
                assert entry.cost == exact, f"cost cache broken in {where}"
                expect_g = density_score(entry.f_value, entry.cost, entry.size)
                assert entry.g_value == expect_g, f"density cache broken in {where}"
        for i in range(self.pool.n + 1):
            f_now = self.pool.by_value[i].f_value
            g_now = self.pool.by_density[i].g_value
            a_now = self.pool.augmented[i].f_value
            assert f_now >= self.low_f[i], f"f regressed at index {i}, iteration {iteration}"
            assert g_now >= self.low_g[i], f"g regressed at index {i}, iteration {iteration}"
            assert a_now >= self.low_aug[i], f"augmented f regressed at index {i}, iteration {iteration}"
            self.low_f[i] = f_now
            self.low_g[i] = g_now
            self.low_aug[i] = a_now


def _feasible_aug_count(entry, costs_list, budget, n) -> int:
    count = 0
    mask = entry.mask
    base = entry.cost
    for e in range(n):
        if not (mask >> e) & 1 and base + costs_list[e] <= budget:
            count += 1
    return count


def _validate_inputs(oracle, costs, budget, iterations):
    n = oracle.n
    if n < 1:
        raise ValueError("need n >= 1")
    costs_arr = np.asarray(costs, dtype=np.float64)
    if costs_arr.shape != (n,):
        raise ValueError(f"cost vector must have shape ({n},)")
    if (costs_arr <= 0).any():
        raise ValueError("costs must be strictly positive")
    if budget <= 0:
        raise ValueError("budget must be strictly positive")
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    return [float(x) for x in costs_arr]


def _evolution_loop(objective, costs, budget, iterations, rng, dedup,
                    record_iters, debug_checks, bloom_max_bits, stoch):
    """Shared driver for the uniform and stochastic optimizers.

    Batched rng layout, per block of up to 1024 iterations: the slot integers
    first, then (stochastic variant only) the coin uniforms, then the flip
    uniforms, one row of n per iteration in element order. The bloom filter's
    hash parameters come from a spawned child generator so the main stream is
    identical with deduplication on or off.
    """
    oracle = as_oracle(objective)
    n = oracle.n
    budget = float(budget)
    costs_list = _validate_inputs(oracle, costs, budget, iterations)

    record_set = frozenset(int(t) for t in record_iters)
    if record_set and not all(1 <= t <= iterations for t in record_set):
        raise ValueError("record iterations must lie in [1, iterations]")

    bloom = None
    if dedup and iterations >= 1:
        bloom = BloomFilter(iterations, rng.spawn(1)[0], max_bits=bloom_max_bits)

    pool = SolutionPool(n)
    diag = _Counters()
    watch = _PoolWatch(pool, costs_list, budget) if debug_checks else None
    slot_counts = np.zeros(2 * n, dtype=np.int64)
    calls_before = oracle.counter.evaluations
    best_f = 0.0
    trace = []

    if stoch is not None:
        p = stoch["p"]
        rounds = stoch["rounds"]
        level = 0
        steps = 1
        heads = 0

    by_value = pool.by_value
    by_density = pool.by_density
    inv_n = 1.0 / n
    t = 0
    while t < iterations:
        b = min(_BLOCK, iterations - t)
        slots = rng.integers(0, 2 * n, size=b)
        slot_counts += np.bincount(slots, minlength=2 * n)
        coins = rng.random(b) if stoch is not None else None
        rows, cols = np.nonzero(rng.random((b, n)) < inv_n)
        bounds = np.searchsorted(rows, np.arange(b + 1)).tolist()
        slots_l = slots.tolist()
        cols_l = cols.tolist()
        coins_l = coins.tolist() if coins is not None else None
        for j in range(b):
            t += 1
            slot = slots_l[j]
            if slot < n:
                parent = by_value[slot]
                sel_index = slot
            else:
                sel_index = slot - n
                parent = by_density[sel_index]
            if coins_l is not None and coins_l[j] < p:
                sel_index = level
                parent = by_density[level]
                heads += 1
                steps += 1
                if steps % rounds == 0 and level < n:
                    level += 1
            p_mask = parent.mask
            child_mask = p_mask
            child_size = parent.size
            child_cost = parent.cost
            for e in cols_l[bounds[j]:bounds[j + 1]]:
                bit = 1 << e
                if child_mask & bit:
                    child_mask ^= bit
                    child_size -= 1
                    child_cost -= costs_list[e]
                else:
                    child_mask |= bit
                    child_size += 1
                    child_cost += costs_list[e]
            if child_mask == p_mask:
                diag.stay_same += 1
            else:
                if bloom is not None:
                    fp = subset_fingerprint(child_mask, n)
                    if bloom.check(fp):
                        diag.seen_before += 1
                    else:
                        diag.evaluate_decisions += 1
                        f_value = oracle.value_of(child_mask)
                        bloom.insert(fp)
                        stored = _pool_fold(pool, child_mask, child_size, child_cost,
                                            f_value, oracle, costs_list, budget, diag)
                        if stored is not None and stored > best_f:
                            best_f = stored
                else:
                    diag.evaluate_decisions += 1
                    f_value = oracle.value_of(child_mask)
                    stored = _pool_fold(pool, child_mask, child_size, child_cost,
                                        f_value, oracle, costs_list, budget, diag)
                    if stored is not None and stored > best_f:
                        best_f = stored
            if watch is not None:
                watch.check(t)
            if t in record_set:
                aug_entry = by_density[sel_index]
                trace.append(TraceRecord(
                    iteration=t,
                    best_f=best_f,
                    oracle_calls=oracle.counter.evaluations - calls_before,
                    cost_ratio=parent.cost / budget,
                    feasible_aug_ratio=_feasible_aug_count(aug_entry, costs_list, budget, n) / n,
                    stay_same_ratio=diag.stay_same / t,
                    seen_before_ratio=diag.seen_before / t,
                ))

    best_subset, final_f = best_of_pools(pool)
    diagnostics = {
        "stay_same": diag.stay_same,
        "seen_before": diag.seen_before,
        "evaluate_decisions": diag.evaluate_decisions,
        "augment_evaluations": diag.augment_evals,
        "mutant_evaluations": oracle.counter.evaluations - calls_before - diag.augment_evals,
        "slot_counts": slot_counts,
        "best_cost": subset_cost(best_subset, costs_list),
    }
    if stoch is not None:
        diagnostics["head_count"] = heads
        diagnostics["guided_steps"] = steps
        diagnostics["final_level"] = level
        diagnostics["rounds_per_level"] = rounds
    return RunResult(
        best_subset=best_subset,
        best_f=final_f,
        oracle_calls=oracle.counter.evaluations - calls_before,
        iterations=iterations,
        trace=trace,
        diagnostics=diagnostics,
    )


def evo_maximize(objective, costs, budget, iterations, rng, *, dedup=True,
                 record_iters=(), debug_checks=False,
                 bloom_max_bits=DEFAULT_MAX_BITS) -> RunResult:
    """Uniform-selection evolutionary maximization under a knapsack budget.

    Each iteration picks one of the 2n parent slots (value and density
    archives at sizes 0..n-1) uniformly, flips each element of the parent
    with probability 1/n, skips the evaluation when the mutant is unchanged
    or (with dedup on) when the bloom filter says it was already evaluated,
    and otherwise evaluates it and folds it into the archives. Returns the
    best archive entry by objective value.
    """
    return _evolution_loop(objective, costs, budget, iterations, rng, dedup,
                           record_iters, debug_checks, bloom_max_bits, None)


def st_evo_maximize(objective, costs, budget, iterations, rng, *, epsilon=0.1,
                    p=0.5, dedup=True, record_iters=(), debug_checks=False,
                    bloom_max_bits=DEFAULT_MAX_BITS) -> RunResult:
    """Stochastic guided-selection variant of evo_maximize.

    After the uniform slot draw (always consumed, for trace stability), a
    Bernoulli(p) coin decides whether the parent is overridden with the
    density archive entry at the current guidance level. The level starts at
    0 and advances after every level_rounds(n, epsilon) guided steps, capped
    at n. Pool updates are identical to evo_maximize.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    oracle = as_oracle(objective)
    stoch = {"p": float(p), "rounds": level_rounds(oracle.n, epsilon)}
    return _evolution_loop(oracle, costs, budget, iterations, rng, dedup,
                           record_iters, debug_checks, bloom_max_bits, stoch)


def greedy_max(objective, costs, budget) -> RunResult:
    """Deterministic density-greedy baseline with per-prefix augmentation.

    Each round evaluates f(S + e) for every element that still fits the
    budget; the same evaluations drive both the marginal-density argmax that
    grows the prefix and the best-single-element augmentation of the current
    prefix (including the empty prefix, whose augmentation is the best
    feasible singleton). Returns the best set over all prefixes and augmented
    prefixes. Ties break toward the lowest element index.
    """
    oracle = as_oracle(objective)
    n = oracle.n
    budget = float(budget)
    costs_list = _validate_inputs(oracle, costs, budget, 0)
    calls_before = oracle.counter.evaluations

    cur_mask, cur_size, cur_cost, cur_f = 0, 0, 0.0, 0.0
    best_mask, best_size, best_cost, best_f = 0, 0, 0.0, 0.0
    trace = []
    rounds = 0
    while True:
        best_density_e = -1
        best_density = -math.inf
        best_aug_e = -1
        best_aug_f = -math.inf
        chosen_value = 0.0
        for e in range(n):
            bit = 1 << e
            if cur_mask & bit:
                continue
            ce = costs_list[e]
            if cur_cost + ce > budget:
                continue
            value = oracle.value_of(cur_mask | bit)
            if value > best_aug_f:
                best_aug_e = e
                best_aug_f = value
            dens = (value - cur_f) / ce
            if dens > best_density:
                best_density_e = e
                best_density = dens
                chosen_value = value
        if best_aug_e >= 0 and best_aug_f > best_f:
            best_mask = cur_mask | (1 << best_aug_e)
            best_size = cur_size + 1
            best_cost = cur_cost + costs_list[best_aug_e]
            best_f = best_aug_f
        if best_density_e < 0:
            break
        rounds += 1
        cur_mask |= 1 << best_density_e
        cur_size += 1
        cur_cost += costs_list[best_density_e]
        cur_f = chosen_value
        if cur_f > best_f:
            best_mask, best_size = cur_mask, cur_size
            best_cost, best_f = cur_cost, cur_f
        aug_feasible = 0
        for e in range(n):
            if not (cur_mask >> e) & 1 and cur_cost + costs_list[e] <= budget:
                aug_feasible += 1
        trace.append(TraceRecord(
            iteration=rounds,
            best_f=best_f,
            oracle_calls=oracle.counter.evaluations - calls_before,
            cost_ratio=cur_cost / budget,
            feasible_aug_ratio=aug_feasible / n,
            stay_same_ratio=0.0,
            seen_before_ratio=0.0,
        ))
    return RunResult(
        best_subset=Subset(n, best_mask),
        best_f=best_f,
        oracle_calls=oracle.counter.evaluations - calls_before,
        iterations=rounds,
        trace=trace,
        diagnostics={"rounds": rounds, "best_cost": best_cost, "best_size": best_size},
    )


def brute_force_opt(objective, costs, budget, max_n: int = BRUTE_FORCE_CAP):
    """Exhaustive optimum over all feasible subsets (testing oracle).

    Returns (opt_subset, opt_value, costliest_element) where the last is the
    maximum-cost member of the optimum (lowest index on cost ties) or None
    for the empty optimum. Value ties break by smaller cost, then smaller
    cardinality, then lexicographic member order.
    """
    oracle = as_oracle(objective)
    n = oracle.n
    if n > max_n:
        raise ResourceLimitError(f"brute force refused for n={n} (cap {max_n})")
    budget = float(budget)
    costs_list = _validate_inputs(oracle, costs, budget, 0)

    best_mask, best_size, best_cost, best_f = 0, 0, 0.0, 0.0
    best_key = ()
    for mask in range(1, 1 << n):
        cost = _exact_cost(mask, costs_list)
        if cost > budget:
            continue
        value = oracle.value_of(mask)
        if value < best_f:
            continue
        if value == best_f:
            if cost > best_cost:
                continue
            size = mask.bit_count()
            if cost == best_cost:
                if size > best_size:
                    continue
                if size == best_size and _members_key(mask) >= best_key:
                    continue
        best_mask = mask
        best_size = mask.bit_count()
        best_cost = cost
        best_f = value
        best_key = _members_key(best_mask)

    costliest = None
    if best_mask:
        top = -math.inf
        for e in _members_key(best_mask):
            if costs_list[e] > top:
                top = costs_list[e]
                costliest = e
    return Subset(n, best_mask), best_f, costliest
