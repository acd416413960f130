"""Subsets of a ground set, modular costs, the density score, and run sizing.

Every logarithm in the sizing formulas is the natural logarithm, and all real
arithmetic is 64-bit floating point.
"""

import math

_MASK64 = (1 << 64) - 1


class ResourceLimitError(RuntimeError):
    """A request exceeded a configured resource cap and was refused."""


def mix64(x: int) -> int:
    """Finalizing 64-bit mixer (splitmix64 step).

    Fixed for the lifetime of the package: both subset fingerprints and
    derived rng streams depend on it, so changing it invalidates golden
    traces.
    """
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Subset:
    """Subset of ``{0, ..., n-1}`` stored as an int bitmask with cached size.

    The cache makes cardinality lookups O(1) inside optimizer loops; add and
    remove keep it consistent. Instances are single-writer: share copies, not
    the object, across workers.
    """

    __slots__ = ("n", "mask", "size")

    def __init__(self, n: int, mask: int = 0):
        if n < 0:
            raise ValueError("ground set size must be non-negative")
        if mask < 0 or mask >> n:
            raise ValueError("mask has bits outside the ground set")
        self.n = n
        self.mask = mask
        self.size = mask.bit_count()

    @classmethod
    def from_members(cls, n: int, members) -> "Subset":
        mask = 0
        for e in members:
            if not 0 <= e < n:
                raise ValueError(f"element {e} outside ground set of size {n}")
            mask |= 1 << e
        return cls(n, mask)

    def __contains__(self, e: int) -> bool:
        return 0 <= e < self.n and (self.mask >> e) & 1 == 1

    def add(self, e: int) -> None:
        if not 0 <= e < self.n:
            raise ValueError(f"element {e} outside ground set of size {self.n}")
        bit = 1 << e
        if not self.mask & bit:
            self.mask |= bit
            self.size += 1

    def remove(self, e: int) -> None:
        if not 0 <= e < self.n:
            raise ValueError(f"element {e} outside ground set of size {self.n}")
        bit = 1 << e
        if self.mask & bit:
            self.mask ^= bit
            self.size -= 1

    def members(self) -> list:
        """Member indices in ascending order."""
        out = []
        m = self.mask
        while m:
            lsb = m & -m
            out.append(lsb.bit_length() - 1)
            m ^= lsb
        return out

    def copy(self) -> "Subset":
        return Subset(self.n, self.mask)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Subset)
            and self.n == other.n
            and self.mask == other.mask
        )

    def __repr__(self) -> str:
        return f"Subset(n={self.n}, members={self.members()})"


def subset_cost(s: Subset, costs) -> float:
    """Sum of the member costs of ``s``; 0.0 for the empty set."""
    if len(costs) != s.n:
        raise ValueError(f"cost vector has {len(costs)} entries for ground set of size {s.n}")
    total = 0.0
    for e in s.members():
        total += float(costs[e])
    return total


def density_score(f_value: float, cost_value: float, cardinality: int) -> float:
    """Value-per-cost ranking score: f/cost for nonempty sets, f itself for the empty set."""
    if cardinality < 0:
        raise ValueError("cardinality must be non-negative")
    if cardinality == 0:
        return f_value
    if cost_value <= 0:
        raise ValueError("nonempty sets must have strictly positive cost")
    return f_value / cost_value


def max_feasible_size(costs, budget: float) -> int:
    """Largest k such that the k cheapest elements fit within the budget.

    Equivalent to the maximum cardinality over all feasible sets because
    costs are strictly positive. Returns 0 when even the cheapest element
    exceeds the budget.
    """
    if budget <= 0:
        raise ValueError("budget must be strictly positive")
    total = 0.0
    k = 0
    for c in sorted(float(x) for x in costs):
        if c <= 0:
            raise ValueError("costs must be strictly positive")
        total += c
        if total > budget:
            break
        k += 1
    return k


def evo_iterations(n: int, k_max: int, k_in_log_term: bool = False) -> int:
    """Iteration budget for the uniform-selection optimizer.

    ceil(max(4e n^2 k, 16e n^2 ln n)). The optional variant replaces the
    second term with 16e n k ln n; it is exposed for experimentation only
    and the default is authoritative.
    """
    if n <= 1:
        raise ValueError("need n >= 2 (the log term must be positive)")
    if k_max < 1:
        raise ValueError("need k_max >= 1")
    first = 4.0 * math.e * n * n * k_max
    if k_in_log_term:
        second = 16.0 * math.e * n * k_max * math.log(n)
    else:
        second = 16.0 * math.e * n * n * math.log(n)
    return math.ceil(max(first, second))


def st_evo_iterations(n: int, k_max: int, epsilon: float, p: float) -> int:
    """Iteration budget for the stochastic-selection optimizer.

    ceil(2e n k ln(1/epsilon) / p). epsilon = 1 gives 0; the harness clamps
    that to at least one iteration.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if k_max < 1:
        raise ValueError("need k_max >= 1")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    return math.ceil(2.0 * math.e * n * k_max * math.log(1.0 / epsilon) / p)


def level_rounds(n: int, epsilon: float) -> int:
    """Guided-selection steps spent per target-size level: ceil(e n ln(1/epsilon)), minimum 1."""
    if n < 1:
        raise ValueError("need n >= 1")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must be in (0, 1]")
    return max(1, math.ceil(math.e * n * math.log(1.0 / epsilon)))
