"""Per-element membership flips and the seeded randomness contract.

All stochastic components draw from numpy's PCG64 generator. Repetition r of
an experiment owns the independent generator seeded with
``seed XOR mix64(r)``; the mixer is fixed (see core.mix64) so any single
repetition can be replayed by external tools. Generator choice is frozen per
major version of this package.
"""

from typing import NamedTuple

import numpy as np

from .core import _MASK64, Subset, mix64


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed."""
    return np.random.default_rng(int(seed) & _MASK64)


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator derived from a master seed and a stream index.

    Used with index = repetition number for per-rep streams; large fixed
    indices are reserved by the harness for instance-construction streams.
    """
    return make_rng((int(seed) & _MASK64) ^ mix64(int(index)))


def flip_mask(n: int, rng: np.random.Generator) -> int:
    """Draw the n Bernoulli(1/n) flip decisions and pack them into a bitmask.

    Consumes exactly n uniform draws, compared against 1/n in ascending
    element order; this fixes the rng call sequence so traces replay.
    """
    hits = np.nonzero(rng.random(n) < 1.0 / n)[0]
    mask = 0
    for e in hits.tolist():
        mask |= 1 << e
    return mask


def mutate(s: Subset, rng: np.random.Generator) -> Subset:
    """Flip each element's membership independently with probability 1/n.

    The input subset is left unmodified.
    """
    return Subset(s.n, s.mask ^ flip_mask(s.n, rng))


class FlipStats(NamedTuple):
    stay_same_rate: float
    mean_flips: float


def expected_flip_stats(n: int, trials: int, rng: np.random.Generator) -> FlipStats:
    """Empirical stay-same rate and mean flip count over repeated mutations.

    Runs `trials` mutations of the empty set. The analytic references are
    (1 - 1/n)^n for the stay-same rate and 1 for the mean (Binomial(n, 1/n)).
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if trials < 1:
        raise ValueError("need trials >= 1")
    stayed = 0
    flips = 0
    # chunk the trials so the draw matrix stays below ~64 MB
    chunk = max(1, 8_000_000 // n)
    left = trials
    inv_n = 1.0 / n
    while left:
        b = min(chunk, left)
        per_trial = (rng.random((b, n)) < inv_n).sum(axis=1)
        stayed += int((per_trial == 0).sum())
        flips += int(per_trial.sum())
        left -= b
    return FlipStats(stayed / trials, flips / trials)
