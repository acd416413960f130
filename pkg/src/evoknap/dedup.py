"""Evaluation-avoidance layer: unchanged-set pre-check and a bloom filter
over fingerprints of already-evaluated subsets.

The filter allocates 16 bits per planned iteration and probes 11 affine hash
functions h_i(x) = ((a_i * x + b_i) mod 2^64) mod m with odd a_i. It has no
false negatives; the measured false-positive rate at full load is about 5e-4.
"""

import enum

import numpy as np

from .core import _MASK64, ResourceLimitError, Subset, mix64

BITS_PER_ENTRY = 16
HASH_COUNT = 11
DEFAULT_MAX_BITS = 1 << 31  # 256 MiB of filter


def subset_fingerprint(mask: int, n: int) -> int:
    """64-bit digest of a membership bitmask; a pure function of membership.

    Mixes the 64-bit words of the mask in order so ground sets of any size
    map into the filter's uniform 64-bit key domain.
    """
    h = 0x9E3779B97F4A7C15
    for _ in range(max(1, (n + 63) >> 6)):
        h = mix64(h ^ (mask & _MASK64))
        mask >>= 64
    return h


class Decision(enum.Enum):
    """Outcome of the pre-evaluation check for a mutated subset."""

    SKIP_UNCHANGED = "skip_unchanged"
    SKIP_SEEN = "skip_seen"
    EVALUATE = "evaluate"


class BloomFilter:
    """Fixed-capacity bit array with affine hash probes.

    Sized once for a planned number of insertions and not resizable; a run
    that wants a larger iteration budget must build a new filter.
    """

    def __init__(self, planned_inserts, rng, bits_per_entry=BITS_PER_ENTRY,
                 hash_count=HASH_COUNT, max_bits=DEFAULT_MAX_BITS):
        if planned_inserts < 1:
            raise ValueError("planned_inserts must be >= 1")
        if bits_per_entry < 1 or hash_count < 1:
            raise ValueError("bits_per_entry and hash_count must be >= 1")
        m = bits_per_entry * planned_inserts
        if m > max_bits:
            raise ResourceLimitError(
                f"bloom filter would need {m} bits; configured cap is {max_bits}"
            )
        draws = rng.integers(0, 1 << 64, size=2 * hash_count, dtype=np.uint64)
        # odd multipliers keep the affine map a bijection mod 2^64
        self.hash_params = [
            (int(draws[2 * i]) | 1, int(draws[2 * i + 1])) for i in range(hash_count)
        ]
        self.m = m
        self.k = hash_count
        self.bits = bytearray((m + 7) >> 3)
        self.inserted_count = 0
        self.check_count = 0

    def _indices(self, fingerprint: int):
        m = self.m
        for a, b in self.hash_params:
            yield ((a * fingerprint + b) & _MASK64) % m

    def check(self, fingerprint: int) -> bool:
        """True iff every probed bit is set; False guarantees never inserted."""
        self.check_count += 1
        bits = self.bits
        for idx in self._indices(fingerprint):
            if not (bits[idx >> 3] >> (idx & 7)) & 1:
                return False
        return True

    def insert(self, fingerprint: int) -> None:
        bits = self.bits
        for idx in self._indices(fingerprint):
            bits[idx >> 3] |= 1 << (idx & 7)
        self.inserted_count += 1

    def _batch_indices(self, fingerprints: np.ndarray) -> np.ndarray:
        fps = np.asarray(fingerprints, dtype=np.uint64)
        out = np.empty((self.k, fps.size), dtype=np.uint64)
        m = np.uint64(self.m)
        for i, (a, b) in enumerate(self.hash_params):
            # uint64 arithmetic wraps mod 2^64, matching the scalar path
            out[i] = (np.uint64(a) * fps + np.uint64(b)) % m
        return out

    def check_batch(self, fingerprints) -> np.ndarray:
        """Vectorized check; returns a boolean array aligned with the input."""
        idx = self._batch_indices(fingerprints)
        view = np.frombuffer(self.bits, dtype=np.uint8)
        byte_idx = (idx >> np.uint64(3)).astype(np.int64)
        shift = (idx & np.uint64(7)).astype(np.uint8)
        hit = ((view[byte_idx] >> shift) & 1).astype(bool)
        self.check_count += int(np.asarray(fingerprints).size)
        return hit.all(axis=0)

    def insert_batch(self, fingerprints) -> None:
        idx = self._batch_indices(fingerprints)
        view = np.frombuffer(self.bits, dtype=np.uint8)
        byte_idx = (idx >> np.uint64(3)).astype(np.int64).ravel()
        shift = (idx & np.uint64(7)).astype(np.uint8).ravel()
        np.bitwise_or.at(view, byte_idx, np.uint8(1) << shift)
        self.inserted_count += int(np.asarray(fingerprints).size)

    def set_bit_count(self) -> int:
        """Number of set bits, for load-factor diagnostics."""
        return int(np.unpackbits(np.frombuffer(self.bits, dtype=np.uint8)).sum())


def bloom_init(planned_inserts: int, rng, max_bits: int = DEFAULT_MAX_BITS) -> BloomFilter:
    """Filter sized at 16 bits per planned insert with 11 hash probes."""
    return BloomFilter(planned_inserts, rng, max_bits=max_bits)


def precheck(current: Subset, mutated: Subset, bloom: "BloomFilter | None" = None,
             fingerprint: "int | None" = None) -> Decision:
    """Decide whether a mutated subset needs an objective evaluation.

    SKIP_UNCHANGED when the mutation changed nothing; SKIP_SEEN when the
    filter reports the subset as already evaluated; EVALUATE otherwise. On
    EVALUATE with a filter present, the caller must insert the fingerprint
    after performing the evaluation, so that "seen" always means "evaluated".
    """
    if current.n != mutated.n:
        raise ValueError("subsets are over different ground sets")
    if mutated.mask == current.mask:
        return Decision.SKIP_UNCHANGED
    if bloom is None:
        return Decision.EVALUATE
    if fingerprint is None:
        fingerprint = subset_fingerprint(mutated.mask, mutated.n)
    return Decision.SKIP_SEEN if bloom.check(fingerprint) else Decision.EVALUATE
