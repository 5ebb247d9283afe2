# Copyright (c) 2026, the dpsd authors
import logging
import typing
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString
from dpsd.oracle.exact import exact_edit
from dpsd.edit.too_far import TOO_FAR


class PlantingError(ValueError):
    pass


def random_bits(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def plant_hamming_pair(n: int, d: int, rng: np.random.Generator) -> typing.Tuple[PackedBitString, PackedBitString]:
    """
    A random string and a copy with exactly d positions inverted
    :param n: The length
    :param d: The Hamming distance, in [0, n]
    :param rng:
    :return: (a, b)
    """
    if n < 1 or not 0 <= d <= n:
        raise PlantingError(f"Cannot plant Hamming distance {d} in strings of length {n}")
    bits_a = random_bits(n, rng)
    bits_b = bits_a.copy()
    bits_b[rng.choice(n, size=d, replace=False)] ^= 1
    return PackedBitString.from_bits(bits_a), PackedBitString.from_bits(bits_b)


def apply_random_edits(bits: np.ndarray, budget: int, rng: np.random.Generator) -> np.ndarray:
    """
    Apply random edits costing at most the budget, keeping the length.
    Each step is a substitution, or an insertion paired with a deletion, which costs two.
    """
    bits = bits.copy()
    n = bits.shape[0]
    while budget > 0:
        if budget >= 2 and rng.random() < 0.5:
            bits = np.insert(bits, int(rng.integers(0, n + 1)), int(rng.integers(0, 2)))
            bits = np.delete(bits, int(rng.integers(0, n + 1)))
            budget -= 2
        else:
            bits[int(rng.integers(0, n))] ^= 1
            budget -= 1
    return bits


def plant_edit_pair(n: int, d: int, rng: np.random.Generator, require_exact: bool = False,
                    max_attempts: int = 1000) -> typing.Tuple[PackedBitString, PackedBitString]:
    """
    A random string and a same-length string at most d edits away, checked with the exact DP before returning.
    :param n: The length
    :param d: The edit budget, in [0, n]
    :param rng:
    :param require_exact: Retry until the realised distance is exactly d
    :param max_attempts: Give up after this many retries
    :return: (a, b)
    """
    if n < 1 or not 0 <= d <= n:
        raise PlantingError(f"Cannot plant edit distance {d} in strings of length {n}")
    for attempt in range(max_attempts):
        bits_a = random_bits(n, rng)
        bits_b = apply_random_edits(bits_a, d, rng)
        a = PackedBitString.from_bits(bits_a)
        b = PackedBitString.from_bits(bits_b)
        realised = exact_edit(a, b, k=d)
        if realised is TOO_FAR:
            raise PlantingError(f"Planted pair exceeded its edit budget {d}")
        if not require_exact or realised == d:
            return a, b
        logging.getLogger(__name__).debug(
            f"Planted distance collapsed to {realised} < {d} on attempt {attempt + 1}, retrying")
    raise PlantingError(f"Could not plant an exact edit distance of {d} in length {n} "
                        f"within {max_attempts} attempts")
