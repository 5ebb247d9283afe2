# Copyright (c) 2026, the dpsd authors
import typing
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString, LengthMismatchError, hamming_popcount
from dpsd.edit.too_far import TOO_FAR, Distance

_UNREACHABLE = 1 << 40


def exact_hamming(a: PackedBitString, b: PackedBitString) -> int:
    return hamming_popcount(a, b)


def _lcp_bits(bits_a: np.ndarray, i: int, bits_b: np.ndarray, j: int) -> int:
    if not 1 <= i <= bits_a.shape[0] + 1 or not 1 <= j <= bits_b.shape[0] + 1:
        raise IndexError(f"LCP positions ({i}, {j}) out of range for lengths "
                         f"{bits_a.shape[0]} and {bits_b.shape[0]}")
    span = min(bits_a.shape[0] - i + 1, bits_b.shape[0] - j + 1)
    mismatches = np.flatnonzero(bits_a[i - 1:i - 1 + span] != bits_b[j - 1:j - 1 + span])
    if len(mismatches) > 0:
        return int(mismatches[0])
    return span


def exact_lcp(a: PackedBitString, i: int, b: PackedBitString, j: int) -> int:
    """
    The length of the longest common prefix of a[i:] and b[j:].
    Positions are 1-indexed, and one past the end is allowed (the empty suffix).
    :param a:
    :param i:
    :param b:
    :param j:
    :return:
    """
    return _lcp_bits(a.to_bits(), i, b.to_bits(), j)


class ExactLcp:
    """
    Exact lcp(i, j) queries between two fixed strings,
    with the same interface as the private handle so the edit search can run on either.
    """

    def __init__(self, a: PackedBitString, b: PackedBitString):
        if a.length != b.length:
            raise LengthMismatchError(a.length, b.length)
        self._bits_a = a.to_bits()
        self._bits_b = b.to_bits()
        self.queries = 0

    @property
    def length(self) -> int:
        return self._bits_a.shape[0]

    def lcp(self, i: int, j: int) -> int:
        self.queries += 1
        return _lcp_bits(self._bits_a, i, self._bits_b, j)


def exact_edit(a: PackedBitString, b: PackedBitString, k: typing.Optional[int] = None,
               banded: bool = True) -> Distance:
    """
    Edit distance by dynamic programming over prefixes, with unit-cost insertion, deletion, and substitution.
    The banded mode only fills cells with |i - j| <= k, costing O(n k).
    The unbanded mode fills the whole table and is meant for small cross-checks.
    :param a:
    :param b:
    :param k: The cap. Distances above it come back as TOO_FAR. Required when banded.
    :param banded:
    :return:
    """
    if banded and k is None:
        raise ValueError("A banded edit distance needs a cap k")
    n = a.length
    m = b.length
    bits_a = a.to_bits().astype(np.int64)
    bits_b = b.to_bits().astype(np.int64)
    if k is not None and abs(n - m) > k:
        return TOO_FAR
    width = k if banded else max(n, m)

    previous = np.full(m + 1, _UNREACHABLE, dtype=np.int64)
    first_row = min(m, width)
    previous[:first_row + 1] = np.arange(first_row + 1)
    for i in range(1, n + 1):
        low = max(0, i - width)
        high = min(m, i + width)
        current = np.full(m + 1, _UNREACHABLE, dtype=np.int64)
        if low == 0:
            current[0] = i
        columns = np.arange(max(low, 1), high + 1)
        if len(columns) > 0:
            substitute = previous[columns - 1] + (bits_a[i - 1] != bits_b[columns - 1])
            delete = previous[columns] + 1
            current[columns] = np.minimum(substitute, delete)
        if high >= low:
            # Insertions run left to right along the row: D(i, j) = min over j' <= j of D(i, j') + (j - j')
            offsets = np.arange(low, high + 1)
            current[low:high + 1] = np.minimum.accumulate(current[low:high + 1] - offsets) + offsets
        previous = current
    distance = int(previous[m])
    if distance >= _UNREACHABLE or (k is not None and distance > k):
        return TOO_FAR
    return distance
