# Copyright (c) 2026, the dpsd authors
import typing
import numpy as np
import xxhash

SEED_BYTES = 32
TAG_H = 1
TAG_G = 2

_MASK_32 = np.uint64(0xFFFFFFFF)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)


class HashDomainError(ValueError):
    pass


def _mix64(values: np.ndarray) -> np.ndarray:
    # splitmix64 finaliser. uint64 array arithmetic wraps modulo 2^64.
    values = values ^ (values >> np.uint64(30))
    values = values * _MIX_1
    values = values ^ (values >> np.uint64(27))
    values = values * _MIX_2
    return values ^ (values >> np.uint64(31))


def _reduce_range(values: np.ndarray, size: int) -> np.ndarray:
    """
    Multiply-shift range reduction, floor(v * size / 2^64), using 32-bit limbs so nothing overflows.
    :param values: uint64 hash values
    :param size: The range size, less than 2^32
    :return: Values in [0, size)
    """
    size = np.uint64(size)
    high = (values >> np.uint64(32)) * size
    low = ((values & _MASK_32) * size) >> np.uint64(32)
    return (high + low) >> np.uint64(32)


class HashFamily:
    """
    The public random hash functions h: [2n] -> [M2] and g: [2n] x [M1] -> [M3],
    realised as a keyed pseudorandom function of the 32-byte public seed.
    Everything here is a pure function of (seed, input), so a stored seed reproduces every value.
    Inputs x encode a (position, bit) pair as 2(p - 1) + bit.
    """

    def __init__(self, seed: bytes, domain_size: int, m1: int, range_h: int, range_g: int):
        seed = bytes(seed)
        if len(seed) != SEED_BYTES:
            raise ValueError(f"Hash seed must be {SEED_BYTES} bytes, got {len(seed)}")
        if domain_size < 1 or m1 < 1 or range_h < 1 or range_g < 1:
            raise ValueError(f"Hash family dimensions must be positive, got domain {domain_size}, "
                             f"m1 {m1}, range_h {range_h}, range_g {range_g}")
        if max(range_h, range_g) >= 1 << 32 or m1 >= 1 << 16 or domain_size >= 1 << 40:
            raise ValueError("Hash family dimensions are too large for the input encoding")
        self.seed = seed
        self.domain_size = int(domain_size)
        self.m1 = int(m1)
        self.range_h = int(range_h)
        self.range_g = int(range_g)
        self._keys = (
            np.uint64(xxhash.xxh3_64_intdigest(seed + b'\x00')),
            np.uint64(xxhash.xxh3_64_intdigest(seed + b'\x01'))
        )
        self._h_table = None
        self._g_table = None

    def __eq__(self, other):
        return (isinstance(other, HashFamily) and self.seed == other.seed and
                self.domain_size == other.domain_size and self.m1 == other.m1 and
                self.range_h == other.range_h and self.range_g == other.range_g)

    def __hash__(self):
        return hash((self.seed, self.domain_size, self.m1, self.range_h, self.range_g))

    def __getstate__(self):
        # Tables are cheap to rebuild, don't ship them to worker processes
        return self.seed, self.domain_size, self.m1, self.range_h, self.range_g

    def __setstate__(self, state):
        self.__init__(*state)

    def _prf(self, x: np.ndarray, i: np.ndarray, tag: int) -> np.ndarray:
        encoded = (x << np.uint64(20)) | (i << np.uint64(4)) | np.uint64(tag)
        return _mix64(_mix64(encoded ^ self._keys[0]) ^ self._keys[1])

    def h_many(self, x: typing.Union[np.ndarray, typing.Sequence[int]]) -> np.ndarray:
        """
        Vectorised h, 1-indexed outputs in [1, M2]
        :param x: Inputs in [0, 2n - 1]
        :return: int64 array the same shape as x
        """
        x = self._check_domain(x)
        values = self._prf(x, np.zeros_like(x), TAG_H)
        return _reduce_range(values, self.range_h).astype(np.int64) + 1

    def g_many(self, x: typing.Union[np.ndarray, typing.Sequence[int]],
               i: typing.Union[np.ndarray, typing.Sequence[int]]) -> np.ndarray:
        """
        Vectorised g, 1-indexed outputs in [1, M3]
        :param x: Inputs in [0, 2n - 1]
        :param i: Repetitions in [1, M1], broadcast against x
        :return:
        """
        x = self._check_domain(x)
        i = np.asarray(i, dtype=np.int64)
        if np.any(i < 1) or np.any(i > self.m1):
            raise HashDomainError(f"Repetition index outside [1, {self.m1}]")
        x, i = np.broadcast_arrays(x, i.astype(np.uint64))
        values = self._prf(x, i, TAG_G)
        return _reduce_range(values, self.range_g).astype(np.int64) + 1

    def h_table(self) -> np.ndarray:
        """
        h over the whole domain, 0-indexed buckets, shape (2n,).
        Computed once and kept, encode looks up into it.
        :return:
        """
        if self._h_table is None:
            table = self.h_many(np.arange(self.domain_size)) - 1
            table.flags.writeable = False
            self._h_table = table
        return self._h_table

    def g_table(self) -> np.ndarray:
        """
        g over the whole domain, 0-indexed cells, shape (2n, M1)
        :return:
        """
        if self._g_table is None:
            table = self.g_many(np.arange(self.domain_size)[:, None], np.arange(1, self.m1 + 1)[None, :]) - 1
            table.flags.writeable = False
            self._g_table = table
        return self._g_table

    def _check_domain(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if np.any(x < 0) or np.any(x >= self.domain_size):
            raise HashDomainError(f"Hash input outside the domain [0, {self.domain_size - 1}]")
        return x.astype(np.uint64)


def eval_h(family: HashFamily, x: int) -> int:
    """
    h(x): [2n] -> [M2]
    :param family:
    :param x:
    :return:
    """
    return int(family.h_many(np.array([x]))[0])


def eval_g(family: HashFamily, x: int, i: int) -> int:
    """
    g(x, i): [2n] x [M1] -> [M3]
    :param family:
    :param x:
    :param i:
    :return:
    """
    return int(family.g_many(np.array([x]), np.array([i]))[0])


def encode_symbol(position: int, bit: int) -> int:
    """
    The hash input for a 1-indexed position holding a given bit, 2(p - 1) + b
    :param position:
    :param bit:
    :return:
    """
    return 2 * (int(position) - 1) + int(bit)
