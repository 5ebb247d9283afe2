# Copyright (c) 2026, the dpsd authors
import math
import typing
import functools
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString, LengthMismatchError, POPCOUNT_TABLE
from dpsd.sketch.hash_family import HashFamily


class SketchParamsError(ValueError):
    pass


class KExceedsNError(SketchParamsError):
    def __init__(self, k: int, n: int):
        super(KExceedsNError, self).__init__(f"Distance cap k={k} exceeds the string length n={n}")
        self.k = k
        self.n = n


class SketchParamsMismatchError(SketchParamsError):
    pass


def ceil_log2(value: int) -> int:
    """
    Exact ceil(log2(value)) for positive integers, no floating point
    """
    return (int(value) - 1).bit_length()


def flip_prob_for(eps: float, m1: int) -> float:
    """
    The randomised response flip probability 1 / (1 + e^(eps / (2 M1))).
    Each position toggles M1 cells, so neighbours differ in at most 2 M1 cells,
    and this probability makes the whole release eps-DP.
    :param eps: The privacy budget for this sketch, possibly infinite
    :param m1: The number of repetitions
    :return: A probability in [0, 1/2]
    """
    eps = float(eps)
    if eps < 0 or math.isnan(eps):
        raise SketchParamsError(f"Privacy budget must be non-negative, got {eps}")
    if math.isinf(eps):
        return 0.0
    # Written with e^-x so large budgets underflow to 0 instead of overflowing
    scaled = math.exp(-eps / (2 * m1))
    return scaled / (1.0 + scaled)


def eps_for_flip_prob(flip_prob: float, m1: int) -> float:
    """
    Inverse of flip_prob_for, the budget that produces a given flip probability
    :param flip_prob: In [0, 1/2]
    :param m1:
    :return:
    """
    if not 0 <= flip_prob <= 0.5:
        raise SketchParamsError(f"Flip probability must be in [0, 1/2], got {flip_prob}")
    if flip_prob == 0:
        return math.inf
    return 2 * m1 * math.log((1 - flip_prob) / flip_prob)


# Families hold full-domain tables. Stores are built and queried copy by copy, so a few suffice
HASH_FAMILY_CACHE_SIZE = 16


@functools.lru_cache(maxsize=HASH_FAMILY_CACHE_SIZE)
def get_hash_family(seed: bytes, domain_size: int, m1: int, m2: int, m3: int) -> HashFamily:
    return HashFamily(seed=seed, domain_size=domain_size, m1=m1, range_h=m2, range_g=m3)


class SketchParams:
    """
    Dimensions, privacy budget, and public hash seed governing one family of Hamming sketches.
    Immutable. Two sketches can only be compared if they share seed and dimensions.
    """

    __slots__ = ('_m1', '_m2', '_m3', '_eps', '_flip_prob', '_k', '_n', '_seed')

    def __init__(self, m1: int, m2: int, m3: int, eps: float, k: int, n: int, seed: bytes):
        if m1 < 1 or m2 < 1 or m3 < 1:
            raise SketchParamsError(f"Sketch dimensions must be at least 1, got {m1} x {m2} x {m3}")
        if n < 1 or k < 1:
            raise SketchParamsError(f"k and n must be at least 1, got k={k}, n={n}")
        self._m1 = int(m1)
        self._m2 = int(m2)
        self._m3 = int(m3)
        self._eps = float(eps)
        self._flip_prob = flip_prob_for(eps, m1)
        self._k = int(k)
        self._n = int(n)
        self._seed = bytes(seed)

    m1 = property(lambda self: self._m1)
    m2 = property(lambda self: self._m2)
    m3 = property(lambda self: self._m3)
    eps = property(lambda self: self._eps)
    flip_prob = property(lambda self: self._flip_prob)
    k = property(lambda self: self._k)
    n = property(lambda self: self._n)
    seed = property(lambda self: self._seed)

    @property
    def shape(self) -> typing.Tuple[int, int, int]:
        return self._m1, self._m2, self._m3

    @property
    def volume(self) -> int:
        return self._m1 * self._m2 * self._m3

    @property
    def packed_shape(self) -> typing.Tuple[int, int, int]:
        return self._m1, self._m2, (self._m3 + 7) // 8

    def hash_family(self) -> HashFamily:
        return get_hash_family(self._seed, 2 * self._n, self._m1, self._m2, self._m3)

    def compatible_with(self, other: 'SketchParams') -> bool:
        """
        Sketches are comparable when they come from the same hash functions into the same tensor shape
        """
        return self._seed == other._seed and self.shape == other.shape

    def with_eps(self, eps: float) -> 'SketchParams':
        return SketchParams(self._m1, self._m2, self._m3, eps, self._k, self._n, self._seed)

    def __eq__(self, other):
        return (isinstance(other, SketchParams) and self.shape == other.shape and self._eps == other._eps and
                self._k == other._k and self._n == other._n and self._seed == other._seed)

    def __hash__(self):
        return hash((self.shape, self._eps, self._k, self._n, self._seed))

    def __repr__(self):
        return (f"SketchParams(m1={self._m1}, m2={self._m2}, m3={self._m3}, eps={self._eps}, "
                f"flip_prob={self._flip_prob:.6g}, k={self._k}, n={self._n})")


def default_params(k: int, eps: float, n: int, seed: bytes) -> SketchParams:
    """
    Dimensions for the Hamming distance structure with cap k:
    M1 = 10 L, M2 = 2k, M3 = 400 L^2, with L = max(ceil(log2 k), 1)
    :param k: The distance cap
    :param eps: The privacy budget, positive or infinite
    :param n: The string length
    :param seed: The public hash seed
    :return:
    """
    if k < 1 or n < 1:
        raise SketchParamsError(f"k and n must be at least 1, got k={k}, n={n}")
    if k > n:
        raise KExceedsNError(k, n)
    if not eps > 0:
        raise SketchParamsError(f"Privacy budget must be positive or infinite, got {eps}")
    log_k = max(ceil_log2(k), 1)
    return SketchParams(m1=10 * log_k, m2=2 * k, m3=400 * log_k * log_k, eps=eps, k=k, n=n, seed=seed)


class HammingSketch:
    """
    The M1 x M2 x M3 parity tensor.
    Stored packed along the innermost (c) axis, LSB first, so the packed shape is (M1, M2, ceil(M3 / 8)).
    Unused bits in the last byte of each row are always zero.
    """

    __slots__ = ('_params', '_bits')

    def __init__(self, params: SketchParams, bits: np.ndarray):
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape != params.packed_shape:
            raise SketchParamsMismatchError(
                f"Packed tensor has shape {bits.shape}, expected {params.packed_shape}")
        if bits.flags.writeable:
            bits = bits.copy()
            bits.flags.writeable = False
        self._params = params
        self._bits = bits

    @property
    def params(self) -> SketchParams:
        return self._params

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def volume(self) -> int:
        return self._params.volume

    def to_dense(self) -> np.ndarray:
        """
        Unpack to a (M1, M2, M3) array of 0/1
        """
        return np.unpackbits(self._bits, axis=-1, count=self._params.m3, bitorder='little')

    def count_set(self) -> int:
        return int(np.sum(POPCOUNT_TABLE[self._bits], dtype=np.int64))

    def cell_difference(self, other: 'HammingSketch') -> int:
        """
        The number of cells that differ between two sketches
        """
        _check_compatible(self, other)
        return int(np.sum(POPCOUNT_TABLE[np.bitwise_xor(self._bits, other._bits)], dtype=np.int64))

    def __xor__(self, other: 'HammingSketch') -> 'HammingSketch':
        _check_compatible(self, other)
        return HammingSketch(self._params, np.bitwise_xor(self._bits, other._bits))

    def __eq__(self, other):
        return (isinstance(other, HammingSketch) and self._params.compatible_with(other._params) and
                np.array_equal(self._bits, other._bits))

    def __hash__(self):
        return hash((self._params.seed, self._params.shape, self._bits.tobytes()))

    def __repr__(self):
        return f"HammingSketch({self._params!r}, set={self.count_set()})"


def parity_tensor(cells: np.ndarray, dense_shape: typing.Sequence[int]) -> np.ndarray:
    """
    Toggle the given flat cell indices in an all-zero tensor, and pack the result along the last axis.
    Cells toggled an even number of times end up zero.
    :param cells: Flat indices into the dense tensor, repeats allowed
    :param dense_shape: The unpacked shape, the last axis is packed
    :return: The packed uint8 tensor
    """
    volume = int(np.prod(dense_shape))
    dense = np.zeros(volume, dtype=np.uint8)
    cells = np.asarray(cells, dtype=np.int64).ravel()
    if cells.shape[0] > 0:
        unique_cells, counts = np.unique(cells, return_counts=True)
        dense[unique_cells[(counts & 1) == 1]] = 1
    return np.packbits(dense.reshape(tuple(dense_shape)), axis=-1, bitorder='little')


def noise_mask(dense_shape: typing.Sequence[int], flip_prob: float, rng: np.random.Generator) -> np.ndarray:
    """
    A packed mask where every cell is independently 1 with the given probability.
    Drawn as a binomial count followed by a uniform subset of that size, which has the same distribution.
    :param dense_shape: The unpacked shape, packed along the last axis
    :param flip_prob:
    :param rng: A generator from secret entropy
    :return:
    """
    volume = int(np.prod(dense_shape))
    dense = np.zeros(volume, dtype=np.uint8)
    if flip_prob > 0 and volume > 0:
        num_flips = int(rng.binomial(volume, flip_prob))
        dense[rng.choice(volume, size=num_flips, replace=False)] = 1
    return np.packbits(dense.reshape(tuple(dense_shape)), axis=-1, bitorder='little')


def encode_cells(bits: np.ndarray, params: SketchParams, label_offset: typing.Union[int, np.ndarray] = 0):
    """
    The flat (i, j, c) cell indices toggled by each position of a bit array.
    :param bits: 0/1 values, one per position
    :param params:
    :param label_offset: Subtracted from each 0-indexed position before hashing, to use local labels
    :return: An (len(bits), M1) int64 array of flat indices
    """
    family = params.hash_family()
    local = np.arange(bits.shape[0], dtype=np.int64) - label_offset
    x = 2 * local + bits.astype(np.int64)
    buckets = family.h_table()[x]
    inner = family.g_table()[x]
    reps = np.arange(params.m1, dtype=np.int64)[None, :]
    return (reps * params.m2 + buckets[:, None]) * params.m3 + inner


def encode(a: PackedBitString, params: SketchParams) -> HammingSketch:
    """
    Encode a string: for every position p and repetition i, toggle cell (i, h(x), g(x, i)) with x = 2(p-1) + a_p.
    Runs in O(n M1).
    :param a: The string, of length params.n
    :param params:
    :return: The noiseless sketch
    """
    if a.length != params.n:
        raise LengthMismatchError(a.length, params.n)
    cells = encode_cells(a.to_bits(), params)
    return HammingSketch(params, parity_tensor(cells, params.shape))


def flip(sketch: HammingSketch, rng: np.random.Generator) -> HammingSketch:
    """
    Randomised response: invert every cell independently with the params' flip probability.
    :param sketch: The noiseless sketch. Callers must drop it afterwards, only the result may be released.
    :param rng: Secret randomness, never derived from the public hash seed
    :return:
    """
    if sketch.params.flip_prob <= 0:
        return sketch
    mask = noise_mask(sketch.params.shape, sketch.params.flip_prob, rng)
    return HammingSketch(sketch.params, np.bitwise_xor(sketch.bits, mask))


def sketch_distance(sa: HammingSketch, sb: HammingSketch) -> float:
    """
    0.5 * sum over buckets j of the max over repetitions i of the mismatch count along c.
    :param sa:
    :param sb:
    :return:
    """
    _check_compatible(sa, sb)
    mismatches = np.sum(POPCOUNT_TABLE[np.bitwise_xor(sa.bits, sb.bits)], axis=2, dtype=np.int64)
    return 0.5 * float(np.sum(np.max(mismatches, axis=0)))


def _check_compatible(sa: HammingSketch, sb: HammingSketch):
    if not sa.params.compatible_with(sb.params):
        raise SketchParamsMismatchError(f"Cannot compare sketches with different parameters: "
                                        f"{sa.params!r} vs {sb.params!r}")
