# Copyright (c) 2026, the dpsd authors
import enum
import math
import time
import logging
import typing
import multiprocessing
import numpy as np
from tqdm import tqdm
from dpsd.bitstring.packed_bit_string import PackedBitString, LengthMismatchError
from dpsd.sketch.hamming_sketch import SketchParamsError, KExceedsNError, encode, sketch_distance
from dpsd.sketch.dp_hamming import DpHammingStructure
import dpsd.sketch.dp_hamming as dp_hamming
from dpsd.lcp.dyadic_tree import DyadicTree, build_tree
from dpsd.lcp.dp_lcp import LcpBackend
from dpsd.edit.landau_vishkin import edit_query
from dpsd.edit.too_far import Distance, distance_sort_key
from dpsd.util.seeding import PUBLIC_SEED_TAG, NOISE_TAG, new_master_seed, derive_seed, derive_rng

COPY_CONSTANT = 18
MAX_COPIES = (1 << 16) - 1


class SketchMode(enum.Enum):
    HAMMING = 0
    EDIT = 1

    @classmethod
    def from_string(cls, name: str) -> 'SketchMode':
        name = name.strip().upper()
        if name in cls.__members__:
            return cls[name]
        raise ValueError(f"Unknown sketch mode '{name}', expected one of {', '.join(cls.__members__)}")


Structure = typing.Union[DpHammingStructure, DyadicTree]


class SketchStore:
    """
    Released structures for m strings, each built c times with independent public seeds and noise.
    structures[s][c] is copy c of string s.
    Releasing all copies composes sequentially, so the store's privacy cost is copies * eps_per_copy.
    """

    def __init__(self, mode: SketchMode, n: int, k: int, eps_per_copy: float, seeds: typing.Sequence[bytes],
                 structures: typing.Sequence[typing.Sequence[Structure]]):
        if len(seeds) < 1:
            raise SketchParamsError("A store needs at least one copy")
        for s_idx, copies in enumerate(structures):
            if len(copies) != len(seeds):
                raise SketchParamsError(f"String {s_idx} has {len(copies)} copies, expected {len(seeds)}")
        self._mode = mode
        self._n = int(n)
        self._k = int(k)
        self._eps_per_copy = float(eps_per_copy)
        self._seeds = tuple(bytes(seed) for seed in seeds)
        self._structures = tuple(tuple(copies) for copies in structures)

    mode = property(lambda self: self._mode)
    n = property(lambda self: self._n)
    k = property(lambda self: self._k)
    eps_per_copy = property(lambda self: self._eps_per_copy)
    seeds = property(lambda self: self._seeds)
    structures = property(lambda self: self._structures)

    @property
    def m(self) -> int:
        return len(self._structures)

    @property
    def copies(self) -> int:
        return len(self._seeds)

    @property
    def total_eps(self) -> float:
        return self.copies * self._eps_per_copy

    def size_bytes(self) -> int:
        from dpsd.database.store_format import serialized_size
        return serialized_size(self)

    def __eq__(self, other):
        if not isinstance(other, SketchStore):
            return NotImplemented
        return (self._mode == other._mode and self._n == other._n and self._k == other._k and
                self._eps_per_copy == other._eps_per_copy and self._seeds == other._seeds and
                self._structures == other._structures)

    def __hash__(self):
        return hash((self._mode, self._n, self._k, self._eps_per_copy, self._seeds))

    def __repr__(self):
        return (f"SketchStore(mode={self._mode.name.lower()}, m={self.m}, n={self._n}, k={self._k}, "
                f"eps_per_copy={self._eps_per_copy}, copies={self.copies}, total_eps={self.total_eps})")


def copies_for(m: int, beta: float) -> int:
    """
    Copies needed so every one of m medians is correct with probability at least 1 - beta:
    max(1, ceil(18 ln(m / beta)))
    """
    if not 0 < beta < 1:
        raise ValueError(f"Failure probability beta must be in (0, 1), got {beta}")
    return max(1, int(math.ceil(COPY_CONSTANT * math.log(max(m, 1) / beta))))


def _build_cell(mode: SketchMode, bits: np.ndarray, k: int, eps: float, seed: bytes,
                master_seed: int, string_idx: int, copy_idx: int) -> Structure:
    rng = derive_rng(master_seed, NOISE_TAG, string_idx, copy_idx)
    a = PackedBitString.from_bits(bits)
    if mode is SketchMode.HAMMING:
        return dp_hamming.init(a, k, eps, seed, rng)
    return build_tree(a, k, eps, seed, rng)


def _build_cell_star(args) -> Structure:
    return _build_cell(*args)


def build(strings: typing.Sequence[PackedBitString], k: int, eps_per_copy: float, beta: float,
          mode: SketchMode = SketchMode.HAMMING, master_seed: typing.Optional[int] = None,
          copies: typing.Optional[int] = None, threads: int = 1, n: typing.Optional[int] = None,
          progress: bool = False) -> SketchStore:
    """
    Build every copy of every string's structure.
    Public seeds and noise streams are derived from the master seed, so a fixed master seed reproduces the store.
    :param strings: The m private strings, all the same length
    :param k: The distance cap
    :param eps_per_copy: The budget spent by each copy
    :param beta: The allowed probability that any median is wrong
    :param mode: Hamming structures or dyadic trees for edit distance
    :param master_seed: Secret seed, drawn from OS entropy if not given
    :param copies: Override the number of copies chosen from beta
    :param threads: Worker processes for the m x c grid
    :param n: The string length, needed only when there are no strings
    :param progress: Show a progress bar
    :return:
    """
    if len(strings) > 0:
        n = strings[0].length
        for a in strings:
            if a.length != n:
                raise LengthMismatchError(a.length, n)
    elif n is None:
        raise ValueError("Cannot build an empty store without a string length")
    if k < 1:
        raise SketchParamsError(f"k must be at least 1, got {k}")
    if k > n:
        raise KExceedsNError(k, n)
    if not eps_per_copy > 0:
        raise SketchParamsError(f"Privacy budget must be positive or infinite, got {eps_per_copy}")
    if copies is None:
        copies = copies_for(len(strings), beta)
    if not 1 <= copies <= MAX_COPIES:
        raise ValueError(f"Copy count must be in [1, {MAX_COPIES}], got {copies}")
    if master_seed is None:
        master_seed = new_master_seed()

    seeds = [derive_seed(master_seed, PUBLIC_SEED_TAG, copy_idx) for copy_idx in range(copies)]
    # Copy-major, so consecutive cells share a public seed and its hash family
    tasks = [
        (mode, a.to_bits(), k, eps_per_copy, seeds[copy_idx], master_seed, string_idx, copy_idx)
        for copy_idx in range(copies)
        for string_idx, a in enumerate(strings)
    ]
    start = time.perf_counter()
    if threads > 1 and len(tasks) > 1:
        with multiprocessing.Pool(threads) as pool:
            cells = list(tqdm(pool.imap(_build_cell_star, tasks, chunksize=max(1, len(tasks) // (4 * threads))),
                              total=len(tasks), disable=not progress))
    else:
        cells = [_build_cell_star(task) for task in tqdm(tasks, disable=not progress)]
    logging.getLogger(__name__).info(
        f"Built {len(strings)} x {copies} grid of {mode.name.lower()} structures "
        f"in {time.perf_counter() - start:.3f}s")
    structures = [[cells[copy_idx * len(strings) + string_idx] for copy_idx in range(copies)]
                  for string_idx in range(len(strings))]
    return SketchStore(mode, n, k, eps_per_copy, seeds, structures)


def lower_median(values: typing.Sequence[Distance]) -> Distance:
    """
    The median, taking the lower middle value for even counts. TOO_FAR sorts above every number.
    """
    if len(values) <= 0:
        raise ValueError("Cannot take the median of nothing")
    ordered = sorted(values, key=distance_sort_key)
    return ordered[(len(ordered) - 1) // 2]


def query_copies(store: SketchStore, b: PackedBitString,
                 backend: LcpBackend = LcpBackend.WINDOW_ENCODE) -> typing.List[typing.List[Distance]]:
    """
    Every copy's estimate for every string, estimates[s][c]
    """
    if b.length != store.n:
        raise LengthMismatchError(b.length, store.n)
    estimates = [[] for _ in range(store.m)]
    if store.mode is SketchMode.HAMMING:
        for copy_idx in range(store.copies):
            query_sketch = None
            for string_idx in range(store.m):
                structure = store.structures[string_idx][copy_idx]
                if query_sketch is None:
                    # Every string's copy c shares its parameters, so one encode serves the whole column
                    query_sketch = encode(b, structure.params)
                estimates[string_idx].append(sketch_distance(structure.noised_sketch, query_sketch))
    else:
        for copy_idx in range(store.copies):
            for string_idx in range(store.m):
                tree = store.structures[string_idx][copy_idx]
                estimates[string_idx].append(edit_query(tree, b, backend=backend))
    return estimates


def query_all(store: SketchStore, b: PackedBitString,
              backend: LcpBackend = LcpBackend.WINDOW_ENCODE) -> typing.List[Distance]:
    """
    Estimate the distance from b to every string, as the median over copies.
    :param store:
    :param b: The query, the same length as the stored strings
    :param backend: LCP backend for edit mode
    :return: One estimate per string, TOO_FAR where the median copy found no distance within k
    """
    return [lower_median(copy_estimates) for copy_estimates in query_copies(store, b, backend)]
