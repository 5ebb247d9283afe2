# Copyright (c) 2026, the dpsd authors
import logging
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString, LengthMismatchError
from dpsd.sketch.hamming_sketch import SketchParams, HammingSketch, SketchParamsMismatchError, \
    default_params, encode, flip, sketch_distance


class DpHammingStructure:
    """
    The released eps-DP Hamming distance structure for one string.
    Holds only the noised sketch, the pre-flip sketch never leaves init.
    Queries are post-processing, so any number of them costs no further privacy.
    """

    __slots__ = ('_params', '_noised_sketch')

    def __init__(self, params: SketchParams, noised_sketch: HammingSketch):
        if noised_sketch.params != params:
            raise SketchParamsMismatchError(f"Sketch params {noised_sketch.params!r} do not match {params!r}")
        self._params = params
        self._noised_sketch = noised_sketch

    @property
    def params(self) -> SketchParams:
        return self._params

    @property
    def noised_sketch(self) -> HammingSketch:
        return self._noised_sketch

    @property
    def sensitivity_bound(self) -> int:
        """
        The most sketch cells a single-position change can alter
        """
        return 2 * self._params.m1

    def __eq__(self, other):
        return (isinstance(other, DpHammingStructure) and self._params == other._params and
                self._noised_sketch == other._noised_sketch)

    def __hash__(self):
        return hash(self._noised_sketch)


def init(a: PackedBitString, k: int, eps: float, seed: bytes, rng: np.random.Generator) -> DpHammingStructure:
    """
    Build the eps-DP structure for a string: encode, then flip once.
    Takes O(n log k + k log^3 k) time.
    :param a: The private string
    :param k: The distance cap, in [1, n]
    :param eps: The privacy budget
    :param seed: The 32-byte public hash seed
    :param rng: Secret noise source
    :return:
    """
    params = default_params(k=k, eps=eps, n=a.length, seed=seed)
    return init_with_params(a, params, rng)


def init_with_params(a: PackedBitString, params: SketchParams, rng: np.random.Generator) -> DpHammingStructure:
    noised = flip(encode(a, params), rng)
    logging.getLogger(__name__).debug(f"Built Hamming structure with {params!r}")
    return DpHammingStructure(params, noised)


def encode_query(structure: DpHammingStructure, b: PackedBitString) -> HammingSketch:
    """
    Encode a query string with the structure's public parameters. Query sketches are never flipped.
    :param structure:
    :param b:
    :return:
    """
    if b.length != structure.params.n:
        raise LengthMismatchError(b.length, structure.params.n)
    return encode(b, structure.params)


def query(structure: DpHammingStructure, b: PackedBitString) -> float:
    """
    Estimate the Hamming distance between the structure's string and b.
    The estimate has additive error about k / e^(eps / log k) whenever the true distance is at most k.
    :param structure:
    :param b:
    :return:
    """
    return sketch_distance(structure.noised_sketch, encode_query(structure, b))
