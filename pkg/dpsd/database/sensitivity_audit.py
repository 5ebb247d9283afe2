# Copyright (c) 2026, the dpsd authors
import math
import logging
import typing
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString, next_pow2
from dpsd.sketch.hamming_sketch import SketchParams, HammingSketch, default_params, encode
from dpsd.lcp.dyadic_tree import tree_params, encode_levels
from dpsd.database.sketch_store import SketchMode
from dpsd.util.seeding import new_public_seed

HammingEncoder = typing.Callable[[PackedBitString, SketchParams], HammingSketch]
TreeEncoder = typing.Callable[[np.ndarray, SketchParams], typing.List[np.ndarray]]


class AuditReport(typing.NamedTuple):
    mode: SketchMode
    trials: int
    max_cells: int
    cell_bound: int
    violations: int
    flip_prob: float
    eps: float
    implied_eps: typing.Optional[float]

    @property
    def passed(self) -> bool:
        return self.violations == 0 and (self.implied_eps is None or self.implied_eps <= self.eps * (1 + 1e-9))

    def as_dict(self) -> dict:
        return {
            'mode': self.mode.name.lower(),
            'trials': self.trials,
            'max_cells': self.max_cells,
            'cell_bound': self.cell_bound,
            'violations': self.violations,
            'flip_prob': self.flip_prob,
            'eps': self.eps if math.isfinite(self.eps) else str(self.eps),
            'implied_eps': self.implied_eps,
            'passed': self.passed
        }


def implied_eps(max_cells: int, flip_prob: float) -> typing.Optional[float]:
    """
    The privacy loss of flipping cells with a given probability when neighbours differ in max_cells cells,
    max_cells ln((1 - q) / q). None without noise, where there is no finite bound.
    """
    if flip_prob <= 0:
        return None
    return max_cells * math.log((1 - flip_prob) / flip_prob)


def random_neighbours(n: int, rng: np.random.Generator) -> typing.Tuple[np.ndarray, np.ndarray]:
    """
    A random string and a copy differing in one random position
    """
    bits = rng.integers(0, 2, size=n, dtype=np.uint8)
    neighbour = bits.copy()
    neighbour[int(rng.integers(0, n))] ^= 1
    return bits, neighbour


def audit_hamming(n: int, k: int, eps: float, trials: int, rng: np.random.Generator,
                  seed: typing.Optional[bytes] = None, encoder: HammingEncoder = encode) -> AuditReport:
    """
    Measure how many sketch cells a single-position change alters, against the bound 2 M1.
    :param n: String length
    :param k: Distance cap
    :param eps: The budget the flip probability is set from
    :param trials: Neighbour pairs to try
    :param rng: Source of the random pairs
    :param seed: Public hash seed, fresh if not given
    :param encoder: The encoder under audit
    :return:
    """
    if seed is None:
        seed = new_public_seed()
    params = default_params(k=k, eps=eps, n=n, seed=seed)
    bound = 2 * params.m1
    max_cells = 0
    violations = 0
    for _ in range(trials):
        bits, neighbour = random_neighbours(n, rng)
        cells = encoder(PackedBitString.from_bits(bits), params).cell_difference(
            encoder(PackedBitString.from_bits(neighbour), params))
        max_cells = max(max_cells, cells)
        if cells > bound:
            violations += 1
            logging.getLogger(__name__).error(f"Neighbouring strings differ in {cells} cells, bound is {bound}")
    return AuditReport(mode=SketchMode.HAMMING, trials=trials, max_cells=max_cells, cell_bound=bound,
                       violations=violations, flip_prob=params.flip_prob, eps=params.eps,
                       implied_eps=implied_eps(max_cells, params.flip_prob))


def audit_tree(n: int, k: int, eps: float, trials: int, rng: np.random.Generator,
               seed: typing.Optional[bytes] = None, encoder: TreeEncoder = encode_levels) -> AuditReport:
    """
    Measure how many cells, summed over every node of the dyadic tree, a single-position change alters.
    The bound is 2 M1 (L + 1), one node per level, and the node budget makes the whole tree eps-DP.
    """
    if seed is None:
        seed = new_public_seed()
    padded_length = next_pow2(n)
    params = tree_params(k, eps, padded_length, seed)
    num_levels = padded_length.bit_length()
    bound = 2 * params.m1 * num_levels
    max_cells = 0
    violations = 0
    for _ in range(trials):
        bits, neighbour = random_neighbours(n, rng)
        padded = np.zeros((2, padded_length), dtype=np.uint8)
        padded[0, :n] = bits
        padded[1, :n] = neighbour
        levels_a = encoder(padded[0], params)
        levels_b = encoder(padded[1], params)
        cells = sum(
            int(np.sum(np.unpackbits(np.bitwise_xor(level_a, level_b))))
            for level_a, level_b in zip(levels_a, levels_b)
        )
        max_cells = max(max_cells, cells)
        if cells > bound:
            violations += 1
            logging.getLogger(__name__).error(f"Neighbouring trees differ in {cells} cells, bound is {bound}")
    tree_implied = implied_eps(max_cells, params.flip_prob)
    return AuditReport(mode=SketchMode.EDIT, trials=trials, max_cells=max_cells, cell_bound=bound,
                       violations=violations, flip_prob=params.flip_prob, eps=params.eps * num_levels,
                       implied_eps=tree_implied)
