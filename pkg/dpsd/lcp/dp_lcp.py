# Copyright (c) 2026, the dpsd authors
import enum
import logging
import typing
import functools
import numpy as np
import scipy.stats
from dpsd.bitstring.packed_bit_string import PackedBitString, POPCOUNT_TABLE
from dpsd.sketch.hamming_sketch import HammingSketch, sketch_distance
from dpsd.lcp.dyadic_tree import DyadicTree, QuerySide, RangeError, query_init_for, canonical_decompose, \
    node_stack, window_node_stack, xor_nodes

# Chance per binary search step that flips alone push a matching prefix over the threshold
NOISE_TAIL = 1e-9


class LcpBackend(enum.Enum):
    """
    How the query side's interval sketches are produced.
    TREE_ALIGNED reads the nodes of a precomputed query tree, which only matches the database side
    when both decompositions have the same node lengths (for instance i = j).
    WINDOW_ENCODE re-encodes the query window against the database side's decomposition, and is valid at any shift.
    """
    TREE_ALIGNED = 0
    WINDOW_ENCODE = 1

    @classmethod
    def from_string(cls, name: str) -> 'LcpBackend':
        name = name.strip().upper().replace('-', '_')
        if name in cls.__members__:
            return cls[name]
        raise ValueError(f"Unknown LCP backend '{name}', expected one of {', '.join(cls.__members__)}")


class LcpQueryResult(typing.NamedTuple):
    w_tilde: int
    steps: int
    thresholded_distances: typing.Tuple[float, ...]


def sketch_hamming_distance(sa: HammingSketch, sb: HammingSketch) -> float:
    """
    Estimated Hamming distance between the substrings two interval sketches cover.
    The tree sketches use a single bucket, so this is half the largest repetition mismatch count.
    """
    return sketch_distance(sa, sb)


def decomposition_distance(stack_a: np.ndarray, stack_b: np.ndarray) -> float:
    """
    The sketch distance of two node-aligned stacks, with each repetition's mismatches summed over the nodes
    before taking the max. Equal to sketch_hamming_distance of the nodes laid end to end along the cell axis.
    :param stack_a: (t, M1, M2, bytes) packed node sketches
    :param stack_b: The same shape, node i covering the same length as stack_a's node i
    :return:
    """
    if stack_a.shape != stack_b.shape:
        raise ValueError(f"Cannot compare node stacks of shapes {stack_a.shape} and {stack_b.shape}")
    if stack_a.shape[0] <= 0:
        return 0.0
    mismatches = np.sum(POPCOUNT_TABLE[np.bitwise_xor(stack_a, stack_b)], axis=(0, 3), dtype=np.int64)
    return 0.5 * float(np.sum(np.max(mismatches, axis=0)))


@functools.lru_cache(maxsize=1024)
def flip_count_bound(cells_per_repetition: int, repetitions: int, flip_prob: float, tail: float) -> int:
    """
    The smallest c such that, with every cell flipped independently, the most flipped of the repetitions
    has more than c flips with probability at most tail
    :param cells_per_repetition: Cells a repetition spans across the compared nodes
    :param repetitions: M1
    :param flip_prob:
    :param tail:
    :return:
    """
    if flip_prob <= 0 or cells_per_repetition <= 0:
        return 0
    counts = np.arange(cells_per_repetition + 1)
    per_repetition = scipy.stats.binom.sf(counts, cells_per_repetition, flip_prob)
    # 1 - (1 - sf)^M1, written to keep precision when sf is tiny
    any_repetition = -np.expm1(repetitions * np.log1p(-per_repetition))
    return int(np.argmax(any_repetition <= tail))


def acceptance_threshold(tree: DyadicTree, node_count: int = 1, tail: float = NOISE_TAIL) -> float:
    """
    The largest distance at which a prefix is still accepted.
    At least 1.5 M1 M3 q, with q the flip probability actually applied to the tree's nodes,
    and raised to cover the flips a matching prefix sees across node_count nodes, except with probability tail.
    Over a matching prefix every mismatch is a flip, so the rejection of a true prefix is that rare.
    :param tree: The database tree
    :param node_count: Nodes in the compared decomposition
    :param tail:
    :return:
    """
    params = tree.params
    noise_bound = flip_count_bound(node_count * params.m3, params.m1, tree.flip_prob, tail)
    return max(1.5 * params.m1 * params.m3 * tree.flip_prob, 0.5 * params.m2 * noise_bound)


def step_distance(tree_a: DyadicTree, query_side: QuerySide, i: int, j: int, length: int,
                  backend: LcpBackend) -> typing.Tuple[float, int]:
    """
    Distance between a[i, i + length - 1] from the released tree and b[j, j + length - 1],
    compared node by node over a's canonical decomposition.
    :return: The distance and how many nodes were compared
    """
    nodes_a = canonical_decompose(tree_a, i, i + length - 1)
    stack_a = node_stack(tree_a, nodes_a)
    if backend is LcpBackend.WINDOW_ENCODE:
        return decomposition_distance(stack_a, window_node_stack(query_side, nodes_a, j - i)), len(nodes_a)
    nodes_b = canonical_decompose(query_side.tree, j, j + length - 1)
    if [node.length for node in nodes_a] == [node.length for node in nodes_b]:
        return decomposition_distance(stack_a, node_stack(query_side.tree, nodes_b)), len(nodes_a)
    # Misaligned decompositions have no node pairing, so fall back to the XOR of each side's nodes
    return sketch_hamming_distance(xor_nodes(tree_a, nodes_a), xor_nodes(query_side.tree, nodes_b)), len(nodes_a)


def lcp_query(tree_a: DyadicTree, query_side: QuerySide, i: int, j: int,
              backend: LcpBackend = LcpBackend.WINDOW_ENCODE, tail: float = NOISE_TAIL) -> LcpQueryResult:
    """
    Estimate the longest common prefix of a[i:] and b[j:] by binary search on the prefix length.
    Each step compares the nodes covering a[i, i + mid - 1] in the released tree
    against b[j, j + mid - 1] sketched over the same nodes, accepting the prefix when the distance is under the
    threshold for that many nodes. A matching prefix is only rejected with probability tail per step,
    so the estimate is at least the true LCP w.h.p.
    :param tree_a: The released tree of the database string
    :param query_side: The query string, from query_init
    :param i: 1-indexed position in a
    :param j: 1-indexed position in b
    :param backend: How to sketch the query's window
    :param tail: Per step chance of rejecting a matching prefix
    :return:
    """
    n = tree_a.true_length
    if query_side.true_length != n:
        raise RangeError(f"Query length {query_side.true_length} does not match the tree's length {n}")
    if not 1 <= i <= n or not 1 <= j <= n:
        raise RangeError(f"LCP positions ({i}, {j}) are outside [1, {n}]")
    if backend is LcpBackend.TREE_ALIGNED and query_side.tree is None:
        raise ValueError("Tree-aligned LCP queries need a query side built with its own tree")

    low = 0
    high = min(n - i + 1, n - j + 1)
    distances = []
    while low != high:
        mid = (low + high + 1) // 2
        distance, node_count = step_distance(tree_a, query_side, i, j, mid, backend)
        distances.append(distance)
        if distance <= acceptance_threshold(tree_a, node_count, tail):
            low = mid
        else:
            high = mid - 1
    return LcpQueryResult(w_tilde=low, steps=len(distances), thresholded_distances=tuple(distances))


class DpLcp:
    """
    A handle answering lcp(i, j) queries between a released tree and one query string.
    Counts the queries it answers, which the edit distance search reports.
    """

    def __init__(self, tree_a: DyadicTree, b: PackedBitString, backend: LcpBackend = LcpBackend.WINDOW_ENCODE,
                 tail: float = NOISE_TAIL):
        self._tree = tree_a
        self._backend = backend
        self._tail = tail
        self._query_side = query_init_for(tree_a, b, build_query_tree=backend is LcpBackend.TREE_ALIGNED)
        self.queries = 0

    @property
    def length(self) -> int:
        return self._tree.true_length

    @property
    def tree(self) -> DyadicTree:
        return self._tree

    @property
    def query_side(self) -> QuerySide:
        return self._query_side

    @property
    def backend(self) -> LcpBackend:
        return self._backend

    def query(self, i: int, j: int) -> LcpQueryResult:
        self.queries += 1
        result = lcp_query(self._tree, self._query_side, i, j, self._backend, self._tail)
        logging.getLogger(__name__).debug(f"LCP({i}, {j}) ~ {result.w_tilde} after {result.steps} steps")
        return result

    def lcp(self, i: int, j: int) -> int:
        return self.query(i, j).w_tilde
