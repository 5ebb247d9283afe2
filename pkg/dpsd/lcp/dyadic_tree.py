# Copyright (c) 2026, the dpsd authors
import logging
import typing
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString, LengthMismatchError, pad_to_pow2, next_pow2
from dpsd.sketch.hamming_sketch import SketchParams, HammingSketch, SketchParamsError, KExceedsNError, \
    ceil_log2, encode_cells, parity_tensor, noise_mask

# Per-node sketch shape, a single bucket of 10 cells per repetition
TREE_M2 = 1
TREE_M3 = 10


class RangeError(ValueError):
    pass


class DyadicNode(typing.NamedTuple):
    """
    A node of the dyadic tree, covering 1-indexed positions [start, end]
    """
    level: int
    index: int
    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1


def tree_params(k: int, eps: float, padded_length: int, seed: bytes) -> SketchParams:
    """
    The shared parameters of every node sketch:
    M1 = ceil(log2 k) + ceil(log2 log2 n) + 10, M2 = 1, M3 = 10, and a per-node budget eps / (L + 1),
    since every position sits in exactly one node on each of the L + 1 levels.
    :param k: The distance cap
    :param eps: The budget for the whole tree
    :param padded_length: The power-of-two padded length, 2^L
    :param seed: The public hash seed
    :return:
    """
    levels = padded_length.bit_length()
    log_n = max(levels - 1, 1)
    m1 = ceil_log2(k) + ceil_log2(log_n) + 10
    return SketchParams(m1=m1, m2=TREE_M2, m3=TREE_M3, eps=float(eps) / levels, k=k, n=padded_length, seed=seed)


class DyadicTree:
    """
    Hamming sketches of every aligned dyadic block of a padded string.
    Level i holds 2^i nodes, node (i, j) covering [j 2^(L-i) + 1, (j + 1) 2^(L-i)].
    Each node is encoded with node-local position labels 1..length, so equal substrings in equal-length nodes
    have equal noiseless sketches wherever they sit.
    Level arrays have shape (2^i, M1, 1, ceil(M3 / 8)), packed like a HammingSketch.
    """

    def __init__(self, params: SketchParams, true_length: int, levels: typing.Sequence[np.ndarray]):
        padded_length = params.n
        if padded_length & (padded_length - 1) != 0:
            raise SketchParamsError(f"Tree length {padded_length} is not a power of two")
        if not 1 <= true_length <= padded_length or next_pow2(true_length) != padded_length:
            raise SketchParamsError(f"True length {true_length} does not pad to {padded_length}")
        if len(levels) != padded_length.bit_length():
            raise SketchParamsError(f"Expected {padded_length.bit_length()} levels, got {len(levels)}")
        frozen = []
        for level_idx, level in enumerate(levels):
            level = np.asarray(level, dtype=np.uint8)
            expected_shape = (1 << level_idx,) + params.packed_shape
            if level.shape != expected_shape:
                raise SketchParamsError(f"Level {level_idx} has shape {level.shape}, expected {expected_shape}")
            if level.flags.writeable:
                level = level.copy()
                level.flags.writeable = False
            frozen.append(level)
        self._params = params
        self._true_length = int(true_length)
        self._levels = tuple(frozen)

    @property
    def params(self) -> SketchParams:
        return self._params

    @property
    def k(self) -> int:
        return self._params.k

    @property
    def true_length(self) -> int:
        return self._true_length

    @property
    def padded_length(self) -> int:
        return self._params.n

    @property
    def num_levels(self) -> int:
        return len(self._levels)

    @property
    def node_count(self) -> int:
        return 2 * self.padded_length - 1

    @property
    def eps_node(self) -> float:
        return self._params.eps

    @property
    def eps(self) -> float:
        return self._params.eps * self.num_levels

    @property
    def flip_prob(self) -> float:
        return self._params.flip_prob

    @property
    def levels(self) -> typing.Tuple[np.ndarray, ...]:
        return self._levels

    def node(self, level: int, index: int) -> DyadicNode:
        if not 0 <= level < self.num_levels or not 0 <= index < (1 << level):
            raise RangeError(f"No node ({level}, {index}) in a tree with {self.num_levels} levels")
        length = self.padded_length >> level
        return DyadicNode(level=level, index=index, start=index * length + 1, end=(index + 1) * length)

    def node_sketch(self, level: int, index: int) -> HammingSketch:
        self.node(level, index)
        return HammingSketch(self._params, self._levels[level][index])

    def iter_nodes(self) -> typing.Iterator[DyadicNode]:
        """
        All nodes in level-major, left-to-right order
        """
        for level in range(self.num_levels):
            for index in range(1 << level):
                yield self.node(level, index)

    def nodes_containing(self, position: int) -> typing.List[DyadicNode]:
        """
        Every node whose block covers a 1-indexed position, one per level
        """
        if not 1 <= position <= self.padded_length:
            raise RangeError(f"Position {position} is outside [1, {self.padded_length}]")
        return [
            self.node(level, (position - 1) // (self.padded_length >> level))
            for level in range(self.num_levels)
        ]

    def __eq__(self, other):
        return (isinstance(other, DyadicTree) and self._params == other._params and
                self._true_length == other._true_length and
                all(np.array_equal(mine, theirs) for mine, theirs in zip(self._levels, other._levels)))

    def __hash__(self):
        return hash((self._params, self._true_length))


def encode_levels(bits: np.ndarray, params: SketchParams) -> typing.List[np.ndarray]:
    """
    Noiseless sketches of every node, level by level.
    Each level toggles N M1 cells, so the whole tree costs O(N log N M1).
    :param bits: The padded string, one 0/1 value per position
    :param params: Tree parameters
    :return: The packed level arrays
    """
    padded_length = bits.shape[0]
    positions = np.arange(padded_length, dtype=np.int64)
    node_volume = params.volume
    levels = []
    for level in range(padded_length.bit_length()):
        node_length = padded_length >> level
        node_index = positions // node_length
        cells = encode_cells(bits, params, label_offset=node_index * node_length)
        cells = cells + (node_index * node_volume)[:, None]
        levels.append(parity_tensor(cells, (1 << level,) + params.shape))
    return levels


def build_tree(a: PackedBitString, k: int, eps: float, seed: bytes, rng: np.random.Generator) -> DyadicTree:
    """
    Build the released tree for a string: pad, encode every node, and flip every node cell
    with the per-node probability. All nodes share the public seed, the noise is independent per cell.
    :param a: The private string
    :param k: The distance cap, in [1, n]
    :param eps: The privacy budget for the whole tree
    :param seed: The public hash seed
    :param rng: Secret noise source
    :return:
    """
    if k < 1:
        raise SketchParamsError(f"k must be at least 1, got {k}")
    if k > a.length:
        raise KExceedsNError(k, a.length)
    if not eps > 0:
        raise SketchParamsError(f"Privacy budget must be positive or infinite, got {eps}")
    padded = pad_to_pow2(a)
    params = tree_params(k, eps, padded.length, seed)
    levels = encode_levels(padded.to_bits(), params)
    if params.flip_prob > 0:
        levels = [
            np.bitwise_xor(level, noise_mask((level.shape[0],) + params.shape, params.flip_prob, rng))
            for level in levels
        ]
    logging.getLogger(__name__).debug(
        f"Built dyadic tree over {a.length} bits ({len(levels)} levels), node budget {params.eps}")
    return DyadicTree(params, a.length, levels)


def canonical_decompose(tree: DyadicTree, p_l: int, p_r: int) -> typing.List[DyadicNode]:
    """
    Split [p_l, p_r] into maximal tree nodes, left to right.
    :param tree:
    :param p_l: 1-indexed start
    :param p_r: 1-indexed inclusive end
    :return: At most 2 (L + 1) disjoint nodes exactly tiling the range
    """
    return decompose_range(tree.padded_length, p_l, p_r)


def decompose_range(padded_length: int, p_l: int, p_r: int) -> typing.List[DyadicNode]:
    if not 1 <= p_l <= p_r <= padded_length:
        raise RangeError(f"Range [{p_l}, {p_r}] is not a valid range within [1, {padded_length}]")
    top_level = padded_length.bit_length() - 1
    nodes = []
    start = p_l - 1     # 0-indexed
    end = p_r           # exclusive
    while start < end:
        # The largest aligned block starting here that still fits
        size = start & -start if start > 0 else padded_length
        while size > end - start:
            size >>= 1
        level = top_level - (size.bit_length() - 1)
        nodes.append(DyadicNode(level=level, index=start // size, start=start + 1, end=start + size))
        start += size
    return nodes


def interval_sketch_tree(tree: DyadicTree, p_l: int, p_r: int) -> HammingSketch:
    """
    The XOR of the sketches of the canonical nodes of [p_l, p_r]
    :param tree:
    :param p_l:
    :param p_r:
    :return:
    """
    return xor_nodes(tree, canonical_decompose(tree, p_l, p_r))


def xor_nodes(tree: DyadicTree, nodes: typing.Sequence[DyadicNode]) -> HammingSketch:
    return HammingSketch(tree.params, xor_stack(node_stack(tree, nodes), tree.params))


def node_stack(tree: DyadicTree, nodes: typing.Sequence[DyadicNode]) -> np.ndarray:
    """
    The packed sketches of some nodes, stacked along a new first axis in the given order
    :param tree:
    :param nodes:
    :return: A (len(nodes), M1, 1, ceil(M3 / 8)) array
    """
    if len(nodes) <= 0:
        return np.zeros((0,) + tree.params.packed_shape, dtype=np.uint8)
    return np.stack([tree.levels[node.level][node.index] for node in nodes])


def xor_stack(stack: np.ndarray, params: SketchParams) -> np.ndarray:
    if stack.shape[0] <= 0:
        return np.zeros(params.packed_shape, dtype=np.uint8)
    return np.bitwise_xor.reduce(stack, axis=0)


class QuerySide:
    """
    The client's side of an LCP query: the padded query string, noiseless parameters matching the database tree,
    and for the tree-aligned backend a noiseless tree of the query.
    Query data is never flipped.
    """

    def __init__(self, b: PackedBitString, params: SketchParams, tree: typing.Optional[DyadicTree] = None):
        self._true_length = b.length
        self._padded = pad_to_pow2(b)
        self._bits = self._padded.to_bits()
        self._bits.flags.writeable = False
        self._params = params
        self._tree = tree

    @property
    def true_length(self) -> int:
        return self._true_length

    @property
    def padded(self) -> PackedBitString:
        return self._padded

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def params(self) -> SketchParams:
        return self._params

    @property
    def tree(self) -> typing.Optional[DyadicTree]:
        return self._tree


def query_init(b: PackedBitString, k: int, seed: bytes, build_query_tree: bool = False) -> QuerySide:
    """
    Prepare a query string. Never adds noise, the query is the client's own data.
    :param b: The query string
    :param k: The distance cap used by the database tree
    :param seed: The database tree's public seed
    :param build_query_tree: Also build the noiseless tree of b, needed for tree-aligned queries
    :return:
    """
    padded = pad_to_pow2(b)
    params = tree_params(k, np.inf, padded.length, seed)
    tree = None
    if build_query_tree:
        tree = DyadicTree(params, b.length, encode_levels(padded.to_bits(), params))
    return QuerySide(b, params, tree)


def query_init_for(tree: DyadicTree, b: PackedBitString, build_query_tree: bool = False) -> QuerySide:
    """
    query_init with the parameters taken from a database tree, checking the lengths agree
    """
    if b.length != tree.true_length:
        raise LengthMismatchError(b.length, tree.true_length)
    return query_init(b, tree.k, tree.params.seed, build_query_tree)


def interval_sketch_window(query_side: QuerySide, decomposition: typing.Sequence[DyadicNode],
                           shift: int) -> HammingSketch:
    """
    Encode the query's window against the database tree's decomposition.
    Each node [s, e] becomes b[s + shift, e + shift] encoded with local labels 1..(e - s + 1),
    and the node sketches are XORed. Equal substrings then give exactly the database's pre-noise sketch,
    whatever the shift.
    :param query_side:
    :param decomposition: Canonical nodes of the database side's range
    :param shift: Offset from database positions to query positions
    :return:
    """
    stack = window_node_stack(query_side, decomposition, shift)
    return HammingSketch(query_side.params, xor_stack(stack, query_side.params))


def window_node_stack(query_side: QuerySide, decomposition: typing.Sequence[DyadicNode],
                      shift: int) -> np.ndarray:
    """
    The query window's node sketches, one per node of the database side's decomposition and in the same order,
    each encoded with local labels. Comparing this stack node by node against the database's node_stack
    keeps equal labels in different nodes from cancelling.
    :param query_side:
    :param decomposition: Canonical nodes of the database side's range
    :param shift: Offset from database positions to query positions
    :return: A (len(decomposition), M1, 1, ceil(M3 / 8)) array
    """
    params = query_side.params
    pieces = []
    offsets = []
    slots = []
    taken = 0
    for slot, node in enumerate(decomposition):
        first = node.start + shift
        last = node.end + shift
        if first < 1 or last > query_side.padded.length:
            raise RangeError(f"Shifted span [{first}, {last}] is outside the query's "
                             f"padded length {query_side.padded.length}")
        pieces.append(query_side.bits[first - 1:last])
        offsets.append(np.full(node.length, taken, dtype=np.int64))
        slots.append(np.full(node.length, slot, dtype=np.int64))
        taken += node.length
    if taken <= 0:
        return np.zeros((0,) + params.packed_shape, dtype=np.uint8)
    cells = encode_cells(np.concatenate(pieces), params, label_offset=np.concatenate(offsets))
    cells = cells + (np.concatenate(slots) * params.volume)[:, None]
    return parity_tensor(cells, (len(decomposition),) + params.shape)
