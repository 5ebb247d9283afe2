# Copyright (c) 2026, the dpsd authors
import logging
import typing
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString, LengthMismatchError
from dpsd.lcp.dyadic_tree import DyadicTree
from dpsd.lcp.dp_lcp import DpLcp, LcpBackend
from dpsd.edit.too_far import TOO_FAR, Distance

SENTINEL_UNREACHED = -1


class LcpHandle(typing.Protocol):
    """
    Anything answering lcp(i, j) over two strings of a fixed length, and counting its queries
    """
    queries: int

    @property
    def length(self) -> int:
        ...

    def lcp(self, i: int, j: int) -> int:
        ...


class LVState:
    """
    The furthest-reach table of the banded Landau-Vishkin search.
    F(r, d) is the number of characters of a consumed on diagonal d = (b position) - (a position)
    using r edits, after extending along the diagonal.
    Stored as a (k + 1) x (2k + 1) array with column d + k, SENTINEL_UNREACHED where not reached.
    """

    def __init__(self, n: int, k: int):
        self.n = int(n)
        self.k = int(k)
        self.table = np.full((k + 1, 2 * k + 1), SENTINEL_UNREACHED, dtype=np.int64)
        self.r_found = None
        self.lcp_queries = 0

    def get(self, r: int, d: int) -> int:
        if abs(d) > self.k:
            return SENTINEL_UNREACHED
        return int(self.table[r, d + self.k])

    def set(self, r: int, d: int, value: int) -> None:
        self.table[r, d + self.k] = value

    @property
    def result(self) -> Distance:
        return TOO_FAR if self.r_found is None else self.r_found


def extend(lcp_handle: LcpHandle, f_value: int, d: int) -> int:
    """
    Slide along diagonal d from a reach of f_value by the common prefix of a[f_value + 1:] and b[f_value + d + 1:].
    :param lcp_handle:
    :param f_value: Characters of a already consumed, or SENTINEL_UNREACHED
    :param d: The diagonal
    :return: The new reach. Unreached stays unreached, and either string's end stops the slide.
    """
    if f_value < 0:
        return SENTINEL_UNREACHED
    n = lcp_handle.length
    next_a = f_value + 1
    next_b = f_value + d + 1
    if next_a > n or next_b > n or next_b < 1:
        return f_value
    return f_value + lcp_handle.lcp(next_a, next_b)


def run_landau_vishkin(lcp_handle: LcpHandle, k: int) -> LVState:
    """
    Fill the furthest-reach table row by row until diagonal 0 reaches the end of a.
    Each row costs at most 2k + 1 LCP queries.
    :param lcp_handle: Exact or private LCP queries between a and b
    :param k: The edit distance cap
    :return: The final state, with r_found set if the distance is at most k
    """
    n = lcp_handle.length
    state = LVState(n, k)
    queries_before = lcp_handle.queries
    state.set(0, 0, extend(lcp_handle, 0, 0))
    for r in range(k + 1):
        if state.get(r, 0) >= n:
            state.r_found = r
            break
        if r >= k:
            break
        for d in range(-min(r + 1, k), min(r + 1, k) + 1):
            candidates = []
            same = state.get(r, d)
            if same >= 0:
                candidates.append(same + 1)     # substitution
            if d - 1 >= -k and state.get(r, d - 1) >= 0:
                candidates.append(state.get(r, d - 1))   # insertion into a
            if d + 1 <= k and state.get(r, d + 1) >= 0:
                candidates.append(state.get(r, d + 1) + 1)  # deletion from a
            if len(candidates) <= 0:
                continue
            reach = min(max(candidates), n, n - d)
            state.set(r + 1, d, extend(lcp_handle, reach, d))
    state.lcp_queries = lcp_handle.queries - queries_before
    return state


def edit_query_state(tree_a: DyadicTree, b: PackedBitString, k: typing.Optional[int] = None,
                     backend: LcpBackend = LcpBackend.WINDOW_ENCODE) -> LVState:
    """
    Run the search against a released tree, returning the whole table for inspection
    """
    if b.length != tree_a.true_length:
        raise LengthMismatchError(b.length, tree_a.true_length)
    if k is None:
        k = tree_a.k
    handle = DpLcp(tree_a, b, backend)
    state = run_landau_vishkin(handle, k)
    logging.getLogger(__name__).debug(f"Edit query finished at {state.result} using {state.lcp_queries} LCP queries")
    return state


def edit_query(tree_a: DyadicTree, b: PackedBitString, k: typing.Optional[int] = None,
               backend: LcpBackend = LcpBackend.WINDOW_ENCODE) -> Distance:
    """
    Estimate the edit distance between the tree's string and b.
    Noisy LCP answers only over-extend, so the estimate tends to undershoot the true distance, never overshoot.
    :param tree_a: The released tree of the database string
    :param b: The query, the same length as the database string
    :param k: The cap, defaults to the tree's k
    :param backend: How the LCP queries sketch the query side
    :return: The estimated distance, or TOO_FAR if no r <= k reaches the end
    """
    return edit_query_state(tree_a, b, k, backend).result
