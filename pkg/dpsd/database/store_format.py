# Copyright (c) 2026, the dpsd authors
import struct
import logging
import typing
from os import PathLike
from pathlib import PurePath
import numpy as np
from dpsd.sketch.hamming_sketch import SketchParams, HammingSketch, default_params
from dpsd.sketch.dp_hamming import DpHammingStructure
from dpsd.lcp.dyadic_tree import DyadicTree, tree_params
from dpsd.bitstring.packed_bit_string import next_pow2
from dpsd.database.sketch_store import SketchStore, SketchMode

MAGIC = b'DPSD'
FORMAT_VERSION = 1
SEED_BYTES = 32

# magic, version, mode, m, n, k, eps per copy, copies
_HEADER = struct.Struct('<4sHBIIIdH')
_BLOCK_HEADER_DTYPE = np.dtype('<u4')
_BLOCK_HEADER_BYTES = 3 * _BLOCK_HEADER_DTYPE.itemsize


class StoreFormatError(ValueError):
    pass


class BadMagicError(StoreFormatError):
    def __init__(self, magic: bytes):
        super(BadMagicError, self).__init__(f"Not a sketch store, magic bytes were {magic!r}")


class VersionMismatchError(StoreFormatError):
    def __init__(self, version: int):
        super(VersionMismatchError, self).__init__(
            f"Store format version {version} is not supported, expected {FORMAT_VERSION}")
        self.version = version


class TruncatedStoreError(StoreFormatError):
    def __init__(self, needed: int, available: int):
        super(TruncatedStoreError, self).__init__(
            f"Store is truncated, needed {needed} bytes but only {available} remain")


class VolumeMismatchError(StoreFormatError):
    def __init__(self, found: typing.Tuple[int, ...], expected: typing.Tuple[int, ...]):
        super(VolumeMismatchError, self).__init__(
            f"Sketch block has dimensions {found}, expected {expected}")


def _block_bytes(params: SketchParams) -> int:
    return _BLOCK_HEADER_BYTES + (params.volume + 7) // 8


def _pack_blocks(packed: np.ndarray, params: SketchParams) -> bytes:
    """
    Write a run of equally shaped sketches, each as (m1, m2, m3) then the tensor bits, c fastest, LSB first.
    :param packed: (count, M1, M2, ceil(M3 / 8)) packed sketches
    :param params:
    :return:
    """
    count = packed.shape[0]
    dense = np.unpackbits(packed, axis=-1, count=params.m3, bitorder='little').reshape(count, params.volume)
    tensor_bytes = np.packbits(dense, axis=1, bitorder='little')
    header = np.tile(np.array(params.shape, dtype=_BLOCK_HEADER_DTYPE), (count, 1)).view(np.uint8)
    return np.concatenate([header, tensor_bytes], axis=1).tobytes()


def _unpack_blocks(data: memoryview, offset: int, count: int,
                   params: SketchParams) -> typing.Tuple[np.ndarray, int]:
    block_bytes = _block_bytes(params)
    needed = count * block_bytes
    if offset + needed > len(data):
        raise TruncatedStoreError(needed, len(data) - offset)
    raw = np.frombuffer(data, dtype=np.uint8, count=needed, offset=offset).reshape(count, block_bytes)
    dims = raw[:, :_BLOCK_HEADER_BYTES].copy().view(_BLOCK_HEADER_DTYPE)
    expected = np.array(params.shape, dtype=_BLOCK_HEADER_DTYPE)
    bad = np.flatnonzero(np.any(dims != expected, axis=1))
    if len(bad) > 0:
        raise VolumeMismatchError(tuple(int(dim) for dim in dims[bad[0]]), params.shape)
    dense = np.unpackbits(raw[:, _BLOCK_HEADER_BYTES:], axis=1, count=params.volume, bitorder='little')
    dense = dense.reshape((count,) + params.shape)
    return np.packbits(dense, axis=-1, bitorder='little'), offset + needed


def _copy_params(store_mode: SketchMode, n: int, k: int, eps: float, seed: bytes) -> SketchParams:
    if store_mode is SketchMode.HAMMING:
        return default_params(k=k, eps=eps, n=n, seed=seed)
    return tree_params(k, eps, next_pow2(n), seed)


def serialize(store: SketchStore) -> bytes:
    """
    Write a store to bytes. Layout, little-endian throughout:
    header, then copies 32-byte seeds, then per string, per copy, its sketch blocks.
    Edit mode writes one block per tree node, in level-major, left-to-right order.
    :param store:
    :return:
    """
    parts = [
        _HEADER.pack(MAGIC, FORMAT_VERSION, store.mode.value, store.m, store.n, store.k,
                     store.eps_per_copy, store.copies)
    ]
    parts.extend(store.seeds)
    for copies in store.structures:
        for structure in copies:
            if store.mode is SketchMode.HAMMING:
                parts.append(_pack_blocks(structure.noised_sketch.bits[None, ...], structure.params))
            else:
                for level in structure.levels:
                    parts.append(_pack_blocks(level, structure.params))
    return b''.join(parts)


def serialized_size(store: SketchStore) -> int:
    size = _HEADER.size + SEED_BYTES * store.copies
    for seed in store.seeds:
        params = _copy_params(store.mode, store.n, store.k, store.eps_per_copy, seed)
        blocks = 1 if store.mode is SketchMode.HAMMING else 2 * params.n - 1
        size += store.m * blocks * _block_bytes(params)
    return size


def deserialize(data: typing.Union[bytes, bytearray, memoryview]) -> SketchStore:
    """
    Read a store written by serialize, checking the magic bytes, version, and every block's dimensions.
    :param data:
    :return:
    :raises BadMagicError:
    :raises VersionMismatchError:
    :raises TruncatedStoreError:
    :raises VolumeMismatchError:
    """
    data = memoryview(data)
    if len(data) < len(MAGIC) or bytes(data[:len(MAGIC)]) != MAGIC:
        raise BadMagicError(bytes(data[:len(MAGIC)]))
    if len(data) < _HEADER.size:
        raise TruncatedStoreError(_HEADER.size, len(data))
    _, version, mode_value, m, n, k, eps, copies = _HEADER.unpack_from(data, 0)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(version)
    if copies < 1:
        raise StoreFormatError(f"Store header lists {copies} copies, at least one is needed")
    try:
        mode = SketchMode(mode_value)
    except ValueError:
        raise StoreFormatError(f"Unknown store mode {mode_value}")
    offset = _HEADER.size
    if offset + SEED_BYTES * copies > len(data):
        raise TruncatedStoreError(SEED_BYTES * copies, len(data) - offset)
    seeds = [bytes(data[offset + idx * SEED_BYTES:offset + (idx + 1) * SEED_BYTES]) for idx in range(copies)]
    offset += SEED_BYTES * copies

    try:
        copy_params = [_copy_params(mode, n, k, eps, seed) for seed in seeds]
    except ValueError as err:
        raise StoreFormatError(f"Store header is inconsistent: {err}") from err
    structures = []
    for _ in range(m):
        string_copies = []
        for params in copy_params:
            if mode is SketchMode.HAMMING:
                packed, offset = _unpack_blocks(data, offset, 1, params)
                string_copies.append(DpHammingStructure(params, HammingSketch(params, packed[0])))
            else:
                levels = []
                for level in range(params.n.bit_length()):
                    packed, offset = _unpack_blocks(data, offset, 1 << level, params)
                    levels.append(packed)
                string_copies.append(DyadicTree(params, n, levels))
        structures.append(string_copies)
    if offset != len(data):
        raise StoreFormatError(f"{len(data) - offset} unexpected bytes after the last sketch block")
    return SketchStore(mode, n, k, eps, seeds, structures)


def write_store(path: typing.Union[str, PathLike, PurePath], store: SketchStore) -> int:
    data = serialize(store)
    with open(path, 'wb') as store_file:
        store_file.write(data)
    logging.getLogger(__name__).info(f"Wrote {len(data)} bytes to {path}")
    return len(data)


def read_store(path: typing.Union[str, PathLike, PurePath]) -> SketchStore:
    with open(path, 'rb') as store_file:
        data = store_file.read()
    logging.getLogger(__name__).info(f"Read {len(data)} bytes from {path}")
    return deserialize(data)
