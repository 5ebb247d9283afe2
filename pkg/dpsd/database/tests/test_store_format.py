import os
import math
import struct
import tempfile
import unittest
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString
from dpsd.database.sketch_store import SketchMode, build, query_all
from dpsd.database.store_format import MAGIC, FORMAT_VERSION, SEED_BYTES, StoreFormatError, BadMagicError, \
    VersionMismatchError, TruncatedStoreError, VolumeMismatchError, serialize, serialized_size, deserialize, \
    write_store, read_store

_HEADER_BYTES = struct.calcsize('<4sHBIIIdH')


def make_store(mode: SketchMode, m: int = 3, n: int = 20, eps: float = 1.0, copies: int = 2):
    rng = np.random.default_rng(120)
    strings = [PackedBitString.from_bits(rng.integers(0, 2, size=n)) for _ in range(m)]
    return build(strings, k=2, eps_per_copy=eps, beta=0.5, mode=mode, master_seed=121, copies=copies, n=n)


class TestStoreFormat(unittest.TestCase):

    def test_round_trip(self):
        for mode in SketchMode:
            store = make_store(mode)
            self.assertEqual(store, deserialize(serialize(store)))

    def test_round_trip_keeps_answers(self):
        query = PackedBitString.from_bits(np.random.default_rng(122).integers(0, 2, size=20))
        for mode in SketchMode:
            store = make_store(mode)
            self.assertEqual(query_all(store, query), query_all(deserialize(serialize(store)), query))

    def test_round_trip_infinite_budget(self):
        store = make_store(SketchMode.HAMMING, eps=math.inf)
        loaded = deserialize(serialize(store))
        self.assertTrue(math.isinf(loaded.eps_per_copy))
        self.assertEqual(store, loaded)

    def test_empty_store(self):
        store = make_store(SketchMode.EDIT, m=0)
        data = serialize(store)
        self.assertEqual(_HEADER_BYTES + SEED_BYTES * 2, len(data))
        self.assertEqual(store, deserialize(data))

    def test_header(self):
        store = make_store(SketchMode.EDIT)
        data = serialize(store)
        self.assertEqual(MAGIC, data[:4])
        magic, version, mode, m, n, k, eps, copies = struct.unpack_from('<4sHBIIIdH', data, 0)
        self.assertEqual((FORMAT_VERSION, 1, 3, 20, 2, 1.0, 2), (version, mode, m, n, k, eps, copies))

    def test_size(self):
        for mode in SketchMode:
            store = make_store(mode)
            self.assertEqual(len(serialize(store)), serialized_size(store))
            self.assertEqual(serialized_size(store), store.size_bytes())

    def test_hamming_size_is_mostly_tensor_bits(self):
        store = make_store(SketchMode.HAMMING, m=4, n=32, copies=3)
        tensor_bytes = store.m * store.copies * store.structures[0][0].params.volume / 8
        self.assertLessEqual(abs(store.size_bytes() - tensor_bytes), 0.1 * tensor_bytes)

    def test_edit_size_grows_with_n(self):
        sizes = [make_store(SketchMode.EDIT, m=2, n=n, copies=1).size_bytes() for n in [64, 128, 256, 512]]
        for smaller, larger in zip(sizes, sizes[1:]):
            self.assertGreaterEqual(larger / smaller, 2 / 2.5)
            self.assertLessEqual(larger / smaller, 2 * 2.5)

    def test_bad_magic(self):
        data = bytearray(serialize(make_store(SketchMode.HAMMING)))
        data[:4] = b'NOPE'
        with self.assertRaises(BadMagicError):
            deserialize(bytes(data))
        with self.assertRaises(BadMagicError):
            deserialize(b'')

    def test_version_mismatch(self):
        data = bytearray(serialize(make_store(SketchMode.HAMMING)))
        struct.pack_into('<H', data, 4, FORMAT_VERSION + 1)
        with self.assertRaises(VersionMismatchError):
            deserialize(bytes(data))

    def test_unknown_mode(self):
        data = bytearray(serialize(make_store(SketchMode.HAMMING)))
        data[6] = 7
        with self.assertRaises(StoreFormatError):
            deserialize(bytes(data))

    def test_zero_copies(self):
        for m in [0, 2]:
            data = bytearray(serialize(make_store(SketchMode.HAMMING, m=m, copies=1))[:_HEADER_BYTES])
            struct.pack_into('<H', data, _HEADER_BYTES - 2, 0)
            with self.assertRaises(StoreFormatError):
                deserialize(bytes(data))

    def test_truncated(self):
        for mode in SketchMode:
            data = serialize(make_store(mode))
            for cut in [10, _HEADER_BYTES + 5, len(data) - 1]:
                with self.assertRaises(TruncatedStoreError):
                    deserialize(data[:cut])

    def test_trailing_bytes(self):
        data = serialize(make_store(SketchMode.HAMMING))
        with self.assertRaises(StoreFormatError):
            deserialize(data + b'\x00')

    def test_volume_mismatch(self):
        store = make_store(SketchMode.HAMMING)
        data = bytearray(serialize(store))
        first_block = _HEADER_BYTES + SEED_BYTES * store.copies
        struct.pack_into('<I', data, first_block, store.structures[0][0].params.m1 + 1)
        with self.assertRaises(VolumeMismatchError):
            deserialize(bytes(data))

    def test_errors_are_value_errors(self):
        self.assertTrue(issubclass(StoreFormatError, ValueError))
        for error in [BadMagicError, VersionMismatchError, TruncatedStoreError, VolumeMismatchError]:
            self.assertTrue(issubclass(error, StoreFormatError))

    def test_write_and_read(self):
        store = make_store(SketchMode.EDIT)
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'store.dpsd')
            written = write_store(path, store)
            self.assertEqual(os.path.getsize(path), written)
            self.assertEqual(store, read_store(path))
