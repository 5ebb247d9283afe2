import unittest
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString
from dpsd.oracle.exact import exact_hamming, exact_edit
from dpsd.oracle.planting import PlantingError, random_bits, plant_hamming_pair, apply_random_edits, \
    plant_edit_pair


class TestPlantHamming(unittest.TestCase):

    def test_exact_distance(self):
        rng = np.random.default_rng(70)
        for d in [0, 1, 5, 17, 64]:
            a, b = plant_hamming_pair(64, d, rng)
            self.assertEqual(d, exact_hamming(a, b))

    def test_complement(self):
        a, b = plant_hamming_pair(10, 10, np.random.default_rng(71))
        self.assertTrue(np.array_equal(1 - a.to_bits(), b.to_bits()))

    def test_bad_distance(self):
        with self.assertRaises(PlantingError):
            plant_hamming_pair(8, 9, np.random.default_rng(72))
        with self.assertRaises(PlantingError):
            plant_hamming_pair(8, -1, np.random.default_rng(72))


class TestPlantEdit(unittest.TestCase):

    def test_random_edits_keep_length_and_budget(self):
        rng = np.random.default_rng(73)
        for budget in range(0, 9):
            bits = random_bits(50, rng)
            edited = apply_random_edits(bits, budget, rng)
            self.assertEqual(bits.shape, edited.shape)
            distance = exact_edit(PackedBitString.from_bits(bits), PackedBitString.from_bits(edited), banded=False)
            self.assertLessEqual(distance, budget)

    def test_planted_distance_within_budget(self):
        rng = np.random.default_rng(74)
        for _ in range(256):
            a, b = plant_edit_pair(30, 7, rng)
            distance = exact_edit(a, b, k=7)
            self.assertLessEqual(distance, 7)
            self.assertEqual(30, b.length)

    def test_zero_budget_is_identical(self):
        a, b = plant_edit_pair(20, 0, np.random.default_rng(75))
        self.assertEqual(a, b)

    def test_require_exact(self):
        rng = np.random.default_rng(76)
        for d in [1, 3, 5]:
            a, b = plant_edit_pair(40, d, rng, require_exact=True)
            self.assertEqual(d, exact_edit(a, b, k=d))

    def test_bad_budget(self):
        with self.assertRaises(PlantingError):
            plant_edit_pair(5, 6, np.random.default_rng(77))
