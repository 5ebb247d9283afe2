import math
import unittest
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString, LengthMismatchError
from dpsd.sketch.hamming_sketch import SketchParams, HammingSketch, SketchParamsError, KExceedsNError, \
    SketchParamsMismatchError, ceil_log2, flip_prob_for, eps_for_flip_prob, default_params, encode, flip, \
    sketch_distance, parity_tensor

SEED = bytes(range(32))
OTHER_SEED = bytes(range(1, 33))


def random_string(n: int, rng: np.random.Generator) -> PackedBitString:
    return PackedBitString.from_bits(rng.integers(0, 2, size=n))


class TestParams(unittest.TestCase):

    def test_ceil_log2(self):
        self.assertEqual([0, 1, 2, 2, 3, 4, 4, 5], [ceil_log2(v) for v in [1, 2, 3, 4, 5, 9, 16, 17]])

    def test_default_params_k16(self):
        params = default_params(k=16, eps=math.inf, n=100, seed=SEED)
        self.assertEqual((40, 32, 6400), params.shape)
        self.assertEqual(0, params.flip_prob)

    def test_default_params_k1_clamps(self):
        params = default_params(k=1, eps=1.0, n=10, seed=SEED)
        self.assertEqual((10, 2, 400), params.shape)

    def test_flip_prob_quarter(self):
        params = default_params(k=16, eps=2 * 40 * math.log(3), n=100, seed=SEED)
        self.assertAlmostEqual(0.25, params.flip_prob, places=12)

    def test_eps_for_flip_prob_inverts(self):
        for q in [0.01, 0.1, 0.25, 0.4]:
            self.assertAlmostEqual(q, flip_prob_for(eps_for_flip_prob(q, 20), 20), places=12)
        self.assertEqual(math.inf, eps_for_flip_prob(0, 20))

    def test_flip_prob_huge_eps_underflows_to_zero(self):
        self.assertEqual(0.0, flip_prob_for(1e6, 1))

    def test_k_exceeds_n(self):
        with self.assertRaises(KExceedsNError):
            default_params(k=8, eps=1.0, n=4, seed=SEED)

    def test_rejects_non_positive_eps(self):
        with self.assertRaises(SketchParamsError):
            default_params(k=2, eps=0, n=4, seed=SEED)

    def test_compatible_with(self):
        params = default_params(k=4, eps=1.0, n=32, seed=SEED)
        self.assertTrue(params.compatible_with(params.with_eps(math.inf)))
        self.assertFalse(params.compatible_with(default_params(k=4, eps=1.0, n=32, seed=OTHER_SEED)))


class TestEncode(unittest.TestCase):

    def test_single_position_sets_one_cell_per_repetition(self):
        params = default_params(k=1, eps=math.inf, n=1, seed=SEED)
        sketch = encode(PackedBitString.from_bits([0]), params)
        dense = sketch.to_dense()
        self.assertEqual(params.m1, sketch.count_set())
        self.assertTrue(np.all(dense.reshape(params.m1, -1).sum(axis=1) == 1))

    def test_encode_is_deterministic(self):
        rng = np.random.default_rng(1)
        params = default_params(k=4, eps=math.inf, n=50, seed=SEED)
        a = random_string(50, rng)
        self.assertEqual(encode(a, params), encode(a, params))

    def test_parity_of_set_cells(self):
        rng = np.random.default_rng(2)
        params = default_params(k=4, eps=math.inf, n=33, seed=SEED)
        sketch = encode(random_string(33, rng), params)
        self.assertEqual((33 * params.m1) % 2, sketch.count_set() % 2)

    def test_neighbours_differ_in_at_most_2_m1_cells(self):
        rng = np.random.default_rng(3)
        for k in [2, 8, 16]:
            n = 64
            params = default_params(k=k, eps=math.inf, n=n, seed=SEED)
            for _ in range(30):
                bits = rng.integers(0, 2, size=n)
                neighbour = bits.copy()
                neighbour[rng.integers(0, n)] ^= 1
                diff = encode(PackedBitString.from_bits(bits), params).cell_difference(
                    encode(PackedBitString.from_bits(neighbour), params))
                self.assertLessEqual(diff, 2 * params.m1)

    def test_neighbours_exhaustive_small(self):
        params = default_params(k=2, eps=math.inf, n=4, seed=SEED)
        for value in range(16):
            bits = [(value >> p) & 1 for p in range(4)]
            for position in range(4):
                neighbour = list(bits)
                neighbour[position] ^= 1
                diff = encode(PackedBitString.from_bits(bits), params).cell_difference(
                    encode(PackedBitString.from_bits(neighbour), params))
                self.assertLessEqual(diff, 2 * params.m1)

    def test_length_mismatch(self):
        params = default_params(k=2, eps=1.0, n=8, seed=SEED)
        with self.assertRaises(LengthMismatchError):
            encode(PackedBitString.from_bits([0] * 7), params)

    def test_parity_tensor_cancels_pairs(self):
        packed = parity_tensor(np.array([0, 3, 3, 5, 5, 5]), (1, 1, 8))
        self.assertEqual([0b00100001], [int(v) for v in packed.ravel()])


class TestFlip(unittest.TestCase):

    def test_zero_flip_prob_is_identity(self):
        params = default_params(k=2, eps=math.inf, n=8, seed=SEED)
        sketch = encode(PackedBitString.from_bits([1, 0] * 4), params)
        self.assertIs(sketch, flip(sketch, np.random.default_rng(0)))

    def test_flip_count_is_binomial(self):
        params = SketchParams(m1=4, m2=4, m3=400, eps=2 * 4 * math.log(3), k=2, n=4, seed=SEED)
        volume = params.volume
        zero = HammingSketch(params, np.zeros(params.packed_shape, dtype=np.uint8))
        low = volume / 4 - 5 * math.sqrt(volume * 3 / 16)
        high = volume / 4 + 5 * math.sqrt(volume * 3 / 16)
        for seed in range(100):
            flipped = flip(zero, np.random.default_rng(seed)).count_set()
            self.assertTrue(low <= flipped <= high, f"{flipped} flips outside [{low}, {high}]")

    def test_independent_rngs_differ(self):
        params = default_params(k=2, eps=5.0, n=8, seed=SEED)
        sketch = encode(PackedBitString.from_bits([1, 0] * 4), params)
        self.assertNotEqual(flip(sketch, np.random.default_rng(1)), flip(sketch, np.random.default_rng(2)))

    def test_flip_keeps_trailing_bits_clear(self):
        params = SketchParams(m1=2, m2=2, m3=13, eps=0.001, k=1, n=1, seed=SEED)
        zero = HammingSketch(params, np.zeros(params.packed_shape, dtype=np.uint8))
        flipped = flip(zero, np.random.default_rng(5))
        self.assertTrue(np.all(flipped.bits[..., 1] >> 5 == 0))


class TestSketchDistance(unittest.TestCase):

    def test_identical_is_zero(self):
        params = default_params(k=4, eps=math.inf, n=16, seed=SEED)
        sketch = encode(PackedBitString.from_bits([0, 1] * 8), params)
        self.assertEqual(0, sketch_distance(sketch, sketch))

    def test_one_cell_is_half(self):
        params = default_params(k=4, eps=math.inf, n=16, seed=SEED)
        zero = HammingSketch(params, np.zeros(params.packed_shape, dtype=np.uint8))
        bits = np.zeros(params.packed_shape, dtype=np.uint8)
        bits[2, 3, 4] = 0b100
        self.assertEqual(0.5, sketch_distance(zero, HammingSketch(params, bits)))

    def test_symmetric(self):
        rng = np.random.default_rng(8)
        params = default_params(k=4, eps=3.0, n=32, seed=SEED)
        first = flip(encode(random_string(32, rng), params), rng)
        second = encode(random_string(32, rng), params)
        self.assertEqual(sketch_distance(first, second), sketch_distance(second, first))

    def test_noiseless_planted_distance(self):
        rng = np.random.default_rng(9)
        n = 256
        k = 8
        successes = 0
        for trial in range(100):
            seed = rng.bytes(32)
            params = default_params(k=k, eps=math.inf, n=n, seed=seed)
            bits = rng.integers(0, 2, size=n)
            other = bits.copy()
            other[rng.choice(n, size=5, replace=False)] ^= 1
            distance = sketch_distance(encode(PackedBitString.from_bits(bits), params),
                                       encode(PackedBitString.from_bits(other), params))
            if distance == 5:
                successes += 1
        self.assertGreaterEqual(successes, 95)

    def test_mismatched_params(self):
        first = encode(PackedBitString.from_bits([1, 0, 1, 1]), default_params(k=2, eps=1.0, n=4, seed=SEED))
        second = encode(PackedBitString.from_bits([1, 0, 1, 1]), default_params(k=2, eps=1.0, n=4, seed=OTHER_SEED))
        with self.assertRaises(SketchParamsMismatchError):
            sketch_distance(first, second)
