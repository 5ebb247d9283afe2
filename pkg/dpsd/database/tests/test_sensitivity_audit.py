import math
import unittest
import numpy as np
from dpsd.bitstring.packed_bit_string import PackedBitString
from dpsd.sketch.hamming_sketch import SketchParams, HammingSketch, encode, flip_prob_for
from dpsd.lcp.dyadic_tree import encode_levels
from dpsd.database.sketch_store import SketchMode
from dpsd.database.sensitivity_audit import AuditReport, implied_eps, random_neighbours, audit_hamming, audit_tree

SEED = bytes(range(100, 132))


def parity_leaking_encoder(a: PackedBitString, params: SketchParams) -> HammingSketch:
    """
    A broken encoder that also toggles 5 cells per repetition whenever the string has odd weight,
    so a single changed position moves far more than 2 cells per repetition
    """
    sketch = encode(a, params)
    if int(np.sum(a.to_bits())) % 2 == 0:
        return sketch
    dense = sketch.to_dense().copy()
    dense[:, 0, :5] ^= 1
    return HammingSketch(params, np.packbits(dense, axis=-1, bitorder='little'))


def level_leaking_encoder(bits: np.ndarray, params: SketchParams):
    levels = encode_levels(bits, params)
    if int(np.sum(bits)) % 2 == 0:
        return levels
    root = np.unpackbits(levels[0], axis=-1, count=params.m3, bitorder='little')
    root[:, :, 0, :5] ^= 1
    return [np.packbits(root, axis=-1, bitorder='little')] + levels[1:]


class TestImpliedEps(unittest.TestCase):

    def test_matches_budget_at_bound(self):
        q = flip_prob_for(2.0, 12)
        self.assertAlmostEqual(2.0, implied_eps(24, q))
        self.assertAlmostEqual(1.0, implied_eps(12, q))

    def test_no_noise(self):
        self.assertIsNone(implied_eps(10, 0.0))


class TestRandomNeighbours(unittest.TestCase):

    def test_differ_in_one_position(self):
        rng = np.random.default_rng(130)
        for _ in range(50):
            bits, neighbour = random_neighbours(17, rng)
            self.assertEqual(1, int(np.sum(bits != neighbour)))


class TestAuditHamming(unittest.TestCase):

    def test_passes(self):
        report = audit_hamming(n=64, k=4, eps=1.0, trials=100, rng=np.random.default_rng(131), seed=SEED)
        self.assertTrue(report.passed)
        self.assertEqual(0, report.violations)
        self.assertEqual(40, report.cell_bound)
        self.assertLessEqual(report.max_cells, report.cell_bound)
        self.assertGreater(report.max_cells, 0)
        self.assertLessEqual(report.implied_eps, 1.0 + 1e-9)
        self.assertEqual(SketchMode.HAMMING, report.mode)

    def test_catches_leaking_encoder(self):
        report = audit_hamming(n=64, k=4, eps=1.0, trials=20, rng=np.random.default_rng(132), seed=SEED,
                               encoder=parity_leaking_encoder)
        self.assertFalse(report.passed)
        self.assertEqual(20, report.violations)
        self.assertGreater(report.max_cells, report.cell_bound)
        self.assertGreater(report.implied_eps, 1.0)

    def test_infinite_budget(self):
        report = audit_hamming(n=32, k=2, eps=math.inf, trials=10, rng=np.random.default_rng(133), seed=SEED)
        self.assertTrue(report.passed)
        self.assertIsNone(report.implied_eps)
        self.assertEqual(0.0, report.flip_prob)
        self.assertEqual('inf', report.as_dict()['eps'])


class TestAuditTree(unittest.TestCase):

    def test_passes(self):
        report = audit_tree(n=64, k=16, eps=2.0, trials=100, rng=np.random.default_rng(134), seed=SEED)
        self.assertTrue(report.passed)
        # 7 levels, M1 = 4 + 3 + 10
        self.assertEqual(2 * 17 * 7, report.cell_bound)
        self.assertLessEqual(report.max_cells, report.cell_bound)
        self.assertAlmostEqual(2.0, report.eps)
        self.assertLessEqual(report.implied_eps, 2.0 + 1e-9)
        self.assertEqual(SketchMode.EDIT, report.mode)

    def test_unpadded_length(self):
        report = audit_tree(n=37, k=4, eps=1.0, trials=30, rng=np.random.default_rng(135), seed=SEED)
        self.assertTrue(report.passed)

    def test_catches_leaking_encoder(self):
        report = audit_tree(n=16, k=2, eps=1.0, trials=10, rng=np.random.default_rng(136), seed=SEED,
                            encoder=level_leaking_encoder)
        self.assertGreater(report.violations, 0)
        self.assertGreater(report.max_cells, report.cell_bound)
        self.assertFalse(report.passed)


class TestAuditReport(unittest.TestCase):

    def test_as_dict(self):
        report = AuditReport(mode=SketchMode.EDIT, trials=5, max_cells=3, cell_bound=4, violations=0,
                             flip_prob=0.25, eps=2.0, implied_eps=1.5)
        self.assertEqual({
            'mode': 'edit', 'trials': 5, 'max_cells': 3, 'cell_bound': 4, 'violations': 0, 'flip_prob': 0.25,
            'eps': 2.0, 'implied_eps': 1.5, 'passed': True
        }, report.as_dict())

    def test_fails_on_implied_eps(self):
        report = AuditReport(mode=SketchMode.HAMMING, trials=5, max_cells=3, cell_bound=4, violations=0,
                             flip_prob=0.25, eps=1.0, implied_eps=1.5)
        self.assertFalse(report.passed)
