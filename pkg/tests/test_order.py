#!/usr/bin/env python3
"""
Unit tests for order.py
"""

import os
import sys
import unittest
from fractions import Fraction

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from flowcore import (
    SpecError,
    TransportationSpec,
    cell_points,
    enumerate_lattice_points,
    enumerate_nonempty_cells,
)
from order import (
    EQUAL,
    GREATER,
    LESS,
    TermOrder,
    compare,
    ranking_from_json,
    ranking_to_json,
    regular_subdivision,
    revlex_from_ranking,
    squared_weights,
    subdivide_and_pull_order,
)


class TestRevlex(unittest.TestCase):
    def setUp(self):
        """Set up test fixtures"""
        self.spec = TransportationSpec((2, 2), (2, 2))
        self.points = enumerate_lattice_points(self.spec)

    def test_cheapest_is_last_in_ranking(self):
        """Test that the minimal element of the ranking is the cheapest variable"""
        order = revlex_from_ranking(self.points, [0, 1, 2])
        self.assertEqual(order.cheapest, 2)
        self.assertEqual(compare({2: 1}, {0: 1}, order), LESS)
        self.assertEqual(compare({0: 1}, {2: 1}, order), GREATER)

    def test_degree_before_revlex(self):
        """Test that lower degree is smaller"""
        order = revlex_from_ranking(self.points, [0, 1, 2])
        self.assertEqual(compare({0: 1}, {2: 2}, order), LESS)

    def test_revlex_tiebreak(self):
        """Test that a monomial using the cheapest variable is smaller"""
        order = revlex_from_ranking(self.points, [1, 0, 2])
        self.assertEqual(compare({0: 1, 2: 1}, {1: 2}, order), LESS)

    def test_dense_and_sparse_agree(self):
        """Test that dense vectors and mappings compare the same"""
        order = revlex_from_ranking(self.points, [2, 0, 1])
        self.assertEqual(compare([1, 0, 1], {0: 1, 2: 1}, order), EQUAL)
        self.assertEqual(order.key([0, 2, 0]), order.key({1: 2}))

    def test_bad_ranking(self):
        """Test that a ranking must be a permutation"""
        with self.assertRaises(SpecError):
            revlex_from_ranking(self.points, [0, 0, 1])
        with self.assertRaises(SpecError):
            ranking_from_json(["a", 1, 2], self.points)

    def test_negative_weight_rejected(self):
        """Test that weights must be nonnegative"""
        with self.assertRaises(SpecError):
            TermOrder(self.points, (Fraction(-1), Fraction(0), Fraction(0)), (0, 1, 2))

    def test_ranking_json(self):
        """Test reading and writing a ranking"""
        order = revlex_from_ranking(self.points, ranking_from_json([2, 1, 0], self.points))
        self.assertEqual(ranking_to_json(order), [2, 1, 0])


class TestSubdivideAndPull(unittest.TestCase):
    def setUp(self):
        """Set up test fixtures"""
        self.spec = TransportationSpec((2, 2), (2, 2))
        self.points = enumerate_lattice_points(self.spec)

    def test_squared_weights(self):
        """Test the sum of squared entries as heights"""
        self.assertEqual(squared_weights(self.spec, self.points), (Fraction(8), Fraction(4), Fraction(8)))

    def test_weight_dominates_ranking(self):
        """Test that the lighter monomial wins even against the ranking"""
        order = subdivide_and_pull_order(self.spec, [0, 1, 2], self.points)
        self.assertEqual(compare({1: 1}, {0: 1}, order), LESS)
        self.assertEqual(compare({1: 2}, {0: 1, 2: 1}, order), LESS)

    def test_regular_subdivision_of_segment(self):
        """Test that the squared weights cut the segment at its midpoint"""
        weights = squared_weights(self.spec, self.points)
        self.assertEqual(regular_subdivision(list(self.points), weights), [(0, 1), (1, 2)])

    def test_affine_weights_give_one_cell(self):
        """Test that an affine height function does not subdivide"""
        self.assertEqual(regular_subdivision(list(self.points), [0, 0, 0]), [(0, 1, 2)])
        self.assertEqual(regular_subdivision(list(self.points), [0, 1, 2]), [(0, 1, 2)])


def random_exponents(rng, size, max_exponent=2):
    """Sparse exponent mapping with a random support"""
    dense = rng.integers(0, max_exponent + 1, size=size)
    return {i: int(m) for i, m in enumerate(dense) if m}


class TestRandomOrders(unittest.TestCase):
    def setUp(self):
        """Set up test fixtures"""
        self.rng = np.random.default_rng(20240602)
        self.spec = TransportationSpec((3, 2), (2, 2, 1))
        self.points = enumerate_lattice_points(self.spec)

    def random_order(self):
        ranking = [int(i) for i in self.rng.permutation(len(self.points))]
        if self.rng.random() < 0.5:
            return subdivide_and_pull_order(self.spec, ranking, self.points)
        return revlex_from_ranking(self.points, ranking)

    def test_compare_is_a_total_order(self):
        """Test antisymmetry and that only equal monomials compare EQUAL"""
        flipped = {LESS: GREATER, EQUAL: EQUAL, GREATER: LESS}
        for _ in range(20):
            order = self.random_order()
            for _ in range(20):
                u = random_exponents(self.rng, len(self.points))
                v = random_exponents(self.rng, len(self.points))
                result = compare(u, v, order)
                self.assertEqual(compare(v, u, order), flipped[result])
                self.assertEqual(result == EQUAL, u == v)

    def test_compare_survives_common_factor(self):
        """Test that multiplying both sides by one monomial keeps the comparison"""
        for _ in range(20):
            order = self.random_order()
            for _ in range(20):
                u = random_exponents(self.rng, len(self.points))
                v = random_exponents(self.rng, len(self.points))
                w = random_exponents(self.rng, len(self.points))
                uw = {i: u.get(i, 0) + w.get(i, 0) for i in set(u) | set(w)}
                vw = {i: v.get(i, 0) + w.get(i, 0) for i in set(v) | set(w)}
                self.assertEqual(compare(uw, vw, order), compare(u, v, order))

    def test_squared_weights_induce_the_cells(self):
        """Test that the lifted hull recovers the maximal cells of random specs"""
        checked = 0
        while checked < 5:
            table = self.rng.integers(0, 3, size=(2, 3))
            rows, cols = table.sum(axis=1), table.sum(axis=0)
            if rows.min() == 0 or cols.min() == 0:
                continue
            spec = TransportationSpec(tuple(int(r) for r in rows), tuple(int(c) for c in cols))
            points = enumerate_lattice_points(spec)
            if len(points) < 4:
                continue
            expected = sorted(tuple(cell_points(cell, points)) for cell in enumerate_nonempty_cells(spec, points))
            found = regular_subdivision(list(points), squared_weights(spec, points))
            self.assertEqual(found, expected, f"cells differ on {spec}")
            checked += 1


if __name__ == '__main__':
    unittest.main()
