#!/usr/bin/env python3
"""
Unit tests for toric.py
"""

import os
import sys
import time
import unittest

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from flowcore import (
    PointList,
    SpecError,
    TransportationSpec,
    VerificationError,
    birkhoff_spec,
    enumerate_lattice_points,
)
from order import revlex_from_ranking, subdivide_and_pull_order
from toric import (
    Binomial,
    ExponentVector,
    buchberger,
    group_multisets,
    initial_ideal_minimal_generators,
    lattice_basis,
    make_binomial,
    max_degree,
    relation_census,
    spair_reduce,
    verify_groebner_basis,
)


def parity_classes(points):
    """Point indices of B_3 split by the sign of the permutation"""
    classes = {}
    for i, p in enumerate(points):
        sign = int(round(np.linalg.det(np.asarray(p).reshape(3, 3))))
        classes.setdefault(sign, set()).add(i)
    return frozenset(classes[1]), frozenset(classes[-1])


class TestExponentVector(unittest.TestCase):
    def setUp(self):
        """Set up test fixtures"""
        self.points = enumerate_lattice_points(TransportationSpec((2, 2), (2, 2)))

    def test_from_indices(self):
        """Test multiplicities, degree and image"""
        u = ExponentVector.from_indices([0, 2, 0], self.points)
        self.assertEqual(u.counts, {0: 2, 2: 1})
        self.assertEqual(u.degree, 3)
        self.assertEqual(u.image, (2, 4, 4, 2))
        self.assertEqual(u.indices(), [0, 0, 2])
        self.assertEqual(u.support, (0, 2))

    def test_arithmetic(self):
        """Test divisibility, sums and differences"""
        a = ExponentVector.from_indices([0], self.points)
        b = ExponentVector.from_indices([0, 1], self.points)
        self.assertTrue(a.divides(b))
        self.assertFalse(b.divides(a))
        self.assertEqual((b - a).counts, {1: 1})
        self.assertEqual((a + b).counts, {0: 2, 1: 1})
        with self.assertRaises(SpecError):
            a - b

    def test_invalid_counts(self):
        """Test that negative multiplicities and unknown indices are rejected"""
        with self.assertRaises(SpecError):
            ExponentVector.from_counts({0: -1}, self.points)
        with self.assertRaises(SpecError):
            ExponentVector.from_counts({7: 1}, self.points)

    def test_json(self):
        """Test the sparse JSON form"""
        u = ExponentVector.from_indices([1, 1], self.points)
        self.assertEqual(u.to_json(), {"1": 2})
        self.assertEqual(ExponentVector.from_json({"1": 2}, self.points), u)


class TestBinomial(unittest.TestCase):
    def setUp(self):
        """Set up test fixtures"""
        self.spec = TransportationSpec((2, 2), (2, 2))
        self.points = enumerate_lattice_points(self.spec)
        self.order = subdivide_and_pull_order(self.spec, [0, 1, 2], self.points)

    def test_images_must_agree(self):
        """Test that a binomial outside the toric ideal is rejected"""
        with self.assertRaises(VerificationError):
            Binomial(ExponentVector.from_indices([0], self.points), ExponentVector.from_indices([1], self.points))

    def test_common_factor_rejected(self):
        """Test that stored binomials are pure differences"""
        lead = ExponentVector.from_indices([0, 1, 2], self.points)
        trail = ExponentVector.from_indices([1, 1, 1], self.points)
        with self.assertRaises(VerificationError):
            Binomial(lead, trail)

    def test_make_binomial_cancels_and_orients(self):
        """Test cancellation of the common factor and the lead under the order"""
        b = make_binomial({0: 1, 1: 1, 2: 1}, {1: 3}, self.order)
        self.assertEqual(b.lead.counts, {0: 1, 2: 1})
        self.assertEqual(b.trail.counts, {1: 2})
        self.assertEqual(b.degree, 2)
        self.assertIsNone(make_binomial({0: 1}, {0: 1}, self.order))


class TestCensus(unittest.TestCase):
    def test_group_multisets(self):
        """Test that the two pairs over the centre share an image"""
        points = enumerate_lattice_points(TransportationSpec((2, 2), (2, 2)))
        fibers = group_multisets(points, 2)
        self.assertEqual(fibers[(2, 2, 2, 2)], [(0, 2), (1, 1)])

    def test_birkhoff_three_has_no_quadrics(self):
        """Test that B_3 has only its cubic relation up to degree 3"""
        points = enumerate_lattice_points(birkhoff_spec(3))
        self.assertEqual(relation_census(points, 2), [])
        cubics = relation_census(points, 3)
        self.assertTrue(cubics)
        self.assertTrue(all(b.degree == 3 for b in cubics))


class TestBuchberger(unittest.TestCase):
    def test_segment_basis(self):
        """Test the single quadric of the 2x2 segment under both orders"""
        spec = TransportationSpec((2, 2), (2, 2))
        points = enumerate_lattice_points(spec)
        gb = buchberger(points, subdivide_and_pull_order(spec, [0, 1, 2], points))
        self.assertEqual(len(gb), 1)
        self.assertEqual(gb.elements[0].lead.counts, {0: 1, 2: 1})
        self.assertEqual(gb.elements[0].trail.counts, {1: 2})
        self.assertEqual(max_degree(gb), 2)

        gb = buchberger(points, revlex_from_ranking(points, [1, 0, 2]))
        self.assertEqual(gb.elements[0].lead.counts, {1: 2})

    def test_birkhoff_three_cubic(self):
        """Test that B_3 is generated by the even-odd cubic"""
        points = enumerate_lattice_points(birkhoff_spec(3))
        gb = buchberger(points, revlex_from_ranking(points, range(len(points))))
        self.assertEqual(len(gb), 1)
        self.assertEqual(max_degree(gb), 3)
        element = gb.elements[0]
        sides = {frozenset(element.lead.support), frozenset(element.trail.support)}
        self.assertEqual(sides, set(parity_classes(points)))

    def test_degree_cap_truncates(self):
        """Test that skipping cubics leaves a flagged, truncated basis"""
        points = enumerate_lattice_points(birkhoff_spec(3))
        gb = buchberger(points, revlex_from_ranking(points, range(len(points))), degree_cap=2)
        self.assertTrue(gb.truncated)
        self.assertEqual(gb.reason, 'degree')
        with self.assertRaises(SpecError):
            max_degree(gb)

    def test_order_over_other_points(self):
        """Test that the order must live on the same point list"""
        points = enumerate_lattice_points(birkhoff_spec(3))
        other = enumerate_lattice_points(TransportationSpec((2, 2), (2, 2)))
        with self.assertRaises(SpecError):
            buchberger(points, revlex_from_ranking(other, [0, 1, 2]))

    def test_reduced_basis_is_unique(self):
        """Test that shuffled generators give the same reduced basis"""
        spec = TransportationSpec((3, 3), (2, 2, 2))
        points = enumerate_lattice_points(spec)
        order = revlex_from_ranking(points, range(len(points)))
        plain = buchberger(points, order)
        shuffled = buchberger(points, order, shuffle_seed=7)
        self.assertEqual([b.to_json() for b in plain.elements], [b.to_json() for b in shuffled.elements])
        self.assertTrue(verify_groebner_basis(plain)['success'])
        self.assertLessEqual(max_degree(plain), 3)

    def test_spairs_reduce_to_zero(self):
        """Test the S-pair criterion through spair_reduce"""
        spec = TransportationSpec((3, 3), (2, 2, 2))
        points = enumerate_lattice_points(spec)
        order = subdivide_and_pull_order(spec, range(len(points)), points)
        gb = buchberger(points, order)
        for i, f in enumerate(gb.elements):
            for g in gb.elements[i + 1:]:
                self.assertIsNone(spair_reduce(f, g, order, gb.elements))

    def test_initial_ideal_generators(self):
        """Test that the leads of a reduced basis do not divide each other"""
        spec = TransportationSpec((3, 3), (2, 2, 2))
        points = enumerate_lattice_points(spec)
        gb = buchberger(points, revlex_from_ranking(points, range(len(points))))
        leads = initial_ideal_minimal_generators(gb)
        self.assertEqual(len(leads), len(gb))

    def test_high_degree_generator(self):
        """Test a configuration whose only generator has degree 5"""
        points = PointList(((1, 0), (1, 1), (1, 5)))
        gb = buchberger(points, revlex_from_ranking(points, [0, 1, 2]))
        self.assertFalse(gb.truncated)
        self.assertEqual(len(gb), 1)
        self.assertEqual(gb.elements[0].lead.to_json(), {"1": 5})
        self.assertEqual(gb.elements[0].trail.to_json(), {"0": 4, "2": 1})
        self.assertEqual(max_degree(gb), 5)
        self.assertTrue(verify_groebner_basis(gb)['success'])

    def test_census_start_needs_low_degree(self):
        """Test that starting from the degree 3 census misses the quintic"""
        points = PointList(((1, 0), (1, 1), (1, 5)))
        gb = buchberger(points, revlex_from_ranking(points, [0, 1, 2]), generator_degree=3)
        self.assertEqual(len(gb), 0)

    def test_time_cap_covers_generators(self):
        """Test that a tiny time cap stops a large run early"""
        spec = TransportationSpec((3, 3, 3), (3, 3, 3))
        points = enumerate_lattice_points(spec)
        started = time.monotonic()
        gb = buchberger(points, revlex_from_ranking(points, range(len(points))), time_cap=0.01)
        self.assertLess(time.monotonic() - started, 30)
        self.assertTrue(gb.truncated)
        self.assertEqual(gb.reason, 'time')


class TestLatticeBasis(unittest.TestCase):
    def test_single_relation(self):
        """Test the kernel of three collinear points"""
        basis = lattice_basis(PointList(((1, 0), (1, 1), (1, 5))))
        self.assertEqual(len(basis), 1)
        self.assertIn([int(x) for x in basis[0]], ([4, -5, 1], [-4, 5, -1]))

    def test_relations_preserve_image_and_degree(self):
        """Test that every basis vector is a degree-preserving relation"""
        points = enumerate_lattice_points(birkhoff_spec(3))
        basis = lattice_basis(points)
        coords = points.as_array()
        self.assertEqual(len(basis), len(points) - 1 - np.linalg.matrix_rank(coords - coords[0]))
        for u in basis:
            self.assertEqual(int(u.sum()), 0)
            self.assertFalse((u @ coords).any())

    def test_affinely_independent_points(self):
        """Test that a simplex has no relations"""
        self.assertEqual(lattice_basis(PointList(((1, 0, 0), (0, 1, 0), (0, 0, 1)))), [])


if __name__ == '__main__':
    unittest.main()
