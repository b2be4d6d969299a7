#!/usr/bin/env python3
"""
Unit tests for netflow.py
"""

import os
import sys
import unittest

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from flowcore import (
    Arc,
    DirectedGraph,
    FlowPolytopeSpec,
    SpecError,
    TransportationSpec,
    as_flow_spec,
    birkhoff_spec,
    flow_violations,
)
from netflow import bvn_decompose, feasible_integral_flow


class TestFeasibleFlow(unittest.TestCase):
    def test_feasible_with_lower_bounds(self):
        """Test that lower bounds are honoured"""
        spec = TransportationSpec((2, 2), (2, 2), lower=((1, 0), (0, 1)))
        report = feasible_integral_flow(spec)
        self.assertTrue(report['success'])
        self.assertEqual(flow_violations(as_flow_spec(spec), report['flow'].value), [])
        self.assertGreaterEqual(report['flow'].value[0], 1)
        self.assertGreaterEqual(report['flow'].value[3], 1)

    def test_infeasible_reports_cut(self):
        """Test the cut certificate of an overloaded arc"""
        graph = DirectedGraph(("a", "b"), (Arc("x", "a", "b"),))
        spec = FlowPolytopeSpec(graph, (-2, 2), (0,), (1,))
        report = feasible_integral_flow(spec)
        self.assertFalse(report['success'])
        self.assertIsNone(report['flow'])
        self.assertEqual(report['deficit'], 1)
        self.assertEqual(report['cut'], ["a"])
        self.assertIn('error', report)

    def test_zero_demand_is_feasible(self):
        """Test that a circulation with zero lower bounds is feasible at zero"""
        graph = DirectedGraph(("a", "b"), (Arc("x", "a", "b"), Arc("y", "b", "a")))
        spec = FlowPolytopeSpec(graph, (0, 0), (0, 0), (1, 1))
        report = feasible_integral_flow(spec)
        self.assertTrue(report['success'])
        self.assertEqual(report['flow'].value, (0, 0))


class TestDecompose(unittest.TestCase):
    def test_all_ones_into_permutations(self):
        """Test splitting J_3 into three permutation matrices"""
        spec = birkhoff_spec(3)
        total = (1,) * 9
        decomposition = bvn_decompose(total, 3, spec)
        self.assertEqual(len(decomposition.parts), 3)
        self.assertEqual(decomposition.total, total)
        for part in decomposition.parts:
            table = np.asarray(part.value).reshape(3, 3)
            self.assertTrue(np.all(table.sum(axis=0) == 1))
            self.assertTrue(np.all(table.sum(axis=1) == 1))

    def test_deterministic(self):
        """Test that repeated calls give the same parts"""
        spec = TransportationSpec((2, 2), (2, 2))
        first = bvn_decompose((3, 3, 3, 3), 3, spec)
        second = bvn_decompose((3, 3, 3, 3), 3, spec)
        self.assertEqual(first, second)
        self.assertEqual(first.total, (3, 3, 3, 3))

    def test_k_equal_one(self):
        """Test that a point of F decomposes into itself"""
        spec = TransportationSpec((2, 2), (2, 2))
        decomposition = bvn_decompose((0, 2, 2, 0), 1, spec)
        self.assertEqual([p.value for p in decomposition.parts], [(0, 2, 2, 0)])

    def test_rejects_point_outside_kF(self):
        """Test that the input must be in k*F"""
        spec = TransportationSpec((2, 2), (2, 2))
        with self.assertRaises(SpecError):
            bvn_decompose((1, 1, 1, 1), 2, spec)
        with self.assertRaises(SpecError):
            bvn_decompose((1, 1, 1, 1), 0, spec)

    def test_graph_spec(self):
        """Test decomposition on a non-bipartite graph"""
        graph = DirectedGraph(("a", "b", "c"), (Arc("x", "a", "b"), Arc("y", "b", "c"), Arc("z", "a", "c")))
        spec = FlowPolytopeSpec(graph, (-2, 0, 2), (0, 0, 0), (2, 2, 1))
        decomposition = bvn_decompose((3, 3, 1), 2, spec)
        self.assertEqual(decomposition.total, (3, 3, 1))
        for part in decomposition.parts:
            self.assertEqual(flow_violations(spec, part.value), [])


if __name__ == '__main__':
    unittest.main()
