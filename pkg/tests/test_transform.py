#!/usr/bin/env python3
"""
Unit tests for transform.py
"""

import os
import sys
import unittest

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from flowcore import (
    Arc,
    DirectedGraph,
    FlowPolytopeSpec,
    SpecError,
    TransportationSpec,
    enumerate_lattice_points,
    flow_violations,
)
from transform import bipartize, double_primed, primed, slack_arc_id, verify_semigroup_iso


class TestBipartize(unittest.TestCase):
    def setUp(self):
        """Set up test fixtures"""
        graph = DirectedGraph(("a", "b", "c"), (Arc("x", "a", "b"), Arc("y", "b", "c"), Arc("z", "a", "c")))
        self.spec = FlowPolytopeSpec(graph, (-2, 0, 2), (0, 0, 0), (2, 2, 1))

    def test_split_graph(self):
        """Test vertices, arcs, capacity and demands of the split"""
        result = bipartize(self.spec)
        self.assertEqual(result.N, 3)
        split = result.spec
        self.assertEqual(split.graph.vertices[:3], (primed("a"), primed("b"), primed("c")))
        self.assertEqual(split.graph.vertices[3:], (double_primed("a"), double_primed("b"), double_primed("c")))
        self.assertEqual(split.demand, (-3, -3, -3, 1, 3, 5))
        self.assertEqual(split.graph.arcs[0], Arc("x", "a'", "b''"))
        self.assertEqual(split.graph.arcs[3], Arc(slack_arc_id("a"), "a'", "a''"))
        self.assertEqual(split.upper, (2, 2, 1, 3, 3, 3))
        for arc in split.graph.arcs:
            self.assertTrue(arc.tail.endswith("'") and not arc.tail.endswith("''"))
            self.assertTrue(arc.head.endswith("''"))

    def test_phi(self):
        """Test the image of a flow and its inverse"""
        result = bipartize(self.spec)
        self.assertEqual(result.phi((2, 2, 0)), (2, 2, 0, 1, 1, 3))
        self.assertEqual(result.phi_inverse(result.phi((1, 1, 1))), (1, 1, 1))
        self.assertEqual(flow_violations(result.spec, result.phi((1, 1, 1))), [])
        with self.assertRaises(SpecError):
            result.phi((1, 1))

    def test_phi_on_dilations(self):
        """Test that phi of a point of 2F lies in twice the split polytope"""
        result = bipartize(self.spec)
        self.assertEqual(flow_violations(result.spec, result.phi((3, 3, 1), k=2), scale=2), [])

    def test_reserved_slack_ids(self):
        """Test that arc ids may not clash with slack arcs"""
        graph = DirectedGraph(("a", "b"), (Arc(slack_arc_id("a"), "a", "b"),))
        spec = FlowPolytopeSpec(graph, (-1, 1), (0,), (1,))
        with self.assertRaises(SpecError):
            bipartize(spec)

    def test_json(self):
        """Test that the JSON form carries N and phi"""
        result = bipartize(self.spec)
        points = enumerate_lattice_points(self.spec)
        data = result.to_json(points)
        self.assertEqual(data["N"], 3)
        self.assertEqual(len(data["phi"]), len(points))


class TestSemigroupIso(unittest.TestCase):
    def test_graph_spec(self):
        """Test the lattice point bijection on a small graph"""
        graph = DirectedGraph(("a", "b", "c"), (Arc("x", "a", "b"), Arc("y", "b", "c"), Arc("z", "a", "c")))
        spec = FlowPolytopeSpec(graph, (-2, 0, 2), (0, 0, 0), (2, 2, 1))
        report = verify_semigroup_iso(bipartize(spec))
        self.assertTrue(report['success'])
        self.assertEqual(report['points'], 2)
        self.assertEqual(report['split_points'], 2)

    def test_relations_correspond(self):
        """Test that the quadric of the 2x2 segment survives the split"""
        report = verify_semigroup_iso(bipartize(TransportationSpec((2, 2), (2, 2))), k_max=3)
        self.assertTrue(report['success'])
        self.assertEqual(report['points'], 3)
        self.assertEqual(report['degrees'][2]['relations'], 1)
        self.assertTrue(report['degrees'][2]['match'])
        self.assertTrue(report['degrees'][3]['match'])


if __name__ == '__main__':
    unittest.main()
