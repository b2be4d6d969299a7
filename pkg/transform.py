#!/usr/bin/env python3
"""
Bipartite vertex splitting
Every flow polytope is isomorphic, as a lattice point set, to a flow polytope
on a bipartite graph with all arcs from primed to double-primed vertices
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from flowcore import (
    Arc,
    DirectedGraph,
    FlowPolytopeSpec,
    LatticePoint,
    PointList,
    PolytopeSpec,
    SpecError,
    as_flow_spec,
    enumerate_lattice_points,
    flow_violations,
    spec_to_json,
)
from toric import group_multisets

logger = logging.getLogger(__name__)


def primed(v: str) -> str:
    return f"{v}'"


def double_primed(v: str) -> str:
    return f"{v}''"


def slack_arc_id(v: str) -> str:
    return f"slack_{v}"


@dataclass(frozen=True)
class BipartizeResult:
    """
    The split spec and the capacity N.

    Arcs keep their ids and positions; one slack arc (v', v'') per vertex is
    appended in vertex order.
    """

    original: FlowPolytopeSpec
    spec: FlowPolytopeSpec
    N: int

    def outflow(self, f: Sequence[int], v: str) -> int:
        return sum(int(x) for arc, x in zip(self.original.graph.arcs, f) if arc.tail == v)

    def phi(self, f: Sequence[int], k: int = 1) -> LatticePoint:
        """Image of a point of k*F: inherited values, then kN minus the outflow at each vertex"""
        if len(f) != self.original.arc_count:
            raise SpecError(f"Expected {self.original.arc_count} arc values, got {len(f)}")
        slack = [k * self.N - self.outflow(f, v) for v in self.original.graph.vertices]
        return tuple(int(x) for x in f) + tuple(slack)

    def phi_inverse(self, g: Sequence[int]) -> LatticePoint:
        if len(g) != self.spec.arc_count:
            raise SpecError(f"Expected {self.spec.arc_count} arc values, got {len(g)}")
        return tuple(int(x) for x in g[:self.original.arc_count])

    def to_json(self, points: Optional[PointList] = None) -> Dict[str, Any]:
        data = {"spec": spec_to_json(self.spec), "N": self.N}
        if points is not None:
            data["phi"] = [{"point": list(p), "image": list(self.phi(p))} for p in points]
        return data


def bipartize(spec: PolytopeSpec) -> BipartizeResult:
    """
    Split v into v' and v''. Arc (v, w) becomes (v', w'') with its bounds,
    (v', v'') is a slack arc with bounds [0, N], and the demands are
    -N at v' and N + d_v at v''. N is the largest total upper bound leaving
    or entering a vertex.
    """
    flow_spec = as_flow_spec(spec)
    graph = flow_spec.graph
    ids = {arc.id for arc in graph.arcs}
    clashes = [slack_arc_id(v) for v in graph.vertices if slack_arc_id(v) in ids]
    if clashes:
        raise SpecError(f"Arc ids {clashes} are reserved for slack arcs")

    N = 0
    for v in graph.vertices:
        out_cap = sum(hi for arc, hi in zip(graph.arcs, flow_spec.upper) if arc.tail == v)
        in_cap = sum(hi for arc, hi in zip(graph.arcs, flow_spec.upper) if arc.head == v)
        N = max(N, out_cap, in_cap)

    vertices = tuple(primed(v) for v in graph.vertices) + tuple(double_primed(v) for v in graph.vertices)
    arcs = [Arc(arc.id, primed(arc.tail), double_primed(arc.head)) for arc in graph.arcs]
    arcs += [Arc(slack_arc_id(v), primed(v), double_primed(v)) for v in graph.vertices]
    demand = tuple(-N for _ in graph.vertices) + tuple(N + d for d in flow_spec.demand)
    lower = flow_spec.lower + tuple(0 for _ in graph.vertices)
    upper = flow_spec.upper + tuple(N for _ in graph.vertices)
    split = FlowPolytopeSpec(DirectedGraph(vertices, tuple(arcs)), demand, lower, upper, flow_spec.homogenized)
    logger.info(f"Bipartized {len(graph.vertices)} vertices and {len(graph.arcs)} arcs with N = {N}")
    return BipartizeResult(flow_spec, split, N)


def _relations_by_fiber(points: PointList, degree: int, relabel: Optional[Dict[int, int]] = None):
    fibers = set()
    for members in group_multisets(points, degree).values():
        if len(members) < 2:
            continue
        if relabel is not None:
            members = [tuple(sorted(relabel[i] for i in combo)) for combo in members]
        fibers.add(frozenset(members))
    return fibers


def verify_semigroup_iso(result: BipartizeResult, k_max: int = 3, cap: Optional[int] = None) -> Dict[str, Any]:
    """
    phi is a bijection on lattice points, carries the exact slack, is
    additive, and maps the fibers of every degree <= k_max onto those of the
    split polytope.
    """
    points = enumerate_lattice_points(result.original, cap)
    split_points = enumerate_lattice_points(result.spec, cap)
    errors: List[str] = []

    images = [result.phi(p) for p in points]
    for p, g in zip(points, images):
        problems = flow_violations(result.spec, g)
        if problems:
            errors.append(f"phi({list(p)}) leaves the split polytope: {problems[0]}")
        if result.phi_inverse(g) != p:
            errors.append(f"phi is not inverted at {list(p)}")
    if set(images) != set(split_points) or len(points) != len(split_points):
        errors.append(f"Lattice point counts {len(points)} and {len(split_points)} do not correspond")
        return {'success': False, 'points': len(points), 'split_points': len(split_points),
                'degrees': {}, 'error': errors[0]}

    for p in points[:8]:
        for q in points[:8]:
            total = tuple(x + y for x, y in zip(p, q))
            if tuple(a + b for a, b in zip(result.phi(p), result.phi(q))) != result.phi(total, k=2):
                errors.append(f"phi is not additive on {list(p)}, {list(q)}")

    relabel = {i: split_points.index(g) for i, g in enumerate(images)}
    degrees = {}
    for k in range(2, k_max + 1):
        mapped = _relations_by_fiber(points, k, relabel)
        split = _relations_by_fiber(split_points, k)
        count = sum(len(f) * (len(f) - 1) // 2 for f in mapped)
        split_count = sum(len(f) * (len(f) - 1) // 2 for f in split)
        degrees[k] = {'relations': count, 'split_relations': split_count, 'match': mapped == split}
        if mapped != split:
            errors.append(f"Relations of degree {k} do not correspond")

    report = {
        'success': not errors,
        'points': len(points),
        'split_points': len(split_points),
        'degrees': degrees,
    }
    if errors:
        report['error'] = errors[0]
    logger.info(f"Semigroup check on {len(points)} points up to degree {k_max}: "
                f"{'pass' if not errors else 'fail'}")
    return report
