#!/usr/bin/env python3
"""
Integral flows
Feasibility by reduction to max-flow and the decomposition of a flow of
k*F into k flows of F
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

from flowcore import (
    FlowPolytopeSpec,
    IntegerFlow,
    PolytopeSpec,
    SpecError,
    VerificationError,
    as_flow_spec,
    flow_violations,
)

logger = logging.getLogger(__name__)

SOURCE = ("super", "source")
SINK = ("super", "sink")


@dataclass(frozen=True)
class Decomposition:
    """k integral flows of one spec summing to a flow of k*F"""

    parts: Tuple[IntegerFlow, ...]

    @property
    def total(self) -> Tuple[int, ...]:
        return tuple(sum(values) for values in zip(*(part.value for part in self.parts)))


def _residual_network(spec: FlowPolytopeSpec) -> Tuple[nx.DiGraph, Dict[Any, int]]:
    """
    Eliminate lower bounds and attach a super source and sink.

    Every non-loop arc becomes a node of its own between tail and head so that
    parallel arcs survive in a simple digraph. Returns the network and the
    adjusted demands b_v = d_v - (lower inflow - lower outflow).
    """
    network = nx.DiGraph()
    network.add_node(SOURCE)
    for v in spec.graph.vertices:
        network.add_node(("v", v))
    network.add_node(SINK)
    adjusted = dict(zip(spec.graph.vertices, spec.demand))
    for arc, lo, hi in zip(spec.graph.arcs, spec.lower, spec.upper):
        if arc.is_loop:
            continue
        adjusted[arc.head] -= lo
        adjusted[arc.tail] += lo
        node = ("a", arc.id)
        network.add_edge(("v", arc.tail), node, capacity=hi - lo)
        network.add_edge(node, ("v", arc.head), capacity=hi - lo)
    for v in spec.graph.vertices:
        b = adjusted[v]
        if b < 0:
            network.add_edge(SOURCE, ("v", v), capacity=-b)
        elif b > 0:
            network.add_edge(("v", v), SINK, capacity=b)
    return network, adjusted


def feasible_integral_flow(spec: PolytopeSpec) -> Dict[str, Any]:
    """
    Find an integral flow or certify that none exists.

    Returns a report with 'success', 'flow' (IntegerFlow or None) and, when
    infeasible, 'cut' (vertices on the source side of a minimum cut) and
    'deficit' (demand that cannot be routed).
    """
    flow_spec = as_flow_spec(spec)
    network, adjusted = _residual_network(flow_spec)
    required = sum(b for b in adjusted.values() if b > 0)

    if required == 0:
        flow_value, flow_dict = 0, {}
    else:
        flow_value, flow_dict = nx.maximum_flow(network, SOURCE, SINK, flow_func=edmonds_karp)

    if flow_value < required:
        _, (source_side, _) = nx.minimum_cut(network, SOURCE, SINK, flow_func=edmonds_karp)
        cut = sorted(node[1] for node in source_side if node[0] == "v")
        logger.info(f"Spec infeasible: {required - flow_value} units of demand cannot be routed")
        return {
            'success': False,
            'flow': None,
            'cut': cut,
            'deficit': required - flow_value,
            'error': f"No integral flow; cut {cut} is short by {required - flow_value}",
        }

    values = []
    for arc, lo in zip(flow_spec.graph.arcs, flow_spec.lower):
        if arc.is_loop:
            values.append(lo)
        else:
            values.append(lo + flow_dict.get(("v", arc.tail), {}).get(("a", arc.id), 0))
    return {'success': True, 'flow': IntegerFlow(flow_spec, tuple(values)), 'cut': [], 'deficit': 0}


def bvn_decompose(f: Sequence[int], k: int, spec: PolytopeSpec) -> Decomposition:
    """
    Split an integral point of k*F into k integral points of F.

    Each step solves a feasibility problem in the window
    [max(l, f - (k-1)u), min(u, f - (k-1)l)], which keeps the residual in
    (k-1)*F; extraction order is fixed, so the result is deterministic.
    """
    flow_spec = as_flow_spec(spec)
    if k < 1:
        raise SpecError(f"k must be positive, got {k}")
    residual = [int(x) for x in (f.value if isinstance(f, IntegerFlow) else f)]
    problems = flow_violations(flow_spec, residual, scale=k)
    if problems:
        raise SpecError(f"Flow is not in {k}*F: {problems[0]}")

    parts: List[IntegerFlow] = []
    for remaining in range(k, 0, -1):
        rest = remaining - 1
        lower = tuple(max(lo, x - rest * hi) for x, lo, hi in zip(residual, flow_spec.lower, flow_spec.upper))
        upper = tuple(min(hi, x - rest * lo) for x, lo, hi in zip(residual, flow_spec.lower, flow_spec.upper))
        window = FlowPolytopeSpec(flow_spec.graph, flow_spec.demand, lower, upper, flow_spec.homogenized)
        report = feasible_integral_flow(window)
        if not report['success']:
            raise VerificationError(f"Extraction window empty with {remaining} parts left: {report['error']}")
        part = report['flow'].value
        parts.append(IntegerFlow(flow_spec, part))
        residual = [x - y for x, y in zip(residual, part)]
        if rest and flow_violations(flow_spec, residual, scale=rest):
            raise VerificationError(f"Residual left {rest}*F after extraction")

    if any(residual):
        raise VerificationError("Parts do not sum to the input flow")
    return Decomposition(tuple(parts))
