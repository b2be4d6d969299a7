#!/usr/bin/env python3
"""
Acceptance suite
Property checks behind `verify-all`; each criterion returns a report dict
"""

import logging
import time
from itertools import product
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from config import DEFAULT_FIBER_CAP, DEFAULT_SEED, DEFAULT_TIME_CAP_SECONDS
from flowcore import (
    Arc,
    DirectedGraph,
    FlowPolytopeSpec,
    PointList,
    TransportationSpec,
    affine_rank,
    as_flow_spec,
    birkhoff_spec,
    cell_points,
    enumerate_lattice_points,
    enumerate_nonempty_cells,
    flow_violations,
    incidence_matrix,
)
from markov import enumerate_fiber, enumerate_fibers, fiber_connected, generate_moves_deg23
from netflow import bvn_decompose
from order import revlex_from_ranking, subdivide_and_pull_order
from toric import buchberger, initial_ideal_minimal_generators, max_degree, relation_census
from transform import bipartize, verify_semigroup_iso
from triangulate import cross_cell_nonface_check, is_unimodular, minimal_nonfaces, pulling_triangulation
from worstcase import birkhoff_family, covering_certificate, smooth_shift, transport_family

logger = logging.getLogger(__name__)

# Column of the 1 in each row of A_1..A_3, B_1..B_3 of the B_6 example
BIRKHOFF_6_FAMILY = {
    "A_1": (0, 4, 5, 1, 3, 2),
    "A_2": (3, 1, 5, 0, 2, 4),
    "A_3": (3, 4, 2, 5, 0, 1),
    "B_1": (4, 0, 5, 3, 1, 2),
    "B_2": (3, 5, 1, 0, 4, 2),
    "B_3": (2, 3, 4, 0, 1, 5),
}


def _report(name: str, failures: List[Any], **details) -> Dict[str, Any]:
    report = {'name': name, 'success': not failures, 'failures': failures[:20], **details}
    if failures:
        report['error'] = f"{name}: {len(failures)} failures, first {failures[0]}"
    return report


def random_transportation_spec(rng: np.random.Generator, m: int, n: int, entry_max: int) -> TransportationSpec:
    """Margins of a random table with entries 0..entry_max, redrawn until all margins are positive"""
    while True:
        table = rng.integers(0, entry_max + 1, size=(m, n))
        rows, cols = table.sum(axis=1), table.sum(axis=0)
        if rows.min() > 0 and cols.min() > 0:
            return TransportationSpec(tuple(int(r) for r in rows), tuple(int(c) for c in cols))


def random_flow_spec(rng: np.random.Generator, vertex_count: int, arc_count: int, width: int = 2) -> FlowPolytopeSpec:
    """Random digraph with bounds l <= u <= l + width and the demand of a random feasible flow"""
    vertices = tuple(f"v{i}" for i in range(vertex_count))
    arcs, lower, upper, flow = [], [], [], []
    for a in range(arc_count):
        tail, head = rng.choice(vertex_count, size=2, replace=False)
        lo = int(rng.integers(0, 2))
        hi = lo + int(rng.integers(0, width + 1))
        arcs.append(Arc(f"a{a}", vertices[tail], vertices[head]))
        lower.append(lo)
        upper.append(hi)
        flow.append(int(rng.integers(lo, hi + 1)))
    graph = DirectedGraph(vertices, tuple(arcs))
    demand = tuple(int(x) for x in incidence_matrix(graph) @ np.asarray(flow, dtype=np.int64))
    return FlowPolytopeSpec(graph, demand, tuple(lower), tuple(upper))


def _margins(size: int, margin_max: int):
    return [t for t in product(range(1, margin_max + 1), repeat=size) if list(t) == sorted(t)]


def moves_connect_fibers(sizes=((2, 2), (2, 3), (3, 3)), margin_max: int = 3, k_max: int = 4,
                              fiber_cap: int = DEFAULT_FIBER_CAP) -> Dict[str, Any]:
    """Every fiber of degree <= k_max is connected by degree-2 and degree-3 moves"""
    failures, specs, fibers = [], 0, 0
    for m, n in sizes:
        for rows in _margins(m, margin_max):
            for cols in _margins(n, margin_max):
                if sum(rows) != sum(cols):
                    continue
                spec = TransportationSpec(rows, cols)
                points = enumerate_lattice_points(spec)
                moves = generate_moves_deg23(spec, points)
                specs += 1
                for k in range(2, k_max + 1):
                    for fiber in enumerate_fibers(spec, k, points, fiber_cap):
                        fibers += 1
                        if not fiber_connected(fiber, moves)['connected']:
                            failures.append({'rows': rows, 'cols': cols, 'k': k, 'target': list(fiber.target)})
    return _report("degree 2 and 3 connectivity", failures, specs=specs, fibers=fibers)


def degree3_necessity() -> Dict[str, Any]:
    spec = birkhoff_spec(3)
    points = enumerate_lattice_points(spec)
    fiber = enumerate_fiber(spec, np.ones((3, 3), dtype=np.int64), 3, points)
    quadrics = fiber_connected(fiber, generate_moves_deg23(spec, points, max_degree=2))
    full = fiber_connected(fiber, generate_moves_deg23(spec, points))
    failures = []
    if quadrics['connected'] or len(quadrics['components']) != 2:
        failures.append(f"degree-2 moves give {len(quadrics['components'])} components")
    if not full['connected']:
        failures.append("degree-3 move does not connect the fiber")
    return _report("degree 3 necessity", failures, fiber_size=len(fiber),
                   components_degree2=len(quadrics['components']))


def birkhoff_example() -> Dict[str, Any]:
    inst = birkhoff_family(3)
    failures = []
    for name, columns in BIRKHOFF_6_FAMILY.items():
        expected = np.zeros((6, 6), dtype=np.int64)
        expected[np.arange(6), list(columns)] = 1
        if not np.array_equal(inst.matrices[name], expected):
            failures.append(f"{name} differs from the displayed matrix")
    if inst.relation.lead.degree != 6:
        failures.append(f"lead degree {inst.relation.lead.degree}")
    certificate = covering_certificate(inst)
    if not certificate['success']:
        failures.append(certificate['error'])
    return _report("B_6 example", failures, degree=inst.relation.lead.degree)


def transportation_example() -> Dict[str, Any]:
    inst = transport_family(6, 6)
    failures = []
    if inst.relation.lead.degree != 12:
        failures.append(f"lead degree {inst.relation.lead.degree}")
    shifted = smooth_shift(inst)
    if shifted.spec.rows != (39,) * 6 or shifted.spec.cols != (3, 3, 3, 3, 3, 219):
        failures.append(f"shifted margins {shifted.spec.rows} / {shifted.spec.cols}")
    for candidate in (inst, shifted):
        certificate = covering_certificate(candidate)
        if not certificate['success']:
            failures.append(certificate['error'])
    return _report("6x6 transportation example", failures, degree=inst.relation.lead.degree,
                   shifted_rows=list(shifted.spec.rows), shifted_cols=list(shifted.spec.cols))


def _random_cell(rng: np.random.Generator, m: int, n: int, entry_max: int,
                 max_points: Optional[int] = None) -> Tuple[TransportationSpec, PointList, List[int]]:
    while True:
        spec = random_transportation_spec(rng, m, n, entry_max)
        points = enumerate_lattice_points(spec)
        cells = enumerate_nonempty_cells(spec, points)
        members = cell_points(cells[int(rng.integers(len(cells)))], points)
        if len(members) >= 2 and (max_points is None or len(members) <= max_points):
            return spec, points, members


def _small_polytope(rng: np.random.Generator, max_points: int) -> Tuple[TransportationSpec, PointList]:
    """A random 2x3 or 3x3 transportation polytope with few lattice points"""
    while True:
        m, entry_max = (2, 2) if rng.random() < 0.5 else (3, 1)
        spec = random_transportation_spec(rng, m, 3, entry_max)
        points = enumerate_lattice_points(spec)
        if 2 <= len(points) <= max_points:
            return spec, points


def gb_degree_bound(samples: int = 30, seed: int = DEFAULT_SEED, time_cap: float = DEFAULT_TIME_CAP_SECONDS,
                    max_points: int = 14) -> Dict[str, Any]:
    """Reduced bases of random cells stay within floor(mn/2) and finish within the time cap"""
    rng = np.random.default_rng(seed)
    failures, degrees = [], []
    for sample in range(samples):
        m, n = (3, 3) if sample % 2 == 0 else (3, 4)
        spec, points, members = _random_cell(rng, m, n, 2, max_points)
        local = PointList(tuple(points[i] for i in members))
        ranking = [int(i) for i in rng.permutation(len(local))]
        started = time.monotonic()
        gb = buchberger(local, revlex_from_ranking(local, ranking), time_cap=time_cap)
        if gb.truncated:
            failures.append({'rows': spec.rows, 'cols': spec.cols, 'reason': gb.reason})
            continue
        degree = max_degree(gb)
        degrees.append(degree)
        if degree > m * n // 2:
            failures.append({'rows': spec.rows, 'cols': spec.cols, 'degree': degree})
        logger.debug(f"Cell of {len(local)} points: degree {degree} in {time.monotonic() - started:.2f}s")
    return _report("Groebner degree bound", failures, samples=samples, max_degree=max(degrees, default=0))


def nonface_correspondence(samples: int = 20, seed: int = DEFAULT_SEED, max_points: int = 12,
                           max_polytope_points: int = 20) -> Dict[str, Any]:
    """
    Minimal non-faces of pulling triangulations of random cells are the
    initial ideal generators, and non-faces of subdivide-and-pull
    triangulations of random polytopes that cross cells are edges.
    """
    rng = np.random.default_rng(seed)
    failures = []
    for _ in range(samples):
        spec, points = _small_polytope(rng, max_polytope_points)
        ranking = [int(i) for i in rng.permutation(len(points))]
        cross = cross_cell_nonface_check(spec, subdivide_and_pull_order(spec, ranking, points))
        if not cross['success']:
            failures.append({'rows': spec.rows, 'cols': spec.cols, 'problem': cross['error']})

        spec, points, members = _random_cell(rng, 3, 3, 2, max_points)
        local = PointList(tuple(points[i] for i in members))
        ranking = [int(i) for i in rng.permutation(len(local))]
        triangulation = pulling_triangulation(local, ranking)
        if not is_unimodular(triangulation):
            failures.append({'rows': spec.rows, 'cols': spec.cols, 'problem': 'not unimodular'})
            continue
        gb = buchberger(local, revlex_from_ranking(local, ranking))
        leads = initial_ideal_minimal_generators(gb)
        size = max([lead.degree for lead in leads] + [2])
        nonfaces = set(minimal_nonfaces(triangulation, size))
        generators = set()
        for lead in leads:
            if any(mult > 1 for _, mult in lead.entries):
                failures.append({'rows': spec.rows, 'cols': spec.cols, 'problem': 'non-squarefree lead'})
            generators.add(lead.support)
        if generators != nonfaces:
            failures.append({'rows': spec.rows, 'cols': spec.cols, 'problem': 'correspondence'})
    return _report("non-face correspondence", failures, samples=samples)


def b3_sharpness(samples: int = 100, seed: int = DEFAULT_SEED) -> Dict[str, Any]:
    rng = np.random.default_rng(seed)
    spec = birkhoff_spec(3)
    points = enumerate_lattice_points(spec)
    parity = {}
    for i, p in enumerate(points):
        det = int(round(np.linalg.det(np.asarray(p).reshape(3, 3))))
        parity.setdefault(det, set()).add(i)
    sides = {frozenset(parity[1]), frozenset(parity[-1])}
    failures = []
    for _ in range(samples):
        ranking = [int(i) for i in rng.permutation(len(points))]
        gb = buchberger(points, revlex_from_ranking(points, ranking))
        found = any({frozenset(b.lead.support), frozenset(b.trail.support)} == sides for b in gb.elements)
        if max_degree(gb) != 3 or not found:
            failures.append(ranking)
    return _report("B_3 sharpness", failures, samples=samples)


def bvn_roundtrip(samples: int = 200, seed: int = DEFAULT_SEED) -> Dict[str, Any]:
    rng = np.random.default_rng(seed)
    failures = []
    done = 0
    while done < samples:
        if done % 2 == 0:
            spec = random_transportation_spec(rng, int(rng.integers(2, 4)), int(rng.integers(2, 4)), 2)
        else:
            spec = random_flow_spec(rng, int(rng.integers(3, 5)), int(rng.integers(3, 7)))
        points = enumerate_lattice_points(spec)
        if len(points) == 0:
            continue
        k = int(rng.integers(1, 5))
        chosen = [points[int(i)] for i in rng.integers(len(points), size=k)]
        total = tuple(int(sum(column)) for column in zip(*chosen))
        decomposition = bvn_decompose(total, k, spec)
        flow_spec = as_flow_spec(spec)
        if decomposition.total != total or any(flow_violations(flow_spec, p.value) for p in decomposition.parts):
            failures.append({'total': list(total), 'k': k})
        done += 1
    return _report("decomposition round trip", failures, samples=samples)


def bipartization_fidelity(samples: int = 20, seed: int = DEFAULT_SEED, max_points: int = 25) -> Dict[str, Any]:
    rng = np.random.default_rng(seed)
    failures = []
    done = 0
    while done < samples:
        spec = random_flow_spec(rng, int(rng.integers(2, 4)), int(rng.integers(2, 5)), width=1)
        if not 1 <= len(enumerate_lattice_points(spec)) <= max_points:
            continue
        report = verify_semigroup_iso(bipartize(spec), k_max=3)
        if not report['success']:
            failures.append(report['error'])
        done += 1
    return _report("bipartization fidelity", failures, samples=samples)


def _b3_signature(points: PointList) -> bool:
    """Six points of dimension 4 without quadrics: the configuration of B_3"""
    return len(points) == 6 and affine_rank(list(points)) == 4 and not relation_census(points, 2)


def degree2_connectivity(margin_max: int = 3, k_max: int = 4,
                         fiber_cap: int = DEFAULT_FIBER_CAP) -> Dict[str, Any]:
    """3x3 transportation polytopes other than B_3 are connected by quadrics"""
    failures, specs, fibers = [], 0, 0
    for rows in _margins(3, margin_max):
        for cols in _margins(3, margin_max):
            if sum(rows) != sum(cols):
                continue
            spec = TransportationSpec(rows, cols)
            points = enumerate_lattice_points(spec)
            if _b3_signature(points):
                continue
            quadrics = generate_moves_deg23(spec, points, max_degree=2)
            specs += 1
            for k in range(2, k_max + 1):
                for fiber in enumerate_fibers(spec, k, points, fiber_cap):
                    fibers += 1
                    if not fiber_connected(fiber, quadrics)['connected']:
                        failures.append({'rows': rows, 'cols': cols, 'k': k, 'target': list(fiber.target)})
    return _report("degree 2 connectivity", failures, specs=specs, fibers=fibers)


def run_all(seed: int = DEFAULT_SEED, quick: bool = False) -> List[Dict[str, Any]]:
    """Run every criterion; quick shrinks sample sizes and margins"""
    scale = 5 if quick else 1
    checks: List[Tuple[str, Callable[[], Dict[str, Any]]]] = [
        ("1", lambda: moves_connect_fibers(margin_max=2 if quick else 3, k_max=3 if quick else 4)),
        ("2", degree3_necessity),
        ("3", birkhoff_example),
        ("4", transportation_example),
        ("5", lambda: gb_degree_bound(samples=30 // scale, seed=seed)),
        ("6", lambda: nonface_correspondence(samples=20 // scale, seed=seed)),
        ("7", lambda: b3_sharpness(samples=100 // scale, seed=seed)),
        ("8", lambda: bvn_roundtrip(samples=200 // scale, seed=seed)),
        ("9", lambda: bipartization_fidelity(samples=20 // scale, seed=seed)),
        ("10", lambda: degree2_connectivity(margin_max=2 if quick else 3, k_max=3 if quick else 4)),
    ]
    reports = []
    for criterion, check in checks:
        started = time.monotonic()
        report = check()
        report['criterion'] = criterion
        seconds = time.monotonic() - started
        status = "pass" if report['success'] else "FAIL"
        logger.info(f"Criterion {criterion} ({report['name']}): {status} in {seconds:.1f}s")
        reports.append(report)
    return reports
