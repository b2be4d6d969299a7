#!/usr/bin/env python3
"""
Pulling triangulations of cells
Unimodularity, minimal non-faces, the cross-cell non-face check and facet width
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from scipy.spatial import ConvexHull
from sympy.matrices.normalforms import smith_normal_form

from flowcore import (
    PointList,
    PolytopeSpec,
    SpecError,
    affine_coordinates,
    affine_rank,
    as_flow_spec,
    cell_points,
    enumerate_lattice_points,
    enumerate_nonempty_cells,
)
from order import TermOrder, regular_subdivision

logger = logging.getLogger(__name__)

FACET_TOLERANCE = 1e-7


@dataclass(frozen=True)
class Triangulation:
    """Maximal simplices as sorted tuples of indices into points"""

    points: PointList
    simplices: Tuple[Tuple[int, ...], ...]
    dimension: int

    def to_json(self) -> Dict[str, Any]:
        return {
            "dimension": self.dimension,
            "simplices": [list(s) for s in self.simplices],
        }


def normalized_volume(vertices: Sequence[Sequence[int]]) -> int:
    """
    Lattice volume of a simplex relative to the integer lattice of its affine span.

    This is the product of the invariant factors of the edge matrix.
    """
    if len(vertices) <= 1:
        return 1
    base = vertices[0]
    edges = sympy.Matrix([[int(x) - int(b) for x, b in zip(v, base)] for v in vertices[1:]])
    if edges.rank() != len(vertices) - 1:
        raise SpecError("Simplex vertices are affinely dependent")
    diagonal = smith_normal_form(edges, domain=sympy.ZZ)
    volume = 1
    for i in range(min(diagonal.shape)):
        if diagonal[i, i] != 0:
            volume *= abs(int(diagonal[i, i]))
    return volume


def _facets(points: PointList, subset: FrozenSet[int]) -> List[FrozenSet[int]]:
    members = sorted(subset)
    coords = affine_coordinates([points[i] for i in members])
    d = coords.shape[1]
    if d == 0:
        return []
    if d == 1:
        line = coords[:, 0]
        return [frozenset([members[int(np.argmin(line))]]), frozenset([members[int(np.argmax(line))]])]
    values = coords.astype(float)
    hull = ConvexHull(values)
    facets = set()
    for equation in hull.equations:
        on_plane = np.abs(values @ equation[:-1] + equation[-1]) < FACET_TOLERANCE
        facets.add(frozenset(members[int(j)] for j in np.flatnonzero(on_plane)))
    return sorted(facets, key=sorted)


def pulling_triangulation(points: PointList, pull_ranking: Sequence[int]) -> Triangulation:
    """
    Pull the ranking-minimal vertex and cone over the pulling triangulations
    of the facets avoiding it, recursively.

    pull_ranking lists indices into points from most expensive to minimal, the
    convention of order.revlex_from_ranking; its last entry is pulled first.
    """
    if sorted(int(i) for i in pull_ranking) != list(range(len(points))):
        raise SpecError("Pull ranking is not a permutation of the cell points")
    if len(points) == 0:
        return Triangulation(points, (), -1)
    priority = {int(p): r for r, p in enumerate(pull_ranking)}
    memo: Dict[FrozenSet[int], List[FrozenSet[int]]] = {}

    def pull(subset: FrozenSet[int]) -> List[FrozenSet[int]]:
        if subset in memo:
            return memo[subset]
        rank = affine_rank([points[i] for i in sorted(subset)])
        if len(subset) == rank + 1:
            result = [subset]
        else:
            apex = max(subset, key=lambda i: priority[i])
            result = []
            for facet in _facets(points, subset):
                if apex in facet:
                    continue
                result.extend(simplex | {apex} for simplex in pull(facet))
        memo[subset] = result
        return result

    everything = frozenset(range(len(points)))
    simplices = sorted({tuple(sorted(s)) for s in pull(everything)})
    dimension = affine_rank(list(points))
    logger.debug(f"Pulling triangulation with {len(simplices)} simplices in dimension {dimension}")
    return Triangulation(points, tuple(simplices), dimension)


def is_unimodular(t: Triangulation) -> bool:
    return all(normalized_volume([t.points[i] for i in s]) == 1 for s in t.simplices)


def total_volume(t: Triangulation) -> int:
    return sum(normalized_volume([t.points[i] for i in s]) for s in t.simplices)


def minimal_nonfaces(t: Triangulation, max_size: Optional[int] = None) -> List[Tuple[int, ...]]:
    """
    Inclusion-minimal vertex sets of size <= max_size lying in no simplex.

    Candidates of size k extend faces of size k-1 and must have every
    (k-1)-subset a face. max_size defaults to half the coordinate count,
    at least 2.
    """
    if max_size is None:
        max_size = max(2, t.points.dimension // 2)
    masks = [sum(1 << i for i in s) for s in t.simplices]

    def is_face(subset: Tuple[int, ...]) -> bool:
        mask = sum(1 << i for i in subset)
        return any(mask & s == mask for s in masks)

    nonfaces: List[Tuple[int, ...]] = []
    faces = set()
    for i in range(len(t.points)):
        if is_face((i,)):
            faces.add((i,))
        else:
            nonfaces.append((i,))
    size = 2
    while faces and size <= max_size:
        next_faces = set()
        for face in sorted(faces):
            for j in range(face[-1] + 1, len(t.points)):
                candidate = face + (j,)
                if not all(sub in faces for sub in combinations(candidate, size - 1)):
                    continue
                if is_face(candidate):
                    next_faces.add(candidate)
                else:
                    nonfaces.append(candidate)
        faces = next_faces
        size += 1
    return nonfaces


def cell_triangulation(points: PointList, members: Sequence[int], order: TermOrder) -> Triangulation:
    """Pulling triangulation of a cell under the revlex ranking of a global order"""
    local = PointList(tuple(points[i] for i in members))
    position = {p: k for k, p in enumerate(members)}
    ranking = [position[p] for p in order.variables if p in position]
    return pulling_triangulation(local, ranking)


def subdivide_and_pull_triangulation(spec: PolytopeSpec, order: TermOrder,
                                     points: Optional[PointList] = None) -> Tuple[Triangulation, List[List[int]]]:
    """Union of the cell-wise pulling triangulations, in global indices, and the cell point sets"""
    if points is None:
        points = order.points
    cells = enumerate_nonempty_cells(as_flow_spec(spec), points)
    memberships = [cell_points(cell, points) for cell in cells]
    simplices = set()
    for members in memberships:
        local = cell_triangulation(points, members, order)
        simplices.update(tuple(sorted(members[i] for i in s)) for s in local.simplices)
    dimension = affine_rank(list(points)) if len(points) else -1
    return Triangulation(points, tuple(sorted(simplices)), dimension), memberships


def cross_cell_nonface_check(spec: PolytopeSpec, order: TermOrder, max_size: Optional[int] = None) -> Dict[str, Any]:
    """
    Every minimal non-face of the subdivide-and-pull triangulation that is
    not inside a single cell must have exactly two elements.
    """
    points = order.points
    triangulation, memberships = subdivide_and_pull_triangulation(spec, order, points)
    if max_size is None:
        max_size = max(3, triangulation.dimension + 1)
    cell_sets = [set(m) for m in memberships]
    nonfaces = minimal_nonfaces(triangulation, max_size)
    cross = [nf for nf in nonfaces if not any(set(nf) <= c for c in cell_sets)]
    counterexamples = [list(nf) for nf in cross if len(nf) != 2]

    subdivision_matches = None
    if any(order.weights) and len(points) > 1:
        lifted = {tuple(c) for c in regular_subdivision(list(points), order.weights)}
        subdivision_matches = lifted == {tuple(m) for m in memberships}

    report = {
        'success': not counterexamples and subdivision_matches is not False,
        'cells': len(memberships),
        'simplices': len(triangulation.simplices),
        'cross_cell_nonfaces': [list(nf) for nf in cross],
        'counterexamples': counterexamples,
        'subdivision_matches': subdivision_matches,
    }
    if counterexamples:
        report['error'] = f"Cross-cell minimal non-faces of size != 2: {counterexamples}"
    elif subdivision_matches is False:
        report['error'] = "Weight subdivision differs from the cell subdivision"
    logger.info(f"Cross-cell check: {len(cross)} non-faces across {len(memberships)} cells")
    return report


def _spanning_subset(points: Sequence[Sequence[int]]) -> List[int]:
    chosen: List[int] = []
    rank = -1
    for i in range(len(points)):
        trial = chosen + [i]
        r = affine_rank([points[j] for j in trial])
        if r > rank:
            chosen, rank = trial, r
    return chosen


def facet_width(points: PointList) -> int:
    """
    Max over facets of the lattice width in the facet's primitive normal direction.

    A point's lattice distance to a facet is the volume ratio of the pyramid
    over a spanning simplex of the facet to that simplex.
    """
    if affine_rank(list(points)) == 0:
        return 0
    width = 0
    for facet in _facets(points, frozenset(range(len(points)))):
        members = sorted(facet)
        base = [points[members[i]] for i in _spanning_subset([points[m] for m in members])]
        base_volume = normalized_volume(base)
        distance = max(normalized_volume(base + [p]) // base_volume for p in points if p not in base
                       and affine_rank(base + [p]) == len(base))
        width = max(width, distance)
    return width


def enumerate_and_triangulate(spec: PolytopeSpec, order: TermOrder) -> Dict[str, Any]:
    """Per-cell triangulations with unimodularity flags, for the CLI"""
    flow_spec = as_flow_spec(spec)
    points = order.points if len(order.points) else enumerate_lattice_points(flow_spec)
    cells = enumerate_nonempty_cells(flow_spec, points)
    result = []
    for cell in cells:
        members = cell_points(cell, points)
        t = cell_triangulation(points, members, order)
        result.append({
            "offset": list(cell.offset),
            "points": members,
            "simplices": [[members[i] for i in s] for s in t.simplices],
            "unimodular": is_unimodular(t),
            "nonfaces": [[members[i] for i in nf] for nf in minimal_nonfaces(t)],
        })
    return {'success': all(c["unimodular"] for c in result), 'cells': result}
