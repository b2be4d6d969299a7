#!/usr/bin/env python3
"""
Term orders on exponent vectors over an ordered point list
Weight-then-graded-revlex comparison, rankings, subdivide-and-pull weights
and the regular subdivision a weight vector induces
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from scipy.spatial import ConvexHull

from flowcore import (
    PointList,
    PolytopeSpec,
    SpecError,
    affine_coordinates,
    as_flow_spec,
    enumerate_lattice_points,
)

logger = logging.getLogger(__name__)

LESS, EQUAL, GREATER = -1, 0, 1

# Anything with a .counts mapping (toric.ExponentVector), a mapping, or a dense vector
Exponents = Union[Mapping[int, int], Sequence[int], Any]


@dataclass(frozen=True)
class TermOrder:
    """
    a < b iff a.w < b.w, or equal weight and lower degree, or both equal and
    the rightmost nonzero entry of a - b is positive.

    variables lists point indices from most expensive to cheapest; revlex reads
    exponents from the end of that list.
    """

    points: PointList
    weights: Tuple[Fraction, ...]
    variables: Tuple[int, ...]
    _position: Dict[int, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        s = len(self.points)
        if len(self.weights) != s:
            raise SpecError(f"Expected {s} weights, got {len(self.weights)}")
        if sorted(self.variables) != list(range(s)):
            raise SpecError("Variable order is not a permutation of the points")
        if any(w < 0 for w in self.weights):
            raise SpecError("Weights must be nonnegative")
        object.__setattr__(self, "_position", {p: i for i, p in enumerate(self.variables)})

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def cheapest(self) -> int:
        """Point index of the revlex-smallest variable (pulled first)"""
        return self.variables[-1]

    def counts(self, a: Exponents) -> Dict[int, int]:
        """Sparse point-index -> multiplicity view of any accepted exponent form"""
        if hasattr(a, "counts"):
            a = a.counts
        if isinstance(a, Mapping):
            result = {int(i): int(m) for i, m in a.items() if m}
        else:
            if len(a) != self.size:
                raise SpecError(f"Exponent vector of length {len(a)} for {self.size} variables")
            result = {i: int(m) for i, m in enumerate(a) if m}
        for i in result:
            if not 0 <= i < self.size:
                raise SpecError(f"Variable index {i} outside 0..{self.size - 1}")
        return result

    def key(self, a: Exponents) -> Tuple:
        """Ascending sort key realizing the order"""
        counts = self.counts(a)
        weight = sum((self.weights[i] * m for i, m in counts.items()), Fraction(0))
        degree = sum(counts.values())
        dense = [0] * self.size
        for i, m in counts.items():
            dense[self._position[i]] = m
        return weight, degree, tuple(-m for m in reversed(dense))

    def position_key(self, dense: Sequence[int]) -> Tuple:
        """Sort key for a dense vector already laid out in variable order"""
        weight = sum((self.weights[self.variables[j]] * int(m) for j, m in enumerate(dense) if m), Fraction(0))
        return weight, int(sum(dense)), tuple(-int(m) for m in reversed(dense))

    def position_of(self, point_index: int) -> int:
        return self._position[point_index]


def compare(a: Exponents, b: Exponents, o: TermOrder) -> int:
    """LESS, EQUAL or GREATER"""
    ka, kb = o.key(a), o.key(b)
    if ka < kb:
        return LESS
    if ka > kb:
        return GREATER
    return EQUAL


def revlex_from_ranking(points: PointList, ranking: Sequence[int]) -> TermOrder:
    """
    Pure graded revlex; ranking lists point indices from most expensive to
    minimal, and the minimal element becomes the cheapest variable.
    """
    ranking = tuple(int(i) for i in ranking)
    if sorted(ranking) != list(range(len(points))):
        raise SpecError("Ranking is not a permutation of the point indices")
    return TermOrder(points, tuple(Fraction(0) for _ in points), ranking)


def squared_weights(spec: PolytopeSpec, points: PointList) -> Tuple[Fraction, ...]:
    """Heights sum of squared flow coordinates, the homogenizing coordinate excluded"""
    coordinates = as_flow_spec(spec).flow_coordinates()
    return tuple(Fraction(sum(int(p[a]) ** 2 for a in coordinates)) for p in points)


def subdivide_and_pull_order(spec: PolytopeSpec, pull_ranking: Sequence[int],
                             points: Optional[PointList] = None) -> TermOrder:
    """
    Weights sum of p_a^2 induce the cell subdivision; the revlex tiebreak from
    pull_ranking pulls its minimal element first.
    """
    if points is None:
        points = enumerate_lattice_points(spec)
    order = revlex_from_ranking(points, pull_ranking)
    return TermOrder(points, squared_weights(spec, points), order.variables)


def regular_subdivision(points: Sequence[Sequence[int]], weights: Sequence[Any]) -> List[Tuple[int, ...]]:
    """
    Maximal cells of the regular subdivision induced by lifting point i to
    height weights[i]: point sets of the lower facets of the lifted hull.
    """
    if len(points) == 0:
        return []
    coords = affine_coordinates(points)
    heights = [sympy.Rational(Fraction(w).numerator, Fraction(w).denominator) for w in weights]
    lifted_exact = [[int(x) for x in row] + [h] for row, h in zip(coords, heights)]
    base = lifted_exact[0]
    rank = sympy.Matrix([[x - b for x, b in zip(row, base)] for row in lifted_exact[1:]]).rank() \
        if len(lifted_exact) > 1 else 0
    if rank == coords.shape[1]:
        # heights are affine on all points: a single cell
        return [tuple(range(len(points)))]

    lifted = np.array([[float(x) for x in row] for row in lifted_exact])
    hull = ConvexHull(lifted)
    cells = set()
    for equation in hull.equations:
        normal, offset = equation[:-1], equation[-1]
        if normal[-1] >= -1e-9:
            continue
        on_facet = np.abs(lifted @ normal + offset) < 1e-7
        cells.add(tuple(int(i) for i in np.flatnonzero(on_facet)))
    return sorted(cells)


def ranking_to_json(order: TermOrder) -> List[int]:
    return list(order.variables)


def ranking_from_json(data: Any, points: PointList) -> Tuple[int, ...]:
    try:
        ranking = tuple(int(i) for i in data)
    except (TypeError, ValueError) as e:
        raise SpecError(f"Malformed ranking JSON: {e}")
    if sorted(ranking) != list(range(len(points))):
        raise SpecError("Ranking is not a permutation of the point indices")
    return ranking
