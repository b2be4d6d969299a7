#!/usr/bin/env python3
"""
Markov moves and fibers
Degree-2 and degree-3 moves, fiber enumeration and connectivity, the
distance-reduction step on 0/1 tables and a Metropolis fiber walk
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, combinations_with_replacement
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config import DEFAULT_FIBER_CAP
from flowcore import (
    Cell,
    CapExceededError,
    FlowPolytopeSpec,
    PointList,
    PolytopeSpec,
    SpecError,
    TransportationSpec,
    VerificationError,
    as_flow_spec,
    cell_points,
    enumerate_lattice_points,
    enumerate_nonempty_cells,
    flow_violations,
    make_cell,
    point_of,
)
from netflow import bvn_decompose
from order import TermOrder, revlex_from_ranking
from toric import Binomial, ExponentVector, group_multisets, make_binomial

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MoveSet:
    """Binomials of degree 2 and 3 over a point list"""

    moves: Tuple[Binomial, ...]
    points: PointList

    def __len__(self) -> int:
        return len(self.moves)

    def of_degree(self, degree: int) -> List[Binomial]:
        return [b for b in self.moves if b.degree == degree]

    def restrict(self, max_degree: int) -> "MoveSet":
        return MoveSet(tuple(b for b in self.moves if b.degree <= max_degree), self.points)

    @cached_property
    def signed(self) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
        """Each move in both directions as (out, into) index tuples"""
        signed = []
        for b in self.moves:
            out, into = tuple(b.lead.indices()), tuple(b.trail.indices())
            signed.append((out, into))
            signed.append((into, out))
        return signed

    @cached_property
    def replacements(self) -> Dict[Tuple[int, ...], List[Tuple[int, ...]]]:
        index: Dict[Tuple[int, ...], List[Tuple[int, ...]]] = {}
        for out, into in self.signed:
            index.setdefault(out, []).append(into)
        return index

    def to_json(self) -> Dict[str, Any]:
        return {
            "points": [list(p) for p in self.points],
            "moves": [b.to_json() for b in self.moves],
        }


@dataclass(frozen=True)
class Fiber:
    target: Tuple[int, ...]
    degree: int
    elements: Tuple[ExponentVector, ...]

    def __post_init__(self):
        if len(set(self.elements)) != len(self.elements):
            raise VerificationError("Fiber elements are not distinct")
        for u in self.elements:
            if u.image != self.target or u.degree != self.degree:
                raise VerificationError(f"Fiber element {u.to_json()} misses the target")

    def __len__(self) -> int:
        return len(self.elements)


def generate_moves_deg23(spec: PolytopeSpec, points: Optional[PointList] = None,
                         order: Optional[TermOrder] = None, max_degree: int = 3) -> MoveSet:
    """
    Within every maximal cell all relations u - v of degree 2 and 3, pooled
    with every degree-2 relation of the whole polytope. Common factors are
    cancelled and duplicates removed; max_degree=2 keeps quadrics only.
    """
    flow_spec = as_flow_spec(spec)
    if points is None:
        points = enumerate_lattice_points(flow_spec)
    if order is None:
        order = revlex_from_ranking(points, range(len(points)))
    if max_degree not in (2, 3):
        raise SpecError(f"Moves have degree 2 or 3, not {max_degree}")

    found: Dict[Tuple, Binomial] = {}

    def collect(fibers: Dict[Tuple[int, ...], List[Tuple[int, ...]]]):
        for members in fibers.values():
            for a, b in combinations(members, 2):
                move = make_binomial(ExponentVector.from_indices(a, points).counts,
                                     ExponentVector.from_indices(b, points).counts, order)
                if move is not None:
                    found.setdefault((move.lead.entries, move.trail.entries), move)

    for cell in enumerate_nonempty_cells(flow_spec, points):
        members = cell_points(cell, points)
        for degree in range(2, max_degree + 1):
            collect(group_multisets(points, degree, members))
    collect(group_multisets(points, 2))

    moves = tuple(sorted(found.values(), key=lambda b: (b.degree, b.lead.entries, b.trail.entries)))
    logger.info(f"{len(moves)} moves of degree <= {max_degree} on {len(points)} points")
    return MoveSet(moves, points)


def _as_target(target: Any) -> Tuple[int, ...]:
    return point_of(target)


class _FiberSearch:
    """Depth-first search over multisets of points, built once per point list"""

    def __init__(self, points: PointList):
        self.points = points
        self.coords = points.as_array()
        # low[p] / high[p]: coordinatewise range over points p..end
        self.low = np.minimum.accumulate(self.coords[::-1], axis=0)[::-1]
        self.high = np.maximum.accumulate(self.coords[::-1], axis=0)[::-1]

    def fiber(self, target: Tuple[int, ...], k: int, cap: int) -> Fiber:
        s = len(self.points)
        found: List[Tuple[int, ...]] = []
        chosen: List[int] = []

        def extend(start: int, remaining: int, residual: np.ndarray):
            if remaining == 0:
                if not residual.any():
                    if len(found) >= cap:
                        raise CapExceededError(f"Fiber has more than {cap} elements")
                    found.append(tuple(chosen))
                return
            for p in range(start, s):
                if np.any(residual < remaining * self.low[p]) or np.any(residual > remaining * self.high[p]):
                    continue
                chosen.append(p)
                extend(p, remaining - 1, residual - self.coords[p])
                chosen.pop()

        extend(0, k, np.asarray(target, dtype=np.int64))
        return Fiber(target, k, tuple(ExponentVector.from_indices(combo, self.points) for combo in found))


def enumerate_fiber(spec: PolytopeSpec, target: Any, k: int, points: Optional[PointList] = None,
                    cap: Optional[int] = None) -> Fiber:
    """All degree-k multisets of lattice points summing to target"""
    if k < 1:
        raise SpecError(f"Fiber degree must be positive, got {k}")
    if points is None:
        points = enumerate_lattice_points(spec)
    cap = DEFAULT_FIBER_CAP if cap is None else cap
    target = _as_target(target)
    if len(points) == 0:
        return Fiber(target, k, ())
    if len(target) != points.dimension:
        raise SpecError(f"Target has {len(target)} coordinates, expected {points.dimension}")
    return _FiberSearch(points).fiber(target, k, cap)


def scale_spec(spec: PolytopeSpec, k: int) -> FlowPolytopeSpec:
    flow_spec = as_flow_spec(spec)
    return FlowPolytopeSpec(
        flow_spec.graph,
        tuple(k * d for d in flow_spec.demand),
        tuple(k * lo for lo in flow_spec.lower),
        tuple(k * hi for hi in flow_spec.upper),
        flow_spec.homogenized,
    )


def enumerate_fibers(spec: PolytopeSpec, k: int, points: Optional[PointList] = None,
                     cap: Optional[int] = None) -> List[Fiber]:
    """
    Every fiber of degree k with more than one element.

    Targets are the lattice points of k*F; fibers above the cap are skipped
    with a warning.
    """
    if k < 1:
        raise SpecError(f"Fiber degree must be positive, got {k}")
    if points is None:
        points = enumerate_lattice_points(spec)
    if len(points) == 0:
        return []
    cap = DEFAULT_FIBER_CAP if cap is None else cap
    search = _FiberSearch(points)
    fibers = []
    skipped = 0
    for target in enumerate_lattice_points(scale_spec(spec, k)):
        try:
            fiber = search.fiber(tuple(target), k, cap)
        except CapExceededError:
            skipped += 1
            continue
        if len(fiber) > 1:
            fibers.append(fiber)
    if skipped:
        logger.warning(f"Skipped {skipped} fibers of degree {k} above the size cap")
    logger.info(f"{len(fibers)} nontrivial fibers of degree {k}")
    return fibers


def _apply(state: Dict[int, int], out: Sequence[int], into: Sequence[int]) -> Optional[Tuple[int, ...]]:
    counts = dict(state)
    for i in out:
        if counts.get(i, 0) == 0:
            return None
        counts[i] -= 1
    for i in into:
        counts[i] = counts.get(i, 0) + 1
    return tuple(sorted(i for i, m in counts.items() for _ in range(m)))


def fiber_connected(f: Fiber, moves: MoveSet) -> Dict[str, Any]:
    """
    Components of the fiber graph: u ~ w when w = u - a + b for a move a - b.

    Moves are looked up by sub-multisets of each element.
    """
    keys = {tuple(u.indices()): n for n, u in enumerate(f.elements)}
    replacements = moves.replacements
    sizes = sorted({len(out) for out in replacements})

    graph = nx.Graph()
    graph.add_nodes_from(range(len(f.elements)))
    for key, n in keys.items():
        state = dict(f.elements[n].counts)
        for size in sizes:
            for sub in set(combinations(key, size)):
                for into in replacements.get(sub, []):
                    neighbour = _apply(state, sub, into)
                    if neighbour not in keys:
                        raise VerificationError(f"Move leaves the fiber at element {key}")
                    graph.add_edge(n, keys[neighbour])

    components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])
    connected = len(components) <= 1
    report = {
        'success': connected,
        'connected': connected,
        'size': len(f.elements),
        'components': components,
    }
    if not connected:
        report['error'] = f"Fiber splits into {len(components)} components"
    logger.debug(f"Fiber of size {len(f.elements)}: {len(components)} components")
    return report


def hamming(M: Any, N: Any) -> int:
    a, b = np.asarray(M, dtype=np.int64), np.asarray(N, dtype=np.int64)
    if a.shape != b.shape:
        raise SpecError(f"Shape mismatch {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def support_distance(u: ExponentVector, v: ExponentVector, points: PointList) -> Tuple[int, Tuple[int, int]]:
    """Minimum Hamming distance over the supports, with the first realizing pair"""
    if not u.entries or not v.entries:
        raise SpecError("Support distance needs nonzero exponent vectors")
    best = None
    for i in u.support:
        for j in v.support:
            d = hamming(points[i], points[j])
            if best is None or d < best[0]:
                best = (d, (i, j))
    return best


_CROSS = ((0, 1), (1, 0))
_EXACT_M = ((1, 0), (0, 1))
_RELAXED_M = (((1, 1), (0, 1)), ((1, 0), (1, 1)))
_RELAXED_N = (((1, 1), (1, 0)), ((0, 1), (1, 1)))


def forbidden_pattern(M: Any, N: Any) -> Optional[Tuple[int, int, int, int, str]]:
    """
    First (i1, i2, j1, j2, variant) where M has the identity and N the swap
    on rows i1 < i2 and columns j1, j2 (variant "i"), or where one of the two
    has a single zero raised to one ("ii-N", "ii-M"). Indices are 0-based.
    """
    a, b = np.asarray(M, dtype=np.int64), np.asarray(N, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 2:
        raise SpecError("Forbidden pattern needs two matrices of one shape")
    rows, cols = a.shape

    def sub(x, i1, i2, j1, j2):
        return ((int(x[i1, j1]), int(x[i1, j2])), (int(x[i2, j1]), int(x[i2, j2])))

    quadruples = [(i1, i2, j1, j2) for i1 in range(rows) for i2 in range(i1 + 1, rows)
                  for j1 in range(cols) for j2 in range(cols) if j1 != j2]
    for variant, m_ok, n_ok in (("i", (_EXACT_M,), (_CROSS,)),
                                ("ii-N", (_EXACT_M,), _RELAXED_N),
                                ("ii-M", _RELAXED_M, (_CROSS,))):
        for q in quadruples:
            if sub(a, *q) in m_ok and sub(b, *q) in n_ok:
                return q + (variant,)
    return None


def _common_cell(spec: FlowPolytopeSpec, vectors: Sequence[Sequence[int]]) -> Cell:
    block = np.asarray(vectors, dtype=np.int64)
    lows, highs = block.min(axis=0), block.max(axis=0)
    if np.any(highs - lows > 1):
        raise SpecError("Support points do not lie in one cell")
    offset = [int(lo) if hi > lo or lo < bound else int(lo) - 1
              for lo, hi, bound in zip(lows, highs, spec.upper)]
    return make_cell(spec, offset)


def distance_reduce(u: ExponentVector, v: ExponentVector, spec: TransportationSpec,
                    points: Optional[PointList] = None) -> Dict[str, Any]:
    """
    One degree-3 rewrite of u towards v inside a cell.

    Needs M1 in supp(u), N1 in supp(v) realizing the support distance with an
    exact identity/swap pattern, and M2, M3 in u - M1 with M2 + M3 at least 1
    on the swapped positions and at most 1 on the identity positions. M1 is
    swapped into M~ and M1 + M2 + M3 - M~ is split into two cell points.
    """
    if not isinstance(spec, TransportationSpec):
        raise SpecError("Distance reduction works on transportation tables")
    if points is None:
        points = enumerate_lattice_points(spec)
    flow_spec = as_flow_spec(spec)

    def failure(message: str) -> Dict[str, Any]:
        logger.info(f"No reducible pattern: {message}")
        return {'success': False, 'result': None, 'error': f"No reducible pattern: {message}"}

    if u.image != v.image or u.degree != v.degree:
        return failure("u and v are not in one fiber")
    if u.degree < 3 or u == v:
        return failure("degree below 3 or u equals v")
    try:
        cell = _common_cell(flow_spec, [points[i] for i in u.support + v.support])
    except SpecError as e:
        return failure(str(e))
    offset = np.asarray(cell.offset, dtype=np.int64).reshape(spec.m, spec.n)

    def local(i: int) -> np.ndarray:
        return np.asarray(points[i], dtype=np.int64).reshape(spec.m, spec.n) - offset

    distance, _ = support_distance(u, v, points)
    for m1 in u.support:
        for n1 in v.support:
            if hamming(points[m1], points[n1]) != distance:
                continue
            witness = forbidden_pattern(local(m1), local(n1))
            if witness is None or witness[4] == "ii-M":
                continue
            i1, i2, j1, j2, _ = witness
            swap = np.zeros((spec.m, spec.n), dtype=np.int64)
            swap[i1, j1] = swap[i2, j2] = -1
            swap[i1, j2] = swap[i2, j1] = 1
            m_tilde = np.asarray(points[m1], dtype=np.int64).reshape(spec.m, spec.n) + swap
            rest = (u - ExponentVector.from_indices([m1], points)).indices()
            for a, b in combinations_with_replacement(sorted(set(rest)), 2):
                if a == b and rest.count(a) < 2:
                    continue
                pair = local(a) + local(b)
                if pair[i1, j2] < 1 or pair[i2, j1] < 1 or pair[i1, j1] > 1 or pair[i2, j2] > 1:
                    continue
                remainder = (np.asarray(points[m1]) + np.asarray(points[a]) + np.asarray(points[b])
                             - m_tilde.reshape(-1))
                if flow_violations(cell.spec, [int(x) for x in remainder], scale=2):
                    continue
                parts = bvn_decompose([int(x) for x in remainder], 2, cell.spec)
                removed = ExponentVector.from_indices([m1, a, b], points)
                added = ExponentVector.from_indices(
                    [points.index(point_of(m_tilde))] + [points.index(p.value) for p in parts.parts], points)
                result = u - removed + added
                after, _ = support_distance(result, v, points)
                if result.image != u.image or result.degree != u.degree:
                    raise VerificationError("Distance reduction left the fiber")
                if after > distance - 2:
                    raise VerificationError(f"Distance dropped from {distance} to {after} only")
                logger.debug(f"Distance reduced from {distance} to {after} at witness {witness}")
                return {
                    'success': True,
                    'result': result,
                    'removed': removed,
                    'added': added,
                    'witness': witness,
                    'distance_before': distance,
                    'distance_after': after,
                }
    return failure("no realizing pair admits the rewrite")


def _neighbours(state: Tuple[int, ...], signed) -> List[Tuple[int, ...]]:
    counts: Dict[int, int] = {}
    for i in state:
        counts[i] = counts.get(i, 0) + 1
    result = []
    for out, into in signed:
        moved = _apply(counts, out, into)
        if moved is not None:
            result.append(moved)
    return result


def fiber_walk(spec: PolytopeSpec, target: Any, k: int, moves: MoveSet, steps: int, seed: int,
               burn_in: int = 0, points: Optional[PointList] = None) -> Iterator[ExponentVector]:
    """
    Lazy Metropolis walk on the fiber started from the decomposition of target.

    Each step stays put with probability 1/2, otherwise proposes a uniform
    applicable signed move and accepts with min(1, |N(x)| / |N(y)|), which
    makes the walk uniform on the component of the start. Yields the state
    after every step past burn_in.
    """
    if points is None:
        points = moves.points if len(moves.points) else enumerate_lattice_points(spec)
    if steps < 0 or burn_in < 0:
        raise SpecError("Steps and burn-in must be nonnegative")
    rng = np.random.default_rng(seed)
    parts = bvn_decompose(_as_target(target), k, spec)
    state = tuple(sorted(points.index(p.value) for p in parts.parts))
    start = ExponentVector.from_indices(state, points)
    signed = moves.signed
    options = _neighbours(state, signed)

    for step in range(burn_in + steps):
        if options and rng.random() >= 0.5:
            proposal = options[int(rng.integers(len(options)))]
            proposal_options = _neighbours(proposal, signed)
            if rng.random() < min(1.0, len(options) / len(proposal_options)):
                state, options = proposal, proposal_options
        if step >= burn_in:
            current = ExponentVector.from_indices(state, points)
            if current.image != start.image:
                raise VerificationError("Walk left the fiber")
            yield current


def sample_fiber(spec: PolytopeSpec, target: Any, k: int, moves: MoveSet, steps: int, seed: int,
                 burn_in: int = 0, points: Optional[PointList] = None) -> ExponentVector:
    """Final state of fiber_walk; the start itself when steps is 0"""
    if points is None:
        points = moves.points if len(moves.points) else enumerate_lattice_points(spec)
    last = None
    for last in fiber_walk(spec, target, k, moves, steps, seed, burn_in, points):
        pass
    if last is None:
        parts = bvn_decompose(_as_target(target), k, spec)
        last = ExponentVector.from_indices([points.index(p.value) for p in parts.parts], points)
    return last
