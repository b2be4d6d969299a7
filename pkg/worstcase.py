#!/usr/bin/env python3
"""
High-degree Groebner families
The degree-2n relation on the Birkhoff polytope B_2n, the degree m(n-2)/2
relation on m x n transportation polytopes, the smooth shift, and the
covering certificate for minimal generators of the initial ideal
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from flowcore import (
    PointList,
    PolytopeSpec,
    SpecError,
    TransportationSpec,
    VerificationError,
    as_flow_spec,
    birkhoff_spec,
    complement_degree_bound,
    enumerate_lattice_points,
    enumerate_nonempty_cells,
    flow_violations,
    point_of,
)
from markov import enumerate_fiber
from netflow import bvn_decompose
from order import revlex_from_ranking
from toric import Binomial, ExponentVector, make_binomial

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WorstCaseInstance:
    """
    A relation among lattice points of a transportation polytope.

    points holds the support matrices laid out so that their natural order is
    the ranking: others first, then the family, the minimal element last.
    offset is subtracted before reading matrices as 0/1 tables.
    """

    spec: TransportationSpec
    points: PointList
    relation: Binomial
    family: Tuple[int, ...]
    minimal: int
    degree: int
    offset: Tuple[int, ...]
    matrices: Dict[str, np.ndarray] = field(compare=False, hash=False)

    @property
    def ranking(self) -> Tuple[int, ...]:
        return tuple(range(len(self.points)))

    def table(self, index: int) -> np.ndarray:
        return np.asarray(self.points[index], dtype=np.int64).reshape(self.spec.m, self.spec.n)

    def to_json(self) -> Dict[str, Any]:
        return {
            "rows": list(self.spec.rows),
            "cols": list(self.spec.cols),
            "degree": self.degree,
            "points": [self.table(i).tolist() for i in range(len(self.points))],
            "family": list(self.family),
            "minimal": self.minimal,
            "lead": self.relation.lead.to_json(),
            "trail": self.relation.trail.to_json(),
            "ranking": list(self.ranking),
            "matrices": {name: m.tolist() for name, m in sorted(self.matrices.items())},
        }


def _unit(rows: int, cols: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((rows, cols), dtype=np.int64)
    m[i, j] = 1
    return m


def _blocks(a, b, c, d) -> np.ndarray:
    return np.block([[a, b], [c, d]]).astype(np.int64)


def _assemble(spec: TransportationSpec, family: List[np.ndarray], others: List[np.ndarray],
              minimal: np.ndarray, trail: List[np.ndarray], degree: int,
              matrices: Dict[str, np.ndarray], offset: Optional[np.ndarray] = None) -> WorstCaseInstance:
    """Lay out the support, orient the relation and check the identities"""
    layout: List[Tuple[int, ...]] = []
    for m in others:
        if point_of(m) not in layout:
            layout.append(point_of(m))
    first_family = len(layout)
    layout.extend(point_of(m) for m in family)
    layout.append(point_of(minimal))
    points = PointList(tuple(layout))

    flow_spec = as_flow_spec(spec)
    for p in points:
        problems = flow_violations(flow_spec, p)
        if problems:
            raise VerificationError(f"Support matrix is not a lattice point: {problems[0]}")

    family_idx = tuple(range(first_family, first_family + len(family)))
    lead = ExponentVector.from_indices(family_idx, points)
    trail_side = ExponentVector.from_indices([points.index(point_of(m)) for m in trail], points)
    if lead.degree != degree or trail_side.degree != degree:
        raise VerificationError(f"Relation sides have degrees {lead.degree} and {trail_side.degree}, "
                                f"expected {degree}")
    if lead.image != trail_side.image:
        raise VerificationError("Relation sides have different sums")

    order = revlex_from_ranking(points, range(len(points)))
    relation = make_binomial(lead.counts, trail_side.counts, order)
    if relation is None or relation.lead != lead or relation.trail != trail_side:
        raise VerificationError("Family side is not the initial term under the emitted ranking")
    if offset is None:
        offset = np.zeros(spec.m * spec.n, dtype=np.int64)
    return WorstCaseInstance(spec, points, relation, family_idx, len(points) - 1, degree,
                             point_of(offset), matrices)


def birkhoff_blocks(n: int) -> Dict[str, List[np.ndarray]]:
    """M^i, M~^i, N^i, N~^i for i = 0..n-1 (0-based, cyclic i+1)"""
    M = [_unit(n, n, i, i) for i in range(n)]
    M_tilde = [_unit(n, n, (i + 1) % n, i) for i in range(n)]
    N = [np.eye(n, dtype=np.int64) - M[i] for i in range(n)]
    N_tilde = []
    for i in range(n):
        # drop row i+1 and column i, pair the remaining rows and columns in order
        rows = [r for r in range(n) if r != (i + 1) % n]
        cols = [c for c in range(n) if c != i]
        block = np.zeros((n, n), dtype=np.int64)
        for r, c in zip(rows, cols):
            block[r, c] = 1
        N_tilde.append(block)
    return {"M": M, "M_tilde": M_tilde, "N": N, "N_tilde": N_tilde}


def birkhoff_sum_blocks(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """J_n and S_n of the right-hand side"""
    J = np.eye(n, dtype=np.int64) + np.roll(np.eye(n, dtype=np.int64), 1, axis=0)
    S = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        S[i, i] = 2 * n - 3 if i in (0, n - 1) else 2 * n - 4
        if i + 1 < n:
            S[i, i + 1] = S[i + 1, i] = 1
    return J, S


def birkhoff_family(n: int) -> WorstCaseInstance:
    """
    Sum of A_i + B_i over i equals I_2n plus 2n-1 permutation matrices.

    A_i = [[M^i, N^i], [N~^i, M~^i]] and B_i = [[M~^i, N~^i], [N^i, M^i]];
    the family side leads in revlex with I_2n minimal and the family next.
    """
    if n < 2:
        raise SpecError(f"Birkhoff family needs n >= 2, got {n}")
    b = birkhoff_blocks(n)
    A = [_blocks(b["M"][i], b["N"][i], b["N_tilde"][i], b["M_tilde"][i]) for i in range(n)]
    B = [_blocks(b["M_tilde"][i], b["N_tilde"][i], b["N"][i], b["M"][i]) for i in range(n)]
    for m in A + B:
        if not (np.all(m.sum(axis=0) == 1) and np.all(m.sum(axis=1) == 1)):
            raise VerificationError("Family member is not a permutation matrix")

    total = sum(A) + sum(B)
    J, S = birkhoff_sum_blocks(n)
    expected = _blocks(J, S, S, J)
    if not np.array_equal(total, expected):
        raise VerificationError("Family sum differs from [[J, S], [S, J]]")

    size = 2 * n
    spec = birkhoff_spec(size)
    identity = np.eye(size, dtype=np.int64)
    parts = bvn_decompose(point_of(total - identity), size - 1, spec)
    permutations = [np.asarray(p.value, dtype=np.int64).reshape(size, size) for p in parts.parts]

    matrices = {"J": J, "S": S, "total": total}
    for i in range(n):
        matrices[f"A_{i + 1}"] = A[i]
        matrices[f"B_{i + 1}"] = B[i]
    for j, p in enumerate(permutations):
        matrices[f"M_{j + 1}"] = p
    inst = _assemble(spec, A + B, permutations, identity, [identity] + permutations, size, matrices)
    logger.info(f"Birkhoff family for B_{size}: degree {size}, {len(inst.points)} support matrices")
    return inst


def transport_family(m: int, n: int) -> WorstCaseInstance:
    """
    Sum of A_ij + B_ij over i <= m/2, 2 <= j <= n/2 equals
    (n/2 - 2) C + ((m(n-2) - n)/2 + 1) D + E on margins (n/2, ...) / (m/2, ...).
    """
    if m < 2 or n < 4 or m % 2 or n % 2:
        raise SpecError(f"Transportation family needs m, n even with m >= 2 and n >= 4, got {m}x{n}")
    h, w = m // 2, n // 2
    ones = np.ones((h, w), dtype=np.int64)
    zeros = np.zeros((h, w), dtype=np.int64)

    def one_at(i, j):
        return _unit(h, w, i, j)

    def zero_at(i, j):
        return ones - _unit(h, w, i, j)

    family, names = [], []
    for i in range(h):
        for j in range(1, w):
            family.append(_blocks(one_at(i, 0), zero_at(i, j), zero_at(i, 0), one_at(i, j)))
            names.append(f"A_{i + 1}{j + 1}")
    for i in range(h):
        for j in range(1, w):
            family.append(_blocks(one_at(i, j), zero_at(i, 0), zero_at(i, j), one_at(i, 0)))
            names.append(f"B_{i + 1}{j + 1}")

    E = _blocks(ones, zeros, zeros, ones)
    D = _blocks(zeros, ones, ones, zeros)
    top = np.concatenate([np.eye(1, w, 0, dtype=np.int64), 1 - np.eye(1, w, 0, dtype=np.int64)], axis=1)
    bottom = np.concatenate([1 - np.eye(1, w, 0, dtype=np.int64), np.eye(1, w, 0, dtype=np.int64)], axis=1)
    C = np.concatenate([np.repeat(top, h, axis=0), np.repeat(bottom, h, axis=0)], axis=0)
    c_coeff = w - 2
    d_coeff = (m * (n - 2) - n) // 2 + 1
    degree = m * (n - 2) // 2
    if c_coeff + d_coeff + 1 != degree or len(family) != degree:
        raise VerificationError("Coefficient count differs from the family size")

    total = sum(family)
    if not np.array_equal(total, c_coeff * C + d_coeff * D + E):
        raise VerificationError("Family sum differs from (n/2-2) C + ((m(n-2)-n)/2+1) D + E")

    spec = TransportationSpec(tuple([w] * m), tuple([h] * n))
    others = ([C] if c_coeff else []) + [D]
    trail = [C] * c_coeff + [D] * d_coeff + [E]
    matrices = dict(zip(names, family))
    matrices.update({"C": C, "D": D, "E": E, "total": total})
    inst = _assemble(spec, family, others, E, trail, degree, matrices)
    logger.info(f"Transportation family {m}x{n}: degree {degree}")
    return inst


def smooth_shift(inst: WorstCaseInstance) -> WorstCaseInstance:
    """Add mn to the last column of every matrix; margins become n/2+mn and m^2 n + m/2 in the last column"""
    spec = inst.spec
    m, n = spec.m, spec.n
    shift = np.zeros((m, n), dtype=np.int64)
    shift[:, -1] = m * n
    rows = tuple(r + m * n for r in spec.rows)
    cols = spec.cols[:-1] + (spec.cols[-1] + m * m * n,)
    shifted_spec = TransportationSpec(rows, cols)

    def moved(index: int) -> np.ndarray:
        return inst.table(index) + shift

    others = [moved(i) for i in range(len(inst.points)) if i not in inst.family and i != inst.minimal]
    family = [moved(i) for i in inst.family]
    trail = [moved(i) for i in inst.relation.trail.indices()]
    matrices = {name: (mat + shift if mat.shape == (m, n) and name != "total" else mat)
                for name, mat in inst.matrices.items()}
    matrices["total"] = inst.matrices["total"] + inst.degree * shift
    offset = np.asarray(inst.offset, dtype=np.int64) + point_of(shift)
    result = _assemble(shifted_spec, family, others, moved(inst.minimal), trail, inst.degree, matrices, offset)
    logger.info(f"Smooth shift: rows {rows}, cols {cols}")
    return result


def covering_certificate(inst: WorstCaseInstance) -> Dict[str, Any]:
    """
    Necessity: without any one member, some 1 of the minimal element stays
    uncovered. Privacy: every member has a 1 no other member has.
    """
    offset = np.asarray(inst.offset, dtype=np.int64)
    ones = {i: set(np.flatnonzero(np.asarray(inst.points[i]) - offset == 1)) for i in range(len(inst.points))}
    members = list(inst.family)
    target = ones[inst.minimal]
    necessity_failures, privacy_failures = [], []
    for k, member in enumerate(members):
        rest = set()
        for other_k, other in enumerate(members):
            if other_k != k:
                rest |= ones[other]
        if not (target - rest):
            necessity_failures.append(member)
        if not (ones[member] - rest):
            privacy_failures.append(member)
    covered = set()
    for member in members:
        covered |= ones[member]
    report = {
        'success': not necessity_failures and not privacy_failures and target <= covered,
        'members': len(members),
        'covers_minimal': target <= covered,
        'necessity_failures': necessity_failures,
        'privacy_failures': privacy_failures,
    }
    if not report['success']:
        report['error'] = (f"Covering facts fail: necessity {necessity_failures}, "
                           f"privacy {privacy_failures}")
    return report


def ranking_for(inst: WorstCaseInstance, points: PointList) -> Tuple[int, ...]:
    """Extend the instance ranking to all lattice points: points outside the support come first"""
    support = [points.index(p) for p in inst.points]
    rest = [i for i in range(len(points)) if i not in set(support)]
    return tuple(rest + support)


def fiber_minimality_check(inst: WorstCaseInstance, points: Optional[PointList] = None) -> Dict[str, Any]:
    """
    The family side is a minimal generator of the initial ideal: it is not
    standard, while each maximal proper sub-multiset is the order-minimum of
    its fiber.
    """
    if points is None:
        points = enumerate_lattice_points(inst.spec)
    order = revlex_from_ranking(points, ranking_for(inst, points))
    lead = ExponentVector.from_indices([points.index(inst.points[i]) for i in inst.relation.lead.indices()],
                                       points)

    def standard(u: ExponentVector) -> bool:
        fiber = enumerate_fiber(inst.spec, u.image, u.degree, points)
        return min(fiber.elements, key=order.key) == u

    nonstandard = []
    checked = 0
    for i in lead.support:
        w = lead - ExponentVector.from_indices([i], points)
        checked += 1
        if w.degree and not standard(w):
            nonstandard.append(list(w.indices()))
    lead_reducible = not standard(lead)
    report = {
        'success': lead_reducible and not nonstandard,
        'checked': checked,
        'lead_in_initial_ideal': lead_reducible,
        'nonstandard_divisors': nonstandard,
    }
    if not report['success']:
        report['error'] = "Family side is not a minimal generator of the initial ideal"
    return report


def theoretical_degree_bound(spec: PolytopeSpec) -> int:
    """
    n for B_n, floor(mn/2) for m x n transportation polytopes, otherwise the
    largest complement bound over the maximal cells.
    """
    if isinstance(spec, TransportationSpec) and spec.lower is None and spec.upper is None:
        if spec.m == spec.n and set(spec.rows) == {1} and set(spec.cols) == {1}:
            return spec.n
        return spec.m * spec.n // 2
    flow_spec = as_flow_spec(spec)
    cells = enumerate_nonempty_cells(flow_spec)
    return max((complement_degree_bound(cell) for cell in cells), default=0)


def verify_instance(inst: WorstCaseInstance) -> Dict[str, Any]:
    """Re-check sums and degrees of a constructed instance, plus the covering facts"""
    lead_total = sum(inst.table(i) for i in inst.relation.lead.indices())
    trail_total = sum(inst.table(i) for i in inst.relation.trail.indices())
    identity_ok = bool(np.array_equal(lead_total, trail_total))
    covering = covering_certificate(inst)
    report = {
        'success': identity_ok and covering['success'],
        'identity': identity_ok,
        'degree': inst.relation.lead.degree,
        'covering': covering,
    }
    if not report['success']:
        report['error'] = covering.get('error', "Relation sides differ")
    return report
