#!/usr/bin/env python3
"""
Toric ideals of lattice point configurations
Pure-difference binomials over exponent vectors and a binomial Buchberger
engine producing reduced Groebner bases
"""

import heapq
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config import GENERATOR_DEGREE
from flowcore import CapExceededError, PointList, SpecError, VerificationError
from order import TermOrder, revlex_from_ranking

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExponentVector:
    """A multiset of lattice points: point index -> multiplicity, with its image"""

    entries: Tuple[Tuple[int, int], ...]
    degree: int
    image: Tuple[int, ...]
    counts: Dict[int, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if any(m <= 0 for _, m in self.entries):
            raise VerificationError("Exponent vectors store positive multiplicities only")
        if list(self.entries) != sorted(self.entries) or len({i for i, _ in self.entries}) != len(self.entries):
            raise VerificationError("Exponent entries must be sorted by distinct index")
        if self.degree != sum(m for _, m in self.entries):
            raise VerificationError("Cached degree is inconsistent with the entries")
        object.__setattr__(self, "counts", dict(self.entries))

    @classmethod
    def from_counts(cls, counts: Mapping[int, int], points: PointList) -> "ExponentVector":
        entries = tuple(sorted((int(i), int(m)) for i, m in counts.items() if m))
        width = points.dimension
        image = [0] * width
        for i, m in entries:
            if not 0 <= i < len(points):
                raise SpecError(f"Point index {i} outside 0..{len(points) - 1}")
            if m < 0:
                raise SpecError(f"Negative multiplicity {m} for point {i}")
            for a, x in enumerate(points[i]):
                image[a] += m * x
        return cls(entries, sum(m for _, m in entries), tuple(image))

    @classmethod
    def from_indices(cls, indices: Iterable[int], points: PointList) -> "ExponentVector":
        counts: Dict[int, int] = {}
        for i in indices:
            counts[int(i)] = counts.get(int(i), 0) + 1
        return cls.from_counts(counts, points)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(i for i, _ in self.entries)

    def indices(self) -> List[int]:
        """Point indices with repetition, ascending"""
        return [i for i, m in self.entries for _ in range(m)]

    def divides(self, other: "ExponentVector") -> bool:
        return all(other.counts.get(i, 0) >= m for i, m in self.entries)

    def __add__(self, other: "ExponentVector") -> "ExponentVector":
        counts = dict(self.counts)
        for i, m in other.entries:
            counts[i] = counts.get(i, 0) + m
        image = tuple(x + y for x, y in zip(self.image, other.image)) if self.image else other.image
        return ExponentVector(tuple(sorted(counts.items())), self.degree + other.degree, image)

    def __sub__(self, other: "ExponentVector") -> "ExponentVector":
        if not other.divides(self):
            raise SpecError("Subtrahend does not divide the exponent vector")
        counts = dict(self.counts)
        for i, m in other.entries:
            counts[i] -= m
        entries = tuple(sorted((i, m) for i, m in counts.items() if m))
        image = tuple(x - y for x, y in zip(self.image, other.image)) if other.image else self.image
        return ExponentVector(entries, self.degree - other.degree, image)

    def to_json(self) -> Dict[str, int]:
        return {str(i): m for i, m in self.entries}

    @classmethod
    def from_json(cls, data: Mapping[str, Any], points: PointList) -> "ExponentVector":
        try:
            return cls.from_counts({int(i): int(m) for i, m in data.items()}, points)
        except (TypeError, ValueError, AttributeError) as e:
            raise SpecError(f"Malformed exponent vector JSON: {e}")


@dataclass(frozen=True)
class Binomial:
    """x^lead - x^trail with equal images and no common factor"""

    lead: ExponentVector
    trail: ExponentVector

    def __post_init__(self):
        if self.lead.image != self.trail.image:
            raise VerificationError(f"Binomial leaves the toric ideal: {self.lead.image} != {self.trail.image}")
        if self.lead == self.trail:
            raise VerificationError("Binomial with equal terms is zero")
        if set(self.lead.support) & set(self.trail.support):
            raise VerificationError("Binomial terms share a common factor")

    @property
    def degree(self) -> int:
        return max(self.lead.degree, self.trail.degree)

    def to_json(self) -> Dict[str, Any]:
        return {"lead": self.lead.to_json(), "trail": self.trail.to_json()}


@dataclass(frozen=True)
class GroebnerBasis:
    elements: Tuple[Binomial, ...]
    order: TermOrder
    reduced: bool
    truncated: bool = False
    reason: Optional[str] = None

    def __len__(self) -> int:
        return len(self.elements)

    def to_json(self) -> Dict[str, Any]:
        return {
            "elements": [b.to_json() for b in self.elements],
            "reduced": self.reduced,
            "truncated": self.truncated,
            "reason": self.reason,
            "variables": list(self.order.variables),
        }


def make_binomial(u: Mapping[int, int], v: Mapping[int, int], order: TermOrder) -> Optional[Binomial]:
    """Cancel the common factor of x^u - x^v and orient it; None when zero"""
    u, v = dict(u), dict(v)
    for i in set(u) & set(v):
        common = min(u[i], v[i])
        u[i] -= common
        v[i] -= common
    if {i: m for i, m in u.items() if m} == {i: m for i, m in v.items() if m}:
        return None
    lead = ExponentVector.from_counts(u, order.points)
    trail = ExponentVector.from_counts(v, order.points)
    if order.key(lead) < order.key(trail):
        lead, trail = trail, lead
    return Binomial(lead, trail)


class _Reducers:
    """Reducer set with stacked leads for vectorized divisibility tests"""

    def __init__(self, size: int):
        self.leads = np.zeros((0, size), dtype=np.int64)
        self.trails: List[np.ndarray] = []

    def add(self, lead: np.ndarray, trail: np.ndarray):
        self.leads = np.vstack([self.leads, lead[None, :]])
        self.trails.append(trail)

    def normal_form(self, m: np.ndarray) -> np.ndarray:
        while self.trails:
            hits = np.flatnonzero(np.all(self.leads <= m, axis=1))
            if hits.size == 0:
                break
            i = int(hits[0])
            m = m - self.leads[i] + self.trails[i]
        return m


class _Clock:
    """Wall-clock budget shared by every phase of one computation"""

    def __init__(self, cap: Optional[float]):
        self.cap = cap
        self.start = time.monotonic()

    def expired(self) -> bool:
        return self.cap is not None and time.monotonic() - self.start > self.cap

    def check(self):
        if self.expired():
            raise CapExceededError(f"Time cap of {self.cap}s exceeded")


class _Engine:
    """
    Dense exponent arithmetic in variable-position coordinates.

    With strip=False common factors are kept, which lattice ideals need
    before saturation.
    """

    def __init__(self, order: TermOrder, strip: bool = True):
        self.order = order
        self.strip = strip
        self.size = order.size
        self.variables = list(order.variables)
        coords = order.points.as_array()
        self.coords = coords[self.variables] if self.size else coords
        self.weights = [order.weights[p] for p in self.variables]
        self.weighted = any(self.weights)

    def key(self, m: np.ndarray) -> Tuple:
        if self.weighted:
            weight = sum((w * int(x) for w, x in zip(self.weights, m) if x), Fraction(0))
        else:
            weight = Fraction(0)
        return weight, int(m.sum()), tuple(-int(x) for x in m[::-1])

    def normalize(self, u: np.ndarray, v: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        if self.strip:
            common = np.minimum(u, v)
            u, v = u - common, v - common
        if np.array_equal(u, v):
            return None
        if self.key(u) < self.key(v):
            u, v = v, u
        return u, v

    def image(self, m: np.ndarray) -> Tuple[int, ...]:
        return tuple(int(x) for x in m @ self.coords)

    def dense(self, ev: ExponentVector) -> np.ndarray:
        m = np.zeros(self.size, dtype=np.int64)
        for i, mult in ev.entries:
            m[self.order.position_of(i)] = mult
        return m

    def sparse(self, m: np.ndarray) -> ExponentVector:
        counts = {self.variables[j]: int(x) for j, x in enumerate(m) if x}
        return ExponentVector.from_counts(counts, self.order.points)

    def binomial(self, lead: np.ndarray, trail: np.ndarray) -> Binomial:
        return Binomial(self.sparse(lead), self.sparse(trail))

    def to_positions(self, vector: np.ndarray) -> np.ndarray:
        return vector[self.variables]

    def to_points(self, m: np.ndarray) -> np.ndarray:
        vector = np.zeros(self.size, dtype=np.int64)
        vector[self.variables] = m
        return vector


def group_multisets(points: PointList, degree: int, indices: Optional[Sequence[int]] = None,
                    clock: Optional[_Clock] = None) -> Dict[Tuple[int, ...], List[Tuple[int, ...]]]:
    """
    Multisets of the given degree grouped by image.

    indices restricts the points used; multisets are ascending index tuples.
    """
    if indices is None:
        indices = range(len(points))
    indices = sorted(int(i) for i in indices)
    coords = points.as_array()
    fibers: Dict[Tuple[int, ...], List[Tuple[int, ...]]] = {}
    for count, combo in enumerate(combinations_with_replacement(indices, degree)):
        if clock is not None and count % 1024 == 0:
            clock.check()
        image = tuple(int(x) for x in coords[list(combo)].sum(axis=0))
        fibers.setdefault(image, []).append(combo)
    return fibers


def lattice_basis(points: PointList, clock: Optional[_Clock] = None) -> List[np.ndarray]:
    """
    Integer basis of the degree-preserving relations: u in Z^s with
    sum u_i a_i = 0 and sum u_i = 0.

    Unimodular row operations bring [a_i, 1 | e_i] to echelon form; the
    identity part of the rows whose left part vanished spans the kernel over Z.
    """
    s = len(points)
    coords = points.as_array()
    width = coords.shape[1] + 1
    rows = [[int(x) for x in coords[i]] + [1] + [int(i == j) for j in range(s)] for i in range(s)]
    top = 0
    for col in range(width):
        while top < s:
            if clock is not None:
                clock.check()
            live = [r for r in range(top, s) if rows[r][col]]
            if not live:
                break
            pivot = min(live, key=lambda r: abs(rows[r][col]))
            rows[top], rows[pivot] = rows[pivot], rows[top]
            head = rows[top]
            for r in range(top + 1, s):
                if rows[r][col]:
                    q = rows[r][col] // head[col]
                    rows[r] = [a - q * b for a, b in zip(rows[r], head)]
            if all(rows[r][col] == 0 for r in range(top + 1, s)):
                top += 1
                break
    return [np.asarray(row[width:], dtype=np.int64) for row in rows[top:]]


def _census(engine: _Engine, max_degree: int,
            clock: Optional[_Clock] = None) -> List[Tuple[np.ndarray, np.ndarray]]:
    relations: Dict[Tuple[bytes, bytes], Tuple[np.ndarray, np.ndarray]] = {}
    points = engine.order.points
    for degree in range(2, max_degree + 1):
        for members in group_multisets(points, degree, clock=clock).values():
            if len(members) < 2:
                continue
            dense = []
            for combo in members:
                m = np.zeros(engine.size, dtype=np.int64)
                for i in combo:
                    m[engine.order.position_of(i)] += 1
                dense.append(m)
            base = min(dense, key=engine.key)
            for m in dense:
                pair = engine.normalize(m, base)
                if pair is not None:
                    relations.setdefault((pair[0].tobytes(), pair[1].tobytes()), pair)
    return [relations[k] for k in sorted(relations, key=lambda k: (engine.key(relations[k][0]), k))]


def relation_census(points: PointList, max_degree: int, order: Optional[TermOrder] = None) -> List[Binomial]:
    """
    Every relation of degree <= max_degree, as binomials u - min(fiber).

    Together they generate all relations up to that degree; duplicates after
    cancelling common factors are removed.
    """
    if order is None:
        order = revlex_from_ranking(points, range(len(points)))
    engine = _Engine(order)
    return [engine.binomial(u, v) for u, v in _census(engine, max_degree)]


def _spair(f: Tuple[np.ndarray, np.ndarray], g: Tuple[np.ndarray, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    lcm = np.maximum(f[0], g[0])
    return lcm - f[0] + f[1], lcm - g[0] + g[1]


def _reduce(engine: _Engine, reducers: _Reducers, u: np.ndarray, v: np.ndarray):
    pair = engine.normalize(u, v)
    if pair is None:
        return None
    return engine.normalize(reducers.normal_form(pair[0]), reducers.normal_form(pair[1]))


def spair_reduce(f: Binomial, g: Binomial, order: TermOrder,
                 basis: Optional[Sequence[Binomial]] = None) -> Optional[Binomial]:
    """S-pair of f and g reduced by basis (default {f, g}); None when it reduces to zero"""
    engine = _Engine(order)
    reducers = _Reducers(engine.size)
    for b in (basis if basis is not None else [f, g]):
        reducers.add(engine.dense(b.lead), engine.dense(b.trail))
    s = _spair((engine.dense(f.lead), engine.dense(f.trail)), (engine.dense(g.lead), engine.dense(g.trail)))
    result = _reduce(engine, reducers, *s)
    if result is None:
        return None
    if engine.image(result[0]) != engine.image(result[1]):
        raise VerificationError("S-pair reduction left the toric ideal")
    return engine.binomial(*result)


def _complete(engine: _Engine, gens: Sequence[Tuple[np.ndarray, np.ndarray]], clock: _Clock,
              degree_cap: Optional[int] = None,
              rng: Optional[np.random.Generator] = None) -> Tuple[List[Tuple[np.ndarray, np.ndarray]], Dict[str, Any]]:
    """Close gens under S-pairs; the returned state says whether a cap cut the run short"""
    basis: List[Tuple[np.ndarray, np.ndarray]] = []
    reducers = _Reducers(engine.size)
    live = set()
    queue: List[Tuple] = []
    state = {'truncated': False, 'reason': None}

    def within_cap(degree: int) -> bool:
        if degree_cap is not None and degree > degree_cap:
            state['truncated'] = True
            state['reason'] = state['reason'] or 'degree'
            return False
        return True

    def out_of_time() -> bool:
        if clock.expired():
            logger.warning(f"Buchberger stopped after {clock.cap}s with {len(live)} pairs pending")
            state['truncated'] = True
            state['reason'] = 'time'
            return True
        return False

    def add(element: Tuple[np.ndarray, np.ndarray]):
        if engine.image(element[0]) != engine.image(element[1]):
            raise VerificationError("Basis element leaves the toric ideal")
        lead = element[0]
        new = len(basis)
        # Gebauer-Moeller: drop old pairs whose lcm the new lead strictly refines
        for pair in list(live):
            i, j = pair
            lcm = np.maximum(basis[i][0], basis[j][0])
            if (np.all(lcm >= lead)
                    and not np.array_equal(lcm, np.maximum(basis[i][0], lead))
                    and not np.array_equal(lcm, np.maximum(basis[j][0], lead))):
                live.discard(pair)
        groups: Dict[bytes, List[int]] = {}
        lcms: Dict[bytes, np.ndarray] = {}
        for i, (other, _) in enumerate(basis):
            lcm = np.maximum(other, lead)
            groups.setdefault(lcm.tobytes(), []).append(i)
            lcms[lcm.tobytes()] = lcm
        minimal: List[bytes] = []
        for k in sorted(groups, key=lambda k: (int(lcms[k].sum()), engine.key(lcms[k]))):
            if all(not np.all(lcms[k] >= lcms[kept]) for kept in minimal):
                minimal.append(k)
        for k in minimal:
            if any(not np.any(np.minimum(basis[i][0], lead)) for i in groups[k]):
                continue
            lcm = lcms[k]
            if not within_cap(int(lcm.sum())):
                continue
            i = min(groups[k])
            tie = float(rng.random()) if rng is not None else 0.0
            heapq.heappush(queue, (int(lcm.sum()), engine.key(lcm), tie, i, new))
            live.add((i, new))
        basis.append(element)
        reducers.add(element[0], element[1])

    for u, v in gens:
        if out_of_time():
            return basis, state
        if not within_cap(int(max(u.sum(), v.sum()))):
            continue
        reduced = _reduce(engine, reducers, u, v)
        if reduced is not None:
            add(reduced)

    while queue:
        if out_of_time():
            break
        *_, i, j = heapq.heappop(queue)
        if (i, j) not in live:
            continue
        live.discard((i, j))
        reduced = _reduce(engine, reducers, *_spair(basis[i], basis[j]))
        if reduced is not None:
            add(reduced)
    return basis, state


def _saturate(points: PointList, clock: _Clock) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Generators of the toric ideal in point coordinates: the lattice basis
    ideal saturated by one variable at a time. Each step takes a basis in
    graded revlex with that variable cheapest and divides out its power.
    """
    s = len(points)
    current = [(np.maximum(u, 0), np.maximum(-u, 0)) for u in lattice_basis(points, clock)]
    # Low-degree relations already lie in the toric ideal
    seed = _Engine(revlex_from_ranking(points, range(s)))
    current += [(seed.to_points(u), seed.to_points(v)) for u, v in _census(seed, GENERATOR_DEGREE, clock)]
    for j in range(s):
        engine = _Engine(revlex_from_ranking(points, [i for i in range(s) if i != j] + [j]), strip=False)
        gens = [engine.normalize(engine.to_positions(u), engine.to_positions(v)) for u, v in current]
        basis, state = _complete(engine, [g for g in gens if g is not None], clock)
        if state['truncated']:
            raise CapExceededError(f"Time cap of {clock.cap}s reached while saturating by variable {j}")
        last = engine.size - 1
        current = []
        for lead, trail in _minimal(engine, basis):
            power = min(lead[last], trail[last])
            lead, trail = lead.copy(), trail.copy()
            lead[last] -= power
            trail[last] -= power
            current.append((engine.to_points(lead), engine.to_points(trail)))
        logger.debug(f"Saturated by variable {j}: {len(current)} generators")
    return current


def buchberger(points: PointList, order: TermOrder, degree_cap: Optional[int] = None,
               time_cap: Optional[float] = None, generators: Optional[Sequence[Binomial]] = None,
               generator_degree: Optional[int] = None, shuffle_seed: Optional[int] = None) -> GroebnerBasis:
    """
    Reduced Groebner basis of the toric ideal of points.

    By default the input is a lattice basis of the relations saturated by
    every variable, which is right for any configuration. generator_degree=d
    starts from all relations of degree <= d instead; that is exact only when
    the ideal is generated in degree d, as flow polytopes and their cells are
    for d = 3. S-pairs are processed by the normal strategy with the coprime
    criterion and the Gebauer-Moeller chain criterion. Pairs above degree_cap
    are skipped and time_cap bounds the whole run, generators included;
    either way the result is flagged truncated. shuffle_seed permutes
    generators and queue ties.
    """
    if order.points != points:
        raise SpecError("Term order is defined over a different point list")
    if len(points) <= 1:
        return GroebnerBasis((), order, reduced=True)

    clock = _Clock(time_cap)
    engine = _Engine(order)
    try:
        if generators is not None:
            gens = [engine.normalize(engine.dense(b.lead), engine.dense(b.trail)) for b in generators]
        elif generator_degree is not None:
            gens = _census(engine, generator_degree, clock)
        else:
            gens = [engine.normalize(engine.to_positions(u), engine.to_positions(v))
                    for u, v in _saturate(points, clock)]
    except CapExceededError as e:
        logger.warning(f"Groebner basis truncated before the S-pair phase: {e}")
        return GroebnerBasis((), order, reduced=True, truncated=True, reason='time')
    gens = [g for g in gens if g is not None]
    rng = np.random.default_rng(shuffle_seed) if shuffle_seed is not None else None
    if rng is not None:
        gens = [gens[i] for i in rng.permutation(len(gens))]
    logger.debug(f"Buchberger on {len(points)} points with {len(gens)} generators")

    basis, state = _complete(engine, gens, clock, degree_cap, rng)
    elements = _interreduce(engine, basis)
    if state['truncated']:
        logger.warning(f"Groebner basis truncated ({state['reason']} cap), {len(elements)} elements")
    else:
        logger.info(f"Reduced Groebner basis with {len(elements)} elements")
    return GroebnerBasis(tuple(elements), order, reduced=True,
                         truncated=state['truncated'], reason=state['reason'])


def _minimal(engine: _Engine, basis: List[Tuple[np.ndarray, np.ndarray]]) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Elements with minimal leads, trails in normal form"""
    ranked = sorted(basis, key=lambda g: engine.key(g[0]))
    minimal: List[Tuple[np.ndarray, np.ndarray]] = []
    for lead, trail in ranked:
        if all(not np.all(lead >= kept[0]) for kept in minimal):
            minimal.append((lead, trail))
    reducers = _Reducers(engine.size)
    for lead, trail in minimal:
        reducers.add(lead, trail)
    return [(lead, reducers.normal_form(trail)) for lead, trail in minimal]


def _interreduce(engine: _Engine, basis: List[Tuple[np.ndarray, np.ndarray]]) -> List[Binomial]:
    elements = []
    for lead, trail in _minimal(engine, basis):
        if np.any(np.minimum(lead, trail)) or np.array_equal(lead, trail):
            raise VerificationError("Interreduction produced a binomial with a common factor")
        elements.append(engine.binomial(lead, trail))
    return elements


def initial_ideal_minimal_generators(gb: GroebnerBasis) -> List[ExponentVector]:
    """Leads of a reduced basis, checked to be pairwise non-dividing"""
    if not gb.reduced:
        raise SpecError("Initial ideal generators need a reduced basis")
    leads = [b.lead for b in gb.elements]
    for a in leads:
        for b in leads:
            if a is not b and a.divides(b):
                raise VerificationError(f"Lead {a.to_json()} divides lead {b.to_json()}")
    return leads


def max_degree(gb: GroebnerBasis) -> int:
    if gb.truncated:
        raise SpecError(f"Basis is truncated ({gb.reason} cap); its degree is not final")
    return max((b.lead.degree for b in gb.elements), default=0)


def verify_groebner_basis(gb: GroebnerBasis) -> Dict[str, Any]:
    """Image conservation, reducedness and the S-pair criterion on a computed basis"""
    engine = _Engine(gb.order)
    dense = [(engine.dense(b.lead), engine.dense(b.trail)) for b in gb.elements]
    reducers = _Reducers(engine.size)
    for lead, trail in dense:
        reducers.add(lead, trail)
    errors = []
    for b in gb.elements:
        if b.lead.image != b.trail.image:
            errors.append(f"image mismatch in {b.to_json()}")
        if gb.order.key(b.lead) <= gb.order.key(b.trail):
            errors.append(f"lead not larger than trail in {b.to_json()}")
    for i, (lead, trail) in enumerate(dense):
        for j, (other, _) in enumerate(dense):
            if i != j and (np.all(lead >= other) or np.all(trail >= other)):
                errors.append(f"element {i} is reducible by element {j}")
    for i in range(len(dense)):
        for j in range(i + 1, len(dense)):
            if _reduce(engine, reducers, *_spair(dense[i], dense[j])) is not None:
                errors.append(f"S-pair ({i}, {j}) does not reduce to zero")
    return {'success': not errors, 'errors': errors, 'size': len(gb.elements)}
