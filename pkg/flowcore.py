#!/usr/bin/env python3
"""
Flow and transportation polytopes
Graphs, polytope specifications, lattice-point enumeration and the
subdivision of a flow polytope into unit cells
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import sympy

from config import DEFAULT_POINT_CAP

logger = logging.getLogger(__name__)

LatticePoint = Tuple[int, ...]

# Reserved id of the auxiliary coordinate fixed to 1 by homogenize()
HOMOGENIZING_ARC = "_h"


class FlowToricError(Exception):
    """Base class for all FlowToric errors"""


class SpecError(FlowToricError, ValueError):
    """Invalid specification, input or violated precondition"""


class CapExceededError(FlowToricError, RuntimeError):
    """A point, fiber or time cap was exceeded"""


class VerificationError(FlowToricError, AssertionError):
    """An identity that must hold by construction failed"""


@dataclass(frozen=True)
class Arc:
    id: str
    tail: str
    head: str

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head


@dataclass(frozen=True)
class DirectedGraph:
    """Directed multigraph; parallel arcs and loops are told apart by arc id"""

    vertices: Tuple[str, ...]
    arcs: Tuple[Arc, ...]

    def __post_init__(self):
        if len(set(self.vertices)) != len(self.vertices):
            raise SpecError("Duplicate vertex ids")
        ids = [arc.id for arc in self.arcs]
        if len(set(ids)) != len(ids):
            raise SpecError("Duplicate arc ids")
        declared = set(self.vertices)
        for arc in self.arcs:
            if arc.tail not in declared or arc.head not in declared:
                raise SpecError(f"Arc {arc.id} has an undeclared endpoint")

    def vertex_index(self) -> Dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}


@dataclass(frozen=True)
class FlowPolytopeSpec:
    """
    The flow polytope {f : M_G f = d, l <= f <= u}.

    demand is aligned with graph.vertices, lower/upper with graph.arcs.
    Demand is inflow minus outflow at each vertex.
    """

    graph: DirectedGraph
    demand: Tuple[int, ...]
    lower: Tuple[int, ...]
    upper: Tuple[int, ...]
    homogenized: bool = False

    def __post_init__(self):
        if len(self.demand) != len(self.graph.vertices):
            raise SpecError("Demand vector does not match the vertex count")
        if len(self.lower) != len(self.graph.arcs) or len(self.upper) != len(self.graph.arcs):
            raise SpecError("Bound vectors do not match the arc count")
        for arc, lo, hi in zip(self.graph.arcs, self.lower, self.upper):
            if lo < 0:
                raise SpecError(f"Arc {arc.id} has negative lower bound {lo}")
            if lo > hi:
                raise SpecError(f"Arc {arc.id} has lower bound {lo} above upper bound {hi}")
        if sum(self.demand) != 0:
            raise SpecError(f"Demands sum to {sum(self.demand)}, expected 0")

    @property
    def arc_count(self) -> int:
        return len(self.graph.arcs)

    def flow_coordinates(self) -> List[int]:
        """Arc positions other than the homogenizing coordinate"""
        return [i for i, arc in enumerate(self.graph.arcs) if arc.id != HOMOGENIZING_ARC]


@dataclass(frozen=True)
class TransportationSpec:
    """m x n tables with row sums r, column sums c and optional entry bounds"""

    rows: Tuple[int, ...]
    cols: Tuple[int, ...]
    lower: Optional[Tuple[Tuple[int, ...], ...]] = None
    upper: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        if not self.rows or not self.cols:
            raise SpecError("Transportation spec needs at least one row and one column")
        if any(r <= 0 for r in self.rows) or any(c <= 0 for c in self.cols):
            raise SpecError("Margins must be positive")
        if sum(self.rows) != sum(self.cols):
            raise SpecError(f"Row sum {sum(self.rows)} differs from column sum {sum(self.cols)}")
        for name, bound in (("lower", self.lower), ("upper", self.upper)):
            if bound is not None:
                if len(bound) != self.m or any(len(row) != self.n for row in bound):
                    raise SpecError(f"{name} bound matrix must be {self.m}x{self.n}")

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.cols)

    @property
    def total(self) -> int:
        return sum(self.rows)

    def entry_bounds(self, i: int, j: int) -> Tuple[int, int]:
        lo = self.lower[i][j] if self.lower is not None else 0
        hi = self.upper[i][j] if self.upper is not None else min(self.rows[i], self.cols[j])
        return lo, hi


PolytopeSpec = Union[FlowPolytopeSpec, TransportationSpec]


@dataclass(frozen=True)
class PointList:
    """Ordered distinct lattice points; the order fixes the variable order"""

    points: Tuple[LatticePoint, ...]
    _index: Dict[LatticePoint, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        index = {}
        for i, p in enumerate(self.points):
            if p in index:
                raise SpecError(f"Duplicate lattice point {p}")
            index[p] = i
        if len({len(p) for p in self.points}) > 1:
            raise SpecError("Lattice points have different lengths")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> LatticePoint:
        return self.points[i]

    def __iter__(self) -> Iterator[LatticePoint]:
        return iter(self.points)

    def __contains__(self, p) -> bool:
        return tuple(p) in self._index

    def index(self, p: Sequence[int]) -> int:
        try:
            return self._index[tuple(int(x) for x in p)]
        except KeyError:
            raise SpecError(f"Point {tuple(p)} is not in the point list")

    @property
    def dimension(self) -> int:
        """Ambient coordinate count"""
        return len(self.points[0]) if self.points else 0

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.int64).reshape(len(self.points), self.dimension)


@dataclass(frozen=True)
class IntegerFlow:
    """An integral point of a flow polytope"""

    spec: FlowPolytopeSpec
    value: Tuple[int, ...]

    def __post_init__(self):
        problems = flow_violations(self.spec, self.value)
        if problems:
            raise SpecError(f"Not a flow of the spec: {problems[0]}")


@dataclass(frozen=True)
class Cell:
    """The cell Z_F(k): lattice points with k_a <= f_a <= k_a + 1"""

    offset: Tuple[int, ...]
    spec: FlowPolytopeSpec

    def __post_init__(self):
        for arc, lo, hi in zip(self.spec.graph.arcs, self.spec.lower, self.spec.upper):
            if hi - lo not in (0, 1):
                raise SpecError(f"Cell bounds on arc {arc.id} are not a unit slab")

    def contains(self, point: Sequence[int]) -> bool:
        return all(lo <= x <= hi for x, lo, hi in zip(point, self.spec.lower, self.spec.upper))


def incidence_matrix(g: DirectedGraph) -> np.ndarray:
    """Vertex-arc incidence matrix; loop columns are zero"""
    matrix = np.zeros((len(g.vertices), len(g.arcs)), dtype=np.int64)
    index = g.vertex_index()
    for a, arc in enumerate(g.arcs):
        if arc.is_loop:
            continue
        matrix[index[arc.tail], a] = -1
        matrix[index[arc.head], a] = 1
    return matrix


def flow_violations(spec: FlowPolytopeSpec, value: Sequence[int], scale: int = 1) -> List[str]:
    """Constraints of scale * F violated by value (empty list when it is a member)"""
    if len(value) != spec.arc_count:
        return [f"expected {spec.arc_count} arc values, got {len(value)}"]
    problems = []
    for arc, x, lo, hi in zip(spec.graph.arcs, value, spec.lower, spec.upper):
        if int(x) != x:
            problems.append(f"arc {arc.id} value {x} is not integral")
        elif x < scale * lo or x > scale * hi:
            problems.append(f"arc {arc.id} value {x} outside [{scale * lo}, {scale * hi}]")
    net = incidence_matrix(spec.graph) @ np.asarray(value, dtype=np.int64).reshape(-1)
    for v, got, want in zip(spec.graph.vertices, net, spec.demand):
        if int(got) != scale * want:
            problems.append(f"vertex {v} has net inflow {int(got)}, expected {scale * want}")
    return problems


def transportation_as_flow(t: TransportationSpec) -> FlowPolytopeSpec:
    """Complete bipartite encoding; arc (i, j) sits at row-major position i*n + j"""
    vertices = tuple(f"r{i}" for i in range(t.m)) + tuple(f"c{j}" for j in range(t.n))
    arcs, lower, upper = [], [], []
    for i in range(t.m):
        for j in range(t.n):
            arcs.append(Arc(f"x{i}_{j}", f"r{i}", f"c{j}"))
            lo, hi = t.entry_bounds(i, j)
            lower.append(lo)
            upper.append(hi)
    demand = tuple(-r for r in t.rows) + tuple(t.cols)
    return FlowPolytopeSpec(DirectedGraph(vertices, tuple(arcs)), demand, tuple(lower), tuple(upper))


def as_flow_spec(spec: PolytopeSpec) -> FlowPolytopeSpec:
    if isinstance(spec, TransportationSpec):
        return transportation_as_flow(spec)
    return spec


def birkhoff_spec(n: int) -> TransportationSpec:
    return TransportationSpec(tuple([1] * n), tuple([1] * n))


def enumerate_lattice_points(spec: PolytopeSpec, cap: Optional[int] = None) -> PointList:
    """
    All integral points of the polytope in lexicographic order of arc values.

    Backtracks over arcs in declaration order; the value range of each arc is
    cut down so every vertex can still meet its demand with the arcs left.
    """
    flow_spec = as_flow_spec(spec)
    cap = DEFAULT_POINT_CAP if cap is None else cap
    graph = flow_spec.graph
    index = graph.vertex_index()
    loops = [arc.id for arc in graph.arcs if arc.is_loop and arc.id != HOMOGENIZING_ARC]
    if loops:
        logger.warning(f"Graph has loops {loops}; they add free coordinates")

    arc_count = flow_spec.arc_count
    vertex_count = len(graph.vertices)
    # suffix_min[p][v] / suffix_max[p][v]: range of net inflow at v from arcs p..end
    suffix_min = np.zeros((arc_count + 1, vertex_count), dtype=np.int64)
    suffix_max = np.zeros((arc_count + 1, vertex_count), dtype=np.int64)
    for p in range(arc_count - 1, -1, -1):
        suffix_min[p] = suffix_min[p + 1]
        suffix_max[p] = suffix_max[p + 1]
        arc = graph.arcs[p]
        if arc.is_loop:
            continue
        t, h = index[arc.tail], index[arc.head]
        suffix_min[p, h] += flow_spec.lower[p]
        suffix_max[p, h] += flow_spec.upper[p]
        suffix_min[p, t] -= flow_spec.upper[p]
        suffix_max[p, t] -= flow_spec.lower[p]

    need = list(flow_spec.demand)
    if any(not suffix_min[0, v] <= need[v] <= suffix_max[0, v] for v in range(vertex_count)):
        logger.info("Polytope is empty")
        return PointList(())

    points: List[LatticePoint] = []
    current = [0] * arc_count

    def extend(p: int):
        if p == arc_count:
            if len(points) >= cap:
                raise CapExceededError(f"More than {cap} lattice points")
            points.append(tuple(current))
            return
        arc = graph.arcs[p]
        lo, hi = flow_spec.lower[p], flow_spec.upper[p]
        if not arc.is_loop:
            t, h = index[arc.tail], index[arc.head]
            lo = max(lo, need[h] - int(suffix_max[p + 1, h]), int(suffix_min[p + 1, t]) - need[t])
            hi = min(hi, need[h] - int(suffix_min[p + 1, h]), int(suffix_max[p + 1, t]) - need[t])
        for x in range(lo, hi + 1):
            current[p] = x
            if not arc.is_loop:
                need[h] -= x
                need[t] += x
            extend(p + 1)
            if not arc.is_loop:
                need[h] += x
                need[t] -= x

    extend(0)
    logger.debug(f"Enumerated {len(points)} lattice points")
    return PointList(tuple(points))


def homogenize(spec: PolytopeSpec) -> FlowPolytopeSpec:
    """
    Put the polytope on an affine hyperplane off the origin.

    A nonzero demand already does this (some row of M_G f = d has a nonzero
    right side). Otherwise a loop arc fixed to 1 is prepended.
    """
    flow_spec = as_flow_spec(spec)
    if flow_spec.homogenized or any(flow_spec.demand):
        return flow_spec
    graph = flow_spec.graph
    vertices, demand = graph.vertices, flow_spec.demand
    if not vertices:
        vertices, demand = (HOMOGENIZING_ARC,), (0,)
    loop = Arc(HOMOGENIZING_ARC, vertices[0], vertices[0])
    return FlowPolytopeSpec(
        DirectedGraph(vertices, (loop,) + graph.arcs),
        demand,
        (1,) + flow_spec.lower,
        (1,) + flow_spec.upper,
        homogenized=True,
    )


def affine_rank(points: Sequence[Sequence[int]]) -> int:
    """Dimension of the affine span, computed exactly"""
    if len(points) <= 1:
        return 0
    base = points[0]
    rows = [[int(x) - int(b) for x, b in zip(p, base)] for p in points[1:]]
    return sympy.Matrix(rows).rank()


def make_cell(spec: FlowPolytopeSpec, offset: Sequence[int]) -> Cell:
    """Tighten the bounds of spec to the unit box at offset"""
    lower = tuple(max(lo, k) for lo, k in zip(spec.lower, offset))
    upper = tuple(min(hi, k + 1) for hi, k in zip(spec.upper, offset))
    for arc, lo, hi in zip(spec.graph.arcs, lower, upper):
        if lo > hi:
            raise SpecError(f"Offset leaves arc {arc.id} with an empty range")
    tightened = FlowPolytopeSpec(spec.graph, spec.demand, lower, upper, spec.homogenized)
    return Cell(tuple(int(k) for k in offset), tightened)


def canonical_offset(spec: FlowPolytopeSpec, point: Sequence[int]) -> Tuple[int, ...]:
    # Points on a slab boundary attach to the lower cell
    return tuple(int(f) if f < hi else int(f) - 1 for f, hi in zip(point, spec.upper))


def cell_of(point: Union[IntegerFlow, Sequence[int]], spec: Optional[PolytopeSpec] = None,
            cells: Optional[Sequence[Cell]] = None) -> Cell:
    """
    Cell of the canonical offset of a lattice point.

    Given the reported cells (enumerate_nonempty_cells), returns instead the
    one that owns the point under assign_points. The canonical cell can be a
    lower-dimensional face that is not reported.
    """
    if isinstance(point, IntegerFlow):
        flow_spec, value = point.spec, point.value
    else:
        if spec is None:
            raise SpecError("cell_of needs a spec for a raw point")
        flow_spec, value = as_flow_spec(spec), tuple(int(x) for x in point)
        problems = flow_violations(flow_spec, value)
        if problems:
            raise SpecError(f"Point outside the polytope: {problems[0]}")
    if cells is not None:
        owner = next((cell for cell in cells if cell.contains(value)), None)
        if owner is None:
            raise VerificationError(f"Point {value} lies in no reported cell")
        return owner
    return make_cell(flow_spec, canonical_offset(flow_spec, value))


def enumerate_nonempty_cells(spec: PolytopeSpec, points: Optional[PointList] = None) -> List[Cell]:
    """
    The maximal cells of the subdivision, sorted by offset.

    Points lie in a common unit box exactly when they are pairwise within
    sup-distance 1, so maximal cells are the maximal cliques of that graph.
    """
    flow_spec = as_flow_spec(spec)
    if points is None:
        points = enumerate_lattice_points(flow_spec)
    if len(points) == 0:
        return []
    coords = points.as_array()
    graph = nx.Graph()
    graph.add_nodes_from(range(len(points)))
    for i in range(len(points) - 1):
        close = np.abs(coords[i + 1:] - coords[i]).max(axis=1) <= 1
        graph.add_edges_from((i, i + 1 + int(j)) for j in np.flatnonzero(close))

    cells = []
    for clique in nx.find_cliques(graph):
        block = coords[sorted(clique)]
        lows, highs = block.min(axis=0), block.max(axis=0)
        offset = []
        for lo, hi, bound in zip(lows, highs, flow_spec.upper):
            if hi > lo or lo < bound:
                offset.append(int(lo))
            else:
                offset.append(int(lo) - 1)
        cells.append(make_cell(flow_spec, offset))
    cells.sort(key=lambda c: c.offset)
    logger.info(f"{len(cells)} maximal cells over {len(points)} lattice points")
    return cells


def cell_points(cell: Cell, points: PointList) -> List[int]:
    """Indices of the points of the list lying in the cell"""
    return [i for i, p in enumerate(points) if cell.contains(p)]


def assign_points(cells: Sequence[Cell], points: PointList) -> List[int]:
    """Partition the points: each goes to the first cell containing it"""
    owners = []
    for p in points:
        owner = next((c for c, cell in enumerate(cells) if cell.contains(p)), None)
        if owner is None:
            raise VerificationError(f"Point {p} lies in no reported cell")
        owners.append(owner)
    return owners


def complement_cell(z: Cell) -> Cell:
    """
    Exchange zeroes and ones in the frame translated by the offset.

    The result has offset 0; applied to a cell with offset 0 it is an
    involution.
    """
    spec = z.spec
    matrix = incidence_matrix(spec.graph)
    ones = np.ones(spec.arc_count, dtype=np.int64)
    shifted = np.asarray(spec.demand, dtype=np.int64) - matrix @ np.asarray(z.offset, dtype=np.int64)
    demand = tuple(int(x) for x in matrix @ ones - shifted)
    lower = tuple(1 - (hi - k) for hi, k in zip(spec.upper, z.offset))
    upper = tuple(1 - (lo - k) for lo, k in zip(spec.lower, z.offset))
    complemented = FlowPolytopeSpec(spec.graph, demand, lower, upper, spec.homogenized)
    return Cell(tuple([0] * spec.arc_count), complemented)


def complement_degree_bound(z: Cell) -> int:
    """min of the largest number of ones over the points of z and of its complement"""
    points = enumerate_lattice_points(z.spec)
    if len(points) == 0:
        return 0
    ones = [sum(x - k for x, k in zip(p, z.offset)) for p in points]
    return min(max(ones), z.spec.arc_count - min(ones))


def table_of(point: Sequence[int], t: TransportationSpec) -> np.ndarray:
    return np.asarray(point, dtype=np.int64).reshape(t.m, t.n)


def point_of(table: Any) -> LatticePoint:
    return tuple(int(x) for x in np.asarray(table, dtype=np.int64).reshape(-1))


def _integer(value: Any) -> int:
    # Infinity and NaN arrive as floats
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"Expected an integer, got {value!r}")
    if isinstance(value, float) and not value.is_integer():
        raise SpecError(f"Expected an integer, got {value!r}")
    return int(value)


def spec_from_json(data: Dict[str, Any]) -> PolytopeSpec:
    """Parse the graph or the transportation JSON format"""
    try:
        if "rows" in data:
            def matrix(key):
                value = data.get(key)
                return None if value is None else tuple(tuple(_integer(x) for x in row) for row in value)
            return TransportationSpec(
                tuple(_integer(r) for r in data["rows"]),
                tuple(_integer(c) for c in data["cols"]),
                matrix("lower"),
                matrix("upper"),
            )
        vertices = tuple(str(v) for v in data["vertices"])
        arcs = tuple(Arc(str(a["id"]), str(a["tail"]), str(a["head"])) for a in data["arcs"])
        lower = tuple(_integer(a.get("lower", 0)) for a in data["arcs"])
        upper = tuple(_integer(a["upper"]) for a in data["arcs"])
        demand_map = {str(k): _integer(v) for k, v in data.get("demand", {}).items()}
        unknown = set(demand_map) - set(vertices)
        if unknown:
            raise SpecError(f"Demand given for undeclared vertices {sorted(unknown)}")
        demand = tuple(demand_map.get(v, 0) for v in vertices)
        return FlowPolytopeSpec(
            DirectedGraph(vertices, arcs), demand, lower, upper, bool(data.get("homogenized", False))
        )
    except (KeyError, TypeError) as e:
        raise SpecError(f"Malformed spec JSON: {e}")


def spec_to_json(spec: PolytopeSpec) -> Dict[str, Any]:
    if isinstance(spec, TransportationSpec):
        return {
            "rows": list(spec.rows),
            "cols": list(spec.cols),
            "lower": None if spec.lower is None else [list(r) for r in spec.lower],
            "upper": None if spec.upper is None else [list(r) for r in spec.upper],
        }
    data = {
        "vertices": list(spec.graph.vertices),
        "arcs": [
            {"id": arc.id, "tail": arc.tail, "head": arc.head, "lower": lo, "upper": hi}
            for arc, lo, hi in zip(spec.graph.arcs, spec.lower, spec.upper)
        ],
        "demand": {v: d for v, d in zip(spec.graph.vertices, spec.demand)},
    }
    if spec.homogenized:
        data["homogenized"] = True
    return data


def load_spec(path: Union[str, Path]) -> PolytopeSpec:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SpecError(f"Cannot read spec {path}: {e}")
    return spec_from_json(data)


def point_from_json(data: Any, spec: PolytopeSpec) -> LatticePoint:
    """Accept a flat arc vector or, for transportation specs, a row-major matrix"""
    try:
        point = point_of(data)
    except (TypeError, ValueError) as e:
        raise SpecError(f"Malformed point JSON: {e}")
    expected = as_flow_spec(spec).arc_count
    if len(point) != expected:
        raise SpecError(f"Point has {len(point)} coordinates, expected {expected}")
    return point


def point_to_json(point: Sequence[int], spec: PolytopeSpec) -> Any:
    if isinstance(spec, TransportationSpec):
        return table_of(point, spec).tolist()
    return [int(x) for x in point]


def affine_coordinates(points: Sequence[Sequence[int]]) -> np.ndarray:
    """
    Integer coordinates of the points inside their affine span.

    Projects onto the pivot columns of the row-reduced difference matrix,
    which is injective on the span; lattice indices are not preserved.
    """
    arr = np.asarray(points, dtype=np.int64)
    if len(arr) <= 1:
        return np.zeros((len(arr), 0), dtype=np.int64)
    shifted = arr - arr[0]
    _, pivots = sympy.Matrix(shifted[1:].tolist()).rref()
    return shifted[:, list(pivots)]
