#!/usr/bin/env python3
"""
Command-line front end for FlowToric
Every subcommand prints deterministic JSON; exit codes are 0 success,
1 verification failure, 2 input error, 3 cap exceeded
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from acceptance import run_all
from config import (
    DEFAULT_POINT_CAP,
    DEFAULT_SEED,
    DEFAULT_TIME_CAP_SECONDS,
    GENERATOR_DEGREE,
    LOG_FORMAT,
    LOG_LEVEL,
)
from flowcore import (
    CapExceededError,
    PointList,
    PolytopeSpec,
    SpecError,
    VerificationError,
    cell_points,
    enumerate_lattice_points,
    enumerate_nonempty_cells,
    load_spec,
    point_from_json,
    point_to_json,
)
from markov import enumerate_fiber, fiber_connected, generate_moves_deg23, sample_fiber
from netflow import bvn_decompose
from order import TermOrder, ranking_from_json, revlex_from_ranking, subdivide_and_pull_order
from toric import buchberger, max_degree
from transform import bipartize, verify_semigroup_iso
from triangulate import cross_cell_nonface_check, enumerate_and_triangulate
from worstcase import birkhoff_family, smooth_shift, transport_family, verify_instance

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_INPUT = 2
EXIT_CAP = 3

SUBCOMMANDS = ("points", "cells", "decompose", "gb", "triangulate", "moves", "fiber-check",
               "sample", "worstcase", "bipartize", "verify-all")


@dataclass
class RunConfig:
    subcommand: str
    spec_path: Optional[str] = None
    options: Dict[str, Any] = field(default_factory=dict)
    point_cap: int = DEFAULT_POINT_CAP
    time_cap: float = DEFAULT_TIME_CAP_SECONDS
    degree_cap: Optional[int] = None
    seed: Optional[int] = None
    out: Optional[str] = None

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise SpecError(f"Unknown subcommand {self.subcommand}")
        if self.point_cap <= 0 or self.time_cap <= 0:
            raise SpecError("Caps must be positive")
        if self.degree_cap is not None and self.degree_cap <= 0:
            raise SpecError("Degree cap must be positive")
        if self.seed is None:
            if self.subcommand == "sample":
                raise SpecError("sample needs an explicit --seed")
            self.seed = DEFAULT_SEED
        if not 0 <= self.seed < 2 ** 64:
            raise SpecError("Seed must be a 64-bit unsigned integer")
        needs_spec = self.subcommand not in ("worstcase", "verify-all")
        if needs_spec and not self.spec_path:
            raise SpecError(f"{self.subcommand} needs a spec file")


def _json_arg(value: Optional[str], what: str) -> Any:
    """A JSON literal, or the path of a JSON file"""
    if value is None:
        raise SpecError(f"Missing {what}")
    try:
        if os.path.isfile(value):
            with open(value, "r", encoding="utf-8") as f:
                return json.load(f)
        return json.loads(value)
    except (OSError, json.JSONDecodeError) as e:
        raise SpecError(f"Cannot read {what}: {e}")


def _ranking(config: RunConfig, points: PointList) -> List[int]:
    raw = config.options.get("ranking")
    if raw is None:
        return list(range(len(points)))
    ranking = _json_arg(raw, "ranking")
    if not isinstance(ranking, list):
        raise SpecError("Ranking must be a JSON list of point indices")
    return list(ranking_from_json(ranking, points))


def _order(config: RunConfig, spec: PolytopeSpec, points: PointList) -> TermOrder:
    ranking = _ranking(config, points)
    if config.options.get("order") == "revlex":
        return revlex_from_ranking(points, ranking)
    return subdivide_and_pull_order(spec, ranking, points)


def cmd_points(config: RunConfig, spec: PolytopeSpec) -> Tuple[Dict[str, Any], bool]:
    points = enumerate_lattice_points(spec, config.point_cap)
    return {"count": len(points), "points": [point_to_json(p, spec) for p in points]}, True


def cmd_cells(config: RunConfig, spec: PolytopeSpec) -> Tuple[Dict[str, Any], bool]:
    points = enumerate_lattice_points(spec, config.point_cap)
    cells = enumerate_nonempty_cells(spec, points)
    return {
        "count": len(cells),
        "cells": [{"offset": list(c.offset), "points": cell_points(c, points)} for c in cells],
    }, True


def cmd_decompose(config: RunConfig, spec: PolytopeSpec) -> Tuple[Dict[str, Any], bool]:
    k = int(config.options.get("k") or 1)
    flow = point_from_json(_json_arg(config.options.get("point"), "point"), spec)
    decomposition = bvn_decompose(flow, k, spec)
    return {"k": k, "parts": [point_to_json(p.value, spec) for p in decomposition.parts]}, True


def cmd_gb(config: RunConfig, spec: PolytopeSpec) -> Tuple[Dict[str, Any], bool]:
    points = enumerate_lattice_points(spec, config.point_cap)
    order = _order(config, spec, points)
    # Flow polytopes are generated in degree 3, so the relation census is a complete start
    gb = buchberger(points, order, degree_cap=config.degree_cap, time_cap=config.time_cap,
                    generator_degree=GENERATOR_DEGREE)
    if gb.reason == 'time':
        raise CapExceededError(f"Buchberger exceeded {config.time_cap}s")
    payload = gb.to_json()
    payload["max_degree"] = None if gb.truncated else max_degree(gb)
    return payload, True


def cmd_triangulate(config: RunConfig, spec: PolytopeSpec) -> Tuple[Dict[str, Any], bool]:
    points = enumerate_lattice_points(spec, config.point_cap)
    order = _order(config, spec, points)
    report = enumerate_and_triangulate(spec, order)
    cross = cross_cell_nonface_check(spec, order)
    report["cross_cell"] = cross
    return report, report['success'] and cross['success']


def cmd_moves(config: RunConfig, spec: PolytopeSpec) -> Tuple[Dict[str, Any], bool]:
    points = enumerate_lattice_points(spec, config.point_cap)
    moves = generate_moves_deg23(spec, points, max_degree=int(config.options.get("max_degree") or 3))
    return moves.to_json(), True


def cmd_fiber_check(config: RunConfig, spec: PolytopeSpec) -> Tuple[Dict[str, Any], bool]:
    points = enumerate_lattice_points(spec, config.point_cap)
    k = int(config.options.get("k") or 1)
    target = point_from_json(_json_arg(config.options.get("target"), "target"), spec)
    fiber = enumerate_fiber(spec, target, k, points, config.options.get("fiber_cap"))
    moves = generate_moves_deg23(spec, points, max_degree=int(config.options.get("max_degree") or 3))
    report = fiber_connected(fiber, moves)
    report["elements"] = [u.to_json() for u in fiber.elements]
    report["moves"] = len(moves)
    return report, True


def cmd_sample(config: RunConfig, spec: PolytopeSpec) -> Tuple[Dict[str, Any], bool]:
    points = enumerate_lattice_points(spec, config.point_cap)
    k = int(config.options.get("k") or 1)
    target = point_from_json(_json_arg(config.options.get("target"), "target"), spec)
    moves = generate_moves_deg23(spec, points)
    steps = int(config.options.get("steps") or 0)
    burn_in = int(config.options.get("burn_in") or 0)
    final = sample_fiber(spec, target, k, moves, steps, config.seed, burn_in, points)
    return {
        "steps": steps,
        "burn_in": burn_in,
        "final": final.to_json(),
        "tables": [point_to_json(points[i], spec) for i in final.indices()],
    }, True


def cmd_worstcase(config: RunConfig, spec: Optional[PolytopeSpec]) -> Tuple[Dict[str, Any], bool]:
    if config.options.get("birkhoff") is not None:
        inst = birkhoff_family(int(config.options["birkhoff"]))
    elif config.options.get("transport"):
        m, n = config.options["transport"]
        inst = transport_family(int(m), int(n))
        if config.options.get("smooth"):
            inst = smooth_shift(inst)
    else:
        raise SpecError("worstcase needs --birkhoff N or --transport M N")
    report = verify_instance(inst)
    return {"instance": inst.to_json(), "verification": report}, report['success']


def cmd_bipartize(config: RunConfig, spec: PolytopeSpec) -> Tuple[Dict[str, Any], bool]:
    result = bipartize(spec)
    points = enumerate_lattice_points(result.original, config.point_cap)
    payload = result.to_json(points)
    report = verify_semigroup_iso(result, int(config.options.get("k_max") or 3), config.point_cap)
    payload["verification"] = report
    return payload, report['success']


def cmd_verify_all(config: RunConfig, spec: Optional[PolytopeSpec]) -> Tuple[Dict[str, Any], bool]:
    reports = run_all(seed=config.seed, quick=bool(config.options.get("quick")))
    return {"criteria": reports}, all(r['success'] for r in reports)


HANDLERS: Dict[str, Callable[[RunConfig, Optional[PolytopeSpec]], Tuple[Dict[str, Any], bool]]] = {
    "points": cmd_points,
    "cells": cmd_cells,
    "decompose": cmd_decompose,
    "gb": cmd_gb,
    "triangulate": cmd_triangulate,
    "moves": cmd_moves,
    "fiber-check": cmd_fiber_check,
    "sample": cmd_sample,
    "worstcase": cmd_worstcase,
    "bipartize": cmd_bipartize,
    "verify-all": cmd_verify_all,
}


def run(config: RunConfig) -> int:
    """Validate, compute, then write; nothing is written when computing fails"""
    try:
        config.validate()
        spec = load_spec(config.spec_path) if config.spec_path else None
        payload, ok = HANDLERS[config.subcommand](config, spec)
    except SpecError as e:
        logger.error(f"Input error: {e}")
        return EXIT_INPUT
    except CapExceededError as e:
        logger.error(f"Cap exceeded: {e}")
        return EXIT_CAP
    except VerificationError as e:
        logger.error(f"Verification failed: {e}")
        return EXIT_VERIFICATION

    document = {"command": config.subcommand, "seed": config.seed, "success": ok, "result": payload}
    text = json.dumps(document, sort_keys=True, indent=2, default=_json_default)
    if config.out:
        try:
            with open(config.out, "w", encoding="utf-8") as f:
                f.write(text + "\n")
        except OSError as e:
            logger.error(f"Cannot write {config.out}: {e}")
            return EXIT_INPUT
        logger.info(f"Wrote {config.out}")
    else:
        print(text)
    return EXIT_OK if ok else EXIT_VERIFICATION


def _json_default(value: Any) -> Any:
    if hasattr(value, "to_json"):
        return value.to_json()
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, (set, frozenset, tuple)):
        return sorted(value)
    raise TypeError(f"Not JSON serializable: {type(value).__name__}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--cap-points', type=int, default=DEFAULT_POINT_CAP, help='Lattice point cap')
    common.add_argument('--cap-seconds', type=float, default=DEFAULT_TIME_CAP_SECONDS, help='Time cap in seconds')
    common.add_argument('--degree-cap', type=int, help='Skip S-pairs above this degree')
    common.add_argument('--seed', type=int, help=f'Seed for randomized steps (required by sample, else {DEFAULT_SEED})')
    common.add_argument('--out', help='Write the JSON result here instead of stdout')
    common.add_argument('--log-level', default=LOG_LEVEL, help='Logging level')

    parser = argparse.ArgumentParser(description='Toric ideals of flow and transportation polytopes')
    sub = parser.add_subparsers(dest='subcommand', required=True)

    def with_spec(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument('spec', help='Spec JSON file')
        return p

    with_spec('points', 'Enumerate lattice points')
    with_spec('cells', 'List the maximal unit cells')
    p = with_spec('decompose', 'Split a point of k*F into k points of F')
    p.add_argument('--point', required=True, help='Point JSON (literal or file)')
    p.add_argument('--k', type=int, default=1)
    for name, help_text in (('gb', 'Reduced Groebner basis'), ('triangulate', 'Cell-wise pulling triangulations')):
        p = with_spec(name, help_text)
        p.add_argument('--ranking', help='Point ranking JSON, most expensive first')
        p.add_argument('--order', choices=('subdivide-pull', 'revlex'), default='subdivide-pull')
    p = with_spec('moves', 'Degree-2 and degree-3 moves')
    p.add_argument('--max-degree', type=int, choices=(2, 3), default=3)
    p = with_spec('fiber-check', 'Connectivity of one fiber under the moves')
    p.add_argument('--target', required=True, help='Target JSON (literal or file)')
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--max-degree', type=int, choices=(2, 3), default=3)
    p.add_argument('--fiber-cap', type=int)
    p = with_spec('sample', 'Metropolis walk on a fiber')
    p.add_argument('--target', required=True, help='Target JSON (literal or file)')
    p.add_argument('--k', type=int, required=True)
    p.add_argument('--steps', type=int, default=1000)
    p.add_argument('--burn-in', type=int, default=0)
    p = sub.add_parser('worstcase', parents=[common], help='High-degree Groebner families')
    p.add_argument('--birkhoff', type=int, metavar='N')
    p.add_argument('--transport', type=int, nargs=2, metavar=('M', 'N'))
    p.add_argument('--smooth', action='store_true')
    p = with_spec('bipartize', 'Bipartite vertex splitting')
    p.add_argument('--k-max', type=int, default=3)
    p = sub.add_parser('verify-all', parents=[common], help='Run the acceptance suite')
    p.add_argument('--quick', action='store_true', help='Smaller samples and margins')
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    reserved = {'subcommand', 'spec', 'cap_points', 'cap_seconds', 'degree_cap', 'seed', 'out', 'log_level'}
    options = {k: v for k, v in vars(args).items() if k not in reserved}
    return RunConfig(
        subcommand=args.subcommand,
        spec_path=getattr(args, 'spec', None),
        options=options,
        point_cap=args.cap_points,
        time_cap=args.cap_seconds,
        degree_cap=args.degree_cap,
        seed=args.seed,
        out=args.out,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Main function"""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=str(args.log_level).upper(), format=LOG_FORMAT)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
