"""Command-line front end: JSON in, reports and DOT out.

Exit codes: 0 all checks passed, 1 a verification failed, 2 malformed
input, 3 a bounded search or stabilization depth was exceeded.  Output is
deterministic: JSON with sorted keys, DOT stable-sorted by level and
vertex index.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .abelian import (
    FgAbelianGroup,
    IntMatrix,
    LocalizedGroupDescriptor,
    is_n_divisible,
    is_uniquely_n_divisible,
)
from .dimension import (
    OrderedStagedSystem,
    RealizationError,
    ShenDepthExceeded,
    basis_atom_enumerator,
    diagram_from_json_dict,
    diagram_to_dot,
    diagram_to_json_dict,
    diagram_to_system,
    ehs_realize,
    ehs_realize_with_endo,
    multimatrix_dims,
    telescope,
    unit_atom_enumerator,
    validate_diagram,
)
from .eplag import (
    EplagGroup,
    PrimeLabeledGraph,
    divisibility_fingerprint,
    is_P_divisible_sample,
    membership,
    tree_to_eplag,
)
from .invariants import (
    KirchbergInvariant,
    absorption_equivalences,
    crossed_product_invariant,
    d_p_absorbing,
    group_to_invariant,
    kp_isomorphic,
    o_infty_st_absorbing,
    pipeline,
)
from .limits import (
    LimitElement,
    LimitEndomorphism,
    NotFinitelyGeneratedError,
    StagedSystem,
    build_limit_group,
)
from .rordam import WidthError, rordam_pair, rordam_verify
from .schreier import kernel_oracle, schreier_generators

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_PARSE = 2
EXIT_DEPTH = 3


class InputError(ValueError):
    """Malformed input file or flag; maps to exit code 2."""


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def _load_json(path: str):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise InputError(f"{path}: file not found")
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}")


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise InputError(f"{where}: missing field {key!r}")
    return data[key]


def group_from_json(data: dict, where: str = "group") -> FgAbelianGroup:
    gens = _require(data, "generators", where)
    rels = data.get("relations", [])
    try:
        return FgAbelianGroup.from_relation_rows(int(gens), rels)
    except (TypeError, ValueError) as e:
        raise InputError(f"{where}: {e}")


def group_to_json(g: FgAbelianGroup) -> dict:
    return {"generators": g.num_generators, "relations": g.relations.to_rows()}


def system_from_json(data: dict, where: str = "system") -> StagedSystem:
    kind = _require(data, "kind", where)
    mats = [IntMatrix.from_rows(m) for m in _require(data, "matrices", where)]
    injective = data.get("injective")
    try:
        if kind == "stationary":
            if len(mats) != 1:
                raise InputError(f"{where}: stationary systems take exactly one matrix")
            return StagedSystem.stationary(mats[0], injective=injective)
        if kind == "prefix+tail":
            period = int(data.get("period", 1))
            if not (1 <= period <= len(mats)):
                raise InputError(f"{where}: period must be between 1 and the matrix count")
            return StagedSystem.from_matrices(mats[:-period], mats[-period:], injective=injective)
        raise InputError(f"{where}: unknown kind {kind!r}")
    except ValueError as e:
        raise InputError(f"{where}: {e}")


def ordered_system_from_json(data: dict, where: str = "system") -> OrderedStagedSystem:
    sys_ = system_from_json(data, where)
    cone = data.get("cone", "simplicial")
    unit = data.get("unit")
    if unit is None:
        raise InputError(f"{where}: ordered systems need a stage-0 'unit' vector")
    try:
        return OrderedStagedSystem(
            system=sys_, cone=cone, unit=LimitElement(0, tuple(int(x) for x in unit))
        )
    except ValueError as e:
        raise InputError(f"{where}: {e}")


def eplag_from_json(data: dict, where: str = "graph") -> EplagGroup:
    vertices = _require(data, "vertices", where)
    labels = {}
    names = []
    for name, label in sorted(vertices.items()):
        names.append(name)
        labels[name] = int(label)
    edges = []
    for e in data.get("edges", []):
        ends = _require(e, "ends", f"{where}.edges")
        key = frozenset(ends)
        edges.append(key)
        labels[key] = int(_require(e, "label", f"{where}.edges"))
    P = tuple(int(p) for p in data.get("P", []))
    try:
        return EplagGroup(PrimeLabeledGraph(tuple(names), tuple(edges), labels, P))
    except ValueError as e:
        raise InputError(f"{where}: {e}")


def eplag_to_json(group: EplagGroup) -> dict:
    g = group.graph
    return {
        "vertices": {v: g.labels[v] for v in g.vertices},
        "edges": [
            {"ends": sorted(e), "label": g.labels[e]} for e in sorted(g.edges, key=sorted)
        ],
        "P": list(g.divisibility_set),
    }


def qvector_from_json(data: dict, where: str = "target") -> dict:
    out = {}
    try:
        for v, val in data.items():
            out[v] = Fraction(val) if not isinstance(val, str) else Fraction(val)
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"{where}: {e}")
    return out


def invariant_to_json(inv: KirchbergInvariant) -> dict:
    k0 = inv.k0
    if isinstance(k0, FgAbelianGroup):
        k0_data = {"type": "fg", "invariant_factors": list(k0.invariant_factors)}
    elif isinstance(k0, LocalizedGroupDescriptor):
        k0_data = {
            "type": "localized",
            "prime": k0.prime,
            "free_rank": k0.free_rank,
            "torsion": list(k0.torsion),
        }
    else:
        k0_data = {"type": "eplag", "vertices": len(k0.graph.vertices)}
    return {
        "k0": k0_data,
        "unit": "0" if inv.unit_is_zero() else list(inv.unit_class),
        "k1": list(inv.k1.invariant_factors),
        "description": inv.describe(),
    }


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _emit(report: dict, fmt: str, lines_fn=None):
    if fmt == "json":
        print(json.dumps(report, sort_keys=True, indent=2))
    else:
        for line in (lines_fn(report) if lines_fn else _default_lines(report)):
            print(line)


def _default_lines(report, prefix=""):
    lines = []
    if isinstance(report, dict):
        for k in sorted(report):
            v = report[k]
            if isinstance(v, (dict, list)):
                lines.append(f"{prefix}{k}:")
                lines.extend(_default_lines(v, prefix + "  "))
            else:
                lines.append(f"{prefix}{k}: {v}")
    elif isinstance(report, list):
        for v in report:
            if isinstance(v, (dict, list)):
                lines.extend(_default_lines(v, prefix + "  "))
            else:
                lines.append(f"{prefix}- {v}")
    return lines


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_group(args) -> int:
    g = group_from_json(_load_json(args.group), args.group)
    divisors = [int(d) for d in args.divisors.split(",") if d]
    report = {
        "invariant_factors": list(g.invariant_factors),
        "description": g.describe(),
        "divisibility": {
            str(n): {
                "divisible": is_n_divisible(g, n),
                "uniquely_divisible": is_uniquely_n_divisible(g, n),
            }
            for n in divisors
        },
    }
    _emit(report, args.format)
    return EXIT_OK


def cmd_limits(args) -> int:
    sys_ = system_from_json(_load_json(args.system), args.system)
    try:
        g = build_limit_group(sys_, args.depth)
    except NotFinitelyGeneratedError as e:
        _emit({"error": str(e)}, args.format)
        return EXIT_DEPTH
    _emit({"limit_invariant_factors": list(g.invariant_factors), "description": g.describe()},
          args.format)
    return EXIT_OK


def cmd_schreier(args) -> int:
    target = group_from_json(_load_json(args.target), args.target)
    try:
        images = json.loads(args.images)
    except json.JSONDecodeError as e:
        raise InputError(f"--images: {e.msg}")
    oracle = kernel_oracle(target, images)
    gens = schreier_generators(oracle, args.word_bound, args.gen_bound)
    _emit({"count": len(gens), "generators": [str(g) for g in gens]}, args.format)
    return EXIT_OK


def cmd_rordam(args) -> int:
    g = group_from_json(_load_json(args.group), args.group)
    try:
        pair = rordam_pair(g, args.width)
    except WidthError as e:
        raise InputError(str(e))
    report = rordam_verify(pair, g, args.depth)
    _emit(
        {
            "pass": report.passed,
            "expected_invariant_factors": list(report.expected),
            "found_per_depth": [list(f) for f in report.found_per_depth],
        },
        args.format,
    )
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


def cmd_diagram(args) -> int:
    d = diagram_from_json_dict(_load_json(args.diagram))
    if args.action == "validate":
        violations = validate_diagram(d)
        _emit({"valid": not violations, "violations": violations}, args.format)
        return EXIT_OK if not violations else EXIT_VERIFY_FAIL
    if args.action == "k0":
        violations = validate_diagram(d)
        if violations:
            _emit({"valid": False, "violations": violations}, args.format)
            return EXIT_VERIFY_FAIL
        D = diagram_to_system(d)
        report = {
            "levels": [
                {"rank": d.level_size(n), "multimatrix_dims": list(multimatrix_dims(d, n))}
                for n in range(d.num_levels)
            ],
            "cone": D.cone,
            "unit": list(D.unit.vector),
        }
        _emit(report, args.format)
        return EXIT_OK
    if args.action == "dot":
        text = diagram_to_dot(d)
        if args.out:
            with open(args.out, "w") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if args.action == "telescope":
        try:
            cuts = [int(c) for c in args.cuts.split(",")]
        except ValueError:
            raise InputError("--cuts: expected comma-separated integers")
        try:
            out = telescope(d, cuts)
        except ValueError as e:
            raise InputError(str(e))
        print(json.dumps(diagram_to_json_dict(out), sort_keys=True, indent=2))
        return EXIT_OK
    raise InputError(f"unknown diagram action {args.action!r}")


def _realization_report(result) -> dict:
    report = {
        "diagram": diagram_to_json_dict(result.diagram),
        "thetas": [
            [{"stage": t.stage, "vector": list(t.vector)} for t in level]
            for level in result.thetas
        ],
        "coverage": [
            {
                "level": rec.level,
                "stage": rec.element.stage,
                "vector": list(rec.element.vector),
                "expression": list(rec.expression),
                "appears_literally": rec.appears_literally,
                "from_enumerator": rec.from_enumerator,
            }
            for rec in result.coverage
        ],
    }
    if result.endomorphism is not None:
        report["q"] = [m.to_rows() for m in result.endomorphism.q]
    return report


def cmd_ehs(args) -> int:
    D = ordered_system_from_json(_load_json(args.system), args.system)
    enumerator = (
        basis_atom_enumerator(D) if D.cone == "simplicial" else unit_atom_enumerator(D)
    )
    endo = None
    if args.endo:
        data = _load_json(args.endo)
        kind = _require(data, "kind", args.endo)
        if kind not in ("same_stage", "cross_stage"):
            raise InputError(f"{args.endo}: kind must be same_stage or cross_stage")
        endo = LimitEndomorphism.stationary(
            IntMatrix.from_rows(_require(data, "matrix", args.endo)),
            cross_stage=(kind == "cross_stage"),
        )
    try:
        if endo is None:
            result = ehs_realize(D, enumerator, args.depth, search_bound=args.bound)
        else:
            result = ehs_realize_with_endo(D, endo, enumerator, args.depth, search_bound=args.bound)
    except ShenDepthExceeded as e:
        _emit({"error": str(e)}, args.format)
        return EXIT_DEPTH
    except RealizationError as e:
        _emit({"error": str(e)}, args.format)
        return EXIT_VERIFY_FAIL
    _emit(_realization_report(result), args.format)
    return EXIT_OK


def cmd_eplag(args) -> int:
    if args.action == "tree":
        if not args.tree:
            raise InputError("eplag tree: --tree is required")
        tree = _load_json(args.tree)
        P = [int(p) for p in args.p.split(",") if p]
        group = tree_to_eplag(tree, P)
        print(json.dumps(eplag_to_json(group), sort_keys=True, indent=2))
        return EXIT_OK
    if not args.graph:
        raise InputError(f"eplag {args.action}: --graph is required")
    group = eplag_from_json(_load_json(args.graph), args.graph)
    if args.action == "member":
        if not args.target:
            raise InputError("eplag member: --target is required")
        target = qvector_from_json(_load_json(args.target), args.target)
        result = membership(group, target, args.bound)
        report = {"status": result.status, "bound": result.bound}
        if result.certificate is not None:
            report["certificate"] = dict(sorted(result.certificate.items()))
        _emit(report, args.format)
        return EXIT_OK
    if args.action == "fingerprint":
        fp = divisibility_fingerprint(group, args.prime_bound, args.bound)
        _emit(
            {
                "fingerprint": [list(s) for s in fp],
                "p_divisible_sample": is_P_divisible_sample(group, args.bound),
            },
            args.format,
        )
        return EXIT_OK
    raise InputError(f"unknown eplag action {args.action!r}")


def cmd_pipeline(args) -> int:
    g = group_from_json(_load_json(args.group), args.group)
    try:
        report = pipeline(g, args.prime, args.depth, width=args.width)
    except WidthError as e:
        raise InputError(str(e))
    except ShenDepthExceeded as e:
        _emit({"error": str(e)}, args.format)
        return EXIT_DEPTH
    out = {
        "group": group_to_json(g),
        "prime": args.prime,
        "depth": args.depth,
        "width": args.width,
        "stages": {
            "rordam": {
                "pass": report.rordam.passed,
                "expected": list(report.rordam.expected),
                "found_per_depth": [list(f) for f in report.rordam.found_per_depth],
            },
            "realization": {
                "pass": report.realization_valid,
                "levels": report.realization.diagram.num_levels if report.realization else 0,
            },
            "pv": {
                "pass": report.pv.passed,
                "cokernel_invariant_factors": list(report.pv.cokernel_factors),
                "kernel_rank": report.pv.kernel_rank,
            },
        },
        "invariant": invariant_to_json(report.invariant),
        "absorption": {
            "o_infty_standard": report.o_infty_absorbing,
            f"d_{args.prime}": report.dp_absorbing,
        },
        "crossed_product_invariant": invariant_to_json(report.crossed_product),
        "all_passed": report.all_passed,
    }
    if args.emit_diagram and report.realization:
        with open(args.emit_diagram, "w") as f:
            json.dump(diagram_to_json_dict(report.realization.diagram), f, sort_keys=True, indent=2)
    if args.dot and report.realization:
        with open(args.dot, "w") as f:
            f.write(diagram_to_dot(report.realization.diagram))
    _emit(out, args.format)
    return EXIT_OK if report.all_passed else EXIT_VERIFY_FAIL


def cmd_invariant(args) -> int:
    g = group_from_json(_load_json(args.group), args.group)
    inv = group_to_invariant(g)
    report = {
        "invariant": invariant_to_json(inv),
        "o_infty_standard_absorbing": o_infty_st_absorbing(inv),
    }
    if args.prime:
        report[f"d_{args.prime}_absorbing"] = d_p_absorbing(g, args.prime)
        report["crossed_product_invariant"] = invariant_to_json(
            crossed_product_invariant(inv, args.prime)
        )
    if args.compare:
        other = group_to_invariant(group_from_json(_load_json(args.compare), args.compare))
        iso = kp_isomorphic(inv, other)
        report["comparison"] = {
            "kp_isomorphic": iso if iso is not None else "unknown",
        }
        if args.prime:
            eqs = absorption_equivalences(inv, other, args.prime)
            report["comparison"]["equivalences"] = {
                k: (v if v is not None else "unknown") for k, v in eqs.items()
            }
    _emit(report, args.format)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afkit",
        description="Exact staged-algebra toolkit: groups, limits, diagrams, invariants.",
    )
    parser.add_argument("--format", choices=["json", "text"], default="text")
    parser.add_argument("--jobs", type=int, default=1, help="reserved; execution is single-threaded")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("group", help="canonical form and divisibility of a presented group")
    p.add_argument("group")
    p.add_argument("--divisors", default="2,3,5")
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("limits", help="finitely generated limit of a staged system")
    p.add_argument("system")
    p.add_argument("--depth", type=int, default=8)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("schreier", help="free generators of a kernel subgroup")
    p.add_argument("--target", required=True)
    p.add_argument("--images", required=True, help="JSON list of image vectors")
    p.add_argument("--word-bound", type=int, default=4)
    p.add_argument("--gen-bound", type=int, default=2)
    p.set_defaults(func=cmd_schreier)

    p = sub.add_parser("rordam", help="build and verify the staged pair for a group")
    p.add_argument("--group", required=True)
    p.add_argument("--width", type=int, default=6)
    p.add_argument("--depth", type=int, default=4)
    p.set_defaults(func=cmd_rordam)

    p = sub.add_parser("diagram", help="validate, summarize, render, or telescope a diagram")
    p.add_argument("action", choices=["validate", "k0", "dot", "telescope"])
    p.add_argument("diagram")
    p.add_argument("--cuts", default="0")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("ehs", help="realize an ordered system as a diagram")
    p.add_argument("--system", required=True)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--endo", help="stationary endomorphism JSON")
    p.add_argument("--bound", type=int, default=48)
    p.set_defaults(func=cmd_ehs)

    p = sub.add_parser("eplag", help="labeled-graph groups: build, test membership, fingerprint")
    p.add_argument("action", choices=["tree", "member", "fingerprint"])
    p.add_argument("--tree")
    p.add_argument("--p", default="", help="comma-separated divisibility primes")
    p.add_argument("--graph")
    p.add_argument("--target")
    p.add_argument("--bound", type=int, default=3)
    p.add_argument("--prime-bound", type=int, default=20)
    p.set_defaults(func=cmd_eplag)

    p = sub.add_parser("pipeline", help="full invariant pipeline for a presented group")
    p.add_argument("--group", required=True)
    p.add_argument("--prime", type=int, required=True)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--width", type=int, default=6)
    p.add_argument("--emit-diagram")
    p.add_argument("--dot")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("invariant", help="invariant triple and absorption flags")
    p.add_argument("group")
    p.add_argument("--prime", type=int)
    p.add_argument("--compare", help="second group JSON to compare against")
    p.set_defaults(func=cmd_invariant)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except NotFinitelyGeneratedError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DEPTH


if __name__ == "__main__":
    sys.exit(main())
