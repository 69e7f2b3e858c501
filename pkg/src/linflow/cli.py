"""Command-line interface.

Exit codes: 0 when the checked property holds, 1 when it was checked and
fails, 2 for usage or file-format errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import fixtures
from .flows import (SearchCapExceeded, check_flow, check_global, edge3color, every_flow_global,
                    format_flow, hat2_counterexample, parse_flow, search_flow)
from .imploid import (BUILTIN_IMPLOIDS, FormatError, ImploidTable, PreconditionError, builtin,
                      check_axioms, format_table, parse_table, quotient)
from .lambda_terms import (FAMILIES, LinearTerm, beta_normalize, classify, enumerate_terms,
                           map_to_term, parse, print_term, redexes, size, term_to_map)
from .maps import (RootedMap, bridges, canonical_form, classify_orientation, dual, enumerate_maps,
                   format_map, format_orientation, genus, is_bridgeless, parse_map,
                   parse_orientation, to_dot, topological_orientation, validate)
from .polarized import (_env, evaluate, instantiate, match_types, minimal_polarization, parse_type,
                        search_instantiation, universal_flow)
from .rewriting import (Move, MoveError, check_move_soundness, encode, format_sequence,
                        parse_sequence, replay)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- loading ----------------------------------------------------------------

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def load_imploid(spec: str) -> ImploidTable:
    """A builtin name or a table file."""
    if Path(spec).is_file():
        T = parse_table(_read(spec))
    else:
        try:
            T = builtin(spec)
        except PreconditionError:
            raise UsageError(f"{spec!r} is neither a file nor a builtin "
                             f"({', '.join(BUILTIN_IMPLOIDS)})") from None
    if not isinstance(T, ImploidTable):
        raise UsageError(f"{spec} is a skew monoid, not an imploid")
    return T


def load_term(spec: str) -> LinearTerm:
    return parse(_read(spec) if Path(spec).is_file() else spec)


def load_map(args, need_orient: bool = False):
    if not args.map:
        raise UsageError("--map is required")
    M = parse_map(_read(args.map))
    O = None
    if args.orient:
        O = parse_orientation(_read(args.orient), M)
    elif need_orient:
        raise UsageError("--orient is required")
    return M, O


def parse_assignment(text: str) -> dict:
    """Lines ``name value`` or ``name lo hi``."""
    out = {}
    for no, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) == 2:
            out[parts[0]] = parts[1]
        elif len(parts) == 3:
            out[parts[0]] = (parts[1], parts[2])
        else:
            raise FormatError(f"line {no}: expected 'name value' or 'name lo hi'")
    return out


def _show(t: LinearTerm) -> str:
    return print_term(t, with_context=t.arity > 0)


def _map_report(M: RootedMap) -> dict:
    return {"arcs": M.n_arcs, "vertices": len(M.cycles), "edges": len(list(M.edges())),
            "genus": genus(M), "root": M.root}


# -- library-level reports --------------------------------------------------

def oeis_crosscheck(family: str, k: int) -> dict:
    """Compare counts for sizes 1..k against the vendored OEIS prefix."""
    if family not in FAMILIES:
        raise UsageError(f"unknown family {family!r}")
    entry = fixtures.oeis()[family]
    expected = fixtures.oeis_prefix(family, k)
    ours = [enumerate_terms(n, family, cap=max(k, 6)) for n in range(1, k + 1)]
    return {"family": family, "id": entry["id"], "k": k, "ours": ours,
            "expected": expected, "match": ours == expected}


def _nowhere_unit_off_root(M: RootedMap, P: ImploidTable, values: dict) -> bool:
    return all(not P.dominates_unit(P.index(x)) for a, x in values.items() if a != M.root & ~1)


def demo_appendix_b(term: LinearTerm | None = None, assignment: dict | None = None) -> dict:
    """Run the worked example end to end and report each stage.

    With the bundled term the universal flow is compared with the stored
    types up to renaming and the stored colouring is instantiated in the
    Klein group. Another term gets the same pipeline, with the comparison
    replaced by a count check and the colouring found by search, which need
    not be nowhere-unit.
    """
    data = fixtures.appendix_b()
    bundled = term is None
    t = fixtures.appendix_b_term() if bundled else term
    stages = []

    def stage(name, ok, **detail):
        stages.append({"stage": name, "ok": bool(ok), **detail})
        return ok

    M, O = term_to_map(t)
    stage("term", map_to_term(M) == t, size=list(size(t.term)))
    stage("map", genus(M) == 0 and is_bridgeless(M), genus=genus(M), bridgeless=is_bridgeless(M))
    pi = minimal_polarization(M, O)
    n_red, n_black = len(redexes(t.term)), len(pi.blacks())
    stage("redexes", n_red == n_black and (not bundled or n_red == 1),
          redexes=n_red, black_vertices=n_black)
    U = universal_flow(pi)
    detail = {"root_type": U.format_root(), "constraints": U.format_constraints()}
    renaming = None
    if bundled and len(U.constraints) == 1:
        c = U.constraints[0]
        renaming = match_types([(U.root_type, parse_type(data["root_type"])),
                                (c.lhs, parse_type(data["beta_lhs"])),
                                (c.rhs, parse_type(data["beta_rhs"]))])
        ok = renaming is not None
    else:
        ok = not bundled and len(U.constraints) == n_red
    stage("universal_flow", ok, **detail)
    K = builtin("klein_four")
    if bundled:
        letters = assignment if assignment is not None else fixtures.appendix_b_assignment()
        asg = {w: letters[nm] for w, nm in (renaming or {}).items() if nm in letters}
    else:
        asg = assignment or search_instantiation(U, K)
    try:
        if not asg:
            raise PreconditionError("no instantiation found")
        inst = instantiate(U, asg, K)
        env = _env(U, K, asg)
    except (PreconditionError, KeyError) as exc:
        stage("instantiation", False, error=str(exc))
    else:
        flow = inst.contracted or {}
        valid = inst.ok and check_flow(M, O, K, flow).valid
        nowhere = valid and _nowhere_unit_off_root(M, K, flow)
        sides = [(evaluate(c.lhs, K, env), evaluate(c.rhs, K, env)) for c in U.constraints]
        tight = all(a == b for a, b in sides)
        if bundled and sides:
            tight = tight and K.elements[sides[0][1]] == data["colors"][data["beta_value"]]
        stage("instantiation", valid and tight and (nowhere or not bundled), valid=valid, nowhere_unit=nowhere,
              beta_equalities=tight, violations=inst.violations)
    return {"term": print_term(t), "stages": stages, "ok": all(s["ok"] for s in stages)}


# -- handlers ---------------------------------------------------------------
# Each returns (exit code, json report, text).

def _imploid(args):
    P = load_imploid(args.imploid)
    if args.action == "builtin":
        return EXIT_OK, {"name": args.imploid, "table": format_table(P)}, format_table(P)
    if args.action == "check":
        rep = check_axioms(P)
        data = {"valid": rep.valid, "left_normal": rep.left_normal, "symmetric": rep.symmetric,
                "dni": rep.dni, "violations": [[law, list(xs)] for law, xs in rep.violations]}
        text = "\n".join([f"valid: {rep.valid}", f"left_normal: {rep.left_normal}",
                          f"symmetric: {rep.symmetric}", f"dni: {rep.dni}"]
                         + [f"violation {law}: {' '.join(xs)}" for law, xs in rep.violations[:20]])
        return (EXIT_OK if rep.valid else EXIT_FAIL), data, text
    rels = []
    for r in args.rel or []:
        if "<=" not in r:
            raise UsageError(f"relation {r!r} must look like a<=b")
        a, b = (x.strip() for x in r.split("<=", 1))
        rels.append((a, b))
    Q, proj = quotient(P, rels)
    text = format_table(Q)
    return EXIT_OK, {"table": text, "kind": proj.kind, "kernel": sorted(proj.kernel)}, text


def _map(args):
    M, O = load_map(args)
    act = args.action
    if act == "validate":
        rep = validate(M)
        text = "valid" if rep.valid else "\n".join(rep.errors)
        return (EXIT_OK if rep.valid else EXIT_FAIL), {"valid": rep.valid, "errors": rep.errors,
                                                       "degrees": rep.degrees}, text
    if act == "genus":
        g = genus(M)
        return EXIT_OK, _map_report(M), f"genus {g}"
    if act == "dual":
        D = dual(M)
        return EXIT_OK, {"map": format_map(D)}, format_map(D).rstrip()
    if act == "bridges":
        bs = sorted(bridges(M))
        return EXIT_OK, {"bridges": bs, "bridgeless": not bs}, " ".join(map(str, bs)) or "none"
    if act == "orient":
        if O is None:
            T = topological_orientation(M)
            return EXIT_OK, {"orientation": sorted(T.positive)}, format_orientation(T).rstrip()
        c = classify_orientation(M, O)
        data = {"well_oriented": c.well_oriented, "globally_well_oriented": c.globally_well_oriented,
                "topological": c.topological}
        text = "\n".join(f"{k}: {v}" for k, v in data.items())
        return (EXIT_OK if c.topological else EXIT_FAIL), data, text
    if act == "canon":
        C = canonical_form(M)
        return EXIT_OK, {"map": format_map(C)}, format_map(C).rstrip()
    dot = to_dot(M, O)
    return EXIT_OK, {"dot": dot}, dot.rstrip()


def _term(args):
    act = args.action
    if act == "fromap":
        M, _ = load_map(args)
        t = map_to_term(M)
        return EXIT_OK, {"term": _show(t)}, _show(t)
    if not args.term:
        raise UsageError("--term is required")
    t = load_term(args.term)
    if act == "parse":
        return EXIT_OK, {"term": _show(t)}, _show(t)
    if act == "classify":
        c = classify(t)
        return EXIT_OK, c, "\n".join(f"{k}: {v}" for k, v in c.items())
    if act == "normalize":
        n, steps = beta_normalize(t)
        return EXIT_OK, {"term": _show(n), "steps": steps}, _show(n)
    M, O = term_to_map(t)
    text = format_map(M) + format_orientation(O)
    data = {"map": format_map(M), "orientation": sorted(O.positive), **_map_report(M)}
    if args.dot:
        data["dot"] = to_dot(M, O)
        text += data["dot"]
    return EXIT_OK, data, text.rstrip()


def _flow(args):
    act = args.action
    if act == "color":
        M, _ = load_map(args)
        col = edge3color(M, node_cap=args.node_cap)
        if col is None:
            return EXIT_FAIL, {"coloring": None}, "no proper 3-edge-coloring"
        return EXIT_OK, {"coloring": {str(a): c for a, c in sorted(col.items())}}, \
            "\n".join(f"edge {a} = {c}" for a, c in sorted(col.items()))
    M, O = load_map(args, need_orient=True)
    if not args.imploid:
        raise UsageError("--imploid is required")
    P = load_imploid(args.imploid)
    if act == "check":
        if not args.flow:
            raise UsageError("--flow is required")
        values = parse_flow(_read(args.flow), P)
        rep = check_flow(M, O, P, values)
        ok = rep.valid and (rep.nowhere_unit or not args.nowhere_unit)
        bad = [f"vertex {c.vertex} ({c.kind}): {c.lhs} <= {c.rhs} fails" for c in rep.failures()]
        data = {"valid": rep.valid, "nowhere_unit": rep.nowhere_unit, "failures": bad}
        return (EXIT_OK if ok else EXIT_FAIL), data, "\n".join([f"valid: {rep.valid}",
                                                                f"nowhere_unit: {rep.nowhere_unit}"] + bad)
    if act == "global":
        if args.all or not args.flow:
            verdict, witness, n = every_flow_global(M, O, P, node_cap=args.node_cap)
            data = {"every_flow_global": verdict, "flows": n,
                    "witness": None if witness is None else {str(a): x for a, x in witness.items()}}
            text = f"every flow global: {verdict} ({n} flows)"
            if witness:
                text += "\n" + format_flow(witness).rstrip()
            return (EXIT_OK if verdict else EXIT_FAIL), data, text
        values = parse_flow(_read(args.flow), P)
        holds, lhs, rhs = check_global(M, O, P, values)
        return (EXIT_OK if holds else EXIT_FAIL), {"global": holds, "lhs": lhs, "rhs": rhs}, \
            f"global: {holds} ({lhs} <= {rhs})"
    res = search_flow(M, O, P, nowhere_unit=args.nowhere_unit, find_all=args.all, node_cap=args.node_cap)
    flows = res if args.all else ([res] if res else [])
    if not flows:
        return EXIT_FAIL, {"flows": []}, "no flow"
    data = {"flows": [{str(a): x for a, x in f.values.items()} for f in flows]}
    return EXIT_OK, data, "\n".join(format_flow(f.values) for f in flows).rstrip()


def _infer(args):
    if not args.term:
        raise UsageError("--term is required")
    t = load_term(args.term)
    M, O = term_to_map(t)
    U = universal_flow(minimal_polarization(M, O))
    data = {"root_type": U.format_root(), "constraints": U.format_constraints()}
    lines = [f"root: {data['root_type']}"] + [f"constraint: {c}" for c in data["constraints"]]
    code = EXIT_OK
    if args.imploid:
        P = load_imploid(args.imploid)
        if args.assign:
            inst = instantiate(U, parse_assignment(_read(args.assign)), P)
            data["instantiation"] = {"ok": inst.ok, "violations": inst.violations}
            lines.append(f"instantiation: {'ok' if inst.ok else 'fails'}")
            lines += inst.violations
            code = EXIT_OK if inst.ok else EXIT_FAIL
        else:
            found = search_instantiation(U, P, nowhere_unit=args.nowhere_unit, node_cap=args.node_cap)
            data["instantiation"] = found
            lines.append("instantiation: " + ("none" if found is None else
                                              " ".join(f"{k}={lo}..{hi}" for k, (lo, hi) in found.items())))
            code = EXIT_OK if found else EXIT_FAIL
    return code, data, "\n".join(lines)


def _parse_move(name: str) -> Move:
    kind, _, direction = name.partition(":")
    try:
        return Move(kind, direction or "ltr")
    except MoveError as exc:
        raise UsageError(str(exc)) from None


def _rewrite(args):
    act = args.action
    if act == "encode":
        if not args.term:
            raise UsageError("--term is required")
        seq = encode(load_term(args.term))
        text = format_sequence(seq)
        sym = seq.uses_symmetric()
        data = {"sequence": text, "steps": len(seq.steps), "uses_symmetric": sym}
        return (EXIT_FAIL if args.planar_only and sym else EXIT_OK), data, text.rstrip()
    if act == "replay":
        if not args.seq:
            raise UsageError("--seq is required")
        M, O = replay(parse_sequence(_read(args.seq)))
        text = format_map(M) + format_orientation(O)
        data = {"map": format_map(M), "orientation": sorted(O.positive)}
        if args.dot:
            data["dot"] = to_dot(M, O)
            text += data["dot"]
        return EXIT_OK, data, text.rstrip()
    if not args.move or not args.imploid:
        raise UsageError("--move and --imploid are required")
    rep = check_move_soundness(_parse_move(args.move), load_imploid(args.imploid), bound=args.bound,
                               node_cap=args.node_cap)
    data = {"move": str(rep.move), "imploid": rep.imploid, "sites": rep.sites, "flows": rep.flows,
            "failures": rep.n_failures}
    text = f"{rep.move} over {rep.imploid}: {rep.sites} sites, {rep.flows} flows, {rep.n_failures} failures"
    return (EXIT_OK if rep.ok else EXIT_FAIL), data, text


def _enum(args):
    n = args.max_size
    if args.action == "terms":
        if args.family not in FAMILIES:
            raise UsageError(f"unknown family {args.family!r}")
        counts = [enumerate_terms(k, args.family, cap=max(n, 6)) for k in range(1, n + 1)]
        data = {"family": args.family, "counts": counts}
        if args.oeis:
            data["oeis"] = oeis_crosscheck(args.family, n)
            ok = data["oeis"]["match"]
            text = f"{args.family}: {counts}\n{data['oeis']['id']}: {data['oeis']['expected']}"
            return (EXIT_OK if ok else EXIT_FAIL), data, text
        return EXIT_OK, data, f"{args.family}: {counts}"
    counts = [enumerate_maps(k, planar=args.planar, bridgeless=args.bridgeless, cap=max(n, 9))
              for k in range(1, n + 1)]
    data = {"planar": args.planar, "bridgeless": args.bridgeless, "vertices": list(range(1, n + 1)),
            "counts": counts}
    return EXIT_OK, data, " ".join(map(str, counts))


def _counterexample(args):
    M, O = load_map(args, need_orient=True)
    f = hat2_counterexample(M, O)
    data = {"flow": {str(a): x for a, x in sorted(f.values.items())}}
    return EXIT_OK, data, format_flow(f.values).rstrip()


def _demo(args):
    t = load_term(args.term) if args.term else None
    asg = parse_assignment(_read(args.assign)) if args.assign else None
    rep = demo_appendix_b(t, asg)
    lines = [f"{s['stage']}: {'ok' if s['ok'] else 'FAIL'}" for s in rep["stages"]]
    return (EXIT_OK if rep["ok"] else EXIT_FAIL), rep, "\n".join(lines)


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--map")
    common.add_argument("--orient")
    common.add_argument("--term")
    common.add_argument("--imploid")
    common.add_argument("--flow")
    common.add_argument("--assign")
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--dot", action="store_true", help="append a Graphviz rendering")
    common.add_argument("--all", action="store_true")
    common.add_argument("--nowhere-unit", action="store_true")
    common.add_argument("--max-size", type=int, default=4)
    common.add_argument("--node-cap", type=int, default=2_000_000)
    common.add_argument("--seed", type=int, default=0)

    ap = argparse.ArgumentParser(prog="linflow", description="Imploid-valued flows on maps and linear terms.")
    sub = ap.add_subparsers(dest="command", required=True)

    def group(name, actions, handler, **extra):
        p = sub.add_parser(name)
        ps = p.add_subparsers(dest="action", required=True)
        for a in actions:
            q = ps.add_parser(a, parents=[common])
            for flag, kw in extra.get(a, {}).items():
                q.add_argument(flag, **kw)
            q.set_defaults(handler=handler)

    group("imploid", ["check", "quotient", "builtin"], _imploid,
          quotient={"--rel": {"action": "append", "help": "relation a<=b"}})
    group("map", ["validate", "genus", "dual", "bridges", "orient", "canon", "dot"], _map)
    group("term", ["parse", "tomap", "fromap", "normalize", "classify"], _term)
    group("flow", ["check", "global", "search", "color"], _flow)
    group("rewrite", ["encode", "replay", "check-move"], _rewrite,
          encode={"--planar-only": {"action": "store_true"}},
          replay={"--seq": {}},
          **{"check-move": {"--move": {"help": "kind or kind:rtl"}, "--bound": {"type": int, "default": 2}}})
    group("enum", ["terms", "maps"], _enum,
          terms={"--family": {"default": "linear"}, "--oeis": {"action": "store_true"}},
          maps={"--planar": {"action": "store_true"}, "--bridgeless": {"action": "store_true"}})
    for name, handler in (("infer", _infer), ("counterexample", _counterexample),
                          ("demo-appendix-b", _demo)):
        p = sub.add_parser(name, parents=[common])
        p.set_defaults(handler=handler)
    return ap


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        code, data, text = args.handler(args)
    except (UsageError, FormatError, PreconditionError, SearchCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        out.write(json.dumps(data, indent=2, sort_keys=True, default=list) + "\n")
    else:
        out.write(text + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
