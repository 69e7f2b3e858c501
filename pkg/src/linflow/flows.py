"""Imploid-valued flows on oriented maps, and Kirchhoff flows in abelian groups.

A flow assigns an element to every edge. Edges are named by their smaller
arc; the orientation says which arc the edge leaves from.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

from . import _kernels
from .imploid import FormatError, Group, ImploidTable, PreconditionError, builtin
from .maps import (Orientation, RootedMap, _Decomposer, all_well_orientations, boundary, e,
                   is_bridgeless, is_globally_well_oriented, is_well_oriented)


@dataclass
class Flow:
    values: dict[int, str]
    orientation: Orientation
    imploid: ImploidTable = field(repr=False)

    def __getitem__(self, edge: int) -> str:
        return self.values[edge & ~1]


@dataclass
class VertexCheck:
    vertex: int
    kind: str
    arcs: tuple[int, ...]
    holds: bool
    lhs: str
    rhs: str


@dataclass
class FlowReport:
    valid: bool
    vertices: list[VertexCheck]
    nowhere_unit: bool
    global_holds: bool | None = None
    global_sides: tuple[str, str] | None = None
    warnings: list[str] = field(default_factory=list)

    def failures(self) -> list[VertexCheck]:
        return [c for c in self.vertices if not c.holds]


# -- local structure --------------------------------------------------------

def vertex_roles(M: RootedMap, O: Orientation, w: int) -> tuple[str, tuple[int, ...]]:
    """Decode the relation at an internal vertex from rotation and orientation.

    Returns (kind, arcs):
      "pos"    (x, y, z): y the input, then x, z the outputs; x -o y <= z
      "neg"    (x, y, z): y the output, x and z the inputs; z <= x -o y
      "glue"   (i, o): i <= o
      "unit"   (a,): I <= a, a 1-valent source
      "counit" (a,): a <= I, a 1-valent sink
    """
    cyc = M.cycles[w]
    outs = [x for x in cyc if x in O.positive]
    if len(cyc) == 1:
        return ("unit" if outs else "counit"), cyc
    if len(cyc) == 2:
        if len(outs) != 1:
            raise PreconditionError(f"2-valent vertex {w} is not oriented in-out")
        o = outs[0]
        return "glue", (M.v[o], o)
    if len(cyc) != 3:
        raise PreconditionError(f"vertex {w} has degree {len(cyc)}")
    if len(outs) == 2:
        y = next(x for x in cyc if x not in O.positive)
        z = M.v[y]
        return "pos", (M.v[z], y, z)
    if len(outs) == 1:
        y = outs[0]
        return "neg", (M.v[y], y, M.v_inv[y])
    raise PreconditionError(f"vertex {w} has {len(outs)} outputs")


def _edge(x: int) -> int:
    return x & ~1


def _require_total(M: RootedMap, values: dict):
    missing = [a for a in M.edges() if a not in values]
    if missing:
        raise PreconditionError(f"flow is not defined on edges {missing}")


def _indices(P: ImploidTable, values: dict[int, str]) -> dict[int, int]:
    return {a: P.index(x) for a, x in values.items()}


def _evaluate(P: ImploidTable, kind: str, arcs, val) -> tuple[bool, int, int]:
    """(holds, lhs, rhs) for one decoded vertex with edge values ``val``."""
    if kind == "pos":
        x, y, z = (val[_edge(a)] for a in arcs)
        lhs, rhs = P.imp[x][y], z
    elif kind == "neg":
        x, y, z = (val[_edge(a)] for a in arcs)
        lhs, rhs = z, P.imp[x][y]
    elif kind == "glue":
        lhs, rhs = val[_edge(arcs[0])], val[_edge(arcs[1])]
    elif kind == "unit":
        lhs, rhs = P.unit, val[_edge(arcs[0])]
    else:
        lhs, rhs = val[_edge(arcs[0])], P.unit
    return P.le(lhs, rhs), lhs, rhs


# -- checking ---------------------------------------------------------------

def check_flow(M: RootedMap, O: Orientation, P: ImploidTable, values: dict[int, str]) -> FlowReport:
    _require_total(M, values)
    if not is_well_oriented(M, O):
        raise PreconditionError("orientation is not well-oriented")
    notes = []
    if not P.left_normal:
        notes.append("imploid is not left normal; relations evaluated anyway")
        warnings.warn(notes[-1])
    val = _indices(P, values)
    checks = []
    for w in M.internal_vertices():
        kind, arcs = vertex_roles(M, O, w)
        ok, lhs, rhs = _evaluate(P, kind, arcs, val)
        checks.append(VertexCheck(w, kind, tuple(arcs), ok, P.elements[lhs], P.elements[rhs]))
    report = FlowReport(all(c.holds for c in checks), checks, is_nowhere_unit(P, values),
                        warnings=notes)
    if M.external is not None and is_globally_well_oriented(M, O):
        g, lhs, rhs = check_global(M, O, P, values)
        report.global_holds, report.global_sides = g, (lhs, rhs)
    return report


def is_nowhere_unit(P: ImploidTable, values: dict[int, str]) -> bool:
    return not any(P.dominates_unit(P.index(x)) for x in values.values())


def check_global(M: RootedMap, O: Orientation, P: ImploidTable,
                 values: dict[int, str]) -> tuple[bool, str, str]:
    """I <= phi(x1) -o (... -o (phi(xn) -o phi(x0))) along the boundary order."""
    if not is_globally_well_oriented(M, O):
        raise PreconditionError("orientation is not globally well-oriented")
    _require_total(M, values)
    val = _indices(P, values)
    bnd = boundary(M)
    rhs = P.mimp([val[_edge(x)] for x in bnd[1:]], val[_edge(bnd[0])])
    return P.le(P.unit, rhs), P.elements[P.unit], P.elements[rhs]


@dataclass
class KirchhoffReport:
    valid: bool
    nowhere_zero: bool
    failing_vertices: list[int]


def check_kirchhoff(M: RootedMap, O: Orientation, G: Group | None, values: dict,
                    include_external: bool = True) -> KirchhoffReport:
    """Inflow equals outflow at every vertex.

    ``G`` None means the integers and ``values`` are ints; otherwise values
    are element names of the abelian group ``G``.
    """
    _require_total(M, values)
    if G is None:
        zero = 0
        add = int.__add__
        val = {a: int(x) for a, x in values.items()}
    else:
        if not G.is_abelian():
            raise PreconditionError("group is not abelian")
        zero = G.unit

        def add(a, b):
            return G.mul[a][b]

        val = {a: G.elements.index(x) for a, x in values.items()}
    bad = []
    for w in range(len(M.cycles)):
        if M.is_external(w) and not include_external:
            continue
        s_in = s_out = zero
        for x in M.cycles[w]:
            if x in O.positive:
                s_out = add(s_out, val[_edge(x)])
            else:
                s_in = add(s_in, val[_edge(x)])
        if s_in != s_out:
            bad.append(w)
    nz = all(x != zero for x in val.values())
    return KirchhoffReport(not bad, nz, bad)


def reorient_kirchhoff(O: Orientation, G: Group | None, values: dict, edges) -> tuple[Orientation, dict]:
    """Flip the given edges and negate their values, keeping the flow valid."""
    out = dict(values)
    for a in edges:
        a = _edge(a)
        if G is None:
            out[a] = -out[a]
        else:
            out[a] = G.elements[G.inverse(G.elements.index(out[a]))]
    return O.flip(edges), out


# -- search -----------------------------------------------------------------

class SearchCapExceeded(RuntimeError):
    pass


def _constraints(M: RootedMap, O: Orientation):
    """Kernel constraints over edge positions (edges sorted by smaller arc)."""
    pos = {a: i for i, a in enumerate(M.edges())}
    out = []
    for w in M.internal_vertices():
        kind, arcs = vertex_roles(M, O, w)
        ix = [pos[_edge(a)] for a in arcs]
        if kind == "pos":
            out.append((_kernels.POS, ix[0], ix[1], ix[2]))
        elif kind == "neg":
            out.append((_kernels.NEG, ix[0], ix[1], ix[2]))
        elif kind == "glue":
            out.append((_kernels.LE, ix[0], ix[1], 0))
        elif kind == "unit":
            out.append((_kernels.UNIT_LE, ix[0], 0, 0))
        else:
            out.append((_kernels.LE_UNIT, ix[0], 0, 0))
    return out


def _triggers(n: int, cons) -> list[list[tuple]]:
    trig: list[list[tuple]] = [[] for _ in range(n)]
    for c in cons:
        k = c[0]
        used = c[1:4] if k in (_kernels.POS, _kernels.NEG) else (
            c[1:3] if k == _kernels.LE else c[1:2])
        trig[max(used)].append(c)
    return trig


def search_assignments(P: ImploidTable, n_vars: int, cons, domains, limit: int = 1,
                       node_cap: int = 2_000_000):
    """Run the kernel; ``limit`` 0 returns every solution."""
    leq = [list(map(int, row)) for row in P.order.leq]
    imp = [list(row) for row in P.imp]
    sols, nodes, capped = _kernels.search(n_vars, leq, imp, P.unit, domains,
                                          _triggers(n_vars, cons), limit, node_cap)
    if capped:
        raise SearchCapExceeded(f"search exceeded {node_cap} nodes")
    return sols, nodes


def search_flow(M: RootedMap, O: Orientation, P: ImploidTable, nowhere_unit: bool = False,
                fixed: dict[int, str] | None = None, find_all: bool = False,
                node_cap: int = 2_000_000):
    """First flow in lexicographic order (edges by smaller arc, elements in
    table order), every flow when ``find_all``, or None."""
    if not is_well_oriented(M, O):
        raise PreconditionError("orientation is not well-oriented")
    edges = list(M.edges())
    allowed = [i for i in range(P.size) if not (nowhere_unit and P.dominates_unit(i))]
    domains = []
    fixed = {_edge(a): x for a, x in (fixed or {}).items()}
    for a in edges:
        domains.append([P.index(fixed[a])] if a in fixed else allowed)
    sols, _ = search_assignments(P, len(edges), _constraints(M, O), domains,
                                 0 if find_all else 1, node_cap)
    flows = [Flow({a: P.elements[s[i]] for i, a in enumerate(edges)}, O, P) for s in sols]
    if find_all:
        return flows
    return flows[0] if flows else None


def every_flow_global(M: RootedMap, O: Orientation, P: ImploidTable,
                      node_cap: int = 2_000_000) -> tuple[bool, dict[int, str] | None, int]:
    """Does every P-flow satisfy the global condition?

    Returns (verdict, first violating flow or None, number of flows scanned).
    """
    if not is_globally_well_oriented(M, O):
        raise PreconditionError("orientation is not globally well-oriented")
    edges = list(M.edges())
    pos = {a: i for i, a in enumerate(edges)}
    bnd = [pos[_edge(x)] for x in boundary(M)]
    domains = [list(range(P.size))] * len(edges)
    sols, _ = search_assignments(P, len(edges), _constraints(M, O), domains, 0, node_cap)
    for s in sols:
        rhs = P.mimp([s[i] for i in bnd[1:]], s[bnd[0]])
        if not P.le(P.unit, rhs):
            return False, {a: P.elements[s[i]] for i, a in enumerate(edges)}, len(sols)
    return True, None, len(sols)


# -- edge colouring ---------------------------------------------------------

COLORS = {"01": "R", "10": "G", "11": "B"}


def _any_well_orientation(M: RootedMap) -> Orientation | None:
    return next(iter(all_well_orientations(M)), None)


def edge3color(M: RootedMap, node_cap: int = 2_000_000) -> dict[int, str] | None:
    """Proper edge-3-colouring of a closed 3-valent map via a nowhere-zero
    Klein-four flow; None when there is none (in particular with a bridge)."""
    if M.external is not None:
        raise PreconditionError("edge3color expects a closed map (no external vertex)")
    if any(M.degree(w) != 3 for w in range(len(M.cycles))):
        raise PreconditionError("map is not trivalent")
    if not is_bridgeless(M):
        return None
    O = _any_well_orientation(M)
    if O is None:
        return None
    V = builtin("klein_four")
    phi = search_flow(M, O, V, nowhere_unit=True, node_cap=node_cap)
    if phi is None:
        return None
    return {a: COLORS[x] for a, x in phi.values.items()}


def is_proper_coloring(M: RootedMap, coloring: dict[int, str]) -> bool:
    for cyc in M.cycles:
        cols = [coloring[_edge(x)] for x in cyc]
        if len(set(cols)) != len(cols):
            return False
    return True


# -- the hat2 counterexample ------------------------------------------------

class _Region:
    """Sub-map reached through a parent-side arc, in the decomposition sense."""

    def __init__(self, D: _Decomposer):
        self.D = D

    def edges(self, a: int, removed: frozenset) -> set[int]:
        M = self.D.M
        out = {_edge(a)}
        w = M.target(a)
        if self.D.blocked(w, removed):
            return out
        seen, todo = {w}, [w]
        while todo:
            u = todo.pop()
            for x in M.cycles[u]:
                out.add(_edge(x))
                t = M.target(x)
                if t not in seen and not self.D.blocked(t, removed):
                    seen.add(t)
                    todo.append(t)
        return out

    def topological(self, a: int, removed: frozenset, O: Orientation) -> bool:
        """Does O agree with the sub-map's own topological orientation?"""
        try:
            pos = self._topo(a, removed)
        except PreconditionError:
            return False
        return all((x in O.positive) == (x in pos) for x in self._arcs(a, removed))

    def _arcs(self, a, removed):
        out = []
        for ed in self.edges(a, removed):
            out += [ed, ed + 1]
        return out

    def _topo(self, a, removed) -> set[int]:
        pos: set[int] = set()

        def go(node):
            kind = node[0]
            if kind in ("var", "unit"):
                pos.add(node[2])
            elif kind == "glue":
                pos.add(node[2])
                go(node[3])
            elif kind == "lam":
                pos.update(node[2:4])
                go(node[5])
            else:
                pos.add(node[2])
                go(node[5])
                go(node[6])

        go(self.D.walk(a, removed))
        return pos


def hat2_counterexample(M: RootedMap, O: Orientation) -> Flow:
    """A hat2 flow with root value 0 that violates the global condition.

    Recursive case analysis on the vertex under the root: constant 1 and
    constant 2 sub-flows fill the parts that are already consistent, and the
    identities y -o 0 = 0 and 0 -o x = 2 carry the 0 downwards.
    """
    if M.external is None:
        raise PreconditionError("map has no boundary")
    if not is_well_oriented(M, O):
        raise PreconditionError("orientation is not well-oriented")
    if O.points(M.root):
        raise PreconditionError("root is not an output")
    D = _Decomposer(M)
    R = _Region(D)
    if R.topological(M.root, frozenset(), O):
        raise PreconditionError("orientation is topological; no counterexample exists")
    val: dict[int, int] = {}

    def const(a, removed, c):
        for ed in R.edges(a, removed):
            val[ed] = c

    def go(a: int, removed: frozenset):
        b = e(a)
        w = M.vertex_of[b]
        if D.blocked(w, removed):
            raise PreconditionError("reached a bare edge that is not a counterexample")
        d = M.degree(w)
        inner = removed | {w}
        val[_edge(a)] = 0
        if d == 1:
            raise PreconditionError("unit vertex under an output root is topological")
        if d == 2:
            go(M.v[b], inner)
            return
        c, dd = M.v[b], M.v[M.v[b]]
        positive = sum(1 for x in M.cycles[w] if x in O.positive) == 2
        if D.linked(c, dd, inner):
            if not positive:
                go(c, inner)
                return
            if b not in O.positive:
                raise PreconditionError(f"root arc {b} is not an output at vertex {w}")
            y = next(x for x in M.cycles[w] if x not in O.positive)
            if y == dd:
                go(dd, inner)
            else:
                const(c, inner, 2)
            return
        if not positive:
            if not R.topological(dd, inner, O):
                const(c, inner, 2)
                go(dd, inner)
            else:
                const(dd, inner, 2)
                go(c, inner)
            return
        y = next(x for x in M.cycles[w] if x not in O.positive)
        if y == dd:
            const(c, inner, 2)
            const(dd, inner, 1)
        else:
            const(c, inner, 2)
            const(dd, inner, 2)

    go(M.root, frozenset())
    H = builtin("hat2")
    return Flow({a: H.elements[val[a]] for a in M.edges()}, O, H)


# -- presentations ----------------------------------------------------------

@dataclass
class Presentation:
    generators: list[str]
    relations: list[str]
    structured: list[tuple]
    symmetric: bool

    def satisfied_by(self, P: ImploidTable, values: dict[int, str]) -> bool:
        val = {int(g[1:]): P.index(values[int(g[1:])]) for g in self.generators}
        for kind, arcs in self.structured:
            if not _evaluate(P, kind, arcs, val)[0]:
                return False
        return True


def fundamental_presentation(M: RootedMap, O: Orientation, symmetric: bool = False) -> Presentation:
    """One generator per edge and one defining relation per internal vertex."""
    gens = [f"e{a}" for a in M.edges()]
    rels, structured = [], []
    for w in M.internal_vertices():
        kind, arcs = vertex_roles(M, O, w)
        g = [f"e{_edge(x)}" for x in arcs]
        if kind == "pos":
            rels.append(f"{g[0]} -o {g[1]} <= {g[2]}")
        elif kind == "neg":
            rels.append(f"{g[2]} <= {g[0]} -o {g[1]}")
        elif kind == "glue":
            rels.append(f"{g[0]} <= {g[1]}")
        elif kind == "unit":
            rels.append(f"I <= {g[0]}")
        else:
            rels.append(f"{g[0]} <= I")
        structured.append((kind, tuple(arcs)))
    return Presentation(gens, rels, structured, symmetric)


# -- file format ------------------------------------------------------------

def format_flow(values: dict[int, str]) -> str:
    return "".join(f"edge {a} = {values[a]}\n" for a in sorted(values))


def parse_flow(text: str, P: ImploidTable | None = None) -> dict[int, str]:
    out: dict[int, str] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        m = re.fullmatch(r"edge\s+(\d+)\s*=\s*(\S+)", ln)
        if not m:
            raise FormatError(f"line {no}: expected 'edge <arc> = <element>'")
        a = int(m.group(1))
        if a % 2:
            raise FormatError(f"line {no}: edges are named by their smaller (even) arc")
        if a in out:
            raise FormatError(f"line {no}: edge {a} assigned twice")
        if P is not None:
            P.index(m.group(2))
        out[a] = m.group(2)
    return out
