"""Polarized flows: minimal polarization, w-b orientation and the universal flow.

Every edge of a polarized map carries a sign. At a 3-valent vertex with
decoded roles (x, y, z) the ends are signed

    positive vertex:  x -, y +, z +
    negative vertex:  x +, y -, z -

and a 2-valent vertex is white (negative in, positive out) or black
(positive in, negative out). The boundary counts as positive on edges that
enter it and negative on edges that leave it.
"""
from __future__ import annotations

import itertools
import re
import string
from dataclasses import dataclass, field

from .flows import Flow, vertex_roles
from .imploid import FormatError, ImploidTable, PreconditionError
from .maps import (Orientation, RootedMap, build_map, canonical_with_orientation,
                   contract_2valent, e, is_well_oriented)

_PATTERN = {"pos": (-1, +1, +1), "neg": (+1, -1, -1)}


@dataclass
class PolarizedMap:
    M: RootedMap
    O: Orientation
    sign: dict[int, int]
    origin: dict[int, int] = field(default_factory=dict)

    def color(self, w: int) -> str | None:
        """'white', 'black' or None for vertices that are not 2-valent."""
        if self.M.is_external(w) or self.M.degree(w) != 2:
            return None
        out = next(x for x in self.M.cycles[w] if x in self.O.positive)
        return "white" if self.sign[out & ~1] > 0 else "black"

    def whites(self) -> list[int]:
        return [w for w in range(len(self.M.cycles)) if self.color(w) == "white"]

    def blacks(self) -> list[int]:
        return [w for w in range(len(self.M.cycles)) if self.color(w) == "black"]


def _end_sign(M: RootedMap, O: Orientation, x: int) -> int:
    w = M.vertex_of[x]
    if M.is_external(w):
        return -1 if x in O.positive else +1
    kind, arcs = vertex_roles(M, O, w)
    if kind not in _PATTERN:
        raise PreconditionError(f"vertex {w} is not 3-valent; only 3-valent maps are polarized")
    return _PATTERN[kind][arcs.index(x)]


def _subdivide(M: RootedMap, O: Orientation, plan: dict[int, list[int]]):
    """Split each edge into len(plan[edge]) segments signed as listed."""
    verts = [[("a", x) for x in cyc] for cyc in M.cycles]
    edges, positive, seg_sign, seg_origin = [], [], [], []
    for a in M.edges():
        t = a if a in O.positive else a + 1
        h = e(t)
        signs = plan[a]
        prev = ("a", t)
        for i, s in enumerate(signs):
            nxt = ("a", h) if i == len(signs) - 1 else ("mi", a, i)
            edges.append((prev, nxt))
            positive.append(prev)
            seg_sign.append(s)
            seg_origin.append(a)
            if i < len(signs) - 1:
                verts.append([("mi", a, i), ("mo", a, i)])
                prev = ("mo", a, i)
    N, lab = build_map(verts, edges, ("a", M.root), M.external)
    sign = {2 * k: s for k, s in enumerate(seg_sign)}
    origin = {2 * k: a for k, a in enumerate(seg_origin)}
    return N, Orientation(frozenset(lab[p] for p in positive)), sign, origin


def minimal_polarization(M: RootedMap, O: Orientation) -> PolarizedMap:
    """Sign the ends by the vertex patterns, then subdivide every edge whose
    two ends disagree."""
    if not is_well_oriented(M, O):
        raise PreconditionError("orientation is not well-oriented")
    plan = {}
    for a in M.edges():
        t = a if a in O.positive else a + 1
        st, sh = _end_sign(M, O, t), _end_sign(M, O, e(t))
        plan[a] = [st] if st == sh else [st, sh]
    N, ON, sign, origin = _subdivide(M, O, plan)
    return PolarizedMap(N, ON, sign, origin)


def subdivide_edge(pi: PolarizedMap, edge: int, signs: list[int]) -> PolarizedMap:
    """Replace one edge of a polarized map by a signed chain of segments."""
    plan = {a: [pi.sign[a]] for a in pi.M.edges()}
    plan[edge & ~1] = list(signs)
    N, ON, sign, origin = _subdivide(pi.M, pi.O, plan)
    return PolarizedMap(N, ON, sign, {a: pi.origin.get(o, o) for a, o in origin.items()})


# -- checks -----------------------------------------------------------------

@dataclass
class PolarizationReport:
    valid: bool
    violations: list[tuple[int, str]]


def check_polarization(pi: PolarizedMap) -> PolarizationReport:
    M, O = pi.M, pi.O
    bad = []
    for w in M.internal_vertices():
        cyc = M.cycles[w]
        signs = [pi.sign[x & ~1] for x in cyc]
        total = sum(signs)
        if len(cyc) == 3:
            if total not in (1, -1):
                bad.append((w, f"sign sum {total} at a 3-valent vertex"))
                continue
            try:
                kind, arcs = vertex_roles(M, O, w)
            except PreconditionError as exc:
                bad.append((w, str(exc)))
                continue
            want = _PATTERN[kind]
            got = tuple(pi.sign[x & ~1] for x in arcs)
            if got != want:
                bad.append((w, f"{kind} vertex signed {got}, expected {want}"))
        elif len(cyc) == 2:
            if total != 0:
                bad.append((w, f"sign sum {total} at a 2-valent vertex"))
            elif sum(1 for x in cyc if x in O.positive) != 1:
                bad.append((w, "2-valent vertex is not oriented in-out"))
        else:
            bad.append((w, f"degree {len(cyc)} vertex cannot be polarized"))
    return PolarizationReport(not bad, bad)


def is_polarization_of(pi: PolarizedMap, M: RootedMap, O: Orientation) -> bool:
    if not check_polarization(pi).valid:
        return False
    try:
        C, OC, _ = contract_2valent(pi.M, pi.O)
    except PreconditionError:
        return False
    return canonical_with_orientation(C, OC) == canonical_with_orientation(M, O)


def wb_orientation(pi: PolarizedMap) -> Orientation:
    """Reverse the negative edges."""
    return pi.O.flip([a for a in pi.M.edges() if pi.sign[a] < 0])


def _wb_graph(pi: PolarizedMap):
    W = wb_orientation(pi)
    M = pi.M
    succ: dict[int, list[tuple[int, int]]] = {w: [] for w in M.internal_vertices()}
    for a in M.edges():
        t = a if a in W.positive else a + 1
        s, h = M.vertex_of[t], M.vertex_of[e(t)]
        if M.is_external(s):
            raise PreconditionError("the boundary is a source in the w-b orientation")
        if not M.is_external(h):
            succ[s].append((h, a))
    return W, succ


def is_acyclic(pi: PolarizedMap) -> bool:
    _, succ = _wb_graph(pi)
    return _topo_order(succ) is not None


def _topo_order(succ) -> list[int] | None:
    indeg = {w: 0 for w in succ}
    for w in succ:
        for h, _ in succ[w]:
            indeg[h] += 1
    ready = sorted(w for w, d in indeg.items() if d == 0)
    order = []
    while ready:
        w = ready.pop()
        order.append(w)
        for h, _ in succ[w]:
            indeg[h] -= 1
            if indeg[h] == 0:
                ready.append(h)
    return order if len(order) == len(succ) else None


# -- symbolic types ---------------------------------------------------------

@dataclass(frozen=True)
class Gen:
    white: int
    sign: str


@dataclass(frozen=True)
class Arrow:
    left: "SymbolicType"
    right: "SymbolicType"


SymbolicType = Gen | Arrow


def _letter(k: int) -> str:
    return string.ascii_lowercase[k] if k < 26 else f"w{k}"


def format_type(t: SymbolicType, names: dict[int, str] | None = None) -> str:
    if isinstance(t, Gen):
        nm = names[t.white] if names else f"w{t.white}"
        return nm + t.sign
    return f"[{format_type(t.left, names)} {format_type(t.right, names)}]"


_TYPE_TOKEN = re.compile(r"\s*(?:(\[)|(\])|([A-Za-z][A-Za-z0-9_]*)\^?([+-]))")


def parse_type(text: str) -> SymbolicType:
    """Parse the bracket syntax: ``[s t]`` is s -o t; generators look like
    ``a+`` or ``a^-``. Generator names are kept as strings in ``Gen.white``."""
    toks, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TYPE_TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise FormatError(f"bad type syntax at {text[pos:pos + 10]!r}")
        toks.append(m.groups())
        pos = m.end()
    i = 0

    def go():
        nonlocal i
        if i >= len(toks):
            raise FormatError("type ends early")
        lb, rb, name, sign = toks[i]
        i += 1
        if name:
            return Gen(name, sign)
        if not lb:
            raise FormatError("unexpected ']'")
        left = go()
        right = go()
        if i >= len(toks) or not toks[i][1]:
            raise FormatError("expected ']'")
        i += 1
        return Arrow(left, right)

    t = go()
    if i != len(toks):
        raise FormatError("trailing input after type")
    return t


def match_types(pairs) -> dict | None:
    """Generator renaming making each (ours, theirs) pair equal, or None.

    The renaming must be a bijection and keep signs."""
    fwd, bwd = {}, {}

    def go(a, b) -> bool:
        if isinstance(a, Gen) and isinstance(b, Gen):
            if a.sign != b.sign:
                return False
            if fwd.setdefault(a.white, b.white) != b.white:
                return False
            return bwd.setdefault(b.white, a.white) == a.white
        if isinstance(a, Arrow) and isinstance(b, Arrow):
            return go(a.left, b.left) and go(a.right, b.right)
        return False

    for a, b in pairs:
        if not go(a, b):
            return None
    return fwd


# -- universal flow ---------------------------------------------------------

@dataclass
class Constraint:
    black: int
    lhs: SymbolicType
    rhs: SymbolicType


@dataclass
class UniversalFlow:
    pi: PolarizedMap = field(repr=False)
    types: dict[int, SymbolicType]
    constraints: list[Constraint]
    root_type: SymbolicType
    names: dict[int, str]
    visits: int

    def format_root(self) -> str:
        return format_type(self.root_type, self.names)

    def format_constraints(self) -> list[str]:
        return [f"{format_type(c.lhs, self.names)} <= {format_type(c.rhs, self.names)}"
                for c in self.constraints]


def _gens(t: SymbolicType, out: list):
    if isinstance(t, Gen):
        out.append(t.white)
    else:
        _gens(t.left, out)
        _gens(t.right, out)
    return out


def universal_flow(pi: PolarizedMap) -> UniversalFlow:
    """Seed white vertices with generators and push types along the w-b order.

    Each vertex is processed once and each edge typed once; ``visits`` counts
    both, so it stays linear in the number of edges.
    """
    M, O = pi.M, pi.O
    _, succ = _wb_graph(pi)
    order = _topo_order(succ)
    if order is None:
        raise PreconditionError("w-b orientation has a cycle")
    types: dict[int, SymbolicType] = {}
    constraints = []
    visits = 0
    for w in order:
        visits += 1
        cyc = M.cycles[w]
        col = pi.color(w)
        if col == "white":
            for x in cyc:
                types[x & ~1] = Gen(w, "+" if pi.sign[x & ~1] > 0 else "-")
                visits += 1
        elif col == "black":
            pos = next(x for x in cyc if pi.sign[x & ~1] > 0)
            neg = next(x for x in cyc if pi.sign[x & ~1] < 0)
            constraints.append(Constraint(w, types[pos & ~1], types[neg & ~1]))
        else:
            _, (x, y, z) = vertex_roles(M, O, w)
            types[z & ~1] = Arrow(types[x & ~1], types[y & ~1])
            visits += 1
    root_type = types[M.root & ~1]
    seen: list[int] = []
    for t in [root_type] + [s for c in constraints for s in (c.lhs, c.rhs)]:
        for g in _gens(t, []):
            if g not in seen:
                seen.append(g)
    seen += [w for w in pi.whites() if w not in seen]
    names = {w: _letter(k) for k, w in enumerate(seen)}
    return UniversalFlow(pi, types, constraints, root_type, names, visits)


# -- instantiation ----------------------------------------------------------

def evaluate(t: SymbolicType, P: ImploidTable, env: dict) -> int:
    """Value of a type; ``env`` maps a white vertex to its (lo, hi) indices."""
    if isinstance(t, Gen):
        lo, hi = env[t.white]
        return hi if t.sign == "+" else lo
    return P.imp[evaluate(t.left, P, env)][evaluate(t.right, P, env)]


@dataclass
class Instantiation:
    ok: bool
    violations: list[str]
    flow: Flow | None = None
    contracted: dict[int, str] | None = None


def _env(U: UniversalFlow, P: ImploidTable, assignment: dict) -> dict:
    by_name = {nm: w for w, nm in U.names.items()}
    env = {}
    for key, pair in assignment.items():
        w = by_name[key] if isinstance(key, str) else key
        lo, hi = (pair, pair) if isinstance(pair, str) else pair
        env[w] = (P.index(lo), P.index(hi))
    return env


def instantiate(U: UniversalFlow, assignment: dict, P: ImploidTable) -> Instantiation:
    """Evaluate the universal flow at concrete intervals.

    ``assignment`` maps a white vertex (id or generator letter) to an element
    (degenerate interval) or a pair (lo, hi).
    """
    env = _env(U, P, assignment)
    missing = [U.names[w] for w in U.pi.whites() if w not in env]
    if missing:
        raise PreconditionError(f"no value for white vertices {missing}")
    bad = []
    for w in U.pi.whites():
        lo, hi = env[w]
        if not P.le(lo, hi):
            bad.append(f"interval at white {U.names[w]}: {P.elements[lo]} is not <= {P.elements[hi]}")
    for c in U.constraints:
        a, b = evaluate(c.lhs, P, env), evaluate(c.rhs, P, env)
        if not P.le(a, b):
            bad.append(f"constraint at black {c.black}: {P.elements[a]} is not <= {P.elements[b]}")
    if bad:
        return Instantiation(False, bad)
    values = {a: P.elements[evaluate(t, P, env)] for a, t in U.types.items()}
    return Instantiation(True, [], Flow(values, U.pi.O, P), contract_values(U.pi, values))


def contract_values(pi: PolarizedMap, values: dict[int, str]) -> dict[int, str]:
    """Flow on the unsubdivided map: each original edge takes the value of its
    segment on the source side."""
    first: dict[int, int] = {}
    for a in pi.M.edges():
        o = pi.origin.get(a, a)
        t = a if a in pi.O.positive else a + 1
        w = pi.M.vertex_of[t]
        if pi.color(w) is None:
            first[o] = a
    return {o: values[a] for o, a in first.items()}


def search_instantiation(U: UniversalFlow, P: ImploidTable, nowhere_unit: bool = False,
                         node_cap: int = 2_000_000, find_all: bool = False):
    """Backtrack over white intervals (lo <= hi) in naming order; a constraint
    or edge check fires once all its generators are assigned."""
    whites = sorted(U.pi.whites(), key=lambda w: U.names[w])
    rank = {w: i for i, w in enumerate(whites)}
    checks: list[list] = [[] for _ in whites]
    for c in U.constraints:
        gs = _gens(c.lhs, []) + _gens(c.rhs, [])
        checks[max(rank[g] for g in gs)].append(("c", c))
    if nowhere_unit:
        for a, t in U.types.items():
            checks[max(rank[g] for g in _gens(t, []))].append(("n", t))
    pairs = [(lo, hi) for lo, hi in itertools.product(range(P.size), repeat=2) if P.le(lo, hi)]
    env: dict[int, tuple[int, int]] = {}
    found = []
    nodes = 0

    def go(i: int) -> bool:
        nonlocal nodes
        if i == len(whites):
            found.append({U.names[w]: (P.elements[env[w][0]], P.elements[env[w][1]]) for w in whites})
            return not find_all
        for pr in pairs:
            nodes += 1
            if nodes > node_cap:
                from .flows import SearchCapExceeded
                raise SearchCapExceeded(f"search exceeded {node_cap} nodes")
            env[whites[i]] = pr
            ok = True
            for kind, obj in checks[i]:
                if kind == "c":
                    ok = P.le(evaluate(obj.lhs, P, env), evaluate(obj.rhs, P, env))
                else:
                    ok = not P.dominates_unit(evaluate(obj, P, env))
                if not ok:
                    break
            if ok and go(i + 1):
                return True
        del env[whites[i]]
        return False

    go(0)
    if find_all:
        return found
    return found[0] if found else None
