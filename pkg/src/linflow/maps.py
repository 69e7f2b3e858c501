"""Rooted combinatorial maps as a rotation permutation on paired arcs.

Arcs are 0..2m-1 and arc x is paired with x ^ 1. ``v`` sends an arc to the
next arc counterclockwise around its source vertex. A map with boundary has
one distinguished external vertex, which always carries the root arc.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

from .imploid import FormatError, PreconditionError


def e(x: int) -> int:
    return x ^ 1


@dataclass(frozen=True)
class RootedMap:
    n_arcs: int
    v: tuple[int, ...]
    root: int
    external: int | None = None

    @cached_property
    def cycles(self) -> list[tuple[int, ...]]:
        """v-cycles, each starting at its least arc, sorted by least arc."""
        seen = [False] * self.n_arcs
        out = []
        for a in range(self.n_arcs):
            if seen[a]:
                continue
            cyc, x = [], a
            while not seen[x]:
                seen[x] = True
                cyc.append(x)
                x = self.v[x]
            out.append(tuple(cyc))
        return out

    @cached_property
    def vertex_of(self) -> tuple[int, ...]:
        out = [0] * self.n_arcs
        for i, cyc in enumerate(self.cycles):
            for a in cyc:
                out[a] = i
        return tuple(out)

    @cached_property
    def v_inv(self) -> tuple[int, ...]:
        out = [0] * self.n_arcs
        for a, b in enumerate(self.v):
            out[b] = a
        return tuple(out)

    @property
    def n_edges(self) -> int:
        return self.n_arcs // 2

    def edges(self) -> range:
        """Edge ids are their smaller arc, i.e. the even arcs."""
        return range(0, self.n_arcs, 2)

    def degree(self, vertex: int) -> int:
        return len(self.cycles[vertex])

    def internal_vertices(self) -> list[int]:
        return [i for i in range(len(self.cycles)) if i != self.external]

    def is_external(self, vertex: int) -> bool:
        return self.external is not None and vertex == self.external

    def target(self, x: int) -> int:
        return self.vertex_of[e(x)]

    def source(self, x: int) -> int:
        return self.vertex_of[x]

    def phi(self, x: int) -> int:
        return e(self.v[x])


@dataclass(frozen=True)
class Orientation:
    positive: frozenset[int]

    def __contains__(self, x: int) -> bool:
        return x in self.positive

    def points(self, x: int) -> bool:
        """True when arc x is positive, i.e. the edge is directed away from x's source."""
        return x in self.positive

    def flip(self, edges) -> "Orientation":
        pos = set(self.positive)
        for ed in edges:
            a = ed & ~1
            if a in pos:
                pos.discard(a)
                pos.add(a + 1)
            else:
                pos.discard(a + 1)
                pos.add(a)
        return Orientation(frozenset(pos))


def orientation_from_arcs(arcs) -> Orientation:
    return Orientation(frozenset(arcs))


# -- validation -------------------------------------------------------------

@dataclass
class ValidationReport:
    valid: bool
    errors: list[str]
    degrees: list[int]


def validate(M: RootedMap) -> ValidationReport:
    errs = []
    n = M.n_arcs
    if n <= 0 or n % 2:
        errs.append(f"arc count {n} is not positive and even")
        return ValidationReport(False, errs, [])
    if len(M.v) != n:
        errs.append(f"v has {len(M.v)} entries, expected {n}")
        return ValidationReport(False, errs, [])
    seen: dict[int, int] = {}
    for a, b in enumerate(M.v):
        if not 0 <= b < n:
            errs.append(f"v({a}) = {b} is not an arc")
        elif b in seen:
            errs.append(f"v is not a bijection: v({seen[b]}) = v({a}) = {b}")
        else:
            seen[b] = a
    if errs:
        return ValidationReport(False, errs, [])
    reach = {0}
    todo = [0]
    while todo:
        x = todo.pop()
        for y in (M.v[x], e(x)):
            if y not in reach:
                reach.add(y)
                todo.append(y)
    if len(reach) != n:
        errs.append(f"not connected: arc {min(set(range(n)) - reach)} unreachable from arc 0")
    if not 0 <= M.root < n:
        errs.append(f"root {M.root} is not an arc")
    elif M.external is not None:
        if not 0 <= M.external < len(M.cycles):
            errs.append(f"external cycle index {M.external} out of range")
        elif M.vertex_of[M.root] != M.external:
            errs.append(f"root arc {M.root} is not on the external vertex")
    return ValidationReport(not errs, errs, [len(c) for c in M.cycles])


# -- construction -----------------------------------------------------------

def build_map(vertices, edges, root, external=None) -> tuple[RootedMap, dict]:
    """Build a map from labelled half-edges.

    ``vertices`` lists each vertex as its half-edge labels in counterclockwise
    order; ``edges`` pairs labels. ``external`` is the index of the boundary
    vertex in ``vertices``. Returns the map and the label-to-arc dictionary.
    """
    label_arc: dict = {}
    for k, (a, b) in enumerate(edges):
        if a in label_arc or b in label_arc:
            raise FormatError(f"half-edge used twice in edge {a!r}-{b!r}")
        label_arc[a], label_arc[b] = 2 * k, 2 * k + 1
    n = 2 * len(edges)
    v = [None] * n
    for cyc in vertices:
        for i, lab in enumerate(cyc):
            if lab not in label_arc:
                raise FormatError(f"half-edge {lab!r} has no partner")
            v[label_arc[lab]] = label_arc[cyc[(i + 1) % len(cyc)]]
    if any(x is None for x in v):
        raise FormatError("some half-edge is not placed at a vertex")
    M0 = RootedMap(n, tuple(v), label_arc[root])
    ext = None
    if external is not None:
        ext = M0.vertex_of[label_arc[vertices[external][0]]]
    return RootedMap(n, tuple(v), label_arc[root], ext), label_arc


def relabel(M: RootedMap, edge_perm: dict[int, int]) -> RootedMap:
    """Apply an arc bijection that respects pairing (maps x^1 to image(x)^1)."""
    n = M.n_arcs
    v = [0] * n
    for a in range(n):
        v[edge_perm[a]] = edge_perm[M.v[a]]
    out = RootedMap(n, tuple(v), edge_perm[M.root])
    ext = None if M.external is None else out.vertex_of[edge_perm[M.root]]
    return RootedMap(n, tuple(v), edge_perm[M.root], ext)


def canonical_labelling(M: RootedMap) -> dict[int, int]:
    """Root-anchored traversal: old arc -> new arc, root becomes 0."""
    lab = {M.root: 0, e(M.root): 1}
    order = [M.root, e(M.root)]
    i = 0
    while i < len(order):
        y = M.v[order[i]]
        if y not in lab:
            k = len(order)
            lab[y], lab[e(y)] = k, k + 1
            order += [y, e(y)]
        i += 1
    if len(order) != M.n_arcs:
        raise PreconditionError("map is not connected")
    return lab


def canonical_form(M: RootedMap) -> RootedMap:
    return relabel(M, canonical_labelling(M))


def is_isomorphic(M1: RootedMap, M2: RootedMap) -> bool:
    return M1.n_arcs == M2.n_arcs and canonical_form(M1) == canonical_form(M2)


def canonical_with_orientation(M: RootedMap, O: Orientation | None):
    lab = canonical_labelling(M)
    C = relabel(M, lab)
    if O is None:
        return C, None
    return C, Orientation(frozenset(lab[x] for x in O.positive))


def trivial_map() -> RootedMap:
    """The bare edge: external vertex (0 1) with the single edge as a loop on it."""
    return RootedMap(2, (1, 0), 0, 0)


def close_map(M: RootedMap, with_origin: bool = False):
    """Drop the boundary of a map with a single boundary arc.

    The root edge is removed and the 2-valent vertex it leaves behind is
    smoothed away. The new root is the merged edge, read from the side that
    came after the root in the rotation. With ``with_origin`` also return a
    dictionary from each new edge to the old edge it continues.
    """
    if M.external is None or M.degree(M.external) != 1:
        raise PreconditionError("closing needs an external vertex of degree 1")
    b = e(M.root)
    w = M.vertex_of[b]
    if M.is_external(w) or M.degree(w) != 3:
        raise PreconditionError("root must attach to a 3-valent internal vertex")
    c, d = M.v[b], M.v[M.v[b]]
    if e(c) == d:
        raise PreconditionError("closing would leave a vertex-free loop")
    p, q = e(c), e(d)
    # p and q become the two arcs of one edge
    gone = {M.root, b, c, d}
    keep = [x for x in range(M.n_arcs) if x not in gone]
    pairs, seen = [], set()
    for x in keep:
        if x in seen:
            continue
        y = q if x == p else p if x == q else e(x)
        seen.update((x, y))
        pairs.append((x, y))
    new = {}
    for k, (x, y) in enumerate(pairs):
        new[x], new[y] = 2 * k, 2 * k + 1
    v = [0] * len(keep)
    for x in keep:
        v[new[x]] = new[M.v[x]]
    C = RootedMap(len(keep), tuple(v), new[p])
    if with_origin:
        return C, {2 * k: x & ~1 for k, (x, _) in enumerate(pairs)}
    return C


def contract_2valent(M: RootedMap, O: Orientation | None = None):
    """Smooth away every internal 2-valent vertex.

    Returns (map, orientation, survivors) where survivors maps each arc of
    the result to the arc of ``M`` it came from. With an orientation, every
    smoothed chain must run one way.
    """
    two = {w for w in M.internal_vertices() if M.degree(w) == 2}
    if not two:
        lab = {x: x for x in range(M.n_arcs)}
        return M, O, lab

    def far_end(x):
        # walk from arc x across its edge and through 2-valent vertices
        y = e(x)
        steps = 0
        while M.vertex_of[y] in two:
            if O is not None and (y in O.positive) == (M.v[y] in O.positive):
                raise PreconditionError(f"2-valent vertex {M.vertex_of[y]} is not in-out")
            x = M.v[y]
            y = e(x)
            steps += 1
            if steps > M.n_arcs:
                raise PreconditionError("closed chain of 2-valent vertices")
        return y

    keep = [x for x in range(M.n_arcs) if M.vertex_of[x] not in two]
    pairs, seen = [], set()
    for x in keep:
        if x not in seen:
            y = far_end(x)
            seen.update((x, y))
            pairs.append((x, y))
    new, back = {}, {}
    for k, (x, y) in enumerate(pairs):
        new[x], new[y] = 2 * k, 2 * k + 1
        back[2 * k], back[2 * k + 1] = x, y
    v = [0] * len(keep)
    for x in keep:
        v[new[x]] = new[M.v[x]]
    root = M.root
    if M.vertex_of[root] in two:
        raise PreconditionError("root sits on a 2-valent vertex")
    R = RootedMap(len(keep), tuple(v), new[root])
    if M.external is not None:
        R = RootedMap(R.n_arcs, R.v, R.root, R.vertex_of[R.root])
    O2 = None
    if O is not None:
        O2 = Orientation(frozenset(new[x] for x in keep if x in O.positive))
    return R, O2, back


# -- invariants -------------------------------------------------------------

def face_orbits(M: RootedMap) -> list[tuple[int, ...]]:
    """Orbits of f = (e o v)^-1."""
    f = [0] * M.n_arcs
    for x in range(M.n_arcs):
        f[M.phi(x)] = x
    seen = [False] * M.n_arcs
    out = []
    for a in range(M.n_arcs):
        if seen[a]:
            continue
        cyc, x = [], a
        while not seen[x]:
            seen[x] = True
            cyc.append(x)
            x = f[x]
        out.append(tuple(cyc))
    return out


def euler_characteristic(M: RootedMap) -> int:
    return len(M.cycles) - M.n_edges + len(face_orbits(M))


def genus(M: RootedMap) -> int:
    chi = euler_characteristic(M)
    if chi % 2 or chi > 2:
        raise PreconditionError(f"corrupt map: Euler characteristic {chi}")
    return (2 - chi) // 2


def dual(M: RootedMap) -> RootedMap:
    """Vertices of the dual are the faces: rotation f^-1 = e o v."""
    return RootedMap(M.n_arcs, tuple(M.phi(x) for x in range(M.n_arcs)), M.root, None)


def _connected_without(M: RootedMap, skip_edge: int | None) -> bool:
    nv = len(M.cycles)
    adj: list[list[int]] = [[] for _ in range(nv)]
    for a in M.edges():
        if a == skip_edge:
            continue
        s, t = M.vertex_of[a], M.vertex_of[a + 1]
        adj[s].append(t)
        adj[t].append(s)
    seen = {0}
    todo = [0]
    while todo:
        x = todo.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return len(seen) == nv


def bridges(M: RootedMap) -> frozenset[int]:
    """Edges (by smaller arc) whose removal disconnects the vertex graph."""
    return frozenset(a for a in M.edges() if not _connected_without(M, a))


def is_bridgeless(M: RootedMap) -> bool:
    """No bridge, except that the root edge of a closed map is not counted."""
    br = set(bridges(M))
    if M.external is not None and M.degree(M.external) == 1:
        br.discard(M.root & ~1)
    return not br


def boundary(M: RootedMap) -> list[int]:
    """[x0, x1, ..., xn]: root first, then the other boundary arcs in clockwise
    drawing order, which is the rotation v at the external vertex."""
    if M.external is None:
        raise PreconditionError("map has no external vertex")
    out = [M.root]
    x = M.v[M.root]
    while x != M.root:
        out.append(x)
        x = M.v[x]
    return out


# -- orientations -----------------------------------------------------------

@dataclass
class OrientationClass:
    well_oriented: bool
    globally_well_oriented: bool
    topological: bool


def _check_orientation(M: RootedMap, O: Orientation):
    for a in M.edges():
        if (a in O.positive) == (a + 1 in O.positive):
            raise FormatError(f"orientation must pick exactly one arc of edge {a}")
    if any(not 0 <= x < M.n_arcs for x in O.positive):
        raise FormatError("orientation mentions an unknown arc")


def vertex_io(M: RootedMap, O: Orientation, vertex: int) -> tuple[int, int]:
    """(inputs, outputs) at a vertex; an arc is an output when it is positive."""
    outs = sum(1 for x in M.cycles[vertex] if x in O.positive)
    return M.degree(vertex) - outs, outs


def is_well_oriented(M: RootedMap, O: Orientation) -> bool:
    for w in M.internal_vertices():
        d = M.degree(w)
        i, o = vertex_io(M, O, w)
        if d == 3 and (i, o) not in ((2, 1), (1, 2)):
            return False
        if d == 2 and (i, o) != (1, 1):
            return False
    return True


def is_globally_well_oriented(M: RootedMap, O: Orientation) -> bool:
    if not is_well_oriented(M, O) or M.external is None:
        return False
    outputs = [x for x in M.cycles[M.external] if x not in O.positive]
    return outputs == [M.root]


def classify_orientation(M: RootedMap, O: Orientation) -> OrientationClass:
    _check_orientation(M, O)
    well = is_well_oriented(M, O)
    glob = well and is_globally_well_oriented(M, O)
    topo = False
    if glob:
        try:
            topo = topological_orientation(M) == O
        except PreconditionError:
            topo = False
    return OrientationClass(well, glob, topo)


class _Decomposer:
    """Shared recursion behind topological orientation and map-to-term.

    A sub-map is addressed by the arc on its parent side; ``blocked`` holds
    the already removed ancestor vertices plus the external vertex.
    """

    def __init__(self, M: RootedMap):
        self.M = M
        for w in M.internal_vertices():
            if M.degree(w) > 3:
                raise PreconditionError(f"vertex {w} has degree {M.degree(w)} > 3")

    def blocked(self, w: int, removed) -> bool:
        return w in removed or self.M.is_external(w)

    def linked(self, c: int, d: int, removed) -> bool:
        """Are the edges of arcs c and d joined through unremoved internal vertices?"""
        M = self.M
        if e(c) == d:
            return True
        start, goal = M.target(c), M.target(d)
        if self.blocked(start, removed) or self.blocked(goal, removed):
            return False
        seen, todo = {start}, [start]
        while todo:
            w = todo.pop()
            if w == goal:
                return True
            for x in M.cycles[w]:
                u = M.target(x)
                if u not in seen and not self.blocked(u, removed):
                    seen.add(u)
                    todo.append(u)
        return False

    def walk(self, a: int, removed: frozenset):
        """Yield the sub-map rooted at parent-side arc ``a`` as a nested tuple."""
        M = self.M
        b = e(a)
        w = M.vertex_of[b]
        if self.blocked(w, removed):
            return ("var", a, b)
        d = M.degree(w)
        inner = removed | {w}
        if d == 1:
            return ("unit", a, b)
        if d == 2:
            return ("glue", a, b, self.walk(M.v[b], inner))
        c = M.v[b]
        dd = M.v[c]
        if self.linked(c, dd, inner):
            return ("lam", a, b, c, dd, self.walk(dd, inner))
        return ("app", a, b, c, dd, self.walk(dd, inner), self.walk(c, inner))


def decompose(M: RootedMap):
    import sys
    limit = sys.getrecursionlimit()
    if limit < 10 * M.n_arcs + 100:
        sys.setrecursionlimit(10 * M.n_arcs + 100)
    return _Decomposer(M).walk(M.root, frozenset())


def topological_orientation(M: RootedMap) -> Orientation:
    """The canonical orientation: @ vertices negative, lambda vertices positive."""
    pos: set[int] = set()

    def go(node):
        kind = node[0]
        if kind in ("var", "unit"):
            pos.add(node[2])
        elif kind == "glue":
            pos.add(node[2])
            go(node[3])
        elif kind == "lam":
            _, a, b, c, d, body = node
            pos.update((b, c))
            go(body)
        else:
            _, a, b, c, d, fn, arg = node
            pos.add(b)
            go(fn)
            go(arg)

    go(decompose(M))
    return Orientation(frozenset(pos))


def all_well_orientations(M: RootedMap, global_only: bool = False):
    """Every (globally) well-orientation, by backtracking over edges."""
    edges = list(M.edges())
    inc: dict[int, list[int]] = {}
    for a in edges:
        for w in {M.vertex_of[a], M.vertex_of[a + 1]}:
            inc.setdefault(w, []).append(a)
    last_edge = {w: max(es) for w, es in inc.items()}
    closing: dict[int, list[int]] = {}
    for w, a in last_edge.items():
        closing.setdefault(a, []).append(w)
    pos: set[int] = set()

    def ok_vertex(w: int) -> bool:
        if M.is_external(w):
            if not global_only:
                return True
            return [x for x in M.cycles[w] if x not in pos] == [M.root]
        d = M.degree(w)
        outs = sum(1 for x in M.cycles[w] if x in pos)
        if d == 3:
            return outs in (1, 2)
        if d == 2:
            return outs == 1
        return True

    def go(i: int):
        if i == len(edges):
            yield Orientation(frozenset(pos))
            return
        a = edges[i]
        for x in (a, a + 1):
            pos.add(x)
            if all(ok_vertex(w) for w in closing.get(a, ())):
                yield from go(i + 1)
            pos.discard(x)

    yield from go(0)


# -- enumeration ------------------------------------------------------------

def generate_maps(n_internal: int, boundary_degree: int = 1):
    """Every rooted map with ``n_internal`` 3-valent internal vertices and an
    external vertex of the given degree, each exactly once.

    Exploration order: keep discovered arcs in a list; the first unmatched one
    is paired either with a later unmatched arc or with the first arc of a new
    vertex (whose other arcs are appended in counterclockwise order).
    """
    total = boundary_degree + 3 * n_internal
    if total % 2 or boundary_degree < 1:
        return
    found = list(range(boundary_degree))
    partner: dict[int, int] = {}
    vertices = [list(range(boundary_degree))]

    def go(next_arc: int):
        first = next((h for h in found if h not in partner), None)
        if first is None:
            if len(vertices) - 1 == n_internal:
                yield _materialize(vertices, partner)
            return
        pos = found.index(first)
        for h in found[pos + 1:]:
            if h in partner:
                continue
            partner[first], partner[h] = h, first
            yield from go(next_arc)
            del partner[first], partner[h]
        if len(vertices) - 1 < n_internal:
            s = [next_arc, next_arc + 1, next_arc + 2]
            vertices.append(s)
            found.extend(s)
            partner[first], partner[s[0]] = s[0], first
            yield from go(next_arc + 3)
            del partner[first], partner[s[0]]
            del found[-3:]
            vertices.pop()

    yield from go(boundary_degree)


def _materialize(vertices, partner) -> RootedMap:
    seen, edges = set(), []
    for h in sorted(partner):
        if h not in seen:
            seen.update((h, partner[h]))
            edges.append((h, partner[h]))
    M, _ = build_map([list(c) for c in vertices], edges, 0, external=0)
    return canonical_form(M)


def enumerate_maps(n_vertices: int, planar: bool = False, bridgeless: bool = False,
                   keep: bool = False, cap: int = 9):
    """Count closed rooted 3-valent maps with ``n_vertices`` internal vertices."""
    if n_vertices > cap:
        raise PreconditionError(f"size {n_vertices} exceeds cap {cap}")
    count, kept = 0, []
    for M in generate_maps(n_vertices, 1):
        if planar and genus(M) != 0:
            continue
        if bridgeless and not is_bridgeless(M):
            continue
        count += 1
        if keep:
            kept.append(M)
    return (count, kept) if keep else count


def is_open_connected(M: RootedMap) -> bool:
    """Is the map still connected once the external vertex is cut away?

    Boundary edges become dangling half-edges, so an edge running from the
    boundary back to the boundary is only allowed when it is the whole map.
    """
    if M.external is None:
        return True
    inner = M.internal_vertices()
    if not inner:
        return M.n_edges == 1
    adj: dict[int, list[int]] = {w: [] for w in inner}
    for a in M.edges():
        s, t = M.vertex_of[a], M.vertex_of[a + 1]
        if M.is_external(s) and M.is_external(t):
            return False
        if not M.is_external(s) and not M.is_external(t):
            adj[s].append(t)
            adj[t].append(s)
    seen, todo = {inner[0]}, [inner[0]]
    while todo:
        for u in adj[todo.pop()]:
            if u not in seen:
                seen.add(u)
                todo.append(u)
    return len(seen) == len(inner)


def all_small_maps(max_internal: int, open_connected: bool = True):
    """All rooted maps with every internal vertex 3-valent, any boundary size.

    By default only maps whose interior is connected without the external
    vertex; these are exactly the maps that can carry a term in context.
    """
    for n in range(max_internal + 1):
        for d in range(1, n + 3):
            for M in generate_maps(n, d):
                if not open_connected or is_open_connected(M):
                    yield M


# -- drawings ---------------------------------------------------------------

def map_from_drawing(coords: dict, edges: list, root_node: str, external: bool = True,
                     root_edge: int | None = None, boundary_nodes=None,
                     center=(0.0, 0.0)) -> tuple[RootedMap, Orientation, dict]:
    """Build a map from a planar drawing.

    ``edges`` holds tuples (src, dst, opts) where opts may set ``bend``
    (positive = bend left, in degrees), or explicit ``out``/``in`` angles.
    Edges are oriented src -> dst. When ``external`` is true, ``root_node``
    is the boundary vertex; otherwise the root arc leaves ``root_node``
    along edge index ``root_edge``. ``boundary_nodes`` lists points on a
    boundary circle around ``center`` that together form the external vertex;
    they are ordered clockwise along the circle. Returns map, orientation and
    a dictionary from edge index to its positive arc.
    """
    if boundary_nodes:
        merged = "__boundary__"
        angle = {}
        for nm in boundary_nodes:
            x, y = coords[nm]
            angle[nm] = -math.degrees(math.atan2(y - center[1], x - center[0])) % 360
        inner = {k: xy for k, xy in coords.items() if k not in angle}
        edges2 = []
        for k, ed in enumerate(edges):
            s0, t0 = ed[0], ed[1]
            opts = dict(ed[2]) if len(ed) > 2 else {}
            if s0 in angle or t0 in angle:
                far = t0 if s0 in angle else s0
                near = s0 if s0 in angle else t0
                (x1, y1), (x2, y2) = coords[far], coords[near]
                a_far = math.degrees(math.atan2(y2 - y1, x2 - x1))
                if s0 in angle:
                    opts = {"out": angle[near], "in": a_far}
                    ed = (merged, far, opts)
                else:
                    opts = {"out": a_far, "in": angle[near]}
                    ed = (far, merged, opts)
            edges2.append(ed)
        inner[merged] = center
        M, O, pos = map_from_drawing(inner, edges2, merged)
        rk = next(k for k, ed in enumerate(edges) if root_node in ed[:2])
        root = pos[rk] if edges[rk][0] == root_node else e(pos[rk])
        M = RootedMap(M.n_arcs, M.v, root, M.vertex_of[root])
        return M, O, pos
    ends: dict[str, list[tuple[float, object]]] = {k: [] for k in coords}
    pairs = []
    for k, ed in enumerate(edges):
        s, t = ed[0], ed[1]
        opts = ed[2] if len(ed) > 2 else {}
        (x1, y1), (x2, y2) = coords[s], coords[t]
        if "out" in opts:
            a_out, a_in = opts["out"], opts["in"]
        else:
            d = math.degrees(math.atan2(y2 - y1, x2 - x1))
            back = d + 180
            bend = opts.get("bend", 0)
            a_out, a_in = d + bend, back - bend
        ends[s].append((a_out % 360, ("o", k)))
        ends[t].append((a_in % 360, ("i", k)))
        pairs.append((("o", k), ("i", k)))
    names = list(coords)
    verts = []
    for nm in names:
        lst = sorted(ends[nm], key=lambda p: p[0])
        if any(abs(lst[i][0] - lst[i + 1][0]) < 1e-9 for i in range(len(lst) - 1)):
            raise FormatError(f"two half-edges leave {nm} at the same angle")
        verts.append([lab for _, lab in lst])
    if external:
        rk = next(k for k, ed in enumerate(edges) if root_node in ed[:2])
        root_lab = ("o", rk) if edges[rk][0] == root_node else ("i", rk)
        M, lab = build_map(verts, pairs, root_lab, external=names.index(root_node))
    else:
        ed = edges[root_edge]
        root_lab = ("o", root_edge) if ed[0] == root_node else ("i", root_edge)
        M, lab = build_map(verts, pairs, root_lab)
    pos = {k: lab[("o", k)] for k in range(len(edges))}
    return M, Orientation(frozenset(pos.values())), pos


# -- text formats -----------------------------------------------------------

def format_map(M: RootedMap) -> str:
    v = "".join("(" + " ".join(map(str, c)) + ")" for c in M.cycles)
    lines = ["map", f"arcs: {M.n_arcs}", f"v: {v}", f"root: {M.root}"]
    if M.external is not None:
        lines.append(f"external: {M.external}")
    return "\n".join(lines) + "\n"


def parse_map(text: str) -> RootedMap:
    fields: dict[str, tuple[int, str]] = {}
    seen_header = False
    for no, raw in enumerate(text.splitlines(), 1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        if not seen_header:
            if ln != "map":
                raise FormatError(f"line {no}: expected header 'map'")
            seen_header = True
            continue
        m = re.match(r"^(\w+):\s*(.*)$", ln)
        if not m or m.group(1) not in ("arcs", "v", "root", "external"):
            raise FormatError(f"line {no}: unexpected content {ln!r}")
        fields[m.group(1)] = (no, m.group(2))
    if not seen_header:
        raise FormatError("empty map file")
    for k in ("arcs", "v", "root"):
        if k not in fields:
            raise FormatError(f"missing '{k}:' line")
    try:
        n = int(fields["arcs"][1])
        root = int(fields["root"][1])
    except ValueError:
        raise FormatError("arcs and root must be integers") from None
    no, vtext = fields["v"]
    cyc_texts = re.findall(r"\(([^)]*)\)", vtext)
    if re.sub(r"\([^)]*\)", "", vtext).strip():
        raise FormatError(f"line {no}: v must be a product of parenthesized cycles")
    v = [None] * n
    listed = []
    for ct in cyc_texts:
        try:
            cyc = [int(x) for x in ct.split()]
        except ValueError:
            raise FormatError(f"line {no}: non-integer arc in cycle ({ct})") from None
        if not cyc:
            raise FormatError(f"line {no}: empty cycle")
        for i, a in enumerate(cyc):
            if not 0 <= a < n:
                raise FormatError(f"line {no}: arc {a} out of range")
            if v[a] is not None:
                raise FormatError(f"line {no}: arc {a} appears twice")
            v[a] = cyc[(i + 1) % len(cyc)]
        listed.append(cyc)
    if any(x is None for x in v):
        raise FormatError(f"line {no}: arc {v.index(None)} missing from v")
    M = RootedMap(n, tuple(v), root)
    ext = None
    if "external" in fields:
        eno, et = fields["external"]
        try:
            k = int(et)
        except ValueError:
            raise FormatError(f"line {eno}: external must be a cycle index") from None
        if not 0 <= k < len(listed):
            raise FormatError(f"line {eno}: no cycle with index {k}")
        ext = M.vertex_of[listed[k][0]]
    return RootedMap(n, tuple(v), root, ext)


def format_orientation(O: Orientation) -> str:
    return "orient: " + " ".join(map(str, sorted(O.positive))) + "\n"


def parse_orientation(text: str, M: RootedMap | None = None) -> Orientation:
    for no, raw in enumerate(text.splitlines(), 1):
        ln = raw.split("#", 1)[0].strip()
        if not ln:
            continue
        m = re.match(r"^orient:\s*(.*)$", ln)
        if not m:
            raise FormatError(f"line {no}: expected 'orient: <arcs>'")
        try:
            arcs = [int(x) for x in m.group(1).split()]
        except ValueError:
            raise FormatError(f"line {no}: non-integer arc") from None
        O = Orientation(frozenset(arcs))
        if M is not None:
            _check_orientation(M, O)
        return O
    raise FormatError("empty orientation file")


def to_dot(M: RootedMap, O: Orientation | None = None, labels: dict | None = None) -> str:
    """Graphviz rendering; positive vertices blue, negative red, boundary gray."""
    out = ["digraph map {" if O else "graph map {", "  node [shape=circle, style=filled, label=\"\"];"]
    for w, cyc in enumerate(M.cycles):
        attrs = []
        if M.is_external(w):
            attrs.append("fillcolor=gray80, shape=doublecircle")
        elif O is not None and M.degree(w) == 3:
            _, outs = vertex_io(M, O, w)
            attrs.append("fillcolor=blue" if outs == 2 else "fillcolor=red")
        else:
            attrs.append("fillcolor=white")
        out.append(f"  v{w} [{', '.join(attrs)}];")
    arrow = "->" if O else "--"
    for a in M.edges():
        x = a if O is None or a in O.positive else a + 1
        s, t = M.vertex_of[x], M.vertex_of[e(x)]
        lab = f" [label=\"{labels[a]}\"]" if labels and a in labels else f" [label=\"{a}\"]"
        out.append(f"  v{s} {arrow} v{t}{lab};")
    out.append("}")
    return "\n".join(out) + "\n"
