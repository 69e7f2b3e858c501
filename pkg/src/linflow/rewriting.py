"""Local rewrites of well-oriented maps, flow pullback and the spine encoder.

Each move is a pair of small pictures (left and right side) sharing a set of
named stubs. The pictures are given by node coordinates, exactly as one
would draw them, and the rotation at every vertex is read off the angles.
A move is applied at anchor arcs of a work map whose arc ids stay stable, so
a recorded sequence of applications can be replayed.

Anchors: an @ vertex is addressed by its output arc, a lambda by its body
(input) arc, a 2-valent vertex by its input arc, a 1-valent vertex by its
arc, and a bare edge by its positive arc.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .flows import _constraints, check_flow, search_assignments
from .imploid import FormatError, ImploidTable, PreconditionError
from .lambda_terms import LinearTerm, all_terms, free_vars_named, map_to_term, term_to_map, to_named
from .maps import (Orientation, RootedMap, build_map, canonical_with_orientation,
                   is_well_oriented)


class MoveError(PreconditionError):
    pass


class PullbackError(RuntimeError):
    pass


# -- templates --------------------------------------------------------------

_DEGREE = {"lam": 3, "app": 3, "glue": 2, "unit": 1}
_OUTS = {"lam": 2, "app": 1, "glue": 1, "unit": 1}


@dataclass(frozen=True)
class Pattern:
    """A compiled picture.

    ``rot`` gives each internal node its half-edges counterclockwise, starting
    at the anchor half-edge. ``pairs`` joins internal half-edges, ``stub_half``
    attaches a stub to a half-edge and ``direct`` joins two stubs by a bare
    edge. ``components`` lists anchor nodes, or ("edge", tail, head) for a
    bare edge component.
    """
    kinds: dict
    rot: dict
    outs: frozenset
    pairs: dict
    stub_half: dict
    direct: dict
    stub_in: frozenset
    stubs: tuple
    components: tuple

    def node_of(self, half: str) -> str:
        return half.split("/")[0]

    @property
    def n_vertices(self) -> int:
        return len(self.rot)


def _angle(p, q) -> float:
    return math.degrees(math.atan2(q[1] - p[1], q[0] - p[0]))


def _compile(nodes: dict, stubs: dict, edges: list) -> Pattern:
    kinds = {k: v[0] for k, v in nodes.items()}
    pos = {k: (v[1], v[2]) for k, v in nodes.items()}
    pos.update(stubs)
    half_at: dict[str, list] = {k: [] for k in nodes}
    outs, pairs, stub_half, direct, stub_in = set(), {}, {}, {}, set()
    for k, (src, dst, *rest) in enumerate(edges):
        opt = rest[0] if rest else {}
        if src == dst:
            a_src, a_dst = opt["out"], opt["in"]
        elif "out" in opt:
            a_src, a_dst = opt["out"], opt["in"]
        else:
            base = _angle(pos[src], pos[dst])
            bend = opt.get("bend", 0)
            a_src, a_dst = base + bend, base + 180 - bend
        chain = [src] + [f"g{k}.{i}" for i in range(opt.get("glue", 0))] + [dst]
        for g in chain[1:-1]:
            kinds[g] = "glue"
            half_at[g] = []
        for i in range(len(chain) - 1):
            a, b = chain[i], chain[i + 1]
            ha, hb = f"{a}/{k}.{i}s", f"{b}/{k}.{i}d"
            ang_a = a_src if i == 0 else 0.0
            ang_b = a_dst if i == len(chain) - 2 else 180.0
            ends = []
            for node, h, ang, out in ((a, ha, ang_a, True), (b, hb, ang_b, False)):
                if node in stubs:
                    ends.append((node, None))
                    if out:
                        stub_in.add(node)
                else:
                    half_at[node].append((ang % 360, h))
                    if out:
                        outs.add(h)
                    ends.append((node, h))
            (na, xa), (nb, xb) = ends
            if xa and xb:
                pairs[xa], pairs[xb] = xb, xa
            elif xa:
                stub_half[nb] = xa
            elif xb:
                stub_half[na] = xb
            else:
                direct[na], direct[nb] = nb, na
    rot = {}
    for node, hs in half_at.items():
        kind = kinds[node]
        if len(hs) != _DEGREE[kind]:
            raise ValueError(f"template node {node} has degree {len(hs)}")
        order = [h for _, h in sorted(hs)]
        n_out = sum(h in outs for h in order)
        if n_out != _OUTS[kind]:
            raise ValueError(f"template node {node} has {n_out} outputs")
        if kind == "app" or kind == "unit":
            first = next(h for h in order if h in outs)
        else:
            first = next(h for h in order if h not in outs)
        i = order.index(first)
        rot[node] = tuple(order[i:] + order[:i])
    comps, seen = [], set()
    for node in rot:
        if node in seen:
            continue
        comps.append(node)
        todo = [node]
        seen.add(node)
        while todo:
            w = todo.pop()
            for h in rot[w]:
                if h in pairs:
                    u = pairs[h].split("/")[0]
                    if u not in seen:
                        seen.add(u)
                        todo.append(u)
    done = set()
    for s in stubs:
        if s in direct and s not in done:
            t = direct[s]
            done |= {s, t}
            comps.append(("edge", s, t) if s in stub_in else ("edge", t, s))
    return Pattern(kinds, rot, frozenset(outs), pairs, stub_half, direct, frozenset(stub_in),
                   tuple(stubs), tuple(comps))


def _circle(points: dict, order: list) -> list:
    """Counterclockwise arcs of a circle through nodes at the given angles."""
    out = []
    for a, b in zip(order, order[1:] + order[:1]):
        out.append((a, b, {"out": points[a] + 90, "in": points[b] - 90}))
    return out


_R3 = 0.866
_LAM_STUBS = {"root": (0, 0), "body": (-_R3, 1.5), "var": (_R3, 1.5)}
_APP_STUBS = {"fn": (0, 0), "cont": (-_R3, -1.5), "arg": (_R3, -1.5)}
_UNIT_L = ({"u": ("unit", 0, 1)}, {"out": (0, 0)}, [("u", "out")])


def _lam_side(glue: int):
    return ({"lam": ("lam", 0, 1)}, _LAM_STUBS,
            [("lam", "var", {"glue": glue}), ("body", "lam", {"glue": glue}),
             ("lam", "root", {"glue": glue})])


def _app_side(glue: int):
    return ({"app": ("app", 0, -1)}, _APP_STUBS,
            [("arg", "app", {"glue": glue}), ("app", "cont", {"glue": glue}),
             ("fn", "app", {"glue": glue})])


def _edge_side(glue: int):
    return ({}, {"in": (0, 0), "out": (0, -2)}, [("in", "out", {"glue": glue})])


_B_PTS = {"ax": 330, "lz": 90, "ly": 210, "lx": 270}
_C_PTS = {"argz": 315, "argy": 45, "lz": 135, "ly": 225, "lx": 270}
_ASSOC_L = ({"app": ("app", 0, 0), "app2": ("app", -0.5, -_R3)},
            {"fn": (0, 1), "arg2": (0, -1.732), "cont": (-1, -1.732), "arg1": (1, -1.732)},
            [("fn", "app"), ("app", "app2"), ("app2", "cont"), ("arg1", "app"), ("arg2", "app2")])
_IH_L = ({"lam": ("lam", 0, 0), "app": ("app", 0, -2)},
         {"var": (_R3, 0.5), "body": (-_R3, 0.5), "cont": (-_R3, -2.5), "arg": (_R3, -2.5)},
         [("body", "lam"), ("lam", "var"), ("lam", "app"), ("app", "cont"), ("arg", "app")])

_PICTURES = {
    "unsubdivide": (_edge_side(1), _edge_side(0)),
    "subdivide": (_edge_side(0), _edge_side(1)),
    "resubdivide": (_edge_side(1), _edge_side(2)),
    "lam_subdiv": (_lam_side(0), _lam_side(1)),
    "app_subdiv": (_app_side(0), _app_side(1)),
    "beta": (
        ({"lam": ("lam", 0, 0), "app": ("app", 0, -2.5)},
         {"var": (_R3, 0.5), "body": (-_R3, 0.5), "cont": (-_R3, -3), "arg": (_R3, -3)},
         [("body", "lam"), ("lam", "var"), ("lam", "app", {"glue": 1}), ("app", "cont"),
          ("arg", "app")]),
        ({}, {"body": (0, 0), "var": (1.732, 0), "cont": (0, -4), "arg": (1.732, -4)},
         [("body", "cont", {"glue": 1}), ("arg", "var", {"glue": 1})])),
    "eta": (
        ({}, {"fn": (0, 0), "root": (0, -4.5)}, [("fn", "root", {"glue": 1})]),
        ({"app": ("app", 0, -1), "lam": ("lam", 0, -3.5)}, {"fn": (0, 0), "root": (0, -4.5)},
         [("fn", "app"), ("app", "lam", {"glue": 1, "bend": -60}),
          ("lam", "app", {"glue": 1, "bend": -60}), ("lam", "root")])),
    "compose": (
        _lam_side(0),
        ({"lam1": ("lam", 0, 1), "lam2": ("lam", -_R3, 2.5), "app": ("app", _R3, 2.5)},
         {"root": (0, 0), "body": (-1.732, 3), "var": (1.732, 3)},
         [("lam1", "root"), ("lam1", "app"), ("lam2", "lam1"), ("lam2", "app"),
          ("body", "lam2"), ("app", "var")])),
    "compose_bar": (
        ({"app": ("app", 0, -1)}, {"root": (0, 0), "body": (-_R3, -1.5), "var": (_R3, -1.5)},
         [("var", "app"), ("app", "body"), ("root", "app")]),
        ({"lam1": ("app", 0, -1), "lam2": ("lam", -_R3, -2.5), "app": ("app", _R3, -2.5)},
         {"root": (0, 0), "body": (-1.732, -3), "var": (1.732, -3)},
         [("root", "lam1"), ("app", "lam1"), ("lam1", "lam2"), ("lam2", "app"),
          ("lam2", "body"), ("var", "app")])),
    "init": (
        ({"app": ("app", 0, 0), "u": ("unit", 0, 1)}, {"cont": (-_R3, -0.5), "arg": (_R3, -0.5)},
         [("u", "app"), ("app", "cont"), ("arg", "app")]),
        ({}, {"arg": (0, 0), "cont": (-1.5, 0)}, [("arg", "cont", {"glue": 1, "bend": -90})])),
    "unit": (
        ({}, {"fn": (0, 0), "cont": (-0.5, -1.5)}, [("fn", "cont", {"glue": 1, "bend": 30})]),
        ({"app": ("app", 0, 0), "u": ("unit", _R3, -0.5)}, {"fn": (0, 1), "cont": (-_R3, -0.5)},
         [("fn", "app"), ("app", "cont"), ("u", "app")])),
    "B": (
        _UNIT_L,
        ({"lx": ("lam", 0, -0.5), "ly": ("lam", -0.433, -0.25), "lz": ("lam", 0, 0.5),
          "ax": ("app", 0.433, -0.25), "ay": ("app", 0, 0)},
         {"out": (0, -1)},
         _circle(_B_PTS, ["ax", "lz", "ly", "lx"])
         + [("lx", "out"), ("ly", "ay"), ("lz", "ay"), ("ay", "ax")])),
    "I": (
        _UNIT_L,
        ({"lam": ("lam", 0, 1)}, {"out": (0, 0)},
         [("lam", "lam", {"out": 45, "in": 135}), ("lam", "out")])),
    "IH": (
        _IH_L,
        ({"lam": ("lam", 0, 0), "app": ("app", 2, 0)},
         {"body": (-0.5, _R3), "cont": (-0.5, -_R3), "var": (2.5, _R3), "arg": (2.5, -_R3)},
         [("body", "lam"), ("lam", "cont"), ("lam", "app"), ("app", "var"), ("arg", "app")])),
    "assoc": (
        _ASSOC_L,
        # the inner application takes arg1 as its function
        ({"app": ("app", 0, 0), "app2": ("app", 0.5, -_R3)},
         {"fn": (0, 1), "arg2": (0, -1.732), "arg1": (1, -1.732), "cont": (-1, -1.732)},
         [("fn", "app"), ("app", "cont"), ("app2", "app"), ("arg1", "app2"),
          ("arg2", "app2")])),
    "HI": (
        ({"app": ("app", 0, 0), "lam": ("lam", 2, 0)},
         {"body": (-0.5, _R3), "cont": (-0.5, -_R3), "var": (2.5, _R3), "arg": (2.5, -_R3)},
         [("body", "app"), ("app", "cont"), ("lam", "app"), ("var", "lam"), ("lam", "arg")]),
        ({"app": ("app", 0, 0), "lam": ("lam", 0, -2)},
         {"var": (_R3, 0.5), "body": (-_R3, 0.5), "cont": (-_R3, -2.5), "arg": (_R3, -2.5)},
         [("body", "app"), ("var", "app"), ("app", "lam"), ("lam", "cont"), ("lam", "arg")])),
    "chi": (
        _ASSOC_L,
        ({"app": ("app", 0, 0), "app2": ("app", -0.5, -_R3)},
         {"fn": (0, 1), "arg2": (0, -1.732), "cont": (-1, -1.732), "arg1": (1, -1.732)},
         [("fn", "app"), ("app", "app2"), ("app2", "cont"), ("arg2", "app", {"bend": -60}),
          ("arg1", "app2")])),
    "C": (
        _UNIT_L,
        ({"lx": ("lam", 0, -0.5), "ly": ("lam", -0.354, -0.354), "lz": ("lam", -0.354, 0.354),
          "argy": ("app", 0.354, 0.354), "argz": ("app", 0.354, -0.354)},
         {"out": (0, -1)},
         _circle(_C_PTS, ["argz", "argy", "lz", "ly", "lx"])
         + [("lx", "out"), ("ly", "argy"), ("lz", "argz")])),
    "gamma": (
        ({"app": ("app", 0, 1)}, {"cont": (0, 0), "fn": (-_R3, 1.5), "arg": (_R3, 1.5)},
         [("arg", "app"), ("fn", "app"), ("app", "cont")]),
        ({"app": ("app", 0, 1)}, {"cont": (0, 0), "fn": (-_R3, 1.5), "arg": (_R3, 1.5)},
         [("arg", "app", {"out": 180, "in": 130}), ("fn", "app", {"out": 0, "in": 50}),
          ("app", "cont")])),
}

KINDS = tuple(_PICTURES)
SYMMETRIC_KINDS = frozenset({"chi", "C", "gamma"})
BIDIRECTIONAL = frozenset({"init", "beta", "eta"})
UNIT_KINDS = frozenset({"init", "unit", "B", "C", "I"})
SUBDIVISION_KINDS = frozenset({"subdivide", "unsubdivide", "resubdivide", "lam_subdiv", "app_subdiv"})
CLOSED_FORM = frozenset({"beta"})


@dataclass(frozen=True)
class Move:
    kind: str
    direction: str = "ltr"

    def __post_init__(self):
        if self.kind not in _PICTURES:
            raise MoveError(f"unknown move {self.kind!r}")
        if self.direction not in ("ltr", "rtl"):
            raise MoveError(f"direction must be ltr or rtl, not {self.direction!r}")
        if self.direction == "rtl" and self.kind not in BIDIRECTIONAL:
            raise MoveError(f"move {self.kind} is one-directional")

    @property
    def symmetric_required(self) -> bool:
        return self.kind in SYMMETRIC_KINDS

    @property
    def is_imploid_move(self) -> bool:
        """Pullback is guaranteed: every left-to-right move, and init both ways."""
        return self.direction == "ltr" or self.kind == "init"

    def sides(self) -> tuple[Pattern, Pattern]:
        L, R = _compiled(self.kind)
        return (L, R) if self.direction == "ltr" else (R, L)

    def __str__(self) -> str:
        return f"{self.kind} {self.direction}"


_CACHE: dict = {}


def _compiled(kind: str) -> tuple[Pattern, Pattern]:
    if kind not in _CACHE:
        L, R = _PICTURES[kind]
        _CACHE[kind] = (_compile(*L), _compile(*R))
    return _CACHE[kind]


def catalogue(include_reverse: bool = False) -> list[Move]:
    """Every catalogued imploid move; reverse directions of beta/eta on request."""
    out = [Move(k) for k in KINDS] + [Move("init", "rtl")]
    if include_reverse:
        out += [Move("beta", "rtl"), Move("eta", "rtl")]
    return out


@dataclass(frozen=True)
class MoveApplication:
    move: Move
    site: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.move.kind} {self.move.direction} @ " + " ".join(map(str, self.site))


@dataclass
class MoveSequence:
    start: int
    steps: list[MoveApplication] = field(default_factory=list)
    unital: bool = True

    def kinds(self) -> list[str]:
        return [s.move.kind for s in self.steps]

    def uses_symmetric(self) -> bool:
        return any(s.move.symmetric_required for s in self.steps)


def format_sequence(seq: MoveSequence) -> str:
    lines = [f"start {'unital' if seq.unital else 'unitless'} {seq.start}"]
    lines += [str(s) for s in seq.steps]
    return "\n".join(lines) + "\n"


def parse_sequence(text: str) -> MoveSequence:
    seq = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        parts = line.split()
        if seq is None:
            if len(parts) != 3 or parts[0] != "start" or parts[1] not in ("unital", "unitless"):
                raise FormatError(f"line {no}: expected 'start unital|unitless N'")
            seq = MoveSequence(int(parts[2]), [], parts[1] == "unital")
            continue
        if len(parts) < 4 or parts[2] != "@":
            raise FormatError(f"line {no}: expected 'MOVE dir @ arcs...'")
        try:
            mv = Move(parts[0], parts[1])
            site = tuple(int(x) for x in parts[3:])
        except (MoveError, ValueError) as exc:
            raise FormatError(f"line {no}: {exc}") from None
        seq.steps.append(MoveApplication(mv, site))
    if seq is None:
        raise FormatError("empty sequence file")
    return seq


# -- work maps --------------------------------------------------------------

@dataclass
class WorkMap:
    """Mutable map with stable arc ids: pairing, rotation, positive arcs, root."""
    pair: dict
    v: dict
    positive: set
    root: int
    next_arc: int

    @classmethod
    def from_rooted(cls, M: RootedMap, O: Orientation) -> "WorkMap":
        n = M.n_arcs
        return cls({x: x ^ 1 for x in range(n)}, {x: M.v[x] for x in range(n)},
                   set(O.positive), M.root, n)

    def copy(self) -> "WorkMap":
        return WorkMap(dict(self.pair), dict(self.v), set(self.positive), self.root, self.next_arc)

    def cycle(self, x: int) -> tuple[int, ...]:
        out, y = [x], self.v[x]
        while y != x:
            out.append(y)
            y = self.v[y]
        return tuple(out)

    def external(self) -> frozenset:
        return frozenset(self.cycle(self.root))

    def key(self, x: int) -> int:
        return min(x, self.pair[x])

    def edge_keys(self) -> list[int]:
        return sorted({self.key(x) for x in self.pair})

    def vertices(self) -> list[tuple[int, ...]]:
        seen, out = set(), []
        for x in sorted(self.v):
            if x not in seen:
                c = self.cycle(x)
                seen.update(c)
                out.append(c)
        return out

    def to_rooted(self) -> tuple[RootedMap, Orientation, dict[int, int]]:
        """Compact relabelling; returns the map, orientation and arc map."""
        lab: dict[int, int] = {}
        for x in sorted(self.pair):
            if x not in lab:
                k = len(lab)
                lab[x], lab[self.pair[x]] = k, k + 1
        v = [0] * len(lab)
        for x, y in self.v.items():
            v[lab[x]] = lab[y]
        M0 = RootedMap(len(lab), tuple(v), lab[self.root])
        M = RootedMap(M0.n_arcs, M0.v, M0.root, M0.vertex_of[M0.root])
        return M, Orientation(frozenset(lab[x] for x in self.positive)), lab

    def fresh(self) -> int:
        self.next_arc += 1
        return self.next_arc - 1


def _vertex_kind(W: WorkMap, x: int) -> str:
    cyc = W.cycle(x)
    if x in W.external():
        return "external"
    n_out = sum(y in W.positive for y in cyc)
    if len(cyc) == 1:
        return "unit" if n_out else "counit"
    if len(cyc) == 2:
        return "glue"
    return "app" if n_out == 1 else "lam"


# -- matching and splicing --------------------------------------------------

@dataclass
class Step:
    """One applied move, with what the pullback needs."""
    application: MoveApplication
    before: WorkMap
    after: WorkMap
    lhs_internal: list[int]
    pre_stub_edges: dict[int, list[str]]
    chain_edge: dict[str, int]
    handles: dict[str, int]
    matched: dict[str, int]
    local: list | None = field(default=None, repr=False)


def _match(W: WorkMap, L: Pattern, anchors) -> tuple[dict, dict, dict, list]:
    if len(anchors) != len(L.components):
        raise MoveError(f"pattern needs {len(L.components)} anchor arc(s), got {len(anchors)}")
    ext = W.external()
    arc_of: dict[str, int] = {}
    used_vertices: set[int] = set()
    outside: dict[str, int] = {}
    direct_keys = []

    def place(node: str, half: str, x: int, anchor: int):
        rot = L.rot[node]
        i = rot.index(half)
        rot = rot[i:] + rot[:i]
        if x not in W.v:
            raise MoveError(f"anchor {anchor}: arc {x} does not exist")
        cyc = W.cycle(x)
        if x in ext:
            raise MoveError(f"anchor {anchor}: arc {x} lies on the external vertex")
        if len(cyc) != len(rot):
            raise MoveError(f"anchor {anchor}: vertex at arc {x} has degree {len(cyc)}, "
                            f"pattern node {node} needs {len(rot)}")
        if min(cyc) in used_vertices:
            raise MoveError(f"anchor {anchor}: vertex at arc {x} matched twice")
        for h, y in zip(rot, cyc):
            if (h in L.outs) != (y in W.positive):
                raise MoveError(f"anchor {anchor}: orientation of arc {y} does not fit node {node}")
        used_vertices.add(min(cyc))
        for h, y in zip(rot, cyc):
            arc_of[h] = y

    for comp, a in zip(L.components, anchors):
        if isinstance(comp, tuple):
            _, tail, head = comp
            if a not in W.pair:
                raise MoveError(f"anchor {a}: arc does not exist")
            if a not in W.positive:
                raise MoveError(f"anchor {a}: a bare edge is anchored by its positive arc")
            if W.key(a) in direct_keys:
                raise MoveError(f"anchor {a}: edge matched twice")
            direct_keys.append(W.key(a))
            outside[tail], outside[head] = a, W.pair[a]
            continue
        place(comp, L.rot[comp][0], a, a)
        todo = [comp]
        while todo:
            node = todo.pop()
            for h in L.rot[node]:
                if h not in L.pairs:
                    continue
                h2 = L.pairs[h]
                y = W.pair[arc_of[h]]
                if h2 in arc_of:
                    if arc_of[h2] != y:
                        raise MoveError(f"anchor {a}: edge at arc {arc_of[h]} does not reach "
                                        f"pattern node {L.node_of(h2)}")
                    continue
                place(L.node_of(h2), h2, y, a)
                todo.append(L.node_of(h2))
    back = {x: h for h, x in arc_of.items()}
    loops: dict[str, str] = {}
    stub_of_half = {h: s for s, h in L.stub_half.items()}
    for s, h in L.stub_half.items():
        y = W.pair[arc_of[h]]
        if y in back:
            h2 = back[y]
            if h2 not in stub_of_half:
                raise MoveError(f"stub {s} closes onto an internal half-edge")
            loops[s] = stub_of_half[h2]
        else:
            outside[s] = y
    if len(set(outside.values())) != len(outside):
        raise MoveError("pattern stubs share an outside arc")
    if any(k in {W.key(x) for x in arc_of.values()} for k in direct_keys):
        raise MoveError("bare edge overlaps the pattern")
    return arc_of, outside, loops, direct_keys


def _splice(W: WorkMap, L: Pattern, R: Pattern, anchors) -> tuple[WorkMap, dict]:
    arc_of, outside, loops, direct_keys = _match(W, L, anchors)
    W = W.copy()
    pre_stub: dict[int, list[str]] = {}
    lhs_internal = []
    for h, x in arc_of.items():
        if h in L.pairs:
            if x < W.pair[x]:
                lhs_internal.append(x)
        else:
            pre_stub.setdefault(W.key(x), [])
    for s, h in L.stub_half.items():
        pre_stub[W.key(arc_of[h])].append(s)
    for comp in L.components:
        if isinstance(comp, tuple):
            _, tail, head = comp
            pre_stub[W.key(outside[tail])] = [tail, head]
    for k in direct_keys:
        a, b = k, W.pair[k]
        del W.pair[a], W.pair[b]
    matched = set(arc_of.values())
    for x in matched:
        del W.v[x]
        y = W.pair.pop(x, None)
        if y is not None and y not in matched:
            del W.pair[y]
        W.positive.discard(x)
    new: dict[str, int] = {}
    for node, rot in R.rot.items():
        for h in rot:
            new[h] = W.fresh()
            if h in R.outs:
                W.positive.add(new[h])
        for i, h in enumerate(rot):
            W.v[new[h]] = new[rot[(i + 1) % len(rot)]]
    for h, h2 in R.pairs.items():
        W.pair[new[h]] = new[h2]
    # junctions: follow stub chains through left loops and right bare edges
    lhs_side = {s: ("arc", outside[s]) if s in outside else ("stub", loops[s]) for s in L.stubs}
    rhs_side = {s: ("arc", new[R.stub_half[s]]) if s in R.stub_half else ("stub", R.direct[s])
                for s in R.stubs}
    chain_edge: dict[str, int] = {}
    visited: set[str] = set()

    def walk(s: str, side: str):
        path = []
        while True:
            path.append(s)
            kind, val = (rhs_side if side == "R" else lhs_side)[s]
            if kind == "arc":
                return val, path
            s, side = val, ("L" if side == "R" else "R")

    ends = [(s, "L") for s in L.stubs if lhs_side[s][0] == "arc"]
    ends += [(s, "R") for s in R.stubs if rhs_side[s][0] == "arc"]
    for s, side in ends:
        start = (lhs_side if side == "L" else rhs_side)[s][1]
        if start in W.pair:
            continue
        far, path = walk(s, "R" if side == "L" else "L")
        if (start in W.positive) == (far in W.positive):
            raise MoveError(f"orientation clash joining arcs {start} and {far}")
        W.pair[start], W.pair[far] = far, start
        for t in path:
            chain_edge[t] = min(start, far)
            visited.add(t)
    missing = [s for s in L.stubs if s not in chain_edge]
    if missing:
        raise MoveError(f"stubs {missing} would form an edge with no vertices")
    info = {"lhs_internal": sorted(lhs_internal), "pre_stub_edges": pre_stub,
            "chain_edge": chain_edge, "handles": new, "matched": arc_of}
    return W, info


def apply_on_workmap(W: WorkMap, app: MoveApplication, check: bool = True) -> Step:
    L, R = app.move.sides()
    after, info = _splice(W, L, R, app.site)
    if check:
        M, O, _ = after.to_rooted()
        if not is_well_oriented(M, O):
            raise MoveError(f"{app}: result is not well-oriented")
    return Step(app, W, after, **info)


def apply_move(M: RootedMap, O: Orientation, app: MoveApplication) -> tuple[RootedMap, Orientation]:
    """Apply at arcs of M; the result is relabelled compactly."""
    step = apply_on_workmap(WorkMap.from_rooted(M, O), app)
    M2, O2, _ = step.after.to_rooted()
    return M2, O2


def find_sites(W: WorkMap, move: Move) -> list[tuple[int, ...]]:
    """Every anchor tuple at which the move's left side matches."""
    L, _ = move.sides()
    per = []
    for comp in L.components:
        if isinstance(comp, tuple):
            per.append(sorted(x for x in W.pair if x in W.positive))
        else:
            kind = L.kinds[comp]
            per.append(sorted(x for x in W.v if _anchor_ok(W, x, kind)))
    out, seen = [], set()
    for site in itertools.product(*per):
        try:
            arc_of, outside, _, direct = _match(W, L, site)
        except MoveError:
            continue
        sig = (frozenset(arc_of.items()), frozenset(outside.items()), tuple(direct))
        if sig not in seen:
            seen.add(sig)
            out.append(site)
    return out


def _anchor_ok(W: WorkMap, x: int, kind: str) -> bool:
    if x in W.external():
        return False
    k = _vertex_kind(W, x)
    if k != kind:
        return False
    if kind in ("app", "unit"):
        return x in W.positive
    return x not in W.positive


# -- pullback ---------------------------------------------------------------

def _flow_on_rooted(W: WorkMap, values: dict[int, str]):
    M, O, lab = W.to_rooted()
    return M, O, {lab[k] & ~1: val for k, val in values.items()}, lab


def workmap_flow_valid(W: WorkMap, P: ImploidTable, values: dict[int, str]) -> bool:
    M, O, vals, _ = _flow_on_rooted(W, values)
    return check_flow(M, O, P, vals).valid


def _local_problem(step: Step):
    """Relations that can change: at the left-side vertices and at the outer
    ends of its stub edges. Everything else is copied from the right side."""
    if step.local is None:
        from .flows import vertex_roles
        W = step.before
        M, O, lab = W.to_rooted()
        inv = {b: a for a, b in lab.items()}
        arcs = set(step.matched.values())
        for k in step.pre_stub_edges:
            arcs |= {k, W.pair[k]}
        verts = sorted({M.vertex_of[lab[x]] for x in arcs} - {M.external})
        cons = []
        for w in verts:
            kind, ends = vertex_roles(M, O, w)
            cons.append((kind, tuple(W.key(inv[a]) for a in ends)))
        step.local = cons
    return step.local


def _holds(P: ImploidTable, kind: str, ks, val) -> bool:
    if kind == "pos":
        return P.order.leq[P.imp[val[ks[0]]][val[ks[1]]]][val[ks[2]]]
    if kind == "neg":
        return P.order.leq[val[ks[2]]][P.imp[val[ks[0]]][val[ks[1]]]]
    if kind == "glue":
        return P.order.leq[val[ks[0]]][val[ks[1]]]
    if kind == "unit":
        return P.order.leq[P.unit][val[ks[0]]]
    return P.order.leq[val[ks[0]]][P.unit]


def _pullback_values(step: Step, post: dict[int, int], P: ImploidTable) -> dict[int, int] | None:
    cons = _local_problem(step)
    internal = step.lhs_internal
    special = set(internal) | set(step.pre_stub_edges)
    val0 = {k: post[k] for _, ks in cons for k in ks if k not in special}
    options = []
    for k, stubs in step.pre_stub_edges.items():
        options.append((k, list(dict.fromkeys(post[step.chain_edge[s]] for s in stubs))))
    closed = step.application.move.kind in CLOSED_FORM
    for combo in itertools.product(*[vals for _, vals in options]):
        val = dict(val0)
        val.update({k: x for (k, _), x in zip(options, combo)})
        if closed:
            trial = dict(val)
            for _ in internal:
                for kind, ks in cons:
                    if kind in ("pos", "neg"):
                        z = ks[2]
                        if z in internal and z not in trial and ks[0] in trial and ks[1] in trial:
                            trial[z] = P.imp[trial[ks[0]]][trial[ks[1]]]
            if all(k in trial for k in internal) and all(_holds(P, *c, trial) for c in cons):
                return trial
        for guess in itertools.product(range(P.size), repeat=len(internal)):
            val.update(zip(internal, guess))
            if all(_holds(P, kind, ks, val) for kind, ks in cons):
                return val
    return None


def pullback_flow(step: Step, post: dict[int, str], P: ImploidTable) -> dict[int, str]:
    """Flow on the map before the move, agreeing with ``post`` off the pattern.

    Edges are keyed by their smaller work-map arc. A stub edge takes the value
    of the right-side edge it continues into (trying each candidate when a
    bare edge splits). Beta fills its internal edges in closed form, x -o y on
    the lambda and application edges; other moves search the internal edges.
    """
    found = _pullback_values(step, {k: P.index(x) for k, x in post.items()}, P)
    if found is None:
        raise PullbackError(f"no pullback along {step.application}")
    special = set(step.lhs_internal) | set(step.pre_stub_edges)
    out = {k: post[k] for k in step.before.edge_keys() if k not in special}
    out.update({k: P.elements[found[k]] for k in special})
    return out


# -- spines and encoding ----------------------------------------------------

def spine(n: int) -> tuple[tuple[RootedMap, Orientation], tuple[RootedMap, Orientation]]:
    """(V_n, V'_n): a unit applied to n boundary inputs; V'_n adds a 2-valent
    vertex on the root edge."""
    if n < 0:
        raise PreconditionError("n must be non-negative")
    return _spine(n, False), _spine(n, True)


def _spine(n: int, glued: bool, unital: bool = True) -> tuple[RootedMap, Orientation]:
    ext = [("x", i) for i in range(n + 1)]
    vertices, edges, positive = [ext], [], [("x", i) for i in range(1, n + 1)]
    first = 1
    if unital:
        vertices.append([("u",)])
        positive.append(("u",))
        prev = ("u",)
    else:
        prev = ("x", 1)
        first = 2
    for i in range(first, n + 1):
        o, a, f = ("o", i), ("a", i), ("f", i)
        vertices.append([o, a, f])
        edges += [(prev, f), (("x", i), a)]
        positive.append(o)
        prev = o
    if glued:
        vertices.append([("gi",), ("go",)])
        edges += [(prev, ("gi",)), (("go",), ("x", 0))]
        positive.append(("go",))
    else:
        edges.append((prev, ("x", 0)))
    M, lab = build_map(vertices, edges, ("x", 0), external=0)
    return M, Orientation(frozenset(lab[p] for p in positive))


def unitless_base(n: int) -> tuple[RootedMap, Orientation]:
    """Start map for unit-free encodings: x1 x2 ... xn with a 2-valent vertex on
    the root edge, or the identity map when n = 0."""
    if n == 0:
        from .lambda_terms import parse
        return term_to_map(parse(r"\x.x"))
    return _spine(n, True, unital=False)


def base_map(n: int, unital: bool) -> tuple[RootedMap, Orientation]:
    return spine(n)[1] if unital else unitless_base(n)


class _Encoder:
    def __init__(self, n: int, unital: bool, allow_gamma: bool):
        self.W = WorkMap.from_rooted(*base_map(n, unital))
        self.unital = unital
        self.allow_gamma = allow_gamma
        self.seq = MoveSequence(n, [], unital)

    def do(self, kind: str, *site: int, direction: str = "ltr") -> Step:
        app = MoveApplication(Move(kind, direction), tuple(site))
        step = apply_on_workmap(self.W, app, check=False)
        self.W = step.after
        self.seq.steps.append(app)
        return step

    # spine navigation: apps are @ output arcs listed from the consumer upwards
    def chain(self, c: int) -> tuple[list[int], tuple[str, int]]:
        W, apps = self.W, []
        x = W.pair[c]
        while True:
            k = _vertex_kind(W, x)
            if k == "app":
                apps.append(x)
                x = W.pair[W.v[W.v[x]]]
            elif k == "glue":
                x = W.pair[W.v[x]]
            elif k == "unit":
                return apps, ("unit", x)
            else:
                return apps, ("var", x)

    def source(self, x: int) -> int:
        """Follow an input arc upstream through 2-valent vertices."""
        W = self.W
        y = W.pair[x]
        while _vertex_kind(W, y) == "glue":
            y = W.pair[W.v[y]]
        return y

    def order(self, c: int) -> list[int]:
        apps, head = self.chain(c)
        args = [self.source(self.W.v[o]) for o in reversed(apps)]
        return ([head[1]] if head[0] == "var" else []) + args

    def sort(self, c: int, target: list[int]):
        """Bubble the spine arguments into ``target`` order by adjacent swaps."""
        while True:
            cur = self.order(c)
            if cur == target:
                return
            offset = 0 if self.unital else 1
            for i in range(len(cur) - 1):
                if target.index(cur[i]) > target.index(cur[i + 1]):
                    apps, _ = self.chain(c)
                    m = len(apps)
                    p = i + 1 - offset
                    if p == 0:
                        if not self.allow_gamma:
                            raise MoveError("reordering the head needs the gamma move")
                        self.do("gamma", apps[m - 1])
                    else:
                        self.do("chi", apps[m - p])
                    break

    def subdivide_above(self, c: int) -> int:
        """Put a 2-valent vertex on the edge into c; returns its input arc."""
        p = self.W.pair[c]
        self.do("subdivide", p)
        return self.W.pair[p]

    def build(self, u, c: int, arcs: dict):
        kind = u[0]
        if kind == "var":
            apps, head = self.chain(c)
            if self.unital:
                if len(apps) != 1 or head[0] != "unit":
                    raise AssertionError("variable case expects a one-argument spine")
                self.do("init", apps[0])
            return
        if kind == "lam":
            g = self.subdivide_above(c)
            self.do("eta", g)
            r = self.W.pair[c]
            self.do("unsubdivide", self.W.v[self.W.pair[self.W.v[self.W.v[r]]]])
            arcs[u[1]] = self.W.v[r]
            body = self.W.v[self.W.v[r]]
            self.sort(body, [arcs[x] for x in free_vars_named(u[2])])
            self.build(u[2], body, arcs)
            return
        f2 = free_vars_named(u[2])
        apps, _ = self.chain(c)
        l = len(f2)
        if self.unital:
            if l:
                o = apps[l - 1]
                g = self.subdivide_above(self.W.v[self.W.v[o]])
            else:
                g = self.subdivide_above(c)
            self.do("unit", g)
            for j in range(l):
                apps, _ = self.chain(c)
                self.do("assoc", apps[l - j])
        else:
            for j in range(l - 1):
                apps, _ = self.chain(c)
                self.do("assoc", apps[l - 1 - j])
        apps, _ = self.chain(c)
        top = apps[0]
        fn, arg = self.W.v[self.W.v[top]], self.W.v[top]
        self.build(u[1], fn, arcs)
        self.build(u[2], arg, arcs)

    def cleanup(self):
        while True:
            glue = next((x for x in sorted(self.W.v) if _vertex_kind(self.W, x) == "glue"
                         and x not in self.W.positive), None)
            if glue is None:
                return
            self.do("unsubdivide", glue)


def encode(t: LinearTerm | tuple, unital: bool | None = None, symmetric: str = "chi") -> MoveSequence:
    """Moves from the start map to the map of ``t`` with its topological orientation.

    Unit-free terms start from ``unitless_base`` and use no move touching a
    1-valent vertex; other terms start from V'_n. A (map, orientation) pair is
    read back as a term first.
    """
    if isinstance(t, tuple):
        t = map_to_term(t[0])
    from .lambda_terms import is_unitless
    if unital is None:
        unital = not is_unitless(t)
    elif not unital and not is_unitless(t):
        raise PreconditionError("term has a closed proper subterm; it needs the unital encoding")
    tree, ctx = to_named(t)
    n = len(ctx)
    if not unital and n == 0 and tree[0] != "lam":
        raise PreconditionError("a closed unit-free term must be an abstraction")
    enc = _Encoder(n, unital, allow_gamma=not unital)
    W = enc.W
    if not unital and n == 0:
        r = W.pair[W.root]
        arcs = {tree[1]: W.v[r]}
        body = W.v[W.v[r]]
        enc.build(tree[2], body, arcs)
    else:
        bnd = [W.root]
        x = W.v[W.root]
        while x != W.root:
            bnd.append(x)
            x = W.v[x]
        arcs = {c: bnd[i + 1] for i, c in enumerate(ctx)}
        c0 = W.v[W.pair[W.root]]
        enc.sort(c0, [arcs[x] for x in free_vars_named(tree)])
        enc.build(tree, c0, arcs)
    enc.cleanup()
    return enc.seq


def replay_trace(seq: MoveSequence, check: bool = True) -> list[Step]:
    W = WorkMap.from_rooted(*base_map(seq.start, seq.unital))
    steps = []
    for i, app in enumerate(seq.steps):
        try:
            step = apply_on_workmap(W, app, check=check)
        except MoveError as exc:
            raise MoveError(f"step {i}: {exc}") from None
        steps.append(step)
        W = step.after
    return steps


def replay(seq: MoveSequence) -> tuple[RootedMap, Orientation]:
    steps = replay_trace(seq)
    W = steps[-1].after if steps else WorkMap.from_rooted(*base_map(seq.start, seq.unital))
    M, O, _ = W.to_rooted()
    return canonical_with_orientation(M, O)


def verify_encoding(t: LinearTerm, unital: bool | None = None) -> bool:
    M, O = replay(encode(t, unital))
    return (M, O) == term_to_map(t)


# -- soundness --------------------------------------------------------------

def pattern_map(P: Pattern, joins=()) -> WorkMap:
    """A pattern on its own, stubs joined to one external vertex.

    ``joins`` lists (out_stub, in_stub) pairs to be glued into internal edges,
    which models embeddings where the pattern's boundary closes on itself.
    """
    joined = {s for pr in joins for s in pr}
    vertices, edges, positive = [], [], []
    for node, rot in P.rot.items():
        vertices.append(list(rot))
        positive += [h for h in rot if h in P.outs]
    ext = [("stub", s) for s in P.stubs if s not in joined]
    vertices.insert(0, ext)
    done = set()
    for h, h2 in P.pairs.items():
        if (h2, h) not in done:
            done.add((h, h2))
            edges.append((h, h2))
    for a, b in joins:
        edges.append((P.stub_half[a], P.stub_half[b]))
    for s, h in P.stub_half.items():
        if s not in joined:
            edges.append((("stub", s), h))
            if s in P.stub_in:
                positive.append(("stub", s))
    seen = set()
    for s, t in P.direct.items():
        if s not in seen:
            seen |= {s, t}
            edges.append((("stub", s), ("stub", t)))
            positive.append(("stub", s) if s in P.stub_in else ("stub", t))
    M, lab = build_map(vertices, edges, ext[0], external=0)
    return WorkMap.from_rooted(M, Orientation(frozenset(lab[p] for p in positive)))


def pattern_worlds(P: Pattern) -> list[WorkMap]:
    """The pattern alone and with every partial matching of out-stubs to in-stubs
    glued, keeping at least one stub on the boundary."""
    outs = [s for s in P.stubs if s not in P.stub_in and s in P.stub_half]
    ins = [s for s in P.stubs if s in P.stub_in and s in P.stub_half]
    worlds = []
    for k in range(min(len(outs), len(ins)) + 1):
        for chosen in itertools.combinations(outs, k):
            for targets in itertools.permutations(ins, k):
                joins = list(zip(chosen, targets))
                if 2 * k == len(P.stubs):
                    continue
                worlds.append(pattern_map(P, joins))
    return worlds


@dataclass
class SoundnessReport:
    move: Move
    imploid: str
    sites: int = 0
    flows: int = 0
    n_failures: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.n_failures == 0


def _all_flows(W: WorkMap, P: ImploidTable, node_cap: int):
    """Every flow on W as element indices keyed by work-map edge."""
    M, O, lab = W.to_rooted()
    inv = {b: a for a, b in lab.items()}
    edges = list(M.edges())
    keys = [W.key(inv[a]) for a in edges]
    sols, _ = search_assignments(P, len(edges), _constraints(M, O),
                                 [list(range(P.size))] * len(edges), 0, node_cap)
    for sol in sols:
        yield dict(zip(keys, sol))


def soundness_corpus(bound: int) -> list[WorkMap]:
    """Maps to scan at a size bound: closed term maps with at most ``bound``
    lambdas and every intermediate map of their encodings."""
    out, seen = [], set()

    def add(W: WorkMap):
        M, O, _ = W.to_rooted()
        key = canonical_with_orientation(M, O)
        if key not in seen:
            seen.add(key)
            out.append(W)

    for lams in range(1, bound + 1):
        for t in all_terms(lams, 0):
            add(WorkMap.from_rooted(*term_to_map(t)))
            for unital in {True, not _unitless(t)}:
                steps = replay_trace(encode(t, unital), check=False)
                for st in steps:
                    add(st.before)
    return out


def _unitless(t: LinearTerm) -> bool:
    from .lambda_terms import is_unitless
    return is_unitless(t)


def check_move_soundness(move: Move, P: ImploidTable, bound: int = 2,
                         node_cap: int = 2_000_000, corpus: list | None = None) -> SoundnessReport:
    """Pull back every flow after every application site, exhaustively.

    Sites come from the left pattern alone (also with its boundary partly
    closed up) and from ``soundness_corpus(bound)``.
    """
    rep = SoundnessReport(move, P.name or "P")
    L, _ = move.sides()
    worlds = pattern_worlds(L) + (corpus if corpus is not None else soundness_corpus(bound))
    for W in worlds:
        for site in find_sites(W, move):
            try:
                step = apply_on_workmap(W, MoveApplication(move, site), check=False)
            except MoveError:
                continue
            rep.sites += 1
            for post in _all_flows(step.after, P, node_cap):
                rep.flows += 1
                if _pullback_values(step, post, P) is None:
                    if len(rep.failures) < 20:
                        rep.failures.append((site, {k: P.elements[x] for k, x in post.items()}))
                    rep.n_failures += 1
    return rep
