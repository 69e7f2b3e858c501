"""Finite imploids and skew monoids as lookup tables.

Elements are strings; internally every table is indexed by element position,
so all the algebraic predicates below reduce to plain table scans.
"""
from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from functools import cached_property


class FormatError(ValueError):
    """Malformed table or text input."""


class PreconditionError(ValueError):
    """An operation was called on an argument outside its domain."""


@dataclass(frozen=True)
class PreorderTable:
    elements: tuple[str, ...]
    leq: tuple[tuple[bool, ...], ...]

    def __post_init__(self):
        n = len(self.elements)
        if len(set(self.elements)) != n:
            raise FormatError("duplicate element names")
        if len(self.leq) != n or any(len(row) != n for row in self.leq):
            raise FormatError("leq table is not square over the elements")

    @property
    def size(self) -> int:
        return len(self.elements)

    def index(self, name: str) -> int:
        try:
            return self.elements.index(name)
        except ValueError:
            raise FormatError(f"unknown element {name!r}") from None

    def is_preorder(self) -> bool:
        r = range(self.size)
        if not all(self.leq[a][a] for a in r):
            return False
        return all(not (self.leq[a][b] and self.leq[b][c]) or self.leq[a][c]
                   for a in r for b in r for c in r)

    def equiv(self, a: int, b: int) -> bool:
        return self.leq[a][b] and self.leq[b][a]

    def up(self, subset) -> frozenset:
        return frozenset(b for b in range(self.size) if any(self.leq[a][b] for a in subset))

    def down(self, subset) -> frozenset:
        return frozenset(b for b in range(self.size) if any(self.leq[b][a] for a in subset))

    def is_upset(self, subset) -> bool:
        return self.up(subset) == frozenset(subset)

    def is_downset(self, subset) -> bool:
        return self.down(subset) == frozenset(subset)


@dataclass(frozen=True)
class ImploidTable:
    """A finite imploid: preorder, implication table (indices) and unit."""

    order: PreorderTable
    imp: tuple[tuple[int, ...], ...]
    unit: int
    unital: bool = True
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = self.order.size
        if len(self.imp) != n or any(len(row) != n for row in self.imp):
            raise FormatError("imp table is not square over the elements")
        if any(not 0 <= x < n for row in self.imp for x in row):
            raise FormatError("imp table mentions an unknown element")
        if not 0 <= self.unit < n:
            raise FormatError("unit is not an element")

    @property
    def elements(self) -> tuple[str, ...]:
        return self.order.elements

    @property
    def size(self) -> int:
        return self.order.size

    def index(self, name: str) -> int:
        return self.order.index(name)

    def le(self, a: int, b: int) -> bool:
        return self.order.leq[a][b]

    def implies(self, a: int, b: int) -> int:
        return self.imp[a][b]

    def mimp(self, values, last: int) -> int:
        """Right-associated implication values[0] -o (values[1] -o ... last)."""
        out = last
        for x in reversed(list(values)):
            out = self.imp[x][out]
        return out

    def dominates_unit(self, a: int) -> bool:
        return self.order.leq[self.unit][a]

    @cached_property
    def axioms(self) -> "AxiomReport":
        return check_axioms(self)

    @property
    def left_normal(self) -> bool:
        return self.axioms.left_normal

    @property
    def symmetric(self) -> bool:
        return self.axioms.symmetric


@dataclass(frozen=True)
class SkewMonoidTable:
    order: PreorderTable
    mul: tuple[tuple[int, ...], ...]
    unit: int
    unital: bool = True
    name: str = field(default="", compare=False)

    @property
    def elements(self) -> tuple[str, ...]:
        return self.order.elements

    @property
    def size(self) -> int:
        return self.order.size

    def index(self, name: str) -> int:
        return self.order.index(name)


@dataclass
class AxiomReport:
    valid: bool
    left_normal: bool
    symmetric: bool
    dni: bool
    violations: list[tuple[str, tuple[str, ...]]]


def _preorder_violations(order: PreorderTable) -> list:
    out = []
    r = range(order.size)
    names = order.elements
    for a in r:
        if not order.leq[a][a]:
            out.append(("reflexive", (names[a],)))
    for a, b, c in itertools.product(r, r, r):
        if order.leq[a][b] and order.leq[b][c] and not order.leq[a][c]:
            out.append(("transitive", (names[a], names[b], names[c])))
    return out


def check_axioms(P: ImploidTable) -> AxiomReport:
    """Scan every instance of the imploid laws and the three optional flags."""
    leq, imp, u = P.order.leq, P.imp, P.unit
    names = P.elements
    r = range(P.size)
    viol = _preorder_violations(P.order)
    for a1, a2, b1, b2 in itertools.product(r, r, r, r):
        if leq[a2][a1] and leq[b1][b2] and not leq[imp[a1][b1]][imp[a2][b2]]:
            viol.append(("imp", (names[a1], names[a2], names[b1], names[b2])))
    for a, b, c in itertools.product(r, r, r):
        if not leq[imp[b][c]][imp[imp[a][b]][imp[a][c]]]:
            viol.append(("comp", (names[a], names[b], names[c])))
    if P.unital:
        for a in r:
            if not leq[u][imp[a][a]]:
                viol.append(("id", (names[a],)))
            if not leq[imp[u][a]][a]:
                viol.append(("unit", (names[a],)))
    left_normal = all(not leq[u][imp[a][b]] or leq[a][b] for a in r for b in r)
    symmetric = all(leq[imp[a][imp[b][c]]][imp[b][imp[a][c]]]
                    for a in r for b in r for c in r)
    dni = all(leq[a][imp[imp[a][b]][b]] for a in r for b in r)
    viol.sort()
    return AxiomReport(not viol, left_normal, symmetric, dni, viol)


def check_skew_axioms(M: SkewMonoidTable) -> list[tuple[str, tuple[str, ...]]]:
    leq, mul, u = M.order.leq, M.mul, M.unit
    names = M.elements
    r = range(M.size)
    viol = _preorder_violations(M.order)
    for a1, a2, b1, b2 in itertools.product(r, r, r, r):
        if leq[a1][a2] and leq[b1][b2] and not leq[mul[a1][b1]][mul[a2][b2]]:
            viol.append(("mul", (names[a1], names[a2], names[b1], names[b2])))
    for a, b, c in itertools.product(r, r, r):
        if not leq[mul[mul[a][b]][c]][mul[a][mul[b][c]]]:
            viol.append(("assocr", (names[a], names[b], names[c])))
    if M.unital:
        for a in r:
            if not leq[mul[u][a]][a]:
                viol.append(("lunit", (names[a],)))
            if not leq[a][mul[a][u]]:
                viol.append(("runit", (names[a],)))
    viol.sort()
    return viol


# -- construction helpers ---------------------------------------------------

def make_preorder(elements, leq_pairs=None, leq_fn=None) -> PreorderTable:
    elements = tuple(elements)
    n = len(elements)
    if leq_fn is not None:
        rows = tuple(tuple(bool(leq_fn(elements[a], elements[b])) for b in range(n)) for a in range(n))
    else:
        s = set(leq_pairs or ())
        rows = tuple(tuple(a == b or (elements[a], elements[b]) in s for b in range(n)) for a in range(n))
    return PreorderTable(elements, rows)


def make_imploid(elements, leq_fn, imp_fn, unit, unital=True, name="") -> ImploidTable:
    order = make_preorder(elements, leq_fn=leq_fn)
    idx = {x: i for i, x in enumerate(order.elements)}
    imp = tuple(tuple(idx[imp_fn(a, b)] for b in order.elements) for a in order.elements)
    return ImploidTable(order, imp, idx[unit], unital, name)


@dataclass(frozen=True)
class Group:
    elements: tuple[str, ...]
    mul: tuple[tuple[int, ...], ...]
    unit: int

    def inverse(self, a: int) -> int:
        for b in range(len(self.elements)):
            if self.mul[a][b] == self.unit:
                return b
        raise PreconditionError("element has no inverse")

    def is_group(self) -> bool:
        n = len(self.elements)
        r = range(n)
        if any(self.mul[self.unit][a] != a or self.mul[a][self.unit] != a for a in r):
            return False
        if any(self.mul[self.mul[a][b]][c] != self.mul[a][self.mul[b][c]]
               for a in r for b in r for c in r):
            return False
        return all(any(self.mul[a][b] == self.unit for b in r) for a in r)

    def is_abelian(self) -> bool:
        r = range(len(self.elements))
        return all(self.mul[a][b] == self.mul[b][a] for a in r for b in r)


def cyclic_group(n: int) -> Group:
    els = tuple(str(i) for i in range(n))
    return Group(els, tuple(tuple((a + b) % n for b in range(n)) for a in range(n)), 0)


def klein_group() -> Group:
    els = ("00", "01", "10", "11")
    return Group(els, tuple(tuple(a ^ b for b in range(4)) for a in range(4)), 0)


def _cycle_name(p: tuple[int, ...]) -> str:
    seen, parts = set(), []
    for i in range(len(p)):
        if i in seen or p[i] == i:
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(str(j + 1))
            j = p[j]
        parts.append("(" + "".join(cyc) + ")")
    return "".join(parts) or "()"


def symmetric_group(k: int) -> Group:
    """S_k on {1..k}; (p*q)(x) = p(q(x)); elements named in cycle notation."""
    perms = sorted(itertools.permutations(range(k)))
    idx = {p: i for i, p in enumerate(perms)}
    mul = tuple(tuple(idx[tuple(p[q[x]] for x in range(k))] for q in perms) for p in perms)
    return Group(tuple(_cycle_name(p) for p in perms), mul, idx[tuple(range(k))])


def group_imploid(G: Group, side: str = "right") -> ImploidTable:
    """Discrete imploid of a group: right division b.a^-1 or left division a^-1.b."""
    if not G.is_group():
        raise PreconditionError("table is not a group")
    n = len(G.elements)
    if side == "right":
        imp = tuple(tuple(G.mul[b][G.inverse(a)] for b in range(n)) for a in range(n))
    elif side == "left":
        imp = tuple(tuple(G.mul[G.inverse(a)][b] for b in range(n)) for a in range(n))
    else:
        raise PreconditionError("side must be 'left' or 'right'")
    order = PreorderTable(G.elements, tuple(tuple(a == b for b in range(n)) for a in range(n)))
    return ImploidTable(order, imp, G.unit)


def _hat2() -> ImploidTable:
    rows = {"0": "222", "1": "012", "2": "002"}
    return make_imploid("012", lambda a, b: a <= b, lambda a, b: rows[a]["012".index(b)], "1", name="hat2")


def _chain_heyting(n: int) -> ImploidTable:
    els = [str(i) for i in range(n)]
    top = els[-1]
    return make_imploid(els, lambda a, b: int(a) <= int(b),
                        lambda a, b: top if int(a) <= int(b) else b, top, name=f"chain_heyting({n})")


def builtin(name: str):
    """Return a named table: klein_four, hat2, skew2, one, z(n), chain_heyting(n)."""
    name = name.strip()
    if name == "klein_four":
        P = group_imploid(klein_group())
        return ImploidTable(P.order, P.imp, P.unit, True, "klein_four")
    if name == "hat2":
        return _hat2()
    if name == "one":
        return make_imploid(["I"], lambda a, b: True, lambda a, b: "I", "I", name="one")
    if name == "skew2":
        order = make_preorder(["1", "2"], leq_fn=lambda a, b: a <= b)
        return SkewMonoidTable(order, ((0, 1), (1, 1)), 0, True, "skew2")
    m = re.fullmatch(r"(z|chain_heyting)\((\d+)\)", name)
    if m:
        n = int(m.group(2))
        if n < 1:
            raise PreconditionError("size must be positive")
        if m.group(1) == "z":
            P = group_imploid(cyclic_group(n))
            return ImploidTable(P.order, P.imp, P.unit, True, name)
        return _chain_heyting(n)
    raise PreconditionError(f"unknown builtin {name!r}")


BUILTIN_IMPLOIDS = ("one", "hat2", "klein_four", "z(2)", "z(3)", "z(4)",
                    "chain_heyting(2)", "chain_heyting(3)")


# -- subsets ----------------------------------------------------------------

def _subsets(n: int):
    for mask in range(1 << n):
        yield frozenset(i for i in range(n) if mask >> i & 1)


def _canonical_sets(sets, n: int) -> list[frozenset]:
    return sorted(sets, key=lambda s: tuple(int(i in s) for i in range(n)))


def upsets(P) -> list[frozenset]:
    return _canonical_sets([s for s in _subsets(P.size) if P.order.is_upset(s)], P.size)


def downsets(M) -> list[frozenset]:
    return _canonical_sets([s for s in _subsets(M.size) if M.order.is_downset(s)], M.size)


def set_name(elements, s) -> str:
    return "{" + ",".join(elements[i] for i in sorted(s)) + "}"


def tensor(P: ImploidTable, R, S) -> frozenset:
    """R (x) S on upsets: p in R(x)S iff some q in S has (q -o p) in R."""
    return frozenset(p for p in range(P.size) if any(P.imp[q][p] in R for q in S))


def upsets_skew_monoid(P: ImploidTable) -> SkewMonoidTable:
    us = upsets(P)
    idx = {s: i for i, s in enumerate(us)}
    order = PreorderTable(tuple(set_name(P.elements, s) for s in us),
                          tuple(tuple(a >= b for b in us) for a in us))
    mul = tuple(tuple(idx[tensor(P, R, S)] for S in us) for R in us)
    unit = idx[P.order.up({P.unit})]
    return SkewMonoidTable(order, mul, unit, P.unital, f"upsets({P.name})")


def downsets_imploid(M: SkewMonoidTable) -> ImploidTable:
    ds = downsets(M)
    idx = {s: i for i, s in enumerate(ds)}
    order = PreorderTable(tuple(set_name(M.elements, s) for s in ds),
                          tuple(tuple(a <= b for b in ds) for a in ds))

    def arrow(K, L):
        return frozenset(m for m in range(M.size) if all(M.mul[m][n] in L for n in K))

    imp = tuple(tuple(idx[arrow(K, L)] for L in ds) for K in ds)
    unit = idx[M.order.down({M.unit})]
    return ImploidTable(order, imp, unit, M.unital, f"downsets({M.name})")


@dataclass
class Homomorphism:
    source: ImploidTable
    target: ImploidTable
    map: dict[str, str]
    kind: str
    faithful: bool
    kernel: frozenset[str]

    def __call__(self, x: str) -> str:
        return self.map[x]


def check_homomorphism(f: dict, P: ImploidTable, Q: ImploidTable) -> Homomorphism:
    """Classify f as not_hom, lax or strong and compute faithfulness and kernel."""
    missing = [a for a in P.elements if a not in f]
    if missing:
        raise PreconditionError(f"map undefined on {missing[0]!r}")
    try:
        g = [Q.index(f[a]) for a in P.elements]
    except FormatError as exc:
        raise PreconditionError(f"map leaves the target: {exc}") from None
    r = range(P.size)
    ql, pl = Q.order.leq, P.order.leq
    monotone = all(not pl[a][b] or ql[g[a]][g[b]] for a in r for b in r)
    lax_unit = ql[Q.unit][g[P.unit]]
    lax_imp = all(ql[g[P.imp[a][b]]][Q.imp[g[a]][g[b]]] for a in r for b in r)
    strong_unit = ql[g[P.unit]][Q.unit]
    strong_imp = all(ql[Q.imp[g[a]][g[b]]][g[P.imp[a][b]]] for a in r for b in r)
    if monotone and lax_unit and lax_imp:
        kind = "strong" if strong_unit and strong_imp else "lax"
    else:
        kind = "not_hom"
    faithful = all(not ql[g[a]][g[b]] or pl[a][b] for a in r for b in r)
    kernel = frozenset(P.elements[a] for a in r if ql[Q.unit][g[a]])
    return Homomorphism(P, Q, {P.elements[a]: Q.elements[g[a]] for a in r}, kind, faithful, kernel)


def double_embedding(P: ImploidTable) -> Homomorphism:
    """x |-> down(up(x)) into downsets of the upset skew monoid."""
    M = upsets_skew_monoid(P)
    Q = downsets_imploid(M)
    us = upsets(P)
    f = {}
    for x in range(P.size):
        ux = P.order.up({x})
        below = frozenset(i for i, R in enumerate(us) if R >= ux)
        f[P.elements[x]] = set_name(M.elements, below)
    return check_homomorphism(f, P, Q)


def _as_indices(P, R) -> frozenset:
    return frozenset(P.index(x) if isinstance(x, str) else x for x in R)


def _names(P, R) -> frozenset[str]:
    return frozenset(P.elements[i] for i in R)


def _require_upset(P, R):
    if not P.order.is_upset(R):
        raise PreconditionError("argument is not an upset")


def deductive_closure(P: ImploidTable, R) -> frozenset[str]:
    """Union of the left-associated powers R^0 = up(I), R^(n+1) = R^n (x) R."""
    R = _as_indices(P, R)
    _require_upset(P, R)
    power = P.order.up({P.unit})
    seen, acc = set(), set()
    while power not in seen:
        seen.add(power)
        acc |= power
        power = tensor(P, power, R)
    return _names(P, acc)


def dni_closure(P: ImploidTable, R) -> frozenset[str]:
    R = _as_indices(P, R)
    _require_upset(P, R)
    S = set(R)
    changed = True
    while changed:
        changed = False
        for a in list(S):
            for b in range(P.size):
                t = P.imp[P.imp[a][b]][b]
                for c in range(P.size):
                    if c not in S and P.order.leq[t][c]:
                        S.add(c)
                        changed = True
    return _names(P, S)


@dataclass
class SubsetFlags:
    subset: frozenset[str]
    upset: bool
    downset: bool
    subimploid: bool
    dedupset: bool
    dni_closed: bool


def _is_dedup(P, R) -> bool:
    if not P.order.is_upset(R) or P.unit not in R:
        return False
    return all(b in R for a in R for b in range(P.size) if P.imp[a][b] in R)


def _is_dni_closed(P, R) -> bool:
    if not P.order.is_upset(R):
        return False
    return all(P.imp[P.imp[a][b]][b] in R for a in R for b in range(P.size))


def classify_subset(P: ImploidTable, R) -> SubsetFlags:
    R = _as_indices(P, R)
    sub = P.unit in R and all(P.imp[a][b] in R for a in R for b in R)
    return SubsetFlags(_names(P, R), P.order.is_upset(R), P.order.is_downset(R), sub,
                       _is_dedup(P, R), _is_dni_closed(P, R))


def induced_preorder(P: ImploidTable, R) -> PreorderTable:
    R = _as_indices(P, R)
    if not _is_dedup(P, R):
        if not P.order.is_upset(R):
            raise PreconditionError("not an upset")
        if P.unit not in R:
            raise PreconditionError(f"unit {P.elements[P.unit]!r} missing")
        for a in sorted(R):
            for b in range(P.size):
                if P.imp[a][b] in R and b not in R:
                    raise PreconditionError(
                        f"not deductively closed at pair ({P.elements[a]}, {P.elements[b]})")
    return PreorderTable(P.elements, tuple(tuple(P.imp[a][b] in R for b in range(P.size))
                                           for a in range(P.size)))


def quotient(P: ImploidTable, relations) -> tuple[ImploidTable, Homomorphism]:
    """Quotient by relations a <= b; same carrier, order a <=_R b iff a -o b in R."""
    gens = {P.imp[P.index(a)][P.index(b)] for a, b in relations}
    R = P.order.up(gens)
    R = _as_indices(P, dni_closure(P, R))
    R = _as_indices(P, deductive_closure(P, R))
    order = induced_preorder(P, R)
    Q = ImploidTable(order, P.imp, P.unit, P.unital, f"{P.name}/R" if P.name else "")
    proj = check_homomorphism({x: x for x in P.elements}, P, Q)
    return Q, proj


def antisymmetrize(P: ImploidTable) -> ImploidTable:
    """Poset of equivalence classes, read off the image of the double embedding."""
    classes: list[list[int]] = []
    for a in range(P.size):
        for c in classes:
            if P.order.equiv(a, c[0]):
                c.append(a)
                break
        else:
            classes.append([a])
    rep = {a: i for i, c in enumerate(classes) for a in c}
    names = tuple("~".join(P.elements[a] for a in c) for c in classes)
    k = len(classes)
    order = PreorderTable(names, tuple(tuple(P.order.leq[classes[i][0]][classes[j][0]]
                                             for j in range(k)) for i in range(k)))
    imp = tuple(tuple(rep[P.imp[classes[i][0]][classes[j][0]]] for j in range(k)) for i in range(k))
    return ImploidTable(order, imp, rep[P.unit], P.unital)


def is_isomorphic(P: ImploidTable, Q: ImploidTable) -> dict | None:
    """Return an element bijection preserving order, implication and unit, if any."""
    if P.size != Q.size:
        return None
    for perm in itertools.permutations(range(Q.size)):
        if perm[P.unit] != Q.unit:
            continue
        r = range(P.size)
        if all(P.order.leq[a][b] == Q.order.leq[perm[a]][perm[b]] and perm[P.imp[a][b]] == Q.imp[perm[a]][perm[b]]
               for a in r for b in r):
            return {P.elements[a]: Q.elements[perm[a]] for a in r}
    return None


# -- exhaustive and random families -----------------------------------------

def preorders(n: int) -> list[tuple[tuple[bool, ...], ...]]:
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    out = []
    for mask in range(1 << len(pairs)):
        rows = [[a == b for b in range(n)] for a in range(n)]
        for i, (a, b) in enumerate(pairs):
            if mask >> i & 1:
                rows[a][b] = True
        t = tuple(tuple(r) for r in rows)
        if PreorderTable(tuple(map(str, range(n))), t).is_preorder():
            out.append(t)
    return out


def all_imploids(n: int) -> list[ImploidTable]:
    """Every valid imploid table on elements 0..n-1 (small n only)."""
    els = tuple(str(i) for i in range(n))
    out = []
    for leq in preorders(n):
        order = PreorderTable(els, leq)
        for flat in itertools.product(range(n), repeat=n * n):
            imp = tuple(tuple(flat[a * n:(a + 1) * n]) for a in range(n))
            for u in range(n):
                P = ImploidTable(order, imp, u)
                if check_axioms(P).valid:
                    out.append(P)
    return out


def random_imploids(n: int, count: int, seed: int = 0) -> list[ImploidTable]:
    """Distinct valid imploids found by randomized backtracking over imp cells."""
    rng = random.Random(seed)
    els = tuple(str(i) for i in range(n))
    orders = preorders(n)
    found: dict = {}
    attempts = 0
    while len(found) < count:
        attempts += 1
        if attempts > 200 * count:
            raise RuntimeError("could not find enough random imploids")
        order = PreorderTable(els, rng.choice(orders))
        u = rng.randrange(n)
        imp = _random_fill(order, u, n, rng)
        if imp is None:
            continue
        P = ImploidTable(order, imp, u)
        key = (order.leq, imp, u)
        if key not in found and check_axioms(P).valid:
            found[key] = P
    return list(found.values())


def _random_fill(order, u, n, rng):
    leq = order.leq
    cells = [(a, b) for a in range(n) for b in range(n)]
    table = [[None] * n for _ in range(n)]

    def ok() -> bool:
        r = range(n)
        for a1, a2, b1, b2 in itertools.product(r, r, r, r):
            x, y = table[a1][b1], table[a2][b2]
            if x is not None and y is not None and leq[a2][a1] and leq[b1][b2] and not leq[x][y]:
                return False
        for a in r:
            if table[a][a] is not None and not leq[u][table[a][a]]:
                return False
            if table[u][a] is not None and not leq[table[u][a]][a]:
                return False
        for a, b, c in itertools.product(r, r, r):
            bc, ab, ac = table[b][c], table[a][b], table[a][c]
            if bc is None or ab is None or ac is None:
                continue
            rhs = table[ab][ac]
            if rhs is not None and not leq[bc][rhs]:
                return False
        return True

    budget = [400]

    def go(i: int) -> bool:
        if i == len(cells):
            return True
        budget[0] -= 1
        if budget[0] < 0:
            return False
        a, b = cells[i]
        for v in rng.sample(range(n), n):
            table[a][b] = v
            if ok() and go(i + 1):
                return True
        table[a][b] = None
        return False

    if not go(0):
        return None
    return tuple(tuple(row) for row in table)


# -- text format ------------------------------------------------------------

def _parse_table(text: str, key: str):
    lines = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(no, ln) for no, ln in lines if ln]
    if not lines or lines[0][1] not in ("imploid", "skew_monoid", "skewmonoid"):
        raise FormatError("line 1: expected header 'imploid' or 'skew_monoid'")
    header = lines[0][1]
    fields: dict[str, tuple[int, str]] = {}
    rows: dict[str, list[tuple[int, list[str]]]] = {"leq": [], key: []}
    current = None
    for no, ln in lines[1:]:
        m = re.match(r"^(\w+):\s*(.*)$", ln)
        if m and m.group(1) in ("elements", "unit", "unital", "leq", key):
            current = m.group(1)
            if current in rows:
                if m.group(2):
                    rows[current].append((no, m.group(2).split()))
            else:
                fields[current] = (no, m.group(2))
        elif current in rows:
            rows[current].append((no, ln.split()))
        else:
            raise FormatError(f"line {no}: unexpected content {ln!r}")
    for need in ("elements", "unit"):
        if need not in fields:
            raise FormatError(f"missing '{need}:' line")
    els = fields["elements"][1].split()
    if len(set(els)) != len(els) or not els:
        raise FormatError(f"line {fields['elements'][0]}: empty or duplicate element list")
    n = len(els)

    def elem(no, name):
        if name not in els:
            raise FormatError(f"line {no}: unknown element {name!r}")
        return els.index(name)

    for k in ("leq", key):
        if len(rows[k]) != n:
            raise FormatError(f"'{k}:' needs {n} rows, got {len(rows[k])}")
        for no, r in rows[k]:
            if len(r) != n:
                raise FormatError(f"line {no}: ragged row ({len(r)} entries, expected {n})")
    leq = []
    for no, r in rows["leq"]:
        if any(x not in ("0", "1") for x in r):
            raise FormatError(f"line {no}: leq entries must be 0 or 1")
        leq.append(tuple(x == "1" for x in r))
    table = tuple(tuple(elem(no, x) for x in r) for no, r in rows[key])
    unit = elem(fields["unit"][0], fields["unit"][1].strip())
    unital = fields.get("unital", (0, "true"))[1].strip().lower() not in ("false", "0", "no")
    order = PreorderTable(tuple(els), tuple(leq))
    return header, order, table, unit, unital


def parse_imploid(text: str) -> ImploidTable:
    header, order, table, unit, unital = _parse_table(text, "imp")
    if header != "imploid":
        raise FormatError("line 1: expected header 'imploid'")
    return ImploidTable(order, table, unit, unital)


def parse_skew_monoid(text: str) -> SkewMonoidTable:
    header, order, table, unit, unital = _parse_table(text, "mul")
    return SkewMonoidTable(order, table, unit, unital)


def parse_table(text: str):
    head = next((ln.strip() for ln in text.splitlines() if ln.strip()), "")
    return parse_imploid(text) if head == "imploid" else parse_skew_monoid(text)


def format_table(T) -> str:
    is_imp = isinstance(T, ImploidTable)
    body = T.imp if is_imp else T.mul
    els = T.elements
    lines = ["imploid" if is_imp else "skew_monoid",
             "elements: " + " ".join(els),
             "unit: " + els[T.unit]]
    if not T.unital:
        lines.append("unital: false")
    lines.append("leq:")
    lines += [" ".join("1" if x else "0" for x in row) for row in T.order.leq]
    lines.append("imp:" if is_imp else "mul:")
    lines += [" ".join(els[x] for x in row) for row in body]
    return "\n".join(lines) + "\n"
