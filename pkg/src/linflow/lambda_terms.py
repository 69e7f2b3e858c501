"""Linear lambda terms in context and their rooted maps.

Terms are nameless: ``Var(k)`` under ``d`` binders is bound when ``k < d``
and otherwise names context slot ``k - d`` counted from the end of the
context. Binder names are kept only as printing hints, so structural equality
is alpha-equivalence.
"""
from __future__ import annotations

import itertools
import re
import string
from dataclasses import dataclass, field

from .imploid import FormatError, PreconditionError
from .maps import (Orientation, RootedMap, boundary, build_map, canonical_with_orientation,
                   decompose)


@dataclass(frozen=True)
class Var:
    index: int
    name: str = field(default="", compare=False)


@dataclass(frozen=True)
class Lam:
    body: "Term"
    name: str = field(default="", compare=False)


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


Term = Var | Lam | App


@dataclass(frozen=True)
class LinearTerm:
    term: Term
    context: tuple[str, ...] = field(default=(), compare=False)

    @property
    def arity(self) -> int:
        return len(self.context)

    def __str__(self) -> str:
        return print_term(self)


class LinearityError(FormatError):
    pass


# -- named view -------------------------------------------------------------
# Internally a "named" tree uses tuples ("var", id) / ("lam", id, body) /
# ("app", f, a) with hashable ids; handy for substitution and generation.

def to_named(t: LinearTerm):
    """Return (tree, context ids) with context ids ("c", i) and binders ("b", k)."""
    n = t.arity
    counter = itertools.count()

    def go(u, stack):
        if isinstance(u, Var):
            if u.index < len(stack):
                return ("var", stack[-1 - u.index])
            k = u.index - len(stack)
            if k >= n:
                raise PreconditionError(f"free index {u.index} outside a context of size {n}")
            return ("var", ("c", n - 1 - k))
        if isinstance(u, Lam):
            b = ("b", next(counter), u.name)
            return ("lam", b, go(u.body, stack + [b]))
        return ("app", go(u.fn, stack), go(u.arg, stack))

    return go(t.term, []), [("c", i) for i in range(n)]


def from_named(tree, ctx: list, names: list[str] | None = None) -> LinearTerm:
    def go(u, stack):
        if u[0] == "var":
            x = u[1]
            if x in stack:
                return Var(stack[::-1].index(x), _hint(x))
            if x not in ctx:
                raise PreconditionError(f"variable {x!r} is not in the context")
            return Var(len(stack) + (len(ctx) - 1 - ctx.index(x)), _hint(x))
        if u[0] == "lam":
            return Lam(go(u[2], stack + [u[1]]), _hint(u[1]))
        return App(go(u[1], stack), go(u[2], stack))

    names = names if names is not None else [_hint(x) for x in ctx]
    return LinearTerm(go(tree, []), tuple(names))


def _hint(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, tuple) and len(x) == 3 and isinstance(x[2], str):
        return x[2]
    return ""


def free_vars_named(tree) -> list:
    """Free variables in left-to-right occurrence order."""
    if tree[0] == "var":
        return [tree[1]]
    if tree[0] == "lam":
        return [x for x in free_vars_named(tree[2]) if x != tree[1]]
    return free_vars_named(tree[1]) + free_vars_named(tree[2])


# -- parsing and printing ---------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\\|λ)|(->|\.)|(\()|(\))|([A-Za-z_][A-Za-z0-9_']*))")


def _tokenize(text: str):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise FormatError(f"syntax error at position {pos}: unexpected {text[pos:pos + 10]!r}")
        kind = m.lastindex
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return out


def parse(text: str, context: list[str] | None = None) -> LinearTerm:
    """Parse a term; an optional leading ``context: x y`` line fixes the context."""
    lines = text.strip().splitlines()
    if lines and lines[0].strip().startswith("context:"):
        ctx_line = lines[0].strip()[len("context:"):].split()
        if context is None:
            context = ctx_line
        text = "\n".join(lines[1:])
    toks = _tokenize(text)
    i = 0

    def peek():
        return toks[i] if i < len(toks) else (None, None, len(text))

    def expect(kind, what):
        nonlocal i
        tk = peek()
        if tk[0] != kind:
            got = "end of input" if tk[0] is None else repr(tk[1])
            raise FormatError(f"syntax error at position {tk[2]}: expected {what}, got {got}")
        i += 1
        return tk

    def term():
        nonlocal i
        if peek()[0] == 1:
            i += 1
            name = expect(5, "variable name")[1]
            expect(2, "'->'")
            return ("lam", name, term())
        return app()

    def atom():
        nonlocal i
        tk = peek()
        if tk[0] == 5:
            i += 1
            return ("var", tk[1])
        if tk[0] == 3:
            i += 1
            t = term()
            expect(4, "')'")
            return t
        if tk[0] == 1:
            return term()
        got = "end of input" if tk[0] is None else repr(tk[1])
        raise FormatError(f"syntax error at position {tk[2]}: expected a term, got {got}")

    def app():
        t = atom()
        while peek()[0] in (5, 3, 1):
            t = ("app", t, atom())
        return t

    tree = term()
    if i != len(toks):
        raise FormatError(f"syntax error at position {toks[i][2]}: trailing input {toks[i][1]!r}")
    return _from_surface(tree, context)


def _from_surface(tree, context) -> LinearTerm:
    """Resolve surface names, checking linearity, into a nameless term."""
    counter = itertools.count()
    uses: dict = {}

    def go(u, scope):
        if u[0] == "var":
            key = scope.get(u[1], ("free", u[1]))
            uses[key] = uses.get(key, 0) + 1
            return ("var", key)
        if u[0] == "lam":
            key = ("b", next(counter), u[1])
            uses.setdefault(key, 0)
            return ("lam", key, go(u[2], {**scope, u[1]: key}))
        return ("app", go(u[1], scope), go(u[2], scope))

    named = go(tree, {})
    for key, k in uses.items():
        if k != 1:
            nm = key[2] if key[0] == "b" else key[1]
            if k == 0:
                raise LinearityError(f"linearity violation: variable {nm!r} is never used")
            raise LinearityError(f"linearity violation: variable {nm!r} is used {k} times")
    free = [x[1] for x in free_vars_named(named)]
    if context is None:
        context = free
    else:
        context = list(context)
        if len(set(context)) != len(context):
            raise LinearityError("context lists a variable twice")
        extra = set(free) - set(context)
        if extra:
            raise LinearityError(f"free variable {sorted(extra)[0]!r} is not in the context")
        unused = [x for x in context if x not in free]
        if unused:
            raise LinearityError(f"linearity violation: context variable {unused[0]!r} is never used")
    ctx_keys = [("free", x) for x in context]
    return from_named(named, ctx_keys, list(context))


def _fresh_names(n: int) -> list[str]:
    out: list[str] = []
    if n <= 0:
        return out
    for k in itertools.count(1):
        for tup in itertools.product(string.ascii_lowercase, repeat=k):
            out.append("".join(tup))
            if len(out) == n:
                return out
    return out


def print_term(t: LinearTerm, with_context: bool = False) -> str:
    """Surface syntax; clashing or missing binder hints get fresh names."""
    ctx = list(t.context)
    used = set(ctx)
    supply = (nm for nm in _fresh_names(10000) if nm not in used)

    def name_for(hint):
        if hint and hint not in used:
            used.add(hint)
            return hint
        nm = next(supply)
        used.add(nm)
        return nm

    def go(u, stack):
        if isinstance(u, Var):
            if u.index < len(stack):
                return stack[-1 - u.index]
            return ctx[len(ctx) - 1 - (u.index - len(stack))]
        if isinstance(u, Lam):
            nm = name_for(u.name)
            return "\\" + nm + " -> " + go(u.body, stack + [nm])
        f = go(u.fn, stack)
        if isinstance(u.fn, Lam):
            f = "(" + f + ")"
        a = go(u.arg, stack)
        if not isinstance(u.arg, Var):
            a = "(" + a + ")"
        return f + " " + a

    body = go(t.term, [])
    if with_context or ctx:
        return "context: " + " ".join(ctx) + "\n" + body
    return body


# -- structure --------------------------------------------------------------

def subterms(t: Term, path=()):
    """Yield (path, subterm) pairs; paths use 'fun', 'arg', 'body'."""
    yield path, t
    if isinstance(t, Lam):
        yield from subterms(t.body, path + ("body",))
    elif isinstance(t, App):
        yield from subterms(t.fn, path + ("fun",))
        yield from subterms(t.arg, path + ("arg",))


def at_path(t: Term, path) -> Term:
    for step in path:
        if step == "body" and isinstance(t, Lam):
            t = t.body
        elif step == "fun" and isinstance(t, App):
            t = t.fn
        elif step == "arg" and isinstance(t, App):
            t = t.arg
        else:
            raise PreconditionError(f"invalid position {'/'.join(path)}")
    return t


def replace_at(t: Term, path, new: Term) -> Term:
    if not path:
        return new
    step, rest = path[0], path[1:]
    if step == "body" and isinstance(t, Lam):
        return Lam(replace_at(t.body, rest, new), t.name)
    if step == "fun" and isinstance(t, App):
        return App(replace_at(t.fn, rest, new), t.arg)
    if step == "arg" and isinstance(t, App):
        return App(t.fn, replace_at(t.arg, rest, new))
    raise PreconditionError(f"invalid position at step {step!r}")


def size(t: Term) -> tuple[int, int]:
    """(lambdas, applications)."""
    if isinstance(t, Var):
        return 0, 0
    if isinstance(t, Lam):
        a, b = size(t.body)
        return a + 1, b
    a1, b1 = size(t.fn)
    a2, b2 = size(t.arg)
    return a1 + a2, b1 + b2 + 1


def redexes(t: Term) -> list[tuple]:
    return [p for p, u in subterms(t) if isinstance(u, App) and isinstance(u.fn, Lam)]


def _free_count(u: Term, depth: int = 0) -> int:
    if isinstance(u, Var):
        return 1 if u.index >= depth else 0
    if isinstance(u, Lam):
        return _free_count(u.body, depth + 1)
    return _free_count(u.fn, depth) + _free_count(u.arg, depth)


def is_planar(t: LinearTerm) -> bool:
    """Every subterm uses its free variables in context order, binders last."""
    tree, ctx = to_named(t)

    def ok(u, order) -> bool:
        if free_vars_named(u) != order:
            return False
        if u[0] == "lam":
            return ok(u[2], order + [u[1]])
        if u[0] == "app":
            f1 = set(free_vars_named(u[1]))
            return ok(u[1], [x for x in order if x in f1]) and ok(u[2], [x for x in order if x not in f1])
        return True

    return ok(tree, ctx)


def is_unitless(t: LinearTerm) -> bool:
    """No closed proper subterm; the whole term may itself be closed."""
    tree, _ = to_named(t)

    def closed_inside(u, top) -> bool:
        if not top and not free_vars_named(u):
            return True
        if u[0] == "lam":
            return closed_inside(u[2], False)
        if u[0] == "app":
            return closed_inside(u[1], False) or closed_inside(u[2], False)
        return False

    return not closed_inside(tree, True)


def classify(t: LinearTerm) -> dict[str, bool]:
    return {"planar": is_planar(t), "unitless": is_unitless(t), "beta_normal": not redexes(t.term)}


# -- de Bruijn operations ---------------------------------------------------

def shift(t: Term, d: int, cutoff: int = 0) -> Term:
    if isinstance(t, Var):
        return Var(t.index + d, t.name) if t.index >= cutoff else t
    if isinstance(t, Lam):
        return Lam(shift(t.body, d, cutoff + 1), t.name)
    return App(shift(t.fn, d, cutoff), shift(t.arg, d, cutoff))


def subst(t: Term, j: int, s: Term) -> Term:
    if isinstance(t, Var):
        return s if t.index == j else t
    if isinstance(t, Lam):
        return Lam(subst(t.body, j + 1, shift(s, 1)), t.name)
    return App(subst(t.fn, j, s), subst(t.arg, j, s))


def _beta(redex: App) -> Term:
    lam = redex.fn
    return shift(subst(lam.body, 0, shift(redex.arg, 1)), -1)


def beta_step(t: LinearTerm, path) -> LinearTerm:
    path = tuple(path)
    u = at_path(t.term, path)
    if not (isinstance(u, App) and isinstance(u.fn, Lam)):
        raise PreconditionError(f"no beta-redex at position {'/'.join(path) or '<root>'}")
    return LinearTerm(replace_at(t.term, path, _beta(u)), t.context)


def beta_normalize(t: LinearTerm, max_steps: int | None = None) -> tuple[LinearTerm, int]:
    """Leftmost-outermost normalization; returns the normal form and step count."""
    steps = 0
    while True:
        rs = redexes(t.term)
        if not rs:
            return t, steps
        if max_steps is not None and steps >= max_steps:
            raise PreconditionError("step bound exceeded")
        t = beta_step(t, rs[0])
        steps += 1


def eta_expand(t: LinearTerm, path, name: str = "") -> LinearTerm:
    path = tuple(path)
    u = at_path(t.term, path)
    return LinearTerm(replace_at(t.term, path, Lam(App(shift(u, 1), Var(0)), name)), t.context)


def compose(t1: LinearTerm, i: int, t2: LinearTerm) -> LinearTerm:
    """Graft t2 into the i-th (1-based) context slot of t1."""
    if not 1 <= i <= t1.arity:
        raise PreconditionError(f"index {i} outside 1..{t1.arity}")
    tree1, ctx1 = to_named(t1)
    tree2, ctx2 = to_named(t2)
    ren = {x: ("g", x[1]) for x in ctx2}
    tree2 = _rename(tree2, ren)
    ctx2 = [ren[x] for x in ctx2]
    target = ctx1[i - 1]

    def graft(u):
        if u[0] == "var":
            return tree2 if u[1] == target else u
        if u[0] == "lam":
            return ("lam", u[1], graft(u[2]))
        return ("app", graft(u[1]), graft(u[2]))

    ctx = ctx1[:i - 1] + ctx2 + ctx1[i:]
    names = list(t1.context[:i - 1]) + list(t2.context) + list(t1.context[i:])
    return from_named(graft(tree1), ctx, _dedupe(names))


def _rename(u, ren):
    if u[0] == "var":
        return ("var", ren.get(u[1], u[1]))
    if u[0] == "lam":
        b = ("bg", u[1][1], _hint(u[1])) if u[1][0] == "b" else u[1]
        return ("lam", b, _rename(u[2], {**ren, u[1]: b}))
    return ("app", _rename(u[1], ren), _rename(u[2], ren))


def _dedupe(names: list[str]) -> list[str]:
    out, seen = [], set()
    supply = iter(_fresh_names(1000))
    for nm in names:
        while not nm or nm in seen:
            nm = next(supply)
        seen.add(nm)
        out.append(nm)
    return out


def exchange(t: LinearTerm, perm) -> LinearTerm:
    """New context slot j holds old slot perm[j]."""
    perm = list(perm)
    if sorted(perm) != list(range(t.arity)):
        raise PreconditionError("not a permutation of the context")
    tree, ctx = to_named(t)
    return from_named(tree, [ctx[p] for p in perm], [t.context[p] for p in perm])


def variable_term(name: str = "x") -> LinearTerm:
    return LinearTerm(Var(0, name), (name,))


# -- maps -------------------------------------------------------------------

def term_to_map(t: LinearTerm) -> tuple[RootedMap, Orientation]:
    """Build the rooted map: @ vertices ccw (out, arg, fn), lambdas ccw (out, var, body).

    The external vertex carries the root arc followed by the context slots in
    the same rotation, so ``boundary`` returns them in context order.
    """
    tree, ctx = to_named(t)
    vertices: list[list] = []
    edges: list[tuple] = []
    positive: list = []
    binder_arc: dict = {}
    ext = [("x", 0)] + [("x", i + 1) for i in range(len(ctx))]
    for i, c in enumerate(ctx):
        binder_arc[c] = ("x", i + 1)
        positive.append(("x", i + 1))
    vertices.append(ext)
    counter = itertools.count()

    def go(u, parent):
        if u[0] == "var":
            edges.append((parent, binder_arc[u[1]]))
            return
        k = next(counter)
        r, a, b = ("r", k), ("s", k), ("t", k)
        vertices.append([r, a, b])
        edges.append((parent, r))
        positive.append(r)
        if u[0] == "lam":
            binder_arc[u[1]] = a
            positive.append(a)
            go(u[2], b)
        else:
            go(u[1], b)
            go(u[2], a)

    go(tree, ("x", 0))
    M, lab = build_map(vertices, edges, ("x", 0), external=0)
    O = Orientation(frozenset(lab[p] for p in positive))
    return canonical_with_orientation(M, O)


def map_to_term(M: RootedMap) -> LinearTerm:
    """Read the term off the topological decomposition (2-valent vertices skipped)."""
    bnd = boundary(M) if M.external is not None else [M.root]
    n = len(bnd) - 1
    names = _fresh_names(n + M.n_arcs)
    ctx_names = names[:n]
    supply = iter(names[n:])
    binder_of_arc: dict[int, object] = {}

    def go(node):
        kind = node[0]
        if kind == "var":
            far = node[2]
            if far in binder_of_arc:
                return ("var", binder_of_arc[far])
            if M.external is not None and M.vertex_of[far] == M.external:
                return ("var", ("c", bnd.index(far) - 1))
            raise PreconditionError(f"arc {far} is not a binder or boundary input")
        if kind == "unit":
            raise PreconditionError("1-valent vertex has no term reading")
        if kind == "glue":
            return go(node[3])
        if kind == "lam":
            _, a, b, c, d, body = node
            key = ("b", c, next(supply))
            binder_of_arc[c] = key
            return ("lam", key, go(body))
        _, a, b, c, d, fn, arg = node
        return ("app", go(fn), go(arg))

    tree = go(decompose(M))
    ctx = [("c", i) for i in range(n)]
    return from_named(tree, ctx, ctx_names)


# -- enumeration ------------------------------------------------------------

def _gen(free: tuple, lams: int, depth: int):
    """Named terms using each variable of ``free`` once and exactly ``lams`` lambdas."""
    if lams == 0 and len(free) == 1:
        yield ("var", free[0])
    if lams >= 1:
        b = ("b", depth)
        for body in _gen(free + (b,), lams - 1, depth + 1):
            yield ("lam", b, body)
    if lams + len(free) >= 2:
        k = len(free)
        for mask in range(1 << k):
            left = tuple(free[i] for i in range(k) if mask >> i & 1)
            right = tuple(free[i] for i in range(k) if not mask >> i & 1)
            for l1 in range(lams + 1):
                l2 = lams - l1
                if l1 + len(left) < 1 or l2 + len(right) < 1:
                    continue
                for f in _gen(left, l1, depth):
                    for a in _gen(right, l2, depth):
                        yield ("app", f, a)


def all_terms(lams: int, arity: int = 0):
    ctx = [("c", i) for i in range(arity)]
    names = _fresh_names(arity)
    for tree in _gen(tuple(ctx), lams, 0):
        yield from_named(tree, ctx, names)


FAMILIES = {
    "linear": {},
    "planar": {"planar": True},
    "unitless": {"unitless": True},
    "unitless_planar": {"unitless": True, "planar": True},
    "beta_normal_planar": {"planar": True, "beta_normal": True},
    "beta_normal_unitless_planar": {"planar": True, "unitless": True, "beta_normal": True},
}


def in_family(t: LinearTerm, flags: dict) -> bool:
    if not flags:
        return True
    c = classify(t)
    return all(c[k] == v for k, v in flags.items())


def enumerate_terms(n: int, family: str | dict = "linear", keep: bool = False, cap: int = 6):
    """Count closed linear terms with ``n`` lambdas in a family."""
    if n > cap:
        raise PreconditionError(f"size {n} exceeds cap {cap}")
    flags = FAMILIES[family] if isinstance(family, str) else family
    kept = [t for t in all_terms(n) if in_family(t, flags)]
    return (len(kept), kept) if keep else len(kept)
