"""Brute-force checks of the imploid laws, shared by unit and acceptance tests.

Every function returns a list of counterexamples; empty means the law held.
"""
import itertools

from linflow.imploid import (ImploidTable, all_imploids, builtin, BUILTIN_IMPLOIDS,
                             check_homomorphism, deductive_closure, dni_closure, induced_preorder,
                             quotient, random_imploids, tensor, upsets)


def universe(n_random=1000, seed=0):
    """Builtins, every imploid on at most two elements, seeded 3-element ones."""
    out = [builtin(n) for n in BUILTIN_IMPLOIDS]
    out += all_imploids(1) + all_imploids(2)
    out += random_imploids(3, n_random, seed=seed)
    return out


def _idx(P, names):
    return frozenset(P.index(x) for x in names)


def exchange_laws(P):
    bad = []
    ax = P.axioms
    if ax.dni and not ax.symmetric:
        bad.append(("dni without exchange", P))
    if ax.symmetric and ax.left_normal and not ax.dni:
        bad.append(("exchange and left normal without dni", P))
    return bad


def observation_laws(P):
    """dni iff R(x)S >= S(x)R; exchange iff (R(x)S)(x)T >= (R(x)T)(x)S."""
    us = upsets(P)
    comm = all(tensor(P, R, S) >= tensor(P, S, R) for R in us for S in us)
    exch = all(tensor(P, tensor(P, R, S), T) >= tensor(P, tensor(P, R, T), S)
               for R in us for S in us for T in us)
    bad = []
    if comm != P.axioms.dni:
        bad.append(("dni vs commutation of upsets", P))
    if exch != P.axioms.symmetric:
        bad.append(("exchange vs upset exchange", P))
    return bad


def _dni_closed(P, R):
    return all(P.imp[P.imp[a][b]][b] in R for a in R for b in range(P.size))


def _dedup(P, R):
    return P.unit in R and all(b in R for a in R for b in range(P.size) if P.imp[a][b] in R)


def closure_laws(P):
    """The four characterisations of dni-closed upsets agree, closures are
    least, and tensor and ! preserve dni-closure."""
    bad = []
    us = upsets(P)
    r = range(P.size)
    I = P.unit
    for R in us:
        c1 = _dni_closed(P, R)
        c2 = all(tensor(P, R, S) >= tensor(P, S, R) for S in us)
        c3 = (all(P.imp[I][a] in R for a in R)
              and all(P.imp[P.imp[b][c]][P.imp[a][c]] in R
                      for a in r for b in r if P.imp[a][b] in R for c in r))
        # the two-premise rule taken one premise at a time
        c4 = (all(P.imp[I][a] in R for a in R)
              and all(P.imp[P.imp[a1][b]][P.imp[a2][b]] in R
                      for a1, a2, b in itertools.product(r, r, r) if P.imp[a2][a1] in R)
              and all(P.imp[P.imp[a][b1]][P.imp[a][b2]] in R
                      for a, b1, b2 in itertools.product(r, r, r) if P.imp[b1][b2] in R))
        if _dedup(P, R):
            both = all(P.imp[I][a] in R for a in R) and all(P.imp[P.imp[a1][b1]][P.imp[a2][b2]] in R
                       for a1, a2, b1, b2 in itertools.product(r, r, r, r)
                       if P.imp[a2][a1] in R and P.imp[b1][b2] in R)
            if both != c4:
                bad.append(("two-premise rule differs on a dedupset", P, R))
        if len({c1, c2, c3, c4}) != 1:
            bad.append(("dni-closure characterisations disagree", P, R, (c1, c2, c3, c4)))
        dni = _idx(P, dni_closure(P, R))
        least = min((S for S in us if S >= R and _dni_closed(P, S)), key=len)
        if dni != least:
            bad.append(("dni closure not least", P, R))
        if P.unital:
            ded = _idx(P, deductive_closure(P, R))
            least = min((S for S in us if S >= R and _dedup(P, S)), key=len, default=None)
            if ded != least:
                bad.append(("deductive closure not least", P, R))
            if c1 and not _dni_closed(P, ded):
                bad.append(("!R not dni-closed", P, R))
        if c1:
            for S in us:
                if _dni_closed(P, S) and not _dni_closed(P, tensor(P, R, S)):
                    bad.append(("tensor of dni-closed not dni-closed", P, R, S))
    return bad


def _targets():
    return [Q for Q in all_imploids(1) + all_imploids(2) + [builtin("hat2")] if Q.left_normal]


_RANK = {"not_hom": 0, "lax": 1, "strong": 2}


def quotient_laws(P, targets=None):
    """Universal property of P/R for every dni-closed dedupset R, against
    every map into small left normal targets; kernels and pullbacks of
    closed upsets along the homomorphisms found on the way."""
    if not P.unital:
        return []
    bad = []
    targets = targets if targets is not None else _targets()
    Rs = [R for R in upsets(P) if _dedup(P, R) and _dni_closed(P, R)]
    for R in Rs:
        Q = ImploidTable(induced_preorder(P, R), P.imp, P.unit, True)
        if not Q.axioms.valid or not Q.left_normal:
            bad.append(("quotient not a left normal imploid", P, R))
            continue
        proj = check_homomorphism({x: x for x in P.elements}, P, Q)
        if proj.kind != "strong" or _idx(P, proj.kernel) != R:
            bad.append(("projection not strong with kernel R", P, R))
        for T in targets:
            for img in itertools.product(T.elements, repeat=P.size):
                f = dict(zip(P.elements, img))
                h = check_homomorphism(f, P, T)
                if h.kind == "not_hom":
                    continue
                if not R <= _idx(P, h.kernel):
                    continue
                hb = check_homomorphism(f, Q, T)
                if _RANK[hb.kind] < _RANK[h.kind]:
                    bad.append(("factorisation loses strength", P, R, f))
    return bad


def kernel_laws(P, targets=None):
    """Kernels are deductively closed (dni-closed when strong); faithful iff
    kernel is up(I) for strong maps between left normal imploids;
    pullbacks of dedupsets and dni-closed upsets stay closed."""
    if not P.unital:
        return []
    bad = []
    targets = targets if targets is not None else _targets()
    up_I = P.order.up({P.unit})
    for T in targets:
        closed = [S for S in upsets(T) if _dedup(T, S)]
        dni_sets = [S for S in upsets(T) if _dni_closed(T, S)]
        for img in itertools.product(T.elements, repeat=P.size):
            f = dict(zip(P.elements, img))
            h = check_homomorphism(f, P, T)
            if h.kind == "not_hom":
                continue
            ker = _idx(P, h.kernel)
            if not _dedup(P, ker):
                bad.append(("kernel not deductively closed", P, f))
            if h.kind == "strong" and not _dni_closed(P, ker):
                bad.append(("strong kernel not dni-closed", P, f))
            if h.kind == "strong" and P.left_normal and h.faithful != (ker == up_I):
                bad.append(("faithful vs trivial kernel", P, f))
            g = [T.index(f[x]) for x in P.elements]
            for S in closed:
                pre = frozenset(a for a in range(P.size) if g[a] in S)
                if not _dedup(P, pre):
                    bad.append(("pullback of dedupset", P, f, S))
            if h.kind == "strong":
                for S in dni_sets:
                    pre = frozenset(a for a in range(P.size) if g[a] in S)
                    if not _dni_closed(P, pre):
                        bad.append(("pullback of dni-closed upset", P, f, S))
    return bad


def quotient_pipeline_laws(P):
    """quotient(P, [(a, b)]) forces a <= b and is left normal."""
    bad = []
    if not P.unital:
        return bad
    for a, b in itertools.product(P.elements, repeat=2):
        Q, proj = quotient(P, [(a, b)])
        if not Q.order.leq[Q.index(a)][Q.index(b)]:
            bad.append(("relation not forced", P, a, b))
        if not Q.left_normal or proj.kind != "strong":
            bad.append(("quotient not strong onto left normal", P, a, b))
    return bad


def all_laws(P):
    return (exchange_laws(P) + observation_laws(P) + closure_laws(P) + quotient_laws(P)
            + kernel_laws(P) + quotient_pipeline_laws(P))
