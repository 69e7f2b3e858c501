import random

import pytest
from hypothesis import given, settings, strategies as st

from linflow import fixtures
from linflow.imploid import FormatError, PreconditionError
from linflow.lambda_terms import (App, Lam, LinearityError, Var, all_terms,
                                  beta_normalize, beta_step, classify, compose,
                                  enumerate_terms, eta_expand, exchange, map_to_term, parse,
                                  print_term, redexes, size, subterms, term_to_map,
                                  variable_term)
from linflow.maps import (all_small_maps, canonical_form, canonical_with_orientation, genus,
                          is_bridgeless, is_isomorphic, topological_orientation, trivial_map)


def small_terms(max_lams=3, arity=0):
    return [t for n in range(max_lams + 1) for t in all_terms(n, arity)]


def random_open_term(rng, arity, lams):
    pool = list(all_terms(lams, arity))
    return rng.choice(pool)


# -- parsing and printing ---------------------------------------------------

def test_parse_identity():
    t = parse(r"\x -> x")
    assert t.term == Lam(Var(0))
    assert t.context == ()


def test_parse_b():
    t = parse(r"\x -> \y -> \z -> x (y z)")
    assert t.term == Lam(Lam(Lam(App(Var(2), App(Var(1), Var(0))))))
    assert t == parse(r"\x.\y.\z.x (y z)")


def test_parse_left_assoc():
    t = parse("context: x y z\nx y z")
    assert t.term == App(App(Var(2), Var(1)), Var(0))


@pytest.mark.parametrize("text,var", [(r"\x -> x x", "'x'"), (r"\x -> \y -> x", "'y'"),
                                      ("context: x\nx x", "'x'")])
def test_parse_linearity(text, var):
    with pytest.raises(LinearityError, match=var):
        parse(text)


@pytest.mark.parametrize("text", [r"\x -> ", r"(\x -> x", r"\ -> x", ")", "context: x x\nx"])
def test_parse_syntax_errors(text):
    with pytest.raises(FormatError):
        parse(text)


def test_print_round_trip_small():
    for arity in (0, 1, 2):
        for t in small_terms(3 if arity == 0 else 2, arity):
            s = print_term(t)
            assert parse(s) == t
            assert parse(s).context == t.context


def test_print_appendix_b():
    t = fixtures.appendix_b_term()
    assert parse(print_term(t)) == t


def test_alpha_equivalence():
    assert parse(r"\x.\y.x y") == parse(r"\a -> \b -> a b")
    assert parse(r"\x.\y.x y") != parse(r"\x.\y.y x")


# -- classification ---------------------------------------------------------

def test_classify_examples():
    assert classify(fixtures.term("B")) == {"planar": True, "unitless": True, "beta_normal": True}
    assert not classify(fixtures.term("C"))["planar"]
    c = classify(fixtures.appendix_b_term())
    assert c == {"planar": True, "unitless": True, "beta_normal": False}
    assert len(redexes(fixtures.appendix_b_term().term)) == 1


def test_classify_closed_subterm():
    c = classify(parse(r"\x.x (\y.y)"))
    assert not c["unitless"] and c["planar"] and c["beta_normal"]


def test_size_counts():
    for n in range(1, 5):
        for t in all_terms(n):
            assert size(t.term) == (n, n - 1)


# -- term <-> map -----------------------------------------------------------

def test_b_map_planar_tetrahedron():
    M, O = term_to_map(fixtures.term("B"))
    assert genus(M) == 0 and len(M.cycles) == 6
    assert topological_orientation(M) == O
    assert map_to_term(M) == fixtures.term("B")


def test_c_map_toric():
    M, _ = term_to_map(fixtures.term("C"))
    assert genus(M) == 1


def test_identity_map_is_loop():
    M, O = term_to_map(fixtures.term("I"))
    internal = [w for w in M.internal_vertices()]
    assert len(internal) == 1 and M.degree(internal[0]) == 3
    # the variable edge starts and ends at the lambda vertex
    w = internal[0]
    loops = [a for a in M.edges() if M.vertex_of[a] == w and M.vertex_of[a + 1] == w]
    assert len(loops) == 1
    assert sum(1 for x in M.cycles[w] if x in O.positive) == 2


def test_appendix_b_round_trip():
    t = fixtures.appendix_b_term()
    M, _ = term_to_map(t)
    assert map_to_term(M) == t


def test_trivial_map_is_variable():
    t = map_to_term(trivial_map())
    assert t == variable_term() and t.arity == 1


def test_bijection_terms_to_maps():
    for n in range(1, 5):
        for t in all_terms(n):
            M, O = term_to_map(t)
            assert map_to_term(M) == t
            assert topological_orientation(M) == O


def test_bijection_maps_to_terms():
    n = 0
    for M in all_small_maps(4):
        t = map_to_term(M)
        N, O = term_to_map(t)
        assert is_isomorphic(N, M)
        C1, O1 = canonical_with_orientation(N, O)
        C2, O2 = canonical_with_orientation(M, topological_orientation(M))
        assert (C1, O1) == (C2, O2)
        n += 1
    assert n > 1000


def test_open_term_boundary_order():
    t = parse("context: x y z\nx (y z)")
    M, O = term_to_map(t)
    assert map_to_term(M) == t
    assert len(M.cycles[M.external]) == 4


def test_planar_and_unitless_match_map_side():
    for n in range(1, 5):
        for t in all_terms(n):
            M, _ = term_to_map(t)
            c = classify(t)
            assert c["planar"] == (genus(M) == 0)
            assert c["unitless"] == is_bridgeless(M)


def test_distinct_terms_distinct_maps():
    for n in (1, 2, 3):
        ts = list(all_terms(n))
        assert len({canonical_form(term_to_map(t)[0]) for t in ts}) == len(ts) == len(set(ts))


# -- beta and eta -----------------------------------------------------------

def test_beta_identity_redex():
    t, steps = beta_normalize(parse(r"(\x.x)(\y.y)"))
    assert t == parse(r"\y.y") and steps == 1


def test_beta_appendix_b_one_step():
    t = fixtures.appendix_b_term()
    once = beta_step(t, redexes(t.term)[0])
    assert size(once.term) == (23, 22)
    # contracting the only redex creates new ones; the full normal form is further away
    assert len(redexes(once.term)) == 2
    nf, steps = beta_normalize(t)
    assert steps == 5 and size(nf.term) == (19, 18)
    assert classify(nf) == {"planar": True, "unitless": True, "beta_normal": True}


def test_beta_normal_unchanged():
    t = fixtures.term("B")
    assert beta_normalize(t) == (t, 0)


def test_beta_step_invalid_position():
    with pytest.raises(PreconditionError):
        beta_step(fixtures.term("B"), ())
    with pytest.raises(PreconditionError):
        beta_step(fixtures.term("B"), ("arg",))


def test_beta_properties_exhaustive():
    for n in range(1, 5):
        for t in all_terms(n):
            c = classify(t)
            apps = size(t.term)[1]
            nf, steps = beta_normalize(t)
            assert steps <= apps
            assert size(nf.term) == (n - steps, n - 1 - steps)
            assert not redexes(nf.term)
            cn = classify(nf)
            if c["planar"]:
                assert cn["planar"]
            if c["unitless"]:
                assert cn["unitless"]


def test_eta_variable():
    t = eta_expand(variable_term("x"), ())
    assert t == parse("context: x\n\\y.x y")


def test_eta_then_beta_round_trip():
    B = fixtures.term("B")
    t = eta_expand(B, ())
    assert t.term == Lam(App(B.term, Var(0)))
    assert beta_step(t, ("body",)) == B
    # on any abstraction, expanding then contracting the new redex is the identity
    n = 0
    for k in range(1, 4):
        for u in all_terms(k):
            for path, sub in subterms(u.term):
                if isinstance(sub, Lam):
                    assert beta_step(eta_expand(u, path), path + ("body",)) == u
                    n += 1
    assert n > 100


def test_eta_bubble_map():
    # eta on the context variable gives the oriented bubble
    t = eta_expand(variable_term("x"), ())
    M, O = term_to_map(t)
    B, OB = fixtures.term_map("bubble")
    assert canonical_with_orientation(M, O) == canonical_with_orientation(B, OB)


def test_eta_invalid_position():
    with pytest.raises(PreconditionError):
        eta_expand(fixtures.term("I"), ("fun",))


# -- operad structure -------------------------------------------------------

def test_compose_unit_law():
    x = variable_term()
    for t in small_terms(2, 2):
        assert compose(x, 1, t) == t
        for i in (1, 2):
            assert compose(t, i, x) == t


def test_exchange_identity():
    for t in small_terms(2, 3):
        assert exchange(t, [0, 1, 2]) == t


def test_compose_errors():
    with pytest.raises(PreconditionError):
        compose(fixtures.term("B"), 1, variable_term())
    with pytest.raises(PreconditionError):
        exchange(parse("context: x y\nx y"), [0, 0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_compose_associative(seed):
    rng = random.Random(seed)
    t1 = random_open_term(rng, rng.randint(1, 2), rng.randint(0, 1))
    t2 = random_open_term(rng, rng.randint(1, 2), rng.randint(0, 1))
    a3 = rng.randint(0, 2)
    t3 = random_open_term(rng, a3, rng.randint(1 if a3 == 0 else 0, 1))
    i = rng.randint(1, t1.arity)
    j = rng.randint(1, t2.arity)
    # sequential: graft t3 into t2's slot j, which sits at slot i + j - 1 after grafting t2
    left = compose(compose(t1, i, t2), i + j - 1, t3)
    right = compose(t1, i, compose(t2, j, t3))
    assert left == right


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_exchange_equivariance(seed):
    rng = random.Random(seed)
    t = random_open_term(rng, 3, rng.randint(0, 1))
    p = list(range(3))
    q = list(range(3))
    rng.shuffle(p)
    rng.shuffle(q)
    # exchanging by p then by q equals one exchange by the composite
    assert exchange(exchange(t, p), q) == exchange(t, [p[k] for k in q])
    # compose commutes with relabelling the untouched slots
    u = random_open_term(rng, 1, 1)
    moved = exchange(t, p)
    i = p.index(0) + 1
    inv = [p.index(k) for k in range(3)]
    assert exchange(compose(moved, i, u), inv) == compose(t, 1, u)


# -- enumeration ------------------------------------------------------------

def test_enumerate_examples():
    assert enumerate_terms(1) == 1
    assert enumerate_terms(2) == 5
    assert enumerate_terms(2, "planar") == 4
    n, kept = enumerate_terms(1, keep=True)
    assert kept == [parse(r"\x.x")]


@pytest.mark.parametrize("family", ["linear", "planar", "unitless", "unitless_planar",
                                    "beta_normal_planar", "beta_normal_unitless_planar"])
def test_enumerate_matches_oeis(family):
    assert [enumerate_terms(n, family) for n in range(1, 5)] == fixtures.oeis_prefix(family, 4)


def test_enumerate_cap():
    with pytest.raises(PreconditionError):
        enumerate_terms(7, cap=6)
