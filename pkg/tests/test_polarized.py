import itertools

import pytest

from linflow import fixtures
from linflow.flows import check_flow, is_proper_coloring, search_flow, COLORS
from linflow.imploid import FormatError, PreconditionError, all_imploids, builtin
from linflow.lambda_terms import all_terms, redexes, term_to_map
from linflow.maps import (Orientation, RootedMap, all_small_maps, all_well_orientations,
                          close_map, e, genus, is_bridgeless)
from linflow.polarized import (Arrow, Gen, PolarizedMap, check_polarization, evaluate,
                               format_type, instantiate, is_acyclic, is_polarization_of,
                               match_types, minimal_polarization, parse_type,
                               search_instantiation, subdivide_edge, universal_flow,
                               wb_orientation)

K = builtin("klein_four")
H = builtin("hat2")

# a well-oriented map whose minimal polarization has a w-b cycle
CYCLIC = (RootedMap(12, (2, 4, 6, 8, 10, 7, 0, 9, 11, 5, 1, 3), 0, 0),
          Orientation(frozenset({1, 2, 5, 7, 8, 11})))


def polarize(t):
    M, O = term_to_map(t)
    return M, O, minimal_polarization(M, O)


def shape(t):
    """Forget signs: generator names only."""
    if isinstance(t, Gen):
        return Gen(t.white, "")
    return Arrow(shape(t.left), shape(t.right))


def has_cycle(pi):
    """Independent DFS on the w-b orientation, internal vertices only."""
    W = wb_orientation(pi)
    M = pi.M
    succ = {w: [] for w in M.internal_vertices()}
    for x in W.positive:
        s, h = M.vertex_of[x], M.vertex_of[e(x)]
        if s in succ and h in succ:
            succ[s].append(h)
    state = {}

    def dfs(w):
        state[w] = 1
        for h in succ[w]:
            if state.get(h) == 1 or (h not in state and dfs(h)):
                return True
        state[w] = 2
        return False

    return any(w not in state and dfs(w) for w in succ)


def appendix_b():
    t = fixtures.appendix_b_term()
    M, O, pi = polarize(t)
    U = universal_flow(pi)
    data = fixtures.appendix_b()
    c = U.constraints[0]
    ren = match_types([(U.root_type, parse_type(data["root_type"])),
                       (c.lhs, parse_type(data["beta_lhs"])),
                       (c.rhs, parse_type(data["beta_rhs"]))])
    return M, O, pi, U, ren


# -- minimal polarization ---------------------------------------------------

def test_identity_polarization():
    M, O, pi = polarize(fixtures.term("I"))
    assert len(pi.whites()) == 1 and pi.blacks() == []


def test_b_has_no_black():
    _, _, pi = polarize(fixtures.term("B"))
    assert pi.blacks() == []


def test_appendix_b_one_black():
    _, _, pi = polarize(fixtures.appendix_b_term())
    assert len(pi.blacks()) == 1


def test_blacks_are_redexes():
    for n in range(1, 5):
        for t in all_terms(n):
            M, O, pi = polarize(t)
            assert len(pi.blacks()) == len(redexes(t.term))
            assert check_polarization(pi).valid
            assert is_polarization_of(pi, M, O)


def test_blacks_are_redexes_open():
    for n in range(0, 3):
        for t in all_terms(n, 2):
            _, _, pi = polarize(t)
            assert len(pi.blacks()) == len(redexes(t.term))


def test_flipped_sign_violation():
    M, O, pi = polarize(fixtures.term("B"))
    a = 2
    sign = dict(pi.sign)
    sign[a] = -sign[a]
    bad = PolarizedMap(pi.M, pi.O, sign, pi.origin)
    rep = check_polarization(bad)
    assert not rep.valid
    ends = {pi.M.vertex_of[a], pi.M.vertex_of[a + 1]}
    assert {w for w, _ in rep.violations} & ends
    assert not is_polarization_of(bad, M, O)


def test_double_subdivision_is_valid():
    M, O, pi = polarize(fixtures.term("B"))
    # an edge with equal polarity at both ends gets a white and a black vertex
    a = next(a for a in pi.M.edges() if pi.origin.get(a, a) == a and pi.sign[a] > 0
             and not pi.M.is_external(pi.M.vertex_of[a])
             and not pi.M.is_external(pi.M.vertex_of[a + 1]))
    longer = subdivide_edge(pi, a, [1, -1, 1])
    assert check_polarization(longer).valid
    assert is_polarization_of(longer, M, O)
    assert longer.M.n_edges == pi.M.n_edges + 2


# -- w-b orientation ----------------------------------------------------------

def test_wb_sources_and_sinks():
    _, _, pi = polarize(fixtures.appendix_b_term())
    W = wb_orientation(pi)
    for w in pi.whites():
        assert all(x in W.positive for x in pi.M.cycles[w])
    for w in pi.blacks():
        assert all(x not in W.positive for x in pi.M.cycles[w])


def test_appendix_b_acyclic():
    _, _, pi = polarize(fixtures.appendix_b_term())
    assert is_acyclic(pi) and not has_cycle(pi)


def test_nonglobal_examples_acyclic():
    for f in (fixtures.nonglobal_first, fixtures.nonglobal_second):
        M, O, _ = f()
        pi = minimal_polarization(M, O)
        assert check_polarization(pi).valid and is_acyclic(pi)


def test_cyclic_fixture():
    pi = minimal_polarization(*CYCLIC)
    assert check_polarization(pi).valid
    assert has_cycle(pi) and not is_acyclic(pi)
    with pytest.raises(PreconditionError):
        universal_flow(pi)


def test_acyclic_matches_oracle():
    n = 0
    for M in all_small_maps(3):
        for O in all_well_orientations(M):
            pi = minimal_polarization(M, O)
            assert is_acyclic(pi) == (not has_cycle(pi))
            n += 1
    assert n > 1000


def test_topological_acyclic():
    for n in range(1, 5):
        for t in all_terms(n):
            assert is_acyclic(polarize(t)[2])


# -- universal flow -----------------------------------------------------------

def test_identity_type():
    _, _, pi = polarize(fixtures.term("I"))
    U = universal_flow(pi)
    w = pi.whites()[0]
    assert U.root_type == Arrow(Gen(w, "-"), Gen(w, "+"))
    assert U.constraints == []


def test_b_type_shape():
    _, _, pi = polarize(fixtures.term("B"))
    U = universal_flow(pi)
    assert U.constraints == [] and len(pi.whites()) == 3
    expected = parse_type("[[y+ z+] [[x+ y+] [x+ z+]]]")
    assert match_types([(shape(U.root_type), shape(expected))]) is not None


def test_redex_constraint():
    U = universal_flow(polarize(fixtures.term("redex"))[2])
    assert U.format_root() == "[a- b+]"
    assert U.format_constraints() == ["[c- c+] <= [a+ b-]"]


def test_appendix_b_types_match():
    M, O, pi, U, ren = appendix_b()
    assert genus(M) == 0 and is_bridgeless(M)
    assert len(U.constraints) == 1
    assert ren is not None and len(ren) == len(pi.whites()) == 25


def test_visits_linear():
    for n in range(1, 5):
        for t in all_terms(n):
            U = universal_flow(polarize(t)[2])
            assert U.visits <= 3 * U.pi.M.n_edges
    U = universal_flow(polarize(fixtures.appendix_b_term())[2])
    assert U.visits <= 3 * U.pi.M.n_edges


def test_beta_normal_no_constraints():
    for n in range(1, 5):
        for t in all_terms(n):
            U = universal_flow(polarize(t)[2])
            assert (U.constraints == []) == (not redexes(t.term))


def test_type_syntax():
    t = parse_type("[[a^+ b-] c+]")
    assert t == Arrow(Arrow(Gen("a", "+"), Gen("b", "-")), Gen("c", "+"))
    assert format_type(Arrow(Gen(3, "+"), Gen(4, "-")), {3: "p", 4: "q"}) == "[p+ q-]"
    for bad in ("[a+", "a", "[a+ b+] c+", "]", "[a+ b+ c+]"):
        with pytest.raises(FormatError):
            parse_type(bad)


def test_match_types_bijective():
    a, b = parse_type("[x+ y+]"), parse_type("[p+ p+]")
    assert match_types([(a, b)]) is None
    assert match_types([(parse_type("[x+ y-]"), parse_type("[p+ q+]"))]) is None
    assert match_types([(parse_type("[x+ y-]"), parse_type("[p+ q-]"))]) == {"x": "p", "y": "q"}


# -- instantiation ------------------------------------------------------------

def test_appendix_b_instantiation():
    M, O, pi, U, ren = appendix_b()
    letters = fixtures.appendix_b_assignment()
    asg = {w: letters[nm] for w, nm in ren.items()}
    inst = instantiate(U, asg, K)
    assert inst.ok
    assert check_flow(pi.M, pi.O, K, inst.flow.values).valid
    assert check_flow(M, O, K, inst.contracted).valid
    root = M.root & ~1
    assert all(x != "00" for a, x in inst.contracted.items() if a != root)
    env = {w: (K.index(x), K.index(x)) for w, x in asg.items()}
    c = U.constraints[0]
    lhs, rhs = evaluate(c.lhs, K, env), evaluate(c.rhs, K, env)
    assert lhs == rhs == K.index("10")


def test_appendix_b_flow_colours_tutte():
    M, O, pi, U, ren = appendix_b()
    letters = fixtures.appendix_b_assignment()
    flow = instantiate(U, {w: letters[nm] for w, nm in ren.items()}, K).contracted
    C, origin = close_map(M, with_origin=True)
    colouring = {a: COLORS[flow[origin[a]]] for a in C.edges()}
    assert is_proper_coloring(C, colouring)


def test_appendix_b_mismatch_named():
    M, O, pi, U, ren = appendix_b()
    letters = dict(fixtures.appendix_b_assignment())
    # r occurs once, on the left of the beta constraint only
    letters["r"] = "10"
    asg = {w: letters[nm] for w, nm in ren.items()}
    inst = instantiate(U, asg, K)
    assert not inst.ok
    assert any(v.startswith("constraint at black") for v in inst.violations)


def test_interval_violation_named():
    U = universal_flow(polarize(fixtures.term("I"))[2])
    inst = instantiate(U, {"a": ("2", "0")}, H)
    assert not inst.ok and "interval at white a" in inst.violations[0]


def test_missing_assignment():
    U = universal_flow(polarize(fixtures.term("B"))[2])
    with pytest.raises(PreconditionError):
        instantiate(U, {"a": "1"}, H)


def test_all_unit_assignment():
    for name in ("hat2", "klein_four", "z(3)", "chain_heyting(3)"):
        P = builtin(name)
        I = P.elements[P.unit]
        for t in (fixtures.term("B"), fixtures.term("redex"), fixtures.appendix_b_term()):
            M, O, pi = polarize(t)
            U = universal_flow(pi)
            inst = instantiate(U, {w: I for w in pi.whites()}, P)
            assert inst.ok and check_flow(M, O, P, inst.contracted).valid


def test_search_bubble():
    M, O = fixtures.term_map("bubble")
    U = universal_flow(minimal_polarization(M, O))
    assert search_instantiation(U, K, nowhere_unit=True) is not None
    assert search_instantiation(U, H, nowhere_unit=True) is None


def test_search_one_element_unique():
    P = builtin("one")
    for t in list(all_terms(2)) + [fixtures.term("redex")]:
        U = universal_flow(polarize(t)[2])
        assert len(search_instantiation(U, P, find_all=True)) == 1


def polarized_brute_force(pi, P):
    """Assignments on the subdivided map with equalities at 3-valent vertices
    and in <= out at 2-valent ones."""
    from linflow.flows import vertex_roles
    M = pi.M
    edges = list(M.edges())
    out = []
    for vals in itertools.product(range(P.size), repeat=len(edges)):
        v = dict(zip(edges, vals))
        ok = True
        for w in M.internal_vertices():
            kind, arcs = vertex_roles(M, pi.O, w)
            x = [v[a & ~1] for a in arcs]
            if kind in ("pos", "neg"):
                ok = P.imp[x[0]][x[1]] == x[2]
            else:
                ok = P.le(x[0], x[1])
            if not ok:
                break
        if ok:
            out.append(tuple(P.elements[v[a]] for a in edges))
    return set(out)


def test_instantiation_equals_polarized_flows():
    Ps = [H, builtin("z(2)")] + [P for P in all_imploids(2) if P.left_normal][:6]
    for n in (1, 2):
        for t in list(all_terms(n)) + [fixtures.term("redex")]:
            _, _, pi = polarize(t)
            U = universal_flow(pi)
            for P in Ps:
                found = {tuple(instantiate(U, a, P).flow.values[e] for e in pi.M.edges())
                         for a in search_instantiation(U, P, find_all=True)}
                assert found == polarized_brute_force(pi, P)


def test_instantiations_are_flows():
    Ps = [H, K, builtin("z(3)")] + [P for P in all_imploids(2) if P.left_normal]
    for n in (1, 2, 3):
        for t in all_terms(n):
            M, O, pi = polarize(t)
            U = universal_flow(pi)
            for P in (Ps if n < 3 else Ps[:2]):
                contracted = {tuple(sorted(instantiate(U, a, P).contracted.items()))
                              for a in search_instantiation(U, P, find_all=True)}
                flows = {tuple(sorted(f.values.items())) for f in search_flow(M, O, P, find_all=True)}
                assert contracted <= flows
                # existence of nowhere-unit solutions agrees with the flow search
                assert ((search_instantiation(U, P, nowhere_unit=True) is None)
                        == (search_flow(M, O, P, nowhere_unit=True) is None))
