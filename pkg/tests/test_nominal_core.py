"""Ground relations on nominal terms: swapping, freshness, alpha-equality,
support, and substitution, checked against independent oracles."""
import itertools

import pytest

from nomhoas.nominal import (
    Abs,
    App,
    GAnd,
    GEq,
    GExists,
    GFresh,
    GNew,
    Name,
    NameRef,
    NominalError,
    Swap,
    Var,
    alpha_eq,
    freshness_check,
    parse_program,
    substitute_goal,
    substitute_term,
    support,
    swap_apply,
)
from nomhoas.nominal.syntax import perm_term, term_size

a = Name("a", "nm")
b = Name("b", "nm")
c = Name("c", "nm")
ra, rb, rc = NameRef(a), NameRef(b), NameRef(c)
NAMES = [a, b, c]


def f(*args):
    return App("f", args)


def g1(x):
    return App("g", (x,))


# --- independent oracles -----------------------------------------------

def swap_oracle(x, y, t):
    """Plain structural recursion, written separately from the library."""
    if isinstance(t, NameRef):
        if t.name == x:
            return NameRef(y)
        if t.name == y:
            return NameRef(x)
        return t
    if isinstance(t, App):
        return App(t.fsym, tuple(swap_oracle(x, y, u) for u in t.args))
    if isinstance(t, Abs):
        return Abs(swap_oracle(x, y, t.binder), swap_oracle(x, y, t.body))
    raise AssertionError(t)


def canon_oracle(t, env=()):
    """de Bruijn-style canonical form: alpha-equal terms get equal forms."""
    if isinstance(t, NameRef):
        for i, n in enumerate(reversed(env)):
            if n == t.name:
                return ("ix", i)
        return ("free", t.name)
    if isinstance(t, App):
        return ("app", t.fsym, tuple(canon_oracle(u, env) for u in t.args))
    if isinstance(t, Abs):
        return ("abs", canon_oracle(t.body, env + (t.binder.name,)))
    raise AssertionError(t)


def alpha_oracle(t, u):
    return canon_oracle(t) == canon_oracle(u)


def enum_terms(max_size):
    """All ground terms over names a,b,c and f/2, g/1 up to a node count,
    plus abstractions at every level."""
    by_size = {1: [ra, rb, rc]}
    for s in range(2, max_size + 1):
        terms = []
        for n in (a, b, c):
            terms.extend(Abs(NameRef(n), t) for t in by_size[s - 1])
        terms.extend(g1(t) for t in by_size[s - 1])
        for s1 in range(1, s - 1):
            s2 = s - 1 - s1
            if s2 >= 1:
                terms.extend(f(t1, t2) for t1 in by_size[s1] for t2 in by_size[s2])
        by_size[s] = terms
    return [t for s in range(1, max_size + 1) for t in by_size[s]]


SMALL = enum_terms(4)


# --- swapping -----------------------------------------------------------

def test_swap_on_names():
    assert swap_apply(((a, b),), ra) == rb
    assert swap_apply(((a, b),), rb) == ra
    assert swap_apply(((a, b),), rc) == rc


def test_swap_under_abstraction():
    t = Abs(ra, f(ra, rc))
    assert swap_apply(((a, b),), t) == Abs(rb, f(rb, rc))


def test_swap_matches_oracle_everywhere():
    for t in SMALL:
        for x, y in itertools.permutations(NAMES, 2):
            assert swap_apply(((x, y),), t) == swap_oracle(x, y, t)


def test_swap_involution():
    for t in SMALL:
        for x, y in itertools.combinations(NAMES, 2):
            assert swap_apply(((x, y),), swap_apply(((x, y),), t)) == t


def test_swap_evaluates_syntactic_swaps():
    t = Swap(ra, rb, Abs(ra, rb))
    assert swap_apply((), t) == Abs(rb, ra)


def test_swap_rejects_mixed_name_types():
    d = Name("d", "other")
    with pytest.raises(NominalError):
        swap_apply((), Swap(ra, NameRef(d), rc))


# --- freshness ----------------------------------------------------------

def test_fresh_distinct_names():
    assert freshness_check(a, rb)
    assert not freshness_check(a, ra)


def test_fresh_under_own_abstraction():
    assert freshness_check(a, Abs(ra, ra))


def test_fresh_fails_on_occurrence():
    assert not freshness_check(a, f(ra, rb))


def test_freshness_equivariant():
    for t in SMALL:
        for x, y in itertools.permutations(NAMES, 2):
            pi = ((x, y),)
            for n in NAMES:
                moved = x if n == y else (y if n == x else n)
                assert freshness_check(moved, swap_apply(pi, t)) == freshness_check(n, t)


# --- alpha equality -----------------------------------------------------

def test_alpha_abstraction_rename():
    assert alpha_eq(Abs(ra, ra), Abs(rb, rb))


def test_alpha_reflexive_app():
    t = f(ra, rb)
    assert alpha_eq(t, t)


def test_alpha_crossed_binders_differ():
    # <a>b and <b>a denote different abstractions
    assert not alpha_eq(Abs(ra, rb), Abs(rb, ra))
    assert not alpha_oracle(Abs(ra, rb), Abs(rb, ra))


def test_alpha_matches_canonical_oracle():
    for t in SMALL:
        for u in SMALL:
            assert alpha_eq(t, u) == alpha_oracle(t, u), (t, u)


def test_alpha_equivalence_relation():
    # agreement with the canonical-form oracle on every ordered pair makes
    # alpha_eq literally an equality of canonical forms, so reflexivity,
    # symmetry, and transitivity are exhaustive consequences
    canon = {id(t): canon_oracle(t) for t in SMALL}
    for t in SMALL:
        assert alpha_eq(t, t)
        for u in SMALL:
            assert alpha_eq(t, u) == (canon[id(t)] == canon[id(u)])


def test_alpha_equivariant():
    for t in SMALL:
        for u in SMALL:
            pi = ((a, b),)
            assert alpha_eq(swap_apply(pi, t), swap_apply(pi, u)) == alpha_eq(t, u)


# --- support ------------------------------------------------------------

def test_support_examples():
    assert support(Abs(ra, ra)) == set()
    assert support(f(ra, rb)) == {a, b}
    assert support(Abs(ra, rb)) == {b}


def test_support_is_freshness_complement():
    for t in SMALL:
        assert support(t) == {n for n in NAMES if not freshness_check(n, t)}


def test_empty_support_means_fresh_for_all():
    for t in SMALL:
        if not support(t):
            assert all(freshness_check(n, t) for n in NAMES)


# --- substitution -------------------------------------------------------

def test_substitution_captures_in_abstraction():
    out = substitute_term(Abs(ra, Var("X", "nm")), {"X": ra})
    assert out == Abs(ra, ra)


def test_substitution_other_variable_untouched():
    assert substitute_term(Var("X", "nm"), {"Y": ra}) == Var("X", "nm")


def test_substitution_renames_new_binder():
    out = substitute_goal(GNew(b, GEq(Var("X", "nm"), rb)), {"X": rb})
    assert isinstance(out, GNew)
    fresh = out.name
    assert fresh != b
    assert out.body == GEq(rb, NameRef(fresh))
    assert support(rb) == {b}


def test_substitution_shadows_exists():
    g = GExists("X", "nm", GEq(Var("X", "nm"), ra))
    assert substitute_goal(g, {"X": rb}) == g


def test_perm_fixes_variables():
    assert perm_term(((a, b),), Var("X", "nm")) == Var("X", "nm")


def test_term_size_measure():
    assert term_size(ra) == 1
    assert term_size(g1(ra)) == 2
    assert term_size(Abs(ra, g1(ra))) == 3
    assert term_size(f(ra, rb)) == 3
