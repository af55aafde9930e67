"""Parsing and printing of the .apl format."""
import pytest

from nomhoas.nominal import (
    AbsTy,
    GAtom,
    GNew,
    ParseError,
    parse_goal,
    parse_program,
    parse_term,
    print_program,
)

TC = """
% typing for lambda terms
nametype vname.
kind tm. kind ty. kind ctx.
func var : vname -> tm.
func app : tm, tm -> tm.
func lam : <vname>tm -> tm.
func arr : ty, ty -> ty.
func alpha : ty. func beta : ty.
func nil : ctx.
func bind : vname, ty, ctx -> ctx.
pred tc : ctx, tm, ty.
pred lookup : vname, ty, ctx.

tc(G, var(X), T) :- lookup(X, T, G).
tc(G, app(E1, E2), T') :- exists T. tc(G, E1, arr(T, T')), tc(G, E2, T).
tc(G, lam(<x>E), arr(T, T')) :- x # G, tc(bind(x, T, G), E, T').
lookup(X, T, bind(X, T, G)).
lookup(X, T, bind(Y, S, G)) :- X # Y, lookup(X, T, G).
"""


def test_tc_program_shape():
    sig, clauses = parse_program(TC)
    assert [c.pred for c in clauses] == ["tc", "tc", "tc", "lookup", "lookup"]
    assert sum(1 for c in clauses if c.pred == "tc") == 3
    lam_clause = clauses[2]
    assert [n.ident for n in lam_clause.new_names] == ["x"]
    assert [v for v, _ in lam_clause.universals] == ["G", "E", "T", "T'"]
    assert sig.func_syms["lam"].args == (AbsTy("vname", "tm"),)


def test_empty_program():
    sig, clauses = parse_program("nametype n. kind b.")
    assert clauses == ()


def test_undeclared_predicate_is_error():
    with pytest.raises(ParseError):
        parse_program("nametype n. kind b. pred p : b.\nq(X).")


def test_undeclared_function_is_error():
    with pytest.raises(ParseError):
        parse_program("nametype n. kind b. pred p : b.\np(h(X)).")


def test_type_mismatch_reported():
    src = "nametype n. kind b. func c : b. pred p : n.\np(c)."
    with pytest.raises(ParseError):
        parse_program(src)


def test_explicit_quantifier_form():
    src = """
    nametype n. kind b. func c : b. func h : n -> b. pred p : b, b.
    new x. forall Y. p(h(x), Y) :- Y = h(x).
    """
    _, clauses = parse_program(src)
    (c,) = clauses
    assert [n.ident for n in c.new_names] == ["x"]
    assert [v for v, _ in c.universals] == ["Y"]


def test_explicit_list_must_cover_all_free_symbols():
    src = """
    nametype n. kind b. func h : n -> b. pred p : b.
    new x. p(h(y)).
    """
    with pytest.raises(ParseError):
        parse_program(src)


def test_round_trip_structural_equality():
    sig, clauses = parse_program(TC)
    sig2, clauses2 = parse_program(print_program(sig, clauses))
    assert sig2 == sig
    assert clauses2 == clauses


def test_goal_parsing_and_groundness():
    sig, _ = parse_program(TC)
    g = parse_goal(sig, "tc(nil, var(a), alpha)")
    assert isinstance(g, GAtom)
    with pytest.raises(ParseError):
        parse_goal(sig, "tc(nil, var(X), alpha)")


def test_goal_quantifier_scope_is_greedy():
    sig, _ = parse_program(TC)
    g = parse_goal(sig, "new x. tc(nil, var(x), alpha), x # nil")
    assert isinstance(g, GNew)


def test_swap_syntax():
    sig, _ = parse_program(TC)
    t = parse_term(sig, "(a ~ b) * lam(<a>var(a))", expected="tm")
    from nomhoas.nominal.syntax import Swap

    assert isinstance(t, Swap)


def test_comment_and_whitespace_insensitive():
    sig, clauses = parse_program("nametype n.%x\nkind b.  func c:b. pred p:b.\n p(  c ) .")
    assert len(clauses) == 1


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as ei:
        parse_program("nametype n. kind b. pred p : b.\np(] .")
    assert ":" in str(ei.value)
