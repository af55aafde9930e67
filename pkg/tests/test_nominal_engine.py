"""Proof search on nominal programs: solve, the enumeration oracle,
equivariant matching, and derivation checking."""
import random

import pytest

from nomhoas.nominal import parse_goal, parse_program
from nomhoas.nominal.engine import (
    BACKCHAIN,
    NDerivation,
    check_derivation,
    derivation_from_json,
    derivation_to_json,
    equivariant_match,
    oracle_solve,
    solve,
)
from nomhoas.nominal.syntax import (
    GAtom,
    GTrue,
    ground_normalize,
    perm_term,
    substitute_term,
    support,
    term_names,
)
from nomhoas.nominal import alpha_eq
from nomhoas.enumgen import enum_goals
from nomhoas.search import CUTOFF, EXHAUSTED, SearchLimits

TC = """
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

LIM = SearchLimits(max_unfoldings=8, term_size_bound=5, fresh_name_budget=3)


@pytest.fixture(scope="module")
def tc():
    return parse_program(TC)


def test_paper_shaped_derivation(tc):
    sig, delta = tc
    g = parse_goal(sig, "tc(nil, lam(<a>lam(<a>var(a))), arr(alpha, arr(beta, beta)))")
    res = solve(sig, delta, g, LIM)
    assert res.proved
    d = res.derivation
    # backchain -> and -> {fresh, backchain -> and -> {fresh, backchain ...}}
    assert d.rule == BACKCHAIN
    (andn,) = d.children
    assert andn.rule == "AND"
    fresh1, bc2 = andn.children
    assert fresh1.rule == "FRESH" and bc2.rule == BACKCHAIN
    (andn2,) = bc2.children
    fresh2, bc3 = andn2.children
    assert fresh2.rule == "FRESH" and bc3.rule == BACKCHAIN
    assert check_derivation(sig, delta, d)


def test_top_goal_is_true_leaf(tc):
    sig, delta = tc
    res = solve(sig, delta, GTrue(), LIM)
    assert res.proved and res.derivation.rule == "TRUE"


def test_negative_typing_unprovable_at_depth_8(tc):
    sig, delta = tc
    g = parse_goal(sig, "tc(nil, lam(<a>lam(<a>var(a))), arr(alpha, arr(beta, alpha)))")
    res = solve(sig, delta, g, LIM)
    assert not res.proved
    assert res.status in (EXHAUSTED, CUTOFF)


def test_check_rejects_rule_mutation(tc):
    sig, delta = tc
    g = parse_goal(sig, "tc(nil, lam(<a>lam(<a>var(a))), arr(alpha, arr(beta, beta)))")
    d = solve(sig, delta, g, LIM).derivation

    def mutate(node):
        if node.rule == "FRESH":
            return NDerivation("TRUE", node.goal)
        return NDerivation(
            node.rule,
            node.goal,
            witness=node.witness,
            new_name=node.new_name,
            clause_idx=node.clause_idx,
            perm=node.perm,
            theta=node.theta,
            children=tuple(mutate(c) for c in node.children),
        )

    assert not check_derivation(sig, delta, mutate(d))


def test_check_rejects_backchain_witness_mutation(tc):
    sig, delta = tc
    g = parse_goal(sig, "tc(nil, lam(<a>lam(<a>var(a))), arr(alpha, arr(beta, beta)))")
    d = solve(sig, delta, g, LIM).derivation

    def clobber(node):
        if node.rule == BACKCHAIN and node.perm:
            # swap the permutation's effect so head args no longer match
            (x, y), *rest = node.perm
            bad = ((y, y),) if x == y else ((x, x),)
            return NDerivation(
                node.rule,
                node.goal,
                clause_idx=node.clause_idx,
                perm=tuple(rest) or bad,
                theta=node.theta,
                children=node.children,
            )
        return NDerivation(
            node.rule,
            node.goal,
            witness=node.witness,
            new_name=node.new_name,
            clause_idx=node.clause_idx,
            perm=node.perm,
            theta=node.theta,
            children=tuple(clobber(c) for c in node.children),
        )

    mutated = clobber(d)
    assert mutated != d
    assert not check_derivation(sig, delta, mutated)


def test_oracle_new_exists_abstraction_goal(tc):
    sig, delta = tc
    g = parse_goal(sig, "new a. exists X. <a>X = <b>b")
    res = oracle_solve(sig, delta, g, LIM)
    assert res.proved
    new_node = res.derivation
    assert new_node.rule == "NEW"
    ex = new_node.children[0]
    assert ex.rule == "EXISTS"
    # the witness is the name introduced for the new-binder
    assert ex.witness is not None and term_names(ex.witness) == {new_node.new_name}
    assert solve(sig, delta, g, LIM).proved


def test_exists_trivial_witness(tc):
    sig, delta = tc
    g = parse_goal(sig, "exists X. X = alpha")
    for engine in (solve, oracle_solve):
        res = engine(sig, delta, g, LIM)
        assert res.proved
        assert alpha_eq(res.derivation.witness, parse_goal(sig, "alpha = alpha").l)


def test_equivariant_match_lam_clause(tc):
    sig, delta = tc
    g = parse_goal(sig, "tc(nil, lam(<b>var(b)), arr(beta, beta))")
    lam_clause = delta[2]
    matches = list(equivariant_match(sig, g.args, lam_clause, LIM))
    assert matches
    for pi, theta in matches:
        for garg, carg in zip(g.args, lam_clause.args):
            inst = ground_normalize(perm_term(pi, substitute_term(carg, theta)))
            assert alpha_eq(garg, inst)


def test_equivariant_match_identity(tc):
    sig, delta = tc
    # same-name matching via the var clause: tc(G, var(X), T)
    g = parse_goal(sig, "tc(nil, var(a), alpha)")
    var_clause = delta[0]
    matches = list(equivariant_match(sig, g.args, var_clause, LIM))
    assert matches
    pi, theta = matches[0]
    assert alpha_eq(theta["E" if "E" in theta else "X"], parse_goal(sig, "var(a) = var(a)").l.args[0])


def test_equivariant_match_mismatch_is_empty(tc):
    sig, delta = tc
    g = parse_goal(sig, "tc(nil, app(var(a), var(a)), alpha)")
    lam_clause = delta[2]
    assert list(equivariant_match(sig, g.args, lam_clause, LIM)) == []


def test_oracle_and_solve_agree_on_enumerated_goals(tc):
    sig, delta = tc
    names = sorted({n for c in delta for n in c.new_names}, key=lambda n: n.ident)
    goals = enum_goals(sig, "tc", names[:1], max_size=8, count=60, seed=7)
    lim = SearchLimits(max_unfoldings=5, term_size_bound=4, fresh_name_budget=2)
    disagreements = []
    for g in goals:
        r1 = solve(sig, delta, g, lim)
        r2 = oracle_solve(sig, delta, g, lim)
        if r1.proved != r2.proved:
            disagreements.append(g)
    assert not disagreements


def test_soundness_random_lookup_goals(tc):
    sig, delta = tc
    rng = random.Random(11)
    names = [n for c in delta for n in c.new_names]
    goals = enum_goals(sig, "lookup", names[:1], max_size=9, count=80, seed=3)
    sample = rng.sample(goals, min(40, len(goals)))
    for g in sample:
        res = solve(sig, delta, g, LIM)
        if res.proved:
            assert check_derivation(sig, delta, res.derivation)


def test_derivation_groundness(tc):
    sig, delta = tc
    g = parse_goal(sig, "tc(nil, lam(<a>app(var(a), var(a))), arr(arr(alpha, alpha), alpha))")
    res = solve(sig, delta, g, SearchLimits(6, 6, 2))
    if res.proved:
        from nomhoas.nominal.syntax import goal_vars

        def walk(d):
            assert not goal_vars(d.goal)
            for c in d.children:
                walk(c)

        walk(res.derivation)


def test_json_reload_revalidates(tc):
    sig, delta = tc
    g = parse_goal(sig, "tc(nil, lam(<a>lam(<b>var(a))), arr(alpha, arr(beta, alpha)))")
    res = solve(sig, delta, g, LIM)
    assert res.proved
    js = derivation_to_json(res.derivation)
    back = derivation_from_json(sig, delta, js)
    assert check_derivation(sig, delta, back)


def test_equivariance_of_solve(tc):
    sig, delta = tc
    from nomhoas.nominal.syntax import Name, goal_perm

    g = parse_goal(sig, "tc(nil, lam(<a>lam(<b>var(a))), arr(alpha, arr(beta, alpha)))")
    base = solve(sig, delta, g, LIM)
    assert base.proved
    a = Name("a", "vname")
    c = Name("q", "vname")
    g2 = goal_perm(((a, c),), g)
    res2 = solve(sig, delta, g2, LIM)
    assert res2.proved
    assert res2.derivation.depth() == base.derivation.depth()
