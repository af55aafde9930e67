"""Proof search for ground nominal goals.

Two modes share one derivation format: `solve` delays instantiations with
metavariables and nominal unification, falling back to bounded enumeration
for anything outside that fragment; `oracle_solve` enumerates ground
instantiation terms and permutations exhaustively within the limits.
Derivations record enough witnesses to be re-checked node by node.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

from ..enumgen import enum_ground_terms
from ..search import CUTOFF, EXHAUSTED, PROVED, SearchLimits
from .syntax import (
    Abs,
    App,
    GAnd,
    GAtom,
    GEq,
    GExists,
    GFresh,
    GNew,
    GOr,
    GTrue,
    Goal,
    Name,
    NameRef,
    NameSupply,
    NominalError,
    Perm,
    ProgramClause,
    Signature,
    Swap,
    Term,
    Ty,
    Var,
    alpha_eq,
    check_goal,
    freshness_check,
    goal_free_names,
    goal_perm,
    goal_vars,
    eval_swaps,
    ground_normalize,
    is_ground,
    perm_from_map,
    perm_inverse,
    perm_term,
    substitute_goal,
    substitute_term,
    support,
    term_names,
    term_size,
    term_vars,
)
from .unify import EMPTY_STORE, NotSolvable, Store, add_fresh, resolve, unify
from .parser import parse_goal, parse_term
from .printer import print_goal, print_term

# rule labels
TRUE = "TRUE"
FRESH = "FRESH"
EQUAL = "EQUAL"
AND = "AND"
OR_LEFT = "OR-left"
OR_RIGHT = "OR-right"
EXISTS = "EXISTS"
NEW = "NEW"
BACKCHAIN = "BACKCHAIN"


@dataclass(frozen=True)
class NDerivation:
    rule: str
    goal: Goal
    witness: Term | None = None  # EXISTS instantiation
    new_name: Name | None = None  # NEW's choice of fresh name
    clause_idx: int | None = None  # BACKCHAIN clause
    perm: Perm | None = None
    theta: tuple[tuple[str, Term], ...] | None = None  # clause-side, ground
    children: tuple["NDerivation", ...] = ()

    def skeleton(self):
        return (self.rule, tuple(c.skeleton() for c in self.children))

    def count_rule(self, rule: str) -> int:
        return (self.rule == rule) + sum(c.count_rule(rule) for c in self.children)

    def depth(self) -> int:
        """Backchain applications on the deepest branch."""
        sub = max((c.depth() for c in self.children), default=0)
        return sub + (1 if self.rule == BACKCHAIN else 0)


@dataclass(frozen=True)
class NResult:
    derivation: NDerivation | None
    status: str  # proved | exhausted | cutoff

    @property
    def proved(self) -> bool:
        return self.derivation is not None


# ---------------------------------------------------------------------------
# Canonical goal comparison (alpha for exists/new binders)


def _canon_goal(g: Goal, counter: list[int]) -> Goal:
    match g:
        case GTrue() | GAtom() | GFresh() | GEq():
            return g
        case GAnd(g1, g2):
            return GAnd(_canon_goal(g1, counter), _canon_goal(g2, counter))
        case GOr(g1, g2):
            return GOr(_canon_goal(g1, counter), _canon_goal(g2, counter))
        case GExists(x, ty, body):
            counter[0] += 1
            nx = f"%v{counter[0]}"
            body = substitute_goal(body, {x: Var(nx, ty)})
            return GExists(nx, ty, _canon_goal(body, counter))
        case GNew(a, body):
            counter[0] += 1
            na = Name(f"%n{counter[0]}", a.ntype)
            body = goal_perm(((a, na),), body)
            return GNew(na, _canon_goal(body, counter))
    raise TypeError(f"not a goal: {g!r}")


def goal_alpha_equal(g1: Goal, g2: Goal) -> bool:
    return _canon_goal(g1, [0]) == _canon_goal(g2, [0])


def goal_ground_normalize(g: Goal) -> Goal:
    """Evaluate syntactic swappings in every term of a ground goal."""
    match g:
        case GTrue():
            return g
        case GAtom(p, args):
            return GAtom(p, tuple(eval_swaps(a) for a in args))
        case GFresh(l, r):
            return GFresh(eval_swaps(l), eval_swaps(r))
        case GEq(l, r):
            return GEq(eval_swaps(l), eval_swaps(r))
        case GAnd(g1, g2):
            return GAnd(goal_ground_normalize(g1), goal_ground_normalize(g2))
        case GOr(g1, g2):
            return GOr(goal_ground_normalize(g1), goal_ground_normalize(g2))
        case GExists(x, ty, body):
            return GExists(x, ty, goal_ground_normalize(body))
        case GNew(a, body):
            return GNew(a, goal_ground_normalize(body))
    raise TypeError(f"not a goal: {g!r}")


# ---------------------------------------------------------------------------
# Search state for the unification-based engine


@dataclass(frozen=True)
class _State:
    store: Store
    avail: frozenset[Name]
    fresh_used: tuple[tuple[str, int], ...] = ()

    def fresh_count(self, ntype: str) -> int:
        return dict(self.fresh_used).get(ntype, 0)

    def bump_fresh(self, ntype: str) -> "_State":
        d = dict(self.fresh_used)
        d[ntype] = d.get(ntype, 0) + 1
        return _State(self.store, self.avail, tuple(sorted(d.items())))

    def with_store(self, store: Store) -> "_State":
        return _State(store, self.avail, self.fresh_used)

    def add_avail(self, *names: Name) -> "_State":
        return _State(self.store, self.avail | set(names), self.fresh_used)


class _Ctx:
    def __init__(self, sig: Signature, delta, lim: SearchLimits):
        self.sig = sig
        self.delta = tuple(delta)
        self.lim = lim
        self.vtypes: dict[str, Ty] = {}
        self.depth_cutoff = False
        self.limit_cutoff = False

    def new_metavar(self, stem: str, ty: Ty) -> Var:
        ident = NameSupply.fresh_ident(stem if stem and stem[0].isupper() else "X")
        self.vtypes[ident] = ty
        return Var(ident, ty)


def _sorted_names(names) -> list[Name]:
    return sorted(names, key=lambda n: (n.ntype, n.ident))


def _alloc_fresh(state: _State, ctx: _Ctx, stem: str, ntype: str) -> tuple[Name, _State] | None:
    if state.fresh_count(ntype) >= ctx.lim.fresh_name_budget:
        ctx.limit_cutoff = True
        return None
    n = NameSupply.fresh_name(stem, ntype)
    return n, state.bump_fresh(ntype).add_avail(n)


def _unbound_vars(ctx: _Ctx, state: _State, idents) -> list[str]:
    return [x for x in idents if x in ctx.vtypes and not state.store.bound(x)]


def _enum_fill_candidates(ctx: _Ctx, state: _State, ty: Ty):
    names = _sorted_names(state.avail)
    yield from enum_ground_terms(ctx.sig, ty, names, ctx.lim.term_size_bound)


def _retry_outside_fragment(
    op, vars_involved: set[str], state: _State, ctx: _Ctx
) -> Iterator[_State]:
    """Bounded enumeration fallback: ground an offending metavariable and
    retry the failed operation."""
    todo = _unbound_vars(ctx, state, sorted(vars_involved))
    if not todo:
        ctx.limit_cutoff = True
        return
    x = todo[0]
    ty = ctx.vtypes[x]
    for t in _enum_fill_candidates(ctx, state, ty):
        st2 = unify(Var(x, ty), t, state.store)
        if st2 is None:
            continue
        yield from _try_op(op, state.with_store(st2), ctx)
    ctx.limit_cutoff = True  # enumeration was bounded


def _try_op(op, state: _State, ctx: _Ctx) -> Iterator[_State]:
    """Run a store->store|None operation, falling back to enumeration when
    it leaves the solvable fragment."""
    try:
        st2 = op(state.store)
    except NotSolvable as e:
        yield from _retry_outside_fragment(op, e.vars_involved, state, ctx)
        return
    if st2 is not None:
        yield state.with_store(st2)


# ---------------------------------------------------------------------------
# Clause matching (unification path)


def _match_clause(
    args: tuple[Term, ...], clause: ProgramClause, state: _State, ctx: _Ctx
) -> Iterator[tuple[Perm, dict[str, Var], _State]]:
    """Yield (pi, clause-var renaming, state) such that the goal args unify
    with pi applied to the renamed clause head."""
    k = len(clause.new_names)
    perms: list[tuple[Perm, _State]] = []
    if k == 0:
        perms.append(((), state))
    else:
        base = _sorted_names(state.avail)
        fresh_per_name = [
            NameSupply.fresh_name(cn.ident, cn.ntype) for cn in clause.new_names
        ]
        fresh_set = set(fresh_per_name)

        def assign(i: int, used: set[Name], acc: dict[Name, Name]):
            if i == k:
                yield dict(acc)
                return
            cn = clause.new_names[i]
            cands = [n for n in base if n.ntype == cn.ntype and n not in used]
            cands.append(fresh_per_name[i])
            for n in cands:
                acc[cn] = n
                yield from assign(i + 1, used | {n}, acc)
            acc.pop(cn, None)

        for mapping in assign(0, set(), {}):
            # charge the fresh-name budget only for fresh names actually used
            st = state
            over_budget = False
            for n in mapping.values():
                if n in fresh_set:
                    if st.fresh_count(n.ntype) >= ctx.lim.fresh_name_budget:
                        ctx.limit_cutoff = True
                        over_budget = True
                        break
                    st = st.bump_fresh(n.ntype)
                st = st.add_avail(n)
            if over_budget:
                continue
            try:
                pi = perm_from_map(mapping)
            except NominalError:
                continue
            perms.append((pi, st))

    for pi, st0 in perms:
        vmap = {x: ctx.new_metavar(x, ty) for x, ty in clause.universals}
        head = [substitute_term(perm_term(pi, a), vmap) for a in clause.args]

        def unify_all(store: Store, head=head, args=args):
            out = store
            for pat, goal_arg in zip(head, args):
                out = unify(pat, goal_arg, out)
                if out is None:
                    return None
            return out

        for st1 in _try_op(unify_all, st0, ctx):
            yield pi, vmap, st1


# ---------------------------------------------------------------------------
# The prover


def _prove(g: Goal, state: _State, depth: int, ctx: _Ctx) -> Iterator[tuple[_State, NDerivation]]:
    match g:
        case GTrue():
            yield state, NDerivation(TRUE, g)
        case GEq(l, r):
            for st in _try_op(lambda s: unify(l, r, s), state, ctx):
                yield st, NDerivation(EQUAL, g)
        case GFresh(l, r):
            lr = resolve(l, state.store)
            if isinstance(lr, NameRef):
                for st in _try_op(lambda s: add_fresh(lr.name, r, s), state, ctx):
                    yield st, NDerivation(FRESH, g)
            elif isinstance(lr, Var):
                # name-valued variable: enumerate candidate names
                for cand in _enum_fill_candidates(ctx, state, lr.ty):
                    st2 = unify(lr, cand, state.store)
                    if st2 is None:
                        continue
                    assert isinstance(cand, NameRef)
                    for st in _try_op(lambda s: add_fresh(cand.name, r, s), state.with_store(st2), ctx):
                        yield st, NDerivation(FRESH, g)
                got = _alloc_fresh(state, ctx, "n", lr.ty) if isinstance(lr.ty, str) else None
                if got is not None:
                    n, st_f = got
                    st2 = unify(lr, NameRef(n), st_f.store)
                    if st2 is not None:
                        for st in _try_op(lambda s: add_fresh(n, r, s), st_f.with_store(st2), ctx):
                            yield st, NDerivation(FRESH, g)
            else:
                return  # freshness left side is not name-typed: no proof
        case GAnd(g1, g2):
            for st1, d1 in _prove(g1, state, depth, ctx):
                for st2, d2 in _prove(g2, st1, depth, ctx):
                    yield st2, NDerivation(AND, g, children=(d1, d2))
        case GOr(g1, g2):
            for st, d in _prove(g1, state, depth, ctx):
                yield st, NDerivation(OR_LEFT, g, children=(d,))
            for st, d in _prove(g2, state, depth, ctx):
                yield st, NDerivation(OR_RIGHT, g, children=(d,))
        case GExists(x, ty, body):
            m = ctx.new_metavar(x, ty)
            inner = substitute_goal(body, {x: m})
            for st, d in _prove(inner, state, depth, ctx):
                yield st, NDerivation(EXISTS, g, witness=m, children=(d,))
        case GNew(a, body):
            # binder freshening is forced by the rule, not a search choice,
            # so it does not consume the fresh-name budget
            a2 = NameSupply.fresh_name(a.ident, a.ntype)
            st0 = state.add_avail(a2)
            # scope discipline: earlier metavariables may not use the new name
            store = st0.store
            for x in _unbound_vars(ctx, st0, list(ctx.vtypes)):
                nxt = add_fresh(a2, Var(x, ctx.vtypes[x]), store)
                if nxt is None:
                    return
                store = nxt
            inner = goal_perm(((a, a2),), body)
            for st, d in _prove(inner, st0.with_store(store), depth, ctx):
                yield st, NDerivation(NEW, g, new_name=a2, children=(d,))
        case GAtom(_, args):
            if depth <= 0:
                ctx.depth_cutoff = True
                return
            for clause in ctx.delta:
                if clause.pred != g.pred:
                    continue
                for pi, vmap, st1 in _match_clause(args, clause, state, ctx):
                    inner = substitute_goal(goal_perm(pi, clause.body), vmap)
                    for st2, d in _prove(inner, st1, depth - 1, ctx):
                        yield st2, NDerivation(
                            BACKCHAIN,
                            g,
                            clause_idx=clause.idx,
                            perm=pi,
                            theta=tuple(sorted(vmap.items())),
                            children=(d,),
                        )
    return


# ---------------------------------------------------------------------------
# Extraction of ground derivations


def _final_fill(ctx: _Ctx, state: _State) -> dict[str, Term] | None:
    """Ground every unbound metavariable, respecting freshness constraints."""
    fill: dict[str, Term] = {}
    store = state.store
    st = state
    for x, ty in sorted(ctx.vtypes.items()):
        if store.bound(x):
            continue
        banned = {a for a, y in store.fresh if y == x}
        chosen = None
        for t in _enum_fill_candidates(ctx, st, ty):
            if not (support(t) & banned):
                chosen = t
                break
        if chosen is None and isinstance(ty, str) and ty in ctx.sig.name_types:
            got = _alloc_fresh(st, ctx, "n", ty)
            if got is not None:
                n, st = got
                chosen = NameRef(n)
        if chosen is None:
            ctx.limit_cutoff = True
            return None
        fill[x] = chosen
    return fill


def _ground_term(t: Term, store: Store, fill: dict[str, Term]) -> Term:
    t = resolve(t, store)
    t = substitute_term(t, fill)
    return ground_normalize(t)


def _ground_goal(g: Goal, store: Store, fill: dict[str, Term]) -> Goal:
    theta = {x: _ground_term(Var(x, "?"), store, fill) for x in goal_vars(g)}
    for x, v in theta.items():
        if term_vars(v):
            raise NominalError(f"metavariable {x} not grounded")
    return goal_ground_normalize(substitute_goal(g, theta))


def _extract(node: NDerivation, store: Store, fill: dict[str, Term]) -> NDerivation:
    goal = _ground_goal(node.goal, store, fill)
    witness = _ground_term(node.witness, store, fill) if node.witness is not None else None
    theta = None
    if node.theta is not None:
        assert node.perm is not None
        inv = perm_inverse(node.perm)
        theta = tuple(
            (x, ground_normalize(perm_term(inv, _ground_term(v, store, fill))))
            for x, v in node.theta
        )
    children = tuple(_extract(c, store, fill) for c in node.children)
    return NDerivation(
        node.rule,
        goal,
        witness=witness,
        new_name=node.new_name,
        clause_idx=node.clause_idx,
        perm=node.perm,
        theta=theta,
        children=children,
    )


# ---------------------------------------------------------------------------
# Public entry points


def _initial_avail(delta, g: Goal) -> frozenset[Name]:
    names: set[Name] = set(goal_free_names(g))
    for c in delta:
        names |= set(c.new_names)
        for a in c.args:
            names |= term_names(a)
        names |= goal_free_names(c.body)
    return frozenset(names)


def solve(
    sig: Signature,
    delta,
    g: Goal,
    lim: SearchLimits = SearchLimits(),
    check: bool = True,
) -> NResult:
    """Unification-based search for a derivation of the ground goal g."""
    if goal_vars(g):
        raise NominalError("solve requires a ground goal")
    check_goal(sig, g)
    g = goal_ground_normalize(g)
    limit_hit = False
    for depth in range(1, lim.max_unfoldings + 1):
        ctx = _Ctx(sig, delta, lim)
        state = _State(EMPTY_STORE, _initial_avail(delta, g))
        for st, node in _prove(g, state, depth, ctx):
            fill = _final_fill(ctx, st)
            if fill is None:
                continue
            d = _extract(node, st.store, fill)
            if check:
                assert check_derivation(sig, delta, d), "internal: unchecked derivation"
            return NResult(d, PROVED)
        limit_hit = limit_hit or ctx.limit_cutoff
        if not ctx.depth_cutoff:
            return NResult(None, CUTOFF if limit_hit else EXHAUSTED)
    return NResult(None, CUTOFF)


# ---------------------------------------------------------------------------
# Oracle: exhaustive ground enumeration


def _omatch(pat: Term, t: Term, bnd: dict[str, Term], avail: list[Name]) -> Iterator[dict[str, Term]]:
    match pat:
        case NameRef():
            if pat == t:
                yield bnd
        case Var(x, _):
            if x in bnd:
                if alpha_eq(bnd[x], t):
                    yield bnd
            else:
                yield {**bnd, x: t}
        case App(f, pargs):
            if isinstance(t, App) and t.fsym == f and len(t.args) == len(pargs):

                def go(i: int, b: dict[str, Term]) -> Iterator[dict[str, Term]]:
                    if i == len(pargs):
                        yield b
                        return
                    for b2 in _omatch(pargs[i], t.args[i], b, avail):
                        yield from go(i + 1, b2)

                yield from go(0, bnd)
        case Abs(pb, pbody):
            if not isinstance(t, Abs):
                return
            assert isinstance(t.binder, NameRef)
            b_t = t.binder.name
            binder_cands: list[Name]
            if isinstance(pb, NameRef):
                binder_cands = [pb.name]
            elif isinstance(pb, Var):
                if pb.ident in bnd:
                    v = bnd[pb.ident]
                    if not isinstance(v, NameRef):
                        return
                    binder_cands = [v.name]
                else:
                    binder_cands = [n for n in avail if n.ntype == b_t.ntype]
            else:
                return
            for a in binder_cands:
                b2 = bnd if isinstance(pb, NameRef) or (isinstance(pb, Var) and pb.ident in bnd) \
                    else {**bnd, pb.ident: NameRef(a)}
                if a == b_t:
                    yield from _omatch(pbody, t.body, b2, avail)
                elif a.ntype == b_t.ntype and freshness_check(a, t.body):
                    yield from _omatch(pbody, swap_apply_pair(a, b_t, t.body), b2, avail)
        case Swap(pl, pr, pbody):
            def resolved(side):
                if isinstance(side, NameRef):
                    return [side.name]
                if isinstance(side, Var) and side.ident in bnd:
                    v = bnd[side.ident]
                    return [v.name] if isinstance(v, NameRef) else []
                if isinstance(side, Var):
                    return None  # unbound: enumerate
                return []

            lc, rc = resolved(pl), resolved(pr)
            lcands = lc if lc is not None else [n for n in avail]
            rcands = rc if rc is not None else [n for n in avail]
            for ln in lcands:
                b1 = bnd if lc is not None else {**bnd, pl.ident: NameRef(ln)}
                for rn in rcands:
                    if rn.ntype != ln.ntype:
                        continue
                    b2 = b1 if rc is not None else {**b1, pr.ident: NameRef(rn)}
                    yield from _omatch(pbody, swap_apply_pair(ln, rn, t), b2, avail)
        case _:
            return


def swap_apply_pair(a: Name, b: Name, t: Term) -> Term:
    return ground_normalize(perm_term(((a, b),), t))


def _perm_assignments(new_names, avail: list[Name]) -> Iterator[dict[Name, Name]]:
    def assign(i: int, used: set[Name], acc: dict[Name, Name]):
        if i == len(new_names):
            yield dict(acc)
            return
        cn = new_names[i]
        for n in avail:
            if n.ntype == cn.ntype and n not in used:
                acc[cn] = n
                yield from assign(i + 1, used | {n}, acc)
        acc.pop(cn, None)

    yield from assign(0, set(), {})


class _OCtx:
    def __init__(self, sig: Signature, delta, lim: SearchLimits):
        self.sig = sig
        self.delta = tuple(delta)
        self.lim = lim
        self.depth_cutoff = False
        self.limit_cutoff = False


def _oprove(g: Goal, depth: int, ctx: _OCtx, avail: list[Name]) -> Iterator[NDerivation]:
    match g:
        case GTrue():
            yield NDerivation(TRUE, g)
        case GFresh(l, r):
            if isinstance(l, NameRef) and freshness_check(l.name, r):
                yield NDerivation(FRESH, g)
        case GEq(l, r):
            if alpha_eq(l, r):
                yield NDerivation(EQUAL, g)
        case GAnd(g1, g2):
            for d1 in _oprove(g1, depth, ctx, avail):
                for d2 in _oprove(g2, depth, ctx, avail):
                    yield NDerivation(AND, g, children=(d1, d2))
        case GOr(g1, g2):
            for d in _oprove(g1, depth, ctx, avail):
                yield NDerivation(OR_LEFT, g, children=(d,))
            for d in _oprove(g2, depth, ctx, avail):
                yield NDerivation(OR_RIGHT, g, children=(d,))
        case GExists(x, ty, body):
            for t in enum_ground_terms(ctx.sig, ty, avail, ctx.lim.term_size_bound):
                inner = goal_ground_normalize(substitute_goal(body, {x: t}))
                for d in _oprove(inner, depth, ctx, avail):
                    yield NDerivation(EXISTS, g, witness=t, children=(d,))
            ctx.limit_cutoff = True  # enumeration is size-bounded
        case GNew(a, body):
            free = goal_free_names(body) - {a}
            cands = [a] + [n for n in avail if n.ntype == a.ntype]
            chosen = next((n for n in cands if n not in free), None)
            if chosen is None:
                ctx.limit_cutoff = True
                return
            inner = goal_perm(((a, chosen),), body) if chosen != a else body
            avail2 = avail if chosen in avail else _sorted_names(set(avail) | {chosen})
            for d in _oprove(inner, depth, ctx, avail2):
                yield NDerivation(NEW, g, new_name=chosen, children=(d,))
        case GAtom(_, args):
            if depth <= 0:
                ctx.depth_cutoff = True
                return
            for clause in ctx.delta:
                if clause.pred != g.pred:
                    continue
                for mapping in _perm_assignments(clause.new_names, avail):
                    try:
                        pi = perm_from_map(mapping)
                    except NominalError:
                        continue
                    pats = [perm_term(pi, a) for a in clause.args]

                    def match_all(i: int, bnd: dict[str, Term]) -> Iterator[dict[str, Term]]:
                        if i == len(pats):
                            yield bnd
                            return
                        for b2 in _omatch(pats[i], args[i], bnd, avail):
                            yield from match_all(i + 1, b2)

                    for bnd in match_all(0, {}):
                        # enumerate clause variables that occur only in the body
                        rest = [x for x, _ in clause.universals if x not in bnd]

                        def enum_rest(i: int, b: dict[str, Term]) -> Iterator[dict[str, Term]]:
                            if i == len(rest):
                                yield b
                                return
                            ty = dict(clause.universals)[rest[i]]
                            for t in enum_ground_terms(ctx.sig, ty, avail, ctx.lim.term_size_bound):
                                yield from enum_rest(i + 1, {**b, rest[i]: t})
                            ctx.limit_cutoff = True

                        for bfull in enum_rest(0, dict(bnd)):
                            inner = goal_ground_normalize(
                                substitute_goal(goal_perm(pi, clause.body), bfull)
                            )
                            inv = perm_inverse(pi)
                            theta = tuple(
                                sorted(
                                    (x, ground_normalize(perm_term(inv, v)))
                                    for x, v in bfull.items()
                                )
                            )
                            for d in _oprove(inner, depth - 1, ctx, avail):
                                yield NDerivation(
                                    BACKCHAIN,
                                    g,
                                    clause_idx=clause.idx,
                                    perm=pi,
                                    theta=theta,
                                    children=(d,),
                                )
    return


def oracle_solve(
    sig: Signature,
    delta,
    g: Goal,
    lim: SearchLimits = SearchLimits(),
    check: bool = True,
) -> NResult:
    """Exhaustive enumeration within the limits; same contract as solve."""
    if goal_vars(g):
        raise NominalError("oracle_solve requires a ground goal")
    check_goal(sig, g)
    g = goal_ground_normalize(g)
    avail: set[Name] = set(_initial_avail(delta, g))
    for nt in sorted(sig.name_types):
        for _ in range(lim.fresh_name_budget):
            avail.add(NameSupply.fresh_name("n", nt))
    avail_l = _sorted_names(avail)
    limit_hit = False
    for depth in range(1, lim.max_unfoldings + 1):
        ctx = _OCtx(sig, delta, lim)
        for d in _oprove(g, depth, ctx, avail_l):
            if check:
                assert check_derivation(sig, delta, d), "internal: unchecked oracle derivation"
            return NResult(d, PROVED)
        limit_hit = limit_hit or ctx.limit_cutoff
        if not ctx.depth_cutoff:
            return NResult(None, CUTOFF if limit_hit else EXHAUSTED)
    return NResult(None, CUTOFF)


def equivariant_match(
    sig: Signature,
    goal_args: tuple[Term, ...],
    clause: ProgramClause,
    lim: SearchLimits = SearchLimits(),
) -> Iterator[tuple[Perm, dict[str, Term]]]:
    """Ground equivariant matching: yields (pi, theta) with theta ground and
    goal_args ~ pi.(head_args theta) pointwise, complete up to equivariance
    over the names of the goal plus fresh ones."""
    goal_args = tuple(ground_normalize(a) for a in goal_args)
    names: set[Name] = set()
    for a in goal_args:
        names |= support(a)
    for cn in clause.new_names:
        names.add(NameSupply.fresh_name(cn.ident, cn.ntype))
    avail = _sorted_names(names)
    for mapping in _perm_assignments(clause.new_names, avail):
        try:
            pi = perm_from_map(mapping)
        except NominalError:
            continue
        pats = [perm_term(pi, a) for a in clause.args]

        def match_all(i: int, bnd: dict[str, Term]) -> Iterator[dict[str, Term]]:
            if i == len(pats):
                yield bnd
                return
            for b2 in _omatch(pats[i], goal_args[i], bnd, avail):
                yield from match_all(i + 1, b2)

        for bnd in match_all(0, {}):
            rest = [x for x, _ in clause.universals if x not in bnd]

            def enum_rest(i: int, b: dict[str, Term]) -> Iterator[dict[str, Term]]:
                if i == len(rest):
                    yield b
                    return
                ty = dict(clause.universals)[rest[i]]
                for t in enum_ground_terms(sig, ty, avail, lim.term_size_bound):
                    yield from enum_rest(i + 1, {**b, rest[i]: t})

            inv = perm_inverse(pi)
            for bfull in enum_rest(0, dict(bnd)):
                theta = {
                    x: ground_normalize(perm_term(inv, v)) for x, v in bfull.items()
                }
                yield pi, theta


# ---------------------------------------------------------------------------
# Derivation checking


def check_derivation(sig: Signature, delta, d: NDerivation) -> bool:
    """Validate every node against its rule, using the ground relations."""
    try:
        return _check_node(sig, tuple(delta), d)
    except (NominalError, AssertionError, KeyError, IndexError):
        return False


def _check_node(sig: Signature, delta, d: NDerivation) -> bool:
    g = d.goal
    if goal_vars(g):
        return False
    kids = d.children
    match d.rule:
        case "TRUE":
            return isinstance(g, GTrue) and not kids
        case "FRESH":
            return (
                isinstance(g, GFresh)
                and not kids
                and isinstance(ground_normalize(g.l), NameRef)
                and freshness_check(ground_normalize(g.l).name, g.r)
            )
        case "EQUAL":
            return isinstance(g, GEq) and not kids and alpha_eq(g.l, g.r)
        case "AND":
            return (
                isinstance(g, GAnd)
                and len(kids) == 2
                and goal_alpha_equal(kids[0].goal, g.g1)
                and goal_alpha_equal(kids[1].goal, g.g2)
                and all(_check_node(sig, delta, c) for c in kids)
            )
        case "OR-left":
            return (
                isinstance(g, GOr)
                and len(kids) == 1
                and goal_alpha_equal(kids[0].goal, g.g1)
                and _check_node(sig, delta, kids[0])
            )
        case "OR-right":
            return (
                isinstance(g, GOr)
                and len(kids) == 1
                and goal_alpha_equal(kids[0].goal, g.g2)
                and _check_node(sig, delta, kids[0])
            )
        case "EXISTS":
            if not (isinstance(g, GExists) and len(kids) == 1 and d.witness is not None):
                return False
            w = d.witness
            if term_vars(w):
                return False
            expected = goal_ground_normalize(substitute_goal(g.body, {g.var: w}))
            return goal_alpha_equal(kids[0].goal, expected) and _check_node(sig, delta, kids[0])
        case "NEW":
            if not (isinstance(g, GNew) and len(kids) == 1 and d.new_name is not None):
                return False
            a2 = d.new_name
            if a2 != g.name and a2 in (goal_free_names(g.body) - {g.name}):
                return False
            expected = goal_perm(((g.name, a2),), g.body) if a2 != g.name else g.body
            return goal_alpha_equal(kids[0].goal, expected) and _check_node(sig, delta, kids[0])
        case "BACKCHAIN":
            if not (isinstance(g, GAtom) and len(kids) == 1):
                return False
            if d.clause_idx is None or d.perm is None or d.theta is None:
                return False
            clause = next((c for c in delta if c.idx == d.clause_idx), None)
            if clause is None or clause.pred != g.pred:
                return False
            theta = dict(d.theta)
            if set(theta) != {x for x, _ in clause.universals}:
                return False
            for x, ty in clause.universals:
                if term_vars(theta[x]):
                    return False
            for goal_arg, clause_arg in zip(g.args, clause.args):
                inst = ground_normalize(perm_term(d.perm, substitute_term(clause_arg, theta)))
                if not alpha_eq(goal_arg, inst):
                    return False
            expected = goal_ground_normalize(
                goal_perm(d.perm, substitute_goal(clause.body, theta))
            )
            return goal_alpha_equal(kids[0].goal, expected) and _check_node(sig, delta, kids[0])
    return False


# ---------------------------------------------------------------------------
# JSON serialization


def derivation_to_json(d: NDerivation) -> dict:
    obj: dict = {"rule": d.rule, "goal": print_goal(d.goal)}
    witnesses: dict = {}
    if d.witness is not None:
        witnesses["exists"] = print_term(d.witness)
    if d.new_name is not None:
        witnesses["new"] = [d.new_name.ident, d.new_name.ntype]
    if d.clause_idx is not None:
        witnesses["clause"] = d.clause_idx
        witnesses["perm"] = [[a.ident, b.ident, a.ntype] for a, b in d.perm or ()]
        witnesses["theta"] = {x: print_term(v) for x, v in d.theta or ()}
    if witnesses:
        obj["witnesses"] = witnesses
    obj["children"] = [derivation_to_json(c) for c in d.children]
    return obj


def derivation_from_json(sig: Signature, delta, obj: dict) -> NDerivation:
    goal = parse_goal(sig, obj["goal"])
    w = obj.get("witnesses", {})
    witness = None
    if "exists" in w:
        assert isinstance(goal, GExists)
        witness = parse_term(sig, w["exists"], expected=goal.ty)
    new_name = None
    if "new" in w:
        new_name = Name(w["new"][0], w["new"][1])
    clause_idx = w.get("clause")
    perm = None
    theta = None
    if clause_idx is not None:
        perm = tuple((Name(a, nt), Name(b, nt)) for a, b, nt in w.get("perm", []))
        clause = next(c for c in delta if c.idx == clause_idx)
        utys = dict(clause.universals)
        theta = tuple(
            sorted((x, parse_term(sig, s, expected=utys[x])) for x, s in w.get("theta", {}).items())
        )
    children = tuple(derivation_from_json(sig, delta, c) for c in obj.get("children", []))
    return NDerivation(
        obj["rule"],
        goal,
        witness=witness,
        new_name=new_name,
        clause_idx=clause_idx,
        perm=perm,
        theta=theta,
        children=children,
    )


def derivation_dump(d: NDerivation) -> str:
    return json.dumps(derivation_to_json(d), indent=2)
