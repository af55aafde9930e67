"""Nominal unification with suspended permutations and freshness constraints.

Metavariables are Var nodes; a suspension pi.X is represented by wrapping
the Var in Swap nodes (innermost swap applies first).  The solver handles
the name-restricted fragment; anything outside it raises NotSolvable and
the engine falls back to bounded enumeration for the offending variables.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    Abs,
    App,
    Name,
    NameRef,
    Perm,
    Swap,
    Term,
    Ty,
    Var,
    perm_apply_name,
    perm_inverse,
    perm_term_susp,
    term_vars,
)


class NotSolvable(Exception):
    """Equation or constraint outside the supported fragment."""

    def __init__(self, msg: str, vars_involved: set[str] | None = None):
        super().__init__(msg)
        self.vars_involved = vars_involved or set()


@dataclass(frozen=True)
class NUnifProblem:
    """Equations t =? u and freshness constraints a #? t."""

    equations: tuple[tuple[Term, Term], ...] = ()
    freshness: tuple[tuple[Name, Term], ...] = ()


@dataclass(frozen=True)
class Store:
    """Idempotent-by-walk substitution plus (name # var) constraints."""

    subst: dict[str, Term] = field(default_factory=dict)
    fresh: frozenset[tuple[Name, str]] = frozenset()

    def bound(self, x: str) -> bool:
        return x in self.subst


EMPTY_STORE = Store()


def susp(perm: Perm, t: Term) -> Term:
    """Wrap a term in an explicit suspension (first pair innermost)."""
    for a, b in perm:
        t = Swap(NameRef(a), NameRef(b), t)
    return t


def perm_susp(perm: Perm, t: Term) -> Term:
    """Apply a permutation, suspending on variables."""
    return perm_term_susp(perm, t)


def decompose_susp(t: Term) -> tuple[Perm, Term]:
    """Split leading Swap wrappers off a term: returns (pi, core)."""
    pairs: list[tuple[Name, Name]] = []
    while isinstance(t, Swap):
        if not (isinstance(t.left, NameRef) and isinstance(t.right, NameRef)):
            raise NotSolvable(
                "swapping with non-name operands", term_vars(t.left) | term_vars(t.right)
            )
        pairs.append((t.left.name, t.right.name))
        t = t.body
    return tuple(reversed(pairs)), t


def resolve(t: Term, store: Store) -> Term:
    """Deep-substitute bound variables, collapsing suspensions as values
    become concrete."""
    match t:
        case NameRef():
            return t
        case Var(x, _):
            if store.bound(x):
                return resolve(store.subst[x], store)
            return t
        case App(f, args):
            return App(f, tuple(resolve(a, store) for a in args))
        case Abs(b, body):
            return Abs(resolve(b, store), resolve(body, store))
        case Swap():
            perm, core = decompose_susp(t)
            return perm_susp(perm, resolve(core, store))
    raise TypeError(f"not a term: {t!r}")


def unify(t: Term, u: Term, store: Store) -> Store | None:
    """Most general solution within the fragment, or None."""
    t = resolve(t, store)
    u = resolve(u, store)
    if t == u:
        return store
    pt, ct = decompose_susp(t)
    pu, cu = decompose_susp(u)
    # variable cases first
    if isinstance(ct, Var) and isinstance(cu, Var) and ct.ident == cu.ident:
        # pi.X = rho.X: names where the permutations disagree must be fresh
        out = store
        for n in _perm_names(pt) | _perm_names(pu):
            if perm_apply_name(pt, n) != perm_apply_name(pu, n):
                out2 = add_fresh(n, ct, out)
                if out2 is None:
                    return None
                out = out2
        return out
    if isinstance(ct, Var):
        return _bind(ct, pt, u, store)
    if isinstance(cu, Var):
        return _bind(cu, pu, t, store)

    match (t, u):
        case (NameRef(a), NameRef(b)):
            return store if a == b else None
        case (App(f, ts), App(g, us)):
            if f != g or len(ts) != len(us):
                return None
            out = store
            for x, y in zip(ts, us):
                nxt = unify(x, y, out)
                if nxt is None:
                    return None
                out = nxt
            return out
        case (Abs(NameRef(a), tb), Abs(NameRef(b), ub)):
            if a == b:
                return unify(tb, ub, store)
            if a.ntype != b.ntype:
                return None
            out = unify(tb, perm_susp(((a, b),), ub), store)
            if out is None:
                return None
            return add_fresh(a, ub, out)
        case (Abs(bl, _), Abs(br, _)):
            raise NotSolvable(
                "abstraction binder is not a name", term_vars(bl) | term_vars(br)
            )
        case _:
            return None


def _perm_names(perm: Perm) -> set[Name]:
    return {n for pair in perm for n in pair}


def _occurs(x: str, t: Term) -> bool:
    return x in term_vars(t)


def _bind(v: Var, vperm: Perm, value: Term, store: Store) -> Store | None:
    # pi.X = t  becomes  X := pi^-1 . t
    val = perm_susp(perm_inverse(vperm), value)
    if _occurs(v.ident, val):
        return None
    subst = dict(store.subst)
    subst[v.ident] = val
    out = Store(subst, store.fresh)
    # re-check freshness constraints that mention X
    pending = [(a, y) for a, y in store.fresh if y == v.ident]
    if pending:
        rest = frozenset((a, y) for a, y in store.fresh if y != v.ident)
        out = Store(subst, rest)
        for a, _ in pending:
            nxt = add_fresh(a, val, out)
            if nxt is None:
                return None
            out = nxt
    return out


def add_fresh(a: Name, t: Term, store: Store) -> Store | None:
    """Add the constraint a # t, decomposing it structurally."""
    t = resolve(t, store)
    perm, core = decompose_susp(t)
    if isinstance(core, Var):
        # a # pi.X  iff  pi^-1(a) # X
        key = (perm_apply_name(perm_inverse(perm), a), core.ident)
        if key in store.fresh:
            return store
        return Store(store.subst, store.fresh | {key})
    match t:
        case NameRef(b):
            return store if a != b else None
        case App(_, args):
            out = store
            for u in args:
                nxt = add_fresh(a, u, out)
                if nxt is None:
                    return None
                out = nxt
            return out
        case Abs(NameRef(b), body):
            if a == b:
                return store
            return add_fresh(a, body, store)
        case Abs(b, _):
            raise NotSolvable("abstraction binder is not a name", term_vars(b))
    raise TypeError(f"not a term: {t!r}")


def solve_nunif(problem: NUnifProblem, store: Store = EMPTY_STORE) -> Store | None:
    """Solve a whole problem; None when unsolvable, NotSolvable when the
    problem leaves the supported fragment."""
    out: Store | None = store
    for t, u in problem.equations:
        out = unify(t, u, out)
        if out is None:
            return None
    for a, t in problem.freshness:
        out = add_fresh(a, t, out)
        if out is None:
            return None
    return out
