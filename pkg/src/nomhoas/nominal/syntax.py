"""Nominal terms, goals, and program clauses.

Terms are first-order trees over a signature, extended with names,
swappings ``(a b).t`` and name-abstractions ``<a>t``.  Name types are
inhabited by names only.  All values here are immutable; operations are
pure functions, so everything can be shared freely between threads.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class AbsTy:
    """Abstraction type <ntype> body."""

    ntype: str
    body: "Ty"

    def __str__(self) -> str:
        return f"<{self.ntype}>{self.body}"


# A type is a declared type identifier or an abstraction type.
Ty = str | AbsTy


class NominalError(Exception):
    """Base error for this package's nominal layer."""


class SignatureError(NominalError):
    pass


class TypeError_(NominalError):
    """Ill-typed term/goal/clause (named to avoid the builtin)."""


@dataclass(frozen=True)
class FuncDecl:
    args: tuple[Ty, ...]
    result: str


@dataclass(frozen=True)
class Signature:
    """Declared name types, base types, and function/predicate symbols."""

    name_types: frozenset[str]
    base_types: frozenset[str]
    func_syms: dict[str, FuncDecl] = field(default_factory=dict)
    pred_syms: dict[str, tuple[Ty, ...]] = field(default_factory=dict)

    def __post_init__(self):
        overlap = self.name_types & self.base_types
        if overlap:
            raise SignatureError(f"types declared both name and base: {sorted(overlap)}")
        for f, decl in self.func_syms.items():
            if decl.result in self.name_types:
                raise SignatureError(f"function {f} returns name type {decl.result}")
            for ty in decl.args + (decl.result,):
                self._check_ty(ty, f)
        for p, args in self.pred_syms.items():
            for ty in args:
                self._check_ty(ty, p)

    def _check_ty(self, ty: Ty, owner: str) -> None:
        if isinstance(ty, AbsTy):
            if ty.ntype not in self.name_types:
                raise SignatureError(f"{owner}: <{ty.ntype}> is not a name type")
            self._check_ty(ty.body, owner)
        elif ty not in self.name_types and ty not in self.base_types:
            raise SignatureError(f"{owner}: undeclared type {ty}")

    def is_name_type(self, ty: Ty) -> bool:
        return isinstance(ty, str) and ty in self.name_types


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Name:
    """A name: identity is the (identifier, name type) pair."""

    ident: str
    ntype: str

    def __str__(self) -> str:
        return self.ident


@dataclass(frozen=True)
class NameRef:
    name: Name


@dataclass(frozen=True)
class Var:
    ident: str
    ty: Ty


@dataclass(frozen=True)
class App:
    fsym: str
    args: tuple["Term", ...] = ()


@dataclass(frozen=True)
class Swap:
    """Syntactic swapping (left right).body; evaluated away on ground terms."""

    left: "Term"
    right: "Term"
    body: "Term"


@dataclass(frozen=True)
class Abs:
    """Name-abstraction <binder>body.  Not a real binder: substitution may
    capture the binder name."""

    binder: "Term"
    body: "Term"


Term = NameRef | Var | App | Swap | Abs

# A permutation is a composition of swappings, applied left pair first.
Perm = tuple[tuple[Name, Name], ...]

# Ground substitutions: variable identifier -> ground term.
NSubst = dict[str, Term]


def is_ground(t: Term) -> bool:
    match t:
        case NameRef():
            return True
        case Var():
            return False
        case App(_, args):
            return all(is_ground(a) for a in args)
        case Swap(l, r, b):
            return is_ground(l) and is_ground(r) and is_ground(b)
        case Abs(b, body):
            return is_ground(b) and is_ground(body)
    raise TypeError(f"not a term: {t!r}")


def term_size(t: Term) -> int:
    """Node count; an abstraction counts one node plus its body."""
    match t:
        case NameRef() | Var():
            return 1
        case App(_, args):
            return 1 + sum(term_size(a) for a in args)
        case Swap(l, r, b):
            return 1 + term_size(l) + term_size(r) + term_size(b)
        case Abs(_, body):
            return 1 + term_size(body)
    raise TypeError(f"not a term: {t!r}")


def term_names(t: Term) -> set[Name]:
    """All names occurring syntactically (bound or not)."""
    match t:
        case NameRef(n):
            return {n}
        case Var():
            return set()
        case App(_, args):
            out: set[Name] = set()
            for a in args:
                out |= term_names(a)
            return out
        case Swap(l, r, b):
            return term_names(l) | term_names(r) | term_names(b)
        case Abs(b, body):
            return term_names(b) | term_names(body)
    raise TypeError(f"not a term: {t!r}")


def term_vars(t: Term) -> set[str]:
    match t:
        case NameRef():
            return set()
        case Var(x, _):
            return {x}
        case App(_, args):
            out: set[str] = set()
            for a in args:
                out |= term_vars(a)
            return out
        case Swap(l, r, b):
            return term_vars(l) | term_vars(r) | term_vars(b)
        case Abs(b, body):
            return term_vars(b) | term_vars(body)
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Goals


@dataclass(frozen=True)
class GTrue:
    pass


@dataclass(frozen=True)
class GAtom:
    pred: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class GFresh:
    l: Term
    r: Term


@dataclass(frozen=True)
class GEq:
    l: Term
    r: Term


@dataclass(frozen=True)
class GAnd:
    g1: "Goal"
    g2: "Goal"


@dataclass(frozen=True)
class GOr:
    g1: "Goal"
    g2: "Goal"


@dataclass(frozen=True)
class GExists:
    var: str
    ty: Ty
    body: "Goal"


@dataclass(frozen=True)
class GNew:
    name: Name
    body: "Goal"


Goal = GTrue | GAtom | GFresh | GEq | GAnd | GOr | GExists | GNew

TRUE = GTrue()


def goal_vars(g: Goal) -> set[str]:
    """Free variable identifiers of a goal."""
    match g:
        case GTrue():
            return set()
        case GAtom(_, args):
            out: set[str] = set()
            for a in args:
                out |= term_vars(a)
            return out
        case GFresh(l, r) | GEq(l, r):
            return term_vars(l) | term_vars(r)
        case GAnd(g1, g2) | GOr(g1, g2):
            return goal_vars(g1) | goal_vars(g2)
        case GExists(x, _, body):
            return goal_vars(body) - {x}
        case GNew(_, body):
            return goal_vars(body)
    raise TypeError(f"not a goal: {g!r}")


def goal_free_names(g: Goal) -> set[Name]:
    """Names free in a goal; `new` is a real binder, abstraction is not."""
    match g:
        case GTrue():
            return set()
        case GAtom(_, args):
            out: set[Name] = set()
            for a in args:
                out |= term_names(a)
            return out
        case GFresh(l, r) | GEq(l, r):
            return term_names(l) | term_names(r)
        case GAnd(g1, g2) | GOr(g1, g2):
            return goal_free_names(g1) | goal_free_names(g2)
        case GExists(_, _, body):
            return goal_free_names(body)
        case GNew(a, body):
            return goal_free_names(body) - {a}
    raise TypeError(f"not a goal: {g!r}")


def goal_is_ground(g: Goal) -> bool:
    return not goal_vars(g)


def goal_size(g: Goal) -> int:
    match g:
        case GTrue():
            return 1
        case GAtom(_, args):
            return 1 + sum(term_size(a) for a in args)
        case GFresh(l, r) | GEq(l, r):
            return 1 + term_size(l) + term_size(r)
        case GAnd(g1, g2) | GOr(g1, g2):
            return 1 + goal_size(g1) + goal_size(g2)
        case GExists(_, _, body) | GNew(_, body):
            return 1 + goal_size(body)
    raise TypeError(f"not a goal: {g!r}")


# ---------------------------------------------------------------------------
# Program clauses


@dataclass(frozen=True)
class ProgramClause:
    """new a1..ak. forall X1..Xn. [pred(args) :- body]"""

    new_names: tuple[Name, ...]
    universals: tuple[tuple[str, Ty], ...]
    pred: str
    args: tuple[Term, ...]
    body: Goal
    idx: int = -1  # position in the program, used as clause id


def clause_check_wellformed(c: ProgramClause) -> None:
    """No free variables or free names outside the binder lists."""
    head_vars = set()
    for a in c.args:
        head_vars |= term_vars(a)
    vs = head_vars | goal_vars(c.body)
    bound_vs = {x for x, _ in c.universals}
    if vs - bound_vs:
        raise NominalError(f"clause {c.pred}: unbound variables {sorted(vs - bound_vs)}")
    ns: set[Name] = set()
    for a in c.args:
        ns |= term_names(a)
    ns |= goal_free_names(c.body)
    if ns - set(c.new_names):
        extra = sorted(n.ident for n in ns - set(c.new_names))
        raise NominalError(f"clause {c.pred}: unbound names {extra}")


# ---------------------------------------------------------------------------
# Fresh name / variable supply

_counter = itertools.count(1)


class NameSupply:
    """Generates names that never collide with parsed identifiers.

    Generated identifiers carry a primed numeric suffix (e.g. ``a'3``);
    the parsers register every primed identifier they see so the global
    counter always stays ahead.
    """

    @staticmethod
    def observe(ident: str) -> None:
        if "'" in ident:
            tail = ident.rsplit("'", 1)[1]
            if tail.isdigit():
                k = int(tail)
                while True:
                    cur = next(_counter)
                    if cur > k:
                        break

    @staticmethod
    def fresh_ident(stem: str) -> str:
        stem = stem.split("'", 1)[0] or "n"
        return f"{stem}'{next(_counter)}"

    @staticmethod
    def fresh_name(stem: str, ntype: str) -> Name:
        return Name(NameSupply.fresh_ident(stem), ntype)


# ---------------------------------------------------------------------------
# Permutations


def perm_apply_name(perm: Perm, n: Name) -> Name:
    for a, b in perm:
        if n == a:
            n = b
        elif n == b:
            n = a
    return n


def perm_inverse(perm: Perm) -> Perm:
    return tuple(reversed(perm))


def perm_from_map(mapping: dict[Name, Name]) -> Perm:
    """Turn an injective, type-preserving partial map into a permutation
    (a product of swappings) that extends it, fixing everything else."""
    full = dict(mapping)
    targets = set(full.values())
    # close into a bijection on dom u ran: leftover targets map back onto
    # leftover sources of the same name type (counts match per type)
    pending = [t for t in targets if t not in full]
    sources = [s for s in full if s not in targets]
    for t in pending:
        for s in sources:
            if s.ntype == t.ntype:
                full[t] = s
                sources.remove(s)
                break
        else:
            raise NominalError("permutation mixes name types")
    swaps: list[tuple[Name, Name]] = []
    done: set[Name] = set()
    for start in full:
        if start in done:
            continue
        cycle = [start]
        cur = full[start]
        while cur != start:
            cycle.append(cur)
            cur = full[cur]
        done.update(cycle)
        # cycle (n0 n1 .. nk) meaning n_i -> n_{i+1}: with pairs applied
        # left first this is (n_{k-1} n_k) ... (n1 n2) (n0 n1)
        for i in range(len(cycle) - 1, 0, -1):
            if cycle[i - 1].ntype != cycle[i].ntype:
                raise NominalError("permutation mixes name types")
            swaps.append((cycle[i - 1], cycle[i]))
    p = tuple(swaps)
    assert all(perm_apply_name(p, s) == t for s, t in mapping.items())
    return p


# ---------------------------------------------------------------------------
# Swapping


def perm_term(perm: Perm, t: Term) -> Term:
    """Apply a permutation structurally.  Variables are fixed ((a b).X = X);
    the unification layer adds explicit suspensions where it needs them."""
    if not perm:
        return t
    match t:
        case NameRef(n):
            return NameRef(perm_apply_name(perm, n))
        case Var():
            return t
        case App(f, args):
            return App(f, tuple(perm_term(perm, a) for a in args))
        case Abs(b, body):
            return Abs(perm_term(perm, b), perm_term(perm, body))
        case Swap(l, r, b):
            return Swap(perm_term(perm, l), perm_term(perm, r), perm_term(perm, b))
    raise TypeError(f"not a term: {t!r}")


def perm_term_susp(perm: Perm, t: Term) -> Term:
    """Apply a permutation, suspending on variables so the swaps reach a
    variable's eventual value."""
    if not perm:
        return t
    match t:
        case NameRef(n):
            return NameRef(perm_apply_name(perm, n))
        case Var():
            for pair in perm:
                t = Swap(NameRef(pair[0]), NameRef(pair[1]), t)
            return t
        case App(f, args):
            return App(f, tuple(perm_term_susp(perm, a) for a in args))
        case Abs(b, body):
            return Abs(perm_term_susp(perm, b), perm_term_susp(perm, body))
        case Swap(l, r, b):
            return Swap(
                perm_term_susp(perm, l),
                perm_term_susp(perm, r),
                perm_term_susp(perm, b),
            )
    raise TypeError(f"not a term: {t!r}")


def eval_swaps(t: Term) -> Term:
    """Evaluate syntactic swappings where both operands are concrete names;
    swaps over variables remain as suspensions."""
    match t:
        case NameRef() | Var():
            return t
        case App(f, args):
            return App(f, tuple(eval_swaps(a) for a in args))
        case Abs(b, body):
            return Abs(eval_swaps(b), eval_swaps(body))
        case Swap(l, r, b):
            ln, rn, bn = eval_swaps(l), eval_swaps(r), eval_swaps(b)
            if isinstance(ln, NameRef) and isinstance(rn, NameRef):
                if ln.name.ntype != rn.name.ntype:
                    raise NominalError(
                        f"swapping names of different types: {ln.name}, {rn.name}"
                    )
                return perm_term_susp(((ln.name, rn.name),), bn)
            return Swap(ln, rn, bn)
    raise TypeError(f"not a term: {t!r}")


def ground_normalize(t: Term) -> Term:
    """Evaluate all syntactic Swap nodes of a ground term away."""
    match t:
        case NameRef():
            return t
        case App(f, args):
            return App(f, tuple(ground_normalize(a) for a in args))
        case Abs(b, body):
            return Abs(ground_normalize(b), ground_normalize(body))
        case Swap(l, r, b):
            ln = ground_normalize(l)
            rn = ground_normalize(r)
            bn = ground_normalize(b)
            if not (isinstance(ln, NameRef) and isinstance(rn, NameRef)):
                raise NominalError(f"swapping of non-names: ({ln}, {rn})")
            if ln.name.ntype != rn.name.ntype:
                raise NominalError(f"swapping names of different types: {ln.name}, {rn.name}")
            return perm_term(((ln.name, rn.name),), bn)
        case Var(x, _):
            raise NominalError(f"ground operation on open term (variable {x})")
    raise TypeError(f"not a term: {t!r}")


def swap_apply(perm: Perm, t: Term) -> Term:
    """Apply a permutation to a ground term, returning a swap-free term."""
    return ground_normalize(perm_term(perm, ground_normalize(t)))


def goal_perm(perm: Perm, g: Goal) -> Goal:
    """Permutation action on goals: distributes under connectives, fixes
    variables, and freshens a `new` binder when it would collide."""
    if not perm:
        return g
    match g:
        case GTrue():
            return g
        case GAtom(p, args):
            return GAtom(p, tuple(perm_term(perm, a) for a in args))
        case GFresh(l, r):
            return GFresh(perm_term(perm, l), perm_term(perm, r))
        case GEq(l, r):
            return GEq(perm_term(perm, l), perm_term(perm, r))
        case GAnd(g1, g2):
            return GAnd(goal_perm(perm, g1), goal_perm(perm, g2))
        case GOr(g1, g2):
            return GOr(goal_perm(perm, g1), goal_perm(perm, g2))
        case GExists(x, ty, body):
            return GExists(x, ty, goal_perm(perm, body))
        case GNew(a, body):
            moved = {n for pair in perm for n in pair}
            if a in moved:
                a2 = NameSupply.fresh_name(a.ident, a.ntype)
                body = goal_perm(((a, a2),), body)
                a = a2
            return GNew(a, goal_perm(perm, body))
    raise TypeError(f"not a goal: {g!r}")


# ---------------------------------------------------------------------------
# Freshness, alpha-equality, support (ground relations)


def freshness_check(a: Name, t: Term) -> bool:
    """a # t for ground t."""
    t = ground_normalize(t)
    return _fresh(a, t)


def _fresh(a: Name, t: Term) -> bool:
    match t:
        case NameRef(b):
            return a != b
        case App(_, args):
            return all(_fresh(a, u) for u in args)
        case Abs(NameRef(b), body):
            if a == b:
                return True
            return _fresh(a, body)
    raise NominalError(f"freshness on unexpected term {t!r}")


def alpha_eq(t: Term, u: Term) -> bool:
    """t ~ u for ground terms: equality treating abstraction as a binder."""
    return _aeq(ground_normalize(t), ground_normalize(u))


def _aeq(t: Term, u: Term) -> bool:
    match (t, u):
        case (NameRef(a), NameRef(b)):
            return a == b
        case (App(f, ts), App(g, us)):
            return f == g and len(ts) == len(us) and all(_aeq(x, y) for x, y in zip(ts, us))
        case (Abs(NameRef(a), tb), Abs(NameRef(b), ub)):
            if a == b:
                return _aeq(tb, ub)
            if a.ntype != b.ntype:
                return False
            return _fresh(a, ub) and _aeq(tb, perm_term(((a, b),), ub))
        case _:
            return False


def support(t: Term) -> set[Name]:
    """Names of t that fail the freshness check."""
    t = ground_normalize(t)
    return {a for a in term_names(t) if not _fresh(a, t)}


# ---------------------------------------------------------------------------
# Substitution


def substitute_term(t: Term, theta: NSubst) -> Term:
    """Simultaneous substitution; name-abstraction does not avoid capture."""
    if not theta:
        return t
    match t:
        case NameRef():
            return t
        case Var(x, _):
            return theta.get(x, t)
        case App(f, args):
            return App(f, tuple(substitute_term(a, theta) for a in args))
        case Swap(l, r, b):
            return Swap(
                substitute_term(l, theta),
                substitute_term(r, theta),
                substitute_term(b, theta),
            )
        case Abs(b, body):
            return Abs(substitute_term(b, theta), substitute_term(body, theta))
    raise TypeError(f"not a term: {t!r}")


def _theta_support(theta: NSubst) -> set[Name]:
    out: set[Name] = set()
    for v in theta.values():
        out |= support(v)
    return out


def substitute_goal(g: Goal, theta: NSubst) -> Goal:
    """Substitution on goals.  `exists` and `new` are real binders: a bound
    variable shadows, and a bound name is renamed rather than capturing a
    name free in theta's range."""
    if not theta:
        return g
    match g:
        case GTrue():
            return g
        case GAtom(p, args):
            return GAtom(p, tuple(substitute_term(a, theta) for a in args))
        case GFresh(l, r):
            return GFresh(substitute_term(l, theta), substitute_term(r, theta))
        case GEq(l, r):
            return GEq(substitute_term(l, theta), substitute_term(r, theta))
        case GAnd(g1, g2):
            return GAnd(substitute_goal(g1, theta), substitute_goal(g2, theta))
        case GOr(g1, g2):
            return GOr(substitute_goal(g1, theta), substitute_goal(g2, theta))
        case GExists(x, ty, body):
            inner = {k: v for k, v in theta.items() if k != x}
            return GExists(x, ty, substitute_goal(body, inner))
        case GNew(a, body):
            relevant = {k: v for k, v in theta.items() if k in goal_vars(body)}
            if a in _theta_support(relevant):
                a2 = NameSupply.fresh_name(a.ident, a.ntype)
                body = goal_perm(((a, a2),), body)
                a = a2
            return GNew(a, substitute_goal(body, relevant))
    raise TypeError(f"not a goal: {g!r}")


# ---------------------------------------------------------------------------
# Typing


def infer_term_type(sig: Signature, t: Term, var_types: dict[str, Ty] | None = None) -> Ty:
    """Type of a term; raises TypeError_ when ill-typed."""
    match t:
        case NameRef(n):
            if n.ntype not in sig.name_types:
                raise TypeError_(f"name {n} has undeclared name type {n.ntype}")
            return n.ntype
        case Var(x, ty):
            if var_types is not None and x in var_types and var_types[x] != ty:
                raise TypeError_(f"variable {x} used at {ty} and {var_types[x]}")
            if var_types is not None:
                var_types[x] = ty
            return ty
        case App(f, args):
            decl = sig.func_syms.get(f)
            if decl is None:
                raise TypeError_(f"undeclared function symbol {f}")
            if len(args) != len(decl.args):
                raise TypeError_(f"{f} expects {len(decl.args)} arguments, got {len(args)}")
            for a, ty in zip(args, decl.args):
                got = infer_term_type(sig, a, var_types)
                if got != ty:
                    raise TypeError_(f"{f}: argument has type {got}, expected {ty}")
            return decl.result
        case Swap(l, r, b):
            lt = infer_term_type(sig, l, var_types)
            rt = infer_term_type(sig, r, var_types)
            if not sig.is_name_type(lt) or lt != rt:
                raise TypeError_(f"swapping requires two names of one name type, got {lt}, {rt}")
            return infer_term_type(sig, b, var_types)
        case Abs(b, body):
            bt = infer_term_type(sig, b, var_types)
            if not sig.is_name_type(bt):
                raise TypeError_(f"abstraction binder must have a name type, got {bt}")
            return AbsTy(bt, infer_term_type(sig, body, var_types))
    raise TypeError(f"not a term: {t!r}")


def check_goal(sig: Signature, g: Goal, var_types: dict[str, Ty] | None = None) -> None:
    if var_types is None:
        var_types = {}
    match g:
        case GTrue():
            return
        case GAtom(p, args):
            decl = sig.pred_syms.get(p)
            if decl is None:
                raise TypeError_(f"undeclared predicate {p}")
            if len(args) != len(decl):
                raise TypeError_(f"{p} expects {len(decl)} arguments, got {len(args)}")
            for a, ty in zip(args, decl):
                got = infer_term_type(sig, a, var_types)
                if got != ty:
                    raise TypeError_(f"{p}: argument has type {got}, expected {ty}")
        case GFresh(l, r):
            lt = infer_term_type(sig, l, var_types)
            if not sig.is_name_type(lt):
                raise TypeError_(f"freshness left side must have a name type, got {lt}")
            infer_term_type(sig, r, var_types)
        case GEq(l, r):
            lt = infer_term_type(sig, l, var_types)
            rt = infer_term_type(sig, r, var_types)
            if lt != rt:
                raise TypeError_(f"equality between {lt} and {rt}")
        case GAnd(g1, g2) | GOr(g1, g2):
            check_goal(sig, g1, var_types)
            check_goal(sig, g2, var_types)
        case GExists(x, ty, body):
            saved = var_types.get(x)
            var_types[x] = ty
            check_goal(sig, body, var_types)
            if saved is None:
                del var_types[x]
            else:
                var_types[x] = saved
        case GNew(_, body):
            check_goal(sig, body, var_types)
        case _:
            raise TypeError(f"not a goal: {g!r}")


def is_name_restricted_term(t: Term) -> bool:
    """Swap operands and abstraction binders are literal names."""
    match t:
        case NameRef() | Var():
            return True
        case App(_, args):
            return all(is_name_restricted_term(a) for a in args)
        case Swap(l, r, b):
            return (
                isinstance(l, NameRef)
                and isinstance(r, NameRef)
                and is_name_restricted_term(b)
            )
        case Abs(b, body):
            return isinstance(b, NameRef) and is_name_restricted_term(body)
    raise TypeError(f"not a term: {t!r}")


def is_name_restricted_goal(g: Goal) -> bool:
    match g:
        case GTrue():
            return True
        case GAtom(_, args):
            return all(is_name_restricted_term(a) for a in args)
        case GFresh(l, r):
            # goal-level freshness may have any name-typed left side
            return is_name_restricted_term(l) and is_name_restricted_term(r)
        case GEq(l, r):
            return is_name_restricted_term(l) and is_name_restricted_term(r)
        case GAnd(g1, g2) | GOr(g1, g2):
            return is_name_restricted_goal(g1) and is_name_restricted_goal(g2)
        case GExists(_, _, body) | GNew(_, body):
            return is_name_restricted_goal(body)
    raise TypeError(f"not a goal: {g!r}")


def is_name_restricted_clause(c: ProgramClause) -> bool:
    return all(is_name_restricted_term(a) for a in c.args) and is_name_restricted_goal(c.body)
