"""Proof search for fixed-point definitions over HOAS terms.

`gprove` searches with instantiable variables and higher-order pattern
unification; problems outside the pattern fragment fall back to bounded
term enumeration.  `gprove(..., oracle=True)` instead enumerates witness
terms and nabla-head constants exhaustively within the limits.  Scoping of
nabla-introduced constants is enforced by per-variable prohibition sets.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Iterator

from ..search import CUTOFF, EXHAUSTED, PROVED, SearchLimits
from .syntax import (
    Arr,
    DefClause,
    FAnd,
    FAtom,
    FEq,
    FExists,
    FNabla,
    FOr,
    FTop,
    Formula,
    HApp,
    HBound,
    HCon,
    HLam,
    HNom,
    HSignature,
    HTerm,
    HTy,
    HVar,
    HoasError,
    finstantiate,
    fnormalize,
    fresh_hvar,
    fresh_nom,
    fsubstitute,
    fsupport,
    fvars,
    happ_raw,
    hsubstitute_term,
    hsupport,
    is_closed,
    normalize,
    shift,
    term_hvars,
    ty_args,
    type_of,
)
from .parser import parse_gm_formula, parse_gm_term
from .printer import print_formula, print_term

TOP_R = "topR"
EQ_R = "eqR"
AND_R = "andR"
OR_R_LEFT = "orR-left"
OR_R_RIGHT = "orR-right"
EXISTS_R = "existsR"
NABLA_R = "nablaR"
DEF_R = "defR"


class NotPattern(Exception):
    """Unification problem outside the higher-order pattern fragment."""

    def __init__(self, msg: str, vars_involved: set[str] | None = None):
        super().__init__(msg)
        self.vars_involved = vars_involved or set()


@dataclass(frozen=True)
class PatternUnifProblem:
    equations: tuple[tuple[HTerm, HTerm], ...]


@dataclass(frozen=True)
class GDerivation:
    rule: str
    formula: Formula
    witness: HTerm | None = None  # existsR
    nom: HNom | None = None  # nablaR
    cid: int | None = None  # defR clause
    theta: tuple[tuple[str, HTerm], ...] | None = None
    znoms: tuple[tuple[str, HNom], ...] | None = None
    children: tuple["GDerivation", ...] = ()

    def skeleton(self):
        return (self.rule, tuple(c.skeleton() for c in self.children))

    def count_rule(self, rule: str) -> int:
        return (self.rule == rule) + sum(c.count_rule(rule) for c in self.children)

    def depth(self, exempt: frozenset[int] = frozenset()) -> int:
        sub = max((c.depth(exempt) for c in self.children), default=0)
        own = 1 if self.rule == DEF_R and self.cid not in exempt else 0
        return sub + own


@dataclass(frozen=True)
class GResult:
    derivation: GDerivation | None
    status: str

    @property
    def proved(self) -> bool:
        return self.derivation is not None


# ---------------------------------------------------------------------------
# Unification store


@dataclass(frozen=True)
class GStore:
    subst: dict[str, HTerm] = field(default_factory=dict)
    prohibited: dict[str, frozenset[HNom]] = field(default_factory=dict)
    nom_only: frozenset[str] = frozenset()
    groups: tuple[tuple[str, ...], ...] = ()  # distinctness groups (defR z's)
    links: tuple[tuple[str, tuple[str, ...]], ...] = ()  # (z, x's) support disjointness

    def bound(self, x: str) -> bool:
        return x in self.subst

    def banned(self, x: str) -> frozenset[HNom]:
        return self.prohibited.get(x, frozenset())


EMPTY_GSTORE = GStore()


def gresolve(t: HTerm, store: GStore) -> HTerm:
    """Deep substitution of bound metavariables, normalized."""
    vs = term_hvars(t) & set(store.subst)
    while vs:
        t = hsubstitute_term(t, {x: store.subst[x] for x in vs})
        vs = term_hvars(t) & set(store.subst)
    return t


def _propagate_ban(store: GStore, x: str, noms: frozenset[HNom]) -> GStore | None:
    """Prohibit nominal constants in x's (eventual) value."""
    if not noms:
        return store
    if store.bound(x):
        v = gresolve(HVar(x, "?"), store)  # type: ignore[arg-type]
        if hsupport(v) & noms:
            return None
        out = store
        for y in term_hvars(v):
            out2 = _propagate_ban(out, y, noms)
            if out2 is None:
                return None
            out = out2
        return out
    cur = store.banned(x)
    if noms <= cur:
        return store
    pro = dict(store.prohibited)
    pro[x] = cur | noms
    return replace(store, prohibited=pro)


def _check_groups_links(store: GStore) -> GStore | None:
    for group in store.groups:
        seen: set[HNom] = set()
        resolved_vars: set[str] = set()
        for z in group:
            if store.bound(z):
                v = gresolve(HVar(z, "?"), store)  # type: ignore[arg-type]
                if isinstance(v, HNom):
                    if v in seen:
                        return None
                    seen.add(v)
                elif isinstance(v, HVar):
                    if v.ident in resolved_vars:
                        return None
                    resolved_vars.add(v.ident)
                else:
                    return None
            else:
                if z in resolved_vars:
                    return None
                resolved_vars.add(z)
    out = store
    for z, xs in store.links:
        v = gresolve(HVar(z, "?"), store) if store.bound(z) else None  # type: ignore[arg-type]
        if isinstance(v, HNom):
            for x in xs:
                nxt = _propagate_ban(out, x, frozenset({v}))
                if nxt is None:
                    return None
                out = nxt
    return out


def gbind(x: str, v: HTerm, store: GStore) -> GStore | None:
    v = gresolve(v, store)
    if isinstance(v, HVar) and v.ident == x:
        return store
    if x in term_hvars(v):
        return None  # occurs
    if x in store.nom_only:
        if isinstance(v, HVar):
            nom_only = store.nom_only | {v.ident}
            store = replace(store, nom_only=nom_only)
            # alias inherits distinctness-group membership and links
            groups = tuple(
                tuple(v.ident if z == x else z for z in g) for g in store.groups
            )
            links = tuple((v.ident if z == x else z, xs) for z, xs in store.links)
            store = replace(store, groups=groups, links=links)
        elif not isinstance(v, HNom):
            return None
    if hsupport(v) & store.banned(x):
        return None
    out = store
    for y in term_hvars(v):
        nxt = _propagate_ban(out, y, store.banned(x))
        if nxt is None:
            return None
        out = nxt
    subst = {y: hsubstitute_term(w, {x: v}) for y, w in out.subst.items()}
    subst[x] = v
    out = replace(out, subst=subst)
    return _check_groups_links(out)


# ---------------------------------------------------------------------------
# Higher-order pattern unification


def _eta_atom(t: HTerm) -> HTerm | None:
    """Recognize the eta-long form of a nominal constant or bound variable;
    returns the underlying atom."""
    lams = 0
    while isinstance(t, HLam):
        t = t.body
        lams += 1
    if lams == 0:
        return t if isinstance(t, (HNom, HBound)) else None
    if not isinstance(t, HApp) or len(t.args) != lams:
        return None
    for i, a in enumerate(t.args):
        inner = _eta_atom(a)
        if not (isinstance(inner, HBound) and inner.ix == lams - 1 - i):
            return None
    h = t.head
    if isinstance(h, HNom):
        return h
    if isinstance(h, HBound) and h.ix >= lams:
        return HBound(h.ix - lams)
    return None


def _flex_view(t: HTerm, store: GStore) -> tuple[HVar, list[HTerm]] | None:
    """(F, args) when t is F a1..an with F an unbound metavariable."""
    if isinstance(t, HVar) and not store.bound(t.ident):
        return t, []
    if isinstance(t, HApp) and isinstance(t.head, HVar) and not store.bound(t.head.ident):
        return t.head, list(t.args)
    return None


def _invert(t: HTerm, fvar: HVar, argmap: dict, store: GStore, local: int) -> HTerm:
    """Rewrite t into the body of fvar's binder, mapping the argument atoms
    to fresh indices; raises NotPattern outside the easy fragment."""
    match t:
        case HNom():
            if ("nom", t) in argmap:
                return HBound(argmap[("nom", t)] + local)
            if t in store.banned(fvar.ident):
                raise _Fail()
            return t
        case HBound(k):
            if k < local:
                return t
            key = ("bound", k - local)
            if key in argmap:
                return HBound(argmap[key] + local)
            raise _Fail()  # outer binder not among the pattern arguments
        case HCon():
            return t
        case HVar(x, _):
            if x == fvar.ident:
                raise _Fail()  # occurs
            return t
        case HApp(h, args):
            if isinstance(h, HVar) and not store.bound(h.ident):
                if h.ident == fvar.ident:
                    raise _Fail()
                # nested flex occurrence: allowed when its atom arguments
                # are all in scope of the new binder
                new_args = []
                for a in args:
                    atom = _eta_atom(a)
                    if atom is None:
                        raise NotPattern("nested non-atom flex argument", {h.ident, fvar.ident})
                    new_args.append(_invert(_atom_expand(atom, a), fvar, argmap, store, local))
                return happ_raw(h, tuple(new_args))
            return happ_raw(
                _invert(h, fvar, argmap, store, local),
                tuple(_invert(a, fvar, argmap, store, local) for a in args),
            )
        case HLam(ty, b):
            return HLam(ty, _invert(b, fvar, argmap, store, local + 1))
    raise TypeError(f"not a term: {t!r}")


def _atom_expand(atom: HTerm, original: HTerm) -> HTerm:
    # keep the original eta-long shape; inversion maps its head atom
    return original


class _Fail(Exception):
    pass


def _pattern_args(args: list[HTerm]) -> dict | None:
    """Map distinct nom/bound atoms to binder positions; None if not a
    pattern argument list."""
    argmap: dict = {}
    for i, a in enumerate(args):
        atom = _eta_atom(a)
        if atom is None:
            return None
        key = ("nom", atom) if isinstance(atom, HNom) else ("bound", atom.ix)
        if key in argmap:
            return None  # repeated atom
        argmap[key] = len(args) - 1 - i
    return argmap


def _bind_flex(F: HVar, args: list[HTerm], rhs: HTerm, store: GStore) -> GStore | None:
    argmap = _pattern_args(args)
    if argmap is None:
        raise NotPattern("flex head applied to non-pattern arguments", {F.ident})
    try:
        body = _invert(rhs, F, argmap, store, 0)
    except _Fail:
        return None
    argtys, _ = ty_args(F.ty)
    val: HTerm = body
    for ty in reversed(argtys[: len(args)]):
        val = HLam(ty, val)
    val = normalize(val)
    try:
        if type_of(val) != F.ty:
            return None
    except HoasError:
        return None
    return gbind(F.ident, val, store)


def g_unify(t: HTerm, u: HTerm, store: GStore) -> GStore | None:
    t = gresolve(t, store)
    u = gresolve(u, store)
    if t == u:
        return store
    ft = _flex_view(t, store)
    fu = _flex_view(u, store)
    if ft and fu and ft[0].ident == fu[0].ident:
        F, a1 = ft
        _, a2 = fu
        m1, m2 = _pattern_args(a1), _pattern_args(a2)
        if m1 is None or m2 is None:
            raise NotPattern("flex-flex outside pattern fragment", {F.ident})
        keep = [i for i, (x, y) in enumerate(zip(a1, a2)) if x == y]
        argtys, res = ty_args(F.ty)
        newty = res
        for i in reversed(keep):
            newty = Arr(argtys[i], newty)
        G = fresh_hvar(F.ident, newty)
        st = _propagate_ban(store, G.ident, store.banned(F.ident))
        if st is None:
            return None
        body = happ_raw(G, tuple(HBound(len(a1) - 1 - i) for i in keep))
        val: HTerm = body
        for ty in reversed(argtys[: len(a1)]):
            val = HLam(ty, val)
        return gbind(F.ident, normalize(val), st)
    if ft and fu:
        F, a1 = ft
        G, a2 = fu
        m1, m2 = _pattern_args(a1), _pattern_args(a2)
        if m1 is None or m2 is None:
            raise NotPattern("flex-flex outside pattern fragment", {F.ident, G.ident})
        common = [k for k in m1 if k in m2]
        resty = ty_args(F.ty)[1]
        hty = resty
        atys: list[HTy] = []
        for k in common:
            atys.append(k[1].ty if k[0] == "nom" else ty_args(F.ty)[0][_pos(m1, k, len(a1))])
        for ty in reversed(atys):
            hty = Arr(ty, hty)
        H = fresh_hvar("H", hty)
        st = _propagate_ban(store, H.ident, store.banned(F.ident) | store.banned(G.ident))
        if st is None:
            return None

        def make_val(args: list[HTerm], m: dict) -> HTerm:
            body = happ_raw(H, tuple(HBound(m[k]) for k in common))
            val: HTerm = body
            for ty in reversed(ty_args_of(args)):
                val = HLam(ty, val)
            return normalize(val)

        def ty_args_of(args: list[HTerm]) -> list[HTy]:
            f = F if args is a1 else G
            return ty_args(f.ty)[0][: len(args)]

        st = gbind(F.ident, make_val(a1, m1), st)
        if st is None:
            return None
        return gbind(G.ident, make_val(a2, m2), st)
    if ft:
        return _bind_flex(ft[0], ft[1], u, store)
    if fu:
        return _bind_flex(fu[0], fu[1], t, store)
    match (t, u):
        case (HLam(ty1, b1), HLam(ty2, b2)):
            if ty1 != ty2:
                return None
            return g_unify(b1, b2, store)
        case (HApp(h1, a1), HApp(h2, a2)):
            if h1 != h2 or len(a1) != len(a2):
                return None
            out = store
            for x, y in zip(a1, a2):
                nxt = g_unify(x, y, out)
                if nxt is None:
                    return None
                out = nxt
            return out
        case _:
            return None


def _pos(m: dict, k, n: int) -> int:
    return n - 1 - m[k]


def pattern_unify(problem: PatternUnifProblem, store: GStore = EMPTY_GSTORE) -> GStore | None:
    """Most general unifier within the pattern fragment; raises NotPattern
    outside it."""
    out: GStore | None = store
    for t, u in problem.equations:
        out = g_unify(t, u, out)
        if out is None:
            return None
    return out


# ---------------------------------------------------------------------------
# Closed-term enumeration (oracle witnesses and final fill-in)


def henum(sig: HSignature, ty: HTy, noms: list[HNom], max_size: int, env: tuple[HTy, ...] = ()):
    """Closed eta-long terms of a type, sizes ascending, built from the
    signature's constants, the given nominal constants, and bound variables."""
    for size in range(1, max_size + 1):
        yield from _henum_sized(sig, ty, noms, size, env)


def _henum_sized(sig: HSignature, ty: HTy, noms: list[HNom], size: int, env: tuple[HTy, ...]):
    if isinstance(ty, Arr):
        if size >= 2:
            for body in _henum_sized(sig, ty.right, noms, size - 1, (ty.left,) + env):
                yield HLam(ty.left, body)
        return
    # heads: bound vars, nominal constants, constants with result ty
    heads: list[HTerm] = []
    for i, ety in enumerate(env):
        heads.append((HBound(i)))
    for n in noms:
        if n.ty == ty:
            heads.append(n)
    for cid, cty in sig.consts.items():
        if ty_args(cty)[1] == ty and cty != "o" and not (isinstance(cty, str) and cty == "o"):
            heads.append(HCon(cid, cty))
    for h in heads:
        hty = type_of(h, env)
        argtys, res = ty_args(hty)
        if res != ty:
            continue
        if not argtys:
            if size == 1:
                yield normalize(h, env)
            continue
        budget = size - 1
        for parts in _parts(budget, len(argtys)):
            for combo in itertools.product(
                *(list(_henum_sized(sig, at, noms, s, env)) for at, s in zip(argtys, parts))
            ):
                yield normalize(happ_raw(h, combo), env)


def _parts(total: int, k: int):
    if k == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - k + 2):
        for rest in _parts(total - first, k - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# Search


@dataclass(frozen=True)
class _GState:
    store: GStore
    avail: tuple[HNom, ...]

    def add_nom(self, n: HNom) -> "_GState":
        if n in self.avail:
            return self
        return _GState(self.store, tuple(sorted(self.avail + (n,), key=lambda m: (m.ty, m.ident))))

    def with_store(self, store: GStore) -> "_GState":
        return _GState(store, self.avail)


class _GCtx:
    def __init__(self, sig: HSignature, defs, lim: SearchLimits, oracle: bool):
        self.sig = sig
        self.defs = tuple(defs)
        self.lim = lim
        self.oracle = oracle
        self.vtypes: dict[str, HTy] = {}
        self.depth_cutoff = False
        self.limit_cutoff = False
        self.exempt = frozenset(c.cid for c in defs if c.depth_exempt)

    def metavar(self, stem: str, ty: HTy) -> HVar:
        v = fresh_hvar(stem, ty)
        self.vtypes[v.ident] = ty
        return v


def _try_unify(eqs, state: _GState, ctx: _GCtx) -> Iterator[_GState]:
    """Unify equations, with bounded-enumeration fallback outside the
    pattern fragment."""
    try:
        out = state.store
        for t, u in eqs:
            nxt = g_unify(t, u, out)
            if nxt is None:
                return
            out = nxt
        yield state.with_store(out)
        return
    except NotPattern as e:
        todo = [x for x in sorted(e.vars_involved) if x in ctx.vtypes and not state.store.bound(x)]
        if not todo:
            ctx.limit_cutoff = True
            return
        x = todo[0]
        ty = ctx.vtypes[x]
        for v in henum(ctx.sig, ty, list(state.avail), ctx.lim.term_size_bound):
            st = gbind(x, v, state.store)
            if st is None:
                continue
            yield from _try_unify(eqs, state.with_store(st), ctx)
        ctx.limit_cutoff = True


def _ban_new_nom(state: _GState, ctx: _GCtx, c: HNom) -> GStore | None:
    """A freshly introduced constant is out of scope for older metavariables."""
    store = state.store
    for x in list(ctx.vtypes):
        if not store.bound(x):
            nxt = _propagate_ban(store, x, frozenset({c}))
            if nxt is None:
                return None
            store = nxt
    return store


def def_unfold_meta(
    clause: DefClause, args: tuple[HTerm, ...], state: _GState, ctx: _GCtx
) -> Iterator[tuple[dict[str, HVar], dict[str, HVar], _GState]]:
    """Unfold a clause against an atom by pattern unification; yields the
    variable maps for universals (x's) and nabla-heads (z's)."""
    xmap = {x: ctx.metavar(x, ty) for x, ty in clause.universals}
    zmap = {z: ctx.metavar(z, ty) for z, ty in clause.nabla}
    store = state.store
    if zmap:
        zids = tuple(v.ident for v in zmap.values())
        xids = tuple(v.ident for v in xmap.values())
        store = replace(
            store,
            nom_only=store.nom_only | set(zids),
            groups=store.groups + (zids,),
            links=store.links + tuple((z, xids) for z in zids),
        )
    sub = {**xmap, **zmap}
    head = [hsubstitute_term(a, sub) for a in clause.head_args]
    # monomorphic discipline: argument types must line up (this is what
    # separates the type-indexed instances of the distinguished predicates)
    try:
        if [type_of(h) for h in head] != [type_of(a) for a in args]:
            return
    except HoasError:
        return
    st0 = state.with_store(store)
    for st in _try_unify(list(zip(head, args)), st0, ctx):
        yield xmap, zmap, st


def def_unfold(
    sig: HSignature, clause: DefClause, pred: str, args: tuple[HTerm, ...], lim: SearchLimits = SearchLimits()
) -> Iterator[Formula]:
    """Public single-clause unfolding for a closed atom: yields each body
    instance; raises NotPattern for non-pattern problems."""
    if clause.pred != pred:
        return
    ctx = _GCtx(sig, (clause,), lim, oracle=False)
    noms = sorted({n for a in args for n in hsupport(a)}, key=lambda m: (m.ty, m.ident))
    state = _GState(EMPTY_GSTORE, tuple(noms))
    for xmap, zmap, st in def_unfold_meta(clause, args, state, ctx):
        fill = _gfill(ctx, st)
        if fill is None:
            continue
        store = fill
        theta = {x: gresolve(v, store) for x, v in xmap.items()}
        body = fsubstitute(clause.body, theta)
        if fvars(body):
            continue
        yield fnormalize(body)


# ---------------------------------------------------------------------------
# The prover


def _gprove(fm: Formula, state: _GState, depth: int, ctx: _GCtx) -> Iterator[tuple[_GState, GDerivation]]:
    match fm:
        case FTop():
            yield state, GDerivation(TOP_R, fm)
        case FEq(l, r):
            if ctx.oracle:
                if gresolve(l, state.store) == gresolve(r, state.store):
                    yield state, GDerivation(EQ_R, fm)
                return
            for st in _try_unify([(l, r)], state, ctx):
                yield st, GDerivation(EQ_R, fm)
        case FAnd(l, r):
            for st1, d1 in _gprove(l, state, depth, ctx):
                for st2, d2 in _gprove(r, st1, depth, ctx):
                    yield st2, GDerivation(AND_R, fm, children=(d1, d2))
        case FOr(l, r):
            for st, d in _gprove(l, state, depth, ctx):
                yield st, GDerivation(OR_R_LEFT, fm, children=(d,))
            for st, d in _gprove(r, state, depth, ctx):
                yield st, GDerivation(OR_R_RIGHT, fm, children=(d,))
        case FExists(ty, body):
            if ctx.oracle:
                for w in henum(ctx.sig, ty, list(state.avail), ctx.lim.term_size_bound):
                    inner = fnormalize(finstantiate(body, w))
                    for st, d in _gprove(inner, state, depth, ctx):
                        yield st, GDerivation(EXISTS_R, fm, witness=w, children=(d,))
                ctx.limit_cutoff = True
                return
            m = ctx.metavar("W", ty)
            inner = fnormalize(finstantiate(body, m))
            for st, d in _gprove(inner, state, depth, ctx):
                yield st, GDerivation(EXISTS_R, fm, witness=m, children=(d,))
        case FNabla(ty, body):
            c = fresh_nom("n", ty)
            store = _ban_new_nom(state, ctx, c)
            if store is None:
                return
            st0 = state.with_store(store).add_nom(c)
            inner = fnormalize(finstantiate(body, c))
            for st, d in _gprove(inner, st0, depth, ctx):
                yield st, GDerivation(NABLA_R, fm, nom=c, children=(d,))
        case FAtom(p, args):
            for clause in ctx.defs:
                if clause.pred != p:
                    continue
                counts = 0 if clause.cid in ctx.exempt else 1
                if depth < counts + 0 and counts:
                    ctx.depth_cutoff = True
                    continue
                if ctx.oracle and clause.nabla:
                    yield from _oracle_unfold(clause, fm, args, state, depth - counts, ctx)
                    continue
                for xmap, zmap, st in def_unfold_meta(clause, args, state, ctx):
                    inner = fnormalize(fsubstitute(clause.body, dict(xmap)))
                    for st2, d in _gprove(inner, st, depth - counts, ctx):
                        yield st2, GDerivation(
                            DEF_R,
                            fm,
                            cid=clause.cid,
                            theta=tuple(sorted((x, v) for x, v in xmap.items())),
                            znoms=tuple(sorted((z, v) for z, v in zmap.items())),
                            children=(d,),
                        )
    return


def _oracle_unfold(clause, fm, args, state: _GState, depth: int, ctx: _GCtx):
    """defR with nabla-heads in oracle mode: enumerate the head constants."""
    zs = list(clause.nabla)
    cands = list(state.avail) + [fresh_nom(z, ty) for z, ty in zs]

    def choose(i: int, used: tuple[HNom, ...]):
        if i == len(zs):
            yield used
            return
        _, ty = zs[i]
        for c in cands:
            if c.ty == ty and c not in used:
                yield from choose(i + 1, used + (c,))

    for chosen in choose(0, ()):
        xmap = {x: ctx.metavar(x, ty) for x, ty in clause.universals}
        sub: dict[str, HTerm] = dict(xmap)
        sub.update({z: c for (z, _), c in zip(zs, chosen)})
        head = [hsubstitute_term(a, sub) for a in clause.head_args]
        try:
            if [type_of(h) for h in head] != [type_of(a) for a in args]:
                continue
        except HoasError:
            continue
        store = state.store
        for x, v in xmap.items():
            nxt = _propagate_ban(store, v.ident, frozenset(chosen))
            if nxt is None:
                store = None
                break
            store = nxt
        if store is None:
            continue
        for st in _try_unify(list(zip(head, args)), state.with_store(store), ctx):
            inner = fnormalize(fsubstitute(clause.body, dict(xmap)))
            for st2, d in _gprove(inner, st, depth, ctx):
                yield st2, GDerivation(
                    DEF_R,
                    fm,
                    cid=clause.cid,
                    theta=tuple(sorted((x, v) for x, v in xmap.items())),
                    znoms=tuple(
                        sorted((z, c) for (z, _), c in zip(zs, chosen))
                    ),
                    children=(d,),
                )


# ---------------------------------------------------------------------------
# Final grounding


def _gfill(ctx: _GCtx, state: _GState) -> GStore | None:
    store = state.store
    for x, ty in sorted(ctx.vtypes.items()):
        if store.bound(x):
            continue
        if x in store.nom_only:
            if not isinstance(ty, str):
                return None
            c = fresh_nom("n", ty)
            st = gbind(x, c, store)
        else:
            banned = store.banned(x)
            chosen = None
            for v in henum(ctx.sig, ty, list(state.avail), ctx.lim.term_size_bound):
                if not (hsupport(v) & banned):
                    chosen = v
                    break
            if chosen is None and isinstance(ty, str) and ty in ctx.sig.nominal_types:
                chosen = fresh_nom("n", ty)
            if chosen is None:
                ctx.limit_cutoff = True
                return None
            st = gbind(x, chosen, store)
        if st is None:
            ctx.limit_cutoff = True
            return None
        store = st
    return store


def _gground_formula(fm: Formula, store: GStore) -> Formula:
    theta = {}
    for x in fvars(fm):
        v = gresolve(HVar(x, "?"), store)  # type: ignore[arg-type]
        if term_hvars(v):
            raise HoasError(f"metavariable {x} not grounded")
        theta[x] = v
    return fnormalize(fsubstitute(fm, theta))


def _gextract(node: GDerivation, store: GStore) -> GDerivation:
    fm = _gground_formula(node.formula, store)
    witness = gresolve(node.witness, store) if node.witness is not None else None
    theta = None
    if node.theta is not None:
        theta = tuple((x, gresolve(v, store)) for x, v in node.theta)
    znoms = None
    if node.znoms is not None:
        zs = []
        for z, v in node.znoms:
            rv = gresolve(v, store) if not isinstance(v, HNom) else v
            assert isinstance(rv, HNom), rv
            zs.append((z, rv))
        znoms = tuple(zs)
    return GDerivation(
        node.rule,
        fm,
        witness=witness,
        nom=node.nom,
        cid=node.cid,
        theta=theta,
        znoms=znoms,
        children=tuple(_gextract(c, store) for c in node.children),
    )


# ---------------------------------------------------------------------------
# Entry points


def gprove(
    sig: HSignature,
    defs,
    fm: Formula,
    lim: SearchLimits = SearchLimits(),
    oracle: bool = False,
    check: bool = True,
) -> GResult:
    """Search for a derivation of the closed formula fm."""
    if fvars(fm):
        raise HoasError("gprove requires a closed formula")
    fm = fnormalize(fm)
    noms = tuple(sorted(fsupport(fm), key=lambda m: (m.ty, m.ident)))
    limit_hit = False
    for depth in range(1, lim.max_unfoldings + 1):
        ctx = _GCtx(sig, defs, lim, oracle)
        state = _GState(EMPTY_GSTORE, noms)
        for st, node in _gprove(fm, state, depth, ctx):
            store = _gfill(ctx, st)
            if store is None:
                continue
            d = _gextract(node, store)
            if check:
                assert gcheck(sig, defs, d), "internal: unchecked derivation"
            return GResult(d, PROVED)
        limit_hit = limit_hit or ctx.limit_cutoff
        if not ctx.depth_cutoff:
            return GResult(None, CUTOFF if limit_hit else EXHAUSTED)
    return GResult(None, CUTOFF)


# ---------------------------------------------------------------------------
# Checking


def gcheck(sig: HSignature, defs, d: GDerivation) -> bool:
    try:
        return _gcheck_node(sig, tuple(defs), d)
    except (HoasError, AssertionError, KeyError, IndexError, TypeError):
        return False


def _gcheck_node(sig: HSignature, defs, d: GDerivation) -> bool:
    fm = d.formula
    if fvars(fm):
        return False
    kids = d.children
    match d.rule:
        case "topR":
            return isinstance(fm, FTop) and not kids
        case "eqR":
            return isinstance(fm, FEq) and not kids and normalize(fm.l) == normalize(fm.r)
        case "andR":
            return (
                isinstance(fm, FAnd)
                and len(kids) == 2
                and kids[0].formula == fm.l
                and kids[1].formula == fm.r
                and all(_gcheck_node(sig, defs, c) for c in kids)
            )
        case "orR-left":
            return (
                isinstance(fm, FOr)
                and len(kids) == 1
                and kids[0].formula == fm.l
                and _gcheck_node(sig, defs, kids[0])
            )
        case "orR-right":
            return (
                isinstance(fm, FOr)
                and len(kids) == 1
                and kids[0].formula == fm.r
                and _gcheck_node(sig, defs, kids[0])
            )
        case "existsR":
            if not (isinstance(fm, FExists) and len(kids) == 1 and d.witness is not None):
                return False
            w = d.witness
            if not is_closed(w) or type_of(w) != fm.ty:
                return False
            expected = fnormalize(finstantiate(fm.body, w))
            return kids[0].formula == expected and _gcheck_node(sig, defs, kids[0])
        case "nablaR":
            if not (isinstance(fm, FNabla) and len(kids) == 1 and d.nom is not None):
                return False
            c = d.nom
            if c.ty != fm.ty or c in fsupport(fm):
                return False
            expected = fnormalize(finstantiate(fm.body, c))
            return kids[0].formula == expected and _gcheck_node(sig, defs, kids[0])
        case "defR":
            if not (isinstance(fm, FAtom) and len(kids) == 1 and d.cid is not None):
                return False
            clause = next((c for c in defs if c.cid == d.cid), None)
            if clause is None or clause.pred != fm.pred:
                return False
            theta = dict(d.theta or ())
            znoms = dict(d.znoms or ())
            if set(theta) != {x for x, _ in clause.universals}:
                return False
            if set(znoms) != {z for z, _ in clause.nabla}:
                return False
            zs = [znoms[z] for z, _ in clause.nabla]
            if len(set(zs)) != len(zs):
                return False  # must be unique nominal constants
            for (z, ty), c in zip(clause.nabla, zs):
                if not isinstance(c, HNom) or c.ty != ty:
                    return False
            supp_x: set[HNom] = set()
            for x, ty in clause.universals:
                v = theta[x]
                if not is_closed(v) or type_of(v) != ty:
                    return False
                supp_x |= hsupport(v)
            if supp_x & set(zs):
                return False
            sub: dict[str, HTerm] = dict(theta)
            sub.update({z: c for z, c in znoms.items()})
            for goal_arg, head_arg in zip(fm.args, clause.head_args):
                if normalize(hsubstitute_term(head_arg, sub)) != normalize(goal_arg):
                    return False
            expected = fnormalize(fsubstitute(clause.body, theta))
            return kids[0].formula == expected and _gcheck_node(sig, defs, kids[0])
    return False


# ---------------------------------------------------------------------------
# JSON


def gderivation_to_json(d: GDerivation) -> dict:
    obj: dict = {"rule": d.rule, "goal": print_formula(d.formula)}
    w: dict = {}
    if d.witness is not None:
        w["exists"] = print_term(d.witness)
    if d.nom is not None:
        w["nabla"] = [d.nom.ident, d.nom.ty]
    if d.cid is not None:
        w["clause"] = d.cid
        w["theta"] = {x: print_term(v) for x, v in d.theta or ()}
        w["znoms"] = {z: [c.ident, c.ty] for z, c in d.znoms or ()}
    if w:
        obj["witnesses"] = w
    obj["children"] = [gderivation_to_json(c) for c in d.children]
    return obj


def gderivation_from_json(sig: HSignature, defs, obj: dict) -> GDerivation:
    fm = parse_gm_formula(sig, obj["goal"])
    w = obj.get("witnesses", {})
    witness = None
    if "exists" in w:
        assert isinstance(fm, FExists)
        witness = parse_gm_term(sig, w["exists"], expected=fm.ty)
    nom = None
    if "nabla" in w:
        nom = HNom(w["nabla"][0], w["nabla"][1])
    cid = w.get("clause")
    theta = None
    znoms = None
    if cid is not None:
        clause = next(c for c in defs if c.cid == cid)
        utys = dict(clause.universals)
        theta = tuple(
            sorted((x, parse_gm_term(sig, s, expected=utys[x])) for x, s in w.get("theta", {}).items())
        )
        znoms = tuple(sorted((z, HNom(c[0], c[1])) for z, c in w.get("znoms", {}).items()))
    children = tuple(gderivation_from_json(sig, defs, c) for c in obj.get("children", []))
    return GDerivation(
        obj["rule"], fm, witness=witness, nom=nom, cid=cid, theta=theta, znoms=znoms, children=children
    )


def gderivation_dump(d: GDerivation) -> str:
    return json.dumps(gderivation_to_json(d), indent=2)
