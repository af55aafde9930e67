"""Simply-typed lambda terms with nominal constants, and the formula and
definitional-clause layer over them.

Bound variables are de Bruijn indices, so alpha-equivalence is syntactic
equality; display names are regenerated by the printer.  Every stored term
is kept in beta-eta-long normal form: constructors normalize eagerly, and
equality of terms is equality of normal forms.  Nominal constants are
globally-identified atoms that inhabit designated nominal (base) types.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field


class HoasError(Exception):
    pass


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class Arr:
    left: "HTy"
    right: "HTy"

    def __str__(self) -> str:
        l = f"({self.left})" if isinstance(self.left, Arr) else str(self.left)
        return f"{l} -> {self.right}"


HTy = str | Arr

O = "o"  # the type of formulas


def arr(*tys: HTy) -> HTy:
    """arr(a, b, c) = a -> b -> c."""
    out = tys[-1]
    for t in reversed(tys[:-1]):
        out = Arr(t, out)
    return out


def ty_args(ty: HTy) -> tuple[list[HTy], str]:
    """Split a type into (argument types, base result)."""
    args = []
    while isinstance(ty, Arr):
        args.append(ty.left)
        ty = ty.right
    return args, ty


def ty_contains_o(ty: HTy) -> bool:
    if isinstance(ty, Arr):
        return ty_contains_o(ty.left) or ty_contains_o(ty.right)
    return ty == O


@dataclass(frozen=True)
class HSignature:
    base_types: frozenset[str]
    nominal_types: frozenset[str]
    consts: dict[str, HTy] = field(default_factory=dict)

    def __post_init__(self):
        if not self.nominal_types <= self.base_types:
            raise HoasError("nominal types must be declared base types")
        for c, ty in self.consts.items():
            self._check_ty(ty, c)

    def _check_ty(self, ty: HTy, owner: str) -> None:
        if isinstance(ty, Arr):
            self._check_ty(ty.left, owner)
            self._check_ty(ty.right, owner)
        elif ty != O and ty not in self.base_types:
            raise HoasError(f"{owner}: undeclared type {ty}")

    def is_nominal(self, ty: HTy) -> bool:
        return isinstance(ty, str) and ty in self.nominal_types

    def is_pred(self, name: str) -> bool:
        ty = self.consts.get(name)
        return ty is not None and ty_args(ty)[1] == O


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class HBound:
    ix: int


@dataclass(frozen=True)
class HVar:
    """Free variable; doubles as the engines' instantiable metavariable."""

    ident: str
    ty: HTy


@dataclass(frozen=True)
class HCon:
    ident: str
    ty: HTy


@dataclass(frozen=True)
class HNom:
    """Nominal constant; identity is (identifier, type)."""

    ident: str
    ty: str


@dataclass(frozen=True)
class HApp:
    head: "HTerm"  # atomic in normal form
    args: tuple["HTerm", ...]


@dataclass(frozen=True)
class HLam:
    argty: HTy
    body: "HTerm"


HTerm = HBound | HVar | HCon | HNom | HApp | HLam


def shift(t: HTerm, d: int, cutoff: int = 0) -> HTerm:
    if d == 0:
        return t
    match t:
        case HBound(k):
            return HBound(k + d) if k >= cutoff else t
        case HVar() | HCon() | HNom():
            return t
        case HApp(h, args):
            return HApp(shift(h, d, cutoff), tuple(shift(a, d, cutoff) for a in args))
        case HLam(ty, b):
            return HLam(ty, shift(b, d, cutoff + 1))
    raise TypeError(f"not a term: {t!r}")


def subst_bound(t: HTerm, v: HTerm, j: int = 0) -> HTerm:
    """Replace index j by v (which gets shifted), lowering higher indices."""
    match t:
        case HBound(k):
            if k == j:
                return shift(v, j)
            return HBound(k - 1) if k > j else t
        case HVar() | HCon() | HNom():
            return t
        case HApp(h, args):
            return happ_raw(subst_bound(h, v, j), tuple(subst_bound(a, v, j) for a in args))
        case HLam(ty, b):
            return HLam(ty, subst_bound(b, v, j + 1))
    raise TypeError(f"not a term: {t!r}")


def happ_raw(h: HTerm, args: tuple[HTerm, ...]) -> HTerm:
    """Application node without normalization; flattens spines."""
    if not args:
        return h
    if isinstance(h, HApp):
        return HApp(h.head, h.args + args)
    return HApp(h, args)


def type_of(t: HTerm, env: tuple[HTy, ...] = ()) -> HTy:
    match t:
        case HBound(k):
            return env[k]
        case HVar(_, ty) | HCon(_, ty) | HNom(_, ty):
            return ty
        case HLam(ty, b):
            return Arr(ty, type_of(b, (ty,) + env))
        case HApp(h, args):
            ty = type_of(h, env)
            for a in args:
                if not isinstance(ty, Arr):
                    raise HoasError(f"over-application at {t!r}")
                got = type_of(a, env)
                if got != ty.left:
                    raise HoasError(f"argument type {got} where {ty.left} expected")
                ty = ty.right
            return ty
    raise TypeError(f"not a term: {t!r}")


def _beta(t: HTerm, env: tuple[HTy, ...]) -> HTerm:
    match t:
        case HBound() | HVar() | HCon() | HNom():
            return t
        case HLam(ty, b):
            return HLam(ty, _beta(b, (ty,) + env))
        case HApp(h, args):
            h = _beta(h, env)
            args = list(args)
            while args and isinstance(h, HLam):
                h = _beta(subst_bound(h.body, _beta(args.pop(0), env)), env)
            if isinstance(h, HApp):  # flattened spine from substitution
                args = list(h.args) + args
                h = h.head
            return happ_raw(h, tuple(_beta(a, env) for a in args))
    raise TypeError(f"not a term: {t!r}")


def _eta(t: HTerm, env: tuple[HTy, ...]) -> HTerm:
    """Eta-expand a beta-normal term to its long form."""
    match t:
        case HLam(ty, b):
            return HLam(ty, _eta(b, (ty,) + env))
        case _:
            h, args = (t.head, t.args) if isinstance(t, HApp) else (t, ())
            missing, _ = ty_args(type_of(t, env))
            if not missing:
                return happ_raw(h, tuple(_eta(a, env) for a in args))
            k = len(missing)
            benv = tuple(reversed(missing)) + env
            spine = tuple(_eta(shift(a, k), benv) for a in args) + tuple(
                _eta(HBound(k - 1 - i), benv) for i in range(k)
            )
            out: HTerm = happ_raw(shift(h, k), spine)
            for mty in reversed(missing):
                out = HLam(mty, out)
            return out
    raise TypeError(f"not a term: {t!r}")


def normalize(t: HTerm, env: tuple[HTy, ...] = ()) -> HTerm:
    """Beta-eta-long normal form; idempotent."""
    return _eta(_beta(t, env), env)


def happ(h: HTerm, *args: HTerm, env: tuple[HTy, ...] = ()) -> HTerm:
    """Normalizing application constructor."""
    return normalize(happ_raw(h, tuple(args)), env)


def term_hvars(t: HTerm) -> set[str]:
    match t:
        case HBound() | HCon() | HNom():
            return set()
        case HVar(x, _):
            return {x}
        case HApp(h, args):
            out = term_hvars(h)
            for a in args:
                out |= term_hvars(a)
            return out
        case HLam(_, b):
            return term_hvars(b)
    raise TypeError(f"not a term: {t!r}")


def hsupport(t: HTerm) -> set[HNom]:
    """The nominal constants appearing in a term."""
    match t:
        case HBound() | HVar() | HCon():
            return set()
        case HNom():
            return {t}
        case HApp(h, args):
            out = hsupport(h)
            for a in args:
                out |= hsupport(a)
            return out
        case HLam(_, b):
            return hsupport(b)
    raise TypeError(f"not a term: {t!r}")


def is_closed(t: HTerm) -> bool:
    """No free variables and no dangling indices (nominal constants allowed)."""
    return not term_hvars(t) and _max_index(t) < 0


def _max_index(t: HTerm, depth: int = 0) -> int:
    match t:
        case HBound(k):
            return k - depth
        case HVar() | HCon() | HNom():
            return -1
        case HApp(h, args):
            return max(_max_index(h, depth), *(_max_index(a, depth) for a in args)) if args else _max_index(h, depth)
        case HLam(_, b):
            return _max_index(b, depth + 1)
    raise TypeError(f"not a term: {t!r}")


def hsubstitute_term(t: HTerm, s: dict[str, HTerm], env: tuple[HTy, ...] = ()) -> HTerm:
    """Capture-avoiding substitution for free variables; renormalizes."""
    if not s:
        return t
    return normalize(_hsub(t, s), env)


def _hsub(t: HTerm, s: dict[str, HTerm]) -> HTerm:
    match t:
        case HBound() | HCon() | HNom():
            return t
        case HVar(x, _):
            return s.get(x, t)
        case HApp(h, args):
            return happ_raw(_hsub(h, s), tuple(_hsub(a, s) for a in args))
        case HLam(ty, b):
            # substituted values are closed w.r.t. indices, so no shifting
            return HLam(ty, _hsub(b, s))
    raise TypeError(f"not a term: {t!r}")


def nom_swap(a: HNom, b: HNom, t: HTerm) -> HTerm:
    """Exchange two nominal constants everywhere, including under binders."""
    if a.ty != b.ty:
        raise HoasError(f"swapping nominal constants of different types: {a}, {b}")
    match t:
        case HNom():
            if t == a:
                return b
            if t == b:
                return a
            return t
        case HBound() | HVar() | HCon():
            return t
        case HApp(h, args):
            return HApp(nom_swap(a, b, h), tuple(nom_swap(a, b, x) for x in args))
        case HLam(ty, body):
            return HLam(ty, nom_swap(a, b, body))
    raise TypeError(f"not a term: {t!r}")


def nom_replace(t: HTerm, a: HNom, v: HTerm, env: tuple[HTy, ...] = ()) -> HTerm:
    """Replace a nominal constant by a closed term; renormalizes."""
    return normalize(_nrep(t, a, v), env)


def _nrep(t: HTerm, a: HNom, v: HTerm) -> HTerm:
    match t:
        case HNom():
            return v if t == a else t
        case HBound() | HVar() | HCon():
            return t
        case HApp(h, args):
            return happ_raw(_nrep(h, a, v), tuple(_nrep(x, a, v) for x in args))
        case HLam(ty, b):
            return HLam(ty, _nrep(b, a, v))
    raise TypeError(f"not a term: {t!r}")


def bind_nominal(a: HNom, t: HTerm) -> HTerm:
    """The binder lambda a. t: abstracts every occurrence of the nominal
    constant a; the support of the result drops a."""
    body = _abstract(shift(t, 1), a, 0)
    return HLam(a.ty, body)


def _abstract(t: HTerm, a: HNom, depth: int) -> HTerm:
    match t:
        case HNom():
            return HBound(depth) if t == a else t
        case HBound() | HVar() | HCon():
            return t
        case HApp(h, args):
            return HApp(_abstract(h, a, depth), tuple(_abstract(x, a, depth) for x in args))
        case HLam(ty, b):
            return HLam(ty, _abstract(b, a, depth + 1))
    raise TypeError(f"not a term: {t!r}")


def raise_term(t: HTerm, v: str, vty: HTy, noms: tuple[HNom, ...], env: tuple[HTy, ...] = ()) -> HTerm:
    """Replace the variable v: vty by v applied to the given nominal
    constants, at the raised type noms -> vty."""
    if not noms:
        return t
    raised = HVar(v, arr(*[n.ty for n in noms], vty))
    return normalize(_hsub(t, {v: happ_raw(raised, noms)}), env)


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class FTop:
    pass


@dataclass(frozen=True)
class FAtom:
    pred: str
    args: tuple[HTerm, ...] = ()


@dataclass(frozen=True)
class FEq:
    l: HTerm
    r: HTerm


@dataclass(frozen=True)
class FAnd:
    l: "Formula"
    r: "Formula"


@dataclass(frozen=True)
class FOr:
    l: "Formula"
    r: "Formula"


@dataclass(frozen=True)
class FExists:
    ty: HTy
    body: "Formula"  # index 0 is the bound variable


@dataclass(frozen=True)
class FNabla:
    ty: str  # nominal type
    body: "Formula"


Formula = FTop | FAtom | FEq | FAnd | FOr | FExists | FNabla

TOP = FTop()


def fmap_terms(f, fm: Formula, env: tuple[HTy, ...] = ()) -> Formula:
    """Apply f to every term; f receives the tuple of formula-binder types
    crossed so far (innermost first; its length is the de Bruijn shift)."""

    def go(fm: Formula, env: tuple[HTy, ...]) -> Formula:
        match fm:
            case FTop():
                return fm
            case FAtom(p, args):
                return FAtom(p, tuple(f(a, env) for a in args))
            case FEq(l, r):
                return FEq(f(l, env), f(r, env))
            case FAnd(l, r):
                return FAnd(go(l, env), go(r, env))
            case FOr(l, r):
                return FOr(go(l, env), go(r, env))
            case FExists(ty, b):
                return FExists(ty, go(b, (ty,) + env))
            case FNabla(ty, b):
                return FNabla(ty, go(b, (ty,) + env))
        raise TypeError(f"not a formula: {fm!r}")

    return go(fm, env)


def fshift(fm: Formula, d: int, cutoff: int = 0) -> Formula:
    return fmap_terms(lambda t, env: shift(t, d, cutoff + len(env)), fm)


def finstantiate(fm: Formula, v: HTerm) -> Formula:
    """Open a quantifier body with a term for index 0 (shift-aware)."""
    return fmap_terms(lambda t, env: subst_bound(t, shift(v, len(env)), len(env)), fm)


def fnormalize(fm: Formula, sig_env: tuple[HTy, ...] = ()) -> Formula:
    return fmap_terms(lambda t, env: normalize(t, env), fm, sig_env)


def fsupport(fm: Formula) -> set[HNom]:
    out: set[HNom] = set()
    fmap_terms(lambda t, env: (out.update(hsupport(t)), t)[1], fm)
    return out


def fvars(fm: Formula) -> set[str]:
    out: set[str] = set()
    fmap_terms(lambda t, env: (out.update(term_hvars(t)), t)[1], fm)
    return out


def fnom_swap(a: HNom, b: HNom, fm: Formula) -> Formula:
    return fmap_terms(lambda t, env: nom_swap(a, b, t), fm)


def fnom_replace(fm: Formula, a: HNom, v: HTerm) -> Formula:
    return fmap_terms(lambda t, env: nom_replace(t, a, shift(v, len(env)), env), fm)


def fsubstitute(fm: Formula, s: dict[str, HTerm]) -> Formula:
    """Substitute closed terms for free variables, renormalizing."""
    return fmap_terms(
        lambda t, env: normalize(_hsub(t, {x: shift(v, len(env)) for x, v in s.items()}), env),
        fm,
    )


def fbind_nominal(a: HNom, fm: Formula) -> Formula:
    """Body for a nabla binder: abstracts a nominal constant into index 0."""
    return fmap_terms(lambda t, env: _abstract(shift(t, 1, len(env)), a, len(env)), fm)


def nabla_wrap(noms: tuple[HNom, ...], fm: Formula) -> Formula:
    """nabla a1 ... ak. fm with the constants abstracted, outermost first."""
    for a in reversed(noms):
        fm = FNabla(a.ty, fbind_nominal(a, fm))
    return fm


def fsize(fm: Formula) -> int:
    match fm:
        case FTop():
            return 1
        case FAtom(_, args):
            return 1 + len(args)
        case FEq(l, r):
            return 3
        case FAnd(l, r) | FOr(l, r):
            return 1 + fsize(l) + fsize(r)
        case FExists(_, b) | FNabla(_, b):
            return 1 + fsize(b)
    raise TypeError(f"not a formula: {fm!r}")


# ---------------------------------------------------------------------------
# Definitional clauses


# predicate families whose instances are type-indexed (monomorphic system;
# each used instance gets its own clause copies)
FAMILY_PREDS = ("fresh", "swap", "abst")


@dataclass(frozen=True)
class DefClause:
    """forall x's. [(nabla z's. pred(head_args)) := body]

    Universals and nabla-bound names occur in head_args as HVar nodes; the
    body is closed apart from the universals (its own nablas are real
    binders).  depth_exempt marks distinguished helper clauses whose
    unfolding does not count toward the search depth.
    """

    universals: tuple[tuple[str, HTy], ...]
    nabla: tuple[tuple[str, str], ...]
    pred: str
    head_args: tuple[HTerm, ...]
    body: Formula
    depth_exempt: bool = False
    cid: int = -1


def clause_check(sig: HSignature, c: DefClause) -> None:
    names = {x for x, _ in c.universals} | {z for z, _ in c.nabla}
    free = set()
    for a in c.head_args:
        free |= term_hvars(a)
    free |= fvars(c.body)
    if free - names:
        raise HoasError(f"clause {c.pred}: unbound variables {sorted(free - names)}")
    sup = fsupport(c.body)
    for a in c.head_args:
        sup |= hsupport(a)
    if sup:
        raise HoasError(f"clause {c.pred}: support must be empty, found {sorted(n.ident for n in sup)}")
    for z, ty in c.nabla:
        if ty not in sig.nominal_types:
            raise HoasError(f"clause {c.pred}: nabla at non-nominal type {ty}")


_nom_counter = itertools.count(1)


def fresh_nom(stem: str, ty: str) -> HNom:
    stem = stem.split("'", 1)[0] or "n"
    return HNom(f"{stem}'{next(_nom_counter)}", ty)


def observe_nom_ident(ident: str) -> None:
    if "'" in ident:
        tail = ident.rsplit("'", 1)[1]
        if tail.isdigit():
            k = int(tail)
            while True:
                if next(_nom_counter) > k:
                    break


_var_counter = itertools.count(1)


def fresh_hvar(stem: str, ty: HTy) -> HVar:
    stem = stem.split("'", 1)[0] or "X"
    return HVar(f"{stem}'{next(_var_counter)}", ty)
