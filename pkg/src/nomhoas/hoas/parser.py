"""Parser for the .gm definition format.

Grammar (whitespace-insensitive, ``%`` line comments)::

    decl    ::= "kind" ID "." | "nominal" ID "." | "type" ID ty "."
    ty      ::= tyatom ("->" ty)?
    tyatom  ::= ID | "(" ty ")"
    clause  ::= ("nabla" LOWERID+ ",")? term (":=" formula)? "."
    formula ::= conj ("\\/" formula)?
    conj    ::= funit ("/\\" funit)*
    funit   ::= "true" | "(" formula ")" | "exists" UPPERID+ "," formula
              | "nabla" LOWERID+ "," formula | term ("=" term)?
    term    ::= atom atom*
    atom    ::= ID | "(" term ")" | LOWERID "\\" term

Capitalized free identifiers in a clause are its universal variables.  In
goal (query) context, free lowercase identifiers that are not declared
constants denote nominal constants.  The distinguished predicates fresh,
swap, and abst are typed per use (type-indexed families).
"""
from __future__ import annotations

import re
from dataclasses import dataclass

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
    HNom,
    HSignature,
    HTerm,
    HTy,
    HVar,
    HoasError,
    O,
    arr,
    clause_check,
    fnormalize,
    happ_raw,
    observe_nom_ident,
    ty_args,
    ty_contains_o,
)


class GmParseError(HoasError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+|%[^\n]*)
      | (?P<arrow>->)
      | (?P<coloneq>:=)
      | (?P<andop>/\\)
      | (?P<orop>\\/)
      | (?P<punct>[.,()=\\])
      | (?P<id>[A-Za-z][A-Za-z0-9_]*'*[0-9]*)
    """,
    re.VERBOSE,
)

KEYWORDS = {"kind", "nominal", "type", "nabla", "exists", "true"}


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Tok]:
    toks: list[Tok] = []
    pos, line, bol = 0, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise GmParseError(f"unexpected character {src[pos]!r}", line, pos - bol + 1)
        col = pos - bol + 1
        kind = m.lastgroup
        if kind == "ws":
            line += m.group().count("\n")
            if "\n" in m.group():
                bol = m.start() + m.group().rindex("\n") + 1
        elif kind == "id":
            observe_nom_ident(m.group())
            toks.append(Tok("id", m.group(), line, col))
        else:
            toks.append(Tok(kind if kind != "punct" else "punct", m.group(), line, col))
        pos = m.end()
    toks.append(Tok("eof", "", line, len(src) - bol + 1))
    return toks


# --- type descriptors for inference (str | Arr-tuple | TyVar) ---------------


class TyVar:
    __slots__ = ("id",)
    _n = 0

    def __init__(self):
        TyVar._n += 1
        self.id = TyVar._n


def _d_arr(l, r):
    return ("->", l, r)


def _ty_to_d(ty: HTy):
    if isinstance(ty, Arr):
        return _d_arr(_ty_to_d(ty.left), _ty_to_d(ty.right))
    return ty


class TyState:
    def __init__(self, sig: HSignature):
        self.sig = sig
        self.bind: dict[int, object] = {}
        self.must_nominal: list[tuple[object, Tok]] = []

    def resolve(self, t):
        while isinstance(t, TyVar) and t.id in self.bind:
            t = self.bind[t.id]
        if isinstance(t, tuple):
            return _d_arr(self.resolve(t[1]), self.resolve(t[2]))
        return t

    def unify(self, a, b, tok: Tok):
        a, b = self.resolve(a), self.resolve(b)
        if a is b or a == b:
            return
        if isinstance(a, TyVar):
            self.bind[a.id] = b
            return
        if isinstance(b, TyVar):
            self.bind[b.id] = a
            return
        if isinstance(a, tuple) and isinstance(b, tuple):
            self.unify(a[1], b[1], tok)
            self.unify(a[2], b[2], tok)
            return
        raise GmParseError(f"type mismatch: {_d_str(a)} vs {_d_str(b)}", tok.line, tok.col)

    def final(self, t, what: str, tok: Tok) -> HTy:
        t = self.resolve(t)
        if isinstance(t, TyVar):
            # default unconstrained positions when the signature is unambiguous
            if len(self.sig.nominal_types) == 1:
                return next(iter(self.sig.nominal_types))
            raise GmParseError(f"cannot infer type of {what}", tok.line, tok.col)
        if isinstance(t, tuple):
            return Arr(self.final(t[1], what, tok), self.final(t[2], what, tok))
        return t

    def check_nominal(self):
        for t, tok in self.must_nominal:
            ty = self.resolve(t)
            if isinstance(ty, TyVar):
                if len(self.sig.nominal_types) == 1:
                    self.bind[ty.id] = next(iter(self.sig.nominal_types))
                    continue
                raise GmParseError("cannot infer a nominal type here", tok.line, tok.col)
            if not (isinstance(ty, str) and ty in self.sig.nominal_types):
                raise GmParseError(f"{_d_str(ty)} is not a nominal type", tok.line, tok.col)


def _d_str(t) -> str:
    if isinstance(t, tuple):
        return f"({_d_str(t[1])} -> {_d_str(t[2])})"
    if isinstance(t, TyVar):
        return "?"
    return str(t)


# --- raw trees ---------------------------------------------------------------


@dataclass
class RId:
    ident: str
    tok: Tok


@dataclass
class RApp:
    head: object
    args: list


@dataclass
class RLam:
    binder: str
    body: object
    tok: Tok


class Parser:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        t = self.next()
        if t.text != text:
            raise GmParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def expect_id(self, what: str = "identifier") -> Tok:
        t = self.next()
        if t.kind != "id":
            raise GmParseError(f"expected {what}, found {t.text!r}", t.line, t.col)
        return t

    def at_kw(self, kw: str) -> bool:
        t = self.peek()
        return t.kind == "id" and t.text == kw

    # types

    def parse_ty(self) -> HTy:
        left = self.parse_ty_atom()
        if self.peek().kind == "arrow":
            self.next()
            return Arr(left, self.parse_ty())
        return left

    def parse_ty_atom(self) -> HTy:
        t = self.peek()
        if t.text == "(":
            self.next()
            ty = self.parse_ty()
            self.expect(")")
            return ty
        return self.expect_id("type").text

    # terms

    def parse_term(self):
        atoms = [self.parse_atom()]
        while self._at_atom_start():
            atoms.append(self.parse_atom())
        if len(atoms) == 1:
            return atoms[0]
        return RApp(atoms[0], atoms[1:])

    def _at_atom_start(self) -> bool:
        t = self.peek()
        if t.text == "(":
            return True
        return t.kind == "id" and t.text not in KEYWORDS

    def parse_atom(self):
        t = self.peek()
        if t.text == "(":
            self.next()
            inner = self.parse_term()
            self.expect(")")
            return inner
        tok = self.expect_id("term")
        if tok.text in KEYWORDS:
            raise GmParseError(f"keyword {tok.text!r} used as a term", tok.line, tok.col)
        if self.peek().text == "\\":
            self.next()
            if not tok.text[0].islower():
                raise GmParseError("abstraction binds a lowercase identifier", tok.line, tok.col)
            body = self.parse_term()
            return RLam(tok.text, body, tok)
        return RId(tok.text, tok)

    # formulas

    def parse_formula(self):
        left = self.parse_conj()
        if self.peek().kind == "orop":
            self.next()
            return ("or", left, self.parse_formula())
        return left

    def parse_conj(self):
        out = self.parse_funit()
        while self.peek().kind == "andop":
            self.next()
            out = ("and", out, self.parse_funit())
        return out

    def parse_funit(self):
        t = self.peek()
        if t.kind == "id" and t.text == "true":
            self.next()
            return ("true",)
        if t.kind == "id" and t.text in ("exists", "nabla"):
            self.next()
            binders = [self.expect_id("binder")]
            while self.peek().kind == "id" and self.peek().text != ",":
                binders.append(self.expect_id("binder"))
            self.expect(",")
            body = self.parse_formula()
            for btok in binders:
                if t.text == "exists" and not btok.text[0].isupper():
                    raise GmParseError("exists binds uppercase identifiers", btok.line, btok.col)
                if t.text == "nabla" and not btok.text[0].islower():
                    raise GmParseError("nabla binds lowercase identifiers", btok.line, btok.col)
            return (t.text, binders, body)
        if t.text == "(":
            # a parenthesized formula or a parenthesized term; try formula
            save = self.i
            self.next()
            try:
                f = self.parse_formula()
                self.expect(")")
                nxt = self.peek()
                if nxt.text == "=" or self._at_atom_start():
                    self.i = save  # it was a term after all
                else:
                    return f
            except GmParseError:
                self.i = save
        term = self.parse_term()
        if self.peek().text == "=":
            self.next()
            return ("eq", term, self.parse_term(), t)
        return ("atom", term, t)


# --- resolution --------------------------------------------------------------

FAMILY = {"fresh", "swap", "abst"}


class Scope:
    def __init__(self, sig: HSignature, st: TyState, goal_mode: bool):
        self.sig = sig
        self.st = st
        self.goal_mode = goal_mode
        self.stack: list[tuple[str, object]] = []  # binder ident -> tyvar/desc
        self.universals: dict[str, TyVar] = {}
        self.uni_order: list[str] = []
        self.nabla_head: dict[str, TyVar] = {}
        self.noms: dict[str, TyVar] = {}

    def lookup(self, ident: str, tok: Tok):
        for k in range(len(self.stack) - 1, -1, -1):
            if self.stack[k][0] == ident:
                return ("bound", len(self.stack) - 1 - k, self.stack[k][1])
        if ident in self.nabla_head:
            return ("nvar", ident, self.nabla_head[ident])
        if ident in self.sig.consts:
            return ("con", ident, _ty_to_d(self.sig.consts[ident]))
        if ident[0].isupper():
            if ident not in self.universals:
                self.universals[ident] = TyVar()
                self.uni_order.append(ident)
            return ("uvar", ident, self.universals[ident])
        if self.goal_mode:
            if ident not in self.noms:
                tv = TyVar()
                self.noms[ident] = tv
                self.st.must_nominal.append((tv, tok))
            return ("nom", ident, self.noms[ident])
        raise GmParseError(f"unknown identifier {ident}", tok.line, tok.col)


def _family_ty(pred: str, st: TyState, tok: Tok):
    nv = TyVar()
    st.must_nominal.append((nv, tok))
    tv = TyVar()
    if pred == "fresh":
        return _d_arr(nv, _d_arr(tv, O))
    if pred == "swap":
        return _d_arr(nv, _d_arr(nv, _d_arr(tv, _d_arr(tv, O))))
    if pred == "abst":
        return _d_arr(nv, _d_arr(tv, _d_arr(_d_arr(nv, tv), O)))
    raise AssertionError(pred)


def _resolve_term(raw, scope: Scope, expected, tok_hint: Tok):
    st = scope.st
    if isinstance(raw, RId):
        kind, payload, d = scope.lookup(raw.ident, raw.tok)
        st.unify(d, expected, raw.tok)
        return (kind, payload, d, raw.tok)
    if isinstance(raw, RLam):
        tv_arg, tv_body = TyVar(), TyVar()
        st.unify(expected, _d_arr(tv_arg, tv_body), raw.tok)
        scope.stack.append((raw.binder, tv_arg))
        body = _resolve_term(raw.body, scope, tv_body, raw.tok)
        scope.stack.pop()
        return ("lam", tv_arg, body, raw.tok)
    if isinstance(raw, RApp):
        head = raw.head
        arg_tvs = [TyVar() for _ in raw.args]
        head_ty = expected
        for tv in reversed(arg_tvs):
            head_ty = _d_arr(tv, head_ty)
        if isinstance(head, RId) and head.ident in FAMILY and not scope.goal_mode or \
           isinstance(head, RId) and head.ident in FAMILY and head.ident not in scope.sig.consts:
            fam_ty = _family_ty(head.ident, st, head.tok)
            st.unify(fam_ty, head_ty, head.tok)
            rhead = ("con", head.ident, fam_ty, head.tok)
        else:
            rhead = _resolve_term(head, scope, head_ty, tok_hint)
        rargs = [
            _resolve_term(a, scope, tv, tok_hint) for a, tv in zip(raw.args, arg_tvs)
        ]
        return ("app", rhead, rargs, tok_hint)
    raise AssertionError(raw)


def _resolve_formula(raw, scope: Scope):
    st = scope.st
    match raw:
        case ("true",):
            return ("true",)
        case ("and", l, r):
            return ("and", _resolve_formula(l, scope), _resolve_formula(r, scope))
        case ("or", l, r):
            return ("or", _resolve_formula(l, scope), _resolve_formula(r, scope))
        case ("exists", binders, body):
            tvs = []
            for b in binders:
                tv = TyVar()
                scope.stack.append((b.text, tv))
                tvs.append(tv)
            inner = _resolve_formula(body, scope)
            for _ in binders:
                scope.stack.pop()
            return ("exists", list(zip([b.text for b in binders], tvs)), inner)
        case ("nabla", binders, body):
            tvs = []
            for b in binders:
                tv = TyVar()
                st.must_nominal.append((tv, b))
                scope.stack.append((b.text, tv))
                tvs.append(tv)
            inner = _resolve_formula(body, scope)
            for _ in binders:
                scope.stack.pop()
            return ("nabla", list(zip([b.text for b in binders], tvs)), inner)
        case ("eq", l, r, tok):
            tv = TyVar()
            return ("eq", _resolve_term(l, scope, tv, tok), _resolve_term(r, scope, tv, tok), tv, tok)
        case ("atom", term, tok):
            return ("atom", _resolve_term(term, scope, O, tok), tok)
    raise AssertionError(raw)


def _finalize_term(node, st: TyState) -> HTerm:
    kind = node[0]
    if kind == "bound":
        return HBound(node[1])
    if kind == "con":
        return HCon(node[1], st.final(node[2], node[1], node[3]))
    if kind == "uvar" or kind == "nvar":
        return HVar(node[1], st.final(node[2], node[1], node[3]))
    if kind == "nom":
        ty = st.final(node[2], node[1], node[3])
        return HNom(node[1], ty)  # type: ignore[arg-type]
    if kind == "lam":
        return HLam_(st.final(node[1], "binder", node[3]), _finalize_term(node[2], st))
    if kind == "app":
        return happ_raw(_finalize_term(node[1], st), tuple(_finalize_term(a, st) for a in node[2]))
    raise AssertionError(node)


def HLam_(ty: HTy, body: HTerm):
    from .syntax import HLam

    return HLam(ty, body)


def _finalize_formula(node, st: TyState, sig: HSignature, tok0: Tok) -> Formula:
    match node:
        case ("true",):
            return FTop()
        case ("and", l, r):
            return FAnd(_finalize_formula(l, st, sig, tok0), _finalize_formula(r, st, sig, tok0))
        case ("or", l, r):
            return FOr(_finalize_formula(l, st, sig, tok0), _finalize_formula(r, st, sig, tok0))
        case ("exists", binders, body):
            out = _finalize_formula(body, st, sig, tok0)
            for ident, tv in reversed(binders):
                out = FExists(st.final(tv, ident, tok0), out)
            return out
        case ("nabla", binders, body):
            out = _finalize_formula(body, st, sig, tok0)
            for ident, tv in reversed(binders):
                ty = st.final(tv, ident, tok0)
                if not isinstance(ty, str) or ty not in sig.nominal_types:
                    raise GmParseError(f"nabla binder {ident} at non-nominal type {ty}", tok0.line, tok0.col)
                out = FNabla(ty, out)
            return out
        case ("eq", l, r, tv, tok):
            ty = st.final(tv, "equation", tok)
            if ty_contains_o(ty):
                raise GmParseError("equality at a type containing o", tok.line, tok.col)
            return FEq(_finalize_term(l, st), _finalize_term(r, st))
        case ("atom", term, tok):
            t = _finalize_term(term, st)
            if isinstance(t, HApp):
                head, args = t.head, t.args
            else:
                head, args = t, ()
            if not isinstance(head, HCon):
                raise GmParseError("atom head must be a predicate constant", tok.line, tok.col)
            return FAtom(head.ident, args)
    raise AssertionError(node)


# --- top level ---------------------------------------------------------------


def parse_gm(text: str) -> tuple[HSignature, tuple[DefClause, ...]]:
    p = Parser(tokenize(text))
    base: set[str] = {O}
    nominal: set[str] = set()
    consts: dict[str, HTy] = {}
    raw_clauses = []
    while p.peek().kind != "eof":
        if p.at_kw("kind"):
            p.next()
            base.add(p.expect_id().text)
            p.expect(".")
        elif p.at_kw("nominal"):
            p.next()
            nt = p.expect_id().text
            base.add(nt)
            nominal.add(nt)
            p.expect(".")
        elif p.at_kw("type"):
            p.next()
            cid = p.expect_id()
            ty = p.parse_ty()
            p.expect(".")
            if cid.text in consts:
                raise GmParseError(f"constant {cid.text} declared twice", cid.line, cid.col)
            consts[cid.text] = ty
        else:
            raw_clauses.append(_parse_raw_clause(p))
    sig = HSignature(frozenset(base), frozenset(nominal), consts)
    clauses = tuple(
        _build_clause(sig, rc, idx) for idx, rc in enumerate(raw_clauses)
    )
    return sig, clauses


def _parse_raw_clause(p: Parser):
    nabla_toks: list[Tok] = []
    if p.at_kw("nabla"):
        p.next()
        nabla_toks.append(p.expect_id("nabla binder"))
        while p.peek().kind == "id":
            nabla_toks.append(p.expect_id("nabla binder"))
        p.expect(",")
    head_tok = p.peek()
    head = p.parse_term()
    body = None
    if p.peek().kind == "coloneq":
        p.next()
        body = p.parse_formula()
    p.expect(".")
    return (nabla_toks, head, body, head_tok)


def _build_clause(sig: HSignature, rc, idx: int) -> DefClause:
    nabla_toks, head, body, head_tok = rc
    st = TyState(sig)
    scope = Scope(sig, st, goal_mode=False)
    for t in nabla_toks:
        tv = TyVar()
        st.must_nominal.append((tv, t))
        scope.nabla_head[t.text] = tv
    rhead = _resolve_term(head, scope, O, head_tok)
    rbody = _resolve_formula(body, scope) if body is not None else ("true",)
    st.check_nominal()
    ht = _finalize_term(rhead, st)
    if isinstance(ht, HApp):
        hc, hargs = ht.head, ht.args
    else:
        hc, hargs = ht, ()
    if not isinstance(hc, HCon):
        raise GmParseError("clause head must be a predicate application", head_tok.line, head_tok.col)
    fbody = _finalize_formula(rbody, st, sig, head_tok)
    universals = tuple(
        (x, st.final(scope.universals[x], x, head_tok)) for x in scope.uni_order
    )
    nabla = tuple(
        (t.text, st.final(scope.nabla_head[t.text], t.text, t))  # type: ignore[misc]
        for t in nabla_toks
    )
    env = ()
    hargs = tuple(_norm_arg(a) for a in hargs)
    c = DefClause(
        universals=universals,
        nabla=nabla,  # type: ignore[arg-type]
        pred=hc.ident,
        head_args=hargs,
        body=fnormalize(fbody),
        cid=idx,
    )
    clause_check(sig, c)
    return c


def _norm_arg(a: HTerm) -> HTerm:
    from .syntax import normalize

    return normalize(a)


def parse_gm_formula(sig: HSignature, text: str) -> Formula:
    """Parse a closed query formula; free lowercase identifiers that are not
    declared constants become nominal constants."""
    p = Parser(tokenize(text))
    st = TyState(sig)
    scope = Scope(sig, st, goal_mode=True)
    raw = p.parse_formula()
    t = p.peek()
    if t.kind != "eof" and t.text != ".":
        raise GmParseError(f"trailing input {t.text!r}", t.line, t.col)
    rf = _resolve_formula(raw, scope)
    st.check_nominal()
    if scope.universals:
        raise GmParseError(f"query must be closed; found variables {scope.uni_order}", 1, 1)
    return fnormalize(_finalize_formula(rf, st, sig, Tok("id", "", 1, 1)))


def parse_gm_term(sig: HSignature, text: str, expected: HTy | None = None) -> HTerm:
    p = Parser(tokenize(text))
    st = TyState(sig)
    scope = Scope(sig, st, goal_mode=True)
    raw = p.parse_term()
    tv = _ty_to_d(expected) if expected is not None else TyVar()
    hint = p.peek()
    node = _resolve_term(raw, scope, tv, hint)
    st.check_nominal()
    if scope.universals:
        raise GmParseError(f"term must be closed; found variables {scope.uni_order}", 1, 1)
    from .syntax import normalize

    return normalize(_finalize_term(node, st))
