"""Parser for the .apl nominal program format.

Grammar (whitespace-insensitive, ``%`` starts a line comment)::

    decl   ::= "nametype" ID "." | "kind" ID "."
             | "func" ID ":" (type ("," type)* "->")? ID "."
             | "pred" ID (":" type ("," type)*)? "."
    type   ::= ID | "<" ID ">" type
    clause ::= ("new" LOWERID ("," LOWERID)* ".")?
               ("forall" UPPERID ("," UPPERID)* ".")?
               atom (":-" goal)? "."
    goal   ::= "true" | atom | term "#" term | term "=" term
             | goal "," goal | goal ";" goal
             | "exists" UPPERID "." goal | "new" LOWERID "." goal
             | "(" goal ")"
    term   ::= LOWERID | UPPERID | LOWERID "(" term ("," term)* ")"
             | "(" term "~" term ")" "*" term | "<" term ">" term

``,`` binds tighter than ``;`` and quantifiers extend as far right as
possible.  Free lowercase identifiers that are not declared function
symbols denote names (captured by an implicit ``new``); free uppercase
identifiers denote variables (captured by an implicit ``forall``).
Types of names and variables are inferred from the declared symbols.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    Abs,
    AbsTy,
    App,
    FuncDecl,
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
    ProgramClause,
    Signature,
    Swap,
    Term,
    Ty,
    Var,
    clause_check_wellformed,
)


class ParseError(NominalError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+|%[^\n]*)
      | (?P<arrow>->)
      | (?P<coloneq>:-)
      | (?P<punct>[.:,;()<>#=~*])
      | (?P<id>[A-Za-z][A-Za-z0-9_]*'*[0-9]*)
    """,
    re.VERBOSE,
)

KEYWORDS = {"nametype", "kind", "func", "pred", "new", "forall", "exists", "true"}


@dataclass(frozen=True)
class Tok:
    kind: str  # 'id', 'punct', 'eof'
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Tok]:
    toks: list[Tok] = []
    pos, line, bol = 0, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - bol + 1)
        col = pos - bol + 1
        if m.lastgroup == "ws":
            line += m.group().count("\n")
            if "\n" in m.group():
                bol = m.start() + m.group().rindex("\n") + 1
        elif m.lastgroup == "id":
            NameSupply.observe(m.group())
            toks.append(Tok("id", m.group(), line, col))
        else:
            toks.append(Tok("punct", m.group(), line, col))
        pos = m.end()
    toks.append(Tok("eof", "", line, len(src) - bol + 1))
    return toks


# ---------------------------------------------------------------------------
# Type inference: small union-find over type descriptors


class TyVar:
    __slots__ = ("id",)
    _n = 0

    def __init__(self):
        TyVar._n += 1
        self.id = TyVar._n

    def __repr__(self):
        return f"?{self.id}"


# Inference-time type descriptors: a concrete type id, a variable, or
# ("abs", ntype descriptor, body descriptor).
TyD = object


def _ty_to_desc(ty: Ty) -> TyD:
    if isinstance(ty, AbsTy):
        return ("abs", ty.ntype, _ty_to_desc(ty.body))
    return ty


class TyState:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.bind: dict[int, TyD] = {}
        self.must_name: list[tuple[TyD, Tok]] = []

    def resolve(self, t: TyD) -> TyD:
        while isinstance(t, TyVar) and t.id in self.bind:
            t = self.bind[t.id]
        if isinstance(t, tuple):
            return ("abs", self.resolve(t[1]), self.resolve(t[2]))
        return t

    def unify(self, a: TyD, b: TyD, tok: Tok) -> None:
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
        raise ParseError(f"type mismatch: {_desc_str(a)} vs {_desc_str(b)}", tok.line, tok.col)

    def final(self, t: TyD, what: str, tok: Tok) -> Ty:
        t = self.resolve(t)
        if isinstance(t, TyVar):
            raise ParseError(f"cannot infer type of {what}", tok.line, tok.col)
        if isinstance(t, tuple):
            nt = self.final(t[1], what, tok)
            if not isinstance(nt, str):
                raise ParseError(f"abstraction over a non-name type in {what}", tok.line, tok.col)
            return AbsTy(nt, self.final(t[2], what, tok))
        return t


def _desc_str(t: TyD) -> str:
    if isinstance(t, tuple):
        return f"<{_desc_str(t[1])}>{_desc_str(t[2])}"
    return str(t)


# ---------------------------------------------------------------------------
# Raw AST built before name/variable resolution


@dataclass
class _RawId:
    ident: str
    tok: Tok
    args: list | None = None  # None: bare id; list: application


@dataclass
class _RawSwap:
    left: object
    right: object
    body: object
    tok: Tok


@dataclass
class _RawAbs:
    binder: object
    body: object
    tok: Tok


class Parser:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.i = 0

    # -- token helpers

    def peek(self, ahead: int = 0) -> Tok:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def expect_id(self, what: str = "identifier") -> Tok:
        t = self.next()
        if t.kind != "id":
            raise ParseError(f"expected {what}, found {t.text!r}", t.line, t.col)
        return t

    def at_keyword(self, kw: str) -> bool:
        t = self.peek()
        return t.kind == "id" and t.text == kw

    # -- types

    def parse_type(self) -> Ty:
        if self.peek().text == "<":
            self.next()
            nt = self.expect_id("name type").text
            self.expect(">")
            return AbsTy(nt, self.parse_type())
        return self.expect_id("type").text

    # -- terms (raw)

    def parse_term(self):
        t = self.peek()
        if t.text == "(":
            self.next()
            left = self.parse_term()
            if self.peek().text == "~":
                self.next()
                right = self.parse_term()
                self.expect(")")
                self.expect("*")
                body = self.parse_term()
                return _RawSwap(left, right, body, t)
            self.expect(")")
            return left
        if t.text == "<":
            self.next()
            binder = self.parse_term()
            self.expect(">")
            body = self.parse_term()
            return _RawAbs(binder, body, t)
        tok = self.expect_id("term")
        if tok.text in KEYWORDS:
            raise ParseError(f"keyword {tok.text!r} used as a term", tok.line, tok.col)
        if self.peek().text == "(":
            self.next()
            args = [self.parse_term()]
            while self.peek().text == ",":
                self.next()
                args.append(self.parse_term())
            self.expect(")")
            return _RawId(tok.text, tok, args)
        return _RawId(tok.text, tok)

    # -- goals (raw trees of tuples)

    def parse_goal(self):
        return self._parse_disj()

    def _parse_disj(self):
        g = self._parse_conj()
        while self.peek().text == ";":
            self.next()
            g = ("or", g, self._parse_conj())
        return g

    def _parse_conj(self):
        g = self._parse_unit()
        while self.peek().text == ",":
            self.next()
            g = ("and", g, self._parse_unit())
        return g

    def _parse_unit(self):
        t = self.peek()
        if t.kind == "id" and t.text == "true":
            self.next()
            return ("true",)
        if t.kind == "id" and t.text in ("exists", "new"):
            self.next()
            binder = self.expect_id("binder")
            if t.text == "exists" and not binder.text[0].isupper():
                raise ParseError("exists binds an uppercase variable", binder.line, binder.col)
            if t.text == "new" and not binder.text[0].islower():
                raise ParseError("new binds a lowercase name", binder.line, binder.col)
            self.expect(".")
            # quantifiers scope as far right as possible
            body = self.parse_goal()
            return (t.text, binder, body)
        if t.text == "(":
            self.next()
            g = self.parse_goal()
            self.expect(")")
            return g
        term = self.parse_term()
        nxt = self.peek()
        if nxt.text == "#":
            self.next()
            return ("fresh", term, self.parse_term(), t)
        if nxt.text == "=":
            self.next()
            return ("eq", term, self.parse_term(), t)
        if isinstance(term, _RawId) and term.args is not None or isinstance(term, _RawId):
            return ("atom", term, t)
        raise ParseError("expected a goal", t.line, t.col)


# ---------------------------------------------------------------------------
# Resolution: raw trees -> typed Term/Goal, with implicit quantifiers


class _ClauseScope:
    """Tracks names/variables of one clause during resolution."""

    def __init__(self, sig: Signature, state: TyState):
        self.sig = sig
        self.state = state
        self.free_names: dict[str, TyVar] = {}
        self.free_name_order: list[str] = []
        self.free_vars: dict[str, TyVar] = {}
        self.free_var_order: list[str] = []
        self.bound_names: dict[str, TyVar] = {}
        self.bound_vars: dict[str, TyVar] = {}
        self.spent: set[str] = set()
        self.explicit_names: list[str] | None = None
        self.explicit_vars: list[str] | None = None

    def name_tyvar(self, ident: str, tok: Tok) -> TyVar:
        if ident in self.spent:
            raise ParseError(f"name {ident} used outside its binder", tok.line, tok.col)
        if ident in self.bound_names:
            return self.bound_names[ident]
        if self.explicit_names is not None and ident not in self.explicit_names:
            raise ParseError(f"name {ident} is not in the clause's new-list", tok.line, tok.col)
        if ident not in self.free_names:
            tv = TyVar()
            self.free_names[ident] = tv
            self.free_name_order.append(ident)
            self.state.must_name.append((tv, tok))
        return self.free_names[ident]

    def var_tyvar(self, ident: str, tok: Tok) -> TyVar:
        if ident in self.spent:
            raise ParseError(f"variable {ident} used outside its binder", tok.line, tok.col)
        if ident in self.bound_vars:
            return self.bound_vars[ident]
        if self.explicit_vars is not None and ident not in self.explicit_vars:
            raise ParseError(f"variable {ident} is not in the clause's forall-list", tok.line, tok.col)
        if ident not in self.free_vars:
            self.free_vars[ident] = TyVar()
            self.free_var_order.append(ident)
        return self.free_vars[ident]


def _resolve_term(raw, scope: _ClauseScope, expected: TyD, tok_hint: Tok):
    sig, st = scope.sig, scope.state
    if isinstance(raw, _RawId):
        ident, tok = raw.ident, raw.tok
        if raw.args is None:
            if ident[0].isupper():
                tv = scope.var_tyvar(ident, tok)
                st.unify(tv, expected, tok)
                return ("var", ident, tv)
            if ident in sig.func_syms:
                decl = sig.func_syms[ident]
                if decl.args:
                    raise ParseError(f"{ident} expects arguments", tok.line, tok.col)
                st.unify(decl.result, expected, tok)
                return ("app", ident, [])
            tv = scope.name_tyvar(ident, tok)
            st.unify(tv, expected, tok)
            return ("name", ident, tv)
        if ident[0].isupper():
            raise ParseError("variables take no arguments", tok.line, tok.col)
        decl = sig.func_syms.get(ident)
        if decl is None:
            raise ParseError(f"undeclared function symbol {ident}", tok.line, tok.col)
        if len(raw.args) != len(decl.args):
            raise ParseError(
                f"{ident} expects {len(decl.args)} arguments, got {len(raw.args)}",
                tok.line,
                tok.col,
            )
        st.unify(decl.result, expected, tok)
        return ("app", ident, [_resolve_term(a, scope, _ty_to_desc(ty), tok) for a, ty in zip(raw.args, decl.args)])
    if isinstance(raw, _RawSwap):
        nv = TyVar()
        st.must_name.append((nv, raw.tok))
        left = _resolve_term(raw.left, scope, nv, raw.tok)
        right = _resolve_term(raw.right, scope, nv, raw.tok)
        body = _resolve_term(raw.body, scope, expected, raw.tok)
        return ("swap", left, right, body)
    if isinstance(raw, _RawAbs):
        nv = TyVar()
        st.must_name.append((nv, raw.tok))
        bv = TyVar()
        binder = _resolve_term(raw.binder, scope, nv, raw.tok)
        body = _resolve_term(raw.body, scope, bv, raw.tok)
        st.unify(expected, ("abs", nv, bv), raw.tok)
        return ("abs", binder, body)
    raise AssertionError(raw)


def _resolve_goal(raw, scope: _ClauseScope):
    sig, st = scope.sig, scope.state
    match raw:
        case ("true",):
            return ("true",)
        case ("and", g1, g2):
            return ("and", _resolve_goal(g1, scope), _resolve_goal(g2, scope))
        case ("or", g1, g2):
            return ("or", _resolve_goal(g1, scope), _resolve_goal(g2, scope))
        case ("exists", binder, body):
            ident = binder.text
            if ident in scope.bound_vars or ident in scope.free_vars:
                raise ParseError(f"variable {ident} shadows an existing one", binder.line, binder.col)
            tv = TyVar()
            scope.bound_vars[ident] = tv
            out = ("exists", ident, tv, _resolve_goal(body, scope))
            del scope.bound_vars[ident]
            scope.spent.add(ident)
            return out
        case ("new", binder, body):
            ident = binder.text
            if ident in scope.bound_names or ident in scope.free_names:
                raise ParseError(f"name {ident} shadows an existing one", binder.line, binder.col)
            if ident in sig.func_syms:
                raise ParseError(f"{ident} is a declared function symbol", binder.line, binder.col)
            tv = TyVar()
            st.must_name.append((tv, binder))
            scope.bound_names[ident] = tv
            out = ("gnew", ident, tv, _resolve_goal(body, scope))
            del scope.bound_names[ident]
            scope.spent.add(ident)
            return out
        case ("fresh", l, r, tok):
            nv = TyVar()
            st.must_name.append((nv, tok))
            anyv = TyVar()
            return ("fresh", _resolve_term(l, scope, nv, tok), _resolve_term(r, scope, anyv, tok), tok)
        case ("eq", l, r, tok):
            tv = TyVar()
            return ("eq", _resolve_term(l, scope, tv, tok), _resolve_term(r, scope, tv, tok), tok)
        case ("atom", rid, tok):
            if not isinstance(rid, _RawId) or rid.ident[0].isupper():
                raise ParseError("a goal atom must be a predicate application", tok.line, tok.col)
            decl = sig.pred_syms.get(rid.ident)
            if decl is None:
                raise ParseError(f"undeclared predicate {rid.ident}", tok.line, tok.col)
            args = rid.args or []
            if len(args) != len(decl):
                raise ParseError(
                    f"{rid.ident} expects {len(decl)} arguments, got {len(args)}",
                    tok.line,
                    tok.col,
                )
            return (
                "atom",
                rid.ident,
                [_resolve_term(a, scope, _ty_to_desc(ty), tok) for a, ty in zip(args, decl)],
                tok,
            )
    raise AssertionError(raw)


def _finalize_term(node, scope: _ClauseScope, tok: Tok) -> Term:
    st = scope.state
    match node:
        case ("var", ident, tv):
            return Var(ident, st.final(tv, f"variable {ident}", tok))
        case ("name", ident, tv):
            ty = st.final(tv, f"name {ident}", tok)
            return NameRef(Name(ident, ty))  # type: ignore[arg-type]
        case ("app", f, args):
            return App(f, tuple(_finalize_term(a, scope, tok) for a in args))
        case ("swap", l, r, b):
            return Swap(
                _finalize_term(l, scope, tok),
                _finalize_term(r, scope, tok),
                _finalize_term(b, scope, tok),
            )
        case ("abs", b, body):
            return Abs(_finalize_term(b, scope, tok), _finalize_term(body, scope, tok))
    raise AssertionError(node)


def _finalize_goal(node, scope: _ClauseScope) -> Goal:
    st = scope.state
    match node:
        case ("true",):
            return GTrue()
        case ("and", g1, g2):
            return GAnd(_finalize_goal(g1, scope), _finalize_goal(g2, scope))
        case ("or", g1, g2):
            return GOr(_finalize_goal(g1, scope), _finalize_goal(g2, scope))
        case ("exists", ident, tv, body):
            dummy = Tok("id", ident, 0, 0)
            return GExists(ident, st.final(tv, f"variable {ident}", dummy), _finalize_goal(body, scope))
        case ("gnew", ident, tv, body):
            dummy = Tok("id", ident, 0, 0)
            ty = st.final(tv, f"name {ident}", dummy)
            return GNew(Name(ident, ty), _finalize_goal(body, scope))  # type: ignore[arg-type]
        case ("fresh", l, r, tok):
            return GFresh(_finalize_term(l, scope, tok), _finalize_term(r, scope, tok))
        case ("eq", l, r, tok):
            return GEq(_finalize_term(l, scope, tok), _finalize_term(r, scope, tok))
        case ("atom", p, args, tok):
            return GAtom(p, tuple(_finalize_term(a, scope, tok) for a in args))
    raise AssertionError(node)


def _check_must_names(st: TyState, sig: Signature) -> None:
    for tv, tok in st.must_name:
        ty = st.resolve(tv)
        if isinstance(ty, TyVar):
            # unconstrained name position: default when unambiguous
            if len(sig.name_types) == 1:
                st.bind[ty.id] = next(iter(sig.name_types))
                continue
            raise ParseError("cannot infer a name type here", tok.line, tok.col)
        if not (isinstance(ty, str) and ty in sig.name_types):
            raise ParseError(f"a name was required but type {ty} is not a name type", tok.line, tok.col)


# ---------------------------------------------------------------------------
# Top level


def parse_program(text: str) -> tuple[Signature, tuple[ProgramClause, ...]]:
    """Parse declarations and clauses; returns the signature and clause list."""
    p = Parser(tokenize(text))
    name_types: set[str] = set()
    base_types: set[str] = set()
    funcs: dict[str, FuncDecl] = {}
    preds: dict[str, tuple[Ty, ...]] = {}
    raw_clauses: list[tuple] = []

    while p.peek().kind != "eof":
        if p.at_keyword("nametype"):
            p.next()
            name_types.add(p.expect_id().text)
            p.expect(".")
        elif p.at_keyword("kind"):
            p.next()
            base_types.add(p.expect_id().text)
            p.expect(".")
        elif p.at_keyword("func"):
            p.next()
            fid = p.expect_id()
            p.expect(":")
            tys: list[Ty] = [p.parse_type()]
            while p.peek().text == ",":
                p.next()
                tys.append(p.parse_type())
            if p.peek().text == "->":
                p.next()
                result = p.expect_id("result type").text
            else:
                if len(tys) != 1 or not isinstance(tys[0], str):
                    t = p.peek()
                    raise ParseError("constant declaration takes a single result type", t.line, t.col)
                result, tys = tys[0], []
            p.expect(".")
            if fid.text in funcs:
                raise ParseError(f"function {fid.text} declared twice", fid.line, fid.col)
            funcs[fid.text] = FuncDecl(tuple(tys), result)
        elif p.at_keyword("pred"):
            p.next()
            pid = p.expect_id()
            tys = []
            if p.peek().text == ":":
                p.next()
                tys.append(p.parse_type())
                while p.peek().text == ",":
                    p.next()
                    tys.append(p.parse_type())
            p.expect(".")
            if pid.text in preds:
                raise ParseError(f"predicate {pid.text} declared twice", pid.line, pid.col)
            preds[pid.text] = tuple(tys)
        else:
            raw_clauses.append(_parse_raw_clause(p))

    sig = Signature(frozenset(name_types), frozenset(base_types), funcs, preds)
    clauses = []
    for idx, rc in enumerate(raw_clauses):
        clauses.append(_build_clause(sig, rc, idx))
    return sig, tuple(clauses)


def _parse_raw_clause(p: Parser):
    new_list: list[Tok] | None = None
    forall_list: list[Tok] | None = None
    if p.at_keyword("new"):
        p.next()
        new_list = [p.expect_id("name")]
        while p.peek().text == ",":
            p.next()
            new_list.append(p.expect_id("name"))
        p.expect(".")
    if p.at_keyword("forall"):
        p.next()
        forall_list = [p.expect_id("variable")]
        while p.peek().text == ",":
            p.next()
            forall_list.append(p.expect_id("variable"))
        p.expect(".")
    head_tok = p.peek()
    head = p.parse_term()
    if not isinstance(head, _RawId) or head.ident[0].isupper():
        raise ParseError("clause head must be a predicate application", head_tok.line, head_tok.col)
    body = None
    if p.peek().text == ":-":
        p.next()
        body = p.parse_goal()
    p.expect(".")
    return (new_list, forall_list, head, body, head_tok)


def _build_clause(sig: Signature, rc, idx: int) -> ProgramClause:
    new_list, forall_list, head, body, head_tok = rc
    st = TyState(sig)
    scope = _ClauseScope(sig, st)
    if new_list is not None:
        scope.explicit_names = [t.text for t in new_list]
    if forall_list is not None:
        scope.explicit_vars = [t.text for t in forall_list]

    decl = sig.pred_syms.get(head.ident)
    if decl is None:
        raise ParseError(f"undeclared predicate {head.ident}", head_tok.line, head_tok.col)
    args = head.args or []
    if len(args) != len(decl):
        raise ParseError(
            f"{head.ident} expects {len(decl)} arguments, got {len(args)}",
            head_tok.line,
            head_tok.col,
        )
    rargs = [_resolve_term(a, scope, _ty_to_desc(ty), head_tok) for a, ty in zip(args, decl)]
    rbody = _resolve_goal(body, scope) if body is not None else ("true",)

    _check_must_names(st, sig)

    # order binders: explicit list order, else first occurrence
    name_order = scope.explicit_names if scope.explicit_names is not None else scope.free_name_order
    var_order = scope.explicit_vars if scope.explicit_vars is not None else scope.free_var_order
    for n in name_order:
        if n not in scope.free_names:
            if scope.explicit_names is not None:
                raise ParseError(f"new-bound name {n} does not occur", head_tok.line, head_tok.col)
    for v in var_order:
        if v not in scope.free_vars:
            if scope.explicit_vars is not None:
                raise ParseError(f"forall-bound variable {v} does not occur", head_tok.line, head_tok.col)

    new_names = tuple(
        Name(n, st.final(scope.free_names[n], f"name {n}", head_tok))  # type: ignore[arg-type]
        for n in name_order
    )
    universals = tuple(
        (v, st.final(scope.free_vars[v], f"variable {v}", head_tok)) for v in var_order
    )
    c = ProgramClause(
        new_names=new_names,
        universals=universals,
        pred=head.ident,
        args=tuple(_finalize_term(a, scope, head_tok) for a in rargs),
        body=_finalize_goal(rbody, scope),
        idx=idx,
    )
    clause_check_wellformed(c)
    return c


def parse_goal(sig: Signature, text: str) -> Goal:
    """Parse a standalone goal; free lowercase identifiers become free names,
    free uppercase identifiers are rejected (goals must be ground)."""
    g, vars_seen = parse_open_goal(sig, text)
    if vars_seen:
        raise ParseError(f"goal must be ground, found variables {sorted(vars_seen)}", 1, 1)
    return g


def parse_open_goal(sig: Signature, text: str) -> tuple[Goal, set[str]]:
    """Parse a goal, allowing free variables; returns them alongside."""
    p = Parser(tokenize(text))
    st = TyState(sig)
    scope = _ClauseScope(sig, st)
    raw = p.parse_goal()
    eof = p.peek()
    if eof.kind != "eof" and eof.text != ".":
        raise ParseError(f"trailing input {eof.text!r}", eof.line, eof.col)
    rg = _resolve_goal(raw, scope)
    _check_must_names(st, sig)
    return _finalize_goal(rg, scope), set(scope.free_vars)


def parse_term(sig: Signature, text: str, expected: Ty | None = None) -> Term:
    """Parse a standalone ground term (free lowercase identifiers are names)."""
    p = Parser(tokenize(text))
    st = TyState(sig)
    scope = _ClauseScope(sig, st)
    raw = p.parse_term()
    tv: TyD = _ty_to_desc(expected) if expected is not None else TyVar()
    hint = p.peek()
    node = _resolve_term(raw, scope, tv, hint)
    _check_must_names(st, sig)
    if scope.free_vars:
        raise ParseError(f"term must be ground, found variables {sorted(scope.free_vars)}", 1, 1)
    return _finalize_term(node, scope, hint)
