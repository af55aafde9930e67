"""Pretty-printing of nominal terms, goals, clauses, and programs.

Output re-parses to a structurally equal value (clauses are printed with
explicit quantifier lists so binder order survives the round trip).
"""
from __future__ import annotations

from .syntax import (
    Abs,
    AbsTy,
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
    NameRef,
    ProgramClause,
    Signature,
    Swap,
    Term,
    Ty,
    Var,
)


def print_type(ty: Ty) -> str:
    if isinstance(ty, AbsTy):
        return f"<{ty.ntype}>{print_type(ty.body)}"
    return ty


def print_term(t: Term) -> str:
    match t:
        case NameRef(n):
            return n.ident
        case Var(x, _):
            return x
        case App(f, args):
            if not args:
                return f
            return f"{f}({', '.join(print_term(a) for a in args)})"
        case Swap(l, r, b):
            body = print_term(b)
            if isinstance(b, (Swap, Abs)):
                body = f"({body})"
            return f"({print_term(l)} ~ {print_term(r)}) * {body}"
        case Abs(b, body):
            return f"<{print_term(b)}>{print_term(body)}"
    raise TypeError(f"not a term: {t!r}")


def print_goal(g: Goal) -> str:
    return _pg(g, 0)


def _pg(g: Goal, prec: int) -> str:
    # prec 0: may contain ';'; 1: inside a conjunction; quantifiers are
    # greedy so they get parenthesized whenever more input could follow.
    match g:
        case GTrue():
            return "true"
        case GAtom(p, args):
            if not args:
                return p
            return f"{p}({', '.join(print_term(a) for a in args)})"
        case GFresh(l, r):
            return f"{print_term(l)} # {print_term(r)}"
        case GEq(l, r):
            return f"{print_term(l)} = {print_term(r)}"
        case GAnd(g1, g2):
            s = f"{_pg(g1, 1)}, {_pg(g2, 1)}"
            return f"({s})" if prec > 1 else s
        case GOr(g1, g2):
            s = f"{_pg(g1, 1)}; {_pg(g2, 0)}"
            return f"({s})" if prec > 0 else s
        case GExists(x, _, body):
            return f"(exists {x}. {_pg(body, 0)})"
        case GNew(a, body):
            return f"(new {a.ident}. {_pg(body, 0)})"
    raise TypeError(f"not a goal: {g!r}")


def print_clause(c: ProgramClause) -> str:
    parts = []
    if c.new_names:
        parts.append("new " + ", ".join(n.ident for n in c.new_names) + ". ")
    if c.universals:
        parts.append("forall " + ", ".join(x for x, _ in c.universals) + ". ")
    head = c.pred
    if c.args:
        head += "(" + ", ".join(print_term(a) for a in c.args) + ")"
    parts.append(head)
    if c.body != GTrue():
        parts.append(" :- " + print_goal(c.body))
    parts.append(".")
    return "".join(parts)


def print_signature(sig: Signature) -> str:
    lines = []
    for nt in sorted(sig.name_types):
        lines.append(f"nametype {nt}.")
    for bt in sorted(sig.base_types):
        lines.append(f"kind {bt}.")
    for f, decl in sig.func_syms.items():
        if decl.args:
            args = ", ".join(print_type(t) for t in decl.args)
            lines.append(f"func {f} : {args} -> {decl.result}.")
        else:
            lines.append(f"func {f} : {decl.result}.")
    for p, args in sig.pred_syms.items():
        if args:
            lines.append(f"pred {p} : {', '.join(print_type(t) for t in args)}.")
        else:
            lines.append(f"pred {p}.")
    return "\n".join(lines)


def print_program(sig: Signature, clauses) -> str:
    out = [print_signature(sig), ""]
    out.extend(print_clause(c) for c in clauses)
    return "\n".join(out) + "\n"
