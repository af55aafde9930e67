"""Printing of HOAS terms, formulas, and definitional clauses in the .gm
concrete syntax; output re-parses to an equal value."""
from __future__ import annotations

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
    O,
    hsupport,
    term_hvars,
)

_STEMS_LOWER = "xyzwuv"


def print_ty(ty: HTy) -> str:
    if isinstance(ty, Arr):
        l = print_ty(ty.left)
        if isinstance(ty.left, Arr):
            l = f"({l})"
        return f"{l} -> {print_ty(ty.right)}"
    return ty


def _used_idents(t) -> set[str]:
    used: set[str] = set()

    def go(u):
        match u:
            case HVar(x, _) | HCon(x, _) | HNom(x, _):
                used.add(x)
            case HApp(h, args):
                go(h)
                for a in args:
                    go(a)
            case HLam(_, b):
                go(b)
            case HBound():
                pass
    go(t)
    return used


def _fresh_display(used: set[str], upper: bool) -> str:
    stems = [c.upper() for c in _STEMS_LOWER] if upper else list(_STEMS_LOWER)
    for suffix in [""] + [str(i) for i in range(1, 100)]:
        for s in stems:
            cand = s + suffix
            if cand not in used:
                used.add(cand)
                return cand
    raise RuntimeError("display name pool exhausted")


def print_term(t: HTerm, binders: list[str] | None = None, used: set[str] | None = None, prec: int = 0) -> str:
    """prec 0: bare; 1: argument position (parenthesize apps and lams)."""
    if binders is None:
        binders = []
    if used is None:
        used = _used_idents(t)
    match t:
        case HBound(k):
            return binders[k] if k < len(binders) else f"_{k - len(binders)}"
        case HVar(x, _) | HCon(x, _) | HNom(x, _):
            return x
        case HApp(h, args):
            parts = [print_term(h, binders, used, 1)]
            parts += [print_term(a, binders, used, 1) for a in args]
            s = " ".join(parts)
            return f"({s})" if prec > 0 else s
        case HLam(ty, b):
            name = _fresh_display(used, upper=False)
            s = f"{name}\\ {print_term(b, [name] + binders, used, 0)}"
            return f"({s})" if prec > 0 else s
    raise TypeError(f"not a term: {t!r}")


def _fused_idents(fm: Formula) -> set[str]:
    out: set[str] = set()

    def go(f):
        match f:
            case FTop():
                pass
            case FAtom(p, args):
                out.add(p)
                for a in args:
                    out.update(_used_idents(a))
            case FEq(l, r):
                out.update(_used_idents(l))
                out.update(_used_idents(r))
            case FAnd(l, r) | FOr(l, r):
                go(l)
                go(r)
            case FExists(_, b) | FNabla(_, b):
                go(b)
    go(fm)
    return out


def print_formula(fm: Formula, binders: list[str] | None = None, used: set[str] | None = None, prec: int = 0) -> str:
    """prec levels: 0 top, 1 under \\/, 2 under /\\."""
    if binders is None:
        binders = []
    if used is None:
        used = _fused_idents(fm)
    match fm:
        case FTop():
            return "true"
        case FAtom(p, args):
            if not args:
                return p
            s = " ".join([p] + [print_term(a, binders, used, 1) for a in args])
            return s
        case FEq(l, r):
            return f"{print_term(l, binders, used, 1)} = {print_term(r, binders, used, 1)}"
        case FAnd(l, r):
            s = f"{print_formula(l, binders, used, 2)} /\\ {print_formula(r, binders, used, 2)}"
            return f"({s})" if prec > 2 else s
        case FOr(l, r):
            s = f"{print_formula(l, binders, used, 2)} \\/ {print_formula(r, binders, used, 1)}"
            return f"({s})" if prec > 1 else s
        case FExists(ty, b):
            name = _fresh_display(used, upper=True)
            s = f"exists {name}, {print_formula(b, [name] + binders, used, 0)}"
            return f"({s})" if prec > 0 else s
        case FNabla(ty, b):
            name = _fresh_display(used, upper=False)
            s = f"nabla {name}, {print_formula(b, [name] + binders, used, 0)}"
            return f"({s})" if prec > 0 else s
    raise TypeError(f"not a formula: {fm!r}")


def print_clause(c: DefClause) -> str:
    used = _fused_idents(c.body) | {x for x, _ in c.universals} | {z for z, _ in c.nabla} | {c.pred}
    for a in c.head_args:
        used |= _used_idents(a)
    head = " ".join([c.pred] + [print_term(a, [], used, 1) for a in c.head_args])
    if c.nabla:
        head = f"nabla {' '.join(z for z, _ in c.nabla)}, {head}"
    if isinstance(c.body, FTop):
        return f"{head}."
    return f"{head} := {print_formula(c.body, [], set(used), 0)}."


def print_signature(sig: HSignature, omit: frozenset[str] = frozenset()) -> str:
    lines = []
    for b in sorted(sig.base_types - sig.nominal_types - {O}):
        lines.append(f"kind {b}.")
    for n in sorted(sig.nominal_types):
        lines.append(f"nominal {n}.")
    for cid, ty in sig.consts.items():
        if cid not in omit:
            lines.append(f"type {cid} {print_ty(ty)}.")
    return "\n".join(lines)


def print_gm(sig: HSignature, clauses) -> str:
    parts = [print_signature(sig)]
    parts.append("")
    parts.extend(print_clause(c) for c in clauses)
    return "\n".join(parts) + "\n"
