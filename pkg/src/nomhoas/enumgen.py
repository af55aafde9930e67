"""Deterministic enumeration of ground nominal terms and atomic goals.

Size is node count; an abstraction counts one node plus its body.  Orders
are stable: sizes ascending, then declaration order of symbols, then the
given name order.  Used for oracle instantiation, witness fill-in, and the
goal corpora of the equivalence checker.
"""
from __future__ import annotations

import itertools
import random

from .nominal.syntax import (
    Abs,
    AbsTy,
    App,
    GAtom,
    Goal,
    Name,
    NameRef,
    Signature,
    Term,
    Ty,
)


def _compositions(total: int, k: int):
    """All ways to write total as k positive parts."""
    if k == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - k + 2):
        for rest in _compositions(total - first, k - 1):
            yield (first,) + rest


class TermEnumerator:
    def __init__(self, sig: Signature, names: list[Name]):
        self.sig = sig
        self.names = list(names)
        self._cache: dict[tuple, list[Term]] = {}

    def of_size(self, ty: Ty, size: int) -> list[Term]:
        key = (ty if isinstance(ty, str) else ("abs", ty.ntype, ty.body), size)
        if key in self._cache:
            return self._cache[key]
        out: list[Term] = []
        if isinstance(ty, AbsTy):
            if size >= 2:
                for n in self.names:
                    if n.ntype == ty.ntype:
                        for body in self.of_size(ty.body, size - 1):
                            out.append(Abs(NameRef(n), body))
        elif ty in self.sig.name_types:
            if size == 1:
                out = [NameRef(n) for n in self.names if n.ntype == ty]
        else:
            for f, decl in self.sig.func_syms.items():
                if decl.result != ty:
                    continue
                if not decl.args:
                    if size == 1:
                        out.append(App(f, ()))
                    continue
                for parts in _compositions(size - 1, len(decl.args)):
                    for args in itertools.product(
                        *(self.of_size(t, s) for t, s in zip(decl.args, parts))
                    ):
                        out.append(App(f, args))
        self._cache[key] = out
        return out

    def up_to(self, ty: Ty, max_size: int):
        for s in range(1, max_size + 1):
            yield from self.of_size(ty, s)


def enum_ground_terms(sig: Signature, ty: Ty, names, max_size: int):
    """Ground terms of the given type, sizes ascending."""
    yield from TermEnumerator(sig, list(names)).up_to(ty, max_size)


def enum_goals(
    sig: Signature,
    pred: str,
    names,
    max_size: int,
    count: int,
    seed: int | None = None,
):
    """The first `count` ground atomic goals for `pred` with total argument
    size at most max_size, breadth-first by size; a seed shuffles the
    result deterministically."""
    arg_tys = sig.pred_syms[pred]
    en = TermEnumerator(sig, list(names))
    goals: list[Goal] = []
    for total in range(len(arg_tys), max_size + 1):
        for parts in _compositions(total, len(arg_tys)):
            for args in itertools.product(
                *(en.of_size(t, s) for t, s in zip(arg_tys, parts))
            ):
                goals.append(GAtom(pred, args))
                if seed is None and len(goals) >= count:
                    return goals
        if seed is not None and len(goals) >= 4 * count:
            break
    if seed is not None:
        rng = random.Random(seed)
        rng.shuffle(goals)
    return goals[:count]
