"""Bounded validity by exhaustive enumeration of small integer domains.

Integers range over [-bound, bound]; booleans over both values; strings only
support equality, so k string variables range over k distinct witnesses,
which is complete for that fragment; unit has a single value.
"""
from __future__ import annotations

import os

import numpy as np

from ..core.expr import Base, BoolLit, Expr, IntLit, Unary, Var
from .formula import Formula

if os.environ.get("RMPST_PURE"):
    from ._enum_fallback import find_falsifying
    BACKEND = "numpy"
else:
    try:
        from ._enumkernel import find_falsifying
        BACKEND = "compiled"
    except ImportError:  # extension not built
        from ._enum_fallback import find_falsifying
        BACKEND = "numpy"

from . import _enum_fallback

OPCODES = {"const": 0, "load": 1, "neg": 2, "not": 3, "+": 4, "-": 5, "*": 6, "=": 7, "<>": 8,
           "<": 9, "<=": 10, ">": 11, ">=": 12, "&&": 13, "||": 14}

DEFAULT_LIMIT = 50_000_000


def compile_expr(e: Expr, index: dict[str, int]) -> tuple[np.ndarray, int]:
    """Postfix program for e and the stack depth it needs."""
    out: list[int] = []

    def go(x: Expr) -> int:
        if isinstance(x, Var):
            out.extend((1, index[x.name]))
            return 1
        if isinstance(x, (IntLit, BoolLit)):
            out.extend((0, int(x.value)))
            return 1
        if isinstance(x, Unary):
            d = go(x.arg)
            out.extend((OPCODES[x.op], 0))
            return d
        d1 = go(x.lhs)
        d2 = go(x.rhs)
        out.extend((OPCODES[x.op], 0))
        return max(d1, d2 + 1)

    depth = go(e)
    return np.asarray(out, dtype=np.int64), depth


def domains(f: Formula, bound: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, list]:
    n_strings = sum(1 for _, s in f.sorts if s is Base.STRING)
    vals: list[int] = []
    offsets, sizes, decoders = [], [], []
    for _, s in f.sorts:
        offsets.append(len(vals))
        if s is Base.INT:
            dom = list(range(-bound, bound + 1))
            decoders.append(lambda v: v)
        elif s is Base.BOOL:
            dom = [0, 1]
            decoders.append(lambda v: bool(v))
        elif s is Base.STRING:
            dom = list(range(n_strings))
            decoders.append(lambda v: f"s{v}")
        else:
            dom = [0]
            decoders.append(lambda v: None)
        vals.extend(dom)
        sizes.append(len(dom))
    return (np.asarray(vals, dtype=np.int64), np.asarray(offsets, dtype=np.int64),
            np.asarray(sizes, dtype=np.int64), decoders)


def grid_size(f: Formula, bound: int) -> int:
    _, _, sizes, _ = domains(f, bound)
    return int(np.prod([int(s) for s in sizes])) if len(sizes) else 1


def find_counterexample(f: Formula, bound: int = 64, limit: int = DEFAULT_LIMIT, backend: str | None = None):
    """A falsifying assignment within the bound, None if there is none.

    Raises OverflowError when the grid exceeds `limit` assignments.
    """
    from ..core.expr import free_vars
    used = free_vars(f.expr)
    f = Formula(f.expr, tuple((n, s) for n, s in f.sorts if n in used))
    if grid_size(f, bound) > limit:
        raise OverflowError(f"enumeration grid too large for {len(f.sorts)} variables at bound {bound}")
    index = {n: i for i, (n, _) in enumerate(f.sorts)}
    code, depth = compile_expr(f.expr, index)
    values, offsets, sizes, decoders = domains(f, bound)
    kernel = find_falsifying
    if backend == "numpy":
        kernel = _enum_fallback.find_falsifying
    elif backend == "compiled" and BACKEND != "compiled":
        raise RuntimeError("compiled kernel is not available")
    lin = int(kernel(code, values, offsets, sizes, depth))
    if lin < 0:
        return None
    if len(sizes) == 0:
        return {}
    idx = np.unravel_index(lin, [int(s) for s in sizes])
    return {n: decoders[i](int(values[int(offsets[i]) + int(idx[i])])) for i, (n, _) in enumerate(f.sorts)}
