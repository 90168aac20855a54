"""Canonical text form of global and local types (re-parseable)."""
from __future__ import annotations

from .context import Mult
from .expr import Base, TRUE, show
from .types import (GEnd, GMessage, GRec, GVar, LEnd, LRec, LRecv, LSend, LSilent, LVar,
                    StateVar)


def is_anonymous(var: str) -> bool:
    return var.startswith("_")


def payload(var: str, t) -> str:
    if is_anonymous(var):
        if t.base is Base.UNIT and t.pred == TRUE:
            return "()"
        if t.pred == TRUE:
            return f"({t.base})"
        return f"({t.base}{{{show(t.pred)}}})"
    if t.pred == TRUE:
        return f"({var}:{t.base})"
    return f"({var}:{t.base}{{{show(t.pred)}}})"


def _state(sv: StateVar, local: bool) -> str:
    mark = ""
    if local and sv.mult is Mult.ZERO:
        mark = "^0"
    elif not local and sv.knowers is not None:
        mark = "@{" + ",".join(sorted(sv.knowers)) + "}"
    t = sv.type
    ty = f"{t.base}" if t.pred == TRUE else f"{t.base}{{{show(t.pred)}}}"
    return f"{sv.name}{mark}:{ty} := {show(sv.init)}"


def _tvar(t) -> str:
    if not t.assigns:
        return t.tvar
    return f"{t.tvar}<" + ", ".join(f"{x} := {show(e, 5)}" for x, e in t.assigns) + ">"


def _rec(t, local: bool) -> str:
    head = f"mu {t.tvar}"
    if t.state:
        head += "(" + ", ".join(_state(sv, local) for sv in t.state) + ")"
    return head


def pretty(t) -> str:
    """Render a global or local type in the core syntax."""
    if isinstance(t, (GEnd, LEnd)):
        return "end"
    if isinstance(t, (GVar, LVar)):
        return _tvar(t)
    if isinstance(t, GRec):
        return f"{_rec(t, False)} . {pretty(t.body)}"
    if isinstance(t, LRec):
        return f"{_rec(t, True)} . {pretty(t.body)}"
    if isinstance(t, LSilent):
        return f"<{t.label}>{payload(t.var, t.type)} . {pretty(t.cont)}"
    if isinstance(t, GMessage):
        head = f"{t.sender} -> {t.receiver}"
    else:
        head = f"{t.peer} {'!' if isinstance(t, LSend) else '?'}"
    bs = [f"{b.label}{payload(b.var, b.type)} . {pretty(b.cont)}" for b in t.branches]
    if len(bs) == 1:
        sep = " : " if isinstance(t, GMessage) else " "
        return f"{head}{sep}{bs[0]}"
    return f"{head} {{ " + " ; ".join(bs) + " }"


def pretty_multiline(t, indent: int = 0) -> str:
    """Indented rendering for humans; parses to the same type as `pretty`."""
    pad = "  " * indent
    if isinstance(t, (GMessage, LSend, LRecv)) and len(t.branches) > 1:
        if isinstance(t, GMessage):
            head = f"{t.sender} -> {t.receiver}"
        else:
            head = f"{t.peer} {'!' if isinstance(t, LSend) else '?'}"
        lines = [f"{pad}{head} {{"]
        for i, b in enumerate(t.branches):
            sep = " ;" if i < len(t.branches) - 1 else ""
            body = pretty_multiline(b.cont, indent + 2).lstrip()
            lines.append(f"{pad}  {b.label}{payload(b.var, b.type)} .\n{'  ' * (indent + 2)}{body}{sep}")
        lines.append(f"{pad}}}")
        return "\n".join(lines)
    if isinstance(t, (GMessage, LSend, LRecv)):
        b = t.branches[0]
        if isinstance(t, GMessage):
            head = f"{t.sender} -> {t.receiver} : "
        else:
            head = f"{t.peer} {'!' if isinstance(t, LSend) else '?'} "
        return f"{pad}{head}{b.label}{payload(b.var, b.type)} .\n{pretty_multiline(b.cont, indent)}"
    if isinstance(t, LSilent):
        return f"{pad}<{t.label}>{payload(t.var, t.type)} .\n{pretty_multiline(t.cont, indent)}"
    if isinstance(t, (GRec, LRec)):
        return f"{pad}{_rec(t, isinstance(t, LRec))} .\n{pretty_multiline(t.body, indent + 1)}"
    return pad + pretty(t)


def pretty_context(ctx) -> str:
    return str(ctx)
