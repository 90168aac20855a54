"""Quantifier-free formulas over typed variables and their SMT-LIB rendering."""
from __future__ import annotations

from dataclasses import dataclass

from ..core.expr import Base, Binary, BoolLit, Expr, IntLit, Unary, Var, free_vars, rename


@dataclass(frozen=True)
class Formula:
    """A boolean expression together with the sort of each free variable."""

    expr: Expr
    sorts: tuple[tuple[str, Base], ...]

    def __post_init__(self):
        missing = free_vars(self.expr) - {n for n, _ in self.sorts}
        if missing:
            raise ValueError(f"formula has undeclared variables {sorted(missing)}")

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.sorts]

    def canonical(self) -> tuple["Formula", dict[str, str]]:
        """Rename variables to v0, v1, ... in declaration order; returns the renaming."""
        used = free_vars(self.expr)
        m: dict[str, str] = {}
        sorts = []
        for n, s in self.sorts:
            if n in used and n not in m:
                m[n] = f"v{len(m)}"
                sorts.append((m[n], s))
        return Formula(rename(self.expr, m), tuple(sorts)), m


def _walk_nonlinear(e: Expr) -> bool:
    if isinstance(e, Binary):
        if e.op == "*" and free_vars(e.lhs) and free_vars(e.rhs):
            return True
        return _walk_nonlinear(e.lhs) or _walk_nonlinear(e.rhs)
    if isinstance(e, Unary):
        return _walk_nonlinear(e.arg)
    return False


_SMT_OPS = {"+": "+", "-": "-", "*": "*", "=": "=", "<": "<", "<=": "<=", ">": ">", ">=": ">=",
            "&&": "and", "||": "or"}


def to_smt_term(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, IntLit):
        return str(e.value) if e.value >= 0 else f"(- {-e.value})"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Unary):
        return f"(not {to_smt_term(e.arg)})" if e.op == "not" else f"(- {to_smt_term(e.arg)})"
    if e.op == "<>":
        return f"(not (= {to_smt_term(e.lhs)} {to_smt_term(e.rhs)}))"
    return f"({_SMT_OPS[e.op]} {to_smt_term(e.lhs)} {to_smt_term(e.rhs)})"


_SMT_SORT = {Base.INT: "Int", Base.BOOL: "Bool", Base.STRING: "String", Base.UNIT: "Int"}


def smt_query(f: Formula, with_model: bool = True) -> str:
    """A script whose answer is `unsat` exactly when f is valid."""
    has_string = any(s is Base.STRING for _, s in f.sorts)
    if has_string:
        logic = "ALL"
    elif _walk_nonlinear(f.expr):
        logic = "QF_NIA"
    else:
        logic = "QF_LIA"
    lines = ["(set-option :produce-models true)", f"(set-logic {logic})"]
    for n, s in f.sorts:
        lines.append(f"(declare-const {n} {_SMT_SORT[s]})")
        if s is Base.UNIT:
            lines.append(f"(assert (= {n} 0))")
    lines.append(f"(assert (not {to_smt_term(f.expr)}))")
    lines.append("(check-sat)")
    if with_model and f.sorts:
        lines.append("(get-value (" + " ".join(n for n, _ in f.sorts) + "))")
    return "\n".join(lines) + "\n"


def parse_sexprs(text: str) -> list:
    """Minimal s-expression reader: lists, symbols, integers and string literals."""
    out: list = []
    stack: list[list] = [out]
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c == "(":
            stack.append([])
            i += 1
        elif c == ")":
            done = stack.pop()
            stack[-1].append(done)
            i += 1
        elif c == '"':
            j = i + 1
            buf = []
            while j < len(text):
                if text[j] == '"':
                    if j + 1 < len(text) and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            stack[-1].append(("str", "".join(buf)))
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in '()"':
                j += 1
            tok = text[i:j]
            stack[-1].append(int(tok) if tok.lstrip("-").isdigit() else tok)
            i = j
    return out


def smt_value(v):
    """Decode a model value: integers, `(- n)`, booleans and strings."""
    if isinstance(v, int):
        return v
    if isinstance(v, tuple) and v[0] == "str":
        return v[1]
    if v == "true":
        return True
    if v == "false":
        return False
    if isinstance(v, list) and len(v) == 2 and v[0] == "-":
        return -smt_value(v[1])
    raise ValueError(f"cannot decode model value {v!r}")
