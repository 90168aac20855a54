"""Refinement expressions, base types and refinement types."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Union


class Base(str, enum.Enum):
    INT = "int"
    BOOL = "bool"
    STRING = "string"
    UNIT = "unit"

    def __str__(self) -> str:
        return self.value


UNARY_OPS = ("not", "neg")
ARITH_OPS = ("+", "-", "*")
COMPARE_OPS = ("<", "<=", ">", ">=")
EQUALITY_OPS = ("=", "<>")
LOGIC_OPS = ("&&", "||")
BINARY_OPS = ARITH_OPS + COMPARE_OPS + EQUALITY_OPS + LOGIC_OPS

# Binding strength used by the parser and the printer.
PRECEDENCE = {"||": 1, "&&": 2, "=": 3, "<>": 3, "<": 4, "<=": 4, ">": 4, ">=": 4, "+": 5, "-": 5, "*": 6}


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class IntLit:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class BoolLit:
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expr"

    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True)
class Binary:
    op: str
    lhs: "Expr"
    rhs: "Expr"

    def __str__(self) -> str:
        return show(self)


Expr = Union[Var, IntLit, BoolLit, Unary, Binary]

TRUE = BoolLit(True)
FALSE = BoolLit(False)


def show(e: Expr, outer: int = 0) -> str:
    """Render an expression with the minimal parentheses needed to re-parse it."""
    if isinstance(e, (Var, IntLit, BoolLit)):
        s = str(e)
        if isinstance(e, IntLit) and e.value < 0 and outer > 0:
            return f"({s})"
        return s
    if isinstance(e, Unary):
        inner = show(e.arg, 7)
        return f"!{inner}" if e.op == "not" else f"-{inner}"
    prec = PRECEDENCE[e.op]
    # Comparisons do not associate, arithmetic and logic associate to the left.
    left = show(e.lhs, prec if e.op in ARITH_OPS + LOGIC_OPS else prec + 1)
    right = show(e.rhs, prec + 1)
    s = f"{left} {e.op} {right}"
    return f"({s})" if prec < outer else s


def conj(parts: Iterable[Expr]) -> Expr:
    out: Expr | None = None
    for p in parts:
        if p == TRUE:
            continue
        out = p if out is None else Binary("&&", out, p)
    return TRUE if out is None else out


def disj(parts: Iterable[Expr]) -> Expr:
    out: Expr | None = None
    for p in parts:
        if p == FALSE:
            continue
        out = p if out is None else Binary("||", out, p)
    return FALSE if out is None else out


def implies(a: Expr, b: Expr) -> Expr:
    if a == TRUE:
        return b
    return Binary("||", Unary("not", a), b)


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Unary):
        return free_vars(e.arg)
    if isinstance(e, Binary):
        return free_vars(e.lhs) | free_vars(e.rhs)
    return frozenset()


def subst(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Simultaneous substitution; expressions have no binders so this never captures."""
    if not mapping:
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Unary):
        return Unary(e.op, subst(e.arg, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, subst(e.lhs, mapping), subst(e.rhs, mapping))
    return e


def rename(e: Expr, mapping: Mapping[str, str]) -> Expr:
    return subst(e, {k: Var(v) for k, v in mapping.items()})


def evaluate(e: Expr, env: Mapping[str, object]):
    """Evaluate over concrete values (int, bool, str, None for unit)."""
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, (IntLit, BoolLit)):
        return e.value
    if isinstance(e, Unary):
        v = evaluate(e.arg, env)
        return (not v) if e.op == "not" else -v
    op = e.op
    if op == "&&":
        return bool(evaluate(e.lhs, env)) and bool(evaluate(e.rhs, env))
    if op == "||":
        return bool(evaluate(e.lhs, env)) or bool(evaluate(e.rhs, env))
    a, b = evaluate(e.lhs, env), evaluate(e.rhs, env)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(f"unknown operator {op}")


@dataclass(frozen=True)
class RefinementType:
    """`binder:base{pred}`; the binder is bound in the predicate."""

    binder: str
    base: Base
    pred: Expr = TRUE

    def free_vars(self) -> frozenset[str]:
        return free_vars(self.pred) - {self.binder}

    def instantiate(self, name: str) -> Expr:
        """The predicate with the binder replaced by `name`."""
        if name == self.binder:
            return self.pred
        return subst(self.pred, {self.binder: Var(name)})

    def with_binder(self, name: str) -> "RefinementType":
        return RefinementType(name, self.base, self.instantiate(name))

    def subst_free(self, mapping: Mapping[str, Expr]) -> "RefinementType":
        """Substitute free variables, renaming the binder away from the substituted terms."""
        mapping = {k: v for k, v in mapping.items() if k != self.binder}
        if not mapping:
            return self
        clash = set().union(*(free_vars(v) for v in mapping.values()))
        t = self
        if self.binder in clash:
            t = self.with_binder(fresh_name(self.binder, clash | self.free_vars()))
        return RefinementType(t.binder, t.base, subst(t.pred, mapping))

    def canonical(self) -> tuple:
        """Key that identifies the type up to renaming of its binder."""
        key = self.__dict__.get("_canonical")
        if key is None:
            key = (self.base, self.instantiate("#"))
            object.__setattr__(self, "_canonical", key)
        return key

    def alpha_eq(self, other: "RefinementType") -> bool:
        return self.canonical() == other.canonical()

    def __str__(self) -> str:
        if self.pred == TRUE:
            return f"{self.binder}:{self.base}"
        return f"{self.binder}:{self.base}{{{show(self.pred)}}}"


def fresh_name(hint: str, avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    stem = hint.split("'")[0] or "v"
    if stem not in avoid:
        return stem
    i = 1
    while f"{stem}{i}" in avoid:
        i += 1
    return f"{stem}{i}"
