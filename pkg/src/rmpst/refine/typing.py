"""Refinement typing of expressions under local contexts."""
from __future__ import annotations

from typing import Optional

from ..core.context import LocalContext, Mult
from ..core.errors import IrrelevantVariableUse, SortError, UnboundVariable
from ..core.expr import (ARITH_OPS, Base, Binary, BoolLit, COMPARE_OPS, EQUALITY_OPS, Expr, IntLit, LOGIC_OPS,
                         RefinementType, Unary, Var, conj, free_vars, fresh_name, implies)
from .formula import Formula
from .solver import Checker, ValidityResult, default_checker


def sort_of(ctx: LocalContext, e: Expr, relevant: bool = True, extra: Optional[dict] = None) -> Base:
    """Base sort of e; with `relevant`, erased variables are rejected."""
    extra = extra or {}
    if isinstance(e, Var):
        if e.name in extra:
            return extra[e.name]
        entry = ctx.lookup(e.name)
        if entry is None:
            raise UnboundVariable(e.name)
        if relevant and entry.mult is Mult.ZERO:
            raise IrrelevantVariableUse(e.name)
        return entry.type.base
    if isinstance(e, IntLit):
        return Base.INT
    if isinstance(e, BoolLit):
        return Base.BOOL
    if isinstance(e, Unary):
        want = Base.BOOL if e.op == "not" else Base.INT
        got = sort_of(ctx, e.arg, relevant, extra)
        if got is not want:
            raise SortError(f"operator {e.op} expects {want}, got {got}")
        return want
    a = sort_of(ctx, e.lhs, relevant, extra)
    b = sort_of(ctx, e.rhs, relevant, extra)
    if e.op in ARITH_OPS + COMPARE_OPS:
        if a is not Base.INT or b is not Base.INT:
            raise SortError(f"operator {e.op} expects int operands, got {a} and {b}")
        return Base.INT if e.op in ARITH_OPS else Base.BOOL
    if e.op in LOGIC_OPS:
        if a is not Base.BOOL or b is not Base.BOOL:
            raise SortError(f"operator {e.op} expects bool operands, got {a} and {b}")
        return Base.BOOL
    if e.op in EQUALITY_OPS:
        if a is not b:
            raise SortError(f"cannot compare {a} with {b}")
        return Base.BOOL
    raise SortError(f"unknown operator {e.op}")


def _binder_for(ctx: LocalContext, *avoid: Expr) -> str:
    names = set(ctx.names())
    for e in avoid:
        names |= free_vars(e)
    return fresh_name("v", names)


def type_expr(ctx: LocalContext, e: Expr) -> RefinementType:
    """Singleton-style type of e; variables keep their declared type."""
    base = sort_of(ctx, e, relevant=True)
    if isinstance(e, Var):
        return ctx.lookup(e.name).type
    v = _binder_for(ctx, e)
    return RefinementType(v, base, Binary("=", Var(v), e))


def wf_type(ctx: LocalContext, t: RefinementType) -> bool:
    """The predicate is a boolean under the promoted context extended with the binder."""
    try:
        return sort_of(ctx.promote(), t.pred, relevant=True, extra={t.binder: t.base}) is Base.BOOL
    except (SortError, UnboundVariable, IrrelevantVariableUse):
        return False


def wf_error(ctx: LocalContext, t: RefinementType) -> Optional[str]:
    try:
        s = sort_of(ctx.promote(), t.pred, relevant=True, extra={t.binder: t.base})
    except (SortError, UnboundVariable, IrrelevantVariableUse) as err:
        return str(err)
    return None if s is Base.BOOL else f"refinement of {t} is not boolean"


def encode_context(ctx: LocalContext) -> tuple[Expr, tuple]:
    """Conjunction of every entry's refinement, instantiated at the entry's variable."""
    parts = [e.type.instantiate(e.var) for e in ctx.entries]
    sorts = tuple((e.var, e.type.base) for e in ctx.entries)
    return conj(parts), sorts


def subtype_obligation(ctx: LocalContext, sub: RefinementType, sup: RefinementType,
                       witness: Optional[Expr] = None) -> Formula:
    """valid(ctx /\\ sub(v) [/\\ v = witness] => sup(v))."""
    hyp, sorts = encode_context(ctx)
    avoid = [sub.pred, sup.pred] + ([witness] if witness is not None else [])
    v = fresh_name("v", set(ctx.names()) | set().union(*(free_vars(a) for a in avoid)))
    parts = [hyp, sub.instantiate(v)]
    if witness is not None:
        parts.append(Binary("=", Var(v), witness))
    return Formula(implies(conj(parts), sup.instantiate(v)), sorts + ((v, sup.base),))


def check_obligation(ctx: LocalContext, e: Expr, t: RefinementType) -> Formula:
    """The validity query behind `ctx |- e : t`; raises on sort or relevance errors."""
    got = type_expr(ctx, e)
    if got.base is not t.base:
        raise SortError(f"expression {e} has sort {got.base}, expected {t.base}")
    return subtype_obligation(ctx, got, t, witness=e)


def check_type_result(ctx: LocalContext, e: Expr, t: RefinementType,
                      checker: Optional[Checker] = None) -> ValidityResult:
    f = check_obligation(ctx, e, t)
    return (checker or default_checker()).check(f)


def check_type(ctx: LocalContext, e: Expr, t: RefinementType, checker: Optional[Checker] = None) -> bool:
    """ctx |- e : t. Sort and relevance violations raise; an unproved obligation gives False."""
    return check_type_result(ctx, e, t, checker).valid


def inhabitation(ctx: LocalContext, t: RefinementType, var: str, checker: Optional[Checker] = None) -> ValidityResult:
    """Valid means the type is empty under ctx (no value satisfies the refinement)."""
    hyp, sorts = encode_context(ctx)
    if var in ctx:
        var = fresh_name(var, set(ctx.names()) | free_vars(t.pred))
    f = Formula(implies(hyp, Unary("not", t.instantiate(var))), sorts + ((var, t.base),))
    return (checker or default_checker()).check(f)
