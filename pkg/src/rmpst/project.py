"""Projection of global types onto roles, with plain and full merging."""
from __future__ import annotations

from dataclasses import replace
from typing import Optional

from .core.context import GlobalContext, LocalContext, Mult
from .core.errors import (IrrelevantVariableUse, MergeFailure, NotProjectable, ProjectionError, TypingError, UndefinedExtension)
from .core.expr import RefinementType, TRUE, Var, disj
from .core.printer import pretty
from .core.types import (GEnd, GMessage, GRec, GVar, LBranch, LEnd, LRec, LRecv, LSend, LSilent, LVar, StateVar,
                         alpha_eq, free_tvars, is_contractive, participants, rec_knowers, rename_vars,
                         type_free_vars)
from .refine.solver import Checker, default_checker
from .refine.typing import check_type_result, wf_error

MERGE_MODES = ("plain", "full")
DEFAULT_MERGE = "full"


def project_context(ctx: GlobalContext, role: str) -> LocalContext:
    return ctx.project(role)


def _labels(s: str) -> list[str]:
    return s.split("|")


def merge(l1, l2, mode: str = DEFAULT_MERGE):
    """Merge two projections of the branches of a choice the role is not part of.

    Plain merge accepts only alpha-equivalent types. Full merge also unites
    receptions from the same peer and folds differing silent prefixes into
    one whose refinement is the disjunction of the originals.
    """
    if alpha_eq(l1, l2):
        return l1
    if mode != "full":
        raise MergeFailure(f"{pretty(l1)} and {pretty(l2)} differ")
    if isinstance(l1, LSilent) and isinstance(l2, LSilent):
        if l1.type.base is not l2.type.base:
            raise MergeFailure(f"silent payloads {l1.type} and {l2.type} have different sorts")
        if l1.var != l2.var:
            used = type_free_vars(l2.cont) | type_free_vars(l1.cont)
            if l1.var in used or l2.var in used:
                raise MergeFailure(f"branch variables {l1.var} and {l2.var} differ and are used later")
            l2 = rename_vars(l2, {l2.var: l1.var})
        labels = _labels(l1.label) + [x for x in _labels(l2.label) if x not in _labels(l1.label)]
        p1, p2 = l1.type.pred, l2.type.instantiate(l1.type.binder)
        pred = TRUE if TRUE in (p1, p2) else (p1 if p1 == p2 else disj([p1, p2]))
        t = RefinementType(l1.type.binder, l1.type.base, pred)
        return LSilent("|".join(labels), l1.var, t, merge(l1.cont, l2.cont, mode))
    if isinstance(l1, LRecv) and isinstance(l2, LRecv) and l1.peer == l2.peer:
        out = list(l1.branches)
        for b in l2.branches:
            for i, a in enumerate(out):
                if a.label == b.label:
                    if a.var != b.var or not a.type.alpha_eq(b.type):
                        raise MergeFailure(f"label {a.label} from {l1.peer} carries different payloads")
                    out[i] = replace(a, cont=merge(a.cont, b.cont, mode))
                    break
            else:
                out.append(b)
        return LRecv(l1.peer, tuple(out))
    if isinstance(l1, LRec) and isinstance(l2, LRec) and l1.tvar == l2.tvar and l1.state == l2.state:
        return replace(l1, body=merge(l1.body, l2.body, mode))
    raise MergeFailure(f"{pretty(l1)} and {pretty(l2)} cannot be merged")


class _Projector:
    def __init__(self, role: str, mode: str, checker: Checker):
        self.role = role
        self.mode = mode
        self.checker = checker

    def fail(self, kind: str, path, reason: str):
        raise ProjectionError(kind, self.role, tuple(path), reason)

    def check_expr(self, sigma: LocalContext, e, t: RefinementType, path, what: str):
        try:
            res = check_type_result(sigma, e, t, self.checker)
        except IrrelevantVariableUse as err:
            self.fail("IrrelevantVariableUse", path, f"{what}: {err}")
        except TypingError as err:
            self.fail("ExprTypeFailure", path, f"{what}: {err}")
        if not res.valid:
            detail = f" (counterexample {res.model})" if res.model else f" ({res.reason})" if res.reason else ""
            self.fail("ExprTypeFailure", path, f"{what}: cannot show {e} has type {t}{detail}")

    def check_wf(self, sigma: LocalContext, t: RefinementType, path, what: str):
        err = wf_error(sigma, t)
        if err:
            self.fail("ExprTypeFailure", path, f"{what} {t} is ill-formed: {err}")

    def check_state(self, sigma: LocalContext, state, values: dict, path, what: str):
        """Simultaneous assignment: later state types see earlier variables' new values."""
        done = {}
        for sv in state:
            e = values.get(sv.name, Var(sv.name))
            t = sv.type.subst_free(done) if done else sv.type
            # Roles that do not learn the variable only check the expression up to erasure.
            ctx = sigma if sv.mult is Mult.OMEGA else sigma.promote()
            self.check_expr(ctx, e, t, path, f"{what} of {sv.name}")
            done[sv.name] = e

    def go(self, ctx: GlobalContext, g, tenv: dict, path: list[str]):
        r = self.role
        if isinstance(g, GEnd):
            return LEnd()
        if isinstance(g, GMessage):
            sigma = ctx.project(r)
            outs = []
            for b in g.branches:
                self.check_wf(sigma, b.type, path + [b.label], f"payload type of {b.label}")
                try:
                    inner = ctx.extend(b.var, {g.sender, g.receiver}, b.type)
                except UndefinedExtension as err:
                    self.fail("ExprTypeFailure", path + [b.label], str(err))
                outs.append((b, self.go(inner, b.cont, tenv, path + [b.label])))
            if r == g.sender:
                return LSend(g.receiver, tuple(LBranch(b.label, b.var, b.type, l) for b, l in outs))
            if r == g.receiver:
                return LRecv(g.sender, tuple(LBranch(b.label, b.var, b.type, l) for b, l in outs))
            silent = [LSilent(b.label, b.var, b.type, l) for b, l in outs]
            acc = silent[0]
            for other in silent[1:]:
                try:
                    acc = merge(acc, other, self.mode)
                except MergeFailure as err:
                    self.fail("MergeFailure", path, str(err))
            return acc
        if isinstance(g, GRec):
            if r not in participants(g.body):
                return LEnd()
            sigma = ctx.project(r)
            local_state = []
            inner = ctx
            for sv in g.state:
                knowers = rec_knowers(g, sv)
                self.check_wf(inner.project(r), sv.type, path, f"state type of {sv.name}")
                mult = Mult.OMEGA if r in knowers else Mult.ZERO
                local_state.append(StateVar(sv.name, sv.type, sv.init, None, mult))
                try:
                    inner = inner.extend(sv.name, knowers, sv.type)
                except UndefinedExtension as err:
                    self.fail("ExprTypeFailure", path, str(err))
            local_state = tuple(local_state)
            self.check_state(sigma, local_state, {sv.name: sv.init for sv in g.state}, path, "initialiser")
            body = self.go(inner, g.body, {**tenv, g.tvar: local_state}, path + [f"mu {g.tvar}"])
            return LRec(g.tvar, local_state, body, g.gen)
        if isinstance(g, GVar):
            state = tenv.get(g.tvar)
            if state is None:
                self.fail("ExprTypeFailure", path, f"unbound recursion variable {g.tvar}")
            declared = {sv.name for sv in state}
            for x, _ in g.assigns:
                if x not in declared:
                    self.fail("ExprTypeFailure", path, f"{g.tvar} has no state variable {x}")
            self.check_state(ctx.project(r), state, dict(g.assigns), path, "assignment")
            return LVar(g.tvar, g.assigns)
        raise TypeError(f"not a global type: {g!r}")


def project(ctx: GlobalContext, g, role: str, *, merge: str = DEFAULT_MERGE,
            checker: Optional[Checker] = None) -> tuple[LocalContext, object]:
    """Project a global context and type onto `role`; raises ProjectionError."""
    if merge not in MERGE_MODES:
        raise ValueError(f"unknown merge mode {merge}")
    p = _Projector(role, merge, checker or default_checker())
    return ctx.project(role), p.go(ctx, g, {}, [])


def well_formed(ctx: GlobalContext, g, *, merge: str = DEFAULT_MERGE, checker: Optional[Checker] = None,
                roles=None) -> dict[str, tuple[LocalContext, object]]:
    """Projections for every participant; raises NotProjectable listing each failing role."""
    failures: dict[str, Exception] = {}
    if free_tvars(g):
        failures["*"] = ProjectionError("FreeTypeVar", "*", (), f"free recursion variables {sorted(free_tvars(g))}")
    elif not is_contractive(g):
        failures["*"] = ProjectionError("NonContractive", "*", (), "type is not contractive")
    if failures:
        raise NotProjectable(failures)
    out = {}
    for r in sorted(roles if roles is not None else participants(g)):
        try:
            out[r] = project(ctx, g, r, merge=merge, checker=checker)
        except ProjectionError as err:
            failures[r] = err
    if failures:
        raise NotProjectable(failures)
    return out


def is_well_formed(ctx: GlobalContext, g, **kw) -> bool:
    try:
        well_formed(ctx, g, **kw)
    except NotProjectable:
        return False
    return True
