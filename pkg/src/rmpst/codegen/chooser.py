"""Guarded choosers for send states, verified against the state's context before use.

A chooser is an ordered list of cases `(guard, label, payload)`. The first case
whose guard holds is taken. Three families of obligations are discharged
under the conjunction of the state's context refinements:

* exhaustiveness: some covered label's refinement holds,
* guard totality: some guard holds,
* per case: the case's guard, together with the failure of every earlier
  guard, implies the refinement of its label at its payload.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..cfsm import Cfsm, Transition
from ..core.context import Mult
from ..core.errors import ChooserError
from ..core.expr import Base, Expr, Unary, conj, disj, evaluate, free_vars, fresh_name, implies, show, subst
from ..frontend import parse_expr
from ..refine.formula import Formula
from ..refine.solver import Checker, ValidityResult, default_checker
from ..refine.typing import encode_context, sort_of
from .runtime import field_name


def _expr(e: Union[Expr, str, None]) -> Optional[Expr]:
    return parse_expr(e) if isinstance(e, str) else e


@dataclass(frozen=True)
class Case:
    guard: Expr
    label: str
    payload: Optional[Expr] = None


@dataclass(frozen=True)
class Obligation:
    kind: str  # Exhaustive, GuardsTotal or Case
    label: Optional[str]
    formula: Formula
    result: ValidityResult

    @property
    def ok(self) -> bool:
        return self.result.valid


class GuardedChooser:
    """Chooser for send state `state` of `machine`; call `verify()` before running it."""

    def __init__(self, machine: Cfsm, state: int, cases):
        self.machine = machine
        self.state = state
        self.cases = tuple(c if isinstance(c, Case) else Case(_expr(c[0]), c[1], _expr(c[2]) if len(c) > 2 else None)
                           for c in cases)
        self.obligations: list[Obligation] = []

    @property
    def edges(self) -> dict[str, Transition]:
        return {t.label: t for t in self.machine.outgoing(self.state)}

    def obligations_for(self) -> list[tuple[str, Optional[str], Formula]]:
        m, q = self.machine, self.state
        st = m.states.get(q)
        if st is None or st.kind != "send":
            raise ChooserError("NotSendState", q, f"state {q} of {m.role} is not a send state")
        edges = self.edges
        ctx = st.context
        known = {e.var for e in ctx if e.mult is Mult.OMEGA}
        hyp, sorts = encode_context(ctx)
        used = set(ctx.names())
        for c in self.cases:
            if c.label not in edges:
                raise ChooserError("UnknownLabel", q, f"{c.label!r} is not one of {sorted(edges)}")
            for what, e in (("guard", c.guard), ("payload", c.payload)):
                if e is None:
                    continue
                hidden = free_vars(e) - known
                if hidden:
                    raise ChooserError("IrrelevantVariableUse", q,
                                       f"{what} {show(e)} of {c.label} uses {', '.join(sorted(hidden))}, "
                                       f"which {m.role} does not know here")
            if sort_of(ctx, c.guard) is not Base.BOOL:
                raise ChooserError("SortError", q, f"guard {show(c.guard)} is not boolean")
            base = edges[c.label].type.base
            if base is not Base.UNIT:
                if c.payload is None:
                    raise ChooserError("MissingPayload", q, f"{c.label} carries {base} but the case gives no payload")
                if sort_of(ctx, c.payload) is not base:
                    raise ChooserError("SortError", q, f"payload {show(c.payload)} of {c.label} is not {base}")
            used |= free_vars(c.guard) | (free_vars(c.payload) if c.payload is not None else set())
        used |= {t.var for t in edges.values()}

        def label_pred(c: Case) -> tuple[Expr, tuple]:
            t = edges[c.label]
            if t.type.base is Base.UNIT or c.payload is None:
                v = fresh_name(t.var, used)
                return t.type.instantiate(v), ((v, t.type.base),)
            return _at(t, c.payload), ()

        out = []
        covered, extra = [], ()
        seen = set()
        for c in self.cases:
            if c.label in seen:
                continue
            seen.add(c.label)
            p, s = label_pred(c)
            covered.append(p)
            extra += s
        out.append(("Exhaustive", None, Formula(implies(hyp, disj(covered)), sorts + extra)))
        out.append(("GuardsTotal", None, Formula(implies(hyp, disj([c.guard for c in self.cases])), sorts)))
        earlier: list[Expr] = []
        for c in self.cases:
            p, s = label_pred(c)
            prem = conj([hyp] + [Unary("not", g) for g in earlier] + [c.guard])
            out.append(("Case", c.label, Formula(implies(prem, p), sorts + s)))
            earlier.append(c.guard)
        return out

    def verify(self, checker: Optional[Checker] = None) -> "GuardedChooser":
        """Discharge every obligation; raises ChooserError at the first that fails."""
        checker = checker or default_checker()
        self.obligations = []
        for kind, label, f in self.obligations_for():
            res = checker.check(f)
            self.obligations.append(Obligation(kind, label, f, res))
            if not res.valid:
                err_kind = {"Exhaustive": "NotExhaustive", "GuardsTotal": "GuardsNotTotal"}.get(kind, "CaseRefinement")
                what = {"NotExhaustive": "the covered labels do not cover every reachable valuation",
                        "GuardsNotTotal": "no guard holds for some reachable valuation",
                        "CaseRefinement": f"case {label} may send a payload violating its refinement"}[err_kind]
                raise ChooserError(err_kind, self.state, what + (f" ({res.reason})" if res.reason else ""),
                                   res.model)
        return self

    def choose(self, record) -> tuple[str, object]:
        env = {}
        for e in self.machine.states[self.state].context:
            name = field_name(e.var)
            if hasattr(record, name):
                env[e.var] = getattr(record, name)
        for c in self.cases:
            if evaluate(c.guard, env):
                return c.label, None if c.payload is None else evaluate(c.payload, env)
        raise ChooserError("GuardsNotTotal", self.state, f"no guard holds for {env}")

    @property
    def callback_name(self) -> str:
        return f"state{self.state}_send"


def _at(t: Transition, payload: Expr) -> Expr:
    """The label's refinement with the payload expression in place of the variable."""
    return subst(t.type.instantiate(t.var), {t.var: payload})


def chooser_callbacks(*choosers: GuardedChooser, **extra) -> dict:
    """A callback dictionary for the runtime built from verified choosers."""
    out = dict(extra)
    for ch in choosers:
        out[ch.callback_name] = ch.choose
    return out
