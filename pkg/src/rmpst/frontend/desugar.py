"""Lowering of protocol declarations to core global types, plus static validation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..core.errors import Diagnostic, DiagnosticError, Span
from ..core.expr import RefinementType
from ..core.types import (GBranch, GEnd, GMessage, GRec, GVar, free_tvars, is_contractive, participants,
                          rename_vars, type_free_vars, StateVar)
from .parser import Choice, Do, Fresh, Message, Module, parse_module


@dataclass
class _Frame:
    name: str
    roles: dict[str, str]  # formal -> actual


class _Desugar:
    def __init__(self, module: Module, fresh: Fresh):
        self.module = module
        self.fresh = fresh
        self.diags: list[Diagnostic] = []

    def fail(self, code: str, msg: str, span: Optional[Span]):
        raise DiagnosticError([Diagnostic(code, msg, span)])

    def seq(self, stmts, rmap: dict[str, str], stack: list[_Frame], tail):
        cont = tail
        for i in range(len(stmts) - 1, -1, -1):
            cont = self.stmt(stmts[i], rmap, stack, cont, last=(i == len(stmts) - 1))
        return cont

    def role(self, name: str, rmap: dict[str, str], span) -> str:
        if name not in rmap:
            self.fail("UnknownRole", f"role {name} is not declared", span)
        return rmap[name]

    def stmt(self, s, rmap, stack, cont, last: bool):
        if isinstance(s, Message):
            sender = self.role(s.sender, rmap, s.span)
            receiver = self.role(s.receiver, rmap, s.span)
            if sender == receiver:
                self.fail("SelfMessage", f"{s.label} is sent from {sender} to itself", s.span)
            var = s.var or self.fresh()
            t = s.type if s.var else RefinementType(var, s.type.base, s.type.instantiate(var))
            return GMessage(sender, receiver, (GBranch(s.label, var, t, cont),))
        if isinstance(s, Choice):
            return self.choice(s, rmap, stack, cont)
        return self.call(s, rmap, stack, cont)

    def choice(self, s: Choice, rmap, stack, cont):
        chooser = self.role(s.role, rmap, s.span)
        branches: list[GBranch] = []
        receiver = None
        for block in s.blocks:
            g = self.seq(block, rmap, stack, cont)
            if not isinstance(g, GMessage):
                self.fail("NonDirectedChoice", f"every block of the choice at {s.role} must start with a message", s.span)
            if g.sender != chooser:
                self.fail("NonDirectedChoice",
                          f"choice at {chooser} has a block starting with a message from {g.sender}", s.span)
            if receiver is None:
                receiver = g.receiver
            elif g.receiver != receiver:
                self.fail("NonDirectedChoice",
                          f"choice at {chooser} sends first to both {receiver} and {g.receiver}", s.span)
            branches.extend(g.branches)
        labels = [b.label for b in branches]
        dup = sorted({l for l in labels if labels.count(l) > 1})
        if dup:
            self.fail("DuplicateLabel", f"choice at {chooser} repeats label {dup[0]}", s.span)
        anon = [b for b in branches if b.var.startswith("_")]
        if len(anon) > 1:
            shared = self.fresh()
            branches = [_rename_branch(b, shared) if b.var.startswith("_") else b for b in branches]
        return GMessage(chooser, receiver, tuple(branches))

    def call(self, s: Do, rmap, stack, cont):
        decl = self.module.protocols.get(s.name)
        if decl is None or decl.core is not None:
            self.fail("UnknownProtocol", f"no protocol named {s.name}", s.span)
        if len(s.args) != len(decl.roles):
            self.fail("ArityMismatch", f"{s.name} expects {len(decl.roles)} roles, got {len(s.args)}", s.span)
        mapping: dict[str, str] = {}
        assigns = []
        for formal, (actual, exprs) in zip(decl.roles, s.args):
            mapping[formal.name] = self.role(actual, rmap, s.span)
            if formal.state and exprs is None:
                self.fail("ArityMismatch", f"role {formal.name} of {s.name} needs state arguments", s.span)
            if exprs is not None and len(exprs) != len(formal.state):
                self.fail("ArityMismatch",
                          f"role {formal.name} of {s.name} takes {len(formal.state)} state arguments", s.span)
            for (v, _), e in zip(formal.state, exprs or []):
                assigns.append((v, e))
        if len(set(mapping.values())) != len(mapping):
            self.fail("ArityMismatch", f"{s.name} is called with a repeated role", s.span)
        for frame in stack:
            if frame.name == s.name:
                if frame.roles != mapping:
                    self.fail("UnsupportedNesting",
                              f"recursive call of {s.name} permutes its roles", s.span)
                if not isinstance(cont, GEnd):
                    self.fail("UnsupportedNesting",
                              f"statements after the recursive call of {s.name} are unreachable", s.span)
                return GVar(s.name, tuple(assigns))
        state = []
        for formal in decl.roles:
            for v, t in formal.state:
                init = dict(assigns)[v]
                state.append(StateVar(v, t, init, frozenset([mapping[formal.name]])))
        body = self.seq(decl.body, mapping, stack + [_Frame(s.name, mapping)], cont)
        if not state and s.name not in _called_tvars(body):
            return body
        return GRec(s.name, tuple(state), body)


def _called_tvars(g) -> frozenset[str]:
    return free_tvars(g)


def _rename_branch(b: GBranch, shared: str) -> GBranch:
    t = RefinementType(shared, b.type.base, b.type.instantiate(shared))
    return GBranch(b.label, shared, t, rename_vars(b.cont, {b.var: shared}))


def desugar(module: Module, name: Optional[str] = None):
    """Lower the main (or named) protocol to a closed core global type.

    Raises DiagnosticError when the protocol cannot be lowered or fails the
    static checks.
    """
    decl = module.protocols[name or module.main]
    fresh = module.fresh or Fresh()
    if decl.core is not None:
        g = decl.core
        declared = None
    else:
        if decl.aux:
            raise DiagnosticError([Diagnostic("AuxEntry", f"{decl.name} is an aux protocol", decl.span)])
        if any(r.state for r in decl.roles):
            raise DiagnosticError([Diagnostic(
                "UnsupportedNesting", "state annotations are only allowed on aux protocols", decl.span)])
        roles = {r.name: r.name for r in decl.roles}
        g = _Desugar(module, fresh).seq(decl.body, roles, [], GEnd())
        declared = set(roles)
    validate(g, decl.span)
    if declared is not None:
        missing = participants(g) - declared
        if missing:
            raise DiagnosticError([Diagnostic("UnknownRole", f"undeclared roles {sorted(missing)}", decl.span)])
    return g


def validate(g, span: Optional[Span] = None) -> None:
    """Static checks on a core global type: closedness, contractiveness, labels, shadowing."""
    diags: list[Diagnostic] = []
    ftv = free_tvars(g)
    if ftv:
        diags.append(Diagnostic("FreeTypeVariable", f"unbound recursion variables {sorted(ftv)}", span))
    fv = type_free_vars(g)
    if fv:
        diags.append(Diagnostic("UnboundVariable", f"unbound variables {sorted(fv)}", span))
    if not is_contractive(g):
        diags.append(Diagnostic("NotContractive", "a recursion variable is reachable without a message", span))
    _walk(g, frozenset(), {}, diags, span)
    if diags:
        raise DiagnosticError(diags)


def _walk(g, bound: frozenset[str], recs: dict, diags: list[Diagnostic], span) -> None:
    if isinstance(g, GMessage):
        if g.sender == g.receiver:
            diags.append(Diagnostic("SelfMessage", f"message from {g.sender} to itself", span))
        labels = [b.label for b in g.branches]
        if len(set(labels)) != len(labels):
            diags.append(Diagnostic("DuplicateLabel", f"repeated label in {labels}", span))
        for b in g.branches:
            if b.var in bound:
                diags.append(Diagnostic("ShadowedVariable", f"variable {b.var} is bound twice on one path", span))
            _walk(b.cont, bound | {b.var}, recs, diags, span)
    elif isinstance(g, GRec):
        names = [sv.name for sv in g.state]
        for n in names:
            if n in bound or names.count(n) > 1:
                diags.append(Diagnostic("ShadowedVariable", f"variable {n} is bound twice on one path", span))
        _walk(g.body, bound | set(names), {**recs, g.tvar: names}, diags, span)
    elif isinstance(g, GVar):
        known = recs.get(g.tvar, [])
        for x, _ in g.assigns:
            if x not in known:
                diags.append(Diagnostic("UnknownStateVariable", f"{g.tvar} has no state variable {x}", span))


def parse_protocol(text: str) -> Module:
    """Parse protocol text; raises DiagnosticError with located diagnostics."""
    return parse_module(text)


def load_global(text: str, name: Optional[str] = None):
    """Parse and lower in one step."""
    return desugar(parse_module(text), name)
