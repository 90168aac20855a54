"""Communicating finite state machines built from local types."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .core.context import LocalContext, Mult
from .core.errors import CfsmError
from .core.expr import Expr, RefinementType, TRUE, show, subst
from .core.types import LEnd, LRec, LRecv, LSend, LSilent, LVar


@dataclass(frozen=True)
class State:
    id: int
    kind: str  # send, recv or terminal
    peer: Optional[str]
    context: LocalContext


@dataclass(frozen=True)
class Transition:
    src: int
    dst: int
    direction: str  # "!" or "?"
    peer: str
    label: str
    var: str
    type: RefinementType
    updates: tuple[tuple[str, Expr], ...] = ()

    @property
    def pred(self) -> Expr:
        return self.type.instantiate(self.var)

    def __str__(self) -> str:
        return f"{self.src} -{self.peer}{self.direction}{self.label}-> {self.dst}"


@dataclass
class Cfsm:
    role: str
    states: dict[int, State]
    initial: int
    transitions: list[Transition]
    initial_updates: tuple[tuple[str, Expr], ...] = ()

    def outgoing(self, q: int) -> list[Transition]:
        return [t for t in self.transitions if t.src == q]

    def state(self, q: int) -> State:
        return self.states[q]

    @property
    def terminal(self) -> Optional[int]:
        for s in self.states.values():
            if s.kind == "terminal":
                return s.id
        return None

    def edges(self) -> list[tuple[int, str, int]]:
        return [(t.src, f"{t.peer}{t.direction}{t.label}", t.dst) for t in self.transitions]

    def to_dict(self) -> dict:
        return {
            "role": self.role,
            "states": [
                {"id": s.id, "kind": s.kind, "peer": s.peer,
                 "context": [{"var": e.var, "mult": e.mult.value, "base": e.type.base.value,
                              "pred": show(e.type.instantiate(e.var))} for e in s.context]}
                for s in sorted(self.states.values(), key=lambda s: s.id)
            ],
            "initial": self.initial,
            "initial_updates": [{"var": x, "expr": show(e)} for x, e in self.initial_updates],
            "transitions": [
                {"from": t.src, "to": t.dst, "dir": t.direction, "peer": t.peer, "label": t.label, "var": t.var,
                 "base": t.type.base.value, "pred": show(t.pred),
                 "updates": [{"var": x, "expr": show(e)} for x, e in t.updates]}
                for t in self.transitions
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_dot(self) -> str:
        lines = [f'digraph "{self.role}" {{', "  rankdir=LR;", '  node [shape=circle];']
        for s in sorted(self.states.values(), key=lambda s: s.id):
            ctx = "\\n".join(_dot_escape(str(e)) for e in s.context)
            shape = "doublecircle" if s.kind == "terminal" else "circle"
            lines.append(f'  s{s.id} [label="{s.id}", shape={shape}, tooltip="{ctx}"];')
        lines.append(f"  init [shape=point]; init -> s{self.initial};")
        for t in self.transitions:
            pay = "" if t.type.base.value == "unit" and t.type.pred == TRUE else f"({_dot_escape(str(t.type))})"
            ups = ""
            if t.updates:
                ups = "\\n" + ", ".join(f"{x} := {_dot_escape(show(e))}" for x, e in t.updates)
            lines.append(f'  s{t.src} -> s{t.dst} [label="{t.peer}{t.direction}{t.label}{pay}{ups}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


class _Cell:
    """Node a recursion variable jumps back to, filled in once the node exists."""

    def __init__(self, state):
        self.state = state
        self.node: Optional[int] = None
        self.inner: tuple = ()


def _compose(groups) -> tuple[tuple[str, Expr], ...]:
    """Flatten nested recursion updates into one simultaneous assignment.

    Each group is simultaneous; later groups (inner recursion initialisers)
    see the values assigned by earlier ones, so their expressions are
    rewritten in terms of the pre-transition record.
    """
    done: dict[str, Expr] = {}
    order: list[str] = []
    for group in groups:
        new = [(x, subst(e, done) if done else e) for x, e in group]
        for x, e in new:
            if x not in done:
                order.append(x)
            done[x] = e
    return tuple((x, done[x]) for x in order)


class _Builder:
    def __init__(self):
        self.kinds: dict[int, tuple[str, Optional[str], LocalContext]] = {}
        self.edges: list[Transition] = []
        self.terminal: Optional[int] = None
        self.next = 0

    def node(self, kind: str, peer, ctx) -> int:
        self.next += 1
        self.kinds[self.next] = (kind, peer, ctx)
        return self.next

    def build(self, ctx: LocalContext, t, recenv: dict, cells: list[_Cell]):
        while isinstance(t, LSilent):
            ctx = ctx.extend(t.var, Mult.ZERO, t.type)
            t = t.cont
        if isinstance(t, LRec):
            for sv in t.state:
                ctx = ctx.extend(sv.name, sv.mult, sv.type)
            cell = _Cell(t.state)
            entry = tuple((sv.name, sv.init) for sv in t.state)
            nid, ups = self.build(ctx, t.body, {**recenv, t.tvar: cell}, cells + [cell])
            return nid, (entry,) + ups
        if isinstance(t, LVar):
            cell = recenv.get(t.tvar)
            if cell is None:
                raise CfsmError("Unbound", None, f"type variable {t.tvar} is not bound")
            if cell.node is None:
                raise CfsmError("NotContractive", None, f"{t.tvar} is reached without a communication")
            amap = dict(t.assigns)
            ups = tuple((sv.name, amap[sv.name]) for sv in cell.state if sv.name in amap)
            return cell.node, (ups,) + cell.inner
        if isinstance(t, LEnd):
            if self.terminal is None:
                self.terminal = self.node("terminal", None, ctx)
            return self.terminal, ()
        if isinstance(t, (LSend, LRecv)):
            kind = "send" if isinstance(t, LSend) else "recv"
            nid = self.node(kind, t.peer, ctx)
            for i, c in enumerate(cells):
                c.node = nid
                c.inner = tuple(tuple((sv.name, sv.init) for sv in later.state) for later in cells[i + 1:])
            for b in t.branches:
                inner = ctx.extend(b.var, Mult.OMEGA, b.type)
                dst, ups = self.build(inner, b.cont, recenv, [])
                self.edges.append(Transition(nid, dst, "!" if kind == "send" else "?", t.peer, b.label, b.var,
                                             b.type, _compose(ups)))
            return nid, ()
        raise TypeError(f"not a local type: {t!r}")


def to_cfsm(ctx: LocalContext, t, role: str = "") -> Cfsm:
    """Build the machine for a local type; state ids follow depth-first order, the terminal state last."""
    b = _Builder()
    q0, init_ups = b.build(ctx, t, {}, [])
    order = [n for n in sorted(b.kinds) if n != b.terminal]
    if b.terminal is not None:
        order.append(b.terminal)
    ren = {old: i + 1 for i, old in enumerate(order)}
    states = {ren[n]: State(ren[n], b.kinds[n][0], b.kinds[n][1], b.kinds[n][2]) for n in order}
    edges = [Transition(ren[e.src], ren[e.dst], e.direction, e.peer, e.label, e.var, e.type, e.updates)
             for e in b.edges]
    edges.sort(key=lambda e: e.src)  # stable, keeps branch order
    m = Cfsm(role, states, ren[q0], edges, _compose(init_ups))
    problems = validate(m)
    if problems:
        raise problems[0]
    return m


def validate(m: Cfsm) -> list[CfsmError]:
    """Violations of no-mixed-state, directedness, label determinism and reachability."""
    out: list[CfsmError] = []
    for q, s in sorted(m.states.items()):
        edges = m.outgoing(q)
        if s.kind == "terminal":
            if edges:
                out.append(CfsmError("MixedState", q, "terminal state has outgoing transitions"))
            continue
        if not edges:
            out.append(CfsmError("MixedState", q, "non-terminal state has no transitions"))
            continue
        dirs = {t.direction for t in edges}
        want = "!" if s.kind == "send" else "?"
        if dirs != {want}:
            out.append(CfsmError("MixedState", q, f"{s.kind} state has transitions {sorted(dirs)}"))
        peers = {t.peer for t in edges}
        if len(peers) > 1:
            out.append(CfsmError("NonDirected", q, f"state talks to {sorted(peers)}"))
        labels = [t.label for t in edges]
        if len(set(labels)) != len(labels):
            out.append(CfsmError("DuplicateLabel", q, f"labels {labels}"))
    seen = {m.initial}
    stack = [m.initial]
    while stack:
        q = stack.pop()
        for t in m.outgoing(q):
            if t.dst not in seen:
                seen.add(t.dst)
                stack.append(t.dst)
    for q in sorted(set(m.states) - seen):
        out.append(CfsmError("Unreachable", q, f"state {q} is unreachable from {m.initial}"))
    return out
