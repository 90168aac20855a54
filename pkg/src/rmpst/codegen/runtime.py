"""Executing a state machine with user callbacks over a connection.

Refinements are checked as runtime assertions: before sending and after
receiving each payload, and on every recursion state update. A predicate
that mentions a variable whose value this role does not have is skipped and
noted in the log.
"""
from __future__ import annotations

import keyword
import logging
from dataclasses import make_dataclass
from typing import Optional

from ..cfsm import Cfsm
from ..core.context import Mult
from ..core.errors import RuntimeViolation
from ..core.expr import Base, evaluate, free_vars, show
from ..core.printer import is_anonymous

log = logging.getLogger(__name__)

PY_TYPES = {Base.INT: int, Base.BOOL: bool, Base.STRING: str, Base.UNIT: type(None)}


def field_name(var: str) -> str:
    """Python attribute name for a protocol variable."""
    return var + "_" if keyword.iskeyword(var) else var


def record_fields(m: Cfsm, q: int) -> list[tuple[str, Base]]:
    """Variables whose values the role holds at state q, in context order."""
    return [(e.var, e.type.base) for e in m.states[q].context
            if e.mult is Mult.OMEGA and not is_anonymous(e.var)]


def erased_fields(m: Cfsm, q: int) -> list[str]:
    return [e.var for e in m.states[q].context if e.mult is Mult.ZERO and not is_anonymous(e.var)]


_classes: dict = {}


def record_class(m: Cfsm, q: int) -> type:
    """Frozen slotted record for state q; erased variables have no attribute."""
    fields = tuple((field_name(v), PY_TYPES[b]) for v, b in record_fields(m, q))
    key = (m.role, q, fields)
    cls = _classes.get(key)
    if cls is None:
        cls = make_dataclass(f"State{q}", list(fields), frozen=True, slots=True)
        _classes[key] = cls
    return cls


def make_record(m: Cfsm, q: int, env: dict):
    cls = record_class(m, q)
    return cls(**{field_name(v): env[v] for v, _ in record_fields(m, q)})


def sort_ok(base: Base, v) -> bool:
    if base is Base.INT:
        return isinstance(v, int) and not isinstance(v, bool)
    if base is Base.BOOL:
        return isinstance(v, bool)
    if base is Base.STRING:
        return isinstance(v, str)
    return v is None


def check_pred(pred, env: dict, q: int, what: str, skipped: Optional[list] = None) -> None:
    missing = free_vars(pred) - set(env)
    if missing:
        note = f"state {q}: {what}: not checked, {', '.join(sorted(missing))} erased here"
        log.debug(note)
        if skipped is not None:
            skipped.append(note)
        return
    if not evaluate(pred, env):
        raise RuntimeViolation("RefinementFailed", q, f"{what}: {show(pred)} does not hold", _snapshot(env))


def _snapshot(env: dict) -> dict:
    return {k: v for k, v in env.items() if not is_anonymous(k)}


def apply_updates(m: Cfsm, updates, env: dict, dst: int, skipped: Optional[list] = None) -> dict:
    """Simultaneous recursion updates, evaluated against the pre-transition values."""
    ctx = m.states[dst].context
    new = {}
    for x, e in updates:
        entry = ctx.lookup(x)
        if entry is None or entry.mult is Mult.ZERO:
            continue
        missing = free_vars(e) - set(env)
        if missing:
            note = f"state {dst}: update of {x} skipped, {', '.join(sorted(missing))} erased here"
            log.debug(note)
            if skipped is not None:
                skipped.append(note)
            continue
        new[x] = evaluate(e, env)
    out = {**env, **new}
    for x in new:
        entry = ctx.lookup(x)
        check_pred(entry.type.instantiate(x), out, dst, f"state variable {x}", skipped)
    return out


def forced_label(m: Cfsm, q: int) -> Optional[str]:
    """The label of a send state with a single unit-payload choice, which needs no chooser."""
    edges = m.outgoing(q)
    if m.states[q].kind == "send" and len(edges) == 1 and edges[0].type.base is Base.UNIT:
        return edges[0].label
    return None


def _lookup(callbacks, name: str):
    if isinstance(callbacks, dict):
        return callbacks.get(name)
    return getattr(callbacks, name, None)


def _choice(result, q: int):
    if isinstance(result, str):
        return result, None
    try:
        label, payload = result
    except (TypeError, ValueError):
        raise RuntimeViolation("UnknownLabel", q, f"chooser returned {result!r}, expected (label, payload)")
    return label, payload


def run_endpoint(m: Cfsm, callbacks, conn, *, initial: Optional[dict] = None, max_steps: Optional[int] = None,
                 skipped: Optional[list] = None):
    """Drive the machine from its initial state to the terminal state.

    Choosers are called as `state{q}_send(record)` and return
    `(label, payload)`; handlers `state{q}_receive_{label}(record, payload)`
    are optional. Returns the record of the terminal state.
    """
    env = dict(initial or {})
    missing = [v for v, _ in record_fields(m, m.initial) if v not in env and
               v not in {x for x, _ in m.initial_updates}]
    if missing:
        raise ValueError(f"initial values missing for {missing}")
    env = apply_updates(m, m.initial_updates, env, m.initial, skipped)
    q = m.initial
    steps = 0
    while True:
        st = m.states[q]
        if st.kind == "terminal":
            return make_record(m, q, env)
        if max_steps is not None and steps >= max_steps:
            raise RuntimeViolation("StepLimit", q, f"no terminal state within {max_steps} steps", _snapshot(env))
        steps += 1
        rec = make_record(m, q, env)
        edges = {t.label: t for t in m.outgoing(q)}
        if st.kind == "send":
            chooser = _lookup(callbacks, f"state{q}_send")
            if chooser is not None:
                label, payload = _choice(chooser(rec), q)
            elif forced_label(m, q) is not None:
                label, payload = forced_label(m, q), None
            else:
                raise RuntimeViolation("UnknownLabel", q, f"no chooser state{q}_send", _snapshot(env))
            edge = edges.get(label)
            if edge is None:
                raise RuntimeViolation("UnknownLabel", q, f"{label!r} is not one of {sorted(edges)}", _snapshot(env))
            base = edge.type.base
            if base is Base.UNIT:
                payload = None
            if not sort_ok(base, payload):
                raise RuntimeViolation("RefinementFailed", q, f"payload {payload!r} of {label} is not a {base}",
                                       _snapshot(env))
            after = {**env, edge.var: payload}
            check_pred(edge.pred, after, q, f"payload of {label}", skipped)
            conn.send_label(st.peer, label)
            conn.send_value(st.peer, base.value, payload)
        else:
            label = conn.recv_label(st.peer)
            edge = edges.get(label)
            if edge is None:
                raise RuntimeViolation("UnknownLabel", q, f"received {label!r}, expected one of {sorted(edges)}",
                                       _snapshot(env))
            payload = conn.recv_value(st.peer, edge.type.base.value)
            after = {**env, edge.var: payload}
            check_pred(edge.pred, after, q, f"payload of {label}", skipped)
            handler = _lookup(callbacks, f"state{q}_receive_{label}")
            if handler is not None:
                handler(rec, payload)
        env = apply_updates(m, edge.updates, after, edge.dst, skipped)
        q = edge.dst
