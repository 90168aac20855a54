"""Python endpoint API generated from a role's state machine.

The generated module has one frozen, slotted record class per state holding
exactly the values the role knows there, a `Callbacks` protocol with one
chooser per send state and one handler per received label, a `Connection`
protocol with the typed primitives it needs, and `run(callbacks, conn)`,
which drives the machine and checks every refinement it can evaluate.
Output is deterministic: the same machine always gives the same text.
"""
from __future__ import annotations

import ast
import re
import sys
import types
from typing import Optional

from ..cfsm import Cfsm, Transition
from ..core.context import Mult
from ..core.expr import Base, Binary, BoolLit, Expr, IntLit, Unary, Var, free_vars, show
from .runtime import erased_fields, field_name, forced_label, record_fields

PY_TYPE_NAMES = {Base.INT: "int", Base.BOOL: "bool", Base.STRING: "str", Base.UNIT: "None"}
PY_OPS = {"&&": "and", "||": "or", "=": "==", "<>": "!=", "+": "+", "-": "-", "*": "*",
          "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def py_expr(e: Expr, names: Optional[dict] = None) -> str:
    """Python source for a refinement expression, fully parenthesised."""
    names = names or {}
    if isinstance(e, Var):
        return names.get(e.name, field_name(e.name))
    if isinstance(e, IntLit):
        return repr(e.value)
    if isinstance(e, BoolLit):
        return "True" if e.value else "False"
    if isinstance(e, Unary):
        inner = py_expr(e.arg, names)
        return f"(not {inner})" if e.op == "not" else f"(-{inner})"
    if isinstance(e, Binary):
        return f"({py_expr(e.lhs, names)} {PY_OPS[e.op]} {py_expr(e.rhs, names)})"
    raise TypeError(f"not an expression: {e!r}")


def _local(var: str) -> str:
    return "v_" + var


def _pred_src(pred: Expr, available: set[str]) -> Optional[str]:
    if free_vars(pred) - available:
        return None
    return py_expr(pred, {v: _local(v) for v in available})


class _Writer:
    def __init__(self):
        self.lines: list[str] = []

    def __call__(self, line: str = "", indent: int = 0) -> None:
        self.lines.append("    " * indent + line if line else "")

    def text(self) -> str:
        return "\n".join(self.lines).rstrip() + "\n"


def _bases_used(m: Cfsm) -> list[Base]:
    used = {t.type.base for t in m.transitions}
    return [b for b in Base if b in used]


def handler_name(t: Transition) -> str:
    return f"state{t.src}_receive_{t.label}"


def generate(m: Cfsm, protocol: str = "") -> str:
    """Source text of the endpoint module for `m`."""
    w = _Writer()
    title = f"{protocol} " if protocol else ""
    w(f'"""Endpoint API for role {m.role} of {title}protocol. Generated code; do not edit."""')
    w("from __future__ import annotations")
    w()
    w("from dataclasses import dataclass")
    w("from typing import Protocol")
    w()
    w("from rmpst.core.errors import RuntimeViolation")
    w()
    w(f"ROLE = {m.role!r}")
    w(f"INITIAL = {m.initial}")
    w(f"TERMINAL = {m.terminal!r}")
    w()
    states = sorted(m.states)

    # Records
    for q in states:
        st = m.states[q]
        fields = record_fields(m, q)
        erased = erased_fields(m, q)
        w()
        w("@dataclass(frozen=True, slots=True)")
        w(f"class State{q}:")
        doc = f"{st.kind.capitalize()} state" + (f" talking to {st.peer}" if st.peer else "") + "."
        w(f'"""{doc}"""', 1)
        if erased:
            w(f"# Not available to {m.role} here: {', '.join(erased)}", 1)
        for v, b in fields:
            entry = st.context.lookup(v)
            w(f"{field_name(v)}: {PY_TYPE_NAMES[b]}  # {show(entry.type.instantiate(v))}", 1)
        if not fields:
            w("pass", 1)
        w()

    # Callbacks
    w()
    w("class Callbacks(Protocol):")
    w('"""Application logic. Choosers return (label, payload); use None for unit payloads."""', 1)
    for q in states:
        st = m.states[q]
        if st.kind == "send":
            labels = ", ".join(t.label for t in m.outgoing(q))
            w(f"def state{q}_send(self, st: State{q}) -> tuple[str, object]:", 1)
            if forced_label(m, q) is not None:
                w(f'"""Optional: {labels} is the only choice."""', 2)
            else:
                w(f'"""Choose one of: {labels}."""', 2)
            w("...", 2)
            w()
        elif st.kind == "recv":
            for t in m.outgoing(q):
                w(f"def {handler_name(t)}(self, st: State{q}, payload: {PY_TYPE_NAMES[t.type.base]}) -> None:", 1)
                w("...", 2)
                w()

    w()
    w("class Connection(Protocol):")
    w("def send_string(self, peer: str, value: str) -> None: ...", 1)
    w("def recv_string(self, peer: str) -> str: ...", 1)
    w("def send_label(self, peer: str, label: str) -> None: ...", 1)
    w("def recv_label(self, peer: str) -> str: ...", 1)
    for b in _bases_used(m):
        if b is Base.STRING:
            continue
        w(f"def send_{b.value}(self, peer: str, value: {PY_TYPE_NAMES[b]}) -> None: ...", 1)
        w(f"def recv_{b.value}(self, peer: str) -> {PY_TYPE_NAMES[b]}: ...", 1)
    w()
    w()
    w("def _violation(kind: str, state: int, detail: str, values: dict) -> RuntimeViolation:")
    w("return RuntimeViolation(kind, state, detail, values)", 1)

    for q in states:
        st = m.states[q]
        if st.kind == "terminal":
            continue
        w()
        w()
        w(f"def _step{q}(cb, conn, st: State{q}):")
        fields = record_fields(m, q)
        for v, _ in fields:
            w(f"{_local(v)} = st.{field_name(v)}", 1)
        snapshot = "{" + ", ".join(f"{v!r}: {_local(v)}" for v, _ in fields) + "}"
        edges = m.outgoing(q)
        if st.kind == "send" and forced_label(m, q) is not None:
            w(f"chooser = getattr(cb, 'state{q}_send', None)", 1)
            w(f"label, payload = chooser(st) if chooser is not None else ({forced_label(m, q)!r}, None)", 1)
        elif st.kind == "send":
            w(f"label, payload = cb.state{q}_send(st)", 1)
        else:
            w(f"label = conn.recv_label({st.peer!r})", 1)
        for i, t in enumerate(edges):
            w(f"{'if' if i == 0 else 'elif'} label == {t.label!r}:", 1)
            _emit_edge(w, m, t, st.kind, snapshot)
        w("raise _violation(\"UnknownLabel\", " f"{q}, f\"unexpected label {{label!r}}\", {snapshot})", 1)

    w()
    w()
    w(f"_STEPS = {{{', '.join(f'{q}: _step{q}' for q in states if m.states[q].kind != 'terminal')}}}")
    w()
    w()
    init_fields = record_fields(m, m.initial)
    init_assigned = {x for x, _ in m.initial_updates}
    params = [v for v, _ in init_fields if v not in init_assigned]
    w("def run(callbacks: Callbacks, conn: Connection, initial: dict | None = None):")
    w('"""Run the protocol to completion and return the record of the terminal state."""', 1)
    w("initial = dict(initial or {})", 1)
    for v in params:
        w(f"{_local(v)} = initial[{v!r}]", 1)
    _emit_updates(w, m, m.initial_updates, m.initial, {v for v in params}, 1, "{}")
    args = ", ".join(f"{field_name(v)}={_local(v)}" for v, _ in init_fields)
    w(f"q, st = INITIAL, State{m.initial}({args})", 1)
    w("while q != TERMINAL:", 1)
    w("q, st = _STEPS[q](callbacks, conn, st)", 2)
    w("return st", 1)
    return w.text()


def _emit_edge(w: _Writer, m: Cfsm, t: Transition, kind: str, snapshot: str) -> None:
    q = t.src
    avail = {v for v, _ in record_fields(m, q)}
    base = t.type.base
    pv = _local(t.var)
    if kind == "send":
        if base is Base.UNIT:
            w(f"{pv} = None", 2)
        else:
            py = {Base.INT: "int", Base.BOOL: "bool", Base.STRING: "str"}[base]
            extra = " or isinstance(payload, bool)" if base is Base.INT else ""
            w(f"if not isinstance(payload, {py}){extra}:", 2)
            w(f"raise _violation(\"RefinementFailed\", {q}, f\"payload {{payload!r}} of {t.label} is not {base}\", "
              f"{snapshot})", 3)
            w(f"{pv} = payload", 2)
    avail_after = avail | {t.var}
    pred = _pred_src(t.pred, avail_after)
    if kind == "recv":
        w(f"{pv} = conn.recv_{base.value}({t.peer!r})", 2)
    if pred is not None and t.pred != BoolLit(True):
        w(f"if not {pred}:", 2)
        w(f"raise _violation(\"RefinementFailed\", {q}, {('payload of ' + t.label + ': ' + show(t.pred))!r}, "
          f"{snapshot})", 3)
    elif pred is None:
        w(f"# {show(t.pred)} mentions values {m.role} does not have; not checked", 2)
    if kind == "send":
        w(f"conn.send_label({t.peer!r}, {t.label!r})", 2)
        w(f"conn.send_{base.value}({t.peer!r}, {pv})", 2)
    else:
        w(f"cb.{handler_name(t)}(st, {pv})", 2)
    _emit_updates(w, m, t.updates, t.dst, avail_after, 2, snapshot)
    args = ", ".join(f"{field_name(v)}={_local(v)}" for v, _ in record_fields(m, t.dst))
    w(f"return {t.dst}, State{t.dst}({args})", 2)


def _emit_updates(w: _Writer, m: Cfsm, updates, dst: int, avail: set[str], indent: int, snapshot: str) -> None:
    """Simultaneous assignment of recursion state, then checks of the new values."""
    ctx = m.states[dst].context
    todo = []
    for x, e in updates:
        entry = ctx.lookup(x)
        if entry is None or entry.mult is Mult.ZERO or free_vars(e) - avail:
            continue
        todo.append((x, e))
    if not todo:
        return
    lhs = ", ".join(_local(x) for x, _ in todo)
    rhs = ", ".join(py_expr(e, {v: _local(v) for v in avail}) for _, e in todo)
    w(f"{lhs}{',' if len(todo) == 1 else ''} = {rhs}{',' if len(todo) == 1 else ''}", indent)
    after = avail | {x for x, _ in todo}
    for x, _ in todo:
        pred = ctx.lookup(x).type.instantiate(x)
        src = _pred_src(pred, after)
        if src is not None and pred != BoolLit(True):
            w(f"if not {src}:", indent)
            w(f"raise _violation(\"RefinementFailed\", {dst}, {('state variable ' + x + ': ' + show(pred))!r}, "
              f"{snapshot})", indent + 1)


def load_generated(source: str, name: str = "rmpst_generated"):
    """Execute generated source as a fresh module object."""
    mod = types.ModuleType(name)
    sys.modules[name] = mod  # dataclasses resolve annotations through sys.modules
    exec(compile(source, f"<{name}>", "exec"), mod.__dict__)
    return mod


_CALLBACK = re.compile(r"state(\d+)_(send|receive_\w+)$")


def check_callbacks(m: Cfsm, source: str) -> list[str]:
    """Static check of callback source against the state records.

    Reports every `st.<field>` read in a `state<q>_...` callback where the
    field is not part of state q's record, erased variables included. This is
    the counterpart of the host type checker rejecting such a callback.
    """
    problems = []
    for node in ast.walk(ast.parse(source)):
        if not isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            continue
        hit = _CALLBACK.match(node.name)
        if not hit or int(hit.group(1)) not in m.states:
            continue
        q = int(hit.group(1))
        params = [a.arg for a in node.args.args]
        if params and params[0] == "self":
            params = params[1:]
        if not params:
            continue
        record = params[0]
        fields = {field_name(v) for v, _ in record_fields(m, q)}
        erased = {field_name(v) for v in erased_fields(m, q)}
        for sub in ast.walk(node):
            if isinstance(sub, ast.Attribute) and isinstance(sub.value, ast.Name) and sub.value.id == record \
                    and sub.attr not in fields:
                why = "erased" if sub.attr in erased else "not in the record"
                problems.append(f"line {sub.lineno}: {node.name} reads {record}.{sub.attr}, which is {why} "
                                f"at state {q} of {m.role}")
    return problems
