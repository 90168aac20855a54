"""Labelled transition systems for global types, local types and configurations.

The checkers built on top (trace equivalence, progress, preservation) explore
the systems up to a depth bound and a node budget. Recursion unfolding inside
one silent closure or one causally independent step search is limited to one
unfolding per recursion variable, which keeps every step relation finite.
"""
from __future__ import annotations

import itertools
import logging
import sys
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .core.context import GlobalContext, LocalContext, Mult
from .core.errors import ExplorationBudgetExceeded, NotProjectable, UndefinedExtension
from .core.expr import rename
from .core.types import (Action, GMessage, GRec, LRec, LRecv, LSend, LSilent, LEnd, canonical, participants,
                         rec_knowers, renamed_state, strip_generations, unfold)
from .project import DEFAULT_MERGE, well_formed

log = logging.getLogger(__name__)

DEFAULT_DEPTH = 10
DEFAULT_BUDGET = 50_000

BOUNDED_NOTE = ("bounded check: results hold for traces up to the given depth; recursion is unfolded at most "
                "once per variable inside one silent closure")


@dataclass(frozen=True)
class GlobalState:
    ctx: GlobalContext
    type: object

    def key(self) -> tuple:
        return (self.ctx.canonical(), canonical(self.type))


LocalState = tuple  # (LocalContext, LocalType)


@dataclass(frozen=True)
class Configuration:
    """Role-indexed local contexts and types."""

    roles: tuple[tuple[str, LocalState], ...]

    @staticmethod
    def of(mapping: dict) -> "Configuration":
        return Configuration(tuple(sorted(mapping.items())))

    def __getitem__(self, role: str) -> LocalState:
        for r, s in self.roles:
            if r == role:
                return s
        raise KeyError(role)

    def as_dict(self) -> dict:
        return dict(self.roles)

    def key(self) -> tuple:
        return tuple((r, ctx.canonical(), canonical(t)) for r, (ctx, t) in self.roles)


# ---------------------------------------------------------------------------
# Global types


def gsteps(s: GlobalState) -> list[tuple[Action, GlobalState]]:
    """Every step of a global type in context: prefix, causally independent and recursion rules."""
    return [(a, GlobalState(c, g)) for a, c, g in _gsteps(s.ctx, s.type, frozenset(), frozenset())]


def _gsteps(ctx: GlobalContext, g, blocked: frozenset, unfolded: frozenset):
    if isinstance(g, GRec):
        if g.tvar in unfolded:
            return []
        inner = ctx
        try:
            for sv in renamed_state(g):
                inner = inner.extend(sv.name, rec_knowers(g, sv), sv.type)
        except UndefinedExtension:
            return []
        return _gsteps(inner, unfold(g), blocked, unfolded | {g.tvar} if blocked else unfolded)
    if not isinstance(g, GMessage):
        return []
    out = []
    if not ({g.sender, g.receiver} & blocked):
        for b in g.branches:
            a = Action(g.sender, g.receiver, b.label, b.var, b.type)
            try:
                out.append((a, ctx.extend(b.var, {g.sender, g.receiver}, b.type), b.cont))
            except UndefinedExtension:
                pass
    # Steps of later messages whose subjects are disjoint from this prefix.
    inner_blocked = blocked | {g.sender, g.receiver}
    if participants(g) <= inner_blocked:
        return out
    per_branch = []
    for b in g.branches:
        try:
            c = ctx.extend(b.var, (), b.type)
        except UndefinedExtension:
            return out
        steps = {}
        for a, c2, g2 in _gsteps(c, b.cont, inner_blocked, unfolded):
            if a.subjects & {g.sender, g.receiver}:
                continue
            steps.setdefault(_exact(a), []).append((a, c2, g2))
        per_branch.append(steps)
    common = set(per_branch[0])
    for steps in per_branch[1:]:
        common &= set(steps)
    for k in sorted(common, key=repr):
        for choice in itertools.product(*(steps[k] for steps in per_branch)):
            targets = {c2.canonical() for _, c2, _ in choice}
            if len(targets) != 1:
                continue
            a, c2, _ = choice[0]
            branches = tuple(type(b)(b.label, b.var, b.type, g2) for b, (_, _, g2) in zip(g.branches, choice))
            out.append((a, c2, GMessage(g.sender, g.receiver, branches)))
    return out


def _exact(a: Action) -> tuple:
    return (a.sender, a.receiver, a.label, a.var, a.type)


# ---------------------------------------------------------------------------
# Local types


def lsteps_silent(s: LocalState) -> list[LocalState]:
    """One silent step: silent prefix, recursion unfolding, or a uniform step under a prefix."""
    r = _silent(s[0], s[1], frozenset())
    return [] if r is None else [r]


def _silent(ctx: LocalContext, t, unfolded: frozenset) -> Optional[LocalState]:
    if isinstance(t, LSilent):
        try:
            return ctx.extend(t.var, Mult.ZERO, t.type), t.cont
        except UndefinedExtension:
            return None
    if isinstance(t, LRec):
        if t.tvar in unfolded:
            return None
        inner = ctx
        try:
            for sv in renamed_state(t):
                inner = inner.extend(sv.name, sv.mult, sv.type)
        except UndefinedExtension:
            return None
        return inner, unfold(t)
    if isinstance(t, (LSend, LRecv)):
        results = []
        for b in t.branches:
            try:
                c = ctx.extend(b.var, Mult.ZERO, b.type)
            except UndefinedExtension:
                return None
            r = _silent(c, b.cont, unfolded)
            if r is None:
                return None
            results.append(r)
        if len({c.canonical() for c, _ in results}) != 1:
            return None
        branches = tuple(type(b)(b.label, b.var, b.type, l2) for b, (_, l2) in zip(t.branches, results))
        return results[0][0], type(t)(t.peer, branches)
    return None


def silent_closure(s: LocalState) -> list[LocalState]:
    """The chain of states reachable by silent steps, starting with s itself.

    Silent steps are deterministic, so the closure is a chain. Each recursion
    variable is unfolded at most once, which bounds the chain.
    """
    chain = [s]
    unfolded: frozenset = frozenset()
    ctx, t = s
    while True:
        tvars = _head_tvars(t)
        nxt = _silent(ctx, t, unfolded)
        if nxt is None:
            return chain
        unfolded = unfolded | tvars
        ctx, t = nxt
        chain.append(nxt)


def _head_tvars(t) -> frozenset:
    """Recursion variables a silent step on t may unfold; used to cap the closure."""
    out: set = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, LRec):
            out.add(u.tvar)
        elif isinstance(u, LSilent):
            pass
        elif isinstance(u, (LSend, LRecv)):
            stack.extend(b.cont for b in u.branches)
    return frozenset(out)


def concrete_steps(role: str, s: LocalState) -> list[tuple[Action, LocalState]]:
    ctx, t = s
    out = []
    if isinstance(t, (LSend, LRecv)):
        for b in t.branches:
            a = Action(role, t.peer, b.label, b.var, b.type) if isinstance(t, LSend) else \
                Action(t.peer, role, b.label, b.var, b.type)
            try:
                out.append((a, (ctx.extend(b.var, Mult.OMEGA, b.type), b.cont)))
            except UndefinedExtension:
                pass
    return out


def lsteps(role: str, s: LocalState) -> list[tuple[Action, LocalState]]:
    """Concrete steps after any number of silent steps."""
    out = []
    for mid in silent_closure(s):
        out.extend(concrete_steps(role, mid))
    return out


# ---------------------------------------------------------------------------
# Configurations


def associate(ctx: GlobalContext, g, *, merge: str = DEFAULT_MERGE, checker=None) -> Configuration:
    """The configuration of projections of a global type; raises NotProjectable."""
    return Configuration.of(well_formed(ctx, g, merge=merge, checker=checker))


def config_steps(c: Configuration) -> list[tuple[Action, Configuration]]:
    """Synchronous steps: sender and receiver step together after any silent moves of their own.

    Uninvolved roles stay put. Silent moves are private to a role and commute with every
    other step, so taking them lazily gives the same traces without multiplying states.
    """
    roles = c.as_dict()
    steps = {r: [(a, s2) for mid in silent_closure(s) for a, s2 in concrete_steps(r, mid)] for r, s in roles.items()}
    out = []
    seen = set()
    for p in sorted(roles):
        for a, sp in steps[p]:
            if a.sender != p or a.receiver not in roles:
                continue
            q = a.receiver
            for b, sq in steps[q]:
                if b.sender != p or _exact(b) != _exact(a):
                    continue
                nxt = dict(roles)
                nxt[p] = sp
                nxt[q] = sq
                conf = Configuration.of(nxt)
                k = (a.key(), _exact(a), conf.key())
                if k in seen:
                    continue
                seen.add(k)
                out.append((a, conf))
    return out


def is_terminal(c: Configuration) -> bool:
    """Every role reaches end, possibly after silent steps."""
    return all(any(isinstance(t, LEnd) for _, t in silent_closure(s)) for _, s in c.roles)


# ---------------------------------------------------------------------------
# Bounded exploration


System = Union[GlobalState, Configuration]


class _Explorer:
    def __init__(self, budget: int):
        self.budget = budget
        self.nodes = 0
        self.memo: dict = {}

    def tick(self, partial=None):
        self.nodes += 1
        if self.nodes > self.budget:
            raise ExplorationBudgetExceeded(self.budget, partial)

    def traces(self, s: System, depth: int) -> frozenset:
        k = (s.key(), depth)
        hit = self.memo.get(k)
        if hit is not None:
            return hit
        self.tick()
        out = {()}
        if depth > 0:
            for a, s2 in successors(s):
                for tr in self.traces(s2, depth - 1):
                    out.add((a.key(),) + tr)
        res = frozenset(out)
        self.memo[k] = res
        return res


def successors(s: System) -> list:
    return gsteps(s) if isinstance(s, GlobalState) else config_steps(s)


def traces(s: System, depth: int, budget: int = DEFAULT_BUDGET) -> frozenset:
    """All action sequences of length at most depth, actions keyed by `Action.key`."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return _Explorer(budget).traces(s, depth)


def show_trace(tr: Iterable[tuple]) -> str:
    """Readable form of a trace of action keys."""
    from .core.expr import show
    parts = []
    for sender, receiver, label, base, pred in tr:
        p = show(rename(pred, {n: strip_generations(n) for n in _names(pred)}))
        parts.append(f"{sender}->{receiver}:{label}({base}{{{p}}})" if p != "true" else
                     f"{sender}->{receiver}:{label}({base})")
    return " . ".join(parts) if parts else "<empty>"


def _names(e) -> set:
    from .core.expr import free_vars
    return set(free_vars(e))


@dataclass
class TraceReport:
    equal: bool
    depth: int
    global_traces: int
    config_traces: int
    only_global: list = field(default_factory=list)
    only_config: list = field(default_factory=list)
    note: str = BOUNDED_NOTE

    @property
    def first_divergence(self) -> Optional[tuple]:
        cands = sorted(self.only_global + self.only_config, key=lambda t: (len(t), repr(t)))
        return cands[0] if cands else None

    def to_dict(self) -> dict:
        d = self.first_divergence
        return {"equal": self.equal, "depth": self.depth, "global_traces": self.global_traces,
                "config_traces": self.config_traces,
                "first_divergence": None if d is None else show_trace(d),
                "only_global": [show_trace(t) for t in sorted(self.only_global, key=repr)[:20]],
                "only_config": [show_trace(t) for t in sorted(self.only_config, key=repr)[:20]],
                "note": self.note}


def compare_traces(gs: GlobalState, conf: Configuration, depth: int, budget: int = DEFAULT_BUDGET) -> TraceReport:
    tg = traces(gs, depth, budget)
    tc = traces(conf, depth, budget)
    return TraceReport(tg == tc, depth, len(tg), len(tc), sorted(tg - tc, key=repr), sorted(tc - tg, key=repr))


def check_trace_equivalence(ctx: GlobalContext, g, depth: int = 6, *, budget: int = DEFAULT_BUDGET,
                            merge: str = DEFAULT_MERGE, checker=None) -> TraceReport:
    """Compare global traces with the traces of the associated configuration."""
    conf = associate(ctx, g, merge=merge, checker=checker)
    return compare_traces(GlobalState(ctx, g), conf, depth, budget)


@dataclass
class ProgressReport:
    ok: bool
    depth: int
    explored: int
    stuck: Optional[list] = None
    note: str = BOUNDED_NOTE

    def to_dict(self) -> dict:
        return {"ok": self.ok, "depth": self.depth, "explored": self.explored,
                "stuck_after": None if self.stuck is None else [str(a) for a in self.stuck], "note": self.note}


def check_progress(ctx: GlobalContext, g, depth: int = 8, *, budget: int = DEFAULT_BUDGET,
                   merge: str = DEFAULT_MERGE, checker=None) -> ProgressReport:
    """Every reachable configuration within depth is terminal or can step.

    Empty refinement types do not block steps; the witness is the path to the
    first stuck configuration found.
    """
    conf = associate(ctx, g, merge=merge, checker=checker)
    seen: dict = {}
    frontier = [(conf, [])]
    explored = 0
    for level in range(depth + 1):
        nxt = []
        for c, path in frontier:
            k = c.key()
            if k in seen and seen[k] <= level:
                continue
            seen[k] = level
            explored += 1
            if explored > budget:
                raise ExplorationBudgetExceeded(budget, ProgressReport(True, depth, explored - 1))
            succ = config_steps(c)
            if not succ and not is_terminal(c):
                return ProgressReport(False, depth, explored, path)
            if level < depth:
                nxt.extend((c2, path + [a]) for a, c2 in succ)
        frontier = nxt
    return ProgressReport(True, depth, explored)


@dataclass
class PreservationReport:
    ok: bool
    depth: int
    checked: int
    failure: Optional[tuple] = None  # (path, NotProjectable)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "depth": self.depth, "checked": self.checked,
                "failure": None if self.failure is None else
                {"path": [str(a) for a in self.failure[0]], "reason": str(self.failure[1])}}


def check_preservation(ctx: GlobalContext, g, depth: int = 6, *, budget: int = DEFAULT_BUDGET,
                       merge: str = DEFAULT_MERGE, checker=None) -> PreservationReport:
    """Every global state reachable within depth stays projectable for all roles."""
    seen = set()
    frontier = [(GlobalState(ctx, g), [])]
    checked = 0
    for level in range(depth + 1):
        nxt = []
        for s, path in frontier:
            k = s.key()
            if k in seen:
                continue
            seen.add(k)
            checked += 1
            if checked > budget:
                raise ExplorationBudgetExceeded(budget, PreservationReport(True, depth, checked - 1))
            try:
                well_formed(s.ctx, s.type, merge=merge, checker=checker, roles=participants(g))
            except NotProjectable as err:
                return PreservationReport(False, depth, checked, (path, err))
            if level < depth:
                nxt.extend((s2, path + [a]) for a, s2 in gsteps(s))
        frontier = nxt
    return PreservationReport(True, depth, checked)


def check_determinacy(s: GlobalState, depth: int, budget: int = DEFAULT_BUDGET) -> Optional[tuple]:
    """A state and action with two distinct successors, or None."""
    seen = set()
    frontier = [s]
    for _ in range(depth + 1):
        nxt = []
        for st in frontier:
            k = st.key()
            if k in seen:
                continue
            seen.add(k)
            if len(seen) > budget:
                raise ExplorationBudgetExceeded(budget, None)
            by_action: dict = {}
            for a, s2 in gsteps(st):
                by_action.setdefault(_exact(a), set()).add(s2.key())
                nxt.append(s2)
            for a, targets in by_action.items():
                if len(targets) > 1:
                    return st, a
        frontier = nxt
    return None


def replay(conf: Configuration, actions: Iterable[tuple]) -> Optional[int]:
    """Follow a sequence of observed messages through the configuration.

    Each observed message is `(sender, receiver, label)`. Returns None when
    the whole sequence is a trace, else the index of the first message that
    cannot be taken.
    """
    current = [conf]
    for i, (sender, receiver, label) in enumerate(actions):
        nxt = {}
        for c in current:
            for a, c2 in config_steps(c):
                if (a.sender, a.receiver, a.label) == (sender, receiver, label):
                    nxt.setdefault(c2.key(), c2)
        if not nxt:
            return i
        # Keep the frontier small: configurations differ only in how far silent steps went.
        current = list(nxt.values())[:64]
    return None


@dataclass
class ReplayOutcome:
    ok: bool
    trace: list[tuple[str, str, str]]
    terminal: bool = False
    stuck: Optional[dict] = None  # role -> index of the first event that could not be matched

    def to_dict(self) -> dict:
        return {"ok": self.ok, "terminal": self.terminal, "messages": len(self.trace),
                "trace": [f"{p}->{q}:{lab}" for p, q, lab in self.trace], "stuck": self.stuck}


def replay_logs(conf: Configuration, logs: dict[str, list[tuple[str, str, str]]]) -> ReplayOutcome:
    """Check per-endpoint message logs against the configuration.

    Each log lists `(direction, peer, label)` events of one role in order.
    A synchronous interleaving is searched for in which every send is
    matched by the peer's next receive and every message is a step of the
    configuration.
    """
    roles = sorted(logs)
    total = sum(len(v) for v in logs.values())
    failed: set = set()
    best: list = [None, -1]

    def candidates(pos: dict) -> list[tuple[str, str, str]]:
        out = []
        for p in roles:
            i = pos[p]
            if i >= len(logs[p]):
                continue
            d, q, lab = logs[p][i]
            if d != "!" or q not in logs:
                continue
            j = pos[q]
            if j < len(logs[q]) and logs[q][j] == ("?", p, lab):
                out.append((p, q, lab))
        return out

    def go(pos: dict, frontier: list, trace: list):
        done = sum(pos.values())
        if done > best[1]:
            best[0], best[1] = dict(pos), done
        if done == total:
            return frontier
        k = tuple(pos[r] for r in roles)
        if k in failed:
            return None
        for p, q, lab in candidates(pos):
            nxt = {}
            for c in frontier:
                for a, c2 in config_steps(c):
                    if (a.sender, a.receiver, a.label) == (p, q, lab):
                        nxt.setdefault(c2.key(), c2)
            if not nxt:
                continue
            trace.append((p, q, lab))
            res = go({**pos, p: pos[p] + 1, q: pos[q] + 1}, list(nxt.values())[:64], trace)
            if res is not None:
                return res
            trace.pop()
        failed.add(k)
        return None

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, total * 4 + 1000))
    try:
        trace: list = []
        end = go({r: 0 for r in roles}, [conf], trace)
    finally:
        sys.setrecursionlimit(limit)
    if end is None:
        return ReplayOutcome(False, [], False, best[0])
    return ReplayOutcome(True, trace, any(is_terminal(c) for c in end))


# ---------------------------------------------------------------------------
# Machines against local types


def _local_key(role: str, a: Action) -> tuple:
    pred = a.type.instantiate("#")
    pred = rename(pred, {n: strip_generations(n) for n in _names(pred) if n != "#"})
    if a.sender == role:
        return (a.receiver, "!", a.label, a.type.base, pred)
    return (a.sender, "?", a.label, a.type.base, pred)


def local_traces(role: str, s: LocalState, depth: int, budget: int = DEFAULT_BUDGET) -> frozenset:
    memo: dict = {}
    count = [0]

    def go(st, d):
        k = (st[0].canonical(), canonical(st[1]), d)
        if k in memo:
            return memo[k]
        count[0] += 1
        if count[0] > budget:
            raise ExplorationBudgetExceeded(budget, None)
        out = {()}
        if d > 0:
            for a, s2 in lsteps(role, st):
                for tr in go(s2, d - 1):
                    out.add((_local_key(role, a),) + tr)
        memo[k] = frozenset(out)
        return memo[k]

    return go(s, depth)


def cfsm_traces(m, depth: int) -> frozenset:
    memo: dict = {}

    def go(q, d):
        if (q, d) in memo:
            return memo[(q, d)]
        out = {()}
        if d > 0:
            for t in m.outgoing(q):
                pred = t.type.instantiate("#")
                key = (t.peer, t.direction, t.label, t.type.base, pred)
                for tr in go(t.dst, d - 1):
                    out.add((key,) + tr)
        memo[(q, d)] = frozenset(out)
        return memo[(q, d)]

    return go(m.initial, depth)
