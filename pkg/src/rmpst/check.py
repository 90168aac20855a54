"""Whole-protocol checks used by the command line: projectability and empty payload types."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core.context import GlobalContext
from .core.errors import NotProjectable, UndefinedExtension
from .core.types import GMessage, GRec, participants, rec_knowers
from .project import DEFAULT_MERGE, well_formed
from .refine.solver import Checker, Verdict, default_checker
from .refine.typing import inhabitation


@dataclass(frozen=True)
class EmptyPayload:
    path: tuple[str, ...]
    sender: str
    receiver: str
    label: str
    type: str
    verdict: str  # "empty", or "unknown" when the checker could not decide

    def __str__(self) -> str:
        where = " / ".join(self.path) or "top level"
        what = "is empty" if self.verdict == "empty" else "may be empty (undecided)"
        return f"{self.sender}->{self.receiver}:{self.label} at {where}: payload type {self.type} {what}"


def empty_payloads(ctx: GlobalContext, g, checker: Optional[Checker] = None) -> list[EmptyPayload]:
    """Messages whose payload refinement no value satisfies in any reachable context.

    Each recursion body is visited once, with its state variables as declared.
    Continuations of empty messages are unreachable and not reported.
    """
    checker = checker or default_checker()
    out: list[EmptyPayload] = []

    def go(ctx: GlobalContext, g, path: tuple[str, ...]):
        if isinstance(g, GMessage):
            # Every fact is visible here: the question is whether the branch can ever be taken.
            sigma = ctx.project(g.sender).promote()
            for b in g.branches:
                res = inhabitation(sigma, b.type, b.var, checker)
                if res.verdict is not Verdict.INVALID:
                    verdict = "empty" if res.valid else "unknown"
                    out.append(EmptyPayload(path + (b.label,), g.sender, g.receiver, b.label, str(b.type), verdict))
                    if res.valid:
                        continue  # the continuation is unreachable
                try:
                    inner = ctx.extend(b.var, {g.sender, g.receiver}, b.type)
                except UndefinedExtension:
                    continue
                go(inner, b.cont, path + (b.label,))
        elif isinstance(g, GRec):
            inner = ctx
            for sv in g.state:
                try:
                    inner = inner.extend(sv.name, rec_knowers(g, sv), sv.type)
                except UndefinedExtension:
                    return
            go(inner, g.body, path + (f"mu {g.tvar}",))

    go(ctx, g, ())
    return out


@dataclass
class CheckReport:
    roles: list[str]
    ok: bool
    failures: dict = field(default_factory=dict)
    empty: list[EmptyPayload] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "roles": self.roles,
                "failures": {r: str(e) for r, e in self.failures.items()},
                "empty_payloads": [{"message": f"{e.sender}->{e.receiver}:{e.label}", "path": list(e.path),
                                    "type": e.type, "verdict": e.verdict} for e in self.empty]}


def check_protocol(ctx: GlobalContext, g, *, merge: str = DEFAULT_MERGE, checker: Optional[Checker] = None) -> CheckReport:
    roles = sorted(participants(g))
    failures = {}
    try:
        well_formed(ctx, g, merge=merge, checker=checker)
    except NotProjectable as e:
        failures = dict(e.failures)
    return CheckReport(roles, not failures, failures, empty_payloads(ctx, g, checker))

