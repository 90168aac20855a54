"""Running every endpoint of a protocol in one process and checking the run against the semantics."""
from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .cfsm import Cfsm, to_cfsm
from .codegen.runtime import run_endpoint
from .codegen.transport import MemoryNetwork
from .core.context import GlobalContext
from .core.errors import RuntimeViolation
from .project import DEFAULT_MERGE, well_formed
from .semantics import Configuration, ReplayOutcome, replay_logs

DEFAULT_MAX_STEPS = 10_000


@dataclass
class SimulationResult:
    finals: dict
    errors: dict
    logs: dict
    replay: Optional[ReplayOutcome]
    elapsed: float
    info: dict = field(default_factory=dict)

    @property
    def messages(self) -> int:
        return sum(1 for log in self.logs.values() for d, _, _ in log if d == "!")

    @property
    def ok(self) -> bool:
        return not self.errors and self.replay is not None and self.replay.ok and self.replay.terminal

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "messages": self.messages,
            "elapsed": round(self.elapsed, 4),
            "errors": {r: str(e) for r, e in self.errors.items()},
            "finals": {r: _record_dict(v) for r, v in self.finals.items()},
            "logs": {r: [f"{d}{p}:{lab}" for d, p, lab in log] for r, log in self.logs.items()},
            "replay": self.replay.to_dict() if self.replay else None,
        }


def _record_dict(rec) -> dict:
    if rec is None:
        return {}
    return {k: getattr(rec, k) for k in getattr(rec, "__slots__", ())}


def machines_for(ctx: GlobalContext, g, merge: str = DEFAULT_MERGE, checker=None) -> tuple[dict, Configuration]:
    projections = well_formed(ctx, g, merge=merge, checker=checker)
    machines = {r: to_cfsm(lc, lt, r) for r, (lc, lt) in projections.items()}
    return machines, Configuration.of(projections)


def run_all(machines: dict[str, Cfsm], callbacks: dict, initial: Optional[dict] = None, *,
            timeout: float = 10.0, max_steps: int = DEFAULT_MAX_STEPS) -> tuple[dict, dict, dict]:
    """Run one thread per role over in-memory pipes; returns finals, errors and logs."""
    net = MemoryNetwork(sorted(machines), timeout=timeout)
    conns = {r: net.connection(r) for r in machines}
    finals, errors = {}, {}

    def worker(role):
        try:
            finals[role] = run_endpoint(machines[role], callbacks.get(role, {}), conns[role],
                                        initial=(initial or {}).get(role), max_steps=max_steps)
        except Exception as e:
            errors[role] = e
            finals[role] = None
        finally:
            conns[role].close()

    threads = [threading.Thread(target=worker, args=(r,), daemon=True, name=f"endpoint-{r}") for r in sorted(machines)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout * 4)
        if t.is_alive():
            errors.setdefault(t.name.split("-", 1)[1], RuntimeViolation("PeerClosed", None, "endpoint did not finish"))
    return finals, errors, {r: list(c.log) for r, c in conns.items()}


def simulate(ctx: GlobalContext, g, callbacks: dict, initial: Optional[dict] = None, *, merge: str = DEFAULT_MERGE,
             checker=None, timeout: float = 10.0, max_steps: int = DEFAULT_MAX_STEPS, replay: bool = True,
             info: Optional[dict] = None) -> SimulationResult:
    machines, conf = machines_for(ctx, g, merge, checker)
    t0 = time.perf_counter()
    finals, errors, logs = run_all(machines, callbacks, initial, timeout=timeout, max_steps=max_steps)
    elapsed = time.perf_counter() - t0
    outcome = replay_logs(conf, logs) if replay else None
    return SimulationResult(finals, errors, logs, outcome, elapsed, info or {})


def simulate_strategy(ctx: GlobalContext, g, protocol: str, seed: Optional[int] = None, *, merge: str = DEFAULT_MERGE,
                      checker=None, **options) -> SimulationResult:
    """Simulate a bundled protocol with its ready-made strategy."""
    from .strategies import strategy_for
    make = strategy_for(protocol)
    if make is None:
        raise LookupError(f"no strategy for {protocol}")
    machines, _ = machines_for(ctx, g, merge, checker)
    callbacks, initial, info = make(machines, random.Random(seed), checker=checker, **options)
    return simulate(ctx, g, callbacks, initial, merge=merge, checker=checker, info=info)
