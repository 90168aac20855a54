"""Ready-made endpoint behaviour for the bundled protocols, used by `simulate` and the tests."""
from __future__ import annotations

from typing import Optional

from ..cfsm import Cfsm


def send_state(m: Cfsm, labels) -> int:
    """The first send state whose outgoing labels are exactly `labels`."""
    want = set(labels)
    for q in sorted(m.states):
        if m.states[q].kind == "send" and {t.label for t in m.outgoing(q)} == want:
            return q
    raise LookupError(f"{m.role} has no send state choosing among {sorted(want)}")


def recv_state(m: Cfsm, labels) -> int:
    want = set(labels)
    for q in sorted(m.states):
        if m.states[q].kind == "recv" and {t.label for t in m.outgoing(q)} == want:
            return q
    raise LookupError(f"{m.role} has no receive state expecting {sorted(want)}")


def strategy_for(protocol: str):
    """The strategy factory for a bundled protocol, or None."""
    from . import higherlower, pingpong
    table = {"higherlower": higherlower.make, "pingpong1": pingpong.make, "pingpong2": pingpong.make,
             "pingpong3": pingpong.make}
    return table.get(protocol.lower())


STRATEGIES = ("higherlower", "pingpong1", "pingpong2", "pingpong3")


def available(protocol: Optional[str]) -> bool:
    return protocol is not None and strategy_for(protocol) is not None
