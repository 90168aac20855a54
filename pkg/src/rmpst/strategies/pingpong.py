"""PingPong: A plays a number of rounds then stops; each payload exceeds the previous one."""
from __future__ import annotations

import random
from typing import Optional

from ..cfsm import Cfsm

DEFAULT_ROUNDS = 10


class Player:
    def __init__(self, m: Cfsm, rounds: Optional[int] = None, start: int = 0):
        self.m = m
        self.rounds = rounds
        self.last = start
        self.played = 0

    def callbacks(self) -> dict:
        out = {}
        for q in sorted(self.m.states):
            st = self.m.states[q]
            edges = self.m.outgoing(q)
            if st.kind == "send":
                out[f"state{q}_send"] = self._chooser([t.label for t in edges])
            elif st.kind == "recv":
                for t in edges:
                    if t.type.base.value == "int":
                        out[f"state{q}_receive_{t.label}"] = self._seen
        return out

    def _chooser(self, labels: list[str]):
        def choose(st):
            if "stop" in labels:
                if self.played >= (self.rounds or 0):
                    return "stop", None
                self.played += 1
                label = next(lab for lab in labels if lab != "stop")
            else:
                label = labels[0]
            self.last += 1
            return label, self.last
        return choose

    def _seen(self, st, payload):
        self.last = payload


def make(machines: dict[str, Cfsm], rng: Optional[random.Random] = None, *, rounds: int = DEFAULT_ROUNDS, **_):
    rng = rng or random.Random()
    start = rng.randrange(-1000, 1000)
    a, b = Player(machines["A"], rounds, start), Player(machines["B"])
    info = {"rounds": rounds, "start": start, "A": a, "B": b}
    return {"A": a.callbacks(), "B": b.callbacks()}, {"A": {}, "B": {}}, info
