"""HigherLower: A hides a secret, C searches for it, B referees with a verified chooser."""
from __future__ import annotations

import random
from typing import Optional

from ..cfsm import Cfsm
from ..codegen.chooser import GuardedChooser
from ..refine.solver import Checker
from . import recv_state, send_state

REFEREE_CASES = (("n = x", "win"), ("t = 1", "lose"), ("n > x", "higher"), ("true", "lower"))
DEFAULT_LIMIT = 30


def referee(m: Cfsm, cases=REFEREE_CASES, checker: Optional[Checker] = None, verify: bool = True) -> GuardedChooser:
    """B's chooser between higher, lower, win and lose."""
    ch = GuardedChooser(m, send_state(m, {"higher", "lower", "win", "lose"}), cases)
    return ch.verify(checker) if verify else ch


class Guesser:
    """C: binary search over [0, 100)."""

    def __init__(self, m: Cfsm):
        self.lo, self.hi = 0, 99
        self.guesses: list[int] = []
        self.send = send_state(m, {"guess"})
        self.recv = recv_state(m, {"higher", "lower", "win", "lose"})

    def callbacks(self) -> dict:
        def guess(st):
            x = (self.lo + self.hi) // 2
            self.guesses.append(x)
            return "guess", x

        def higher(st, _):
            self.lo = self.guesses[-1] + 1

        def lower(st, _):
            self.hi = self.guesses[-1] - 1

        return {f"state{self.send}_send": guess, f"state{self.recv}_receive_higher": higher,
                f"state{self.recv}_receive_lower": lower}


def make(machines: dict[str, Cfsm], rng: Optional[random.Random] = None, *, secret: Optional[int] = None,
         limit: int = DEFAULT_LIMIT, checker: Optional[Checker] = None, cases=REFEREE_CASES, verify: bool = True):
    """Callbacks and initial values per role."""
    rng = rng or random.Random()
    n0 = rng.randrange(100) if secret is None else secret
    a = machines["A"]
    host = {f"state{send_state(a, {'start'})}_send": lambda st: ("start", n0),
            f"state{send_state(a, {'limit'})}_send": lambda st: ("limit", limit)}
    ref = referee(machines["B"], cases, checker, verify)
    guesser = Guesser(machines["C"])
    callbacks = {"A": host, "B": {ref.callback_name: ref.choose}, "C": guesser.callbacks()}
    info = {"secret": n0, "limit": limit, "guesses": guesser.guesses}
    return callbacks, {r: {} for r in machines}, info
