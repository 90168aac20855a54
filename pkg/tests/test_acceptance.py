"""Acceptance suite: one test per criterion, each reporting a PASS or FAIL line.

Run with `pytest tests/test_acceptance.py -v`; the per-criterion lines are
printed in the terminal summary.
"""
import json
import random
import subprocess
import sys
import time

import pytest

from rmpst import corpus
from rmpst.check import empty_payloads
from rmpst.codegen.transport import encode
from rmpst.core.context import GlobalContext, Mult
from rmpst.core.errors import ChooserError
from rmpst.core.printer import pretty
from rmpst.core.types import alpha_eq
from rmpst.frontend import parse_global, parse_local
from rmpst.project import project
from rmpst.refine.solver import Checker, Verdict
from rmpst.semantics import GlobalState, check_preservation, check_progress, check_trace_equivalence, gsteps
from rmpst.simulate import machines_for, simulate, simulate_strategy
from rmpst.strategies import higherlower

from conftest import HAVE_SOLVER
from generators import random_formula, random_protocols

RESULTS: dict[int, tuple[bool, str]] = {}
RANDOM_SEED = 2026


@pytest.fixture(scope="module", autouse=True)
def report(request):
    yield
    tr = request.config.pluginmanager.get_plugin("terminalreporter")
    lines = [f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {note}" for n, (ok, note) in sorted(RESULTS.items())]
    if tr is not None:
        tr.write_sep("=", "acceptance criteria")
        for line in lines:
            tr.write_line(line)
    else:
        print("\n".join(lines))


class criterion:
    """Records the outcome of the block under criterion `n`; failures propagate."""

    def __init__(self, n: int, note: str):
        self.n, self.note = n, note

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        took = time.perf_counter() - self.t0
        detail = f"{self.note} ({took:.2f}s)"
        if exc is not None:
            detail += f": {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        RESULTS[self.n] = (exc is None, detail)
        return False


def test_c01_golden_projection_of_g1_onto_c():
    with criterion(1, "G1 onto C is the silent-prefixed local type, under 1s"):
        t0 = time.perf_counter()
        sigma, local = project(GlobalContext(), corpus.load("g1"), "C")
        took = time.perf_counter() - t0
        want = parse_local("<Fst>(x:int) . B ? Snd(y:int{x = y}) . D ! Trd(z:int{x = z}) . end")
        assert alpha_eq(local, want), pretty(local)
        assert took < 1.0


def test_c02_golden_state_machines():
    with criterion(2, "HigherLower machines for B (9 states) and C (3 states, n and t erased)"):
        machines, _ = machines_for(GlobalContext(), corpus.load("higherlower"))
        b, c = machines["B"], machines["C"]
        assert len(b.states) == 9
        labels = sorted(lab for _, lab, _ in b.edges())
        assert labels == sorted(["A?start", "A?limit", "C?guess", "C!higher", "C!lower", "C!win", "C!lose",
                                 "A!higher", "A!lower", "A!win", "A!lose"])
        assert len(c.states) == 3
        first = {e.var: e.mult for e in c.states[c.initial].context}
        assert first["n"] is Mult.ZERO and first["t"] is Mult.ZERO


def test_c03_independent_messages_commute():
    with criterion(3, "both reduction orders with knower sets {p,q}, {r,s} and empty"):
        steps = {str(a): s for a, s in gsteps(GlobalState(GlobalContext(), corpus.load("independent")))}
        assert set(steps) == {"p->q:Hello(x:int{x < 0})", "r->s:Hola(y:int{y > x})"}
        hello = steps["p->q:Hello(x:int{x < 0})"]
        hola = steps["r->s:Hola(y:int{y > x})"]
        assert [(e.var, e.knowers) for e in hello.ctx.entries] == [("x", {"p", "q"})]
        assert [(e.var, e.knowers) for e in hola.ctx.entries] == [("x", set()), ("y", {"r", "s"})]
        assert pretty(hello.type) == "r -> s : Hola(y:int{y > x}) . end"
        assert pretty(hola.type) == "p -> q : Hello(x:int{x < 0}) . end"
        (a1, s1), = gsteps(hello)
        (a2, s2), = gsteps(hola)
        assert s1.key() == s2.key()
        assert [(e.var, e.knowers) for e in s1.ctx.entries] == [("x", {"p", "q"}), ("y", {"r", "s"})]


def test_c04_trace_equivalence():
    with criterion(4, "corpus at depth 6 under 60s and 200 random protocols at depth 5"):
        t0 = time.perf_counter()
        for name in corpus.CHECKED:
            rep = check_trace_equivalence(GlobalContext(), corpus.load(name), 6)
            assert rep.equal, (name, rep.to_dict())
        assert time.perf_counter() - t0 < 60
        for i, g in enumerate(random_protocols(RANDOM_SEED, 200)):
            rep = check_trace_equivalence(GlobalContext(), g, 5)
            assert rep.equal, (i, pretty(g), rep.to_dict())


def test_c05_progress():
    with criterion(5, "no stuck configuration in the corpus at depth 8, budget 50000"):
        for name in corpus.CHECKED:
            rep = check_progress(GlobalContext(), corpus.load(name), 8, budget=50_000)
            assert rep.ok, (name, rep.to_dict())


def test_c06_preservation():
    with criterion(6, "every explored global state stays projectable"):
        for name in corpus.CHECKED:
            rep = check_preservation(GlobalContext(), corpus.load(name), 6)
            assert rep.ok, (name, rep.to_dict())
        for i, g in enumerate(random_protocols(RANDOM_SEED, 200)):
            rep = check_preservation(GlobalContext(), g, 5)
            assert rep.ok, (i, pretty(g), rep.to_dict())


WEAK_LOSE = (("n = x", "win"), ("t = 0", "lose"), ("n > x", "higher"), ("true", "lower"))


def test_c07_refinement_rejection():
    with criterion(7, "weakened lose guard rejected statically and at runtime; missing lose not exhaustive"):
        machines, _ = machines_for(GlobalContext(), corpus.load("higherlower"))
        with pytest.raises(ChooserError) as err:
            higherlower.referee(machines["B"], WEAK_LOSE)
        assert err.value.kind == "CaseRefinement"
        assert err.value.model is not None
        obligations = higherlower.referee(machines["B"], WEAK_LOSE, verify=False).obligations_for()
        verdicts = [Checker(mode="solver" if HAVE_SOLVER else "enumerate").check(f).verdict for *_, f in obligations]
        assert Verdict.INVALID in verdicts

        callbacks, initial, _ = higherlower.make(machines, secret=7, limit=1, cases=WEAK_LOSE, verify=False)
        res = simulate(GlobalContext(), corpus.load("higherlower"), callbacks, initial)
        assert res.errors["B"].kind == "RefinementFailed"

        with pytest.raises(ChooserError) as err:
            higherlower.referee(machines["B"], (("n = x", "win"), ("n > x", "higher"), ("true", "lower")))
        assert err.value.kind == "NotExhaustive"


def test_c08_empty_payload_detection():
    with criterion(8, "x:int{x > 0 && x < 0} flagged empty by the solver and by enumeration at 64"):
        g = parse_global("A -> B : m(x:int{x > 0 && x < 0}) . end")
        checkers = [Checker(mode="enumerate", bound=64)]
        assert HAVE_SOLVER, "no SMT solver available"
        checkers.insert(0, Checker(mode="solver"))
        for ch in checkers:
            found = empty_payloads(GlobalContext(), g, ch)
            assert [(e.label, e.verdict) for e in found] == [("m", "empty")], ch.mode
        assert empty_payloads(GlobalContext(), parse_global("A -> B : m(x:int{x > 0}) . end"), checkers[0]) == []


def test_c09_higherlower_simulation():
    with criterion(9, "30 random secrets: terminates, guesses in [0,100), run replays"):
        g = corpus.load("higherlower")
        for seed in range(30):
            res = simulate_strategy(GlobalContext(), g, "higherlower", seed)
            assert res.ok, (seed, res.to_dict())
            assert res.messages <= 100
            guesses = res.info["guesses"]
            assert guesses and all(0 <= x < 100 for x in guesses)


def test_c10_wire_format_and_tcp_pingpong():
    with criterion(10, "byte goldens and 1000 PingPong rounds across two processes"):
        goldens = [("int", -1, "ff" * 8), ("int", 0, "00" * 8), ("int", 2**40, "0000010000000000"),
                   ("bool", True, "01"), ("bool", False, "00"), ("string", "", "00000000"), ("unit", None, "")]
        for base, value, wire in goldens:
            assert encode(base, value).hex() == wire, (base, value)

        cmd = [sys.executable, "-m", "rmpst.strategies.pingpong_tcp", "--rounds", "1000"]
        server = subprocess.Popen(cmd + ["--role", "B"], stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        try:
            ready = server.stdout.readline().split()
            assert ready and ready[0] == "READY", ready
            client = subprocess.run(cmd + ["--role", "A", "--port", ready[1]], capture_output=True, text=True,
                                    timeout=120)
            out, err = server.communicate(timeout=120)
        finally:
            server.kill()
        assert client.returncode == 0 and server.returncode == 0, (client.stderr, err)
        a = json.loads(client.stdout.strip().splitlines()[-1])
        b = json.loads(out.strip().splitlines()[-1])
        assert a["sent"] == 1001 and a["received"] == 1000
        assert b["sent"] == 1000 and b["received"] == 1001


def test_c11_oracle_agreement():
    with criterion(11, "500 random formulas: solver agrees with enumeration on every stable verdict") as c:
        assert HAVE_SOLVER, "no SMT solver available"
        solver = Checker(mode="solver")
        e64, e128 = Checker(mode="enumerate", bound=64), Checker(mode="enumerate", bound=128)
        rng = random.Random(RANDOM_SEED)
        disagreements, unstable = [], 0
        for i in range(500):
            f = random_formula(rng)
            v64 = e64.check(f).verdict
            vs = solver.check(f).verdict
            if v64 is Verdict.INVALID:
                if vs is not Verdict.INVALID:
                    disagreements.append((i, "invalid", vs))
            elif e128.check(f).verdict is Verdict.VALID:
                if vs is not Verdict.VALID:
                    disagreements.append((i, "valid", vs))
            else:
                unstable += 1
        c.note += f"; {unstable} unstable between bounds 64 and 128"
        assert disagreements == []
