import ast
import threading

import pytest
from hypothesis import given, settings, strategies as st

from rmpst import corpus
from rmpst.codegen import GuardedChooser, MemoryNetwork, generate, load_generated, run_endpoint, tcp_pair
from rmpst.codegen.generate import check_callbacks
from rmpst.codegen.transport import encode
from rmpst.core.context import GlobalContext
from rmpst.core.errors import ChooserError, RuntimeViolation
from rmpst.simulate import machines_for, run_all, simulate, simulate_strategy
from rmpst.strategies import higherlower, recv_state, send_state
from rmpst.strategies.pingpong import Player


def machines(name):
    return machines_for(GlobalContext(), corpus.load(name))[0]


HL = machines("higherlower")


def test_generation_is_deterministic():
    for name in ("higherlower", "pingpong2", "twobuyer"):
        ms = machines(name)
        again = machines(name)
        for role in ms:
            assert generate(ms[role], name) == generate(again[role], name)


@pytest.mark.parametrize("name", corpus.CHECKED)
def test_generated_modules_compile(name):
    for role, m in machines(name).items():
        src = generate(m, name)
        ast.parse(src)
        mod = load_generated(src, f"gen_{name}_{role}")
        assert mod.ROLE == role and mod.INITIAL == m.initial


def test_callbacks_never_receive_the_connection():
    tree = ast.parse(generate(HL["B"], "HigherLower"))
    cb = next(n for n in tree.body if isinstance(n, ast.ClassDef) and n.name == "Callbacks")
    for fn in cb.body:
        if isinstance(fn, ast.FunctionDef):
            names = [a.arg for a in fn.args.args]
            assert "conn" not in names and names[:2] == ["self", "st"]


def test_records_omit_erased_variables():
    mod = load_generated(generate(HL["C"], "HigherLower"), "gen_hl_c")
    fields = {f for f in mod.State1.__dataclass_fields__}
    assert "n" not in fields and "n0" not in fields
    with pytest.raises(AttributeError):
        mod.State1().n  # noqa: B018


def test_check_callbacks_flags_erased_reads():
    q = send_state(HL["C"], {"guess"})
    bad = f"class Mine:\n    def state{q}_send(self, st):\n        return 'guess', st.n\n"
    good = f"class Mine:\n    def state{q}_send(self, st):\n        return 'guess', 50\n"
    problems = check_callbacks(HL["C"], bad)
    assert len(problems) == 1 and "erased" in problems[0]
    assert check_callbacks(HL["C"], good) == []


def run_generated(name, rounds):
    ms = machines(name)
    net = MemoryNetwork(sorted(ms))
    logs, errors = {}, {}

    class Handlers:
        def __getattr__(self, item):
            return lambda st, payload: None

    def worker(role):
        mod = load_generated(generate(ms[role], name), f"gen_{name}_{role}_run")
        cb = Handlers()
        cb.__dict__.update(Player(ms[role], rounds if role == "A" else None).callbacks())
        conn = net.connection(role)
        try:
            mod.run(cb, conn)
        except Exception as e:  # reported below
            errors[role] = e
        finally:
            logs[role] = list(conn.log)
            conn.close()

    threads = [threading.Thread(target=worker, args=(r,)) for r in ms]
    for t in threads:
        t.start()
    for t in threads:
        t.join(30)
    return logs, errors


@pytest.mark.parametrize("name,per_round", [("pingpong1", 2), ("pingpong2", 4), ("pingpong3", 6)])
def test_generated_pingpong_runs(name, per_round):
    logs, errors = run_generated(name, 5)
    assert errors == {}
    sent = [lab for d, _, lab in logs["A"] + logs["B"] if d == "!"]
    assert len(sent) == 5 * per_round + 1 and sent.count("stop") == 1


def test_interpreter_and_generated_code_agree():
    logs, _ = run_generated("pingpong2", 4)
    res = simulate_strategy(GlobalContext(), corpus.load("pingpong2"), "pingpong2", 0, rounds=4)
    assert res.ok
    assert res.logs["A"] == logs["A"] and res.logs["B"] == logs["B"]


@pytest.mark.parametrize("k", [1, 3, 10])
def test_pingpong_round_count(k):
    res = simulate_strategy(GlobalContext(), corpus.load("pingpong1"), "pingpong1", 5, rounds=k)
    assert res.ok
    pings = [lab for d, _, lab in res.logs["A"] + res.logs["B"] if d == "!" and lab != "stop"]
    assert len(pings) == 2 * k


def test_chooser_missing_a_label_is_not_exhaustive():
    with pytest.raises(ChooserError) as err:
        higherlower.referee(HL["B"], (("n = x", "win"), ("n > x", "higher"), ("true", "lower")))
    assert err.value.kind == "NotExhaustive"


def test_chooser_with_wrong_guard_is_rejected():
    cases = (("n = x", "win"), ("t = 0", "lose"), ("n > x", "higher"), ("true", "lower"))
    with pytest.raises(ChooserError) as err:
        higherlower.referee(HL["B"], cases)
    assert err.value.kind == "CaseRefinement"
    assert err.value.state == send_state(HL["B"], {"higher", "lower", "win", "lose"}) == 4
    # With t = 1 and a wrong guess, the lose guard misses and higher is taken without budget left.
    assert {k: err.value.model[k] for k in ("n", "t", "x")} == {"n": 1, "t": 1, "x": 0}


def test_chooser_rejects_unknown_labels_and_hidden_variables():
    q = send_state(HL["C"], {"guess"})
    with pytest.raises(ChooserError) as err:
        GuardedChooser(HL["C"], q, [("true", "nope", "1")]).verify()
    assert err.value.kind == "UnknownLabel"
    with pytest.raises(ChooserError) as err:
        GuardedChooser(HL["C"], q, [("true", "guess", "n")]).verify()
    assert err.value.kind == "IrrelevantVariableUse"


def test_verified_referee_covers_all_obligations():
    ch = higherlower.referee(HL["B"])
    kinds = [o.kind for o in ch.obligations]
    assert kinds == ["Exhaustive", "GuardsTotal", "Case", "Case", "Case", "Case"]
    assert all(o.ok for o in ch.obligations)


def test_unverified_bad_chooser_fails_at_runtime():
    cases = (("n = x", "win"), ("t = 0", "lose"), ("n > x", "higher"), ("true", "lower"))
    callbacks, initial, info = higherlower.make(HL, secret=7, limit=1, cases=cases, verify=False)
    res = simulate(GlobalContext(), corpus.load("higherlower"), callbacks, initial)
    err = res.errors["B"]
    assert isinstance(err, RuntimeViolation) and err.kind == "RefinementFailed"
    assert err.state == 4


def test_runtime_checks_received_payloads():
    ms = machines("pingpong1")
    # B answers with a smaller number than it received.
    cb = {"A": {f"state{send_state(ms['A'], {'ping1', 'stop'})}_send": lambda st: ("ping1", 10)},
          "B": {f"state{send_state(ms['B'], {'pong1'})}_send": lambda st: ("pong1", 3)}}
    _, errors, _ = run_all(ms, cb, timeout=2)
    assert errors["B"].kind == "RefinementFailed"


def test_runtime_step_limit():
    ms = machines("pingpong1")
    cb = {r: Player(ms[r], 10**6 if r == "A" else None).callbacks() for r in ms}
    _, errors, _ = run_all(ms, cb, timeout=2, max_steps=20)
    assert errors["A"].kind == "StepLimit"


def test_higherlower_simulation_finishes():
    res = simulate_strategy(GlobalContext(), corpus.load("higherlower"), "higherlower", 3)
    assert res.ok and res.replay.terminal
    assert recv_state(HL["C"], {"higher", "lower", "win", "lose"}) in HL["C"].states


@pytest.mark.parametrize("base,value,wire", [
    ("int", -1, "ff" * 8), ("int", 0, "00" * 8), ("int", 2**40, "0000010000000000"),
    ("bool", True, "01"), ("bool", False, "00"), ("string", "", "00000000"), ("unit", None, ""),
    ("string", "hi", "000000026869"),
])
def test_wire_goldens(base, value, wire):
    assert encode(base, value).hex() == wire


@settings(max_examples=100, deadline=None)
@given(st.one_of(st.tuples(st.just("int"), st.integers(-2**63, 2**63 - 1)),
                 st.tuples(st.just("bool"), st.booleans()),
                 st.tuples(st.just("string"), st.text()),
                 st.tuples(st.just("unit"), st.none())))
def test_memory_transport_round_trips(pair):
    base, value = pair
    net = MemoryNetwork(["A", "B"], timeout=2)
    a, b = net.connection("A"), net.connection("B")
    a.send_label("B", "m")
    a.send_value("B", base, value)
    assert b.recv_label("A") == "m"
    assert b.recv_value("A", base) == value


def test_tcp_transport_round_trips():
    a, b = tcp_pair("A", "B", timeout=5)
    try:
        for base, value in (("int", -5), ("bool", True), ("string", "héllo"), ("unit", None)):
            a.send_value("B", base, value)
            assert b.recv_value("A", base) == value
    finally:
        a.close()
        b.close()


def test_bad_bool_byte_and_utf8_are_rejected():
    net = MemoryNetwork(["A", "B"], timeout=2)
    a, b = net.connection("A"), net.connection("B")
    a._send("B", b"\x02")
    with pytest.raises(RuntimeViolation) as err:
        b.recv_bool("A")
    assert err.value.kind == "Deserialization"
    a._send("B", b"\x00\x00\x00\x01\xff")
    with pytest.raises(RuntimeViolation) as err:
        b.recv_string("A")
    assert err.value.kind == "Deserialization"


def test_int_out_of_range_is_refused():
    net = MemoryNetwork(["A", "B"], timeout=2)
    with pytest.raises(RuntimeViolation):
        net.connection("A").send_int("B", 2**63)


def test_closed_peer_is_reported():
    net = MemoryNetwork(["A", "B"], timeout=2)
    a, b = net.connection("A"), net.connection("B")
    a.close()
    with pytest.raises(RuntimeViolation) as err:
        b.recv_label("A")
    assert err.value.kind == "PeerClosed"


def test_run_endpoint_requires_initial_values():
    ms = machines("pingpong1")
    net = MemoryNetwork(["A", "B"], timeout=1)
    # A's initial state needs no values, so a missing-chooser error comes first.
    with pytest.raises(RuntimeViolation) as err:
        run_endpoint(ms["A"], {}, net.connection("A"))
    assert err.value.kind == "UnknownLabel"
