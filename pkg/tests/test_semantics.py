import pytest
from hypothesis import given, settings, strategies as st

from rmpst import corpus
from rmpst.core.context import GlobalContext, LocalContext
from rmpst.core.printer import pretty
from rmpst.core.types import LEnd
from rmpst.frontend import parse_global, parse_local
from rmpst.semantics import (Configuration, GlobalState, associate, check_determinacy, check_preservation,
                             check_progress, check_trace_equivalence, compare_traces, config_steps, gsteps, is_terminal,
                             replay, replay_logs, show_trace, traces)

from generators import random_protocols


def gstate(name):
    return GlobalState(GlobalContext(), corpus.load(name))


def test_g2_traces_at_depth_two():
    shown = sorted(show_trace(t) for t in traces(gstate("g2"), 2))
    assert shown == [
        "<empty>",
        "A->B:Number(int)",
        "A->B:Number(int) . B->C:Negative(unit{x < 0})",
        "A->B:Number(int) . B->C:Positive(unit{x > 0})",
        "A->B:Number(int) . B->C:Zero(unit{x = 0})",
    ]


def test_g3_first_step_is_password():
    assert [str(a) for a, _ in gsteps(gstate("g3"))] == ["A->B:Password(pwd:string)"]


def test_g1_configuration_offers_only_the_first_message():
    conf = associate(GlobalContext(), corpus.load("g1"))
    assert {str(a) for a, _ in config_steps(conf)} == {"A->B:Fst(x:int)"}


def test_independent_messages_commute():
    steps = gsteps(gstate("independent"))
    assert sorted(str(a) for a, _ in steps) == ["p->q:Hello(x:int{x < 0})", "r->s:Hola(y:int{y > x})"]
    knowers = {str(a): {e.var: e.knowers for e in s.ctx.entries} for a, s in steps}
    # Sending Hola first still records x, with nobody knowing it yet.
    assert knowers["r->s:Hola(y:int{y > x})"] == {"x": frozenset(), "y": frozenset({"r", "s"})}
    assert knowers["p->q:Hello(x:int{x < 0})"] == {"x": frozenset({"p", "q"})}
    finals = set()
    for _, s in steps:
        for _, s2 in gsteps(s):
            finals.add(s2.key())
    assert len(finals) == 1


def test_end_has_no_steps():
    assert gsteps(GlobalState(GlobalContext(), parse_global("end"))) == []
    conf = associate(GlobalContext(), parse_global("end"))
    assert config_steps(conf) == []


@pytest.mark.parametrize("name", corpus.CHECKED)
def test_corpus_trace_equivalence(name):
    report = check_trace_equivalence(GlobalContext(), corpus.load(name), 6)
    assert report.equal, report.to_dict()
    assert report.global_traces == report.config_traces > 1


def test_mutated_projection_diverges():
    conf = associate(GlobalContext(), corpus.load("g1"))
    roles = conf.as_dict()
    ctx, local = roles["B"]
    roles["B"] = (ctx, parse_local(pretty(local).replace("Fst", "Fzz")))
    report = compare_traces(gstate("g1"), Configuration.of(roles), 4)
    assert not report.equal
    assert show_trace(report.first_divergence) == "A->B:Fst(int)"
    assert report.config_traces == 1


def test_replay_accepts_traces_and_rejects_others():
    conf = associate(GlobalContext(), corpus.load("g1"))
    assert replay(conf, [("A", "B", "Fst"), ("B", "C", "Snd"), ("C", "D", "Trd")]) is None
    assert replay(conf, [("A", "B", "Fst"), ("C", "D", "Trd")]) == 1


def test_replay_logs_rebuilds_interleaving():
    conf = associate(GlobalContext(), corpus.load("g1"))
    logs = {
        "A": [("!", "B", "Fst")],
        "B": [("?", "A", "Fst"), ("!", "C", "Snd")],
        "C": [("?", "B", "Snd"), ("!", "D", "Trd")],
        "D": [("?", "C", "Trd")],
    }
    out = replay_logs(conf, logs)
    assert out.ok and out.terminal and out.trace == [("A", "B", "Fst"), ("B", "C", "Snd"), ("C", "D", "Trd")]
    logs["D"] = [("?", "C", "Other")]
    assert not replay_logs(conf, logs).ok


@pytest.mark.parametrize("name", corpus.CHECKED)
def test_corpus_progress_and_preservation(name):
    g = corpus.load(name)
    assert check_progress(GlobalContext(), g, 6).ok
    assert check_preservation(GlobalContext(), g, 5).ok


def test_mismatched_configuration_is_stuck():
    # B waits for a message A never sends.
    conf = Configuration.of({"A": (LocalContext(), LEnd()), "B": (LocalContext(), parse_local("A ? m(x:int) . end"))})
    assert config_steps(conf) == []
    assert not is_terminal(conf)
    assert is_terminal(associate(GlobalContext(), parse_global("end")))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_protocols_are_deterministic(seed):
    g = random_protocols(seed, 1)[0]
    assert check_determinacy(GlobalState(GlobalContext(), g), 5) is None


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_protocols_progress_and_preserve(seed):
    g = random_protocols(seed, 1)[0]
    assert check_progress(GlobalContext(), g, 5).ok
    assert check_preservation(GlobalContext(), g, 4).ok


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_protocols_are_trace_equivalent(seed):
    g = random_protocols(seed, 1)[0]
    assert check_trace_equivalence(GlobalContext(), g, 4).equal


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_global_traces_replay_on_configuration(seed):
    g = random_protocols(seed, 1)[0]
    conf = associate(GlobalContext(), g)
    for tr in traces(GlobalState(GlobalContext(), g), 4):
        assert replay(conf, [(s, r, lab) for s, r, lab, _, _ in tr]) is None
