import pytest
from hypothesis import given, settings, strategies as st

from rmpst import corpus
from rmpst.core.context import GlobalContext, LocalContext, Mult, extend_global, extend_local, global_context
from rmpst.core.errors import MergeFailure, NotProjectable, ProjectionError, UndefinedExtension
from rmpst.core.printer import pretty
from rmpst.core.types import LEnd, alpha_eq, participants, type_free_vars
from rmpst.frontend import parse_global, parse_local, parse_refinement
from rmpst.project import merge, project, project_context, well_formed
from rmpst.refine.solver import Checker

ROLES = ["A", "B", "C"]
T = parse_refinement("v:int{v >= 0}")
CHECK = Checker(mode="enumerate", bound=16)


def test_project_context():
    ctx = global_context(("x", {"A", "B"}, T))
    assert project_context(ctx, "A").lookup("x").mult is Mult.OMEGA
    assert project_context(ctx, "C").lookup("x").mult is Mult.ZERO
    assert project_context(GlobalContext(), "A") == LocalContext()


def test_merge_identical():
    assert merge(LEnd(), LEnd(), "plain") == LEnd()
    recv = parse_local("B ? { a(x:int) . end ; b(y:int) . end }")
    assert alpha_eq(merge(recv, recv, "plain"), recv)


def test_merge_differing_receptions():
    a, b = parse_local("B ? a(x:int) . end"), parse_local("B ? b(x:int) . end")
    with pytest.raises(MergeFailure):
        merge(a, b, "plain")
    assert alpha_eq(merge(a, b, "full"), parse_local("B ? { a(x:int) . end ; b(x:int) . end }"))


def test_merge_rejects_different_peers_even_when_full():
    with pytest.raises(MergeFailure):
        merge(parse_local("B ? a(x:int) . end"), parse_local("C ? b(x:int) . end"), "full")


def test_g1_onto_c_has_silent_prefix():
    sigma, local = project(GlobalContext(), corpus.load("g1"), "C")
    assert sigma == LocalContext()
    assert pretty(local) == "<Fst>(x:int) . B ? Snd(y:int{x = y}) . D ! Trd(z:int{x = z}) . end"


def test_end_projects_to_end():
    assert project(GlobalContext(), parse_global("end"), "Z") == (LocalContext(), LEnd())


def test_higherlower_is_well_formed():
    assert sorted(well_formed(GlobalContext(), corpus.load("higherlower"))) == ["A", "B", "C"]


def test_free_type_variable_is_rejected():
    with pytest.raises(NotProjectable) as err:
        well_formed(GlobalContext(), parse_global("A -> B : m(x:int) . t"))
    assert err.value.failures["*"].kind == "FreeTypeVar"


def test_minimal_unmergeable_protocol():
    g = parse_global("A -> B { a(x:int) . B -> C : x(u:int) . end ; b(x:int) . B -> D : y(u:int) . end }")
    for mode in ("plain", "full"):
        with pytest.raises(NotProjectable) as err:
            well_formed(GlobalContext(), g, merge=mode)
        assert sorted(err.value.failures) == ["C", "D"]
        assert all(e.kind == "MergeFailure" for e in err.value.failures.values())
    # A and B still project.
    for role in ("A", "B"):
        project(GlobalContext(), g, role)


def test_third_party_choice_needs_full_merge():
    g = parse_global("A -> B { a(x:int) . B -> C : m(u:int) . end ; b(x:int) . B -> C : n(u:int) . end }")
    with pytest.raises(NotProjectable) as err:
        well_formed(GlobalContext(), g, merge="plain")
    assert list(err.value.failures) == ["C"]
    projections = well_formed(GlobalContext(), g, merge="full")
    assert pretty(projections["C"][1]) == "<a|b>(x:int) . B ? { m(u:int) . end ; n(u:int) . end }"


def test_erased_variable_in_computation_is_rejected():
    g = parse_global("A -> B : m(x:int) . C -> A : n(y:int) . mu t(k:int := x) . C -> A : o() . end")
    with pytest.raises(ProjectionError) as err:
        project(GlobalContext(), g, "C")
    assert err.value.kind == "IrrelevantVariableUse"


def test_ill_typed_payload_is_rejected():
    g = parse_global("A -> B : m(x:bool) . B -> A : n(y:int{y > x}) . end")
    with pytest.raises(NotProjectable):
        well_formed(GlobalContext(), g)


@pytest.mark.parametrize("name", corpus.CHECKED)
def test_local_free_vars_are_in_context(name):
    for role, (sigma, local) in well_formed(GlobalContext(), corpus.load(name)).items():
        assert type_free_vars(local) <= set(sigma.names())


contexts = st.lists(st.tuples(st.sampled_from(["x", "y", "z"]), st.sets(st.sampled_from(ROLES))), max_size=4)


def build(entries) -> GlobalContext:
    ctx = GlobalContext()
    for var, knowers in entries:
        try:
            ctx = extend_global(ctx, var, knowers, T)
        except UndefinedExtension:
            pass
    return ctx


@settings(max_examples=300, deadline=None)
@given(contexts, st.sampled_from(["x", "y", "w"]), st.sets(st.sampled_from(ROLES)), st.sampled_from(ROLES))
def test_projection_commutes_with_extension(entries, var, knowers, role):
    ctx = build(entries)
    try:
        extended = extend_global(ctx, var, knowers, T)
    except UndefinedExtension:
        return
    mult = Mult.OMEGA if role in knowers else Mult.ZERO
    assert project_context(extended, role) == extend_local(project_context(ctx, role), var, mult, T)


OPEN_PROTOCOLS = [
    "A -> B : m(y:int{y > x}) . end",
    "A -> B : m(y:int{y = x + 1}) . B -> C : n(u:int{u > y}) . end",
    "C -> A : m(y:int) . A -> B : n(u:int{u = x}) . end",
    "A -> B { a(y:unit{x > 0}) . end ; b(y:unit{x <= 0}) . end }",
    "mu t(k:int{k >= 0} := x) . A -> B { more(y:unit) . t<k := k + 1> ; stop(y:unit) . end }",
]


def outcome(ctx, g, role):
    try:
        return project(ctx, g, role, checker=CHECK)
    except ProjectionError as err:
        return err.kind


def same(a, b) -> bool:
    if isinstance(a, str) or isinstance(b, str):
        return a == b
    return a[0] == b[0] and alpha_eq(a[1], b[1])


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(OPEN_PROTOCOLS), st.sampled_from(ROLES), st.sets(st.sampled_from(ROLES)),
       st.sets(st.sampled_from(ROLES)))
def test_projection_depends_only_on_projected_context(src, role, k1, k2):
    # Two contexts that agree on the role's view give the same projection.
    if (role in k1) != (role in k2):
        return
    g = parse_global(src)
    a = outcome(global_context(("x", k1, T)), g, role)
    b = outcome(global_context(("x", k2, T)), g, role)
    assert same(a, b)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(OPEN_PROTOCOLS), st.sampled_from(ROLES), st.sets(st.sampled_from(ROLES), min_size=1))
def test_weakening_from_unknown_to_known(src, role, knowers):
    g = parse_global(src)
    erased = outcome(global_context(("x", set(), T)), g, role)
    if isinstance(erased, str):
        return
    known = outcome(global_context(("x", knowers, T)), g, role)
    assert not isinstance(known, str)
    assert alpha_eq(erased[1], known[1])


def test_participants_ignore_roles_in_refinements():
    assert participants(corpus.load("g1")) == {"A", "B", "C", "D"}
