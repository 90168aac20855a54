"""Global and local session types."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Union

from .expr import Binary, Expr, RefinementType, Unary, Var, free_vars, rename as rename_expr
from .context import Mult


@dataclass(frozen=True)
class StateVar:
    """A recursion state variable with its type and initialiser.

    `knowers` restricts which roles learn the variable in a global type; None
    means every participant of the recursion body. Local recursions use
    `mult` instead.
    """

    name: str
    type: RefinementType
    init: Expr
    knowers: Optional[frozenset[str]] = None
    mult: Mult = Mult.OMEGA


@dataclass(frozen=True)
class GBranch:
    label: str
    var: str
    type: RefinementType
    cont: "GlobalType"


@dataclass(frozen=True)
class GMessage:
    sender: str
    receiver: str
    branches: tuple[GBranch, ...]


@dataclass(frozen=True)
class GRec:
    tvar: str
    state: tuple[StateVar, ...]
    body: "GlobalType"
    gen: int = 0


@dataclass(frozen=True)
class GVar:
    tvar: str
    assigns: tuple[tuple[str, Expr], ...] = ()


@dataclass(frozen=True)
class GEnd:
    pass


GlobalType = Union[GMessage, GRec, GVar, GEnd]


@dataclass(frozen=True)
class LBranch:
    label: str
    var: str
    type: RefinementType
    cont: "LocalType"


@dataclass(frozen=True)
class LSend:
    peer: str
    branches: tuple[LBranch, ...]


@dataclass(frozen=True)
class LRecv:
    peer: str
    branches: tuple[LBranch, ...]


@dataclass(frozen=True)
class LSilent:
    """Knowledge of a message the role does not take part in.

    `label` may join several labels with `|` after merging.
    """

    label: str
    var: str
    type: RefinementType
    cont: "LocalType"


@dataclass(frozen=True)
class LRec:
    tvar: str
    state: tuple[StateVar, ...]
    body: "LocalType"
    gen: int = 0


@dataclass(frozen=True)
class LVar:
    tvar: str
    assigns: tuple[tuple[str, Expr], ...] = ()


@dataclass(frozen=True)
class LEnd:
    pass


LocalType = Union[LSend, LRecv, LSilent, LRec, LVar, LEnd]

END = GEnd()
LEND = LEnd()


def participants(g: GlobalType) -> frozenset[str]:
    """Roles that appear as a message endpoint."""
    out: set[str] = set()
    stack = [g]
    while stack:
        t = stack.pop()
        if isinstance(t, GMessage):
            out.add(t.sender)
            out.add(t.receiver)
            stack.extend(b.cont for b in t.branches)
        elif isinstance(t, GRec):
            stack.append(t.body)
    return frozenset(out)


def rec_knowers(r: GRec, sv: StateVar) -> frozenset[str]:
    return sv.knowers if sv.knowers is not None else participants(r.body)


# ---------------------------------------------------------------------------
# Free variables


def _assign_fv(assigns) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for _, e in assigns:
        out |= free_vars(e)
    return out


def _state_fv(state: tuple[StateVar, ...]) -> tuple[frozenset[str], frozenset[str]]:
    """Free variables of the state declarations and the names they bind."""
    fv: set[str] = set()
    bound: set[str] = set()
    for sv in state:
        fv |= (sv.type.free_vars() | free_vars(sv.init)) - bound
        bound.add(sv.name)
    return frozenset(fv), frozenset(bound)


def type_free_vars(t) -> frozenset[str]:
    """Free expression variables of a global or local type."""
    if isinstance(t, (GMessage, LSend, LRecv)):
        out: frozenset[str] = frozenset()
        for b in t.branches:
            out |= b.type.free_vars() | (type_free_vars(b.cont) - {b.var})
        return out
    if isinstance(t, LSilent):
        return t.type.free_vars() | (type_free_vars(t.cont) - {t.var})
    if isinstance(t, (GRec, LRec)):
        fv, bound = _state_fv(t.state)
        # Initialisers are evaluated outside the recursion.
        inits = frozenset().union(*(free_vars(sv.init) for sv in t.state)) if t.state else frozenset()
        types = frozenset().union(*(sv.type.free_vars() for sv in t.state)) - bound if t.state else frozenset()
        return inits | types | (type_free_vars(t.body) - bound)
    if isinstance(t, (GVar, LVar)):
        return _assign_fv(t.assigns)
    return frozenset()


def free_tvars(t, bound: frozenset[str] = frozenset()) -> frozenset[str]:
    if isinstance(t, (GMessage, LSend, LRecv)):
        out: frozenset[str] = frozenset()
        for b in t.branches:
            out |= free_tvars(b.cont, bound)
        return out
    if isinstance(t, LSilent):
        return free_tvars(t.cont, bound)
    if isinstance(t, (GRec, LRec)):
        return free_tvars(t.body, bound | {t.tvar})
    if isinstance(t, (GVar, LVar)):
        return frozenset() if t.tvar in bound else frozenset([t.tvar])
    return frozenset()


def is_contractive(t, guarded: bool = True, pending: frozenset[str] = frozenset()) -> bool:
    """Every type variable occurrence is separated from its binder by a message."""
    if isinstance(t, (GMessage, LSend, LRecv)):
        return all(is_contractive(b.cont, True, frozenset()) for b in t.branches)
    if isinstance(t, LSilent):
        return is_contractive(t.cont, True, frozenset())
    if isinstance(t, (GRec, LRec)):
        return is_contractive(t.body, True, pending | {t.tvar})
    if isinstance(t, (GVar, LVar)):
        return t.tvar not in pending
    return True


# ---------------------------------------------------------------------------
# Renaming and substitution


def bound_names(t) -> frozenset[str]:
    """Expression variables bound anywhere inside t."""
    out: set[str] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, (GMessage, LSend, LRecv)):
            for b in u.branches:
                out.add(b.var)
                stack.append(b.cont)
        elif isinstance(u, LSilent):
            out.add(u.var)
            stack.append(u.cont)
        elif isinstance(u, (GRec, LRec)):
            out.update(sv.name for sv in u.state)
            stack.append(u.body)
    return frozenset(out)


def _rename_type(rt: RefinementType, var: str, m: dict[str, str]) -> RefinementType:
    # Payload types keep their binder equal to the payload variable.
    inner = {k: v for k, v in m.items() if k != rt.binder}
    pred = rename_expr(rt.pred, inner)
    if rt.binder == var:
        new = m.get(var, var)
        return RefinementType(new, rt.base, rename_expr(pred, {var: new}) if new != var else pred)
    return RefinementType(rt.binder, rt.base, pred)


def rename_vars(t, m: dict[str, str]):
    """Rename expression variables, both binders and their occurrences.

    The mapping must be injective onto names fresh for t, which makes the
    operation capture-free.
    """
    if not m:
        return t
    if isinstance(t, GMessage):
        return GMessage(t.sender, t.receiver, tuple(
            GBranch(b.label, m.get(b.var, b.var), _rename_type(b.type, b.var, m), rename_vars(b.cont, m))
            for b in t.branches))
    if isinstance(t, (LSend, LRecv)):
        return type(t)(t.peer, tuple(
            LBranch(b.label, m.get(b.var, b.var), _rename_type(b.type, b.var, m), rename_vars(b.cont, m))
            for b in t.branches))
    if isinstance(t, LSilent):
        return LSilent(t.label, m.get(t.var, t.var), _rename_type(t.type, t.var, m), rename_vars(t.cont, m))
    if isinstance(t, (GRec, LRec)):
        state = tuple(replace(sv, name=m.get(sv.name, sv.name), type=_rename_type(sv.type, sv.name, m),
                              init=rename_expr(sv.init, m)) for sv in t.state)
        return replace(t, state=state, body=rename_vars(t.body, m))
    if isinstance(t, (GVar, LVar)):
        return type(t)(t.tvar, tuple((m.get(x, x), rename_expr(e, m)) for x, e in t.assigns))
    return t


def subst_tvar(t, tvar: str, make):
    """Replace every free occurrence of type variable `tvar` by make(occurrence)."""
    if isinstance(t, GMessage):
        return GMessage(t.sender, t.receiver, tuple(replace(b, cont=subst_tvar(b.cont, tvar, make)) for b in t.branches))
    if isinstance(t, (LSend, LRecv)):
        return type(t)(t.peer, tuple(replace(b, cont=subst_tvar(b.cont, tvar, make)) for b in t.branches))
    if isinstance(t, LSilent):
        return replace(t, cont=subst_tvar(t.cont, tvar, make))
    if isinstance(t, (GRec, LRec)):
        if t.tvar == tvar:
            return t
        return replace(t, body=subst_tvar(t.body, tvar, make))
    if isinstance(t, (GVar, LVar)):
        return make(t) if t.tvar == tvar else t
    return t


def generation_suffix(name: str, gen: int) -> str:
    return f"{name}'{gen}"


def _next_generation(name: str, gen: int) -> str:
    """Name of a variable of iteration `gen` in iteration `gen + 1`."""
    if gen > 0 and name.endswith(f"'{gen}"):
        name = name[: -len(f"'{gen}")]
    return generation_suffix(name, gen + 1)


def unfold(r):
    """One-step unfolding of a global or local recursion.

    A recursion of generation k binds its variables under the names of
    iteration k: source names for k = 0, `name'k` afterwards. Unfolding
    replaces each recursion variable with the recursion of generation k + 1,
    renamed accordingly and initialised by the occurrence's assignment. The
    scheme depends only on the recursion itself, so a global type and its
    projections pick the same names independently.
    """
    hit = r.__dict__.get("_unfolded")
    if hit is not None:
        return hit
    names = {sv.name for sv in r.state} | bound_names(r.body)
    m = {n: _next_generation(n, r.gen) for n in sorted(names)}
    next_body = rename_vars(r.body, m)
    next_state = tuple(replace(sv, name=m[sv.name], type=_rename_type(sv.type, sv.name, m)) for sv in r.state)

    def back(occ):
        amap = dict(occ.assigns)
        state = tuple(replace(nsv, init=amap.get(sv.name, _var(sv.name))) for sv, nsv in zip(r.state, next_state))
        return replace(r, state=state, body=next_body, gen=r.gen + 1)

    out = subst_tvar(r.body, r.tvar, back)
    object.__setattr__(r, "_unfolded", out)
    return out


def _var(name: str):
    from .expr import Var
    return Var(name)


def renamed_state(r) -> tuple[StateVar, ...]:
    """State declarations bound when r is unfolded (already in r's iteration names)."""
    return r.state


# ---------------------------------------------------------------------------
# Alpha equivalence


class _Scope:
    """Free names of one node, numbered by first occurrence in a fixed traversal order."""

    def __init__(self):
        self.names: dict[str, int] = {}
        self.tvars: dict[str, int] = {}

    def free(self, name: str) -> int:
        return self.names.setdefault(name, len(self.names))

    def tfree(self, tvar: str) -> int:
        return self.tvars.setdefault(tvar, len(self.tvars))

    def expr(self, e, local: dict):
        if isinstance(e, Var):
            hit = local.get(e.name)
            return hit if hit is not None else self.free(e.name)
        if isinstance(e, Unary):
            return (e.op, self.expr(e.arg, local))
        if isinstance(e, Binary):
            return (e.op, self.expr(e.lhs, local), self.expr(e.rhs, local))
        return e

    def rtype(self, rt: RefinementType, local: dict) -> tuple:
        return (rt.base, self.expr(rt.pred, {**local, rt.binder: "#"}))

    def child(self, t, local: dict, tlocal: dict) -> tuple:
        key, names, tvars = _canon(t)  # key is an interned id, so parents stay shallow
        refs = tuple(local[x] if x in local else self.free(x) for x in names)
        trefs = tuple(tlocal[x] if x in tlocal else self.tfree(x) for x in tvars)
        return refs, trefs, key


# Structural node keys to small ids: equal ids mean equal keys, and hashing an id is cheap.
_KEYS: dict[tuple, int] = {}


def _canon(t) -> tuple:
    """(key, free names, free type variables) of t, with free names in the key replaced by their
    index. Keys of alpha-equivalent nodes coincide, and each node is processed once, so shared
    subterms such as the bodies of unfolded recursions are not walked again."""
    hit = t.__dict__.get("_canon_parts")
    if hit is not None:
        return hit
    sc = _Scope()
    if isinstance(t, (GMessage, LSend, LRecv)):
        head = ("M", t.sender, t.receiver) if isinstance(t, GMessage) else (type(t).__name__, t.peer)
        key = head + tuple((b.label, sc.rtype(b.type, {}), sc.child(b.cont, {b.var: "@"}, {})) for b in t.branches)
    elif isinstance(t, LSilent):
        key = ("S", t.label, sc.rtype(t.type, {}), sc.child(t.cont, {t.var: "@"}, {}))
    elif isinstance(t, (GRec, LRec)):
        local: dict = {}
        decls = []
        for i, sv in enumerate(t.state):
            decls.append((sc.rtype(sv.type, local), sc.expr(sv.init, local), sv.knowers, sv.mult))
            local[sv.name] = f"@{i}"
        key = ("R", t.gen, tuple(decls), sc.child(t.body, local, {t.tvar: "@"}))
    elif isinstance(t, (GVar, LVar)):
        key = ("V", sc.tfree(t.tvar), tuple((sc.free(x), sc.expr(e, {})) for x, e in t.assigns))
    else:
        key = ("E",)
    out = (_KEYS.setdefault(key, len(_KEYS)), tuple(sc.names), tuple(sc.tvars))
    object.__setattr__(t, "_canon_parts", out)
    return out


def canonical(t):
    """A hashable key identifying t up to renaming of bound variables."""
    return _canon(t)


def alpha_eq(a, b) -> bool:
    return a == b or canonical(a) == canonical(b)


def strip_generations(name: str) -> str:
    return name.split("'")[0]


# ---------------------------------------------------------------------------
# Actions


@dataclass(frozen=True)
class Action:
    """A synchronous message `sender -> receiver : label(var:type)`."""

    sender: str
    receiver: str
    label: str
    var: str
    type: RefinementType

    @property
    def subjects(self) -> frozenset[str]:
        return frozenset((self.sender, self.receiver))

    def key(self) -> tuple:
        """Identity used when comparing traces: payload names do not matter."""
        return (self.sender, self.receiver, self.label, self.type.base, self.type.instantiate("#"))

    def __str__(self) -> str:
        from .printer import payload
        return f"{self.sender}->{self.receiver}:{self.label}{payload(self.var, self.type)}"
