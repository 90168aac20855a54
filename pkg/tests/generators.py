"""Seeded random generators for protocols and formulas used by the property suites."""
from __future__ import annotations

import itertools
import random

from rmpst.core.context import GlobalContext
from rmpst.core.expr import Base, Binary, BoolLit, Expr, IntLit, RefinementType, Unary, Var
from rmpst.core.types import GBranch, GEnd, GMessage, GRec, GVar, StateVar
from rmpst.project import is_well_formed
from rmpst.refine.formula import Formula

ROLES = ("A", "B", "C")
LABELS = ("a", "b", "c", "d")


def _int_pred(rng: random.Random, v: str, ints: list[str]) -> Expr:
    choice = rng.randrange(5)
    if choice == 0 or not ints and choice < 3:
        return BoolLit(True)
    if choice == 1:
        return Binary(">=", Var(v), IntLit(rng.randint(-2, 2)))
    if choice == 2 and ints:
        return Binary(">", Var(v), Var(rng.choice(ints)))
    if choice == 3 and ints:
        return Binary("=", Var(v), Binary("+", Var(rng.choice(ints)), IntLit(rng.randint(0, 2))))
    return Binary("<", Var(v), IntLit(rng.randint(5, 50)))


def _fact(rng: random.Random, ints: list[str], bools: list[str]) -> Expr:
    if bools and rng.random() < 0.3:
        b = Var(rng.choice(bools))
        return b if rng.random() < 0.5 else Unary("not", b)
    if ints:
        return Binary(rng.choice([">", "<=", "="]), Var(rng.choice(ints)), IntLit(rng.randint(-1, 3)))
    return BoolLit(True)


class ProtocolGenerator:
    """Global types with at most three roles, two branches per choice and one recursion."""

    def __init__(self, rng: random.Random, max_roles: int = 3, max_branches: int = 2, max_depth: int = 4):
        self.rng = rng
        self.max_roles = max_roles
        self.max_branches = max_branches
        self.max_depth = max_depth
        self.counter = itertools.count(1)

    def fresh(self) -> str:
        return f"x{next(self.counter)}"

    def payload(self, var: str, ints: list[str], bools: list[str]) -> RefinementType:
        base = self.rng.choice([Base.INT, Base.INT, Base.BOOL, Base.UNIT])
        if base is Base.INT:
            return RefinementType(var, base, _int_pred(self.rng, var, ints))
        if base is Base.BOOL:
            return RefinementType(var, base, self.rng.choice([BoolLit(True), Var(var), _fact(self.rng, ints, [])]))
        return RefinementType(var, base, _fact(self.rng, ints, bools) if self.rng.random() < 0.5 else BoolLit(True))

    def seq(self, roles, depth: int, ints, bools, rec):
        rng = self.rng
        if depth == 0 or (depth < self.max_depth and rng.random() < 0.2):
            if rec is not None and rng.random() < 0.7:
                tvar, name = rec
                return GVar(tvar, ((name, Binary("+", Var(name), IntLit(1))),))
            return GEnd()
        sender, receiver = rng.sample(roles, 2)
        var = self.fresh()
        t = self.payload(var, ints, bools)
        k = rng.randint(1, self.max_branches)
        labels = rng.sample(LABELS, k)
        ints2 = ints + [var] if t.base is Base.INT else ints
        bools2 = bools + [var] if t.base is Base.BOOL else bools
        first = self.seq(roles, depth - 1, ints2, bools2, rec)
        branches = [GBranch(labels[0], var, t, first)]
        for lab in labels[1:]:
            # Sharing the continuation keeps third parties mergeable; independent ones test merge failure.
            cont = first if rng.random() < 0.6 else self.seq(roles, depth - 1, ints2, bools2, rec)
            alt = self.payload(var, ints, bools)
            ty = alt if alt.base is t.base and rng.random() < 0.5 else t
            branches.append(GBranch(lab, var, ty, cont))
        return GMessage(sender, receiver, tuple(branches))

    def protocol(self):
        rng = self.rng
        roles = list(ROLES[:rng.randint(2, self.max_roles)])
        if rng.random() < 0.5:
            name = self.fresh()
            sv = StateVar(name, RefinementType(name, Base.INT, Binary(">=", Var(name), IntLit(0))), IntLit(0))
            body = self.seq(roles, self.max_depth, [name], [], ("t", name))
            if not isinstance(body, GMessage):
                body = GMessage(roles[0], roles[1], (GBranch("a", self.fresh(), RefinementType("v", Base.UNIT, BoolLit(True)),
                                                             GVar("t", ((name, Binary("+", Var(name), IntLit(1))),))),))
            if rng.random() < 0.5:
                prefix_var = self.fresh()
                return GMessage(roles[0], roles[-1], (GBranch(
                    "init", prefix_var, RefinementType(prefix_var, Base.INT, BoolLit(True)),
                    GRec("t", (sv,), body)),))
            return GRec("t", (sv,), body)
        return self.seq(roles, self.max_depth, [], [], None)


def random_protocols(seed: int, count: int, *, max_attempts: int = 20_000, **kw) -> list:
    """`count` well-formed random global types; deterministic in `seed`."""
    rng = random.Random(seed)
    gen = ProtocolGenerator(rng, **kw)
    out = []
    for _ in range(max_attempts):
        g = gen.protocol()
        if is_well_formed(GlobalContext(), g):
            out.append(g)
            if len(out) == count:
                return out
    raise RuntimeError(f"only {len(out)} well-formed protocols in {max_attempts} attempts")


def random_formula(rng: random.Random, max_vars: int = 3, coeff: int = 4) -> Formula:
    """A quantifier-free formula over at most three integer variables with small coefficients."""
    names = [f"v{i}" for i in range(rng.randint(1, max_vars))]

    def term() -> Expr:
        e: Expr = IntLit(rng.randint(-8, 8))
        for n in rng.sample(names, rng.randint(1, len(names))):
            c = rng.randint(-coeff, coeff)
            e = Binary("+", e, Binary("*", IntLit(c), Var(n)))
        return e

    def atom() -> Expr:
        return Binary(rng.choice(["<", "<=", ">", ">=", "=", "<>"]), term(), IntLit(rng.randint(-8, 8)))

    def formula(depth: int) -> Expr:
        if depth == 0 or rng.random() < 0.3:
            return atom()
        op = rng.choice(["&&", "||", "=>", "not"])
        if op == "not":
            return Unary("not", formula(depth - 1))
        if op == "=>":
            return Binary("||", Unary("not", formula(depth - 1)), formula(depth - 1))
        return Binary(op, formula(depth - 1), formula(depth - 1))

    return Formula(formula(3), tuple((n, Base.INT) for n in names))
