"""Typing contexts: global (knower sets) and local (multiplicities)."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import UndefinedExtension
from .expr import RefinementType


class Mult(str, enum.Enum):
    """Zero: the variable is known to exist but its value is erased. Omega: usable."""

    ZERO = "0"
    OMEGA = "w"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class GEntry:
    var: str
    knowers: frozenset[str]
    type: RefinementType

    def __str__(self) -> str:
        return f"{self.var}^{{{','.join(sorted(self.knowers))}}}:{self.type}"


@dataclass(frozen=True)
class LEntry:
    var: str
    mult: Mult
    type: RefinementType

    def __str__(self) -> str:
        return f"{self.var}^{self.mult}:{self.type}"


class _Context:
    entries: tuple

    def __iter__(self) -> Iterator:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, var: str) -> bool:
        return any(e.var == var for e in self.entries)

    def lookup(self, var: str):
        for e in self.entries:
            if e.var == var:
                return e
        return None

    def names(self) -> list[str]:
        return [e.var for e in self.entries]

    def canonical(self) -> tuple:
        key = self.__dict__.get("_canonical")
        if key is None:
            key = self._compute_canonical()
            object.__setattr__(self, "_canonical", key)
        return key

    def _compute_canonical(self) -> tuple:
        return tuple((e.var, getattr(e, "knowers", None), getattr(e, "mult", None), e.type.canonical())
                     for e in self.entries)

    def alpha_eq(self, other) -> bool:
        return self.canonical() == other.canonical()

    def __str__(self) -> str:
        return ", ".join(str(e) for e in self.entries) if self.entries else "."


@dataclass(frozen=True)
class GlobalContext(_Context):
    entries: tuple[GEntry, ...] = ()

    def extend(self, var: str, knowers: Iterable[str], t: RefinementType) -> "GlobalContext":
        return extend_global(self, var, knowers, t)

    def project(self, role: str) -> "LocalContext":
        return LocalContext(tuple(
            LEntry(e.var, Mult.OMEGA if role in e.knowers else Mult.ZERO, e.type) for e in self.entries))


@dataclass(frozen=True)
class LocalContext(_Context):
    entries: tuple[LEntry, ...] = ()

    def extend(self, var: str, mult: Mult, t: RefinementType) -> "LocalContext":
        return extend_local(self, var, mult, t)

    def promote(self) -> "LocalContext":
        """Every entry becomes usable; used for well-formedness checks."""
        return LocalContext(tuple(LEntry(e.var, Mult.OMEGA, e.type) for e in self.entries))

    def omega_names(self) -> list[str]:
        return [e.var for e in self.entries if e.mult is Mult.OMEGA]


def extend_global(ctx: GlobalContext, var: str, knowers: Iterable[str], t: RefinementType) -> GlobalContext:
    knowers = frozenset(knowers)
    for i, e in enumerate(ctx.entries):
        if e.var != var:
            continue
        if not e.type.alpha_eq(t):
            raise UndefinedExtension(var, f"type {t} conflicts with {e.type}")
        if e.knowers == knowers:
            return ctx
        if not e.knowers:
            # A variable first seen through an asynchronous step gains its knowers later.
            entries = list(ctx.entries)
            entries[i] = GEntry(var, knowers, e.type)
            return GlobalContext(tuple(entries))
        raise UndefinedExtension(var, f"knowers {sorted(knowers)} conflict with {sorted(e.knowers)}")
    return GlobalContext(ctx.entries + (GEntry(var, knowers, t),))


def extend_local(ctx: LocalContext, var: str, mult: Mult, t: RefinementType) -> LocalContext:
    for i, e in enumerate(ctx.entries):
        if e.var != var:
            continue
        if not e.type.alpha_eq(t):
            raise UndefinedExtension(var, f"type {t} conflicts with {e.type}")
        if e.mult is Mult.OMEGA:
            return ctx
        entries = list(ctx.entries)
        entries[i] = LEntry(var, mult, e.type)
        return LocalContext(tuple(entries))
    return LocalContext(ctx.entries + (LEntry(var, mult, t),))


def global_context(*entries: tuple[str, Iterable[str], RefinementType]) -> GlobalContext:
    ctx = GlobalContext()
    for var, knowers, t in entries:
        ctx = extend_global(ctx, var, knowers, t)
    return ctx


def local_context(*entries: tuple[str, Mult, RefinementType]) -> LocalContext:
    ctx = LocalContext()
    for var, mult, t in entries:
        ctx = extend_local(ctx, var, mult, t)
    return ctx
