"""Recursive-descent parser for protocol files, core types and expressions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..core.context import Mult
from ..core.errors import Diagnostic, DiagnosticError, Span
from ..core.expr import (Base, Binary, BoolLit, Expr, IntLit, RefinementType, TRUE, Unary, Var, conj)
from ..core.types import (GBranch, GEnd, GMessage, GRec, GVar, LBranch, LEnd, LRec, LRecv, LSend, LSilent, LVar,
                          StateVar)
from .lexer import Token, tokenize

BASES = {b.value: b for b in Base}


@dataclass
class Message:
    label: str
    var: Optional[str]
    type: RefinementType
    sender: str
    receiver: str
    span: Span


@dataclass
class Choice:
    role: str
    blocks: list[list]
    span: Span


@dataclass
class Do:
    name: str
    args: list[tuple[str, Optional[list[Expr]]]]
    span: Span


Stmt = Union[Message, Choice, Do]


@dataclass
class RoleDecl:
    name: str
    state: list[tuple[str, RefinementType]] = field(default_factory=list)


@dataclass
class ProtocolDecl:
    name: str
    roles: list[RoleDecl]
    body: list[Stmt]
    aux: bool = False
    span: Optional[Span] = None
    core: Optional[object] = None  # a GlobalType written directly in the core syntax


@dataclass
class Module:
    protocols: dict[str, ProtocolDecl]
    main: str
    fresh: "Fresh" = None

    @property
    def main_decl(self) -> ProtocolDecl:
        return self.protocols[self.main]


class Fresh:
    """Deterministic supply of anonymous variable names (`_1`, `_2`, ...)."""

    def __init__(self) -> None:
        self.n = 0

    def __call__(self) -> str:
        self.n += 1
        return f"_{self.n}"


class _Fail(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


class Parser:
    def __init__(self, text: str, fresh: Optional[Fresh] = None):
        self.toks = tokenize(text)
        self.i = 0
        self.fresh = fresh or Fresh()

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Token] = None, code: str = "SyntaxError"):
        tok = tok or self.tok
        raise _Fail(Diagnostic(code, msg, tok.span))

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "kw") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected '{text}' but found '{found}'")
        t = self.tok
        self.i += 1
        return t

    def ident(self, what: str = "identifier") -> str:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            self.error(f"expected {what} but found '{found}'")
        t = self.tok
        self.i += 1
        return t.text

    def run(self, fn):
        try:
            out = fn()
            if self.tok.kind != "eof":
                self.error(f"unexpected '{self.tok.text}'")
            return out
        except _Fail as f:
            raise DiagnosticError([f.diag]) from None
        except RecursionError:
            raise DiagnosticError([Diagnostic("SyntaxError", "input nested too deeply", self.tok.span)]) from None

    # -- expressions --------------------------------------------------------
    def expr(self) -> Expr:
        e = self.conj()
        while self.accept("||"):
            e = Binary("||", e, self.conj())
        return e

    def conj(self) -> Expr:
        e = self.equality()
        while self.accept("&&"):
            e = Binary("&&", e, self.equality())
        return e

    def equality(self) -> Expr:
        e = self.relation()
        while self.tok.kind == "sym" and self.tok.text in ("=", "<>"):
            op = self.tok.text
            self.i += 1
            e = Binary(op, e, self.relation())
        return e

    def relation(self) -> Expr:
        e = self.additive()
        links = []
        while self.tok.kind == "sym" and self.tok.text in ("<", "<=", ">", ">="):
            op = self.tok.text
            self.i += 1
            rhs = self.additive()
            links.append(Binary(op, e, rhs))
            e = rhs
        if not links:
            return e
        # `a < b <= c` reads as `a < b && b <= c`.
        return conj(links)

    def additive(self) -> Expr:
        e = self.multiplicative()
        while self.tok.kind == "sym" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            e = Binary(op, e, self.multiplicative())
        return e

    def multiplicative(self) -> Expr:
        e = self.unary()
        while self.accept("*"):
            e = Binary("*", e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.accept("!") or self.accept("not"):
            return Unary("not", self.unary())
        if self.accept("-"):
            if self.tok.kind == "int":
                v = int(self.tok.text)
                self.i += 1
                return IntLit(-v)
            return Unary("neg", self.unary())
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return IntLit(int(t.text))
        if self.accept("true"):
            return BoolLit(True)
        if self.accept("false"):
            return BoolLit(False)
        if t.kind == "ident":
            self.i += 1
            return Var(t.text)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"expected an expression but found '{t.text or 'end of input'}'")

    # -- types ----------------------------------------------------------------
    def base(self) -> Base:
        t = self.tok
        if t.kind == "ident" and t.text in BASES:
            self.i += 1
            return BASES[t.text]
        self.error(f"expected a base type (int, bool, string, unit) but found '{t.text or 'end of input'}'")

    def refinement(self) -> Expr:
        if self.accept("{"):
            e = self.expr()
            self.expect("}")
            return e
        return TRUE

    def payload(self) -> tuple[str, RefinementType]:
        """`( [x :] base [{E}] )` or `()`; the binder always equals the payload variable."""
        self.expect("(")
        if self.accept(")"):
            v = self.fresh()
            return v, RefinementType(v, Base.UNIT)
        var = None
        if self.tok.kind == "ident" and self.peek().kind == "sym" and self.peek().text == ":":
            var = self.ident()
            self.expect(":")
        b = self.base()
        pred = self.refinement()
        self.expect(")")
        v = var or self.fresh()
        return v, RefinementType(v, b, pred)

    # -- protocol files -------------------------------------------------------
    def module(self) -> Module:
        protos: dict[str, ProtocolDecl] = {}
        main = None
        while self.tok.kind != "eof":
            start = self.tok
            d = self.decl()
            if d.name in protos:
                self.error(f"protocol {d.name} is declared twice", start, "DuplicateProtocol")
            protos[d.name] = d
            if main is None and not d.aux:
                main = d.name
        if main is None:
            self.error("no global protocol declared", code="NoProtocol")
        return Module(protos, main)

    def decl(self) -> ProtocolDecl:
        start = self.tok
        aux = self.accept("aux")
        self.expect("global")
        if not aux and self.accept("type"):
            name = self.ident("protocol name")
            self.expect("=")
            g = self.gtype()
            self.accept(";")
            return ProtocolDecl(name, [], [], False, start.span, core=g)
        self.expect("protocol")
        name = self.ident("protocol name")
        self.expect("(")
        roles = [self.role_decl()]
        while self.accept(","):
            roles.append(self.role_decl())
        self.expect(")")
        self.expect("{")
        body = self.block()
        self.expect("}")
        return ProtocolDecl(name, roles, body, aux, start.span)

    def role_decl(self) -> RoleDecl:
        self.expect("role")
        name = self.ident("role name")
        state = []
        if self.accept("["):
            while True:
                v = self.ident("state variable")
                self.expect(":")
                b = self.base()
                state.append((v, RefinementType(v, b, self.refinement())))
                if not self.accept(","):
                    break
            self.expect("]")
        return RoleDecl(name, state)

    def block(self) -> list[Stmt]:
        out: list[Stmt] = []
        while not self.at("}") and self.tok.kind != "eof":
            out.append(self.stmt())
        return out

    def stmt(self) -> Stmt:
        start = self.tok
        if self.accept("choice"):
            self.expect("at")
            role = self.ident("role name")
            blocks = []
            self.expect("{")
            blocks.append(self.block())
            self.expect("}")
            while self.accept("or"):
                self.expect("{")
                blocks.append(self.block())
                self.expect("}")
            return Choice(role, blocks, start.span)
        if self.accept("do"):
            name = self.ident("protocol name")
            self.expect("(")
            args = [self.role_arg()]
            while self.accept(","):
                args.append(self.role_arg())
            self.expect(")")
            self.expect(";")
            return Do(name, args, start.span)
        label = self.ident("message label")
        var, t = self.payload()
        self.expect("from")
        sender = self.ident("role name")
        self.expect("to")
        receiver = self.ident("role name")
        self.expect(";")
        named = None if var.startswith("_") else var
        return Message(label, named, t, sender, receiver, start.span)

    def role_arg(self) -> tuple[str, Optional[list[Expr]]]:
        role = self.ident("role name")
        if self.accept("["):
            es = [self.expr()]
            while self.accept(","):
                es.append(self.expr())
            self.expect("]")
            return role, es
        return role, None

    # -- core global types ----------------------------------------------------
    def gtype(self):
        t = self.tok
        if self.accept("end"):
            return GEnd()
        if self.accept("("):
            g = self.gtype()
            self.expect(")")
            return g
        if self.accept("mu"):
            tvar = self.ident("type variable")
            state = self.state_decls(local=False)
            self.expect(".")
            return GRec(tvar, state, self.gtype())
        if t.kind == "ident" and self.peek().text == "->" and self.peek().kind == "sym":
            sender = self.ident()
            self.expect("->")
            receiver = self.ident("role name")
            return GMessage(sender, receiver, self.branches(self.gbranch, ":"))
        if t.kind == "ident":
            return GVar(self.ident(), self.assigns())
        self.error(f"expected a global type but found '{t.text or 'end of input'}'")

    def branches(self, one, single: Optional[str]):
        if self.accept("{"):
            bs = [one()]
            while self.accept(";"):
                bs.append(one())
            self.expect("}")
        else:
            if single:
                self.expect(single)
            bs = [one()]
        # Anonymous payloads of one message share a name so third parties can merge them.
        anon = [b for b in bs if b.var.startswith("_")]
        if len(anon) > 1:
            shared = anon[0].var
            bs = [_rename_anon(b, shared) if b.var.startswith("_") else b for b in bs]
        return tuple(bs)

    def gbranch(self) -> GBranch:
        label = self.ident("message label")
        var, t = self.payload()
        self.expect(".")
        return GBranch(label, var, t, self.gtype())

    def state_decls(self, local: bool) -> tuple[StateVar, ...]:
        out = []
        if not self.accept("("):
            return ()
        while True:
            name = self.ident("state variable")
            knowers = None
            mult = Mult.OMEGA
            if not local and self.accept("@"):
                self.expect("{")
                ks = []
                if not self.at("}"):
                    ks.append(self.ident("role name"))
                    while self.accept(","):
                        ks.append(self.ident("role name"))
                self.expect("}")
                knowers = frozenset(ks)
            if local and self.accept("^"):
                if self.tok.kind == "int" and self.tok.text == "0":
                    mult = Mult.ZERO
                elif self.tok.kind == "ident" and self.tok.text == "w":
                    mult = Mult.OMEGA
                else:
                    self.error("expected multiplicity 0 or w")
                self.i += 1
            self.expect(":")
            b = self.base()
            pred = self.refinement()
            self.expect(":=")
            init = self.expr()
            out.append(StateVar(name, RefinementType(name, b, pred), init, knowers, mult))
            if not self.accept(","):
                break
        self.expect(")")
        return tuple(out)

    def assigns(self) -> tuple[tuple[str, Expr], ...]:
        if not (self.at("<") and self.peek().kind == "ident" and self.peek(2).text == ":="):
            return ()
        self.expect("<")
        out = []
        while True:
            x = self.ident("state variable")
            self.expect(":=")
            out.append((x, self.additive()))
            if not self.accept(","):
                break
        self.expect(">")
        return tuple(out)

    # -- core local types -----------------------------------------------------
    def ltype(self):
        t = self.tok
        if self.accept("end"):
            return LEnd()
        if self.accept("mu"):
            tvar = self.ident("type variable")
            state = self.state_decls(local=True)
            self.expect(".")
            return LRec(tvar, state, self.ltype())
        if self.accept("<"):
            labels = [self.ident("message label")]
            while self.accept("|"):
                labels.append(self.ident("message label"))
            self.expect(">")
            var, ty = self.payload()
            self.expect(".")
            return LSilent("|".join(labels), var, ty, self.ltype())
        if self.accept("("):
            lt = self.ltype()
            self.expect(")")
            return lt
        if t.kind == "ident" and self.peek().kind == "sym" and self.peek().text in ("!", "?"):
            peer = self.ident()
            kind = LSend if self.tok.text == "!" else LRecv
            self.i += 1
            return kind(peer, self.branches(self.lbranch, None))
        if t.kind == "ident":
            return LVar(self.ident(), self.assigns())
        self.error(f"expected a local type but found '{t.text or 'end of input'}'")

    def lbranch(self) -> LBranch:
        label = self.ident("message label")
        var, t = self.payload()
        self.expect(".")
        return LBranch(label, var, t, self.ltype())


def _rename_anon(b, shared: str):
    from ..core.types import rename_vars
    t = RefinementType(shared, b.type.base, b.type.instantiate(shared))
    return type(b)(b.label, shared, t, rename_vars(b.cont, {b.var: shared}))


def parse_expr(text: str) -> Expr:
    p = Parser(text)
    return p.run(p.expr)


def parse_refinement(text: str) -> RefinementType:
    """`x:S{E}` or `S{E}`."""
    p = Parser(text)

    def go():
        var = None
        if p.tok.kind == "ident" and p.peek().text == ":":
            var = p.ident()
            p.expect(":")
        b = p.base()
        pred = p.refinement()
        v = var or "v"
        return RefinementType(v, b, pred)

    return p.run(go)


def parse_global(text: str, fresh: Optional[Fresh] = None):
    p = Parser(text, fresh)
    return p.run(p.gtype)


def parse_local(text: str, fresh: Optional[Fresh] = None):
    p = Parser(text, fresh)
    return p.run(p.ltype)


def parse_module(text: str) -> Module:
    p = Parser(text)
    m = p.run(p.module)
    m.fresh = p.fresh
    return m
