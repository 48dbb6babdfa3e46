"""Lexer, parser, type checker and pretty printer for the core object language."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import Diagnostic, ParseError, RestrictionError, Span, TypeCheckError

# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class IntT:
    def __str__(self):
        return "Int"


@dataclass(frozen=True)
class BoolT:
    def __str__(self):
        return "Bool"


@dataclass(frozen=True)
class UnitT:
    def __str__(self):
        return "Unit"


@dataclass(frozen=True)
class FutT:
    inner: "Type"

    def __str__(self):
        return f"Fut<{self.inner}>"


@dataclass(frozen=True)
class RefT:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class NullT:
    def __str__(self):
        return "null"


Type = Union[IntT, BoolT, UnitT, FutT, RefT, NullT]
PRIMITIVE = (IntT, BoolT, UnitT)


def is_future(t: Type) -> bool:
    return isinstance(t, FutT)


def is_primitive(t: Type) -> bool:
    return isinstance(t, PRIMITIVE)


# ---------------------------------------------------------------------------
# AST; spans never take part in equality


def _span():
    return field(default=Span(), compare=False, repr=False)


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span = _span()


@dataclass(frozen=True)
class NullLit:
    span: Span = _span()


@dataclass(frozen=True)
class UnitLit:
    """Only produced for implicit returns; not part of the surface syntax."""

    span: Span = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class This:
    span: Span = _span()


@dataclass(frozen=True)
class FieldRef:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Pure"
    right: "Pure"
    span: Span = _span()


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: "Pure"
    span: Span = _span()


Pure = Union[IntLit, BoolLit, NullLit, UnitLit, Var, This, FieldRef, BinOp, UnOp]


@dataclass(frozen=True)
class SyncCall:
    recv: Pure
    meth: str
    args: tuple
    span: Span = _span()


@dataclass(frozen=True)
class AsyncCall:
    recv: Pure
    meth: str
    args: tuple
    span: Span = _span()


@dataclass(frozen=True)
class New:
    cls: str
    args: tuple
    cog: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class Get:
    fut: Pure
    span: Span = _span()


ExprZ = Union[Pure, SyncCall, AsyncCall, New, Get]
SIDE_EFFECT = (SyncCall, AsyncCall, New, Get)


@dataclass(frozen=True)
class Skip:
    span: Span = _span()


@dataclass(frozen=True)
class Assign:
    target: Optional[Union[Var, FieldRef]]  # None: result discarded (`x.get;`)
    rhs: ExprZ
    span: Span = _span()


@dataclass(frozen=True)
class If:
    cond: Pure
    then: "Stmt"
    els: Optional["Stmt"] = None
    span: Span = _span()


@dataclass(frozen=True)
class Return:
    value: Pure
    span: Span = _span()


@dataclass(frozen=True)
class SeqS:
    first: "Stmt"
    second: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class Await:
    fut: Pure
    boolean: bool = False  # `await e;` without `?` is a boolean guard (rejected)
    span: Span = _span()


Stmt = Union[Skip, Assign, If, Return, SeqS, Await]


@dataclass(frozen=True)
class Param:
    type: Type
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class MethodSig:
    ret: Type
    name: str
    params: tuple
    span: Span = _span()


@dataclass(frozen=True)
class MethodDecl:
    sig: MethodSig
    locals: tuple  # of Param
    body: Stmt
    span: Span = _span()

    @property
    def name(self) -> str:
        return self.sig.name


@dataclass(frozen=True)
class InterfaceDecl:
    name: str
    sigs: tuple
    span: Span = _span()


@dataclass(frozen=True)
class ClassDecl:
    name: str
    params: tuple
    implements: tuple
    fields: tuple
    methods: tuple
    span: Span = _span()


@dataclass(frozen=True)
class Program:
    interfaces: tuple
    classes: tuple
    main_locals: tuple
    main_body: Stmt


def seq_of(stmts: list) -> Stmt:
    if not stmts:
        return Skip()
    acc = stmts[-1]
    for s in reversed(stmts[:-1]):
        acc = SeqS(s, acc)
    return acc


def flatten_seq(s: Stmt) -> list:
    out = []
    while isinstance(s, SeqS):
        out.extend(flatten_seq(s.first))
        s = s.second
    out.append(s)
    return out


# ---------------------------------------------------------------------------
# lexer

KEYWORDS = {"interface", "class", "implements", "new", "cog", "if", "else", "return", "skip",
            "await", "null", "this", "true", "false"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|&&|\|\||[{}()<>;,.!?=+\-*/%])
""", re.VERBOSE | re.DOTALL)


@dataclass(frozen=True)
class Token:
    kind: str  # int | ident | kw | op | eof
    text: str
    span: Span


def lex(text: str) -> list[Token]:
    toks: list[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", Span(line, col))
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            if kind == "ident" and s in KEYWORDS:
                kind = "kw"
            toks.append(Token(kind, s, Span(line, col)))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
    toks.append(Token("eof", "", Span(line, col)))
    return toks


# ---------------------------------------------------------------------------
# parser

_BINARY_LEVELS = [("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="), ("+", "-"), ("*", "/", "%")]
_BASE_TYPES = {"Int": IntT(), "Bool": BoolT(), "Unit": UnitT()}


class Parser:
    def __init__(self, text: str):
        self.toks = lex(text)
        self.i = 0

    # token helpers
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("op", "kw") and t.text == text

    def next(self) -> Token:
        t = self.peek()
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.peek()
        if not self.at(text):
            shown = t.text or "end of input"
            raise ParseError(f"expected '{text}' but found '{shown}'", t.span)
        return self.next()

    def ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise ParseError(f"expected identifier but found '{t.text or 'end of input'}'", t.span)
        return self.next()

    # program structure
    def program(self) -> Program:
        ifaces, classes = [], []
        while self.at("interface") or self.at("class"):
            if self.at("interface"):
                ifaces.append(self.interface())
            else:
                classes.append(self.klass())
        if not self.at("{"):
            raise ParseError("expected main block", self.peek().span)
        locals_, body = self.block(allow_decls=True)
        if self.peek().kind != "eof":
            raise ParseError(f"unexpected '{self.peek().text}' after main block", self.peek().span)
        return Program(tuple(ifaces), tuple(classes), tuple(locals_), body)

    def interface(self) -> InterfaceDecl:
        start = self.expect("interface").span
        name = self.ident().text
        self.expect("{")
        sigs = []
        while not self.at("}"):
            sigs.append(self.signature())
            self.expect(";")
        self.expect("}")
        return InterfaceDecl(name, tuple(sigs), start)

    def klass(self) -> ClassDecl:
        start = self.expect("class").span
        name = self.ident().text
        params: list = []
        if self.at("("):
            params = self.params()
        impls = []
        if self.at("implements"):
            self.next()
            impls.append(self.ident().text)
            while self.at(","):
                self.next()
                impls.append(self.ident().text)
        self.expect("{")
        fields, methods = [], []
        while not self.at("}"):
            t = self.type_()
            nm = self.ident()
            if self.at("("):
                ps = self.params()
                sig = MethodSig(t, nm.text, tuple(ps), nm.span)
                locals_, body = self.block(allow_decls=True, allow_init=False)
                methods.append(MethodDecl(sig, tuple(locals_), body, nm.span))
            else:
                self.expect(";")
                fields.append(Param(t, nm.text, nm.span))
        self.expect("}")
        return ClassDecl(name, tuple(params), tuple(impls), tuple(fields), tuple(methods), start)

    def signature(self) -> MethodSig:
        t = self.type_()
        nm = self.ident()
        return MethodSig(t, nm.text, tuple(self.params()), nm.span)

    def params(self) -> list:
        self.expect("(")
        out = []
        if not self.at(")"):
            while True:
                t = self.type_()
                nm = self.ident()
                out.append(Param(t, nm.text, nm.span))
                if not self.at(","):
                    break
                self.next()
        self.expect(")")
        return out

    def type_(self) -> Type:
        t = self.ident()
        if t.text in _BASE_TYPES:
            return _BASE_TYPES[t.text]
        if t.text == "Fut":
            self.expect("<")
            inner = self.type_()
            self.expect(">")
            return FutT(inner)
        return RefT(t.text)

    def starts_decl(self) -> bool:
        t0, t1 = self.peek(), self.peek(1)
        if t0.kind != "ident":
            return False
        if t0.text in _BASE_TYPES:
            return True
        if t0.text == "Fut" and self.at("<", 1):
            return True
        return t1.kind == "ident"

    def block(self, allow_decls: bool = False, allow_init: bool = True) -> tuple[list, Stmt]:
        """`{ decls stmts }`; declarations with initialisers become assignments."""
        self.expect("{")
        decls, stmts = [], []
        while self.starts_decl():
            if not allow_decls:
                raise ParseError("declarations are only allowed at the start of a method or main block",
                                 self.peek().span)
            t = self.type_()
            nm = self.ident()
            decls.append(Param(t, nm.text, nm.span))
            if self.at("="):
                eq = self.next()
                rhs = self.expr_z()
                stmts.append(Assign(Var(nm.text, nm.span), rhs, eq.span))
            self.expect(";")
        while not self.at("}"):
            if self.starts_decl():
                raise ParseError("declarations must precede statements", self.peek().span)
            stmts.append(self.statement())
        self.expect("}")
        return decls, seq_of(stmts)

    def statement(self) -> Stmt:
        t = self.peek()
        if self.at("skip"):
            self.next()
            self.expect(";")
            return Skip(t.span)
        if self.at("if"):
            self.next()
            self.expect("(")
            cond = self.pure()
            self.expect(")")
            _, then = self.block()
            els = None
            if self.at("else"):
                self.next()
                _, els = self.block()
            if self.at(";"):
                self.next()
            return If(cond, then, els, t.span)
        if self.at("return"):
            self.next()
            e = self.pure()
            self.expect(";")
            return Return(e, t.span)
        if self.at("await"):
            self.next()
            e = self.pure()
            boolean = True
            if self.at("?"):
                self.next()
                boolean = False
            self.expect(";")
            return Await(e, boolean, t.span)
        # assignment or discarded side-effect expression
        if t.kind == "ident" and self.at("=", 1):
            target = Var(self.next().text, t.span)
            self.next()
            rhs = self.expr_z()
            self.expect(";")
            return Assign(target, rhs, t.span)
        if self.at("this") and self.at(".", 1) and self.peek(2).kind == "ident" and self.at("=", 3):
            self.next()
            self.next()
            target = FieldRef(self.next().text, t.span)
            self.next()
            rhs = self.expr_z()
            self.expect(";")
            return Assign(target, rhs, t.span)
        rhs = self.expr_z()
        if not isinstance(rhs, SIDE_EFFECT):
            raise ParseError("expression statement has no effect", t.span)
        self.expect(";")
        return Assign(None, rhs, t.span)

    def expr_z(self) -> ExprZ:
        t = self.peek()
        if self.at("new"):
            self.next()
            cog = False
            if self.at("cog"):
                self.next()
                cog = True
            cls = self.ident().text
            args = self.args()
            return New(cls, tuple(args), cog, t.span)
        # receiver-headed forms: atom.get, atom.m(..), atom!m(..)
        save = self.i
        if t.kind == "ident" or self.at("this"):
            atom = self.atom()
            if self.at(".") and self.peek(1).text == "get" and not self.at("(", 2):
                self.next()
                self.next()
                return Get(atom, t.span)
            if self.at(".") and self.peek(1).kind == "ident" and self.at("(", 2):
                self.next()
                m = self.next().text
                return SyncCall(atom, m, tuple(self.args()), t.span)
            if self.at("!") and self.peek(1).kind == "ident" and self.at("(", 2):
                self.next()
                m = self.next().text
                return AsyncCall(atom, m, tuple(self.args()), t.span)
            self.i = save
        return self.pure()

    def args(self) -> list:
        self.expect("(")
        out = []
        if not self.at(")"):
            out.append(self.pure())
            while self.at(","):
                self.next()
                out.append(self.pure())
        self.expect(")")
        return out

    def atom(self) -> Pure:
        t = self.peek()
        if self.at("this"):
            self.next()
            if self.at(".") and self.peek(1).kind == "ident" and not self.at("(", 2):
                self.next()
                return FieldRef(self.next().text, t.span)
            return This(t.span)
        return Var(self.ident().text, t.span)

    def pure(self, level: int = 0) -> Pure:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.pure(level + 1)
        while self.peek().kind == "op" and self.peek().text in _BINARY_LEVELS[level]:
            op = self.next()
            right = self.pure(level + 1)
            left = BinOp(op.text, left, right, op.span)
        return left

    def unary(self) -> Pure:
        t = self.peek()
        if self.at("!") or self.at("-"):
            self.next()
            return UnOp(t.text, self.unary(), t.span)
        return self.primary()

    def primary(self) -> Pure:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return IntLit(int(t.text), t.span)
        if self.at("true") or self.at("false"):
            self.next()
            return BoolLit(t.text == "true", t.span)
        if self.at("null"):
            self.next()
            return NullLit(t.span)
        if self.at("("):
            self.next()
            e = self.pure()
            self.expect(")")
            return e
        if t.kind == "ident" or self.at("this"):
            return self.atom()
        raise ParseError(f"unexpected '{t.text or 'end of input'}' in expression", t.span)


def parse(text: str) -> Program:
    return Parser(text).program()


# ---------------------------------------------------------------------------
# pretty printer

_PREC = {op: i for i, ops in enumerate(_BINARY_LEVELS) for op in ops}


def show_pure(e: Pure, ctx: int = 0) -> str:
    match e:
        case IntLit(v):
            return str(v)
        case BoolLit(v):
            return "true" if v else "false"
        case NullLit():
            return "null"
        case UnitLit():
            return "unit"
        case Var(n):
            return n
        case This():
            return "this"
        case FieldRef(n):
            return f"this.{n}"
        case UnOp(op, x):
            return op + show_pure(x, len(_BINARY_LEVELS))
        case BinOp(op, l, r):
            p = _PREC[op]
            s = f"{show_pure(l, p)} {op} {show_pure(r, p + 1)}"
            return f"({s})" if p < ctx else s
    raise TypeError(e)


def show_z(z: ExprZ) -> str:
    match z:
        case SyncCall(r, m, args):
            return f"{show_pure(r, 99)}.{m}({', '.join(show_pure(a) for a in args)})"
        case AsyncCall(r, m, args):
            return f"{show_pure(r, 99)}!{m}({', '.join(show_pure(a) for a in args)})"
        case New(c, args, cog):
            return f"new {'cog ' if cog else ''}{c}({', '.join(show_pure(a) for a in args)})"
        case Get(f):
            return f"{show_pure(f, 99)}.get"
    return show_pure(z)


def show_stmt(s: Stmt, indent: int = 0) -> list[str]:
    pad = "    " * indent
    out: list[str] = []
    for st in flatten_seq(s):
        match st:
            case Skip():
                out.append(pad + "skip;")
            case Assign(None, rhs):
                out.append(pad + show_z(rhs) + ";")
            case Assign(t, rhs):
                out.append(pad + f"{show_pure(t)} = {show_z(rhs)};")
            case Return(v):
                out.append(pad + f"return {show_pure(v)};")
            case Await(f, boolean):
                out.append(pad + f"await {show_pure(f)}{'' if boolean else '?'};")
            case If(c, t, e):
                out.append(pad + f"if ({show_pure(c)}) {{")
                out += show_stmt(t, indent + 1)
                if e is None:
                    out.append(pad + "}")
                else:
                    out.append(pad + "} else {")
                    out += show_stmt(e, indent + 1)
                    out.append(pad + "}")
    return out


def _params(ps) -> str:
    return ", ".join(f"{p.type} {p.name}" for p in ps)


def pretty(p: Program) -> str:
    out: list[str] = []
    for i in p.interfaces:
        out.append(f"interface {i.name} {{")
        for s in i.sigs:
            out.append(f"    {s.ret} {s.name}({_params(s.params)});")
        out.append("}")
    for c in p.classes:
        head = f"class {c.name}"
        if c.params:
            head += f"({_params(c.params)})"
        if c.implements:
            head += " implements " + ", ".join(c.implements)
        out.append(head + " {")
        for f in c.fields:
            out.append(f"    {f.type} {f.name};")
        for m in c.methods:
            out.append(f"    {m.sig.ret} {m.sig.name}({_params(m.sig.params)}) {{")
            for d in m.locals:
                out.append(f"        {d.type} {d.name};")
            out += show_stmt(m.body, 2)
            out.append("    }")
        out.append("}")
    out.append("{")
    for d in p.main_locals:
        out.append(f"    {d.type} {d.name};")
    out += show_stmt(p.main_body, 1)
    out.append("}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# type checking


@dataclass
class ClassInfo:
    decl: ClassDecl
    field_types: dict  # class params first, then declared fields
    methods: dict  # name -> MethodDecl

    @property
    def name(self) -> str:
        return self.decl.name


@dataclass
class TypedProgram:
    program: Program
    classes: dict
    interfaces: dict
    impl: dict  # interface -> implementing class
    types: dict = field(default_factory=dict)  # id(expr node) -> Type
    name: str = "<input>"
    _bodies: dict = field(default_factory=dict)

    def class_of(self, t: Type) -> str | None:
        if isinstance(t, RefT):
            if t.name in self.classes:
                return t.name
            return self.impl.get(t.name)
        return None

    def type_of(self, e) -> Type:
        return self.types[id(e)]

    def method(self, cls: str, meth: str) -> MethodDecl:
        return self.classes[cls].methods[meth]

    def body(self, cls: str, meth: str) -> Stmt:
        """Method body with an explicit `return unit` on every fall-through path."""
        key = (cls, meth)
        if key not in self._bodies:
            self._bodies[key] = complete_returns(self.method(cls, meth).body)
        return self._bodies[key]

    def method_keys(self) -> list[tuple[str, str]]:
        return [(c.name, m.name) for c in self.program.classes for m in c.methods]


def complete_returns(s: Stmt) -> Stmt:
    match s:
        case Return():
            return s
        case SeqS(a, b):
            return SeqS(a, complete_returns(b), s.span)
        case If(c, t, e):
            return If(c, complete_returns(t), complete_returns(e if e is not None else Skip()), s.span)
        case Skip():
            return Return(UnitLit(), s.span)
    return SeqS(s, Return(UnitLit(), s.span), s.span)


def always_returns(s: Stmt) -> bool:
    match s:
        case Return():
            return True
        case SeqS(_, b):
            return always_returns(b)
        case If(_, t, e):
            return e is not None and always_returns(t) and always_returns(e)
    return False


class _Checker:
    def __init__(self, prog: Program):
        self.p = prog
        self.diags: list[Diagnostic] = []
        self.types: dict = {}
        self.classes: dict = {}
        self.interfaces: dict = {}
        self.impl: dict = {}

    def err(self, code: str, msg: str, span: Span, kind: str = "type"):
        self.diags.append(Diagnostic(kind, code, msg, span))

    def restrict(self, code: str, msg: str, span: Span):
        self.err(code, msg, span, "restriction")

    # declarations
    def run(self) -> TypedProgram:
        p = self.p
        for i in p.interfaces:
            if i.name in self.interfaces or i.name in _BASE_TYPES or i.name == "Fut":
                self.err("duplicate-name", f"interface {i.name} declared twice", i.span)
            self.interfaces[i.name] = i
            self._dups([s.name for s in i.sigs], [s.span for s in i.sigs], "method")
        for c in p.classes:
            if c.name in self.classes or c.name in self.interfaces:
                self.err("duplicate-name", f"class {c.name} clashes with an earlier declaration", c.span)
                continue
            fts = {}
            for f in c.params + c.fields:
                fts.setdefault(f.name, f.type)
            self._dups([f.name for f in c.params + c.fields], [f.span for f in c.params + c.fields], "field")
            self._dups([m.name for m in c.methods], [m.span for m in c.methods], "method")
            self.classes[c.name] = ClassInfo(c, fts, {m.name: m for m in c.methods})
        for c in p.classes:
            for iname in c.implements:
                if iname not in self.interfaces:
                    self.err("unknown-name", f"unknown interface {iname}", c.span)
                    continue
                if iname in self.impl and self.impl[iname] != c.name:
                    self.restrict("multi-impl", f"interface {iname} is implemented by both "
                                  f"{self.impl[iname]} and {c.name}", c.span)
                    continue
                self.impl[iname] = c.name
                self._conforms(c, self.interfaces[iname])
        for c in p.classes:
            for f in c.params + c.fields:
                self._type_ok(f.type, f.span)
            for m in c.methods:
                self.method(c, m)
        for d in p.main_locals:
            self._type_ok(d.type, d.span)
        self._dups([d.name for d in p.main_locals], [d.span for d in p.main_locals], "variable")
        scope = {d.name: d.type for d in p.main_locals}
        self.stmt(p.main_body, None, scope, None)
        for r in _returns(p.main_body):
            self.err("return-in-main", "the main block cannot return", r.span)
        tp = TypedProgram(p, self.classes, self.interfaces, self.impl, self.types)
        if self.diags:
            restr = [d for d in self.diags if d.kind == "restriction"]
            if restr and len(restr) == len(self.diags):
                raise RestrictionError(self.diags)
            raise TypeCheckError(self.diags)
        return tp

    def _dups(self, names, spans, what):
        seen = set()
        for n, sp in zip(names, spans):
            if n in seen:
                self.err("duplicate-name", f"duplicate {what} name {n}", sp)
            seen.add(n)

    def _type_ok(self, t: Type, span: Span):
        if isinstance(t, FutT):
            self._type_ok(t.inner, span)
        elif isinstance(t, RefT) and t.name not in self.classes and t.name not in self.interfaces:
            self.err("unknown-name", f"unknown type {t.name}", span)

    def _conforms(self, c: ClassDecl, i: InterfaceDecl):
        ms = {m.name: m for m in c.methods}
        for s in i.sigs:
            m = ms.get(s.name)
            if m is None:
                self.err("missing-method", f"class {c.name} does not define {i.name}.{s.name}", c.span)
            elif m.sig.ret != s.ret or [p.type for p in m.sig.params] != [p.type for p in s.params]:
                self.err("signature-mismatch", f"{c.name}.{s.name} does not match interface {i.name}",
                         m.span)

    def method(self, c: ClassDecl, m: MethodDecl):
        for prm in m.sig.params + m.locals:
            self._type_ok(prm.type, prm.span)
        self._type_ok(m.sig.ret, m.span)
        names = [x.name for x in m.sig.params + m.locals]
        self._dups(names, [x.span for x in m.sig.params + m.locals], "variable")
        for x in m.sig.params + m.locals:
            if x.name == "destiny":
                self.err("reserved-name", "destiny is a reserved name", x.span)
        scope = {x.name: x.type for x in m.sig.params + m.locals}
        self.stmt(m.body, c.name, scope, m.sig.ret, tail=True)
        if not isinstance(m.sig.ret, UnitT) and not always_returns(m.body):
            self.err("missing-return", f"{c.name}.{m.name} may finish without returning a value", m.span)

    # compatibility
    def assignable(self, src: Type, dst: Type) -> bool:
        if src == dst:
            return True
        if isinstance(src, NullT):
            return isinstance(dst, RefT)
        if isinstance(src, RefT) and isinstance(dst, RefT):
            return self.impl.get(dst.name) == src.name
        return False

    # statements
    def stmt(self, s: Stmt, cls, scope, ret, tail: bool = False):
        match s:
            case Skip():
                pass
            case SeqS(a, b):
                self.stmt(a, cls, scope, ret, False)
                self.stmt(b, cls, scope, ret, tail)
            case If(c, t, e):
                self.expect(self.pure(c, cls, scope), BoolT(), c)
                self.stmt(t, cls, scope, ret, tail)
                if e is not None:
                    self.stmt(e, cls, scope, ret, tail)
            case Return(v):
                if ret is None:
                    return  # reported once for the whole main block
                if not tail:
                    self.restrict("return-continuation", "return must be the last statement of a method",
                                  s.span)
                t = self.pure(v, cls, scope)
                if t is not None and not self.assignable(t, ret):
                    self.err("type-mismatch", f"returning {t} from a method of type {ret}", s.span)
            case Await(f, boolean):
                t = self.pure(f, cls, scope)
                if boolean or isinstance(t, BoolT):
                    self.restrict("await-bool", "await on a boolean condition is not supported", s.span)
                elif t is not None and not isinstance(t, FutT):
                    self.err("type-mismatch", f"await on a value of type {t}", s.span)
            case Assign(target, rhs):
                rt = self.z(rhs, cls, scope)
                if target is None:
                    return
                tt = self.target(target, cls, scope)
                if tt is not None and rt is not None and not self.assignable(rt, tt):
                    self.err("type-mismatch", f"cannot assign {rt} to {show_pure(target)} of type {tt}",
                             s.span)

    def target(self, t, cls, scope) -> Type | None:
        if isinstance(t, Var) and t.name in scope:
            self.types[id(t)] = scope[t.name]
            return scope[t.name]
        name = t.name
        if cls is None or name not in self.classes[cls].field_types:
            self.err("unknown-name", f"unknown variable {name}", t.span)
            return None
        ft = self.classes[cls].field_types[name]
        self.types[id(t)] = ft
        if isinstance(ft, FutT):
            self.restrict("future-field-assign", f"assignment to field {name} of future type", t.span)
        return ft

    def expect(self, got, want, node):
        if got is not None and got != want:
            self.err("type-mismatch", f"expected {want} but found {got}", node.span)

    # expressions
    def z(self, e, cls, scope) -> Type | None:
        t = self._z(e, cls, scope)
        if t is not None:
            self.types[id(e)] = t
        return t

    def _z(self, e, cls, scope):
        match e:
            case New(c, args, _):
                if c not in self.classes:
                    self.err("unknown-name", f"unknown class {c}", e.span)
                    return None
                self.call_args(self.classes[c].decl.params, args, cls, scope, e.span, f"new {c}")
                return RefT(c)
            case Get(f):
                t = self.pure(f, cls, scope)
                if t is None:
                    return None
                if not isinstance(t, FutT):
                    self.err("type-mismatch", f"get on a value of type {t}", e.span)
                    return None
                return t.inner
            case SyncCall(r, m, args) | AsyncCall(r, m, args):
                sig = self.lookup(r, m, cls, scope, e.span)
                if sig is None:
                    for a in args:
                        self.pure(a, cls, scope)
                    return None
                self.call_args(sig.params, args, cls, scope, e.span, m)
                return sig.ret if isinstance(e, SyncCall) else FutT(sig.ret)
        return self.pure(e, cls, scope)

    def lookup(self, r, m, cls, scope, span) -> MethodSig | None:
        t = self.pure(r, cls, scope)
        if t is None:
            return None
        if not isinstance(t, RefT):
            self.err("type-mismatch", f"method call on a value of type {t}", span)
            return None
        if t.name in self.classes:
            md = self.classes[t.name].methods.get(m)
            if md is None:
                self.err("unknown-name", f"class {t.name} has no method {m}", span)
                return None
            return md.sig
        iface = self.interfaces[t.name]
        sig = next((s for s in iface.sigs if s.name == m), None)
        if sig is None:
            self.err("unknown-name", f"interface {t.name} has no method {m}", span)
            return None
        if t.name not in self.impl:
            self.err("unimplemented", f"interface {t.name} has no implementing class", span)
            return None
        return sig

    def call_args(self, params, args, cls, scope, span, what):
        if len(params) != len(args):
            self.err("arity", f"{what} expects {len(params)} arguments, got {len(args)}", span)
        for p, a in zip(params, args):
            t = self.pure(a, cls, scope)
            if t is not None and not self.assignable(t, p.type):
                self.err("type-mismatch", f"argument {p.name} of {what} expects {p.type}, got {t}", a.span)
        for a in args[len(params):]:
            self.pure(a, cls, scope)

    def pure(self, e, cls, scope) -> Type | None:
        t = self._pure(e, cls, scope)
        if t is not None:
            self.types[id(e)] = t
        return t

    def _pure(self, e, cls, scope):
        match e:
            case IntLit():
                return IntT()
            case BoolLit():
                return BoolT()
            case NullLit():
                return NullT()
            case UnitLit():
                return UnitT()
            case Var(n):
                if n in scope:
                    return scope[n]
                if cls is not None and n in self.classes[cls].field_types:
                    return self.classes[cls].field_types[n]
                self.err("unknown-name", f"unknown variable {n}", e.span)
                return None
            case This():
                if cls is None:
                    self.err("unknown-name", "this is not available in the main block", e.span)
                    return None
                return RefT(cls)
            case FieldRef(n):
                if cls is None or n not in self.classes[cls].field_types:
                    self.err("unknown-name", f"unknown field {n}", e.span)
                    return None
                return self.classes[cls].field_types[n]
            case UnOp(op, x):
                want = BoolT() if op == "!" else IntT()
                self.expect(self.pure(x, cls, scope), want, x)
                return want
            case BinOp(op, l, r):
                lt, rt = self.pure(l, cls, scope), self.pure(r, cls, scope)
                if op in ("&&", "||"):
                    self.expect(lt, BoolT(), l)
                    self.expect(rt, BoolT(), r)
                    return BoolT()
                if op in ("==", "!="):
                    if lt is not None and rt is not None and not (
                            self.assignable(lt, rt) or self.assignable(rt, lt)):
                        self.err("type-mismatch", f"comparing {lt} with {rt}", e.span)
                    return BoolT()
                self.expect(lt, IntT(), l)
                self.expect(rt, IntT(), r)
                return BoolT() if op in ("<", "<=", ">", ">=") else IntT()
        raise TypeError(e)


def _returns(s: Stmt):
    match s:
        case Return():
            yield s
        case SeqS(a, b):
            yield from _returns(a)
            yield from _returns(b)
        case If(_, t, e):
            yield from _returns(t)
            if e is not None:
                yield from _returns(e)


def typecheck(p: Program, name: str = "<input>") -> TypedProgram:
    tp = _Checker(p).run()
    tp.name = name
    return tp


def load(text: str, name: str = "<input>") -> TypedProgram:
    return typecheck(parse(text), name)


def load_file(path) -> TypedProgram:
    with open(path, encoding="utf-8") as fh:
        return load(fh.read(), str(path))
