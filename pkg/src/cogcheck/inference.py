"""Contract inference and constraint solving.

Inference walks each method body once, producing a pair of contracts and a
list of constraints over record and cog variables.  The solver handles the
equalities by first-order unification and the method-call constraints by
instantiating the callee signature afresh at every call site.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from . import frontend as F
from .contract_core import (
    NULL, START, UNIT, AsyncInvk, AsyncInvkDep, CogEq, Contract, FutRec, MethodContract, Null, NullDep,
    ObjRec, Plus, RecEq, RecVar, Record, SemiUnif, SyncInvk, UnitRec, contract_cogs, contract_vars, par_all,
    record_cogs, record_vars, seq, show_contract, show_method_contract, subst_record, var_display, with_dep,
)
from .errors import DivergenceError, InternalError, OccursError, UnificationError


@dataclass(frozen=True)
class FName:
    """A future name in the inference environment."""

    id: int

    def __str__(self) -> str:
        return f"f{self.id}"


Value = Union[Record, FName]


@dataclass(frozen=True)
class FutEntry:
    rec: Record
    contract: Contract
    checked: bool = False


@dataclass
class Env:
    vars: dict
    this_fields: dict | None
    futs: dict
    var_types: dict
    cls: str | None

    def copy(self) -> "Env":
        return Env(dict(self.vars), dict(self.this_fields) if self.this_fields is not None else None,
                   dict(self.futs), self.var_types, self.cls)

    def lookup(self, name: str) -> Value:
        if name in self.vars:
            return self.vars[name]
        if self.this_fields is not None and name in self.this_fields:
            return self.this_fields[name]
        raise InternalError(f"unbound name {name}")

    def unsync(self) -> Contract:
        return par_all(e.contract for f, e in sorted(self.futs.items(), key=lambda kv: kv[0].id)
                       if not e.checked)


@dataclass
class InferenceResult:
    cct: dict  # (cls, meth) -> MethodContract
    main: tuple  # (sync, unsync)
    constraints: list
    signatures: dict  # (cls, meth) -> (recv, args, ret)
    origins: dict = field(default_factory=dict)  # cog name -> where it was created

    def main_display(self) -> str:
        return f"<{show_contract(self.main[0])}, {show_contract(self.main[1])}>"


class Inferrer:
    def __init__(self, tp: F.TypedProgram):
        self.tp = tp
        self.n_cog = 0
        self.n_var = 0
        self.n_fut = 0
        self.constraints: list = []
        self.sigs: dict = {}
        self.origins: dict = {}
        self.where = "main"

    # fresh names
    def cog(self) -> str:
        self.n_cog += 1
        return f"k{self.n_cog}"

    def var(self) -> RecVar:
        self.n_var += 1
        return RecVar(f"R{self.n_var}")

    def fut(self) -> FName:
        self.n_fut += 1
        return FName(self.n_fut)

    def eq(self, a: Record, b: Record):
        if a != b:
            self.constraints.append(RecEq(a, b))

    # records for declared names
    def slot(self, t: F.Type, env: Env) -> Value:
        if F.is_future(t):
            f = self.fut()
            env.futs[f] = FutEntry(self.var(), NULL)
            return f
        if F.is_primitive(t):
            return UNIT
        return self.var()

    def header_rec(self, v: Value, env: Env) -> Record:
        return env.futs[v].rec if isinstance(v, FName) else v

    # expressions
    def pure(self, env: Env, e) -> Value:
        match e:
            case F.Var(n):
                return env.lookup(n)
            case F.FieldRef(n):
                return env.this_fields[n]
            case F.This():
                return env.vars["this"]
            case F.NullLit():
                return self.var()
            case F.IntLit() | F.BoolLit() | F.UnitLit() | F.BinOp() | F.UnOp():
                return UNIT
        raise InternalError(f"unexpected expression {e!r}")

    def value(self, env: Env, e) -> Record:
        v = self.pure(env, e)
        if isinstance(v, FName):
            return env.futs[v].rec
        return v

    def receiver_class(self, e) -> str:
        cls = self.tp.class_of(self.tp.type_of(e))
        if cls is None:
            raise InternalError("receiver without a class")
        return cls

    def call(self, env: Env, recv, meth, args):
        cls = self.receiver_class(recv)
        r = self.value(env, recv)
        c2 = self.cog()
        fields = tuple((n, self.var()) for n in self.tp.classes[cls].field_types)
        self.eq(ObjRec(c2, fields), r)
        ss = tuple(self.value(env, a) for a in args)
        x = self.var()
        self.constraints.append(SemiUnif((cls, meth), r, ss, x))
        return cls, r, ss, x, c2

    def synchronise(self, env: Env, f: FName, cog: str, aw: bool) -> tuple[Record, Contract, Env]:
        e = env.futs[f]
        c2 = self.cog()
        x = self.var()
        self.eq(e.rec, FutRec(c2, x))
        if e.checked:
            return x, NULL, env
        env = env.copy()
        env.futs[f] = FutEntry(e.rec, NULL, True)
        dep = with_dep(e.contract, cog, c2, aw)
        return x, par_all([dep, env.unsync()]), env

    def z(self, env: Env, cog: str, e) -> tuple[Value, Contract, Env]:
        match e:
            case F.Get(fe):
                f = self.pure(env, fe)
                if not isinstance(f, FName):
                    raise InternalError("get on a non-future")
                return self.synchronise(env, f, cog, False)
            case F.New(cls, args, is_cog):
                info = self.tp.classes[cls]
                c2 = self.cog() if is_cog else cog
                if is_cog:
                    self.origins[c2] = f"new cog {cls} in {self.where} at line {e.span.line}"
                params = [p.name for p in info.decl.params]
                vals = dict(zip(params, (self.value(env, a) for a in args)))
                fields = []
                for n, t in info.field_types.items():
                    if n in vals:
                        fields.append((n, vals[n]))
                    else:
                        fields.append((n, UNIT if F.is_primitive(t) else self.var()))
                return ObjRec(c2, tuple(fields)), NULL, env
            case F.AsyncCall(recv, meth, args):
                cls, r, ss, x, c2 = self.call(env, recv, meth, args)
                f = self.fut()
                env = env.copy()
                env.futs[f] = FutEntry(FutRec(c2, x), AsyncInvk(cls, meth, r, ss, x))
                return f, NULL, env
            case F.SyncCall(recv, meth, args):
                cls, r, ss, x, _ = self.call(env, recv, meth, args)
                return x, par_all([SyncInvk(cls, meth, r, ss, x), env.unsync()]), env
        return self.pure(env, e), NULL, env

    # statements
    def stmt(self, env: Env, cog: str, s) -> tuple[Contract, Env]:
        match s:
            case F.Skip():
                return NULL, env
            case F.SeqS(a, b):
                c1, env = self.stmt(env, cog, a)
                c2, env = self.stmt(env, cog, b)
                return seq(c1, c2), env
            case F.Return(v):
                self.eq(self.value(env, v), env.vars["destiny"])
                return NULL, env
            case F.Await(fe):
                f = self.pure(env, fe)
                _, c, env = self.synchronise(env, f, cog, True)
                return c, env
            case F.If(_, t, e):
                c1, env1 = self.stmt(env.copy(), cog, t)
                c2, env2 = self.stmt(env.copy(), cog, e if e is not None else F.Skip())
                return Plus(c1, c2), self.merge(env, env1, env2)
            case F.Assign(target, rhs):
                v, c, env = self.z(env, cog, rhs)
                if target is None:
                    return c, env
                env = env.copy()
                name = target.name
                if isinstance(target, F.Var) and name in env.vars:
                    if F.is_future(env.var_types[name]):
                        if isinstance(v, FName):
                            env.vars[name] = v
                        else:
                            f = env.vars[name]
                            env.futs[f] = FutEntry(v, NULL)
                    else:
                        env.vars[name] = self.header_rec(v, env)
                else:
                    self.eq(env.this_fields[name], self.header_rec(v, env))
                return c, env
        raise InternalError(f"unexpected statement {s!r}")

    def merge(self, base: Env, e1: Env, e2: Env) -> Env:
        """Join the environments of two branches.

        Variables keep equal records; futures reachable from a variable in
        either branch are unified into one entry that keeps every pending
        contract, so no unsynchronised invocation is lost at the join.
        """
        parent: dict = {}

        def find(f):
            while parent.get(f, f) != f:
                f = parent[f]
            return f

        def union(a, b):
            a, b = find(a), find(b)
            if a != b:
                parent[b] = a

        out = base.copy()
        out.futs = {}
        for name in base.vars:
            v1, v2 = e1.vars[name], e2.vars[name]
            if isinstance(v1, FName):
                union(v1, v2)
                out.vars[name] = v1
            else:
                self.eq(v1, v2)
                out.vars[name] = v1
        groups: dict = {}
        for env in (e1, e2):
            for f, entry in env.futs.items():
                groups.setdefault(find(f), []).append(entry)
        for root, entries in groups.items():
            rec = entries[0].rec
            for en in entries[1:]:
                self.eq(rec, en.rec)
            pending: list = []
            for en in entries:
                if not en.checked and en.contract not in pending:
                    pending.append(en.contract)
            checked = all(en.checked for en in entries)
            contract = NULL
            for c in pending:
                contract = c if contract is NULL else Plus(contract, c)
            out.futs[root] = FutEntry(rec, NULL if checked else contract, checked)
        for name, v in out.vars.items():
            if isinstance(v, FName):
                out.vars[name] = find(v)
        if out.this_fields is not None:
            out.this_fields = {n: find(v) if isinstance(v, FName) else v for n, v in out.this_fields.items()}
        return out

    # declarations
    def method(self, cls: str, m: F.MethodDecl) -> MethodContract:
        info = self.tp.classes[cls]
        c = self.cog()
        self.where = f"{cls}.{m.name}"
        env = Env({}, {}, {}, {}, cls)
        for n, t in info.field_types.items():
            env.this_fields[n] = self.slot(t, env)
        this_rec = ObjRec(c, tuple((n, self.header_rec(v, env)) for n, v in env.this_fields.items()))
        env.vars["this"] = this_rec
        params = []
        for p in m.sig.params:
            env.vars[p.name] = self.slot(p.type, env)
            env.var_types[p.name] = p.type
            params.append(self.header_rec(env.vars[p.name], env))
        for d in m.locals:
            env.vars[d.name] = self.slot(d.type, env)
            env.var_types[d.name] = d.type
        z = self.var()
        env.vars["destiny"] = z
        self.sigs[(cls, m.name)] = (this_rec, tuple(params), z)
        body, env2 = self.stmt(env, c, self.tp.body(cls, m.name))
        return MethodContract(cls, m.name, this_rec, tuple(params), body, env2.unsync(), z)

    def main(self) -> tuple[Contract, Contract]:
        p = self.tp.program
        self.where = "main"
        env = Env({}, None, {}, {}, None)
        for d in p.main_locals:
            env.vars[d.name] = self.slot(d.type, env)
            env.var_types[d.name] = d.type
        env.vars["destiny"] = self.var()
        body, env2 = self.stmt(env, START, p.main_body)
        return body, env2.unsync()

    def program(self) -> InferenceResult:
        cct = {}
        for c in self.tp.program.classes:
            for m in c.methods:
                cct[(c.name, m.name)] = self.method(c.name, m)
        main = self.main()
        return InferenceResult(cct, main, self.constraints, self.sigs, self.origins)


def infer_program(tp: F.TypedProgram) -> InferenceResult:
    return Inferrer(tp).program()


# ---------------------------------------------------------------------------
# solver


class Substitution:
    def __init__(self):
        self.recs: dict[str, Record] = {}
        self.cogs: dict[str, str] = {}

    def cog(self, c: str) -> str:
        path = []
        while c in self.cogs:
            path.append(c)
            c = self.cogs[c]
        for p in path:
            self.cogs[p] = c
        return c

    def walk(self, r: Record) -> Record:
        while isinstance(r, RecVar) and r.name in self.recs:
            r = self.recs[r.name]
        return r

    def resolve(self, r: Record) -> Record:
        r = self.walk(r)
        if isinstance(r, ObjRec):
            return ObjRec(self.cog(r.cog), tuple((k, self.resolve(v)) for k, v in r.fields))
        if isinstance(r, FutRec):
            return FutRec(self.cog(r.cog), self.resolve(r.inner))
        return r

    def method(self, mc: MethodContract) -> MethodContract:
        return MethodContract(mc.cls, mc.meth, self.resolve(mc.recv), tuple(self.resolve(a) for a in mc.args),
                              _resolve_contract(mc.sync, self), _resolve_contract(mc.unsync, self),
                              self.resolve(mc.ret))


def _resolve_contract(c: Contract, s: Substitution) -> Contract:
    if isinstance(c, Null):
        return c
    if isinstance(c, NullDep):
        return NullDep(s.cog(c.c1), s.cog(c.c2), c.aw)
    if isinstance(c, (SyncInvk, AsyncInvk)):
        return type(c)(c.cls, c.meth, s.resolve(c.recv), tuple(s.resolve(a) for a in c.args), s.resolve(c.ret))
    if isinstance(c, AsyncInvkDep):
        return AsyncInvkDep(_resolve_contract(c.inv, s), s.cog(c.c1), s.cog(c.c2), c.aw)
    return type(c)(_resolve_contract(c.left, s), _resolve_contract(c.right, s))


class Solver:
    def __init__(self, sigs: dict):
        self.sigs = sigs
        self.s = Substitution()
        self.fresh: set[str] = set()
        self.changed = False
        self.n = 0

    def bind_cog(self, a: str, b: str):
        if a == START:
            raise UnificationError("cannot rebind the start cog")
        self.s.cogs[a] = b
        if a not in self.fresh:
            self.changed = True

    def unify_cog(self, a: str, b: str):
        a, b = self.s.cog(a), self.s.cog(b)
        if a == b:
            return
        if a == START:
            a, b = b, a
        elif b != START and b in self.fresh and a not in self.fresh:
            a, b = b, a
        self.bind_cog(a, b)

    def occurs(self, name: str, r: Record) -> bool:
        r = self.s.walk(r)
        if isinstance(r, RecVar):
            return r.name == name
        if isinstance(r, ObjRec):
            return any(self.occurs(name, v) for _, v in r.fields)
        if isinstance(r, FutRec):
            return self.occurs(name, r.inner)
        return False

    def bind_rec(self, name: str, r: Record):
        if self.occurs(name, r):
            raise OccursError(f"record variable {name} occurs in {self.s.resolve(r)}: recursive object structure")
        self.s.recs[name] = r
        if name not in self.fresh:
            self.changed = True

    def unify(self, a: Record, b: Record):
        a, b = self.s.walk(a), self.s.walk(b)
        if a == b:
            return
        if isinstance(a, RecVar) and isinstance(b, RecVar):
            if b.name in self.fresh and a.name not in self.fresh:
                a, b = b, a
            self.bind_rec(a.name, b)
        elif isinstance(a, RecVar):
            self.bind_rec(a.name, b)
        elif isinstance(b, RecVar):
            self.bind_rec(b.name, a)
        elif isinstance(a, UnitRec) and isinstance(b, UnitRec):
            return
        elif isinstance(a, ObjRec) and isinstance(b, ObjRec):
            ka, kb = [k for k, _ in a.fields], [k for k, _ in b.fields]
            if sorted(ka) != sorted(kb):
                raise UnificationError(f"record shapes differ: {self.s.resolve(a)} vs {self.s.resolve(b)}")
            self.unify_cog(a.cog, b.cog)
            db = dict(b.fields)
            for k, v in a.fields:
                self.unify(v, db[k])
        elif isinstance(a, FutRec) and isinstance(b, FutRec):
            self.unify_cog(a.cog, b.cog)
            self.unify(a.inner, b.inner)
        else:
            raise UnificationError(f"record shapes differ: {self.s.resolve(a)} vs {self.s.resolve(b)}")

    def instantiate(self, key) -> tuple:
        recv, args, ret = self.sigs[key]
        rs = [self.s.resolve(r) for r in (recv, *args, ret)]
        cogs, vars_ = {}, {}
        for r in rs:
            for c in record_cogs(r):
                if c != START and c not in cogs:
                    self.n += 1
                    cogs[c] = f"i{self.n}"
            for v in record_vars(r):
                if v not in vars_:
                    self.n += 1
                    vars_[v] = RecVar(f"I{self.n}")
        self.fresh.update(cogs.values())
        self.fresh.update(v.name for v in vars_.values())
        return tuple(subst_record(r, cogs, vars_) for r in rs)

    def solve(self, constraints: list) -> Substitution:
        su = []
        for c in constraints:
            if isinstance(c, CogEq):
                self.unify_cog(c.a, c.b)
            elif isinstance(c, RecEq):
                self.unify(c.a, c.b)
            else:
                su.append(c)
        bound = max(4, 4 * len(constraints))
        for _ in range(bound):
            self.changed = False
            for c in su:
                inst = self.instantiate(c.key)
                for x, y in zip(inst, (c.recv, *c.args, c.ret)):
                    self.unify(x, y)
            if not self.changed:
                return self.s
        raise DivergenceError(f"semi-unification did not stabilise within {bound} rounds")


def solve(constraints: list, sigs: dict) -> Substitution:
    return Solver(sigs).solve(constraints)


@dataclass
class SolvedProgram:
    cct: dict
    main: tuple
    result: InferenceResult
    warnings: list = field(default_factory=list)
    origins: dict = field(default_factory=dict)

    def method_list(self) -> list[str]:
        return [f"{c}.{m}" for c, m in self.cct]

    def show_main(self) -> str:
        names = main_display_names(self.main)
        recs: dict = {}
        for v in contract_vars(self.main[0]) + contract_vars(self.main[1]):
            recs.setdefault(v, var_display(len(recs)))
        sync, unsync = (show_contract(c, names, recs) for c in self.main)
        return f"<{sync}, {unsync}>"

    def show_cct(self) -> list[str]:
        return [show_method_contract(mc) for mc in self.cct.values()]


def main_display_names(main: tuple) -> dict:
    out: dict = {}
    for c in contract_cogs(main[0]) + contract_cogs(main[1]):
        if c != START and c not in out:
            out[c] = f"c{len(out) + 1}"
    return out


def analyse(tp: F.TypedProgram) -> SolvedProgram:
    """Infer, solve and apply the substitution."""
    res = infer_program(tp)
    s = solve(res.constraints, res.signatures)
    cct = {k: s.method(mc) for k, mc in res.cct.items()}
    main = (_resolve_contract(res.main[0], s), _resolve_contract(res.main[1], s))
    warnings = [f"{k[0]}.{k[1]}: header names are not linear" for k, mc in cct.items()
                if not mc.is_linear_header()]
    origins: dict = {}
    for k, where in res.origins.items():
        origins.setdefault(s.cog(k), where)
    return SolvedProgram(cct, main, res, warnings, origins)
