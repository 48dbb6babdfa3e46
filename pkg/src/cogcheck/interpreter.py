"""Small-step interpreter over runtime configurations, with schedule exploration."""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterator

from . import frontend as F
from .contract_core import Dep, get_closure
from .errors import ResourceLimit

# ---------------------------------------------------------------------------
# runtime values


@dataclass(frozen=True, order=True)
class Obj:
    id: int

    def __str__(self):
        return "start" if self.id == 0 else f"o{self.id}"


@dataclass(frozen=True, order=True)
class Fut:
    id: int

    def __str__(self):
        return "f_start" if self.id == 0 else f"f{self.id}"


class _Bottom:
    def __repr__(self):
        return "⊥"


BOT = _Bottom()
UNIT = ()


def cog_name(c: int) -> str:
    return "start" if c == 0 else f"c{c}"


def show_value(v) -> str:
    if v is BOT:
        return "⊥"
    if v is None:
        return "null"
    if v == UNIT and isinstance(v, tuple):
        return "unit"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


@dataclass(frozen=True)
class ValLit:
    """A runtime value placed back into statement position (`x = v`)."""

    value: object


@dataclass(frozen=True)
class Cont:
    fut: Fut


@dataclass(frozen=True)
class Proc:
    locals: tuple  # ((name, value), ...), destiny first
    stmts: tuple

    @property
    def destiny(self) -> Fut:
        return self.locals[0][1]

    def lookup(self, name):
        for k, v in self.locals:
            if k == name:
                return True, v
        return False, None

    def assign(self, name, value) -> "Proc":
        return Proc(tuple((k, value if k == name else v) for k, v in self.locals), self.stmts)

    def extend(self, name, value) -> "Proc":
        return Proc(self.locals + ((name, value),), self.stmts)

    def then(self, stmts: tuple) -> "Proc":
        return Proc(self.locals, stmts)


@dataclass(frozen=True)
class ObjState:
    cls: str | None
    cog: int
    fields: tuple  # ((name, value), ...)
    active: Proc | None = None
    queue: tuple = ()

    def field(self, name):
        for k, v in self.fields:
            if k == name:
                return True, v
        return False, None

    def set_field(self, name, value) -> "ObjState":
        return replace(self, fields=tuple((k, value if k == name else v) for k, v in self.fields))


@dataclass(frozen=True)
class Invoc:
    obj: Obj
    fut: Fut
    meth: str
    args: tuple


@dataclass
class Config:
    objects: dict  # Obj -> ObjState, in creation order (so sorted by id)
    futures: dict  # Fut -> value or BOT
    cogs: dict  # int -> Obj | None
    invocs: tuple = ()
    next_obj: int = 1
    next_cog: int = 1
    next_fut: int = 1
    main_final: tuple | None = None  # locals of the finished main block

    def copy(self) -> "Config":
        return Config(dict(self.objects), dict(self.futures), dict(self.cogs), self.invocs,
                      self.next_obj, self.next_cog, self.next_fut, self.main_final)

    def fresh_obj(self) -> Obj:
        o = Obj(self.next_obj)
        self.next_obj += 1
        return o

    def fresh_cog(self) -> int:
        c = self.next_cog
        self.next_cog += 1
        return c

    def fresh_fut(self) -> Fut:
        f = Fut(self.next_fut)
        self.next_fut += 1
        return f

    def processes(self) -> Iterator[tuple[Obj, Proc, bool]]:
        """(object, process, is_active) for every process in the configuration."""
        for o in self.objects:
            st = self.objects[o]
            if st.active is not None:
                yield o, st.active, True
            for p in st.queue:
                yield o, p, False

    def show(self) -> str:
        parts = []
        for o in self.objects:
            st = self.objects[o]
            act = "idle" if st.active is None else _show_proc(st.active)
            q = ", ".join(_show_proc(p) for p in st.queue)
            flds = ", ".join(f"{k}↦{show_value(v)}" for k, v in st.fields)
            parts.append(f"ob({o}, [cog↦{cog_name(st.cog)}{', ' if flds else ''}{flds}], {act}, {{{q}}})")
        for c in sorted(self.cogs):
            a = self.cogs[c]
            parts.append(f"cog({cog_name(c)}, {a if a is not None else 'ε'})")
        for f in sorted(self.futures):
            parts.append(f"fut({f}, {show_value(self.futures[f])})")
        for i in self.invocs:
            parts.append(f"invoc({i.obj}, {i.fut}, {i.meth}, ({', '.join(map(show_value, i.args))}))")
        return "\n".join(parts)


def _show_proc(p: Proc) -> str:
    head = p.stmts[0] if p.stmts else None
    if head is None:
        s = "ε"
    elif isinstance(head, Cont):
        s = f"cont({head.fut})"
    else:
        s = F.show_stmt(_printable(head))[0].strip()
    more = " ..." if len(p.stmts) > 1 else ""
    return f"{{destiny↦{p.destiny} | {s}{more}}}"


def _printable(s):
    if isinstance(s, F.Assign) and isinstance(s.rhs, ValLit):
        return F.Assign(s.target, F.Var(show_value(s.rhs.value)))
    return s


@dataclass(frozen=True)
class Label:
    rule: str
    obj: Obj
    fut: Fut | None = None

    def __str__(self):
        return f"{self.rule} obj={self.obj}" + (f" fut={self.fut}" if self.fut is not None else "")

    def json(self) -> dict:
        return {"rule": self.rule, "obj": str(self.obj), "fut": None if self.fut is None else str(self.fut)}


class EvalError(Exception):
    """Expression evaluation got stuck (⊥ operand, null receiver, division by zero)."""


# ---------------------------------------------------------------------------
# the machine


def _flat(s) -> tuple:
    return tuple(F.flatten_seq(s))


class Machine:
    def __init__(self, tp: F.TypedProgram):
        self.tp = tp
        self._bodies: dict = {}

    # -- setup

    def init_config(self) -> Config:
        prog = self.tp.program
        locs = ((("destiny", Fut(0)),) + tuple((p.name, BOT) for p in prog.main_locals))
        main = Proc(locs, _flat(prog.main_body))
        cn = Config({Obj(0): ObjState(None, 0, (), main, ())}, {Fut(0): BOT}, {0: Obj(0)})
        return _settle(cn, Obj(0))

    def body(self, cls: str, meth: str) -> tuple:
        key = (cls, meth)
        if key not in self._bodies:
            self._bodies[key] = _flat(self.tp.body(cls, meth))
        return self._bodies[key]

    def bind(self, o: Obj, f: Fut, meth: str, args: tuple, cls: str) -> Proc:
        md = self.tp.method(cls, meth)
        locs = (("destiny", f),) + tuple((p.name, v) for p, v in zip(md.sig.params, args)) + \
            tuple((p.name, BOT) for p in md.locals)
        return Proc(locs, self.body(cls, meth))

    def atts(self, cls: str, args: tuple) -> tuple:
        decl = self.tp.classes[cls].decl
        return tuple((p.name, v) for p, v in zip(decl.params, args)) + tuple((p.name, BOT) for p in decl.fields)

    # -- evaluation

    def eval(self, e, o: Obj, st: ObjState, p: Proc):
        if isinstance(e, F.IntLit):
            return e.value
        if isinstance(e, F.BoolLit):
            return e.value
        if isinstance(e, F.NullLit):
            return None
        if isinstance(e, F.UnitLit):
            return UNIT
        if isinstance(e, ValLit):
            return e.value
        if isinstance(e, F.This):
            return o
        if isinstance(e, F.Var):
            ok, v = p.lookup(e.name)
            if not ok:
                ok, v = st.field(e.name)
            if not ok:
                raise EvalError(f"unbound {e.name}")
            return v
        if isinstance(e, F.FieldRef):
            ok, v = st.field(e.name)
            if not ok:
                raise EvalError(f"no field {e.name}")
            return v
        if isinstance(e, F.UnOp):
            v = self.eval(e.operand, o, st, p)
            if e.op == "!" and isinstance(v, bool):
                return not v
            if e.op == "-" and isinstance(v, int) and not isinstance(v, bool):
                return -v
            raise EvalError(f"bad operand for {e.op}")
        if isinstance(e, F.BinOp):
            a = self.eval(e.left, o, st, p)
            b = self.eval(e.right, o, st, p)
            return _binop(e.op, a, b)
        raise EvalError(f"cannot evaluate {type(e).__name__}")

    # -- transitions

    def enabled(self, cn: Config) -> list[tuple[Label, Config]]:
        out: list = []
        for o in cn.objects:
            st = cn.objects[o]
            if st.active is not None:
                try:
                    out += self._step_active(cn, o, st)
                except EvalError:
                    pass
            else:
                if cn.cogs.get(st.cog) == o:
                    nxt = cn.copy()
                    nxt.cogs[st.cog] = None
                    out.append((Label("Release-Cog", o), nxt))
                elif cn.cogs.get(st.cog) is None:
                    for i, q in enumerate(st.queue):
                        nxt = cn.copy()
                        nxt.objects[o] = replace(st, active=q, queue=st.queue[:i] + st.queue[i + 1:])
                        nxt.cogs[st.cog] = o
                        out.append((Label("Activate", o, q.destiny), _settle(nxt, o)))
        for i, inv in enumerate(cn.invocs):
            st = cn.objects[inv.obj]
            nxt = cn.copy()
            p = self.bind(inv.obj, inv.fut, inv.meth, inv.args, st.cls)
            nxt.objects[inv.obj] = replace(st, queue=st.queue + (p,))
            nxt.invocs = cn.invocs[:i] + cn.invocs[i + 1:]
            out.append((Label("Bind-Mtd", inv.obj, inv.fut), nxt))
        return out

    def _step_active(self, cn: Config, o: Obj, st: ObjState) -> list:
        p = st.active
        s, rest = p.stmts[0], p.stmts[1:]

        def upd(new_p: Proc | None, new_st: ObjState | None = None, base: Config | None = None) -> Config:
            nxt = (base or cn).copy()
            ns = new_st or st
            nxt.objects[o] = replace(ns, active=new_p)
            return _settle(nxt, o)

        if isinstance(s, F.Skip):
            return [(Label("Skip", o), upd(p.then(rest)))]
        if isinstance(s, Cont):
            return self._cont(cn, o, st, s.fut)
        if isinstance(s, F.If):
            v = self.eval(s.cond, o, st, p)
            if not isinstance(v, bool):
                raise EvalError("non-boolean condition")
            branch = s.then if v else s.els
            body = _flat(branch) if branch is not None else ()
            return [(Label("Cond-True" if v else "Cond-False", o), upd(p.then(body + rest)))]
        if isinstance(s, F.Return):
            v = self.eval(s.value, o, st, p)
            f = p.destiny
            if cn.futures.get(f, BOT) is not BOT:
                return []
            nxt = cn.copy()
            nxt.futures[f] = v
            nxt.objects[o] = replace(st, active=p.then(rest))
            return [(Label("Return", o, f), _settle(nxt, o))]
        if isinstance(s, F.Await):
            f = self.eval(s.fut, o, st, p)
            if not isinstance(f, Fut):
                raise EvalError("await on a non-future")
            if cn.futures[f] is not BOT:
                return [(Label("Await-True", o, f), upd(p.then(rest)))]
            nxt = cn.copy()
            nxt.objects[o] = replace(st, active=None, queue=st.queue + (p,))
            return [(Label("Await-False", o, f), nxt)]
        if isinstance(s, F.Assign):
            return self._assign(cn, o, st, p, s, rest, upd)
        raise TypeError(s)

    def _assign(self, cn, o, st, p, s, rest, upd) -> list:
        rhs, tgt = s.rhs, s.target

        def with_value(v) -> tuple:
            return (F.Assign(tgt, ValLit(v)),) + rest if tgt is not None else rest

        if isinstance(rhs, F.Get):
            f = self.eval(rhs.fut, o, st, p)
            if not isinstance(f, Fut):
                raise EvalError("get on a non-future")
            v = cn.futures[f]
            if v is BOT:
                return []
            return [(Label("Read-Fut", o, f), upd(p.then(with_value(v))))]
        if isinstance(rhs, F.New):
            args = tuple(self.eval(a, o, st, p) for a in rhs.args)
            nxt = cn.copy()
            o2 = nxt.fresh_obj()
            if rhs.cog:
                c2 = nxt.fresh_cog()
                nxt.objects[o2] = ObjState(rhs.cls, c2, self.atts(rhs.cls, args))
                nxt.cogs[c2] = o2
                rule = "New-Cog-Object"
            else:
                if cn.cogs.get(st.cog) != o:
                    return []
                nxt.objects[o2] = ObjState(rhs.cls, st.cog, self.atts(rhs.cls, args))
                rule = "New-Object"
            nxt.objects[o] = replace(st, active=p.then(with_value(o2)))
            return [(Label(rule, o), _settle(nxt, o))]
        if isinstance(rhs, F.AsyncCall):
            callee = self.eval(rhs.recv, o, st, p)
            if not isinstance(callee, Obj):
                raise EvalError("call on null")
            args = tuple(self.eval(a, o, st, p) for a in rhs.args)
            nxt = cn.copy()
            f = nxt.fresh_fut()
            nxt.futures[f] = BOT
            nxt.invocs = cn.invocs + (Invoc(callee, f, rhs.meth, args),)
            nxt.objects[o] = replace(st, active=p.then(with_value(f)))
            return [(Label("Async-Call", o, f), _settle(nxt, o))]
        if isinstance(rhs, F.SyncCall):
            return self._sync(cn, o, st, p, s, rest)
        v = self.eval(rhs, o, st, p)
        if tgt is None:
            return [(Label("Skip", o), upd(p.then(rest)))]
        if isinstance(tgt, F.Var) and p.lookup(tgt.name)[0]:
            return [(Label("Assign-Local", o), upd(p.assign(tgt.name, v).then(rest)))]
        if st.field(tgt.name)[0]:
            return [(Label("Assign-Field", o), upd(p.then(rest), st.set_field(tgt.name, v)))]
        raise EvalError(f"unknown assignment target {tgt.name}")

    def _sync(self, cn, o, st, p, s, rest) -> list:
        rhs = s.rhs
        callee = self.eval(rhs.recv, o, st, p)
        if not isinstance(callee, Obj):
            raise EvalError("call on null")
        args = tuple(self.eval(a, o, st, p) for a in rhs.args)
        cst = cn.objects[callee]
        if cst.cog != st.cog:
            tmp = f"$t{len(p.locals)}"
            call = F.Assign(F.Var(tmp), F.AsyncCall(ValLit(callee), rhs.meth, tuple(ValLit(a) for a in args)))
            read = F.Assign(s.target, F.Get(F.Var(tmp)))
            new_p = p.extend(tmp, BOT).then((call, read) + rest)
            nxt = cn.copy()
            nxt.objects[o] = replace(st, active=new_p)
            return [(Label("Rem-Sync-Call", o), nxt)]
        nxt = cn.copy()
        f = nxt.fresh_fut()
        nxt.futures[f] = BOT
        tmp = f"$t{len(p.locals)}"
        waiting = p.extend(tmp, f).then((F.Await(F.Var(tmp)), F.Assign(s.target, F.Get(F.Var(tmp)))) + rest)
        body = self.bind(callee, f, rhs.meth, args, cst.cls)
        body = body.then(body.stmts + (Cont(p.destiny),))
        if callee == o:
            nxt.objects[o] = replace(st, active=body, queue=st.queue + (waiting,))
            return [(Label("Self-Sync-Call", o, f), _settle(nxt, o))]
        if cst.active is not None or cn.cogs.get(st.cog) != o:
            return []
        nxt.objects[o] = replace(st, active=None, queue=st.queue + (waiting,))
        nxt.objects[callee] = replace(cst, active=body)
        nxt.cogs[st.cog] = callee
        return [(Label("Cog-Sync-Call", o, f), _settle(nxt, callee))]

    def _cont(self, cn, o, st, f) -> list:
        if o == callee_of(cn, o, f):
            for i, q in enumerate(st.queue):
                if q.destiny == f:
                    nxt = cn.copy()
                    nxt.objects[o] = replace(st, active=q, queue=st.queue[:i] + st.queue[i + 1:])
                    return [(Label("Self-Sync-Return-Sched", o, f), _settle(nxt, o))]
            return []
        out = []
        for o2 in cn.objects:
            s2 = cn.objects[o2]
            if o2 == o or s2.cog != st.cog or s2.active is not None:
                continue
            for i, q in enumerate(s2.queue):
                if q.destiny == f and cn.cogs.get(st.cog) == o:
                    nxt = cn.copy()
                    nxt.objects[o] = replace(st, active=None)
                    nxt.objects[o2] = replace(s2, active=q, queue=s2.queue[:i] + s2.queue[i + 1:])
                    nxt.cogs[st.cog] = o2
                    out.append((Label("Cog-Sync-Return-Sched", o, f), _settle(nxt, o2)))
        return out


def callee_of(cn: Config, o: Obj, f: Fut) -> Obj | None:
    """Object holding the queued process whose destiny is f, preferring `o` itself."""
    st = cn.objects[o]
    if any(q.destiny == f for q in st.queue):
        return o
    for o2 in cn.objects:
        if any(q.destiny == f for q in cn.objects[o2].queue):
            return o2
    return None


def _settle(cn: Config, o: Obj) -> Config:
    """A process with nothing left to run becomes idle."""
    st = cn.objects[o]
    if st.active is not None and not st.active.stmts:
        if st.active.destiny == Fut(0):
            cn.main_final = st.active.locals
        cn.objects[o] = replace(st, active=None)
    return cn


_ARITH = {"+": lambda a, b: a + b, "-": lambda a, b: a - b, "*": lambda a, b: a * b,
          "<": lambda a, b: a < b, "<=": lambda a, b: a <= b, ">": lambda a, b: a > b,
          ">=": lambda a, b: a >= b}


def _binop(op, a, b):
    if a is BOT or b is BOT:
        raise EvalError("⊥ operand")
    if op == "==":
        return a == b and type(a) is type(b)
    if op == "!=":
        return not (a == b and type(a) is type(b))
    if op in ("&&", "||"):
        if not isinstance(a, bool) or not isinstance(b, bool):
            raise EvalError("non-boolean operand")
        return (a and b) if op == "&&" else (a or b)
    if not all(isinstance(x, int) and not isinstance(x, bool) for x in (a, b)):
        raise EvalError("non-integer operand")
    if op in ("/", "%"):
        if b == 0:
            raise EvalError("division by zero")
        q = abs(a) // abs(b) * (1 if (a >= 0) == (b >= 0) else -1)
        return q if op == "/" else a - b * q
    return _ARITH[op](a, b)


# ---------------------------------------------------------------------------
# soundness, deadlock, circularity


def is_sound(cn: Config) -> bool:
    holders = [o for o in cn.cogs.values() if o is not None]
    if len(holders) != len(set(holders)):
        return False
    active_per_cog: dict = {}
    for o, st in cn.objects.items():
        if st.active is not None:
            if st.cog in active_per_cog:
                return False
            active_per_cog[st.cog] = o
    return all(cn.cogs.get(c) == o for c, o in active_per_cog.items())


def _head(p: Proc):
    return p.stmts[0] if p.stmts else None


def _future_of(m: Machine | None, cn: Config, o: Obj, p: Proc, kind):
    s = _head(p)
    st = cn.objects[o]
    try:
        if kind == "get" and isinstance(s, F.Assign) and isinstance(s.rhs, F.Get):
            f = _eval_simple(s.rhs.fut, o, st, p)
        elif kind == "await" and isinstance(s, F.Await):
            f = _eval_simple(s.fut, o, st, p)
        else:
            return None
    except EvalError:
        return None
    return f if isinstance(f, Fut) else None


def _eval_simple(e, o, st, p):
    if isinstance(e, ValLit):
        return e.value
    if isinstance(e, F.Var):
        ok, v = p.lookup(e.name)
        if ok:
            return v
        ok, v = st.field(e.name)
        if ok:
            return v
    if isinstance(e, F.FieldRef):
        ok, v = st.field(e.name)
        if ok:
            return v
    if isinstance(e, F.This):
        return o
    raise EvalError("not a future expression")


def get_future(cn: Config, o: Obj, p: Proc) -> Fut | None:
    return _future_of(None, cn, o, p, "get")


def await_future(cn: Config, o: Obj, p: Proc) -> Fut | None:
    return _future_of(None, cn, o, p, "await")


def dependencies(cn: Config) -> frozenset:
    """Cog dependencies of a configuration, clause by clause."""
    out: set = set()
    producers: dict = {}
    for o, p, _ in cn.processes():
        producers.setdefault(p.destiny, []).append(o)
    for inv in cn.invocs:
        producers.setdefault(inv.fut, []).append(inv.obj)

    def deps(o, f, aw):
        if f is None or cn.futures.get(f, BOT) is not BOT and not any(i.fut == f for i in cn.invocs):
            return
        c = cog_name(cn.objects[o].cog)
        for o2 in producers.get(f, []):
            out.add(Dep(c, cog_name(cn.objects[o2].cog), aw))

    for o, p, active in cn.processes():
        if active:
            deps(o, get_future(cn, o, p), False)
        deps(o, await_future(cn, o, p), True)
    return frozenset(out)


def has_circularity(cn: Config) -> bool:
    return any(d.c1 == d.c2 and not d.aw for d in get_closure(dependencies(cn)))


def waiting_graph(cn: Config) -> dict:
    """Process-level wait-for edges; each blocked process waits on at most one other."""
    blocked_get: dict = {}
    blocked_await: dict = {}
    for o, p, active in cn.processes():
        g = get_future(cn, o, p) if active else None
        if g is not None and cn.futures.get(g, BOT) is BOT:
            blocked_get[(o, p.destiny)] = g
        a = await_future(cn, o, p)
        if a is not None and cn.futures.get(a, BOT) is BOT:
            blocked_await[(o, p.destiny)] = a
    where: dict = {}
    for o, p, active in cn.processes():
        where[p.destiny] = (o, active)
    for inv in cn.invocs:
        where.setdefault(inv.fut, (inv.obj, False))
    blocked = {**blocked_await, **blocked_get}
    edges: dict = {}
    for node, f in blocked.items():
        if f not in where:
            continue
        o2, active = where[f]
        target = (o2, f)
        if target in blocked:
            edges[node] = target
            continue
        if active:
            continue
        holder = cn.cogs.get(cn.objects[o2].cog)
        if holder is None:
            continue
        hst = cn.objects[holder]
        if hst.active is not None and (holder, hst.active.destiny) in blocked_get:
            edges[node] = (holder, hst.active.destiny)
    return {"edges": edges, "get": set(blocked_get)}


def deadlock_cycle(cn: Config) -> list | None:
    g = waiting_graph(cn)
    edges, gets = g["edges"], g["get"]
    for start in edges:
        seen: list = []
        node = start
        while node in edges and node not in seen:
            seen.append(node)
            node = edges[node]
        if node in seen:
            cycle = seen[seen.index(node):]
            if any(n in gets for n in cycle):
                return cycle
    return None


def is_deadlocked(cn: Config) -> bool:
    return deadlock_cycle(cn) is not None


def is_terminated(cn: Config) -> bool:
    return not cn.invocs and all(st.active is None and not st.queue for st in cn.objects.values())


# ---------------------------------------------------------------------------
# canonical form


class Interner:
    """Maps statement nodes and process shapes to small integers.

    Lookups go by identity first; the node is kept alive so its id cannot be
    recycled while the table exists. A process's shape (everything except
    its object and future names) is cached on the process itself.
    """

    def __init__(self):
        self.by_id: dict = {}
        self.by_value: dict = {}

    def __call__(self, s) -> int:
        hit = self.by_id.get(id(s))
        if hit is not None and hit[0] is s:
            return hit[1]
        n = self.by_value.setdefault(s, len(self.by_value))
        self.by_id[id(s)] = (s, n)
        return n

    def _shape(self, names: list):
        def val(x):
            t = type(x)
            if t is Obj or t is Fut:
                names.append(x)
                return "#"
            if x is BOT:
                return "⊥"
            return (t.__name__, x)
        return val

    def proc(self, p: Proc) -> tuple[int, tuple]:
        c = p.__dict__.get("_shape")
        if c is not None and c[0] is self:
            return c[1], c[2]
        names: list = []
        val = self._shape(names)

        def stmt(s):
            # runtime names only occur in continuations and in the two kinds
            # of assignment the machine builds; everything else is program text
            if isinstance(s, Cont):
                return ("cont", val(s.fut))
            if isinstance(s, F.Assign):
                rhs = s.rhs
                if isinstance(rhs, ValLit):
                    return ("set", self(s.target), val(rhs.value))
                if isinstance(rhs, F.AsyncCall) and isinstance(rhs.recv, ValLit):
                    return ("rcall", self(s.target), val(rhs.recv.value), rhs.meth,
                            tuple(val(a.value) for a in rhs.args))
            return self(s)

        shape = (tuple((k, val(x)) for k, x in p.locals), tuple(stmt(s) for s in p.stmts))
        tid = self.by_value.setdefault(shape, len(self.by_value))
        object.__setattr__(p, "_shape", (self, tid, tuple(names)))
        return tid, tuple(names)

    def obj_state(self, st: ObjState) -> tuple[int, tuple]:
        """Shape id and runtime names (cog first) of an object's state."""
        c = st.__dict__.get("_shape")
        if c is not None and c[0] is self:
            return c[1], c[2]
        names: list = [("cog", st.cog)]
        val = self._shape(names)
        fields = tuple((k, val(x)) for k, x in st.fields)
        parts = []
        for p in (st.active,) + st.queue:
            if p is None:
                parts.append(None)
                continue
            tid, pn = self.proc(p)
            parts.append(tid)
            names.extend(pn)
        shape = ("obj", st.cls, fields, tuple(parts))
        tid = self.by_value.setdefault(shape, len(self.by_value))
        object.__setattr__(st, "_shape", (self, tid, tuple(names)))
        return tid, tuple(names)


def canonical_key(cn: Config, intern: Interner | None = None) -> tuple:
    intern = intern or Interner()
    objs: dict = {}
    futs: dict = {}
    cogs: dict = {0: 0}
    order: list = []

    def obj(o):
        n = objs.get(o)
        if n is None:
            n = objs[o] = len(objs)
            order.append(o)
        return ("o", n)

    def fut(f):
        n = futs.get(f)
        if n is None:
            n = futs[f] = len(futs)
        return ("f", n)

    def cog(c):
        n = cogs.get(c)
        if n is None:
            n = cogs[c] = len(cogs)
        return ("c", n)

    def val(v):
        t = type(v)
        if t is Obj:
            return obj(v)
        if t is Fut:
            return fut(v)
        if v is BOT:
            return ("⊥",)
        return (t.__name__, v)

    def name(x):
        t = type(x)
        if t is Obj:
            return obj(x)
        if t is Fut:
            return fut(x)
        return cog(x[1])

    obj(Obj(0))
    fut(Fut(0))
    out = []
    i = 0
    pending = iter(cn.objects)
    while True:
        while i < len(order):
            o = order[i]
            i += 1
            tid, names = intern.obj_state(cn.objects[o])
            out.append((objs[o], tid) + tuple(name(x) for x in names))
        o = next((o for o in pending if o not in objs), None)
        if o is None:
            break
        obj(o)
    invs = tuple(sorted((obj(i.obj), fut(i.fut), i.meth, tuple(val(a) for a in i.args)) for i in cn.invocs))
    fs = tuple(sorted((futs[f], val(v)) for f, v in cn.futures.items() if f in futs))
    unseen = sum(1 for f in cn.futures if f not in futs)
    holders = tuple(sorted((cogs.get(c, -1), None if h is None else objs.get(h)) for c, h in cn.cogs.items()))
    return (tuple(out), invs, fs, unseen, holders)


# ---------------------------------------------------------------------------
# run and explore


@dataclass
class Trace:
    labels: list
    verdict: str  # terminated | deadlocked | step-limit | stuck
    final: Config
    steps: int

    def main_value(self, name: str):
        """Value of a main-block local in the final configuration."""
        main = [p for o, p, _ in self.final.processes() if p.destiny == Fut(0)]
        locs = dict(main[0].locals if main else self.final.main_final or ())
        return locs.get(name, BOT)


def run(tp: F.TypedProgram, seed: int = 0, max_steps: int = 10_000) -> Trace:
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    m = Machine(tp)
    rng = random.Random(seed)
    cn = m.init_config()
    labels: list = []
    verdict = "step-limit"
    while True:
        if is_deadlocked(cn):
            verdict = "deadlocked"
            break
        if is_terminated(cn):
            verdict = "terminated"
            break
        if len(labels) >= max_steps:
            break
        succ = m.enabled(cn)
        if not succ:
            verdict = "stuck"
            break
        lab, cn = rng.choice(succ)
        labels.append(lab)
    return Trace(labels, verdict, cn, len(labels))


@dataclass
class Exploration:
    deadlock_reachable: bool
    terminating_reachable: bool
    witness: list | None
    witness_config: Config | None
    states: int
    depth: int
    violations: list = field(default_factory=list)
    terminating_witness: list | None = None

    def json(self) -> dict:
        return {"reachable": self.deadlock_reachable, "terminating": self.terminating_reachable,
                "states": self.states, "depth": self.depth,
                "witness": None if self.witness is None else [l.json() for l in self.witness]}


def explore(tp: F.TypedProgram, depth: int, state_cap: int = 200_000, check: bool = False,
            stop_on_deadlock: bool = False) -> Exploration:
    """Breadth-first search of every schedule up to `depth` steps.

    States are merged up to renaming of objects, cogs and futures. With
    `check`, every transition is tested for soundness and for persistence
    of deadlock, and failures are collected in `violations`.
    """
    if depth <= 0:
        raise ValueError("depth must be positive")
    m = Machine(tp)
    intern = Interner()
    init = m.init_config()
    key0 = canonical_key(init, intern)
    parent: dict = {key0: None}
    frontier = deque([(init, key0, 0)])
    witness = wconf = term = None
    violations: list = []
    dead_keys: set = set()

    def path(k):
        out = []
        while parent[k] is not None:
            k, lab = parent[k]
            out.append(lab)
        return out[::-1]

    def inspect(cn, k):
        nonlocal witness, wconf, term
        dead = is_deadlocked(cn)
        if dead:
            dead_keys.add(k)
            if witness is None:
                witness, wconf = path(k), cn
        if term is None and is_terminated(cn):
            term = path(k)
        return dead

    inspect(init, key0)
    while frontier:
        cn, key, d = frontier.popleft()
        if d >= depth or (stop_on_deadlock and witness is not None):
            continue
        src_dead = key in dead_keys
        for lab, nxt in m.enabled(cn):
            if check and not is_sound(nxt):
                violations.append(("soundness", path(key) + [lab]))
            k = canonical_key(nxt, intern)
            if k in parent:
                if check and src_dead and k not in dead_keys:
                    violations.append(("persistence", path(key) + [lab]))
                continue
            parent[k] = (key, lab)
            if len(parent) > state_cap:
                raise ResourceLimit(f"more than {state_cap} states")
            dead = inspect(nxt, k)
            if check and src_dead and not dead:
                violations.append(("persistence", path(k)))
            frontier.append((nxt, k, d + 1))
    return Exploration(witness is not None, term is not None, witness, wconf, len(parent), depth,
                       violations, term)


def init_config(tp: F.TypedProgram) -> Config:
    return Machine(tp).init_config()


def enabled(tp_or_machine, cn: Config) -> list:
    m = tp_or_machine if isinstance(tp_or_machine, Machine) else Machine(tp_or_machine)
    return m.enabled(cn)
