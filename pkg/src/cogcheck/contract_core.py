"""Future records, contracts, constraints and the lam algebra.

Cog names are plain strings.  `start` is the only cog constant; every other
cog name is either bound by a method header or free (a `new cog` site).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Union

import networkx as nx

from .errors import ResourceLimit

START = "start"


# ---------------------------------------------------------------------------
# future records


@dataclass(frozen=True)
class UnitRec:
    def __str__(self) -> str:
        return "_"


@dataclass(frozen=True)
class RecVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ObjRec:
    cog: str
    fields: tuple = ()  # tuple of (field name, record)

    def field(self, name: str):
        for k, v in self.fields:
            if k == name:
                return v
        raise KeyError(name)

    def __str__(self) -> str:
        parts = [f"cog:{self.cog}"] + [f"{k}:{v}" for k, v in self.fields]
        return "[" + ", ".join(parts) + "]"


@dataclass(frozen=True)
class FutRec:
    cog: str
    inner: "Record"

    def __str__(self) -> str:
        return f"{self.cog}↷{self.inner}"


Record = Union[UnitRec, RecVar, ObjRec, FutRec]
UNIT = UnitRec()


def record_cogs(r: Record) -> list[str]:
    """Cog names in left-to-right order, with repetitions."""
    out: list[str] = []

    def go(x):
        if isinstance(x, ObjRec):
            out.append(x.cog)
            for _, v in x.fields:
                go(v)
        elif isinstance(x, FutRec):
            out.append(x.cog)
            go(x.inner)

    go(r)
    return out


def record_vars(r: Record) -> list[str]:
    out: list[str] = []

    def go(x):
        if isinstance(x, RecVar):
            out.append(x.name)
        elif isinstance(x, ObjRec):
            for _, v in x.fields:
                go(v)
        elif isinstance(x, FutRec):
            go(x.inner)

    go(r)
    return out


def subst_record(r: Record, cogs: dict | None = None, recs: dict | None = None) -> Record:
    cogs = cogs or {}
    recs = recs or {}
    if isinstance(r, RecVar):
        return recs.get(r.name, r)
    if isinstance(r, ObjRec):
        return ObjRec(cogs.get(r.cog, r.cog), tuple((k, subst_record(v, cogs, recs)) for k, v in r.fields))
    if isinstance(r, FutRec):
        return FutRec(cogs.get(r.cog, r.cog), subst_record(r.inner, cogs, recs))
    return r


def root_cog(r: Record) -> str | None:
    if isinstance(r, (ObjRec, FutRec)):
        return r.cog
    return None


# ---------------------------------------------------------------------------
# contracts


class Contract:
    __slots__ = ()


@dataclass(frozen=True)
class Null(Contract):
    pass


NULL = Null()


@dataclass(frozen=True)
class NullDep(Contract):
    c1: str
    c2: str
    aw: bool = False


@dataclass(frozen=True)
class SyncInvk(Contract):
    cls: str
    meth: str
    recv: Record
    args: tuple
    ret: Record


@dataclass(frozen=True)
class AsyncInvk(Contract):
    cls: str
    meth: str
    recv: Record
    args: tuple
    ret: Record


@dataclass(frozen=True)
class AsyncInvkDep(Contract):
    inv: AsyncInvk
    c1: str
    c2: str
    aw: bool = False


@dataclass(frozen=True)
class Seq(Contract):
    left: Contract
    right: Contract


@dataclass(frozen=True)
class Plus(Contract):
    left: Contract
    right: Contract


@dataclass(frozen=True)
class Par(Contract):
    left: Contract
    right: Contract


def seq(a: Contract, b: Contract) -> Contract:
    # 0 is neutral for sequencing on both sides (checked against the lam semantics)
    if isinstance(b, Null):
        return a
    if isinstance(a, Null):
        return b
    return Seq(a, b)


def par_all(items: Iterable[Contract]) -> Contract:
    items = [c for c in items if not isinstance(c, Null)]
    if not items:
        return NULL
    acc = items[0]
    for c in items[1:]:
        acc = Par(acc, c)
    return acc


def with_dep(c: Contract, c1: str, c2: str, aw: bool) -> Contract:
    """ℂ.(c1,c2)^[a] for the contract stored in a future entry."""
    if isinstance(c, Null):
        return NullDep(c1, c2, aw)
    if isinstance(c, AsyncInvk):
        return AsyncInvkDep(c, c1, c2, aw)
    if isinstance(c, Plus):
        return Plus(with_dep(c.left, c1, c2, aw), with_dep(c.right, c1, c2, aw))
    raise ValueError(f"no dependency form for {type(c).__name__}")


def contract_map(c: Contract, cogs: dict | None = None, recs: dict | None = None) -> Contract:
    cogs = cogs or {}
    recs = recs or {}
    cg = lambda x: cogs.get(x, x)  # noqa: E731
    rc = lambda r: subst_record(r, cogs, recs)  # noqa: E731
    if isinstance(c, Null):
        return c
    if isinstance(c, NullDep):
        return NullDep(cg(c.c1), cg(c.c2), c.aw)
    if isinstance(c, (SyncInvk, AsyncInvk)):
        return type(c)(c.cls, c.meth, rc(c.recv), tuple(rc(a) for a in c.args), rc(c.ret))
    if isinstance(c, AsyncInvkDep):
        return AsyncInvkDep(contract_map(c.inv, cogs, recs), cg(c.c1), cg(c.c2), c.aw)
    if isinstance(c, (Seq, Plus, Par)):
        return type(c)(contract_map(c.left, cogs, recs), contract_map(c.right, cogs, recs))
    raise TypeError(c)


def contract_records(c: Contract) -> Iterator[Record]:
    if isinstance(c, (SyncInvk, AsyncInvk)):
        yield c.recv
        yield from c.args
        yield c.ret
    elif isinstance(c, AsyncInvkDep):
        yield from contract_records(c.inv)
    elif isinstance(c, (Seq, Plus, Par)):
        yield from contract_records(c.left)
        yield from contract_records(c.right)


def contract_cogs(c: Contract) -> list[str]:
    out: list[str] = []
    if isinstance(c, NullDep):
        out += [c.c1, c.c2]
    elif isinstance(c, (SyncInvk, AsyncInvk)):
        for r in contract_records(c):
            out += record_cogs(r)
    elif isinstance(c, AsyncInvkDep):
        out += contract_cogs(c.inv) + [c.c1, c.c2]
    elif isinstance(c, (Seq, Plus, Par)):
        out += contract_cogs(c.left) + contract_cogs(c.right)
    return out


def contract_vars(c: Contract) -> list[str]:
    out: list[str] = []
    for r in contract_records(c):
        out += record_vars(r)
    return out


def invocations(c: Contract) -> Iterator[Contract]:
    """Every invocation atom (sync, async, async-with-dependency)."""
    if isinstance(c, (SyncInvk, AsyncInvk, AsyncInvkDep)):
        yield c
    elif isinstance(c, (Seq, Plus, Par)):
        yield from invocations(c.left)
        yield from invocations(c.right)


def invocation_target(c: Contract) -> tuple[str, str]:
    inv = c.inv if isinstance(c, AsyncInvkDep) else c
    return inv.cls, inv.meth


@dataclass(frozen=True)
class MethodContract:
    cls: str
    meth: str
    recv: Record
    args: tuple
    sync: Contract
    unsync: Contract
    ret: Record

    @property
    def key(self) -> tuple[str, str]:
        return (self.cls, self.meth)

    def header_cogs(self) -> list[str]:
        out = record_cogs(self.recv)
        for a in self.args:
            out += record_cogs(a)
        return out

    def header_vars(self) -> list[str]:
        out = record_vars(self.recv)
        for a in self.args:
            out += record_vars(a)
        return out

    def header_names(self) -> list[str]:
        return self.header_cogs() + self.header_vars()

    def is_linear_header(self) -> bool:
        names = self.header_names()
        return len(names) == len(set(names))

    def free_cogs(self) -> list[str]:
        bound = set(self.header_cogs())
        seen: list[str] = []
        for c in contract_cogs(self.sync) + contract_cogs(self.unsync) + record_cogs(self.ret):
            if c not in bound and c not in seen and c != START:
                seen.append(c)
        return seen

    def free_vars(self) -> list[str]:
        bound = set(self.header_vars())
        seen: list[str] = []
        for v in contract_vars(self.sync) + contract_vars(self.unsync) + record_vars(self.ret):
            if v not in bound and v not in seen:
                seen.append(v)
        return seen

    def mapped(self, cogs: dict | None = None, recs: dict | None = None) -> "MethodContract":
        sr = lambda r: subst_record(r, cogs, recs)  # noqa: E731
        return MethodContract(self.cls, self.meth, sr(self.recv), tuple(sr(a) for a in self.args),
                              contract_map(self.sync, cogs, recs), contract_map(self.unsync, cogs, recs),
                              sr(self.ret))


# ---------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class CogEq:
    a: str
    b: str


@dataclass(frozen=True)
class RecEq:
    a: Record
    b: Record


@dataclass(frozen=True)
class SemiUnif:
    """C.m ⪯ recv(args) -> ret; the lhs is looked up in the signature table."""

    key: tuple
    recv: Record
    args: tuple
    ret: Record


Constraint = Union[CogEq, RecEq, SemiUnif]


# ---------------------------------------------------------------------------
# display helpers


def prime_name(base: str, i: int) -> str:
    if i <= 3:
        return base + "'" * i
    return f"{base}{i}"


_VAR_LETTERS = "XYZWVU"


def var_display(i: int) -> str:
    if i < len(_VAR_LETTERS):
        return _VAR_LETTERS[i]
    return f"X{i}"


def show_record(r: Record, cogs: dict | None = None, recs: dict | None = None) -> str:
    return str(subst_record(r, cogs, {k: RecVar(v) for k, v in (recs or {}).items()}))


_PREC = {Plus: 1, Seq: 2, Par: 3}


def show_contract(c: Contract, cogs: dict | None = None, recs: dict | None = None) -> str:
    cogs = cogs or {}
    cg = lambda x: cogs.get(x, x)  # noqa: E731
    sr = lambda r: show_record(r, cogs, recs)  # noqa: E731

    def dep(c1, c2, aw):
        return f".({cg(c1)},{cg(c2)})" + ("^a" if aw else "")

    def inv(x, sep):
        args = ", ".join(sr(a) for a in x.args)
        return f"{x.cls}{sep}{x.meth} {sr(x.recv)}({args}) -> {sr(x.ret)}"

    def go(x, ctx):
        if isinstance(x, Null):
            return "0"
        if isinstance(x, NullDep):
            return "0" + dep(x.c1, x.c2, x.aw)
        if isinstance(x, SyncInvk):
            return inv(x, ".")
        if isinstance(x, AsyncInvk):
            return inv(x, "!")
        if isinstance(x, AsyncInvkDep):
            return inv(x.inv, "!") + " " + dep(x.c1, x.c2, x.aw)
        op = {Plus: " + ", Seq: " ; ", Par: " || "}[type(x)]
        p = _PREC[type(x)]
        s = go(x.left, p) + op + go(x.right, p + 1)
        return f"({s})" if p < ctx else s

    return go(c, 0)


def method_display_names(mc: MethodContract) -> tuple[dict, dict]:
    """Canonical display names: header cogs c, c', ..; free cogs continue the priming."""
    cogs: dict[str, str] = {}
    for c in mc.header_cogs() + mc.free_cogs():
        if c not in cogs and c != START:
            cogs[c] = prime_name("c", len(cogs))
    recs: dict[str, str] = {}
    for v in mc.header_vars() + mc.free_vars():
        if v not in recs:
            recs[v] = var_display(len(recs))
    return cogs, recs


def show_method_contract(mc: MethodContract, canonical: bool = True) -> str:
    cogs, recs = method_display_names(mc) if canonical else ({}, {})
    sr = lambda r: show_record(r, cogs, recs)  # noqa: E731
    args = ", ".join(sr(a) for a in mc.args)
    body = f"<{show_contract(mc.sync, cogs, recs)}, {show_contract(mc.unsync, cogs, recs)}>"
    return f"{mc.cls}.{mc.meth} : {sr(mc.recv)}({args}) {{ {body} }} {sr(mc.ret)}"


# ---------------------------------------------------------------------------
# lams


class Dep(NamedTuple):
    c1: str
    c2: str
    aw: bool = False

    def __str__(self) -> str:
        return f"({self.c1},{self.c2})" + ("^a" if self.aw else "")


Relation = frozenset  # frozenset[Dep]
Lam = frozenset  # frozenset[Relation]

EMPTY_REL: frozenset = frozenset()
ZERO: frozenset = frozenset({EMPTY_REL})


def lam(*relations: Iterable) -> frozenset:
    """Build a lam from iterables of (c1, c2[, aw]) tuples."""
    return frozenset(frozenset(Dep(*d) for d in rel) for rel in relations)


def lam_extend(l: frozenset, dep: Dep) -> frozenset:
    return frozenset(rel | {dep} for rel in l)


def lam_parallel(l1: frozenset, l2: frozenset) -> frozenset:
    return frozenset(a | b for a in l1 for b in l2)


def lam_union(l1: frozenset, l2: frozenset) -> frozenset:
    return l1 | l2


def reduce_lam(l: frozenset) -> frozenset:
    """Drop relations strictly contained in another relation of the same lam.

    The result is equivalent under the preorder and has the same circularities.
    """
    rels = sorted(l, key=len, reverse=True)
    keep: list = []
    for r in rels:
        if not any(r < k for k in keep):
            keep.append(r)
    return frozenset(keep)


def lam_names(l: frozenset) -> set[str]:
    out: set[str] = set()
    for rel in l:
        for d in rel:
            out.add(d.c1)
            out.add(d.c2)
    return out


def rename_lam(l: frozenset, m: dict) -> frozenset:
    return frozenset(frozenset(Dep(m.get(d.c1, d.c1), m.get(d.c2, d.c2), d.aw) for d in rel) for rel in l)


class LamPair(NamedTuple):
    present: frozenset
    future: frozenset

    def names(self) -> set[str]:
        return lam_names(self.present) | lam_names(self.future)

    def renamed(self, m: dict) -> "LamPair":
        return LamPair(rename_lam(self.present, m), rename_lam(self.future, m))

    def reduced(self) -> "LamPair":
        return LamPair(reduce_lam(self.present), reduce_lam(self.future))

    def size(self) -> int:
        return len(self.present) + len(self.future)


ZERO_PAIR = LamPair(ZERO, ZERO)


def pair_extend(p: LamPair, dep: Dep) -> LamPair:
    return LamPair(lam_extend(p.present, dep), p.future)


def pair_parallel(p1: LamPair, p2: LamPair) -> LamPair:
    return LamPair(lam_parallel(p1.present | p1.future, p2.present | p2.future), ZERO)


def lampair_seq(p1: LamPair, p2: LamPair) -> LamPair:
    l1, l1f = p1
    l2, l2f = p2
    if l2 == ZERO:
        return LamPair(l1, lam_parallel(l1f, l2f))
    return LamPair(l1 | lam_parallel(l2, l1f), lam_parallel(l1f, l2f))


def lampair_plus(p1: LamPair, p2: LamPair) -> LamPair:
    return LamPair(p1.present | p2.present, p1.future | p2.future)


def lift_pair(p: LamPair) -> LamPair:
    """Move everything into the future component: ⟨L, L'⟩ ↦ ⟨0, L ∪ L'⟩."""
    return LamPair(ZERO, p.present | p.future)


def body_pair(sync: LamPair, unsync: LamPair) -> LamPair:
    """Combine a method's synchronised and unsynchronised parts.

    The unsynchronised invocations outlive the body, so they land in the
    future component as a whole, just like an asynchronous invocation does.
    """
    return lampair_seq(sync, lift_pair(unsync)).reduced()


@dataclass(frozen=True)
class ParamLamPair:
    bound: tuple
    pair: LamPair

    def free_names(self) -> list[str]:
        b = set(self.bound)
        return sorted(n for n in self.pair.names() if n not in b)


LamTable = dict  # (cls, meth) -> ParamLamPair


def show_lam(l: frozenset, m: dict | None = None) -> str:
    if l == ZERO:
        return "0"
    m = m or {}
    rels = []
    for rel in sorted(l, key=lambda r: (len(r), sorted(r))):
        deps = sorted(Dep(m.get(d.c1, d.c1), m.get(d.c2, d.c2), d.aw) for d in rel)
        rels.append("{" + ",".join(str(d) for d in deps) + "}")
    return "{" + ",".join(rels) + "}"


def show_pair(p: LamPair, m: dict | None = None) -> str:
    return f"<{show_lam(p.present, m)}, {show_lam(p.future, m)}>"


def param_display_names(p: ParamLamPair) -> dict:
    m: dict[str, str] = {}
    for b in p.bound:
        m.setdefault(b, prime_name("c", len(m)))
    for n in _first_occurrence(p.pair):
        if n not in m and n != START:
            m[n] = prime_name("c", len(m))
    return m


def _first_occurrence(p: LamPair) -> list[str]:
    seen: list[str] = []
    for l in p:
        for rel in sorted(l, key=lambda r: (len(r), sorted(r))):
            for d in sorted(rel):
                for n in (d.c1, d.c2):
                    if n not in seen:
                        seen.append(n)
    return seen


def show_param(p: ParamLamPair) -> str:
    m = param_display_names(p)
    binders = ",".join(m[b] for b in p.bound)
    return f"λ{binders}.{show_pair(p.pair, m)}"


# ---------------------------------------------------------------------------
# preorder and α-equivalence


FREE_NAME_CAP = 24


def _image(rel, k: dict) -> frozenset:
    return frozenset(Dep(k.get(d.c1, d.c1), k.get(d.c2, d.c2), d.aw) for d in rel)


def _search(src: list[str], dst: list[str], rels: list, accept_rel, accept_all) -> bool:
    """Backtracking search for an injection src -> dst.

    Names are assigned so that dependencies become fully known as early as
    possible. After each assignment, `accept_rel(rel, part, k)` is asked
    about every relation whose known part `part` just grew.
    """
    srcset = set(src)
    names_of = [{n for d in rel for n in (d.c1, d.c2) if n in srcset} for rel in rels]
    order: list[str] = []
    left = set(src)
    while left:
        placed = set(order)
        # prefer the name that completes the most dependencies
        best = max(sorted(left), key=lambda n: sum(
            1 for rel in rels for d in rel
            if n in (d.c1, d.c2) and {d.c1, d.c2} & srcset <= placed | {n}))
        order.append(best)
        left.discard(best)
    pos = {n: i + 1 for i, n in enumerate(order)}

    def level(d) -> int:
        return max(pos.get(d.c1, 0), pos.get(d.c2, 0))

    checks: dict[int, list] = {}
    for rel, ns in zip(rels, names_of):
        for lv in sorted({level(d) for d in rel} | {max((pos[n] for n in ns), default=0)}):
            part = frozenset(d for d in rel if level(d) <= lv)
            checks.setdefault(lv, []).append((rel, part))
    k: dict[str, str] = {}
    used: set[str] = set()

    def go(i: int) -> bool:
        for rel, part in checks.get(i, ()):
            if not accept_rel(rel, part, k):
                return False
        if i == len(order):
            return accept_all(k)
        n = order[i]
        for t in dst:
            if t in used:
                continue
            k[n] = t
            used.add(t)
            if go(i + 1):
                return True
            used.discard(t)
            del k[n]
        return False

    return go(0)


def pair_leq(p1: LamPair, p2: LamPair, fixed: Iterable[str] = ()) -> bool:
    """p1 ⋐ p2 with κ the identity on `fixed` and injective elsewhere."""
    fixed = set(fixed) | {START}
    free1 = sorted(n for n in p1.names() if n not in fixed)
    free2 = sorted(n for n in p2.names() if n not in fixed)
    # the identity is always injective; try it before searching
    if all(any(r <= r2 for r2 in p2.present) for r in p1.present) and \
            all(any(r <= r2 for r2 in p2.future) for r in p1.future):
        return True
    if len(free1) > FREE_NAME_CAP:
        raise ResourceLimit(f"preorder check over more than {FREE_NAME_CAP} free names")
    if len(free1) > len(free2):
        return False
    tagged = [(0, r) for r in p1.present] + [(1, r) for r in p1.future]
    targets = (p2.present, p2.future)
    where = {}
    for i, r in tagged:
        where.setdefault(r, set()).add(i)

    def ok(rel, part, k):
        img = _image(part, k)
        return all(any(img <= r2 for r2 in targets[i]) for i in where[rel])

    return _search(free1, free2, list(where), ok, lambda k: True)


def _align(p1: ParamLamPair, p2: ParamLamPair) -> LamPair:
    """p2's pair with its binders renamed to p1's."""
    if len(p1.bound) != len(p2.bound):
        raise ValueError("arity mismatch")
    m = dict(zip(p2.bound, p1.bound))
    clash = {n for n in p2.free_names() if n in set(p1.bound)}
    for i, n in enumerate(sorted(clash)):
        m[n] = f"{n}#{i}"
    return p2.pair.renamed(m)


def preorder_leq(p1: ParamLamPair, p2: ParamLamPair) -> bool:
    return pair_leq(p1.pair, _align(p1, p2), p1.bound)


def alpha_equal(p1: ParamLamPair, p2: ParamLamPair) -> bool:
    q2 = _align(p1, p2).reduced()
    q1 = p1.pair.reduced()
    fixed = set(p1.bound) | {START}
    free1 = sorted(n for n in q1.names() if n not in fixed)
    free2 = sorted(n for n in q2.names() if n not in fixed)
    if len(free1) != len(free2) or len(q1.present) != len(q2.present) or len(q1.future) != len(q2.future):
        return False
    if len(free1) > FREE_NAME_CAP:
        raise ResourceLimit(f"α-equivalence over more than {FREE_NAME_CAP} free names")
    where = {}
    for i, l in enumerate(q1):
        for r in l:
            where.setdefault(r, set()).add(i)

    def ok(rel, part, k):
        img = _image(part, k)
        if part == rel:
            return all(img in q2[i] for i in where[rel])
        return all(any(img <= r2 for r2 in q2[i]) for i in where[rel])

    return _search(free1, free2, list(where), ok, lambda k: q1.renamed(k) == q2)


# ---------------------------------------------------------------------------
# circularity


def relation_cycle(rel: Iterable[Dep]) -> list[str] | None:
    """A cycle containing at least one plain edge, as a list of cog names.

    The get-closure of a relation holds a plain (c,c) exactly when some cycle of
    the dependency graph goes through a plain edge.
    """
    rel = list(rel)
    for d in rel:
        if not d.aw and d.c1 == d.c2:
            return [d.c1, d.c1]
    g = nx.DiGraph()
    g.add_edges_from((d.c1, d.c2) for d in rel)
    comp = {}
    for i, scc in enumerate(nx.strongly_connected_components(g)):
        for n in scc:
            comp[n] = i
    for d in sorted(rel):
        if not d.aw and comp[d.c1] == comp[d.c2]:
            path = nx.shortest_path(g, d.c2, d.c1)
            return [d.c1] + path
    return None


def relation_circular(rel: Iterable[Dep]) -> bool:
    return relation_cycle(rel) is not None


def get_closure(rel: Iterable[Dep]) -> frozenset:
    """Least superset closed under (c,c') plain, (c',c'')^[a] ⇒ (c,c'') plain."""
    out = set(rel)
    changed = True
    while changed:
        changed = False
        plain = [d for d in out if not d.aw]
        for d in plain:
            for e in list(out):
                if e.c1 == d.c2:
                    n = Dep(d.c1, e.c2, False)
                    if n not in out:
                        out.add(n)
                        changed = True
    return frozenset(out)


def brute_force_circular(rel: Iterable[Dep]) -> bool:
    return any(d.c1 == d.c2 and not d.aw for d in get_closure(rel))


def lam_cycle(l: frozenset) -> list[str] | None:
    for rel in sorted(l, key=lambda r: (len(r), sorted(r))):
        cyc = relation_cycle(rel)
        if cyc:
            return cyc
    return None


def circularity(x) -> bool:
    return circularity_witness(x) is not None


def circularity_witness(x) -> list[str] | None:
    if isinstance(x, ParamLamPair):
        x = x.pair
    if isinstance(x, LamPair):
        return lam_cycle(x.present) or lam_cycle(x.future)
    return lam_cycle(x)


# ---------------------------------------------------------------------------
# json


def record_json(r: Record) -> dict:
    if isinstance(r, UnitRec):
        return {"kind": "unit"}
    if isinstance(r, RecVar):
        return {"kind": "var", "name": r.name}
    if isinstance(r, ObjRec):
        return {"kind": "obj", "cog": r.cog, "fields": [[k, record_json(v)] for k, v in r.fields]}
    return {"kind": "fut", "cog": r.cog, "inner": record_json(r.inner)}


def contract_json(c: Contract) -> dict:
    if isinstance(c, Null):
        return {"kind": "null"}
    if isinstance(c, NullDep):
        return {"kind": "dep", "dep": [c.c1, c.c2], "await": c.aw}
    if isinstance(c, (SyncInvk, AsyncInvk)):
        return {"kind": "sync" if isinstance(c, SyncInvk) else "async", "method": f"{c.cls}.{c.meth}",
                "recv": record_json(c.recv), "args": [record_json(a) for a in c.args],
                "ret": record_json(c.ret)}
    if isinstance(c, AsyncInvkDep):
        d = contract_json(c.inv)
        d.update(kind="async-dep", dep=[c.c1, c.c2], **{"await": c.aw})
        return d
    return {"kind": type(c).__name__.lower(), "left": contract_json(c.left), "right": contract_json(c.right)}


def method_contract_json(mc: MethodContract) -> dict:
    return {"method": f"{mc.cls}.{mc.meth}", "recv": record_json(mc.recv),
            "args": [record_json(a) for a in mc.args], "sync": contract_json(mc.sync),
            "unsync": contract_json(mc.unsync), "ret": record_json(mc.ret),
            "text": show_method_contract(mc)}


def lam_json(l: frozenset) -> list:
    return [sorted([d.c1, d.c2, d.aw] for d in rel) for rel in sorted(l, key=lambda r: (len(r), sorted(r)))]


def pair_json(p: LamPair) -> dict:
    return {"present": lam_json(p.present), "future": lam_json(p.future)}


def param_json(p: ParamLamPair) -> dict:
    return {"bound": list(p.bound), **pair_json(p.pair), "text": show_param(p)}
