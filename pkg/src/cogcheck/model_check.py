"""Back-end 2: bounded unfolding of contract pairs guided by mutation orders."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterator, Union

import networkx as nx

from . import contract_core as cc
from .contract_core import START, Dep, LamPair, MethodContract, ObjRec, FutRec, RecVar, UnitRec
from .errors import MissingMethod, NonlinearError, ResourceLimit, ShapeMismatch
from .lam_fixpoint import call_graph, header_binders

DEFAULT_NODE_LIMIT = 200_000


# ---------------------------------------------------------------------------
# contract pairs


@dataclass(frozen=True)
class Leaf:
    atom: cc.Contract  # Null or an invocation
    budget: int | None = None


@dataclass(frozen=True)
class Pair:
    left: "CP"
    right: "CP"
    cog: str


@dataclass(frozen=True)
class Extend:
    inner: "CP"
    dep: Dep


@dataclass(frozen=True)
class Plus:
    left: "CP"
    right: "CP"


@dataclass(frozen=True)
class Seq:
    left: "CP"
    right: "CP"


@dataclass(frozen=True)
class Par:
    left: "CP"
    right: "CP"


CP = Union[Leaf, Pair, Extend, Plus, Seq, Par]
_BIN = {cc.Seq: Seq, cc.Plus: Plus, cc.Par: Par}
_OPS = {Plus: " + ", Seq: " ; ", Par: " || "}
_PREC = {Plus: 1, Seq: 2, Par: 3}


def from_contract(c: cc.Contract, budget_of=lambda inv: None) -> CP:
    if isinstance(c, cc.Null):
        return Leaf(cc.NULL)
    if isinstance(c, cc.NullDep):
        return Extend(Leaf(cc.NULL), Dep(c.c1, c.c2, c.aw))
    if isinstance(c, (cc.SyncInvk, cc.AsyncInvk)):
        return Leaf(c, budget_of(c))
    if isinstance(c, cc.AsyncInvkDep):
        return Extend(Leaf(c.inv, budget_of(c.inv)), Dep(c.c1, c.c2, c.aw))
    if type(c) in _BIN:
        return _BIN[type(c)](from_contract(c.left, budget_of), from_contract(c.right, budget_of))
    raise TypeError(c)


def cp_size(cp: CP) -> int:
    if isinstance(cp, Leaf):
        return 1
    if isinstance(cp, Extend):
        return 1 + cp_size(cp.inner)
    return 1 + cp_size(cp.left) + cp_size(cp.right)


def cp_names(cp: CP) -> set:
    if isinstance(cp, Leaf):
        return set(cc.contract_cogs(cp.atom))
    if isinstance(cp, Extend):
        return cp_names(cp.inner) | {cp.dep.c1, cp.dep.c2}
    out = cp_names(cp.left) | cp_names(cp.right)
    if isinstance(cp, Pair):
        out.add(cp.cog)
    return out


def show_cp(cp: CP, names: dict | None = None, prec: int = 0) -> str:
    names = names or {}
    n = lambda x: names.get(x, x)  # noqa: E731
    if isinstance(cp, Leaf):
        if isinstance(cp.atom, cc.Null):
            return "0"
        return cc.show_contract(cp.atom, names)
    if isinstance(cp, Pair):
        return f"<{show_cp(cp.left, names)}, {show_cp(cp.right, names)}>_{n(cp.cog)}"
    if isinstance(cp, Extend):
        d = cp.dep
        return f"{show_cp(cp.inner, names, 4)}.({n(d.c1)},{n(d.c2)}){'^a' if d.aw else ''}"
    p = _PREC[type(cp)]
    s = f"{show_cp(cp.left, names, p)}{_OPS[type(cp)]}{show_cp(cp.right, names, p + 1)}"
    return f"({s})" if p < prec else s


def cp_json(cp: CP):
    if isinstance(cp, Leaf):
        return {"leaf": cc.contract_json(cp.atom)}
    if isinstance(cp, Pair):
        return {"pair": [cp_json(cp.left), cp_json(cp.right)], "cog": cp.cog}
    if isinstance(cp, Extend):
        return {"extend": cp_json(cp.inner), "dep": [cp.dep.c1, cp.dep.c2, cp.dep.aw]}
    return {type(cp).__name__.lower(): [cp_json(cp.left), cp_json(cp.right)]}


# ---------------------------------------------------------------------------
# mutations


@dataclass(frozen=True)
class Const:
    """A name that never changes under the mutation (the `start` cog)."""

    name: str


@dataclass(frozen=True)
class Mutation:
    arity: int
    image: tuple  # int = reuse formal i, str = fresh slot, Const = constant

    def __post_init__(self):
        if len(self.image) != self.arity:
            raise ValueError("image length differs from arity")
        for s in self.image:
            if isinstance(s, int) and not 0 <= s < self.arity:
                raise ValueError(f"index {s} out of range")

    def is_permutation(self) -> bool:
        return sorted(s for s in self.image if isinstance(s, int)) == list(range(self.arity))

    def show(self, formals: tuple | None = None) -> str:
        formals = formals or tuple(cc.var_display(i).lower() for i in range(self.arity))
        slots: dict = {}
        img = []
        for s in self.image:
            if isinstance(s, int):
                img.append(formals[s])
            elif isinstance(s, Const):
                img.append(s.name)
            else:
                img.append(slots.setdefault(s, cc.prime_name("z", len(slots) + 1)))
        return f"({','.join(formals)}) ~> ({','.join(img)})"


def apply_mutation(mu: Mutation, tup: tuple, fresh) -> tuple:
    if len(tup) != mu.arity:
        raise ValueError(f"expected a {mu.arity}-tuple")
    slots: dict = {}
    out = []
    for s in mu.image:
        if isinstance(s, int):
            out.append(tup[s])
        elif isinstance(s, Const):
            out.append(s.name)
        else:
            if s not in slots:
                slots[s] = fresh()
            out.append(slots[s])
    return tuple(out)


def find_flashback(old: tuple, new: tuple, base=None) -> dict | None:
    """Injection ι with old = ι(new) pointwise, identity on names of `base`."""
    if len(old) != len(new):
        return None
    base = set(old) if base is None else set(base)
    iota: dict = {}
    for o, n in zip(old, new):
        if n in base and o != n:
            return None
        if iota.setdefault(n, o) != o:
            return None
    if len(set(iota.values())) != len(iota):
        return None
    return iota


def mutation_iterates(mu: Mutation, start: tuple, steps: int, fresh=None) -> list:
    if fresh is None:
        counter = itertools.count(1)
        fresh = lambda: f"c{next(counter)}"  # noqa: E731
    seq = [tuple(start)]
    for _ in range(steps):
        seq.append(apply_mutation(mu, seq[-1], fresh))
    return seq


def mutation_order(mu: Mutation, bound: int = 10_000) -> int:
    counter = itertools.count(1)
    fresh = lambda: f"#{next(counter)}"  # noqa: E731
    seq = [tuple(f"x{i}" for i in range(mu.arity))]
    for k in range(1, bound + 1):
        seq.append(apply_mutation(mu, seq[-1], fresh))
        if any(find_flashback(seq[h], seq[k]) is not None for h in range(k)):
            return k
    raise ResourceLimit(f"mutation order exceeds {bound}")


def order_witness(mu: Mutation) -> tuple:
    """(h, k, ι, iterates) for the first flashback found."""
    k = mutation_order(mu)
    seq = mutation_iterates(mu, tuple(f"x{i}" for i in range(mu.arity)), k)
    for h in range(k):
        iota = find_flashback(seq[h], seq[k])
        if iota is not None:
            return h, k, iota, seq
    raise AssertionError("order without flashback")


# ---------------------------------------------------------------------------
# recursion analysis


@dataclass
class RecursionInfo:
    method: tuple
    recursive: bool
    cycle: list = field(default_factory=list)
    linear: bool = True
    mutation: Mutation | None = None
    order: int = 0

    @property
    def budget(self) -> int:
        return 2 * self.order * len(self.cycle) if self.recursive else 0


def match_header(mc: MethodContract, recv, args) -> tuple[dict, dict]:
    cogs: dict = {}
    recs: dict = {}

    def go(actual, formal):
        if isinstance(formal, RecVar):
            recs[formal.name] = actual
        elif isinstance(formal, UnitRec):
            return
        elif isinstance(formal, ObjRec) and isinstance(actual, ObjRec):
            cogs[formal.cog] = actual.cog
            act = dict(actual.fields)
            for k, v in formal.fields:
                if k not in act:
                    raise ShapeMismatch(f"field {k} missing in {actual}")
                go(act[k], v)
        elif isinstance(formal, FutRec) and isinstance(actual, FutRec):
            cogs[formal.cog] = actual.cog
            go(actual.inner, formal.inner)
        else:
            raise ShapeMismatch(f"{actual} does not match {formal}")

    go(recv, mc.recv)
    if len(args) != len(mc.args):
        raise ShapeMismatch(f"{mc.cls}.{mc.meth} called with {len(args)} arguments")
    for a, f in zip(args, mc.args):
        go(a, f)
    return cogs, recs


def _body_invocations(mc: MethodContract) -> list:
    out = []
    for part in (mc.sync, mc.unsync):
        for inv in cc.invocations(part):
            out.append(inv.inv if isinstance(inv, cc.AsyncInvkDep) else inv)
    return out


def _sccs(cct: dict) -> tuple[dict, set]:
    g = call_graph(cct)
    comp: dict = {}
    recursive: set = set()
    for i, scc in enumerate(nx.strongly_connected_components(g)):
        for m in scc:
            comp[m] = i
        if len(scc) > 1 or any(g.has_edge(m, m) for m in scc):
            recursive |= {m for m in scc if m in cct}
    return comp, recursive


def mutation_of(mc: MethodContract, cycle: list, cct: dict) -> Mutation:
    """Mutation of the binder tuple of `mc` after one trip around `cycle`."""
    comp, _ = _sccs(cct)
    origin = header_binders(mc)
    cur: dict = {b: i for i, b in enumerate(origin)}
    here = mc
    for step in range(len(cycle)):
        inv = next(i for i in _body_invocations(here) if comp.get(cc.invocation_target(i)) == comp[mc.key])
        target = cct[cc.invocation_target(inv)]
        cogs, _ = match_header(target, inv.recv, inv.args)
        nxt: dict = {}
        for b in header_binders(target):
            name = cogs.get(b)
            if name in cur:
                nxt[b] = cur[name]
            elif name == START:
                nxt[b] = Const(START)
            else:
                nxt[b] = f"{name}'{step}"
        cur, here = nxt, target
    return Mutation(len(origin), tuple(cur[b] for b in origin))


def check_linear(cct: dict) -> dict:
    comp, recursive = _sccs(cct)
    info: dict = {}
    bad: list = []
    for key, mc in cct.items():
        if key not in recursive:
            info[key] = RecursionInfo(key, False)
            continue
        inside = [i for i in _body_invocations(mc) if comp.get(cc.invocation_target(i)) == comp[key]]
        if len(inside) > 1:
            bad.append(key)
        info[key] = RecursionInfo(key, True, linear=len(inside) <= 1)
    if bad:
        names = ", ".join(f"{c}.{m}" for c, m in bad)
        raise NonlinearError(f"nonlinear recursion in {names}; use the fixpoint back-end")
    for key, ri in info.items():
        if not ri.recursive:
            continue
        cycle = [key]
        here = key
        while True:
            inv = next(i for i in _body_invocations(cct[here]) if comp.get(cc.invocation_target(i)) == comp[key])
            here = cc.invocation_target(inv)
            if here == key:
                break
            cycle.append(here)
        ri.cycle = cycle
        ri.mutation = mutation_of(cct[key], cycle, cct)
        ri.order = mutation_order(ri.mutation)
    return info


# ---------------------------------------------------------------------------
# evaluation


@dataclass
class Evaluation:
    cp: CP
    steps: list
    unfoldings: int
    residual: int
    lineage: dict = field(default_factory=dict)


def _redexes(cp: CP, idx: str, path: tuple = ()) -> Iterator[tuple]:
    if isinstance(cp, Leaf):
        if not isinstance(cp.atom, cc.Null) and (cp.budget is None or cp.budget > 0):
            yield path, idx
    elif isinstance(cp, Pair):
        yield from _redexes(cp.left, cp.cog, path + (0,))
        yield from _redexes(cp.right, cp.cog, path + (1,))
    elif isinstance(cp, Extend):
        yield from _redexes(cp.inner, idx, path + (0,))
    else:
        yield from _redexes(cp.left, idx, path + (0,))
        yield from _redexes(cp.right, idx, path + (1,))


def _at(cp: CP, path: tuple) -> CP:
    for p in path:
        cp = cp.inner if isinstance(cp, Extend) else (cp.left if p == 0 else cp.right)
    return cp


def _replace(cp: CP, path: tuple, new: CP) -> CP:
    if not path:
        return new
    head, rest = path[0], path[1:]
    if isinstance(cp, Extend):
        return Extend(_replace(cp.inner, rest, new), cp.dep)
    if isinstance(cp, Pair):
        return Pair(_replace(cp.left, rest, new), cp.right, cp.cog) if head == 0 else \
            Pair(cp.left, _replace(cp.right, rest, new), cp.cog)
    kind = type(cp)
    return kind(_replace(cp.left, rest, new), cp.right) if head == 0 else kind(cp.left, _replace(cp.right, rest, new))


class Evaluator:
    def __init__(self, cct: dict, info: dict, extra: int = 0, rng: random.Random | None = None,
                 node_limit: int = DEFAULT_NODE_LIMIT, trace: bool = False):
        self.cct = cct
        self.info = info
        self.extra = extra
        self.rng = rng
        self.node_limit = node_limit
        self.trace = trace
        self.comp, self.recursive = _sccs(cct)
        self.fresh = itertools.count(1)
        self.lineage: dict = {}

    def initial_budget(self, key) -> int | None:
        if key not in self.recursive:
            return None
        return self.info[key].budget + self.extra

    def leaf(self, inv) -> Leaf:
        key = (inv.cls, inv.meth)
        return Leaf(inv, self.initial_budget(key))

    def unfold(self, leaf: Leaf, idx: str) -> CP:
        inv = leaf.atom
        key = (inv.cls, inv.meth)
        if key not in self.cct:
            raise MissingMethod(f"no contract for {inv.cls}.{inv.meth}")
        mc = self.cct[key]
        cogs, recs = match_header(mc, inv.recv, inv.args)
        ren = {z: f"w{next(self.fresh)}" for z in mc.free_cogs()}
        self.lineage.update({v: k for k, v in ren.items()})
        ren.update(cogs)
        fresh_vars = {v: RecVar(f"W{next(self.fresh)}") for v in mc.free_vars()}
        recs = {**fresh_vars, **recs}
        here = leaf.budget if leaf.budget is not None else self.initial_budget(key)

        def budget_of(child):
            ck = (child.cls, child.meth)
            if ck not in self.recursive:
                return None
            if key in self.recursive and self.comp.get(ck) == self.comp[key]:
                return here - 1
            return self.initial_budget(ck)

        body = Pair(from_contract(cc.contract_map(mc.sync, ren, recs), budget_of),
                    from_contract(cc.contract_map(mc.unsync, ren, recs), budget_of),
                    cc.root_cog(inv.recv))
        if isinstance(inv, cc.SyncInvk):
            rc = cc.root_cog(inv.recv)
            return Extend(body, Dep(idx, idx, True) if rc == idx else Dep(idx, rc, False))
        return body

    def run(self, main: tuple) -> Evaluation:
        cp: CP = Pair(from_contract(main[0], lambda i: self.initial_budget((i.cls, i.meth))),
                      from_contract(main[1], lambda i: self.initial_budget((i.cls, i.meth))), START)
        steps = [cp] if self.trace else []
        n = 0
        while True:
            found = list(_redexes(cp, START)) if self.rng else list(itertools.islice(_redexes(cp, START), 1))
            if not found:
                break
            path, idx = self.rng.choice(found) if self.rng else found[0]
            cp = _replace(cp, path, self.unfold(_at(cp, path), idx))
            n += 1
            if cp_size(cp) > self.node_limit:
                raise ResourceLimit(f"contract pair exceeds {self.node_limit} nodes")
            if self.trace:
                steps.append(cp)
        residual = sum(1 for _ in _leaves(cp) if not isinstance(_.atom, cc.Null))
        return Evaluation(cp, steps, n, residual, self.lineage)


def _leaves(cp: CP) -> Iterator[Leaf]:
    if isinstance(cp, Leaf):
        yield cp
    elif isinstance(cp, Extend):
        yield from _leaves(cp.inner)
    else:
        yield from _leaves(cp.left)
        yield from _leaves(cp.right)


def evaluate(main: tuple, cct: dict, info: dict | None = None, extra: int = 0,
             rng: random.Random | None = None, trace: bool = False,
             node_limit: int = DEFAULT_NODE_LIMIT) -> Evaluation:
    info = check_linear(cct) if info is None else info
    return Evaluator(cct, info, extra, rng, node_limit, trace).run(main)


# ---------------------------------------------------------------------------
# flattening


def sem(cp: CP) -> LamPair:
    if isinstance(cp, Leaf):
        return cc.ZERO_PAIR
    if isinstance(cp, Extend):
        return cc.pair_extend(sem(cp.inner), cp.dep).reduced()
    if isinstance(cp, Pair):
        return cc.body_pair(sem(cp.left), sem(cp.right))
    left, right = sem(cp.left), sem(cp.right)
    if isinstance(cp, Plus):
        return cc.lampair_plus(left, right).reduced()
    if isinstance(cp, Seq):
        return cc.lampair_seq(left, right).reduced()
    return cc.pair_parallel(left, right).reduced()


@dataclass
class ModelCheckVerdict:
    verdict: str
    lam: LamPair
    witness: list
    evaluation: Evaluation
    info: dict

    @property
    def lams(self) -> list:
        return [self.lam.present, self.lam.future]


def flatten_and_check(cp: CP) -> tuple[LamPair, list]:
    pair = sem(cp)
    wit = cc.circularity_witness(pair)
    return pair, wit or []


def model_check(main: tuple, cct: dict, extra: int = 0, rng: random.Random | None = None,
                trace: bool = False, node_limit: int = DEFAULT_NODE_LIMIT) -> ModelCheckVerdict:
    info = check_linear(cct)
    ev = evaluate(main, cct, info, extra, rng, trace, node_limit)
    pair, wit = flatten_and_check(ev.cp)
    return ModelCheckVerdict("potential-deadlock" if wit else "deadlock-free", pair, wit, ev, info)


def run_model_check(solved, **kw) -> ModelCheckVerdict:
    return model_check(solved.main, solved.cct, **kw)
