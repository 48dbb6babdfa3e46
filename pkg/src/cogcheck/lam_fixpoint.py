"""Fixpoint back-end: abstract class tables of lams, saturation, circularity."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import networkx as nx

from .contract_core import (
    START, ZERO, ZERO_PAIR, AsyncInvk, AsyncInvkDep, Contract, Dep, FutRec, LamPair, MethodContract,
    Null, NullDep, ObjRec, ParamLamPair, Par, Plus, Record, RecVar, Seq, SyncInvk, UnitRec,
    body_pair, circularity_witness, invocation_target, invocations, lampair_plus, lampair_seq,
    pair_extend, pair_parallel, preorder_leq, reduce_lam, root_cog,
)
from .errors import MissingMethod, ResourceLimit, ShapeMismatch

DEFAULT_SIZE_LIMIT = 10 ** 5


def extract(records) -> tuple:
    """Cog names of a record tuple, left to right."""
    out: list[str] = []

    def go(r):
        if isinstance(r, ObjRec):
            out.append(r.cog)
            for _, v in r.fields:
                go(v)
        elif isinstance(r, FutRec):
            out.append(r.cog)
            go(r.inner)

    for r in records:
        go(r)
    return tuple(out)


def header_binders(mc: MethodContract) -> tuple:
    seen: list[str] = []
    for c in extract((mc.recv, *mc.args)):
        if c not in seen:
            seen.append(c)
    return tuple(seen)


def cog_map(actual: Record, formal: Record, out: dict | None = None) -> dict:
    """Pair formal cogs with actual cogs positionally (formal ↦ actual)."""
    out = {} if out is None else out
    if isinstance(formal, (RecVar, UnitRec)):
        return out
    if isinstance(formal, ObjRec) and isinstance(actual, ObjRec):
        out[formal.cog] = actual.cog
        act = dict(actual.fields)
        for k, v in formal.fields:
            if k not in act:
                raise ShapeMismatch(f"field {k} missing in {actual}")
            cog_map(act[k], v, out)
        return out
    if isinstance(formal, FutRec) and isinstance(actual, FutRec):
        out[formal.cog] = actual.cog
        return cog_map(actual.inner, formal.inner, out)
    raise ShapeMismatch(f"{actual} does not match {formal}")


def header_map(mc: MethodContract, recv: Record, args: tuple) -> dict:
    m: dict = {}
    cog_map(recv, mc.recv, m)
    if len(args) != len(mc.args):
        raise ShapeMismatch(f"{mc.cls}.{mc.meth} called with {len(args)} arguments")
    for a, f in zip(args, mc.args):
        cog_map(a, f, m)
    return m


@dataclass
class TransformState:
    table: dict
    cct: dict
    saturating: bool = False
    counter: itertools.count = field(default_factory=lambda: itertools.count(1))
    suppressed: bool = False
    size_limit: int = DEFAULT_SIZE_LIMIT
    lineage: dict = field(default_factory=dict)  # fresh name -> the name it copies

    def fresh(self) -> str:
        return f"n{next(self.counter)}"


def instantiate(inv, state: TransformState) -> LamPair:
    key = (inv.cls, inv.meth)
    if key not in state.table or key not in state.cct:
        raise MissingMethod(f"no entry for {inv.cls}.{inv.meth}")
    entry: ParamLamPair = state.table[key]
    free = entry.free_names()
    ren: dict = {}
    if free:
        if state.saturating:
            state.suppressed = True
        else:
            ren = {n: state.fresh() for n in free if n != START}
            state.lineage.update({v: k for k, v in ren.items()})
    binds = header_map(state.cct[key], inv.recv, inv.args)
    ren.update({b: binds[b] for b in entry.bound if b in binds})
    return entry.pair.renamed(ren)


def transform(c: Contract, cog: str, state: TransformState) -> LamPair:
    if isinstance(c, Null):
        return ZERO_PAIR
    if isinstance(c, NullDep):
        return LamPair(frozenset({frozenset({Dep(c.c1, c.c2, c.aw)})}), ZERO)
    if isinstance(c, SyncInvk):
        p = instantiate(c, state)
        rc = root_cog(c.recv)
        dep = Dep(cog, cog, True) if rc == cog else Dep(cog, rc, False)
        return _checked(pair_extend(p, dep).reduced(), state)
    if isinstance(c, AsyncInvk):
        p = instantiate(c, state)
        return _checked(LamPair(ZERO, reduce_lam(p.present | p.future)), state)
    if isinstance(c, AsyncInvkDep):
        p = instantiate(c.inv, state)
        return _checked(pair_extend(p, Dep(c.c1, c.c2, c.aw)).reduced(), state)
    left, right = transform(c.left, cog, state), transform(c.right, cog, state)
    if isinstance(c, Seq):
        out = lampair_seq(left, right)
    elif isinstance(c, Plus):
        out = lampair_plus(left, right)
    elif isinstance(c, Par):
        out = pair_parallel(left, right)
    else:
        raise TypeError(c)
    return _checked(out.reduced(), state)


def _checked(p: LamPair, state: TransformState) -> LamPair:
    if p.size() > state.size_limit:
        raise ResourceLimit(f"lam exceeds {state.size_limit} relations")
    return p


def method_approximant(mc: MethodContract, state: TransformState) -> ParamLamPair:
    cog = root_cog(mc.recv)
    pair = body_pair(transform(mc.sync, cog, state), transform(mc.unsync, cog, state))
    return ParamLamPair(header_binders(mc), pair)


def call_graph(cct: dict) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(cct)
    for k, mc in cct.items():
        for inv in itertools.chain(invocations(mc.sync), invocations(mc.unsync)):
            g.add_edge(k, invocation_target(inv))
    return g


def callee_first_order(cct: dict) -> list:
    """Methods ordered so that callees come before callers (SCCs kept together)."""
    g = call_graph(cct)
    cond = nx.condensation(g)
    pos = {k: i for i, k in enumerate(cct)}
    out: list = []
    for node in reversed(list(nx.topological_sort(cond))):
        out += sorted((m for m in cond.nodes[node]["members"] if m in cct), key=pos.get)
    return out


def tables_equivalent(t1: dict, t2: dict) -> bool:
    return all(preorder_leq(t1[k], t2[k]) and preorder_leq(t2[k], t1[k]) for k in t1)


def _same_entry(a: ParamLamPair, b: ParamLamPair, saturated: bool) -> bool:
    if a == b:
        return True
    if saturated:
        # no fresh names once saturated, so equality is literal
        return False
    try:
        return preorder_leq(a, b) and preorder_leq(b, a)
    except ResourceLimit:
        return False


@dataclass
class FixpointResult:
    table: dict
    history: list
    converged_at: int
    saturate_at: int
    saturated: bool
    saturated_methods: list
    stable_from: dict
    lineage: dict = field(default_factory=dict)

    def chain_check(self) -> tuple[list, int]:
        """Steps where the chain fails to grow, and steps too large to decide.

        Each failure is (step, method key); step k compares approximant
        k-1 with approximant k.
        """
        bad: list = []
        undecided = 0
        for k, (a, b) in enumerate(zip(self.history, self.history[1:]), 1):
            for key in a:
                if a[key] == b[key]:
                    continue
                try:
                    if not preorder_leq(a[key], b[key]):
                        bad.append((k, key))
                except ResourceLimit:
                    undecided += 1
        return bad, undecided

    def monotone(self) -> bool:
        bad, undecided = self.chain_check()
        return not bad and not undecided


def fixpoint(cct: dict, saturate_at: int = 0, size_limit: int = DEFAULT_SIZE_LIMIT,
             max_iterations: int = 200) -> FixpointResult:
    if saturate_at < 0:
        raise ValueError("saturation point must be non-negative")
    table = {k: ParamLamPair(header_binders(mc), ZERO_PAIR) for k, mc in cct.items()}
    history = [dict(table)]
    order = callee_first_order(cct)
    counter = itertools.count(1)
    lineage: dict = {}
    sat_methods: list = []
    stable: dict = {}
    k = 0
    while True:
        k += 1
        if k > max_iterations:
            raise ResourceLimit(f"no fixpoint within {max_iterations} iterations")
        saturating = k > saturate_at
        for key in order:
            state = TransformState(table, cct, saturating, counter, size_limit=size_limit, lineage=lineage)
            entry = method_approximant(cct[key], state)
            if saturating:
                # join with the previous entry so the saturated chain only grows
                entry = ParamLamPair(entry.bound, lampair_plus(table[key].pair, entry.pair).reduced())
            table[key] = entry
            if state.suppressed and key not in sat_methods:
                sat_methods.append(key)
        prev = history[-1]
        history.append(dict(table))
        done = True
        for key in cct:
            if _same_entry(table[key], prev[key], saturating):
                stable.setdefault(key, k)
            else:
                stable.pop(key, None)
                done = False
        if done:
            break
    return FixpointResult(dict(table), history, k, saturate_at, bool(sat_methods), sat_methods, stable,
                          lineage)


@dataclass
class FixpointVerdict:
    verdict: str  # deadlock-free | potential-deadlock
    lam: LamPair
    witness: list
    saturated: bool
    result: FixpointResult


def analyze_fixpoint(main: tuple, act: FixpointResult, cct: dict,
                     size_limit: int = DEFAULT_SIZE_LIMIT) -> FixpointVerdict:
    state = TransformState(act.table, cct, False, itertools.count(len(act.lineage) + 1),
                           size_limit=size_limit, lineage=act.lineage)
    pair = body_pair(transform(main[0], START, state), transform(main[1], START, state))
    wit = circularity_witness(pair)
    verdict = "potential-deadlock" if wit else "deadlock-free"
    used = reachable_methods(main, cct)
    sat = any(m in used for m in act.saturated_methods)
    return FixpointVerdict(verdict, pair, wit or [], sat, act)


def reachable_methods(main: tuple, cct: dict) -> set:
    g = call_graph(cct)
    roots = {invocation_target(i) for i in itertools.chain(invocations(main[0]), invocations(main[1]))}
    out = set(roots)
    for r in roots:
        if r in g:
            out |= nx.descendants(g, r)
    return out


def run_fixpoint(solved, saturate_at: int = 0, size_limit: int = DEFAULT_SIZE_LIMIT) -> FixpointVerdict:
    act = fixpoint(solved.cct, saturate_at, size_limit)
    return analyze_fixpoint(solved.main, act, solved.cct, size_limit)
