from __future__ import annotations

import dataclasses
import itertools

import pytest

from cogcheck import frontend as F
from cogcheck.contract_core import Dep
from cogcheck.frontend import load
from cogcheck.interpreter import (
    BOT, Config, Fut, Machine, Obj, ObjState, Proc, canonical_key, dependencies, enabled, explore,
    has_circularity, init_config, is_deadlocked, is_sound, is_terminated, run,
)

from conftest import DECO_SOURCE, math_driver
from programgen import programs


def test_initial_configuration(math_tp):
    cn = init_config(math_tp)
    assert list(cn.objects) == [Obj(0)]
    assert is_sound(cn) and not is_terminated(cn)
    assert dependencies(cn) == frozenset() and not has_circularity(cn)


def test_empty_main_terminates():
    tr = run(load("{ }"))
    assert tr.verdict == "terminated" and tr.steps <= 1


def test_factorial_value():
    tr = run(load(math_driver("fact_ag", 3)), seed=4)
    assert tr.verdict == "terminated" and tr.main_value("r") == 6


def test_fact_g_zero_terminates():
    assert run(load(math_driver("fact_g", 0))).verdict == "terminated"


@pytest.mark.parametrize("seed", range(6))
def test_fact_g_deadlocks_under_every_seed(seed):
    assert run(load(math_driver("fact_g", 2)), seed=seed).verdict == "deadlocked"


def test_cpxsched_deadlock_under_some_seed(cpx_tp):
    verdicts = {run(cpx_tp, seed=s).verdict for s in range(10)}
    assert verdicts == {"deadlocked", "terminated"}


def test_cpxsched_deadlocked_configuration(cpx_tp):
    tr = next(t for t in (run(cpx_tp, seed=s) for s in range(20)) if t.verdict == "deadlocked")
    cn = tr.final
    deps = dependencies(cn)
    assert deps == {Dep("start", "c1"), Dep("c1", "start")}
    assert has_circularity(cn) and is_deadlocked(cn)
    # the two blocked processes live on different cogs and both do a get
    blocked = [(o, p) for o, p, active in cn.processes() if active and isinstance(p.stmts[0], F.Assign)
               and isinstance(p.stmts[0].rhs, F.Get)]
    assert len({cn.objects[o].cog for o, _ in blocked}) == 2


def _counterexample() -> Config:
    """Object 1 gets from object 3; object 2 awaits object 1 from the queue of cog 2."""
    o1, o2, o3 = Obj(1), Obj(2), Obj(3)
    f1, f2, f3 = Fut(1), Fut(2), Fut(3)
    get = Proc((("destiny", f1), ("e", f3), ("x", BOT)), (F.Assign(F.Var("x"), F.Get(F.Var("e"))),))
    wait = Proc((("destiny", f2), ("e", f1)), (F.Await(F.Var("e")),))
    ret = Proc((("destiny", f3),), (F.Return(F.IntLit(1)),))
    return Config(
        {Obj(0): ObjState(None, 0, ()), o1: ObjState("A", 1, (), get),
         o2: ObjState("A", 2, (), None, (wait,)), o3: ObjState("A", 2, (), ret)},
        {Fut(0): 0, f1: BOT, f2: BOT, f3: BOT},
        {0: None, 1: o1, 2: o3}, (), 4, 3, 4)


def test_circularity_without_deadlock(math_tp):
    cn = _counterexample()
    assert is_sound(cn)
    assert dependencies(cn) == {Dep("c1", "c2"), Dep("c2", "c1", True)}
    assert has_circularity(cn)
    assert not is_deadlocked(cn)
    # the return can fire
    assert enabled(Machine(math_tp), cn)


def test_run_is_deterministic(cpx_tp):
    for seed in range(3):
        a, b = run(cpx_tp, seed), run(cpx_tp, seed)
        assert [str(l) for l in a.labels] == [str(l) for l in b.labels] and a.verdict == b.verdict


def test_step_limit():
    tr = run(load(math_driver("fact_ag", 5)), max_steps=3)
    assert tr.verdict == "step-limit" and tr.steps == 3
    with pytest.raises(ValueError):
        run(load("{ }"), max_steps=0)


# -- canonicalisation

def _remap(x, objs, futs):
    if isinstance(x, Obj):
        return objs.get(x, x)
    if isinstance(x, Fut):
        return futs.get(x, x)
    if isinstance(x, tuple):
        return tuple(_remap(v, objs, futs) for v in x)
    if dataclasses.is_dataclass(x) and not isinstance(x, type) and not isinstance(x, F.Span):
        changes = {f.name: _remap(getattr(x, f.name), objs, futs) for f in dataclasses.fields(x)}
        new = dataclasses.replace(x, **changes)
        return new if new != x else x
    return x


def _rename(cn: Config, shift: int) -> Config:
    """Shift every non-start object, future and cog identifier."""
    objs = {o: Obj(o.id + shift) for o in cn.objects if o.id}
    futs = {f: Fut(f.id + shift) for f in cn.futures if f.id}
    cog = lambda c: c + shift if c else 0  # noqa: E731
    objects = {objs.get(o, o): dataclasses.replace(_remap(st, objs, futs), cog=cog(st.cog))
               for o, st in cn.objects.items()}
    futures = {futs.get(f, f): _remap(v, objs, futs) for f, v in cn.futures.items()}
    cogs = {cog(c): _remap(o, objs, futs) for c, o in cn.cogs.items()}
    return Config(objects, futures, cogs, _remap(cn.invocs, objs, futs), cn.next_obj + shift,
                  cn.next_cog + shift, cn.next_fut + shift)


def test_canonical_key_ignores_fresh_names(cpx_tp):
    m = Machine(cpx_tp)
    for seed in range(3):
        tr = run(cpx_tp, seed=seed, max_steps=15)
        cn = tr.final
        assert canonical_key(cn) == canonical_key(_rename(cn, 7))
        for _, nxt in m.enabled(cn):
            assert canonical_key(nxt) == canonical_key(_rename(nxt, 3))


def test_canonical_key_separates_distinct_states(cpx_tp):
    m = Machine(cpx_tp)
    cn = run(cpx_tp, seed=0, max_steps=12).final
    keys = {canonical_key(n) for _, n in m.enabled(cn)}
    assert len(keys) == len({n.show() for _, n in m.enabled(cn)})


# -- exploration

def test_explore_cpxsched(cpx_tp):
    e = explore(cpx_tp, 40)
    assert e.deadlock_reachable and e.terminating_reachable
    assert is_deadlocked(e.witness_config) and has_circularity(e.witness_config)


def test_explore_fact_ag_is_free():
    e = explore(load(math_driver("fact_ag", 2)), 60)
    assert not e.deadlock_reachable and e.terminating_reachable


def test_explore_fact_g_deadlocks():
    assert explore(load(math_driver("fact_g", 1)), 40).deadlock_reachable


def test_explore_rejects_bad_depth(cpx_tp):
    with pytest.raises(ValueError):
        explore(cpx_tp, 0)


def test_explore_state_cap(cpx_tp):
    from cogcheck.errors import ResourceLimit
    with pytest.raises(ResourceLimit):
        explore(cpx_tp, 40, state_cap=10)


def test_soundness_and_persistence_on_explored_graphs(cpx_tp):
    tps = [cpx_tp, load(math_driver("fact_g", 1)), load(math_driver("fact_nc", 2)), load(DECO_SOURCE)]
    tps += [load(s) for s in itertools.islice(programs(21), 30)]
    for tp in tps:
        e = explore(tp, 18, check=True)
        assert e.violations == []


def test_deadlock_implies_circularity():
    for i, src in enumerate(itertools.islice(programs(31), 40)):
        tp = load(src)
        for seed in range(3):
            cn = run(tp, seed=seed, max_steps=400).final
            if is_deadlocked(cn):
                assert has_circularity(cn), (i, seed)
