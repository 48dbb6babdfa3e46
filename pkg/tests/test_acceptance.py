"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion."""
from __future__ import annotations

import itertools
import random
import time
from contextlib import contextmanager

from cogcheck.contract_core import NULL, Dep, ZERO, LamPair, brute_force_circular, circularity, lam, show_param
from cogcheck.errors import NonlinearError
from cogcheck.frontend import load
from cogcheck.inference import analyse
from cogcheck.interpreter import dependencies, explore
from cogcheck.lam_fixpoint import fixpoint, run_fixpoint, tables_equivalent
from cogcheck.model_check import (
    Mutation, check_linear, evaluate, mutation_iterates, mutation_order, run_model_check, sem, show_cp,
)

from conftest import ACCEPTANCE, solved_driver, math_driver
from programgen import programs
from renaming import cog_names, random_injection, rename

D, FREE = "potential-deadlock", "deadlock-free"

# soundness suite parameters: explore depth stays inside the allowed bound of 30
SOUNDNESS_PROGRAMS = 500
SOUNDNESS_DEPTH = 24
SUITE_LIMIT_S = 60.0


@contextmanager
def criterion(label: str, limit_s: float | None = None):
    t0 = time.perf_counter()
    notes: dict = {}
    try:
        yield notes
        elapsed = time.perf_counter() - t0
        if limit_s is not None:
            assert elapsed < limit_s, f"took {elapsed:.2f} s, limit {limit_s} s"
    except BaseException as e:
        elapsed = time.perf_counter() - t0
        ACCEPTANCE.append(f"FAIL  {label}  [{elapsed:.2f} s]  {type(e).__name__}: {e}".splitlines()[0])
        print(ACCEPTANCE[-1])
        raise
    extra = "  " + ", ".join(f"{k}={v}" for k, v in notes.items()) if notes else ""
    ACCEPTANCE.append(f"PASS  {label}  [{elapsed:.2f} s]{extra}")
    print(ACCEPTANCE[-1])


def _rows(result):
    return {k[1]: show_param(v) for k, v in result.table.items()}


def test_1_math_fixpoint_table(math_solved):
    with criterion("1 Math fixpoint table", 1.0) as notes:
        r = fixpoint(math_solved.cct, saturate_at=2)
        rows = _rows(r)
        assert rows["fact_g"] == "λc.<{{(c,c)}}, 0>"
        assert r.stable_from[("Math", "fact_g")] <= 3
        assert rows["fact_ag"] == "λc.<{{(c,c)^a}}, 0>"
        assert rows["fact_nc"] == "λc.<{{(c,c'),(c',c'),(c',c'')}}, 0>"
        assert r.saturated_methods == [("Math", "fact_nc")]
        notes["fact_g_stable_from"] = r.stable_from[("Math", "fact_g")]


def test_2_cpxsched_fixpoint(cpx_solved):
    with criterion("2 CpxSched fixpoint table and verdict", 1.0) as notes:
        r = fixpoint(cpx_solved.cct)
        assert r.converged_at == 2 and not r.saturated
        assert _rows(r) == {"m1": "λc,c',c''.<0, {{(c',c''),(c'',c')}}>", "m2": "λc,c'.<{{(c,c')}}, 0>",
                            "m3": "λc.<0, 0>"}
        v = run_fixpoint(cpx_solved)
        assert v.verdict == D
        notes["iterations"] = r.converged_at


def test_3_fact_nc_reduction():
    s = solved_driver("fact_nc")
    with criterion("3 fact_nc reduction and flattening", 1.0) as notes:
        inv = s.main[0].inv
        ev = evaluate((inv, NULL), s.cct, trace=True)
        assert ev.unfoldings == 2
        c, c1, c2 = inv.recv.cog, "w1", "w2"
        names = {c: "c", c1: "c'", c2: "c''"}
        assert [show_cp(x, names) for x in ev.steps] == [
            "<Math!fact_nc [cog:c](_) -> _, 0>_start",
            "<<0 + Math!fact_nc [cog:c'](_) -> _.(c,c'), 0>_c, 0>_start",
            "<<0 + <0 + Math!fact_nc [cog:c''](_) -> _.(c',c''), 0>_c'.(c,c'), 0>_c, 0>_start",
        ]
        p = sem(ev.cp)
        assert p == LamPair(lam([(c1, c2), (c, c1)]), ZERO)
        assert not circularity(p)
        notes["unfoldings"] = ev.unfoldings


def test_4_mutation_order():
    with criterion("4 mutation order"):
        mu = Mutation(4, (1, 0, "z", "z"))
        assert mutation_order(mu) == 3
        assert mutation_iterates(mu, ("c", "c'", "c''", "c'''"), 3) == [
            ("c", "c'", "c''", "c'''"), ("c'", "c", "c1", "c1"), ("c", "c'", "c2", "c2"), ("c'", "c", "c3", "c3")]


def test_5_cpxsched_explore(cpx_tp):
    with criterion("5 CpxSched exploration", 5.0) as notes:
        e = explore(cpx_tp, 40)
        assert e.deadlock_reachable is True
        assert e.terminating_reachable is True
        cn = e.witness_config
        # both blocked processes are gets, on different cogs, on unresolved futures
        deps = dependencies(cn)
        assert len(deps) == 2 and all(not d.aw for d in deps)
        (a, b) = sorted(deps)
        assert a.c1 == b.c2 and a.c2 == b.c1 and a.c1 != a.c2
        notes["states"] = e.states
        notes["witness_steps"] = len(e.witness)


def test_6_verdict_table(cpx_tp, cpx_solved):
    expected = {
        "fact_g": (D, D, True, False),
        "fact_ag": (FREE, FREE, False, False),
        "fact_nc": (D, FREE, False, True),
    }
    with criterion("6 verdict table", 10.0) as notes:
        for method, (fp, mc, dead, sat) in expected.items():
            s = solved_driver(method)
            v = run_fixpoint(s)
            assert (v.verdict, v.saturated) == (fp, sat), method
            assert run_model_check(s).verdict == mc, method
            assert explore(load(math_driver(method, 2)), 60).deadlock_reachable is dead, method
        assert run_fixpoint(cpx_solved).verdict == D
        assert run_model_check(cpx_solved).verdict == D
        assert explore(cpx_tp, 60).deadlock_reachable
        notes["rows"] = 4


def test_7a_soundness():
    with criterion("7a soundness on generated programs", SUITE_LIMIT_S) as notes:
        linear = nonlinear = deadlocks = 0
        violations = []
        for i, src in enumerate(programs(2024)):
            if linear >= SOUNDNESS_PROGRAMS:
                break
            tp = load(src)
            s = analyse(tp)
            try:
                check_linear(s.cct)
                is_linear = True
            except NonlinearError:
                is_linear = False
            e = explore(tp, SOUNDNESS_DEPTH, stop_on_deadlock=True)
            if e.deadlock_reachable:
                deadlocks += 1
                if run_fixpoint(s).verdict != D:
                    violations.append((i, "fixpoint"))
                if is_linear and run_model_check(s).verdict != D:
                    violations.append((i, "modelcheck"))
            linear += is_linear
            nonlinear += not is_linear
        assert violations == []
        notes.update(linear=linear, nonlinear=nonlinear, deadlocks=deadlocks, depth=SOUNDNESS_DEPTH)


def test_7b_soundness_and_persistence():
    with criterion("7b soundness and persistence on explored transitions", SUITE_LIMIT_S) as notes:
        states = 0
        for src in itertools.islice(programs(77), 200):
            e = explore(load(src), 20, check=True)
            assert e.violations == []
            states += e.states
        notes["states"] = states


def test_7c_monotone_chains():
    with criterion("7c monotone approximant chains", SUITE_LIMIT_S) as notes:
        runs = undecided = 0
        for src in itertools.islice(programs(99), 300):
            cct = analyse(load(src)).cct
            for n in (0, 1, 2):
                bad, und = fixpoint(cct, saturate_at=n).chain_check()
                assert bad == [], (src, n, bad)
                undecided += und
                runs += 1
        notes["runs"] = runs
        notes["undecided"] = undecided


def test_7d_circularity_against_brute_force():
    with criterion("7d circularity vs brute force", SUITE_LIMIT_S) as notes:
        rng = random.Random(1000)
        positives = 0
        for _ in range(1000):
            names = [f"c{i}" for i in range(rng.randint(1, 8))]
            rel = frozenset(Dep(rng.choice(names), rng.choice(names), rng.random() < 0.5)
                            for _ in range(rng.randint(0, 14)))
            got = circularity(frozenset({rel}))
            assert got == brute_force_circular(rel)
            positives += got
        notes["circular"] = positives


def test_7e_renaming_invariance():
    with criterion("7e verdicts invariant under cog renaming", SUITE_LIMIT_S) as notes:
        rng = random.Random(5)
        tables = 0
        for src in programs(55):
            if tables >= 100:
                break
            s = analyse(load(src))
            k = random_injection(cog_names(s), rng)
            r = rename(s, k)
            a, b = run_fixpoint(s), run_fixpoint(r)
            assert (a.verdict, a.saturated) == (b.verdict, b.saturated)
            assert tables_equivalent(a.result.table, b.result.table)
            try:
                assert run_model_check(s).verdict == run_model_check(r).verdict
            except NonlinearError:
                pass
            tables += 1
        notes["tables"] = tables
