from __future__ import annotations

import random

import pytest

from cogcheck.contract_core import (
    NULL, START, ZERO_PAIR, FutRec, LamPair, ObjRec, ParamLamPair, RecVar, lam, preorder_leq, show_pair,
    show_param,
)
from cogcheck.errors import ResourceLimit
from cogcheck.frontend import load, load_file
from cogcheck.inference import analyse
from cogcheck.lam_fixpoint import (
    TransformState, analyze_fixpoint, cog_map, extract, fixpoint, reachable_methods, run_fixpoint, transform,
)

from conftest import DECO_SOURCE, PROGRAMS, solved_driver
from renaming import cog_names, random_injection, rename


def _rows(result):
    return [{k[1]: show_param(v) for k, v in t.items()} for t in result.history]


def test_math_table_with_two_unsaturated_rounds(math_solved):
    r = fixpoint(math_solved.cct, saturate_at=2)
    rows = _rows(r)
    assert rows[1] == {"fact_g": "λc.<{{(c,c)}}, 0>", "fact_ag": "λc.<{{(c,c)^a}}, 0>",
                       "fact_nc": "λc.<{{(c,c')}}, 0>"}
    assert rows[2]["fact_nc"] == "λc.<{{(c,c'),(c',c'')}}, 0>"
    assert rows[-1] == {"fact_g": "λc.<{{(c,c)}}, 0>", "fact_ag": "λc.<{{(c,c)^a}}, 0>",
                        "fact_nc": "λc.<{{(c,c'),(c',c'),(c',c'')}}, 0>"}
    assert r.saturated and r.saturated_methods == [("Math", "fact_nc")]
    assert r.stable_from[("Math", "fact_g")] <= 3
    assert r.stable_from[("Math", "fact_ag")] <= 3
    assert r.monotone()


def test_cpxsched_table(cpx_solved):
    r = fixpoint(cpx_solved.cct)
    assert r.converged_at == 2 and not r.saturated
    assert _rows(r)[-1] == {
        "m1": "λc,c',c''.<0, {{(c',c''),(c'',c')}}>",
        "m2": "λc,c'.<{{(c,c')}}, 0>",
        "m3": "λc.<0, 0>",
    }
    v = analyze_fixpoint(cpx_solved.main, r, cpx_solved.cct)
    assert v.verdict == "potential-deadlock"
    (other,) = {d.c1 for r in v.lam.future for d in r} - {START}
    assert show_pair(v.lam, {other: "c1"}) == "<0, {{(c1,start),(start,c1)}}>"


@pytest.mark.parametrize("method,verdict,saturated", [
    ("fact_g", "potential-deadlock", False),
    ("fact_ag", "deadlock-free", False),
    ("fact_nc", "potential-deadlock", True),
])
def test_driver_verdicts(method, verdict, saturated):
    v = run_fixpoint(solved_driver(method))
    assert (v.verdict, v.saturated) == (verdict, saturated)


def test_saturation_only_counts_reachable_methods(math_solved):
    # math.mabs calls fact_ag only; fact_nc saturates but is unreachable
    v = run_fixpoint(math_solved)
    assert v.result.saturated and not v.saturated
    assert reachable_methods(math_solved.main, math_solved.cct) == {("Math", "fact_ag")}


def test_extract_lists_cogs_left_to_right():
    r = ObjRec("c", (("x", ObjRec("c'", (("x", RecVar("X")),))),))
    assert extract((r,)) == ("c", "c'")
    assert extract((FutRec("a", ObjRec("b", ())),)) == ("a", "b")


def test_header_replacement():
    actual = ObjRec("c1", (("x", ObjRec("c2", ())),))
    formal = ObjRec("c", (("x", ObjRec("c'", ())),))
    assert cog_map(actual, formal) == {"c": "c1", "c'": "c2"}


def test_transform_of_null_is_zero():
    assert transform(NULL, START, TransformState({}, {})) == ZERO_PAIR


def test_empty_table_converges_immediately():
    r = fixpoint({})
    assert r.converged_at == 1 and r.table == {} and not r.saturated


def test_size_limit():
    with pytest.raises(ResourceLimit):
        fixpoint(solved_driver("fact_nc").cct, saturate_at=6, size_limit=1)


def test_negative_saturation_rejected(math_solved):
    with pytest.raises(ValueError):
        fixpoint(math_solved.cct, saturate_at=-1)


def test_saturation_point_changes_precision_not_verdict():
    s = solved_driver("fact_nc")
    for n in range(0, 5):
        v = run_fixpoint(s, saturate_at=n)
        assert v.verdict == "potential-deadlock" and v.saturated


def test_chain_is_non_decreasing_on_corpus():
    for f in sorted(PROGRAMS.glob("*.mabs")):
        for n in (0, 1, 3):
            assert fixpoint(analyse(load_file(f)).cct, saturate_at=n).monotone(), f


def test_saturated_phase_converges_on_parameter_swap():
    # program 176 of this seed feeds its own fresh cog back through a swapped
    # parameter; without joining, the saturated entries of C0.m1 alternate
    import itertools
    from programgen import programs
    src = next(itertools.islice(programs(99), 176, None))
    cct = analyse(load(src)).cct
    for n in (0, 1, 2):
        r = fixpoint(cct, saturate_at=n)
        assert r.chain_check() == ([], 0)
        assert r.history[-1] == r.history[-2]


def test_deco_is_flagged():
    assert run_fixpoint(analyse(load(DECO_SOURCE))).verdict == "potential-deadlock"


def test_verdict_invariant_under_cog_renaming():
    rng = random.Random(3)
    sources = [load_file(f) for f in sorted(PROGRAMS.glob("*.mabs"))] + [load(DECO_SOURCE)]
    for tp in sources:
        s = analyse(tp)
        base = run_fixpoint(s)
        for _ in range(5):
            r = run_fixpoint(rename(s, random_injection(cog_names(s), rng)))
            assert (r.verdict, r.saturated) == (base.verdict, base.saturated)


def test_approximants_are_alpha_stable_under_renaming(cpx_solved):
    k = random_injection(cog_names(cpx_solved), random.Random(0))
    a = fixpoint(cpx_solved.cct).table
    b = fixpoint(rename(cpx_solved, k).cct).table
    for key in a:
        assert preorder_leq(a[key], b[key]) and preorder_leq(b[key], a[key])


def test_leq_entry_example():
    lo = ParamLamPair(("c",), LamPair(lam([("c", "c0")]), ZERO_PAIR.future))
    hi = ParamLamPair(("c",), LamPair(lam([("c", "c0"), ("c0", "c1")]), ZERO_PAIR.future))
    assert preorder_leq(lo, hi)
