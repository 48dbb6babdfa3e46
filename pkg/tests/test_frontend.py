from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from cogcheck.errors import FrontendError, ParseError, RestrictionError, TypeCheckError
from cogcheck.frontend import Program, Skip, load, parse, pretty
from cogcheck.inference import analyse

from conftest import DECO_SOURCE, PROGRAMS, math_driver
from programgen import generate


def test_math_class_parses_with_three_methods():
    p = parse((PROGRAMS / "math.mabs").read_text())
    assert len(p.classes) == 1
    assert [m.name for m in p.classes[0].methods] == ["fact_g", "fact_ag", "fact_nc"]


def test_math_class_typechecks(math_tp):
    assert math_tp.method_keys() == [("Math", "fact_g"), ("Math", "fact_ag"), ("Math", "fact_nc")]


def test_empty_main():
    p = parse("{ skip; }")
    assert p == Program((), (), (), Skip())


def test_missing_semicolon_is_a_parse_error():
    with pytest.raises(ParseError):
        parse("class C { Int m() { return 1 } } { skip; }")


def test_future_field_assignment_is_rejected():
    src = """
    class A {
        Fut<Int> x;
        Int k() { return 1; }
        Unit m() { Fut<Int> f; f = this!k(); this.x = f; }
    }
    { skip; }
    """
    with pytest.raises(RestrictionError) as e:
        load(src)
    assert e.value.diagnostics[0].code == "future-field-assign"


def test_two_implementations_of_an_interface_are_rejected():
    src = """
    interface I { Unit m(); }
    class A implements I { Unit m() { } }
    class B implements I { Unit m() { } }
    { skip; }
    """
    with pytest.raises(RestrictionError) as e:
        load(src)
    assert e.value.diagnostics[0].code == "multi-impl"


def test_return_must_be_last():
    src = "class A { Int m() { return 1; skip; } } { skip; }"
    with pytest.raises(FrontendError) as e:
        load(src)
    assert "return-continuation" in [d.code for d in e.value.diagnostics]


def test_boolean_await_is_rejected():
    src = "class A { Unit m(Bool b) { await b; } } { skip; }"
    with pytest.raises(RestrictionError) as e:
        load(src)
    assert e.value.diagnostics[0].code == "await-bool"


def test_unknown_variable_reports_position():
    with pytest.raises(TypeCheckError) as e:
        load("class A {\n Unit m() { return x; }\n}\n{ skip; }")
    d = e.value.diagnostics[0]
    assert (d.code, d.span.line) == ("unknown-name", 2)


def test_all_errors_are_collected():
    src = "class A { Unit m() { y = 1; z = 2; } } { skip; }"
    with pytest.raises(TypeCheckError) as e:
        load(src)
    assert len(e.value.diagnostics) == 2


@pytest.mark.parametrize("path", sorted(PROGRAMS.glob("*.mabs")), ids=lambda p: p.name)
def test_round_trip_on_corpus(path):
    p = parse(path.read_text())
    assert parse(pretty(p)) == p


def test_round_trip_on_deco_example():
    p = parse(DECO_SOURCE)
    assert parse(pretty(p)) == p


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_on_generated_programs(seed):
    p = parse(generate(random.Random(seed)))
    assert parse(pretty(p)) == p


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_typed_programs_pass_inference(seed):
    # a program accepted by the checker never trips a restriction later on
    analyse(load(generate(random.Random(seed))))


def test_driver_helper_builds_valid_programs():
    for m in ("fact_g", "fact_ag", "fact_nc"):
        assert load(math_driver(m, 1)).method_keys()
