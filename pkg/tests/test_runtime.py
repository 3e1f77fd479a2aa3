""" Evaluator semantics, builtins and values """
import math

import pytest

from model.parser import parse_block, parse_program
from model.runtime import Environment, Limits, Status, SutRegistry, call_function, execute
from model.syntax import Origin, TypeRef
from model.values import UNIT, literalize, matches_type, render, to_display, value_eq


def run(source, **kwargs):
    return execute(parse_block(source), **kwargs)


def value_of(expression):
    outcome = run(f"let v = {expression};")
    assert outcome.status is Status.OK, outcome.error
    return outcome.bindings["v"]


def error_of(expression):
    outcome = run(f"let v = {expression};")
    assert outcome.status is Status.RUNTIME_ERROR
    return outcome.error


# Arithmetic

@pytest.mark.parametrize("expression,expected", [
    ("-7 / 2", -3),
    ("-7 % 2", -1),
    ("7 % -2", 1),
    ("7 / 2.0", 3.5),
    ("2 + 3 * 4", 14),
    ('"ab" + "cd"', "abcd"),
    ("[1] + [2, 3]", (1, 2, 3)),
    ("1 == 1.0", False),
    ("[1, [2]] == [1, [2]]", True),
    ('"a" < "b"', True),
    ("false && 1 / 0 == 0", False),
    ("true || 1 / 0 == 0", True),
])
def test_operators(expression, expected):
    assert value_eq(value_of(expression), expected)


@pytest.mark.parametrize("expression,message", [
    ("9223372036854775807 + 1", "integer overflow"),
    ("-9223372036854775808 * -1", "integer overflow"),
    ("1 / 0", "division by zero"),
    ("1.5 % 0", "division by zero"),
    ('1 < "a"', "cannot compare int with str"),
    ('1 + "a"', "'+' cannot combine int and str"),
    ("[1, 2, 3][3]", "index 3 out of range for length 3"),
    ("!1", "'!' needs a bool, got int"),
    ("1 && true", "'&&' operand must be bool, got int"),
])
def test_runtime_errors(expression, message):
    assert error_of(expression) == message


def test_nan_never_equals_itself():
    outcome = run('let n = float("nan");\nlet same = n == n;')
    assert outcome.bindings["same"] is False


# Statements

def test_assert_failure_reports_statement():
    outcome = run("let a = 1;\nassert a == 1;\nassert a == 2;\nlet b = 3;")
    assert outcome.status is Status.ASSERT_FAIL
    assert outcome.failed_assert == 2
    assert "b" not in outcome.bindings


def test_assert_needs_a_bool():
    outcome = run("assert 1;")
    assert outcome.status is Status.RUNTIME_ERROR
    assert outcome.error == "assert needs a bool, got int"


@pytest.mark.parametrize("source,message", [
    ('let x: int = "a";', "'x' annotated int but got str"),
    ('let xs: list[int] = [1, "a"];', "'xs' annotated list[int] but got list"),
    ("y = 1;", "unresolved name 'y'"),
    ("return 1;", "return outside function"),
    ("for c in 5 { }", "cannot iterate over int"),
])
def test_statement_errors(source, message):
    outcome = run(source)
    assert outcome.status is Status.RUNTIME_ERROR
    assert outcome.error == message


def test_loops_get_a_fresh_scope_per_iteration():
    outcome = run("let total = 0;\nfor x in [1, 2, 3] { let sq = x * x; total = total + sq; }")
    assert outcome.bindings == {"total": 14}


def test_strings_iterate_by_character():
    outcome = run('let n = 0;\nfor c in "héllo" { if c == "l" { n = n + 1; } }')
    assert outcome.bindings["n"] == 2


def test_step_limit_is_not_an_assertion_failure():
    outcome = run("let n = 0;\nfor i in range(0, 50) { n = n + 1; }\nassert false;", limits=Limits(max_steps=40))
    assert outcome.status is Status.STEP_LIMIT
    assert outcome.steps_used == 40


@pytest.mark.parametrize("growth", [
    "s = s + s;",
    "s = repeat(s, 2);",
    's = replace(s, "a", "aa");',
    's = join([s, s], "");',
])
def test_doubling_strings_hits_the_step_limit(growth):
    outcome = run(f'let s = "ab";\nfor i in range(0, 40) {{ {growth} }}')
    assert outcome.status is Status.STEP_LIMIT
    assert outcome.steps_used == 100_000


def test_doubling_lists_hits_the_step_limit():
    outcome = run("let xs = [1, 2];\nfor i in range(0, 40) { xs = xs + xs; }")
    assert outcome.status is Status.STEP_LIMIT


def test_concatenation_charges_the_result_length():
    short = run('let s = "a" + "b";')
    long = run('let s = "aaaaaaaaaa" + "bbbbbbbbbb";')
    assert long.steps_used - short.steps_used == 18


def test_coverage_counts_top_level_statements():
    outcome = run("let a = 0;\nfor i in [1, 2] { a = a + i; }\nassert a == 3;")
    assert outcome.coverage == {0: 1, 1: 1, 2: 1}
    assert outcome.path_coverage[(1, 0)] == 2


def test_environment_is_not_mutated():
    env = Environment(bindings={"x": 1})
    outcome = run("x = 2;", env=env)
    assert outcome.bindings["x"] == 2
    assert env.bindings == {"x": 1}


def test_clock_and_rng_are_deterministic():
    source = "let a = now_ticks();\nlet b = now_ticks();\nlet r = rand_int(1, 1000);"
    first = run(source, env=Environment(seed=7))
    second = run(source, env=Environment(seed=7))
    assert (first.bindings["a"], first.bindings["b"]) == (1000, 1001)
    assert first.same_behaviour(second)
    assert 1 <= first.bindings["r"] <= 1000
    assert run(source, env=Environment(clock_start=5)).bindings["a"] == 5


# Functions

SUT = parse_program("""
fn shout(text: str) -> str {
    return upper(text) + "!";
}

fn spin(n: int) -> int {
    return spin(n + 1);
}

fn bad() -> int {
    return "no";
}
""", Origin.SUT)


def test_sut_calls_go_through_the_registry():
    registry = SutRegistry.from_program(SUT)
    outcome = run('let s = sut.shout("ok");', registry=registry)
    assert outcome.bindings["s"] == "OK!"


def test_call_function():
    registry = SutRegistry.from_program(SUT)
    assert call_function(registry.get("shout"), ["hi"], registry) == ("HI!", None)
    value, broken = call_function(registry.get("shout"), [5], registry)
    assert value is None
    assert broken.error == "parameter 'text' of 'shout' expects str, got int"


def test_return_type_is_checked():
    registry = SutRegistry.from_program(SUT)
    _, broken = call_function(registry.get("bad"), [], registry)
    assert broken.error == "'bad' returns int but got str"


def test_call_depth_is_bounded():
    registry = SutRegistry.from_program(SUT)
    outcome = run("let v = sut.spin(0);", registry=registry)
    assert outcome.status is Status.RUNTIME_ERROR
    assert "call depth limit 64 exceeded" in outcome.error


def test_helpers_come_from_the_environment():
    helper = parse_program("fn twice(n: int) -> int { return n * 2; }").functions[0]
    outcome = run("let v = twice(4);", env=Environment().with_functions([helper]))
    assert outcome.bindings["v"] == 8


def test_registry_replacement_keeps_order():
    registry = SutRegistry.from_program(SUT)
    patched = parse_program('fn shout(text: str) -> str { return text; }', Origin.SUT).functions[0]
    replaced = registry.replaced(patched)
    assert replaced.names() == registry.names()
    assert replaced.get("shout") is patched
    assert registry.get("shout") is not patched


def test_duplicate_registry_entries_are_rejected():
    fn = SUT.functions[0]
    with pytest.raises(ValueError):
        SutRegistry([fn, fn])


# Builtins

@pytest.mark.parametrize("expression,expected", [
    ('pad_left("7", 3, "0")', "007"),
    ('char_code("A", 0)', 65),
    ("from_char_code(97)", "a"),
    ('split("a,b,,c", ",")', ("a", "b", "", "c")),
    ('join(["x", "y"], "-")', "x-y"),
    ('replace("banana", "an", "AN")', "bANANa"),
    ('substr("hello", 1, 3)', "el"),
    ('trim("  pad \\n")', "pad"),
    ('index_of("hello", "l")', 2),
    ('reverse("abc")', "cba"),
    ("reverse([1, 2])", (2, 1)),
    ('repeat("ab", 3)', "ababab"),
    ('contains([1, [2]], [2])', True),
    ("round(2.5)", 3),
    ("round(-2.5)", -2),
    ("floor(-1.5)", -2),
    ("ceil(1.2)", 2),
    ("abs(-4)", 4),
    ("max(2, 7.5)", 7.5),
    ("pow(2, 10)", 1024),
    ("sqrt(16)", 4.0),
    ('int(" 42 ")', 42),
    ("int(-2.9)", -2),
    ("str(1.5)", "1.5"),
    ('str([1, "a"])', '[1, "a"]'),
    ("str(true)", "true"),
    ("range(2, 5)", (2, 3, 4)),
    ("sort([3, 1, 2])", (1, 2, 3)),
    ("sum([1, 2, 3])", 6),
    ("set_at([1, 2], 0, 9)", (9, 2)),
    ("remove_at([1, 2, 3], 1)", (1, 3)),
    ("slice([1, 2, 3], 1, 3)", (2, 3)),
    ("fill(0, 3)", (0, 0, 0)),
    ("type_of([])", "list"),
    ('format_date(plus_days(parse_date("2024-02-28", "yyyy-MM-dd"), 1), "yyyy-MM-dd")', "2024-02-29"),
    ('format_date(parse_date("2024-02-29", "yyyy-MM-dd"), "MMM d, yyyy")', "Feb 29, 2024"),
    ('parse_date("1970-01-02 00:00:01", "yyyy-MM-dd HH:mm:ss")', 86401),
    ('year_of(parse_date("Mar 5, 1999", "MMM d, yyyy"))', 1999),
])
def test_builtins(expression, expected):
    assert value_eq(value_of(expression), expected)


@pytest.mark.parametrize("expression,message", [
    ('substr("abc", 2, 5)', "substr range [2, 5) out of bounds for length 3"),
    ('int("4x")', "invalid int literal '4x'"),
    ("pow(2, 64)", "integer overflow"),
    ('split("abc", "")', "split separator must not be empty"),
    ("len(5)", "argument must be str or list, got int"),
    ("rand_int(5, 1)", "rand_int bounds are reversed"),
])
def test_builtin_errors(expression, message):
    assert error_of(expression) == message


def test_sqrt_of_negative_is_nan():
    assert math.isnan(value_of("sqrt(-1)"))


# Values

def test_value_equality_is_strict():
    assert not value_eq(1, True)
    assert not value_eq(0.0, -0.0)
    assert not value_eq((1,), [1])
    assert value_eq(UNIT, UNIT)


@pytest.mark.parametrize("value", [0, -3, 2.5, "q\"uote", True, (1, ("a",)), UNIT])
def test_render_evaluates_back(value):
    assert value_eq(value_of(render(value)), value)


def test_non_finite_floats_literalize_as_calls():
    assert render(float("inf")) == 'float("inf")'
    assert literalize(float("-inf")).callee == "float"
    assert math.isnan(value_of(render(float("nan"))))


def test_display_and_types():
    assert to_display(3.0) == "3.0"
    assert matches_type((1, 2), TypeRef("list", TypeRef("int")))
    assert not matches_type((1, "a"), TypeRef("list", TypeRef("int")))
    assert matches_type("x", TypeRef("any"))


def test_impossible_dates_are_runtime_errors():
    assert error_of('parse_date("2023-02-29", "yyyy-MM-dd")').startswith("invalid date '2023-02-29'")
