""" Parser and canonical printer """
import os
import random

import pytest

from api.synth import random_program
from model.errors import LexError, ParseError
from model.parser import parse_block, parse_expr, parse_program
from model.printer import print_expr, print_program, print_stmts
from model.syntax import (
    Binary, Call, For, If, Index, Let, ListExpr, Literal, LiteralKind, Name, Origin, StmtKind, TypeRef, Unary,
)


def _int(value):
    return Literal(LiteralKind.INT, value)


# Expressions

class TestPrecedence:
    def test_multiplication_binds_tighter(self):
        assert parse_expr("1 + 2 * 3") == Binary("+", _int(1), Binary("*", _int(2), _int(3)))

    def test_additive_is_left_associative(self):
        assert parse_expr("a - b - c") == Binary("-", Binary("-", Name("a"), Name("b")), Name("c"))

    def test_logic_below_comparison(self):
        expected = Binary("||", Binary("<", Name("a"), Name("b")),
                          Binary("&&", Name("c"), Binary("==", Name("d"), _int(1))))
        assert parse_expr("a < b || c && d == 1") == expected

    def test_indexing_binds_tighter_than_unary(self):
        assert parse_expr("-xs[0]") == Unary("-", Index(Name("xs"), _int(0)))

    def test_parentheses_group(self):
        assert parse_expr("(1 + 2) * 3") == Binary("*", Binary("+", _int(1), _int(2)), _int(3))


def test_negative_literals_fold():
    assert parse_expr("-5") == _int(-5)
    assert parse_expr("-2.5") == Literal(LiteralKind.FLOAT, -2.5)
    assert parse_expr("-(5)") == Unary("-", _int(5))


def test_i64_bounds():
    assert parse_expr("-9223372036854775808") == _int(-(2 ** 63))
    with pytest.raises(ParseError, match="integer literal out of range"):
        parse_expr("9223372036854775808")


@pytest.mark.parametrize("source,expected", [
    ('"a\\tb"', Literal(LiteralKind.STR, "a\tb")),
    ("true", Literal(LiteralKind.BOOL, True)),
    ("unit", Literal(LiteralKind.UNIT, None)),
    ("[]", ListExpr(())),
    ("[1, x]", ListExpr((_int(1), Name("x")))),
    ("sut.encode(x, 2)", Call("sut.encode", (Name("x"), _int(2)))),
    ("now_ticks()", Call("now_ticks", ())),
])
def test_primaries(source, expected):
    assert parse_expr(source) == expected


@pytest.mark.parametrize("source,message", [
    ("a < b < c", "comparisons cannot be chained"),
    ("text.length", "qualified names must be called"),
    ("1 +", "expected expression"),
    ("f(1", r"expected '\)'"),
    ("1 2", "unexpected trailing input"),
])
def test_expression_errors(source, message):
    with pytest.raises(ParseError, match=message):
        parse_expr(source)


def test_errors_carry_spans():
    with pytest.raises(ParseError) as info:
        parse_block("let x = 1;\nlet = 2;")
    assert info.value.span == (2, 5)


def test_lex_errors_surface_through_the_parser():
    with pytest.raises(LexError):
        parse_block('let s = "open;')


# Statements and items

def test_block_ids_are_dense():
    block = parse_block("let a = 1;\nif a > 0 { a = 2; a = 3; }\nassert a == 3;")
    assert block.ids() == [0, 1, 2]
    assert block[1].payload.then.ids() == [0, 1]


def test_statement_kinds():
    block = parse_block("let a: list[int] = [];\na = append(a, 1);\nappend(a, 2);\nfor x in a { }\nassert true;")
    assert [stmt.kind for stmt in block] == [StmtKind.LET, StmtKind.ASSIGN, StmtKind.EXPR, StmtKind.FOR,
                                             StmtKind.ASSERT]
    assert block[0].payload == Let("a", TypeRef("list", TypeRef("int")), ListExpr(()))
    assert isinstance(block[3].payload, For)


def test_else_if_chain_nests_in_else_block():
    block = parse_block("if a { x = 1; } else if b { x = 2; } else { x = 3; }")
    outer = block[0].payload
    assert isinstance(outer, If)
    assert len(outer.orelse) == 1
    inner = outer.orelse[0].payload
    assert inner.cond == Name("b")
    assert len(inner.orelse) == 1


def test_statement_annotations():
    block = parse_block("#[source] let a = 1;\n#[followup] let b = 2;")
    assert block[0].has_annotation("source")
    assert block[1].annotations == ("followup",)


def test_function_origins():
    program = parse_program("""
        #[sut] fn a() -> int { return 1; }
        fn b(x: str, y) { return; }
        #[pure] #[transformation] fn c() { return; }
    """, Origin.HELPER)
    a, b, c = program.functions
    assert (a.origin, b.origin, c.origin) == (Origin.SUT, Origin.HELPER, Origin.TRANSFORMATION)
    assert b.param_names == ["x", "y"]
    assert b.params[0].type == TypeRef("str")
    assert c.annotations == ("pure",)
    assert program.function("b") is b


def test_tests_are_items():
    program = parse_program("test t { assert true; }")
    assert program.test("t").body[0].kind is StmtKind.ASSERT


def test_top_level_garbage_is_rejected():
    with pytest.raises(ParseError, match="expected 'fn' or 'test'"):
        parse_program("let x = 1;")


def test_spans_do_not_affect_equality():
    assert parse_block("let a = 1;") == parse_block("\n\n   let   a=1 ;")


# Printer

@pytest.mark.parametrize("source", [
    "a - (b - c)",
    "(a + b) * c",
    "-(5)",
    "x - -1",
    "(-1)[0]",
    "!(a && b)",
    "(a < b) == c",
    'float("nan")',
])
def test_printer_keeps_needed_parentheses(source):
    assert print_expr(parse_expr(source)) == source


def test_printer_drops_redundant_parentheses():
    assert print_expr(parse_expr("((a)) + (b * c)")) == "a + b * c"


def test_printer_layout():
    block = parse_block("#[source] let a = 1; if a > 0 { a = 2; } else { a = 3; }")
    assert print_stmts(block) == (
        "#[source] let a = 1;\n"
        "if a > 0 {\n"
        "    a = 2;\n"
        "} else {\n"
        "    a = 3;\n"
        "}"
    )


def test_printed_corpus_sources_reparse(corpus_dir):
    for case in sorted(os.listdir(corpus_dir)):
        path = os.path.join(corpus_dir, case, "mtc.mtl")
        with open(path, encoding="utf-8") as f:
            program = parse_program(f.read())
        assert parse_program(print_program(program)) == program, case


def test_self_contained_example_file(corpus_dir):
    with open(os.path.join(os.path.dirname(corpus_dir), "docs", "date_format.mtl"), encoding="utf-8") as f:
        program = parse_program(f.read())
    assert [fn.name for fn in program.functions_of(Origin.SUT)] == ["to_medium_date"]
    assert [fn.name for fn in program.functions_of(Origin.HELPER)] == ["plus_one_day"]
    assert [t.name for t in program.tests] == ["test_to_medium_date_next_day"]


@pytest.mark.parametrize("seed", range(1000))
def test_random_programs_survive_printing(seed):
    program = random_program(random.Random(seed))
    assert parse_program(print_program(program)) == program
