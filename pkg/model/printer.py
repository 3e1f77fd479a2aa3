""" Canonical MTL formatter: 4-space indent, one statement per line, minimal parentheses """
import math

from model.lexer import encode_string
from model.syntax import (
    Assert, Assign, Binary, Call, ExprStmt, For, If, Index, Let, ListExpr, Literal, LiteralKind, Name,
    Return, StmtKind, Unary,
)


INDENT = "    "

_OR, _AND, _CMP, _ADD, _MUL, _UNARY, _POSTFIX, _ATOM = range(1, 9)
_BINARY_PREC = {"||": _OR, "&&": _AND, "+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL, "%": _MUL,
                "==": _CMP, "!=": _CMP, "<": _CMP, "<=": _CMP, ">": _CMP, ">=": _CMP}


def print_program(program):
    items = [print_function(fn) for fn in program.functions]
    items += [print_test(test) for test in program.tests]
    return "\n\n".join(items) + ("\n" if items else "")


def print_function(fn):
    params = ", ".join(f"{p.name}: {p.type}" if p.type else p.name for p in fn.params)
    head = _annotation_prefix(fn.annotations + (fn.origin.value,))
    head += f"fn {fn.name}({params})"
    if fn.return_type is not None:
        head += f" -> {fn.return_type}"
    return head + " " + print_block(fn.body, 0)


def print_test(test):
    return f"{_annotation_prefix(test.annotations)}test {test.name} {print_block(test.body, 0)}"


def print_block(block, depth):
    """Braced block; the opening brace belongs to the caller's line."""
    lines = ["{"]
    for stmt in block:
        lines.append(print_stmt(stmt, depth + 1))
    lines.append(INDENT * depth + "}")
    return "\n".join(lines)


def print_stmts(block):
    """Top-level statements of a block without braces, one per line."""
    return "\n".join(print_stmt(stmt, 0) for stmt in block)


def print_stmt(stmt, depth):
    pad = INDENT * depth + _annotation_prefix(stmt.annotations)
    payload = stmt.payload
    if isinstance(payload, Let):
        typed = f": {payload.type}" if payload.type else ""
        return f"{pad}let {payload.name}{typed} = {print_expr(payload.value)};"
    if isinstance(payload, Assign):
        return f"{pad}{payload.name} = {print_expr(payload.value)};"
    if isinstance(payload, ExprStmt):
        return f"{pad}{print_expr(payload.expr)};"
    if isinstance(payload, Assert):
        return f"{pad}assert {print_expr(payload.expr)};"
    if isinstance(payload, Return):
        return f"{pad}return;" if payload.value is None else f"{pad}return {print_expr(payload.value)};"
    if isinstance(payload, If):
        return pad + _print_if(payload, depth)
    if isinstance(payload, For):
        return f"{pad}for {payload.var} in {print_expr(payload.iterable)} {print_block(payload.body, depth)}"
    raise TypeError(f"unknown statement payload {payload!r}")


def _print_if(payload, depth):
    text = f"if {print_expr(payload.cond)} {print_block(payload.then, depth)}"
    orelse = payload.orelse
    if orelse is None:
        return text
    if len(orelse) == 1 and orelse[0].kind is StmtKind.IF and not orelse[0].annotations:
        return f"{text} else {_print_if(orelse[0].payload, depth)}"
    return f"{text} else {print_block(orelse, depth)}"


def _annotation_prefix(names):
    return "".join(f"#[{name}] " for name in names)


def print_expr(expr):
    return _expr(expr)[0]


def print_literal(kind, value):
    if kind is LiteralKind.INT:
        return str(value)
    if kind is LiteralKind.FLOAT:
        if math.isnan(value):
            return 'float("nan")'
        if math.isinf(value):
            return 'float("inf")' if value > 0 else 'float("-inf")'
        text = repr(value)
        if "e" in text and "." not in text.split("e")[0]:
            mantissa, exponent = text.split("e")
            text = f"{mantissa}.0e{exponent}"
        return text
    if kind is LiteralKind.STR:
        return encode_string(value)
    if kind is LiteralKind.BOOL:
        return "true" if value else "false"
    return "unit"


def _negative(literal):
    return literal.kind in (LiteralKind.INT, LiteralKind.FLOAT) and math.copysign(1, literal.value) < 0


def _expr(expr):
    """Return (text, precedence) for an expression."""
    if isinstance(expr, Literal):
        text = print_literal(expr.kind, expr.value)
        return text, (_UNARY if _negative(expr) and not text.startswith("float(") else _ATOM)
    if isinstance(expr, Name):
        return expr.name, _ATOM
    if isinstance(expr, Call):
        return f"{expr.callee}({', '.join(print_expr(arg) for arg in expr.args)})", _ATOM
    if isinstance(expr, ListExpr):
        return f"[{', '.join(print_expr(item) for item in expr.items)}]", _ATOM
    if isinstance(expr, Index):
        target, prec = _expr(expr.target)
        if prec < _POSTFIX:
            target = f"({target})"
        return f"{target}[{print_expr(expr.index)}]", _POSTFIX
    if isinstance(expr, Unary):
        operand, prec = _expr(expr.operand)
        plain_number = (isinstance(expr.operand, Literal) and not _negative(expr.operand)
                        and expr.operand.kind in (LiteralKind.INT, LiteralKind.FLOAT))
        if prec < _UNARY or (expr.op == "-" and plain_number):
            operand = f"({operand})"
        return f"{expr.op}{operand}", _UNARY
    if isinstance(expr, Binary):
        prec = _BINARY_PREC[expr.op]
        left, left_prec = _expr(expr.left)
        right, right_prec = _expr(expr.right)
        if left_prec < prec or (prec == _CMP and left_prec == _CMP):
            left = f"({left})"
        if right_prec <= prec:
            right = f"({right})"
        return f"{left} {expr.op} {right}", prec
    raise TypeError(f"unknown expression {expr!r}")
