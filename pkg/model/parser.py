"""
Recursive-descent parser for MTL

    program  := item*
    item     := annotation* ( "fn" IDENT "(" params? ")" ( "->" type )? block
                            | "test" IDENT block )
    stmt     := annotation* ( let | assign | if | for | return | assert | expr ";" )

Expression precedence, loosest first: `||`, `&&`, comparisons (not
chainable), `+ -`, `* / %`, unary `- !`, indexing, primaries. The full EBNF
lives in docs/grammar.md.
"""
import math

from model.errors import ParseError
from model.lexer import decode_string, tokenize
from model.syntax import (
    Assert, Assign, Binary, Block, Call, ExprStmt, For, FuncDef, If, Index, Let, ListExpr, Literal,
    LiteralKind, Name, Origin, Param, Program, Return, Stmt, TestDef, TokenKind, TypeRef, Unary,
)


I64_MAX = 2 ** 63 - 1
I64_MIN = -(2 ** 63)

ORIGIN_ANNOTATIONS = {origin.value: origin for origin in Origin}
COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")


def parse_program(source, default_origin=Origin.HELPER):
    """Parse a whole MTL file.

    Args:
        source: program text.
        default_origin: origin for functions without a `#[sut]`, `#[helper]`
            or `#[transformation]` annotation.

    Returns:
        Program; raises ParseError (or LexError) on the first problem.
    """
    return _Parser(tokenize(source), default_origin).program()


def parse_block(source):
    """Parse a bare statement list (no surrounding braces) into a Block."""
    parser = _Parser(tokenize(source), Origin.HELPER)
    stmts = []
    while not parser.at_end():
        stmts.append(parser.statement())
    return Block.of(stmts)


def parse_expr(source):
    parser = _Parser(tokenize(source), Origin.HELPER)
    expr = parser.expression()
    if not parser.at_end():
        parser.fail("unexpected trailing input")
    return expr


class _Parser:

    def __init__(self, tokens, default_origin):
        self.tokens = tokens
        self.pos = 0
        self.default_origin = default_origin

    # token helpers

    def at_end(self):
        return self.pos >= len(self.tokens)

    def peek(self, offset=0):
        index = self.pos + offset
        return self.tokens[index] if index < len(self.tokens) else None

    def span(self):
        token = self.peek()
        if token is not None:
            return token.span
        if self.tokens:
            line, col = self.tokens[-1].span
            return (line, col + len(self.tokens[-1].text))
        return (1, 1)

    def fail(self, message):
        token = self.peek()
        found = repr(token.text) if token else "end of input"
        raise ParseError(f"{message}, found {found}", self.span())

    def check(self, text, kind=None):
        token = self.peek()
        if token is None or token.text != text:
            return False
        return kind is None or token.kind is kind

    def check_kind(self, kind):
        token = self.peek()
        return token is not None and token.kind is kind

    def accept(self, text):
        if self.check(text) and self.peek().kind in (TokenKind.PUNCT, TokenKind.KEYWORD):
            self.pos += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.fail(f"expected {text!r}")

    def ident(self):
        if not self.check_kind(TokenKind.IDENT):
            self.fail("expected identifier")
        token = self.peek()
        self.pos += 1
        return token.text

    def annotations(self):
        names = []
        while self.check_kind(TokenKind.ANNOTATION):
            names.append(self.peek().text[2:-1])
            self.pos += 1
        return names

    # items

    def program(self):
        functions, tests = [], []
        while not self.at_end():
            start = self.span()
            annotations = self.annotations()
            if self.accept("fn"):
                functions.append(self.function(annotations, start))
            elif self.accept("test"):
                name = self.ident()
                tests.append(TestDef(name, self.block(), tuple(annotations), start))
            else:
                self.fail("expected 'fn' or 'test'")
        return Program(tuple(functions), tuple(tests))

    def function(self, annotations, start):
        origin = self.default_origin
        kept = []
        for name in annotations:
            if name in ORIGIN_ANNOTATIONS:
                origin = ORIGIN_ANNOTATIONS[name]
            else:
                kept.append(name)
        name = self.ident()
        self.expect("(")
        params = []
        if not self.check(")"):
            params.append(self.param())
            while self.accept(","):
                params.append(self.param())
        self.expect(")")
        return_type = self.type_ref() if self.accept("->") else None
        body = self.block()
        return FuncDef(name, tuple(params), return_type, body, origin, tuple(kept), start)

    def param(self):
        name = self.ident()
        return Param(name, self.type_ref() if self.accept(":") else None)

    def type_ref(self):
        name = self.ident()
        if self.accept("["):
            arg = self.type_ref()
            self.expect("]")
            return TypeRef(name, arg)
        return TypeRef(name)

    # statements

    def block(self):
        self.expect("{")
        stmts = []
        while not self.accept("}"):
            if self.at_end():
                self.fail("expected '}'")
            stmts.append(self.statement())
        return Block.of(stmts)

    def statement(self):
        start = self.span()
        annotations = self.annotations()
        if self.accept("let"):
            name = self.ident()
            type_ref = self.type_ref() if self.accept(":") else None
            self.expect("=")
            payload = Let(name, type_ref, self.expression())
            self.expect(";")
        elif self.accept("if"):
            payload = self.if_payload()
        elif self.accept("for"):
            var = self.ident()
            self.expect("in")
            payload = For(var, self.expression(), self.block())
        elif self.accept("return"):
            value = None if self.check(";") else self.expression()
            payload = Return(value)
            self.expect(";")
        elif self.accept("assert"):
            payload = Assert(self.expression())
            self.expect(";")
        elif self.check_kind(TokenKind.IDENT) and self.peek(1) is not None and self.peek(1).text == "=":
            name = self.ident()
            self.expect("=")
            payload = Assign(name, self.expression())
            self.expect(";")
        else:
            payload = ExprStmt(self.expression())
            self.expect(";")
        return Stmt.make(payload, annotations, start)

    def if_payload(self):
        cond = self.expression()
        then = self.block()
        orelse = None
        if self.accept("else"):
            if self.check("if", TokenKind.KEYWORD):
                start = self.span()
                self.pos += 1
                orelse = Block.of([Stmt.make(self.if_payload(), (), start)])
            else:
                orelse = self.block()
        return If(cond, then, orelse)

    # expressions

    def expression(self):
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.check("||"):
            span = self.span()
            self.pos += 1
            left = Binary("||", left, self.and_expr(), span)
        return left

    def and_expr(self):
        left = self.comparison()
        while self.check("&&"):
            span = self.span()
            self.pos += 1
            left = Binary("&&", left, self.comparison(), span)
        return left

    def comparison(self):
        left = self.additive()
        token = self.peek()
        if token is not None and token.kind is TokenKind.PUNCT and token.text in COMPARISONS:
            self.pos += 1
            left = Binary(token.text, left, self.additive(), token.span)
            after = self.peek()
            if after is not None and after.kind is TokenKind.PUNCT and after.text in COMPARISONS:
                self.fail("comparisons cannot be chained")
        return left

    def additive(self):
        left = self.multiplicative()
        while self.check("+") or self.check("-"):
            token = self.peek()
            self.pos += 1
            left = Binary(token.text, left, self.multiplicative(), token.span)
        return left

    def multiplicative(self):
        left = self.unary()
        while self.check("*") or self.check("/") or self.check("%"):
            token = self.peek()
            self.pos += 1
            left = Binary(token.text, left, self.unary(), token.span)
        return left

    def unary(self, negated=False):
        token = self.peek()
        if token is not None and token.kind is TokenKind.PUNCT and token.text in ("-", "!"):
            self.pos += 1
            operand_token = self.peek()
            operand = self.unary(negated=token.text == "-")
            numeric = operand_token is not None and operand_token.kind in (TokenKind.INT_LIT, TokenKind.FLOAT_LIT)
            if token.text == "-" and numeric and isinstance(operand, Literal):
                return self.checked_literal(operand.kind, -operand.value, token.span)
            return Unary(token.text, self.checked(operand), token.span)
        expr = self.postfix()
        # 2**63 is only legal when a minus folds it into i64 range
        return expr if negated else self.checked(expr)

    def postfix(self):
        expr = self.primary()
        while self.check("["):
            span = self.span()
            self.pos += 1
            index = self.expression()
            self.expect("]")
            expr = Index(self.checked(expr), index, span)
        return expr

    def checked(self, expr):
        if isinstance(expr, Literal):
            return self.checked_literal(expr.kind, expr.value, expr.span)
        return expr

    def checked_literal(self, kind, value, span):
        if kind is LiteralKind.INT and not I64_MIN <= value <= I64_MAX:
            raise ParseError("integer literal out of range", span)
        return Literal(kind, value, span)

    def primary(self):
        token = self.peek()
        if token is None:
            self.fail("expected expression")
        kind, span = token.kind, token.span

        if kind is TokenKind.INT_LIT:
            self.pos += 1
            value = int(token.text)
            if value > I64_MAX + 1:
                raise ParseError("integer literal out of range", span)
            return Literal(LiteralKind.INT, value, span)
        if kind is TokenKind.FLOAT_LIT:
            self.pos += 1
            value = float(token.text)
            if not math.isfinite(value):
                raise ParseError("float literal out of range", span)
            return Literal(LiteralKind.FLOAT, value, span)
        if kind is TokenKind.STR_LIT:
            self.pos += 1
            return Literal(LiteralKind.STR, decode_string(token.text, span), span)
        if kind is TokenKind.BOOL_LIT:
            self.pos += 1
            return Literal(LiteralKind.BOOL, token.text == "true", span)
        if self.accept("unit"):
            return Literal(LiteralKind.UNIT, None, span)
        if kind is TokenKind.IDENT:
            name = self.ident()
            while self.check("."):
                self.pos += 1
                name = f"{name}.{self.ident()}"
            if self.accept("("):
                args = []
                if not self.check(")"):
                    args.append(self.expression())
                    while self.accept(","):
                        args.append(self.expression())
                self.expect(")")
                return Call(name, tuple(args), span)
            if "." in name:
                raise ParseError("qualified names must be called", span)
            return Name(name, span)
        if self.accept("("):
            expr = self.expression()
            self.expect(")")
            return expr
        if self.accept("["):
            items = []
            if not self.check("]"):
                items.append(self.expression())
                while self.accept(","):
                    items.append(self.expression())
            self.expect("]")
            return ListExpr(tuple(items), span)
        self.fail("expected expression")
