"""
MTL syntax tree

Tokens, expressions, statements, functions, tests and programs of MTL, the
small imperative language that SUTs, MR-encoded test cases and input
transformations are written in. Every node is an immutable dataclass; source
spans never take part in equality so that structurally equal trees compare
equal regardless of formatting.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Optional, Union


Span = tuple[int, int]
NO_SPAN: Span = (0, 0)

KEYWORDS = frozenset({"fn", "test", "let", "if", "else", "for", "in", "return", "assert", "unit"})
PUNCTUATION = ("->", "==", "!=", "<=", ">=", "&&", "||",
               "(", ")", "{", "}", "[", "]", ",", ";", ":", ".", "=", "<", ">", "+", "-", "*", "/", "%", "!")


class TokenKind(Enum):
    IDENT = "IDENT"
    INT_LIT = "INT_LIT"
    FLOAT_LIT = "FLOAT_LIT"
    STR_LIT = "STR_LIT"
    BOOL_LIT = "BOOL_LIT"
    KEYWORD = "KEYWORD"
    PUNCT = "PUNCT"
    ANNOTATION = "ANNOTATION"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: Span

    def __repr__(self):
        return f"{self.kind.value} {self.text!r}@{self.span[0]}:{self.span[1]}"


class Origin(Enum):
    SUT = "sut"
    HELPER = "helper"
    TRANSFORMATION = "transformation"


class StmtKind(Enum):
    LET = "LET"
    ASSIGN = "ASSIGN"
    EXPR = "EXPR"
    ASSERT = "ASSERT"
    RETURN = "RETURN"
    IF = "IF"
    FOR = "FOR"


class LiteralKind(Enum):
    INT = "int"
    FLOAT = "float"
    STR = "str"
    BOOL = "bool"
    UNIT = "unit"


@dataclass(frozen=True)
class TypeRef:
    """Optional annotation such as `str` or `list[int]`; checked only at run time."""
    name: str
    arg: Optional["TypeRef"] = None

    def __str__(self):
        return f"{self.name}[{self.arg}]" if self.arg else self.name


# Expressions

@dataclass(frozen=True)
class Literal:
    kind: LiteralKind
    value: object
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Name:
    name: str
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class ListExpr:
    items: tuple
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Call:
    callee: str
    args: tuple
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Index:
    target: "Expr"
    index: "Expr"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Span = field(default=NO_SPAN, compare=False)


Expr = Union[Literal, Name, ListExpr, Call, Index, Unary, Binary]


# Statement payloads

@dataclass(frozen=True)
class Let:
    name: str
    type: Optional[TypeRef]
    value: Expr


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr


@dataclass(frozen=True)
class Assert:
    expr: Expr


@dataclass(frozen=True)
class Return:
    value: Optional[Expr]


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Block"
    orelse: Optional["Block"] = None


@dataclass(frozen=True)
class For:
    var: str
    iterable: Expr
    body: "Block"


Payload = Union[Let, Assign, ExprStmt, Assert, Return, If, For]

_KIND_OF = {Let: StmtKind.LET, Assign: StmtKind.ASSIGN, ExprStmt: StmtKind.EXPR, Assert: StmtKind.ASSERT,
            Return: StmtKind.RETURN, If: StmtKind.IF, For: StmtKind.FOR}


@dataclass(frozen=True)
class Stmt:
    id: int
    kind: StmtKind
    payload: Payload
    annotations: tuple = ()
    span: Span = field(default=NO_SPAN, compare=False)

    @staticmethod
    def make(payload, annotations=(), span=NO_SPAN, id=0):
        return Stmt(id=id, kind=_KIND_OF[type(payload)], payload=payload, annotations=tuple(annotations), span=span)

    def has_annotation(self, name):
        return name in self.annotations

    def defined_name(self):
        """Name introduced by a LET, else None."""
        return self.payload.name if self.kind is StmtKind.LET else None


@dataclass(frozen=True)
class Block:
    """A statement block; ids are always 0..n-1 in textual order."""
    stmts: tuple = ()

    @staticmethod
    def of(stmts):
        """Build a block from statements, renumbering ids densely."""
        return Block(tuple(replace(stmt, id=index) for index, stmt in enumerate(stmts)))

    def __iter__(self) -> Iterator[Stmt]:
        return iter(self.stmts)

    def __len__(self):
        return len(self.stmts)

    def __getitem__(self, stmt_id) -> Stmt:
        return self.stmts[stmt_id]

    def ids(self):
        return [stmt.id for stmt in self.stmts]

    def select(self, ids):
        """Statements whose id is in `ids`, in block order, renumbered."""
        wanted = set(ids)
        return Block.of([stmt for stmt in self.stmts if stmt.id in wanted])


@dataclass(frozen=True)
class Param:
    name: str
    type: Optional[TypeRef] = None


@dataclass(frozen=True)
class FuncDef:
    name: str
    params: tuple
    return_type: Optional[TypeRef]
    body: Block
    origin: Origin = Origin.HELPER
    annotations: tuple = ()
    span: Span = field(default=NO_SPAN, compare=False)

    @property
    def arity(self):
        return len(self.params)

    @property
    def param_names(self):
        return [param.name for param in self.params]


@dataclass(frozen=True)
class TestDef:
    name: str
    body: Block
    annotations: tuple = ()
    span: Span = field(default=NO_SPAN, compare=False)


@dataclass(frozen=True)
class Program:
    functions: tuple = ()
    tests: tuple = ()

    def function(self, name) -> Optional[FuncDef]:
        return next((fn for fn in self.functions if fn.name == name), None)

    def test(self, name) -> Optional[TestDef]:
        return next((t for t in self.tests if t.name == name), None)

    def functions_of(self, origin):
        return [fn for fn in self.functions if fn.origin is origin]

    def merged(self, other):
        return Program(self.functions + other.functions, self.tests + other.tests)


# Traversal helpers

def child_exprs(expr):
    """Direct sub-expressions of an expression."""
    if isinstance(expr, ListExpr):
        return list(expr.items)
    if isinstance(expr, Call):
        return list(expr.args)
    if isinstance(expr, Index):
        return [expr.target, expr.index]
    if isinstance(expr, Unary):
        return [expr.operand]
    if isinstance(expr, Binary):
        return [expr.left, expr.right]
    return []


def walk_expr(expr):
    """Pre-order walk over an expression tree."""
    yield expr
    for child in child_exprs(expr):
        yield from walk_expr(child)


def stmt_exprs(stmt):
    """Expressions evaluated by the statement itself (nested blocks excluded)."""
    payload = stmt.payload
    if isinstance(payload, (Let, Assign)):
        return [payload.value]
    if isinstance(payload, (ExprStmt, Assert)):
        return [payload.expr]
    if isinstance(payload, Return):
        return [payload.value] if payload.value is not None else []
    if isinstance(payload, If):
        return [payload.cond]
    if isinstance(payload, For):
        return [payload.iterable]
    return []


def child_blocks(stmt):
    payload = stmt.payload
    if isinstance(payload, If):
        return [payload.then] + ([payload.orelse] if payload.orelse is not None else [])
    if isinstance(payload, For):
        return [payload.body]
    return []


def iter_stmts(block, path=()):
    """Yield (path, stmt) for every statement in a block, nested ones included.

    Paths list statement ids from the outermost block inwards; an IF's else
    block continues the numbering space of its own block, so paths through an
    else branch carry a -1 marker before the nested id.
    """
    for stmt in block:
        here = path + (stmt.id,)
        yield here, stmt
        payload = stmt.payload
        if isinstance(payload, If):
            yield from iter_stmts(payload.then, here)
            if payload.orelse is not None:
                yield from iter_stmts(payload.orelse, here + (-1,))
        elif isinstance(payload, For):
            yield from iter_stmts(payload.body, here)


def expr_names(expr):
    """Variable names read by an expression."""
    return {node.name for node in walk_expr(expr) if isinstance(node, Name)}


def expr_calls(expr):
    """Callee names invoked by an expression, in evaluation order."""
    return [node.callee for node in walk_expr(expr) if isinstance(node, Call)]


def block_calls(block):
    """Every callee name in a block, nested statements included."""
    calls = []
    for _, stmt in iter_stmts(block):
        for expr in stmt_exprs(stmt):
            calls.extend(expr_calls(expr))
    return calls
