"""
Static checker for MTL programs

A program is "compilable" when check_program reports no ERROR: every name
resolves, every call has the right arity, nothing is used before it is
defined or defined twice, and every function returns on every path.
"""
from dataclasses import dataclass
from enum import Enum

from model.builtins import BUILTINS
from model.syntax import (
    Assert, Assign, Call, ExprStmt, For, If, Let, Name, Origin, Program, Return, StmtKind, iter_stmts,
    walk_expr,
)
from model.values import KNOWN_TYPES


SUT_PREFIX = "sut."


class Severity(Enum):
    ERROR = "ERROR"
    WARN = "WARN"


@dataclass(frozen=True)
class Diagnostic:
    span: tuple
    severity: Severity
    message: str

    def read(self):
        return {"line": self.span[0], "column": self.span[1], "severity": self.severity.value,
                "message": self.message}

    def __str__(self):
        return f"{self.span[0]}:{self.span[1]}: {self.severity.value.lower()}: {self.message}"


@dataclass(frozen=True)
class CheckReport:
    diagnostics: tuple = ()

    @property
    def ok(self):
        return not any(d.severity is Severity.ERROR for d in self.diagnostics)

    @property
    def errors(self):
        return [d for d in self.diagnostics if d.severity is Severity.ERROR]

    def read(self):
        return {"ok": self.ok, "diagnostics": [d.read() for d in self.diagnostics]}


def sut_signatures(functions):
    """name -> arity for SUT-origin functions."""
    return {fn.name: fn.arity for fn in functions if fn.origin is Origin.SUT}


def check_program(program, suts=None, helpers=()):
    """Check a program against the SUT registry signatures.

    Args:
        program: parsed Program.
        suts: name -> arity of callable SUT entries; SUT-origin functions of
            the program itself are always included.
        helpers: extra FuncDefs in scope (e.g. helpers linked from an MTC).

    Returns:
        CheckReport with diagnostics in source order.
    """
    signatures = dict(suts or {})
    signatures.update(sut_signatures(program.functions))
    return _Checker(program, signatures, helpers).run()


def check_function(fn, suts=None, helpers=()):
    """Check one function in the context of helpers (used for candidates)."""
    return check_program(Program((fn,)), suts, helpers)


def block_returns(block):
    """True when every control path through the block ends in a return."""
    for stmt in block:
        if stmt.kind is StmtKind.RETURN:
            return True
        if stmt.kind is StmtKind.IF and stmt.payload.orelse is not None:
            if block_returns(stmt.payload.then) and block_returns(stmt.payload.orelse):
                return True
    return False


class _Checker:

    def __init__(self, program, suts, helpers):
        self.program = program
        self.suts = suts
        self.functions = {}
        self.diagnostics = []
        for fn in tuple(helpers) + tuple(program.functions):
            self.functions.setdefault(fn.name, fn)

    def error(self, span, message):
        self.diagnostics.append(Diagnostic(span, Severity.ERROR, message))

    def warn(self, span, message):
        self.diagnostics.append(Diagnostic(span, Severity.WARN, message))

    def run(self):
        seen = set()
        for fn in self.program.functions:
            if fn.name in seen or fn.name in BUILTINS:
                self.error(fn.span, f"duplicate definition of '{fn.name}'")
            seen.add(fn.name)
            self.check_function(fn)
        tests = set()
        for test in self.program.tests:
            if test.name in tests:
                self.error(test.span, f"duplicate definition of test '{test.name}'")
            tests.add(test.name)
            self.check_body(test.body, [], in_function=False)
        return CheckReport(tuple(sorted(self.diagnostics, key=lambda d: d.span)))

    def check_function(self, fn):
        params = []
        for param in fn.params:
            if param.name in params:
                self.error(fn.span, f"duplicate definition of parameter '{param.name}'")
            params.append(param.name)
            self.check_type(param.type, fn.span)
        self.check_type(fn.return_type, fn.span)
        self.check_body(fn.body, params, in_function=True)
        if not block_returns(fn.body):
            self.error(fn.span, f"missing return in function '{fn.name}'")

    def check_type(self, type_ref, span):
        while type_ref is not None:
            if type_ref.name not in KNOWN_TYPES:
                self.error(span, f"unknown type '{type_ref.name}'")
            type_ref = type_ref.arg

    def check_body(self, body, params, in_function):
        declared = {stmt.payload.name for _, stmt in iter_stmts(body) if stmt.kind is StmtKind.LET}
        declared |= {stmt.payload.var for _, stmt in iter_stmts(body) if stmt.kind is StmtKind.FOR}
        self.reads = set()
        self.declared = declared
        self.in_function = in_function
        lets = []
        self.block(body, [set(params)], lets)
        for stmt in lets:
            if stmt.payload.name not in self.reads:
                self.warn(stmt.span, f"unused variable '{stmt.payload.name}'")

    def visible(self, scopes, name):
        return any(name in scope for scope in scopes)

    def block(self, block, scopes, lets):
        scopes = scopes + [set()]
        for stmt in block:
            payload = stmt.payload
            if isinstance(payload, Let):
                self.check_type(payload.type, stmt.span)
                self.expr(payload.value, scopes, stmt.span)
                if self.visible(scopes, payload.name):
                    self.error(stmt.span, f"duplicate definition of '{payload.name}'")
                scopes[-1].add(payload.name)
                lets.append(stmt)
            elif isinstance(payload, Assign):
                self.expr(payload.value, scopes, stmt.span)
                self.name(payload.name, scopes, stmt.span, read=False)
            elif isinstance(payload, (ExprStmt, Assert)):
                self.expr(payload.expr, scopes, stmt.span)
            elif isinstance(payload, Return):
                if not self.in_function:
                    self.error(stmt.span, "return outside function")
                if payload.value is not None:
                    self.expr(payload.value, scopes, stmt.span)
            elif isinstance(payload, If):
                self.expr(payload.cond, scopes, stmt.span)
                self.block(payload.then, scopes, lets)
                if payload.orelse is not None:
                    self.block(payload.orelse, scopes, lets)
            elif isinstance(payload, For):
                self.expr(payload.iterable, scopes, stmt.span)
                if self.visible(scopes, payload.var):
                    self.error(stmt.span, f"duplicate definition of '{payload.var}'")
                self.block(payload.body, scopes + [{payload.var}], lets)

    def name(self, name, scopes, span, read=True):
        if read:
            self.reads.add(name)
        if self.visible(scopes, name):
            return
        if name in self.declared:
            self.error(span, f"'{name}' used before definition or out of scope")
        else:
            self.error(span, f"unresolved name '{name}'")

    def expr(self, expr, scopes, span):
        for node in walk_expr(expr):
            where = node.span if node.span != (0, 0) else span
            if isinstance(node, Name):
                self.name(node.name, scopes, where)
            elif isinstance(node, Call):
                self.call(node, where)

    def call(self, node, span):
        count = len(node.args)
        callee = node.callee
        if callee.startswith(SUT_PREFIX):
            target = callee[len(SUT_PREFIX):]
            if target not in self.suts:
                self.error(span, f"unresolved name '{callee}'")
            elif self.suts[target] != count:
                self.arity(span, callee, self.suts[target], count)
            return
        if "." in callee:
            self.error(span, f"unresolved name '{callee}'")
        elif callee in self.functions:
            expected = self.functions[callee].arity
            if expected != count:
                self.arity(span, callee, expected, count)
        elif callee in self.suts:
            if self.suts[callee] != count:
                self.arity(span, callee, self.suts[callee], count)
        elif callee in BUILTINS:
            entry = BUILTINS[callee]
            if not entry.accepts(count):
                self.arity(span, callee, entry.min_arity, count)
        else:
            self.error(span, f"unresolved name '{callee}'")

    def arity(self, span, callee, expected, got):
        self.error(span, f"arity mismatch: '{callee}' expects {expected} argument(s), got {got}")
