"""
Deterministic tree-walking evaluator for MTL

execute() runs a statement block against an immutable SUT registry and
reports an ExecutionOutcome: a three-valued verdict (OK, ASSERT_FAIL, broken)
plus the final bindings, per-statement coverage and the steps consumed.
Nothing here touches global state; the clock and the random source live in
the per-execution frame and are seeded from the Environment.
"""
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType

from model.builtins import BUILTINS
from model.checker import SUT_PREFIX
from model.syntax import (
    Assert, Assign, Binary, Call, ExprStmt, For, If, Index, Let, ListExpr, Literal, Name, Origin, Return, Unary,
)
from model.values import UNIT, EvalError, check_int, matches_type, to_json, type_name, value_eq


DEFAULT_MAX_STEPS = 100_000
DEFAULT_MAX_DEPTH = 64
DEFAULT_CLOCK_START = 1000


class Status(Enum):
    OK = "OK"
    ASSERT_FAIL = "ASSERT_FAIL"
    RUNTIME_ERROR = "RUNTIME_ERROR"
    STEP_LIMIT = "STEP_LIMIT"


@dataclass(frozen=True)
class Limits:
    max_steps: int = DEFAULT_MAX_STEPS
    max_depth: int = DEFAULT_MAX_DEPTH


@dataclass(frozen=True)
class Environment:
    """Initial state of one execution; never mutated by execute()."""
    bindings: dict = field(default_factory=dict)
    clock_start: int = DEFAULT_CLOCK_START
    seed: int = 0
    functions: tuple = ()

    def with_functions(self, functions):
        return Environment(dict(self.bindings), self.clock_start, self.seed, tuple(functions))


class SutRegistry:
    """The system under test: SUT-origin functions by name."""

    def __init__(self, functions):
        entries = {}
        for fn in functions:
            if fn.name in entries:
                raise ValueError(f"duplicate SUT entry '{fn.name}'")
            entries[fn.name] = fn
        self._entries = MappingProxyType(entries)
        self._signatures = MappingProxyType({name: fn.arity for name, fn in entries.items()})

    @classmethod
    def from_program(cls, program):
        return cls(program.functions_of(Origin.SUT))

    @property
    def entries(self):
        return self._entries

    @property
    def signatures(self):
        return self._signatures

    def get(self, name):
        return self._entries.get(name)

    def names(self):
        return list(self._entries)

    def replaced(self, fn):
        """Copy of the registry with one entry swapped (mutants, seeded faults)."""
        return SutRegistry([fn if name == fn.name else entry for name, entry in self._entries.items()])

    def __contains__(self, name):
        return name in self._entries

    def __len__(self):
        return len(self._entries)


@dataclass(frozen=True)
class ExecutionOutcome:
    status: Status
    bindings: dict = field(default_factory=dict)
    failed_assert: object = None
    failed_path: object = None
    error: object = None
    error_path: object = None
    coverage: dict = field(default_factory=dict)
    path_coverage: dict = field(default_factory=dict)
    function_coverage: dict = field(default_factory=dict)
    steps_used: int = 0

    @property
    def ok(self):
        return self.status is Status.OK

    def same_behaviour(self, other):
        """Equal status and value_eq-equal bindings."""
        if self.status is not other.status or set(self.bindings) != set(other.bindings):
            return False
        return all(value_eq(self.bindings[name], other.bindings[name]) for name in self.bindings)

    def read(self):
        return {
            "status": self.status.value,
            "failed_assert": self.failed_assert,
            "error": self.error,
            "steps_used": self.steps_used,
            "bindings": {name: to_json(value) for name, value in self.bindings.items()},
        }


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _AssertFailed(Exception):
    def __init__(self, path):
        self.path = path


class _StepLimit(Exception):
    pass


class _Located(Exception):
    """EvalError tagged with the statement path it happened at."""

    def __init__(self, message, path):
        super().__init__(message)
        self.message = message
        self.path = path


class _Frame:
    """Mutable state of one execution: budget, clock, random source, coverage."""

    def __init__(self, env, registry, limits):
        self.registry = registry
        self.limits = limits
        self.functions = {fn.name: fn for fn in env.functions}
        self.steps = 0
        self.clock = env.clock_start
        self.rng = random.Random(env.seed)
        self.depth = 0
        self.path_coverage = Counter()
        self.function_coverage = Counter()

    # hooks used by builtins

    def charge(self, amount=1):
        self.steps += amount
        if self.steps > self.limits.max_steps:
            raise _StepLimit()

    def tick(self):
        value = self.clock
        self.clock += 1
        return value

    def random_int(self, low, high):
        return self.rng.randint(low, high)

    # statements

    def run_block(self, block, scopes, path, owner):
        scopes.append({})
        try:
            for stmt in block:
                self.run_stmt(stmt, scopes, path + (stmt.id,), owner)
        finally:
            scopes.pop()

    def run_stmt(self, stmt, scopes, path, owner):
        self.charge()
        if owner is None:
            self.path_coverage[path] += 1
        else:
            self.function_coverage[(owner, path)] += 1
        try:
            self._dispatch(stmt.payload, scopes, path, owner)
        except EvalError as exc:
            raise _Located(str(exc), path)

    def _dispatch(self, payload, scopes, path, owner):
        if isinstance(payload, Let):
            value = self.eval(payload.value, scopes)
            if not matches_type(value, payload.type):
                raise EvalError(f"'{payload.name}' annotated {payload.type} but got {type_name(value)}")
            scopes[-1][payload.name] = value
        elif isinstance(payload, Assign):
            value = self.eval(payload.value, scopes)
            for scope in reversed(scopes):
                if payload.name in scope:
                    scope[payload.name] = value
                    break
            else:
                raise EvalError(f"unresolved name '{payload.name}'")
        elif isinstance(payload, ExprStmt):
            self.eval(payload.expr, scopes)
        elif isinstance(payload, Assert):
            value = self.eval(payload.expr, scopes)
            if type(value) is not bool:
                raise EvalError(f"assert needs a bool, got {type_name(value)}")
            if not value:
                raise _AssertFailed(path)
        elif isinstance(payload, Return):
            raise _Return(UNIT if payload.value is None else self.eval(payload.value, scopes))
        elif isinstance(payload, If):
            cond = self._bool(self.eval(payload.cond, scopes), "if condition")
            if cond:
                self.run_block(payload.then, scopes, path, owner)
            elif payload.orelse is not None:
                self.run_block(payload.orelse, scopes, path + (-1,), owner)
        elif isinstance(payload, For):
            iterable = self.eval(payload.iterable, scopes)
            if type(iterable) not in (tuple, str):
                raise EvalError(f"cannot iterate over {type_name(iterable)}")
            for item in iterable:
                scopes.append({payload.var: item})
                try:
                    self.run_block(payload.body, scopes, path, owner)
                finally:
                    scopes.pop()

    @staticmethod
    def _bool(value, what):
        if type(value) is not bool:
            raise EvalError(f"{what} must be bool, got {type_name(value)}")
        return value

    # expressions

    def eval(self, expr, scopes):
        self.charge()
        if isinstance(expr, Literal):
            return UNIT if expr.value is None else expr.value
        if isinstance(expr, Name):
            for scope in reversed(scopes):
                if expr.name in scope:
                    return scope[expr.name]
            raise EvalError(f"unresolved name '{expr.name}'")
        if isinstance(expr, ListExpr):
            return tuple(self.eval(item, scopes) for item in expr.items)
        if isinstance(expr, Index):
            return self.index(self.eval(expr.target, scopes), self.eval(expr.index, scopes))
        if isinstance(expr, Unary):
            return self.unary(expr.op, self.eval(expr.operand, scopes))
        if isinstance(expr, Binary):
            if expr.op in ("&&", "||"):
                left = self._bool(self.eval(expr.left, scopes), f"'{expr.op}' operand")
                if (expr.op == "&&") != left:
                    return left
                return self._bool(self.eval(expr.right, scopes), f"'{expr.op}' operand")
            value = binary(expr.op, self.eval(expr.left, scopes), self.eval(expr.right, scopes))
            if type(value) in (str, tuple):
                # concatenation pays for the size of its result
                self.charge(len(value))
            return value
        if isinstance(expr, Call):
            args = [self.eval(arg, scopes) for arg in expr.args]
            return self.call(expr.callee, args)
        raise EvalError(f"unknown expression {expr!r}")

    @staticmethod
    def index(target, position):
        if type(target) not in (tuple, str):
            raise EvalError(f"cannot index {type_name(target)}")
        if type(position) is not int:
            raise EvalError(f"index must be int, got {type_name(position)}")
        if not 0 <= position < len(target):
            raise EvalError(f"index {position} out of range for length {len(target)}")
        return target[position]

    @staticmethod
    def unary(op, value):
        if op == "!":
            if type(value) is not bool:
                raise EvalError(f"'!' needs a bool, got {type_name(value)}")
            return not value
        if type(value) is int:
            return check_int(-value)
        if type(value) is float:
            return -value
        raise EvalError(f"'-' needs a number, got {type_name(value)}")

    def call(self, callee, args):
        if callee.startswith(SUT_PREFIX):
            fn = self.registry.get(callee[len(SUT_PREFIX):])
            if fn is None:
                raise EvalError(f"unresolved name '{callee}'")
            return self.invoke(fn, args)
        fn = self.functions.get(callee) or self.registry.get(callee)
        if fn is not None:
            return self.invoke(fn, args)
        entry = BUILTINS.get(callee)
        if entry is None:
            raise EvalError(f"unresolved name '{callee}'")
        if not entry.accepts(len(args)):
            raise EvalError(f"arity mismatch: '{callee}' expects {entry.min_arity} argument(s), got {len(args)}")
        return entry.fn(self, *args)

    def invoke(self, fn, args):
        if len(args) != fn.arity:
            raise EvalError(f"arity mismatch: '{fn.name}' expects {fn.arity} argument(s), got {len(args)}")
        for param, value in zip(fn.params, args):
            if not matches_type(value, param.type):
                raise EvalError(f"parameter '{param.name}' of '{fn.name}' expects {param.type}, "
                                f"got {type_name(value)}")
        if self.depth >= self.limits.max_depth:
            raise EvalError(f"call depth limit {self.limits.max_depth} exceeded")
        self.depth += 1
        scopes = [dict(zip(fn.param_names, args))]
        try:
            self.run_block(fn.body, scopes, (), fn.name)
            result = UNIT
        except _Return as signal:
            result = signal.value
        except _Located as exc:
            raise EvalError(f"in '{fn.name}': {exc.message}")
        except _AssertFailed:
            raise EvalError(f"assertion failed in '{fn.name}'")
        finally:
            self.depth -= 1
        if not matches_type(result, fn.return_type):
            raise EvalError(f"'{fn.name}' returns {fn.return_type} but got {type_name(result)}")
        return result


def binary(op, left, right):
    """Apply a non-short-circuit binary operator."""
    if op == "==":
        return value_eq(left, right)
    if op == "!=":
        return not value_eq(left, right)

    kinds = (type(left), type(right))
    numeric = all(kind in (int, float) for kind in kinds)
    if op in ("<", "<=", ">", ">="):
        if not (numeric or kinds == (str, str)):
            raise EvalError(f"cannot compare {type_name(left)} with {type_name(right)}")
        return {"<": left < right, "<=": left <= right, ">": left > right, ">=": left >= right}[op]

    if op == "+" and kinds in ((str, str), (tuple, tuple)):
        return left + right
    if not numeric:
        raise EvalError(f"'{op}' cannot combine {type_name(left)} and {type_name(right)}")

    if kinds == (int, int):
        if op == "+":
            return check_int(left + right)
        if op == "-":
            return check_int(left - right)
        if op == "*":
            return check_int(left * right)
        if right == 0:
            raise EvalError("division by zero")
        quotient = abs(left) // abs(right)
        if (left < 0) != (right < 0):
            quotient = -quotient
        if op == "/":
            return check_int(quotient)
        return left - right * quotient

    left, right = float(left), float(right)
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if right == 0.0:
        raise EvalError("division by zero")
    if op == "/":
        return left / right
    return math.fmod(left, right)


def _outcome(frame, status, scopes, **extra):
    bindings = dict(scopes[0]) if scopes else {}
    coverage = Counter()
    for path, hits in frame.path_coverage.items():
        if len(path) == 1:
            coverage[path[0]] += hits
    return ExecutionOutcome(
        status=status,
        bindings=bindings,
        coverage=dict(sorted(coverage.items())),
        path_coverage=dict(sorted(frame.path_coverage.items())),
        function_coverage=dict(sorted(frame.function_coverage.items())),
        steps_used=min(frame.steps, frame.limits.max_steps),
        **extra,
    )


def execute(block, env=None, registry=None, limits=None):
    """Run a statement block and report what happened.

    Args:
        block: statements to run; top-level bindings are reported.
        env: initial bindings, clock start, seed and helper functions.
        registry: the SUT under test.
        limits: step and call-depth budgets.

    Returns:
        ExecutionOutcome; never raises for MTL-level failures.
    """
    env = env or Environment()
    frame = _Frame(env, registry or SutRegistry(()), limits or Limits())
    scopes = [dict(env.bindings)]
    # top-level statements run directly in the bindings scope
    try:
        for stmt in block:
            frame.run_stmt(stmt, scopes, (stmt.id,), None)
    except _AssertFailed as failure:
        return _outcome(frame, Status.ASSERT_FAIL, scopes, failed_assert=failure.path[0], failed_path=failure.path)
    except _Located as exc:
        return _outcome(frame, Status.RUNTIME_ERROR, scopes, error=exc.message, error_path=exc.path)
    except _StepLimit:
        return _outcome(frame, Status.STEP_LIMIT, scopes, error=f"step limit {frame.limits.max_steps} exceeded")
    except _Return:
        return _outcome(frame, Status.RUNTIME_ERROR, scopes, error="return outside function")
    except RecursionError:
        return _outcome(frame, Status.RUNTIME_ERROR, scopes, error="evaluation nested too deeply")
    return _outcome(frame, Status.OK, scopes)


def call_function(fn, args, registry=None, limits=None, env=None):
    """Call one function with argument values in a fresh scope.

    Returns:
        (value, None) on success, (None, ExecutionOutcome) when the call broke.
    """
    env = env or Environment()
    frame = _Frame(env, registry or SutRegistry(()), limits or Limits())
    try:
        return frame.invoke(fn, list(args)), None
    except EvalError as exc:
        return None, _outcome(frame, Status.RUNTIME_ERROR, [], error=str(exc))
    except _StepLimit:
        return None, _outcome(frame, Status.STEP_LIMIT, [], error=f"step limit {frame.limits.max_steps} exceeded")
    except RecursionError:
        return None, _outcome(frame, Status.RUNTIME_ERROR, [], error="evaluation nested too deeply")
