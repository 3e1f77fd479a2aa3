"""
First-order mutation of MTL SUTs and mutation testing

Operators:
    AOR            swap + - * / pairwise
    ROR            swap < <= > >= == != pairwise
    CONST_PERTURB  int literal c -> c+1, c-1, 0
    BOOL_NEG       flip bool literals, negate if-conditions
    STMT_DEL       delete assignment and expression statements
    SEEDED         hand-written faults from corpus/<case>/faults/
"""
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import pandas as pd

from model.checker import check_function
from model.errors import EvaluationError
from model.runtime import Environment, SutRegistry, execute
from model.syntax import (
    Assert, Assign, Binary, Block, Call, ExprStmt, For, If, Index, Let, ListExpr, Literal, LiteralKind, Return,
    StmtKind, Unary, child_exprs, iter_stmts, stmt_exprs,
)
from model.values import I64_MAX, I64_MIN


ARITHMETIC = ("+", "-", "*", "/")
RELATIONAL = ("<", "<=", ">", ">=", "==", "!=")
COMBOS = (("D",), ("D", "M"), ("D", "L"), ("D", "L", "M"))


class Operator(Enum):
    AOR = "AOR"
    ROR = "ROR"
    CONST_PERTURB = "CONST_PERTURB"
    BOOL_NEG = "BOOL_NEG"
    STMT_DEL = "STMT_DEL"
    SEEDED = "SEEDED"


OPERATORS = (Operator.AOR, Operator.ROR, Operator.CONST_PERTURB, Operator.BOOL_NEG, Operator.STMT_DEL)


@dataclass(frozen=True)
class Mutant:
    id: int
    operator: Operator
    function: str
    location: tuple
    description: str
    registry: SutRegistry = field(compare=False, repr=False)

    def read(self):
        return {
            "id": self.id,
            "operator": self.operator.value,
            "function": self.function,
            "location": [list(part) if isinstance(part, tuple) else part for part in self.location],
            "description": self.description,
        }


# expression rewriting

def _expr_sites(expr, path=()):
    yield path, expr
    for position, child in enumerate(child_exprs(expr)):
        yield from _expr_sites(child, path + (position,))


def _with_children(expr, children):
    if isinstance(expr, ListExpr):
        return replace(expr, items=tuple(children))
    if isinstance(expr, Call):
        return replace(expr, args=tuple(children))
    if isinstance(expr, Index):
        return replace(expr, target=children[0], index=children[1])
    if isinstance(expr, Unary):
        return replace(expr, operand=children[0])
    if isinstance(expr, Binary):
        return replace(expr, left=children[0], right=children[1])
    return expr


def _replace_expr(expr, path, new):
    if not path:
        return new
    children = child_exprs(expr)
    children[path[0]] = _replace_expr(children[path[0]], path[1:], new)
    return _with_children(expr, children)


def _with_stmt_expr(stmt, position, expr):
    payload = stmt.payload
    if isinstance(payload, (Let, Assign)):
        return replace(stmt, payload=replace(payload, value=expr))
    if isinstance(payload, (ExprStmt, Assert)):
        return replace(stmt, payload=replace(payload, expr=expr))
    if isinstance(payload, Return):
        return replace(stmt, payload=replace(payload, value=expr))
    if isinstance(payload, If):
        return replace(stmt, payload=replace(payload, cond=expr))
    if isinstance(payload, For):
        return replace(stmt, payload=replace(payload, iterable=expr))
    return stmt


def rewrite_block(block, path, edit):
    """Apply `edit` to the statement at an iter_stmts path; an edit returning None deletes it."""
    stmts = list(block.stmts)
    target = stmts[path[0]]
    rest = path[1:]
    if not rest:
        edited = edit(target)
    elif isinstance(target.payload, If):
        payload = target.payload
        if rest[0] == -1:
            edited = replace(target, payload=replace(payload, orelse=rewrite_block(payload.orelse, rest[1:], edit)))
        else:
            edited = replace(target, payload=replace(payload, then=rewrite_block(payload.then, rest, edit)))
    else:
        edited = replace(target, payload=replace(target.payload, body=rewrite_block(target.payload.body, rest, edit)))
    if edited is None:
        del stmts[path[0]]
    else:
        stmts[path[0]] = edited
    return Block.of(stmts)


def _expr_replacements(node, at_condition):
    """(operator, new expression, description) for one expression node."""
    found = []
    if isinstance(node, Binary) and node.op in ARITHMETIC:
        for op in ARITHMETIC:
            if op != node.op:
                found.append((Operator.AOR, replace(node, op=op), f"{node.op} -> {op}"))
    if isinstance(node, Binary) and node.op in RELATIONAL:
        for op in RELATIONAL:
            if op != node.op:
                found.append((Operator.ROR, replace(node, op=op), f"{node.op} -> {op}"))
    if isinstance(node, Literal) and node.kind is LiteralKind.INT:
        seen = set()
        for value in (node.value + 1, node.value - 1, 0):
            if value != node.value and value not in seen and I64_MIN <= value <= I64_MAX:
                seen.add(value)
                found.append((Operator.CONST_PERTURB, replace(node, value=value), f"{node.value} -> {value}"))
    if isinstance(node, Literal) and node.kind is LiteralKind.BOOL:
        found.append((Operator.BOOL_NEG, replace(node, value=not node.value), f"{node.value} -> {not node.value}"))
    if at_condition:
        found.append((Operator.BOOL_NEG, Unary("!", node), "negate condition"))
    return found


def _function_mutations(fn):
    """(operator, location, description, mutated fn) in statement, expression, operator order."""
    for stmt_path, stmt in iter_stmts(fn.body):
        for position, expr in enumerate(stmt_exprs(stmt)):
            for expr_path, node in _expr_sites(expr):
                at_condition = stmt.kind is StmtKind.IF and not expr_path
                for operator, new, description in _expr_replacements(node, at_condition):
                    mutated = _replace_expr(expr, expr_path, new)
                    body = rewrite_block(fn.body, stmt_path,
                                         lambda s, p=position, e=mutated: _with_stmt_expr(s, p, e))
                    yield operator, (stmt_path, position, expr_path), description, replace(fn, body=body)
        if stmt.kind in (StmtKind.ASSIGN, StmtKind.EXPR):
            body = rewrite_block(fn.body, stmt_path, lambda s: None)
            yield Operator.STMT_DEL, (stmt_path,), f"delete statement {list(stmt_path)}", replace(fn, body=body)


def mutate_sut(registry, operators=OPERATORS, seed=0, faults=(), limit=None):
    """Exhaustive first-order mutants of every SUT function.

    Args:
        registry: the unmutated SUT.
        operators: which operators to apply.
        seed: drives sampling when `limit` is set.
        faults: (name, replacement functions) seeded faults, appended last.
        limit: optional cap on operator mutants, sampled in order.

    Returns:
        list of Mutant with dense ids; mutants that no longer check are
        dropped.
    """
    wanted = set(operators)
    found = []
    for name, fn in registry.entries.items():
        for operator, location, description, mutated in _function_mutations(fn):
            if operator not in wanted:
                continue
            if not check_function(mutated, registry.signatures).ok:
                continue
            found.append((operator, name, (name,) + location, description, registry.replaced(mutated)))
    if limit is not None and len(found) > limit:
        picked = sorted(random.Random(seed).sample(range(len(found)), limit))
        found = [found[i] for i in picked]
    for fault_name, functions in faults:
        mutated = registry
        for fn in functions:
            mutated = mutated.replaced(fn)
        names = ",".join(fn.name for fn in functions)
        found.append((Operator.SEEDED, names, (names,), fault_name, mutated))
    return [Mutant(index, *entry) for index, entry in enumerate(found)]


# mutation testing

@dataclass(frozen=True)
class SuiteTest:
    name: str
    block: Block
    functions: tuple = ()

    def run(self, registry, limits=None):
        return execute(self.block, Environment(functions=self.functions), registry, limits)

    def observed(self):
        """The test with each top-level assert turned into a binding of its value.

        The observed block runs past a failing check, so mutants are compared on
        every checked value and every binding rather than on the first failure.
        """
        stmts = [replace(s, kind=StmtKind.LET, payload=Let(f"_assert_{s.id}", None, s.payload.expr))
                 if s.kind is StmtKind.ASSERT else s for s in self.block]
        return replace(self, block=Block.of(stmts))


def sut_statements(registry):
    return {(name, path) for name, fn in registry.entries.items() for path, _ in iter_stmts(fn.body)}


def flag_equivalent(mutants, tests, registry, limits=None):
    """Ids of mutants that no test kills and whose observed runs match the original.

    A mutant killed by any test is never flagged.
    """
    if not tests:
        return frozenset()
    observed = [test.observed() for test in tests]
    baseline = [run.run(registry, limits) for run in observed]
    flagged = set()
    for mutant in mutants:
        if any(not test.run(mutant.registry, limits).ok for test in tests):
            continue
        if all(run.run(mutant.registry, limits).same_behaviour(expected)
               for run, expected in zip(observed, baseline)):
            flagged.add(mutant.id)
    return frozenset(flagged)


@dataclass(frozen=True)
class AdequacyComparison:
    suites: dict
    line_coverage: dict
    mutation_score: dict
    killed: dict
    covered: dict
    statements: int
    mutants: tuple
    equivalent: frozenset = frozenset()
    kill_matrix: dict = field(default_factory=dict)

    @property
    def scored_mutants(self):
        return len(self.mutants) - len(self.equivalent)

    def read(self):
        return {
            "suites": {name: len(tests) for name, tests in self.suites.items()},
            "line_coverage": dict(self.line_coverage),
            "mutation_score": dict(self.mutation_score),
            "killed": {combo: sorted(ids) for combo, ids in self.killed.items()},
            "covered_statements": {combo: len(found) for combo, found in self.covered.items()},
            "sut_statements": self.statements,
            "mutants": [m.read() for m in self.mutants],
            "equivalent": sorted(self.equivalent),
            "kill_matrix": {str(mid): row for mid, row in sorted(self.kill_matrix.items())},
        }

    def frame(self):
        rows = [{"suite": combo, "line_coverage": self.line_coverage[combo],
                 "mutation_score": self.mutation_score[combo], "killed": len(self.killed[combo]),
                 "scored_mutants": self.scored_mutants} for combo in self.line_coverage]
        return pd.DataFrame(rows, columns=["suite", "line_coverage", "mutation_score", "killed", "scored_mutants"])


def ratio(part, whole):
    return round(part / whole, 6) if whole else 0.0


def run_mutation_testing(suites, mutants, registry, limits=None, parallelism=1, equivalent=frozenset()):
    """Line coverage and mutation score per suite combination.

    Args:
        suites: suite name ("D", "L", "M") -> list of SuiteTest.
        mutants: output of mutate_sut.
        registry: the unmutated SUT.
        limits: runtime budgets.
        parallelism: worker threads for mutant x test runs.
        equivalent: mutant ids left out of every score.

    Returns:
        AdequacyComparison; raises EvaluationError when a test fails on the
        unmutated SUT.
    """
    statements = sut_statements(registry)
    covered_by = {}
    for name, tests in suites.items():
        covered_by[name] = set()
        for test in tests:
            outcome = test.run(registry, limits)
            if not outcome.ok:
                raise EvaluationError(f"test '{test.name}' of suite {name} fails on the unmutated SUT: "
                                      f"{outcome.error or outcome.status.value}")
            covered_by[name] |= {key for key in outcome.function_coverage if key in statements}

    cells = [(mutant, name, index, test) for mutant in mutants for name, tests in suites.items()
             for index, test in enumerate(tests)]

    def one(cell):
        mutant, _, _, test = cell
        return not test.run(mutant.registry, limits).ok

    if parallelism > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as executor:
            outcomes = list(executor.map(one, cells))
    else:
        outcomes = [one(cell) for cell in cells]

    kill_matrix = {mutant.id: {name: [] for name in suites} for mutant in mutants}
    for (mutant, name, index, _), killed in zip(cells, outcomes):
        if killed:
            kill_matrix[mutant.id][name].append(index)

    scored = [m for m in mutants if m.id not in equivalent]
    line_coverage, mutation_score, killed_sets, covered_sets = {}, {}, {}, {}
    for combo in COMBOS:
        if any(name not in suites for name in combo):
            continue
        label = "+".join(combo)
        covered = set().union(*(covered_by[name] for name in combo))
        killed = frozenset(m.id for m in scored if any(kill_matrix[m.id][name] for name in combo))
        line_coverage[label] = ratio(len(covered), len(statements))
        mutation_score[label] = ratio(len(killed), len(scored))
        killed_sets[label] = killed
        covered_sets[label] = frozenset(covered)
    return AdequacyComparison(
        suites={name: tuple(tests) for name, tests in suites.items()},
        line_coverage=line_coverage,
        mutation_score=mutation_score,
        killed=killed_sets,
        covered=covered_sets,
        statements=len(statements),
        mutants=tuple(mutants),
        equivalent=frozenset(equivalent),
        kill_matrix=kill_matrix,
    )
