"""
Def-use graphs, backward slicing and dependency resolution

Slicing keeps exactly the statements a set of target variables depends on.
Straight-line code is sliced precisely; IF and FOR statements are kept whole
(condition included) as soon as anything inside them is kept, and their
bodies are sliced recursively. Impure builtins read and write the implicit
variables `$clock` and `$rng`, so a kept clock reading keeps every earlier
clock advance too.
"""
from dataclasses import dataclass, field, replace

from model.builtins import BUILTINS
from model.checker import SUT_PREFIX
from model.errors import ResolutionError, SliceError
from model.syntax import (
    Assign, Block, ExprStmt, For, If, Let, Return, StmtKind, block_calls, expr_calls, expr_names, iter_stmts,
    stmt_exprs,
)


def _plain(callee):
    return callee[len(SUT_PREFIX):] if callee.startswith(SUT_PREFIX) else callee


def function_effects(functions):
    """Implicit variables each function touches, through its whole call tree."""
    by_name = {fn.name: fn for fn in functions}
    effects = {name: set() for name in by_name}
    changed = True
    while changed:
        changed = False
        for name, fn in by_name.items():
            found = set(effects[name])
            for callee in block_calls(fn.body):
                plain = _plain(callee)
                if callee in BUILTINS and plain == callee:
                    found |= BUILTINS[callee].effects
                else:
                    found |= effects.get(plain, set())
            if found != effects[name]:
                effects[name] = found
                changed = True
    return {name: frozenset(found) for name, found in effects.items()}


def _call_effects(callees, effects):
    found = set()
    for callee in callees:
        if callee in BUILTINS and effects.get(callee) is None:
            found |= BUILTINS[callee].effects
        else:
            found |= effects.get(_plain(callee), frozenset())
    return found


def _own_uses(stmt, effects):
    """Names and implicit variables read by the statement's own expressions."""
    names, calls = set(), []
    for expr in stmt_exprs(stmt):
        names |= expr_names(expr)
        calls += expr_calls(expr)
    return names | _call_effects(calls, effects)


def _own_effects(stmt, effects):
    calls = []
    for expr in stmt_exprs(stmt):
        calls += expr_calls(expr)
    return _call_effects(calls, effects)


def _locals(stmt):
    """Variables declared inside a compound statement (invisible after it)."""
    names = set()
    for _, inner in iter_stmts(Block((stmt,))):
        if inner.kind is StmtKind.LET and inner is not stmt:
            names.add(inner.payload.name)
        elif inner.kind is StmtKind.FOR:
            names.add(inner.payload.var)
    return names


def summarize(stmt, effects):
    """(defs, uses, must) of one statement; compound statements are summarized."""
    payload = stmt.payload
    if stmt.kind in (StmtKind.IF, StmtKind.FOR):
        local = _locals(stmt)
        defs, uses = set(), set()
        for _, inner in iter_stmts(Block((stmt,))):
            uses |= _own_uses(inner, effects)
            defs |= _own_effects(inner, effects)
            if inner.kind is StmtKind.ASSIGN:
                defs.add(inner.payload.name)
        return defs - local, uses - local, False
    defs = set(_own_effects(stmt, effects))
    if isinstance(payload, (Let, Assign)):
        defs.add(payload.name)
    return defs, _own_uses(stmt, effects), True


@dataclass(frozen=True)
class DefUseGraph:
    block: Block
    nodes: tuple
    defs: dict
    uses: dict
    edges: frozenset
    effects: dict = field(default_factory=dict, compare=False)

    def depends_on(self, stmt_id):
        return sorted(b for a, b in self.edges if a == stmt_id)

    def read(self):
        return {
            "nodes": list(self.nodes),
            "defs": {str(k): sorted(v) for k, v in self.defs.items()},
            "uses": {str(k): sorted(v) for k, v in self.uses.items()},
            "edges": [list(edge) for edge in sorted(self.edges)],
        }


@dataclass(frozen=True)
class Slice:
    kept: tuple
    targets: frozenset
    block: Block


def build_def_use_graph(block, effects=None):
    """Dependency graph over the top-level statements of a block.

    An edge (a, b) means statement a reads a value (or, for an assignment,
    the declaration) that statement b provides. Definitions inside IF/FOR are
    may-definitions and do not hide earlier ones.
    """
    effects = effects or {}
    summaries = {stmt.id: summarize(stmt, effects) for stmt in block}
    edges = set()
    for index, stmt in enumerate(block.stmts):
        wanted = set(summaries[stmt.id][1])
        declaration = stmt.payload.name if stmt.kind is StmtKind.ASSIGN else None
        for earlier in reversed(block.stmts[:index]):
            defs, _, must = summaries[earlier.id]
            hit = wanted & defs
            if hit:
                edges.add((stmt.id, earlier.id))
                if must:
                    wanted -= hit
            if declaration and earlier.kind is StmtKind.LET and earlier.payload.name == declaration:
                edges.add((stmt.id, earlier.id))
                declaration = None
            if not wanted and declaration is None:
                break
    return DefUseGraph(
        block=block,
        nodes=tuple(block.ids()),
        defs={sid: frozenset(s[0]) for sid, s in summaries.items()},
        uses={sid: frozenset(s[1]) for sid, s in summaries.items()},
        edges=frozenset(edges),
        effects=dict(effects),
    )


def dump_graph(graph):
    """Line-oriented `a -> b` edge listing."""
    return "\n".join(f"{a} -> {b}" for a, b in sorted(graph.edges))


def _slice_stmts(stmts, live, decls, effects, keep_returns):
    """Backward live-variable walk. Returns (kept statements, live-in, decls-in)."""
    kept = []
    live, decls = set(live), set(decls)
    for stmt in reversed(stmts):
        payload = stmt.payload
        own_effects = _own_effects(stmt, effects)
        if isinstance(payload, Let):
            if payload.name in live or payload.name in decls or own_effects & live:
                kept.append(stmt)
                live -= {payload.name} | own_effects
                decls.discard(payload.name)
                live |= _own_uses(stmt, effects)
        elif isinstance(payload, Assign):
            if payload.name in live or own_effects & live:
                kept.append(stmt)
                live -= {payload.name} | own_effects
                live |= _own_uses(stmt, effects)
                decls.add(payload.name)
        elif isinstance(payload, ExprStmt):
            if own_effects & live:
                kept.append(stmt)
                live -= own_effects
                live |= _own_uses(stmt, effects)
        elif isinstance(payload, Return):
            if keep_returns:
                kept = [stmt]
                live = _own_uses(stmt, effects)
                decls = set()
        elif isinstance(payload, If):
            then_kept, then_live, then_decls = _slice_stmts(payload.then.stmts, live, decls, effects, keep_returns)
            if payload.orelse is not None:
                else_kept, else_live, else_decls = _slice_stmts(payload.orelse.stmts, live, decls, effects,
                                                                keep_returns)
            else:
                else_kept, else_live, else_decls = [], live, decls
            if then_kept or else_kept:
                orelse = Block.of(else_kept) if payload.orelse is not None else None
                kept.append(replace(stmt, payload=If(payload.cond, Block.of(then_kept), orelse)))
                live = then_live | else_live | _own_uses(stmt, effects)
                decls = then_decls | else_decls
        elif isinstance(payload, For):
            body_live = set(live)
            while True:
                body_kept, inner_live, inner_decls = _slice_stmts(payload.body.stmts, body_live, decls, effects,
                                                                  keep_returns)
                carried = live | (inner_live - {payload.var})
                if carried == body_live:
                    break
                body_live = carried
            if body_kept:
                kept.append(replace(stmt, payload=For(payload.var, payload.iterable, Block.of(body_kept))))
                live = live | (inner_live - {payload.var}) | _own_uses(stmt, effects)
                decls = decls | (inner_decls - {payload.var})
        # asserts are never kept: nothing reads their result
    kept.reverse()
    return kept, live, decls


def backward_slice(graph, targets):
    """Minimal closed set of top-level statements the targets depend on.

    Args:
        graph: DefUseGraph of the block.
        targets: variable names whose final values must be preserved.

    Returns:
        Slice with the kept top-level ids and the refined block.
    """
    targets = frozenset(targets)
    defined = set()
    for stmt_id in graph.nodes:
        defined |= graph.defs[stmt_id]
    missing = sorted(targets - defined)
    if missing:
        raise SliceError(f"slice target never defined: {', '.join(missing)}")
    kept, _, _ = _slice_stmts(graph.block.stmts, targets, set(), graph.effects, keep_returns=False)
    return Slice(tuple(stmt.id for stmt in kept), targets, Block.of(kept))


def refine_snippet(block, targets, effects=None):
    """Drop every statement the targets do not depend on (order preserved)."""
    return backward_slice(build_def_use_graph(block, effects), targets).block


def refine_function(fn, effects=None):
    """Keep only what the function's return values depend on."""
    kept, _, _ = _slice_stmts(fn.body.stmts, set(), set(), effects or {}, keep_returns=True)
    return replace(fn, body=Block.of(kept))


def free_callees(fn):
    """Callee names used by a function, in first-use order."""
    seen = []
    for callee in block_calls(fn.body):
        if callee not in seen:
            seen.append(callee)
    return seen


def resolve_dependencies(fn, helpers=(), sut_names=()):
    """Link the helpers a function calls, by exact name.

    Args:
        fn: candidate transformation.
        helpers: FuncDefs available for linking (MTC helpers, candidate-local
            functions).
        sut_names: callable SUT entries.

    Returns:
        (fn, linked helpers in first-use order); raises ResolutionError naming
        every unresolved callee.
    """
    by_name = {}
    for helper in helpers:
        by_name.setdefault(helper.name, helper)
    sut_names = set(sut_names)
    linked, unresolved = [], []
    pending = [fn]
    visited = {fn.name}
    while pending:
        current = pending.pop(0)
        for callee in free_callees(current):
            if callee.startswith(SUT_PREFIX):
                if _plain(callee) not in sut_names:
                    unresolved.append(callee)
                continue
            if callee in by_name:
                if callee not in visited:
                    visited.add(callee)
                    linked.append(by_name[callee])
                    pending.append(by_name[callee])
            elif callee in sut_names or callee in BUILTINS:
                continue
            elif callee != fn.name:
                unresolved.append(callee)
    if unresolved:
        raise ResolutionError(unresolved)
    return fn, linked
