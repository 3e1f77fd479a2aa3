"""
MR-encoded test cases

An MTC is a developer test that runs the method under test twice, once on a
hard-coded source input and once on a related follow-up input, and asserts a
relation between the two outputs. Source and follow-up declarations are
marked with `#[source]` / `#[followup]` on their `let` statements.
"""
from dataclasses import dataclass, field, replace
from enum import Enum

from model.analysis import backward_slice, build_def_use_graph, function_effects, refine_snippet, summarize
from model.checker import SUT_PREFIX
from model.errors import ExtractionError, SkeletonMismatchError
from model.runtime import Environment, Status, call_function, execute
from model.syntax import (
    Block, Call, Index, Let, ListExpr, Literal, LiteralKind, Name, Origin, Stmt, StmtKind, TypeRef,
    iter_stmts, stmt_exprs, walk_expr,
)
from model.values import bindings_key, literalize, render, to_json


SOURCE = "source"
FOLLOWUP = "followup"
TRANSFORM_PREFIX = "transform_"
FOLLOWUPS_VAR = "followups__"


@dataclass(frozen=True)
class Invocation:
    callee: str
    stmt_id: int

    def read(self):
        return {"callee": self.callee, "stmt_id": self.stmt_id}


@dataclass(frozen=True)
class MtcModel:
    test_name: str
    source_vars: tuple
    followup_vars: tuple
    source_init: Block
    followup_init: Block
    mut_invocations: tuple
    relation_asserts: tuple
    helpers: tuple
    full_body: Block
    declared_types: dict = field(default_factory=dict, compare=False)
    init_ids: frozenset = frozenset()
    decl_ids: frozenset = frozenset()

    @property
    def source_invocation(self):
        return self.mut_invocations[0]

    @property
    def followup_invocation(self):
        return self.mut_invocations[1]

    def environment(self, seed=0):
        return Environment(functions=self.helpers, seed=seed)

    def read(self):
        return {
            "test_name": self.test_name,
            "source_vars": list(self.source_vars),
            "followup_vars": list(self.followup_vars),
            "mut_invocations": [inv.read() for inv in self.mut_invocations],
            "relation_asserts": list(self.relation_asserts),
            "helpers": [fn.name for fn in self.helpers],
        }


class ReturnShape(Enum):
    SINGLE = "SINGLE"
    LIST = "LIST"


@dataclass(frozen=True)
class TransformationSkeleton:
    fn_name: str
    params: tuple
    return_shape: ReturnShape
    arity_out: int
    return_type: object = None

    def header(self):
        params = ", ".join(f"{name}: {ann}" if ann else name for name, ann in self.params)
        ret = f" -> {self.return_type}" if self.return_type else ""
        return f"fn {self.fn_name}({params}){ret}"

    def text(self):
        if self.return_shape is ReturnShape.LIST:
            hint = f"    // return a list of {self.arity_out} follow-up inputs, in declaration order\n"
        else:
            hint = "    // return the follow-up input derived from the source input\n"
        return f"#[transformation] {self.header()} {{\n{hint}}}"

    def read(self):
        return {"fn_name": self.fn_name, "params": [name for name, _ in self.params],
                "return_shape": self.return_shape.value, "arity_out": self.arity_out}


class Provenance(Enum):
    HARDCODED = "HARDCODED"
    GENERATED = "GENERATED"


class PairVerdict(Enum):
    UNVALIDATED = "UNVALIDATED"
    VALID = "VALID"
    INVALID = "INVALID"


@dataclass(frozen=True)
class InputPair:
    source: dict
    followup: dict
    provenance: Provenance = Provenance.GENERATED
    backend: object = None
    repetition: object = None
    verdict: PairVerdict = PairVerdict.UNVALIDATED
    reason: object = None

    def key(self, model):
        return (bindings_key(self.source, model.source_vars) + " | "
                + bindings_key(self.followup, model.followup_vars))

    def with_verdict(self, verdict, reason=None):
        return replace(self, verdict=verdict, reason=reason)

    def snippet(self, model):
        """The pair as MTL `let` statements, as shown to generators."""
        lines = [f"#[source] let {name} = {render(self.source[name])};" for name in model.source_vars]
        lines += [f"#[followup] let {name} = {render(self.followup[name])};" for name in model.followup_vars]
        return "\n".join(lines)

    def read(self):
        return {
            "source": {k: to_json(v) for k, v in self.source.items()},
            "followup": {k: to_json(v) for k, v in self.followup.items()},
            "provenance": self.provenance.value,
            "backend": self.backend,
            "repetition": self.repetition,
            "verdict": self.verdict.value,
            "reason": self.reason,
        }


def mut_callee(callee, registry, helper_names):
    """SUT entry name invoked by `callee`, or None for helpers and builtins."""
    if callee.startswith(SUT_PREFIX):
        return callee[len(SUT_PREFIX):]
    if callee in registry and callee not in helper_names:
        return callee
    return None


def _stmt_invocations(stmt, registry, helper_names):
    found = []
    for _, inner in iter_stmts(Block((stmt,))):
        for expr in stmt_exprs(inner):
            for node in walk_expr(expr):
                if isinstance(node, Call) and mut_callee(node.callee, registry, helper_names):
                    found.append(node)
    return found


def extract_mtc(program, test_name, registry):
    """Locate inputs, MUT invocations and relation asserts of one test.

    Args:
        program: the parsed MTC file (helpers plus tests).
        test_name: which test to model.
        registry: SUT registry; calls into it are MUT invocations.

    Returns:
        MtcModel; raises ExtractionError when the test does not encode a
        two-invocation MR.
    """
    test = program.test(test_name)
    if test is None:
        raise ExtractionError(f"test '{test_name}' not found")
    body = test.body
    helpers = tuple(fn for fn in program.functions if fn.origin is not Origin.SUT)
    helper_names = {fn.name for fn in helpers}

    source_vars, followup_vars, declared_types = [], [], {}
    source_ids, followup_ids = set(), set()
    for stmt in body:
        marks = [a for a in stmt.annotations if a in (SOURCE, FOLLOWUP)]
        if not marks:
            continue
        if stmt.kind is not StmtKind.LET or len(marks) > 1:
            raise ExtractionError(f"#[{marks[0]}] must mark a single let statement (statement {stmt.id})")
        name = stmt.payload.name
        declared_types[name] = stmt.payload.type
        if marks[0] == SOURCE:
            if followup_vars:
                raise ExtractionError("source inputs must be declared before follow-up inputs")
            source_vars.append(name)
            source_ids.add(stmt.id)
        else:
            followup_vars.append(name)
            followup_ids.add(stmt.id)
    for path, nested in iter_stmts(body):
        if len(path) > 1 and any(a in (SOURCE, FOLLOWUP) for a in nested.annotations):
            raise ExtractionError("source and follow-up inputs must be declared at the top level of the test")
    if not source_vars:
        raise ExtractionError(f"test '{test_name}' has no #[source] input")
    if not followup_vars:
        raise ExtractionError(f"test '{test_name}' has no #[followup] input")

    sites = []
    for stmt in body:
        for call in _stmt_invocations(stmt, registry, helper_names):
            sites.append((stmt, call))
    if len(sites) != 2:
        raise ExtractionError(f"expected exactly two MUT invocations, found {len(sites)}")

    effects = function_effects(tuple(helpers) + tuple(registry.entries.values()))
    summaries = {stmt.id: summarize(stmt, effects) for stmt in body}
    invocation_ids = {stmt.id for stmt, _ in sites}

    consumed = []
    for stmt, call in sites:
        names = set()
        for arg in call.args:
            names |= {node.name for node in walk_expr(arg) if isinstance(node, Name)}
        reached = _trace_inputs(body, stmt.id, names, summaries, source_ids | followup_ids, invocation_ids)
        uses_source = reached & set(source_vars)
        uses_followup = reached & set(followup_vars)
        if uses_source and uses_followup:
            raise ExtractionError(f"MUT invocation in statement {stmt.id} mixes source and follow-up inputs")
        if not uses_source and not uses_followup:
            raise ExtractionError(f"MUT invocation in statement {stmt.id} consumes no marked input")
        consumed.append(SOURCE if uses_source else FOLLOWUP)
    if sorted(consumed) != [FOLLOWUP, SOURCE]:
        raise ExtractionError("one MUT invocation must consume the source inputs and the other the follow-ups")
    if consumed[0] == FOLLOWUP:
        sites.reverse()
    invocations = tuple(Invocation(mut_callee(call.callee, registry, helper_names), stmt.id) for stmt, call in sites)

    graph = build_def_use_graph(body, effects)
    relation = []
    both = False
    for stmt in body:
        if stmt.kind is not StmtKind.ASSERT:
            continue
        reach = _closure(graph, stmt.id)
        hits = {inv.stmt_id for inv in invocations} & reach
        if hits:
            relation.append(stmt.id)
            both = both or len(hits) == 2
    if not both:
        raise ExtractionError("no assert relates the outputs of both MUT invocations")

    source_slice = refine_snippet(body, set(source_vars), effects)
    source_init_ids = _slice_ids(body, set(source_vars), effects)
    followup_init_ids = _slice_ids(body, set(followup_vars), effects) - source_init_ids
    if (source_init_ids | followup_init_ids) & invocation_ids:
        raise ExtractionError("input declarations must not depend on MUT invocations")
    followup_init = body.select(sorted(followup_init_ids))

    return MtcModel(
        test_name=test_name,
        source_vars=tuple(source_vars),
        followup_vars=tuple(followup_vars),
        source_init=source_slice,
        followup_init=followup_init,
        mut_invocations=invocations,
        relation_asserts=tuple(relation),
        helpers=helpers,
        full_body=body,
        declared_types=declared_types,
        init_ids=frozenset(source_init_ids | followup_init_ids),
        decl_ids=frozenset(source_ids | followup_ids),
    )


def _slice_ids(body, targets, effects):
    return set(backward_slice(build_def_use_graph(body, effects), targets).kept)


def _closure(graph, start):
    seen = {start}
    pending = [start]
    while pending:
        current = pending.pop()
        for target in graph.depends_on(current):
            if target not in seen:
                seen.add(target)
                pending.append(target)
    return seen


def _trace_inputs(body, stmt_id, names, summaries, decl_ids, invocation_ids):
    """Marked inputs reachable backward from `names` read at `stmt_id`."""
    reached = set()
    pending = [(stmt_id, name) for name in names]
    visited = set()
    while pending:
        position, name = pending.pop()
        if (position, name) in visited:
            continue
        visited.add((position, name))
        for earlier in reversed(body.stmts[:position]):
            defs, uses, must = summaries[earlier.id]
            if name not in defs:
                continue
            if earlier.id in decl_ids:
                reached.add(name)
            elif earlier.id not in invocation_ids:
                pending.extend((earlier.id, used) for used in uses)
            if must:
                break
    return reached


def derive_skeleton(model):
    """Signature the generated transformation must have."""
    params = tuple((name, model.declared_types.get(name)) for name in model.source_vars)
    count = len(model.followup_vars)
    if count > 1:
        return TransformationSkeleton(TRANSFORM_PREFIX + model.test_name, params, ReturnShape.LIST, count,
                                      TypeRef("list"))
    return TransformationSkeleton(TRANSFORM_PREFIX + model.test_name, params, ReturnShape.SINGLE, 1,
                                  model.declared_types.get(model.followup_vars[0]))


def matches_skeleton(fn, skeleton):
    """(True, None) or (False, reason) for a candidate against the skeleton."""
    if fn.name != skeleton.fn_name:
        return False, f"expected function '{skeleton.fn_name}', got '{fn.name}'"
    if fn.arity != len(skeleton.params):
        return False, f"'{fn.name}' must take {len(skeleton.params)} parameter(s), takes {fn.arity}"
    if skeleton.return_shape is ReturnShape.LIST:
        if fn.return_type is not None and fn.return_type.name not in ("list", "any"):
            return False, f"'{fn.name}' must return a list of {skeleton.arity_out} values"
        for _, stmt in iter_stmts(fn.body):
            if stmt.kind is StmtKind.RETURN and isinstance(stmt.payload.value, ListExpr):
                if len(stmt.payload.value.items) != skeleton.arity_out:
                    return False, f"'{fn.name}' returns {len(stmt.payload.value.items)} values, " \
                                  f"expected {skeleton.arity_out}"
    elif skeleton.return_type is not None and fn.return_type is not None:
        if fn.return_type.name not in (skeleton.return_type.name, "any"):
            return False, f"'{fn.name}' must return {skeleton.return_type}, declares {fn.return_type}"
    return True, None


def check_skeleton(fn, skeleton):
    ok, reason = matches_skeleton(fn, skeleton)
    if not ok:
        raise SkeletonMismatchError(reason)


def _literal_let(stmt, value):
    payload = stmt.payload
    return replace(stmt, payload=Let(payload.name, payload.type, literalize(value)))


def _rebuild(model, source, followup_stmts):
    """Test body with inputs replaced; init-only context statements dropped."""
    rebuilt = []
    placed = False
    for stmt in model.full_body:
        if stmt.id in model.decl_ids and stmt.payload.name in model.source_vars:
            rebuilt.append((True, _literal_let(stmt, source[stmt.payload.name])))
        elif stmt.id in model.decl_ids:
            if not placed:
                rebuilt.extend((True, s) for s in followup_stmts)
                placed = True
        elif stmt.id in model.init_ids:
            rebuilt.append((False, stmt))
        else:
            rebuilt.append((True, stmt))

    # drop removable context statements nothing else needs
    kept, live = [], set()
    for forced, stmt in reversed(rebuilt):
        defs, uses, must = summarize(stmt, {})
        if forced or defs & live:
            kept.append(stmt)
            if must:
                live -= defs
            live |= uses
    kept.reverse()
    return Block.of(kept)


def substitute_inputs(model, pair):
    """The test body re-run on another (source, follow-up) pair."""
    followups = [_literal_let(stmt, pair.followup[stmt.payload.name])
                 for stmt in model.full_body
                 if stmt.id in model.decl_ids and stmt.payload.name in model.followup_vars]
    return _rebuild(model, pair.source, followups)


def instantiate_with_transformation(model, fn, source):
    """The test body with follow-up inputs computed by a transformation.

    Args:
        model: the MTC.
        fn: transformation matching derive_skeleton(model).
        source: name -> value bindings for the source inputs.

    Returns:
        Block; raises SkeletonMismatchError when fn does not fit.
    """
    skeleton = derive_skeleton(model)
    check_skeleton(fn, skeleton)
    args = tuple(Name(name) for name in model.source_vars)
    call = Call(fn.name, args)
    if skeleton.return_shape is ReturnShape.SINGLE:
        name = model.followup_vars[0]
        followups = [Stmt.make(Let(name, None, call), (FOLLOWUP,))]
    else:
        count = Literal(LiteralKind.INT, skeleton.arity_out)
        followups = [Stmt.make(Let(FOLLOWUPS_VAR, None, Call("unpack", (call, count))))]
        followups += [Stmt.make(Let(name, None, Index(Name(FOLLOWUPS_VAR), Literal(LiteralKind.INT, i))), (FOLLOWUP,))
                      for i, name in enumerate(model.followup_vars)]
    return _rebuild(model, source, followups)


def bindings_from_block(model, block, names, registry=None, limits=None):
    """Run a generated input snippet and collect the named bindings.

    Returns:
        (dict, None) when the snippet runs and binds every name, else
        (None, reason).
    """
    outcome = execute(block, model.environment(), registry, limits)
    if not outcome.ok:
        detail = outcome.error or f"assert {outcome.failed_assert} failed"
        return None, f"{outcome.status.value}: {detail}"
    missing = [name for name in names if name not in outcome.bindings]
    if missing:
        return None, f"snippet does not define {', '.join(missing)}"
    return {name: outcome.bindings[name] for name in names}, None


def hardcoded_pair(model, registry, limits=None):
    """The pair written into the test, checked to pass on the unmutated SUT."""
    init = model.full_body.select(sorted(model.init_ids))
    outcome = execute(init, model.environment(), registry, limits)
    if not outcome.ok:
        detail = outcome.error or outcome.status.value
        raise ExtractionError(f"input declarations of '{model.test_name}' fail: {detail}")
    original = execute(model.full_body, model.environment(), registry, limits)
    if not original.ok:
        raise ExtractionError(f"test '{model.test_name}' does not pass on the unmutated SUT "
                              f"({original.status.value})")
    return InputPair(
        source={name: outcome.bindings[name] for name in model.source_vars},
        followup={name: outcome.bindings[name] for name in model.followup_vars},
        provenance=Provenance.HARDCODED,
        verdict=PairVerdict.VALID,
    )


class Applicability(Enum):
    APPLICABLE = "APPLICABLE"
    TRANSFORM_ERROR = "TRANSFORM_ERROR"
    ASSERT_FAIL = "ASSERT_FAIL"
    RUNTIME_ERROR = "RUNTIME_ERROR"
    STEP_LIMIT = "STEP_LIMIT"
    SKELETON_MISMATCH = "SKELETON_MISMATCH"


_STATUS_VERDICTS = {
    Status.OK: Applicability.APPLICABLE,
    Status.ASSERT_FAIL: Applicability.ASSERT_FAIL,
    Status.RUNTIME_ERROR: Applicability.RUNTIME_ERROR,
    Status.STEP_LIMIT: Applicability.STEP_LIMIT,
}


def transformation_functions(model, fn, linked=()):
    """Helper table for running a transformation: MTC helpers, linked helpers, fn; first name wins."""
    table, seen = [], set()
    for candidate in (fn,) + tuple(linked) + tuple(model.helpers):
        if candidate.name not in seen:
            seen.add(candidate.name)
            table.append(candidate)
    return tuple(table)


def check_applicability(model, fn, source, registry, limits=None, linked=()):
    """Whether a transformation applies to one source input.

    Applicable means the call returns without error and the test, with its
    follow-up inputs computed by the call, passes.

    Returns:
        (Applicability, ExecutionOutcome or None)
    """
    try:
        block = instantiate_with_transformation(model, fn, source)
    except SkeletonMismatchError:
        return Applicability.SKELETON_MISMATCH, None
    env = model.environment().with_functions(transformation_functions(model, fn, linked))
    _, failure = call_function(fn, [source[name] for name in model.source_vars], registry, limits, env)
    if failure is not None:
        return Applicability.TRANSFORM_ERROR, failure
    outcome = execute(block, env, registry, limits)
    return _STATUS_VERDICTS[outcome.status], outcome
