""" Generated inputs: the code shown to generators and how returned snippets become bindings """
from dataclasses import dataclass, field

from __init__ import app
from api.generator import GenContext, Task, fenced_blocks, generate
from model.analysis import function_effects, refine_snippet
from model.errors import MtlError
from model.mtc import bindings_from_block
from model.parser import parse_block
from model.printer import print_program
from model.syntax import Program, TestDef
from model.values import bindings_key, render


def mut_code(registry):
    return print_program(Program(tuple(registry.entries.values())))


def mtc_code(model):
    return print_program(Program(tuple(model.helpers), (TestDef(model.test_name, model.full_body),)))


def source_snippet(model, bindings):
    return "\n".join(f"#[source] let {name} = {render(bindings[name])};" for name in model.source_vars)


def snippet_effects(model, registry):
    return function_effects(tuple(model.helpers) + tuple(registry.entries.values()))


@dataclass(frozen=True)
class Rejection:
    repetition: int
    reason: str

    def read(self):
        return {"repetition": self.repetition, "reason": self.reason}


@dataclass
class BoundSnippet:
    bindings: dict
    repetition: int
    backend: str


def bind_snippets(model, raws, names, registry, limits=None, refine=True):
    """Parse, optionally refine, and run every fenced snippet of the responses.

    Args:
        model: the MTC the snippets are inputs for.
        raws: RawCandidate list from generate().
        names: variables each snippet must define.
        registry: SUT registry (snippets may call the SUT).
        limits: runtime budgets.
        refine: slice each snippet down to what `names` depend on first.

    Returns:
        (list of BoundSnippet, list of Rejection); failures never raise.
    """
    effects = snippet_effects(model, registry)
    bound, rejected = [], []
    for raw in raws:
        for text in fenced_blocks(raw.text):
            try:
                block = parse_block(text)
                if refine:
                    block = refine_snippet(block, set(names), effects)
            except MtlError as e:
                app.logger.debug(f"Skipping snippet of repetition {raw.repetition_index}: {e}")
                rejected.append(Rejection(raw.repetition_index, str(e)))
                continue
            bindings, reason = bindings_from_block(model, block, names, registry, limits)
            if bindings is None:
                app.logger.debug(f"Snippet of repetition {raw.repetition_index} does not run: {reason}")
                rejected.append(Rejection(raw.repetition_index, reason))
                continue
            bound.append(BoundSnippet(bindings, raw.repetition_index, raw.backend_id))
    return bound, rejected


def dedup_bindings(items, names, seen=None):
    """Drop bindings whose canonical text was already seen; returns (kept, removed count)."""
    seen = set() if seen is None else seen
    kept = []
    for bindings in items:
        key = bindings_key(bindings, names)
        if key in seen:
            continue
        seen.add(key)
        kept.append(bindings)
    return kept, len(items) - len(kept)


@dataclass
class SourceBatch:
    inputs: list = field(default_factory=list)
    raw_count: int = 0
    dedup_removed: int = 0
    rejected: list = field(default_factory=list)


def generate_source_inputs(model, registry, gen, limits=None, purpose="", backend=None, refine=True,
                           exclude=()):
    """Ask the generator for new source inputs and bind them.

    Bindings equal to one in `exclude` (typically the hard-coded source)
    count as duplicates.
    """
    ctx = GenContext(Task.SOURCE_INPUTS, mut_code(registry), mtc_code(model), source_vars=model.source_vars,
                     purpose=purpose)
    raws = generate(ctx, gen, backend)
    bound, rejected = bind_snippets(model, raws, model.source_vars, registry, limits, refine)
    seen = {bindings_key(b, model.source_vars) for b in exclude}
    inputs, removed = dedup_bindings([b.bindings for b in bound], model.source_vars, seen)
    return SourceBatch(inputs, len(bound) + len(rejected), removed, rejected)
