"""
Candidate generation

A generation request is a GenContext (what to generate, with the code and
examples to show) plus a GenConfig (how many, which backend). Backends turn
the assembled prompt into raw response texts; extract_code_blocks pulls the
fenced MTL snippets out of them.
"""
import hashlib
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from api.prompts import assemble_prompt
from model.errors import ConfigError, MtlError
from model.mtc import matches_skeleton
from model.parser import parse_program
from model.syntax import Origin


BACKENDS = ("replay", "synth", "http")
FENCE_PATTERN = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n(.*?)```", re.DOTALL)


class Task(Enum):
    SOURCE_INPUTS = "SOURCE_INPUTS"
    INPUT_PAIRS = "INPUT_PAIRS"
    TRANSFORMATION = "TRANSFORMATION"


@dataclass(frozen=True)
class GenConfig:
    examples_per_request: int = 5
    repetitions: int = 5
    temperature: float = 0.2
    seed: int = 0
    backend: str = "replay"
    fixture_dir: object = None
    synth_profile: str = "default"
    endpoint_url: object = None
    model: str = "gpt-4o-mini"
    auth_token_env_var: str = "MRADOPT_API_TOKEN"
    timeout_seconds: float = 30.0
    max_retries: int = 3
    parallelism: int = 1

    def __post_init__(self):
        if self.examples_per_request < 1:
            raise ConfigError("examples-per-request must be at least 1")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError("temperature must be within [0.0, 2.0]")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend '{self.backend}' (expected one of {', '.join(BACKENDS)})")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")

    def read(self):
        return {
            "examples_per_request": self.examples_per_request,
            "repetitions": self.repetitions,
            "temperature": self.temperature,
            "seed": self.seed,
            "backend": self.backend,
            "synth_profile": self.synth_profile if self.backend == "synth" else None,
            "model": self.model if self.backend == "http" else None,
        }


@dataclass(frozen=True)
class GenContext:
    task: Task
    mut_code: str
    mtc_code: str
    source_vars: tuple = ()
    example_pairs: tuple = ()
    source_examples: tuple = ()
    skeleton: object = None
    purpose: str = ""

    def __post_init__(self):
        if self.task is Task.TRANSFORMATION and self.skeleton is None:
            raise ValueError("transformation requests need a skeleton")
        if self.task is Task.INPUT_PAIRS and not self.example_pairs:
            raise ValueError("input-pair requests need at least the hard-coded pair")

    @property
    def request_key(self):
        """Fixture directory name for this request."""
        if self.task is Task.SOURCE_INPUTS:
            return "source_pool" if self.purpose == "pool" else "source_inputs"
        if self.task is Task.INPUT_PAIRS:
            return "input_pairs"
        return "transformation_single" if len(self.example_pairs) == 1 else "transformation"


@dataclass(frozen=True)
class RawCandidate:
    text: str
    backend_id: str
    repetition_index: int
    request_digest: str = field(default="")

    def read(self):
        return {"backend": self.backend_id, "repetition": self.repetition_index, "digest": self.request_digest}


def request_digest(prompt):
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def make_backend(cfg):
    """Backend object for cfg.backend."""
    if cfg.backend == "replay":
        from api.replay import ReplayBackend
        return ReplayBackend()
    if cfg.backend == "synth":
        from api.synth import SynthBackend
        return SynthBackend()
    from api.chat_api import HttpBackend
    return HttpBackend()


def generate(ctx, cfg, backend=None):
    """Run one generation request.

    Args:
        ctx: what to generate.
        cfg: how many repetitions, which backend, seed.
        backend: optional backend instance (defaults to make_backend(cfg)).

    Returns:
        list of RawCandidate ordered by repetition index; raises BackendError
        on transport failures or missing fixtures.
    """
    backend = backend or make_backend(cfg)
    prompt = assemble_prompt(ctx, cfg)
    digest = request_digest(prompt)
    count = backend.count(ctx, cfg, prompt)

    def one(index):
        return RawCandidate(backend.complete(ctx, cfg, prompt, index), backend.backend_id, index, digest)

    if cfg.parallelism == 1 or count <= 1:
        return [one(index) for index in range(count)]
    with ThreadPoolExecutor(max_workers=min(cfg.parallelism, count)) as pool:
        return list(pool.map(one, range(count)))


def fenced_blocks(raw):
    return [match.group(1) for match in FENCE_PATTERN.finditer(raw)]


def extract_code_blocks(raw, expect=None):
    """Fenced code blocks of a response, in order.

    With a skeleton, only blocks that parse and define a function matching
    the skeleton's name, arity and return shape are kept.
    """
    blocks = fenced_blocks(raw)
    if expect is None:
        return blocks
    kept = []
    for block in blocks:
        try:
            program = parse_program(block, Origin.HELPER)
        except MtlError:
            continue
        fn = program.function(expect.fn_name)
        if fn is not None and matches_skeleton(fn, expect)[0]:
            kept.append(block)
    return kept
