"""
Run configuration

Defaults come from app.config; a config file (`key = value`, `#` comments)
overrides them, global CLI flags override the file, and trailing
`--key value` pairs override everything. The merged values are validated by
CliConfig and turned into the PipelineConfig the pipeline runs with.
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from __init__ import app
from api.generator import GenConfig
from model.errors import ConfigError
from model.pipeline import PipelineConfig
from model.runtime import Limits


I64 = {"ge": -2**63, "le": 2**63 - 1}
NONE_WORDS = ("", "none", "null")


class CliConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    corpus_dir: str
    output_dir: str
    backend: Literal["replay", "synth", "http"]
    fixture_dir: Optional[str] = None
    endpoint_url: Optional[str] = None
    model: str
    auth_token_env_var: str
    timeout_seconds: float = Field(gt=0)
    max_retries: int = Field(ge=0)
    examples_per_request: int = Field(ge=1)
    repetitions: int = Field(ge=1)
    temperature: float = Field(ge=0.0, le=2.0)
    seed: int = Field(**I64)
    parallelism: int = Field(ge=1)
    ablate: Optional[Literal["v1", "v2", "v3", "direct"]] = None
    dedup: bool = True
    max_steps: int = Field(ge=1)
    synth_profile: str
    pool_examples: int = Field(ge=1)
    pool_repetitions: int = Field(ge=1)
    select_seed: Optional[int] = Field(default=None, **I64)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"]
    report_timings: bool = False


def config_key(name):
    """`timeout-seconds` and `timeout_seconds` both name the timeout_seconds field."""
    return name.strip().lstrip("-").replace("-", "_").lower()


def _known(key, where):
    if key not in CliConfig.model_fields:
        raise ConfigError(f"unknown config key '{key.replace('_', '-')}' ({where})")
    return key


def app_defaults():
    return {key: app.config[key.upper()] for key in CliConfig.model_fields}


def read_config_file(path):
    """{key: raw string} from a flat config file; raises ConfigError on bad lines or keys."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    values = {}
    for number, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[_known(config_key(key), f"{path}:{number}")] = value.strip()
    return values


def parse_overrides(args):
    """Trailing `--key value` / `--key=value` pairs into {key: raw string}."""
    values, rest = {}, list(args)
    while rest:
        token = rest.pop(0)
        if not token.startswith("--"):
            raise ConfigError(f"unexpected argument '{token}' (overrides are --key value)")
        if "=" in token:
            key, value = token.split("=", 1)
        else:
            if not rest:
                raise ConfigError(f"override {token} has no value")
            key, value = token, rest.pop(0)
        values[_known(config_key(key), "override")] = value
    return values


def _clean(values):
    cleaned = {}
    for key, value in values.items():
        if isinstance(value, str):
            value = value.strip()
            if value.lower() in NONE_WORDS and key in ("fixture_dir", "endpoint_url", "ablate", "select_seed"):
                value = None
            elif key == "log_level":
                value = value.upper()
        cleaned[key] = value
    return cleaned


def load_config(config_path=None, flags=None, overrides=()):
    """Merge every configuration layer and validate the result.

    Args:
        config_path: optional config file.
        flags: {key: value} from global CLI flags; None values are ignored.
        overrides: trailing `--key value` arguments.

    Returns:
        CliConfig; raises ConfigError naming the offending key.
    """
    merged = app_defaults()
    if config_path:
        merged.update(read_config_file(config_path))
    merged.update({_known(config_key(k), "flag"): v for k, v in (flags or {}).items() if v is not None})
    merged.update(parse_overrides(overrides))
    try:
        cfg = CliConfig(**_clean(merged))
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc']).replace('_', '-')}: {err['msg']}"
                             for err in e.errors())
        raise ConfigError(f"invalid configuration: {problems}")
    app.logger.setLevel(cfg.log_level)
    return cfg


def gen_config(cfg):
    return GenConfig(
        examples_per_request=cfg.examples_per_request,
        repetitions=cfg.repetitions,
        temperature=cfg.temperature,
        seed=cfg.seed,
        backend=cfg.backend,
        fixture_dir=cfg.fixture_dir,
        synth_profile=cfg.synth_profile,
        endpoint_url=cfg.endpoint_url,
        model=cfg.model,
        auth_token_env_var=cfg.auth_token_env_var,
        timeout_seconds=cfg.timeout_seconds,
        max_retries=cfg.max_retries,
        parallelism=cfg.parallelism,
    )


def pipeline_config(cfg, ablate=...):
    """PipelineConfig for cfg; `ablate` replaces cfg.ablate when given."""
    return PipelineConfig.for_ablation(
        cfg.ablate if ablate is ... else ablate,
        gen=gen_config(cfg),
        dedup=cfg.dedup,
        limits=Limits(max_steps=cfg.max_steps),
        select_seed=cfg.select_seed,
        pool_examples=cfg.pool_examples,
        pool_repetitions=cfg.pool_repetitions,
        report_timings=cfg.report_timings,
    )
