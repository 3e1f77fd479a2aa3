"""
Tests for layered run configuration: app defaults, config file, flags and
trailing overrides.
"""
import pytest

from model.errors import ConfigError
from model.settings import config_key, load_config, parse_overrides, pipeline_config, read_config_file


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("# replay run\nrepetitions = 3\ntemperature=0.5  # cooler\n\nablate = none\n")
    return str(path)


def test_defaults_come_from_app_config():
    cfg = load_config()
    assert cfg.backend == "replay"
    assert cfg.repetitions == 5
    assert cfg.examples_per_request == 5
    assert cfg.max_steps == 100_000
    assert cfg.ablate is None
    assert cfg.auth_token_env_var == "MRADOPT_API_TOKEN"


def test_layers_override_in_order(config_file):
    cfg = load_config(config_file)
    assert (cfg.repetitions, cfg.temperature) == (3, 0.5)

    cfg = load_config(config_file, {"repetitions": 4, "seed": None})
    assert cfg.repetitions == 4
    assert cfg.seed == 0

    cfg = load_config(config_file, {"repetitions": 4}, ["--repetitions", "7", "--max-steps=500"])
    assert cfg.repetitions == 7
    assert cfg.max_steps == 500


@pytest.mark.parametrize("name,key", [
    ("timeout-seconds", "timeout_seconds"),
    ("--Max-Steps", "max_steps"),
    (" seed ", "seed"),
])
def test_config_key(name, key):
    assert config_key(name) == key


def test_none_words_and_log_level():
    cfg = load_config(overrides=["--fixture-dir", "null", "--log-level", "warning", "--select-seed", ""])
    assert cfg.fixture_dir is None
    assert cfg.select_seed is None
    assert cfg.log_level == "WARNING"


@pytest.mark.parametrize("text,message", [
    ("colour = red\n", r"unknown config key 'colour' \(.*run.conf:1\)"),
    ("# ok\nrepetitions 3\n", r"run.conf:2: expected 'key = value'"),
])
def test_bad_config_files(tmp_path, text, message):
    path = tmp_path / "run.conf"
    path.write_text(text)
    with pytest.raises(ConfigError, match=message):
        read_config_file(str(path))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config file"):
        load_config(str(tmp_path / "absent.conf"))


@pytest.mark.parametrize("args,message", [
    (["stray"], "unexpected argument 'stray'"),
    (["--seed"], "override --seed has no value"),
    (["--colour", "red"], "unknown config key 'colour' \\(override\\)"),
])
def test_bad_overrides(args, message):
    with pytest.raises(ConfigError, match=message):
        parse_overrides(args)


@pytest.mark.parametrize("override,field", [
    (["--temperature", "3"], "temperature"),
    (["--repetitions", "0"], "repetitions"),
    (["--backend", "carrier-pigeon"], "backend"),
    (["--ablate", "v7"], "ablate"),
    (["--max-steps", "lots"], "max-steps"),
])
def test_validation_names_the_key(override, field):
    with pytest.raises(ConfigError, match=f"invalid configuration: {field}"):
        load_config(overrides=override)


def test_pipeline_config():
    cfg = load_config(overrides=["--ablate", "v1", "--max-steps", "900", "--seed", "7"])
    pipeline = pipeline_config(cfg)
    assert pipeline.ablation == "v1"
    assert pipeline.ablate_extra_pairs
    assert pipeline.limits.max_steps == 900
    assert pipeline.gen.seed == 7

    plain = pipeline_config(cfg, ablate=None)
    assert plain.ablation is None
    assert not plain.ablate_extra_pairs
