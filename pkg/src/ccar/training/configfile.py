"""Flat key-value config files.

One `section.key = value` per line; '#' starts a comment.  Model keys describe
the architecture (hashed into checkpoints and bitstreams), train keys the
optimization recipe.  Unknown keys are rejected so typos fail loudly.
"""

from dataclasses import fields

from ..errors import ConfigError
from ..model.config import ModelConfig
from .config import TrainConfig

_MODEL_FIELDS = {f.name: f for f in fields(ModelConfig)}
_TRAIN_FIELDS = {f.name: f for f in fields(TrainConfig)}
_TRAIN_ALIASES = {"lambda": "lmbda"}


def _parse_value(text):
    t = text.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    if t.lower() in ("none", "null"):
        return None
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    return t


def parse_config_text(text):
    model_kwargs = {}
    train_kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if "." not in key:
            raise ConfigError(f"line {lineno}: key {key!r} must be 'model.*' or 'train.*'")
        section, _, name = key.partition(".")
        if section == "model":
            if name not in _MODEL_FIELDS:
                raise ConfigError(f"line {lineno}: unknown model key {name!r}")
            model_kwargs[name] = _parse_value(value)
        elif section == "train":
            name = _TRAIN_ALIASES.get(name, name)
            if name not in _TRAIN_FIELDS:
                raise ConfigError(f"line {lineno}: unknown train key {name!r}")
            train_kwargs[name] = _parse_value(value)
        else:
            raise ConfigError(f"line {lineno}: unknown section {section!r}")
    return ModelConfig(**model_kwargs), TrainConfig(**train_kwargs)


def parse_config_file(path):
    with open(path) as f:
        return parse_config_text(f.read())


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_config_file(path, model_config, train_config=None):
    lines = []
    for f in fields(ModelConfig):
        lines.append(f"model.{f.name} = {_fmt(getattr(model_config, f.name))}")
    if train_config is not None:
        for f in fields(TrainConfig):
            if f.name == "lr_milestones":
                continue  # schedule fractions are part of the recipe, not the file
            name = "lambda" if f.name == "lmbda" else f.name
            lines.append(f"train.{name} = {_fmt(getattr(train_config, f.name))}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
