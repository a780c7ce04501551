import logging
from pathlib import Path
from os.path import join as pj
from typing import Literal, Optional

from pydantic import BaseModel, BaseSettings, Extra, ValidationError

from nmt_ablation import PKG_PATH
from nmt_ablation.errors import ConfigError


log = logging.getLogger(__name__)

PRESET_DIR = pj(PKG_PATH, "presets")
PATH_KEYS = (
    "train_source",
    "train_target",
    "dev_source",
    "dev_target",
    "test_source",
    "test_target",
    "gold_alignment",
)
MODEL_KEYS = (
    "family",
    "encoder_layers",
    "decoder_layers",
    "use_attention",
    "use_source_positions",
    "d_model",
    "ff_dim",
    "heads",
    "tie_embeddings",
    "embed_dropout",
    "block_dropout",
    "rnn_dropout",
)


class Settings(BaseSettings):
    # Overrides the seed of every loaded experiment config
    seed: Optional[int] = None
    # Root log level
    log_level: str = "INFO"

    class Config:
        env_prefix = "NMTABL_"
        env_file = ".env"
        env_file_encoding = "utf-8"


def get_settings() -> Settings:
    """Uses the Pydantic settings management to read settings from defaults/the
    environment.

    Returns
    -------
    Settings
        The instantiated settings object.
    """
    return Settings()


class ExperimentConfig(BaseModel):
    """Everything one experiment needs: data paths, model, optimisation, decoding and analysis.

    Defaults are those of the `paper` preset.
    """

    preset: Literal["paper", "toy"] = "paper"
    seed: int = 1

    # data
    train_source: Optional[Path] = None
    train_target: Optional[Path] = None
    dev_source: Optional[Path] = None
    dev_target: Optional[Path] = None
    test_source: Optional[Path] = None
    test_target: Optional[Path] = None
    gold_alignment: Optional[Path] = None
    bpe_merges: int = 32000
    marker: str = "@@"
    min_count: int = 1
    max_len: int = 100
    max_ratio: float = 9.0

    # model
    variant: Optional[str] = None
    family: Literal["transformer", "rnn"] = "transformer"
    encoder_layers: int = 6
    decoder_layers: int = 6
    use_attention: bool = True
    use_source_positions: bool = True
    d_model: int = 768
    ff_dim: int = 2048
    heads: int = 8
    tie_embeddings: bool = True
    embed_dropout: float = 0.1
    block_dropout: float = 0.1
    rnn_dropout: float = 0.2

    # training
    lr: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    token_budget: int = 2048
    checkpoint_interval: int = 1000
    plateau_patience: int = 8
    lr_decay: float = 0.7
    early_stop_patience: int = 32
    max_updates: int = 1_000_000
    label_smoothing: float = 0.0
    grad_clip_rnn: float = 1.0

    # decoding
    beam: int = 8
    max_output_len: int = 100
    length_penalty: float = 1.0

    # analysis
    head_reduce: Literal["sum", "max"] = "sum"
    bidirectional: bool = True
    neighbors_k: int = 5
    neighbors_top: int = 150

    class Config:
        extra = Extra.forbid

    def model_values(self) -> dict:
        """Model switches with the named variant, if any, applied on top."""
        from nmt_ablation.model import apply_variant

        values = {key: getattr(self, key) for key in MODEL_KEYS}
        if self.variant:
            values = apply_variant(values, self.variant)
        return values

    def model_config(self, vocab_size: int):
        from nmt_ablation.model import ModelConfig

        return ModelConfig.from_mapping({**self.model_values(), "vocab_size": vocab_size})

    def train_config(self):
        from nmt_ablation.training import TrainConfig

        return TrainConfig(**{key: getattr(self, key) for key in TrainConfig.__fields__})

    def decode_config(self):
        from nmt_ablation.inference import DecodeConfig

        return DecodeConfig(**{key: getattr(self, key) for key in DecodeConfig.__fields__})

    def require(self, *keys: str) -> tuple:
        """The configured paths for `keys`, raising if one is unset."""
        missing = [key for key in keys if getattr(self, key) is None]
        if missing:
            raise ConfigError(f"config does not set {', '.join(missing)}")
        return tuple(getattr(self, key) for key in keys)


def read_key_values(path) -> dict:
    """Parse a flat `key=value` file. The last of duplicated keys wins."""
    values = {}
    with open(path, encoding="utf-8") as fp:
        for lineno, line in enumerate(fp, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or not key:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            if key in values:
                log.warning("%s:%d: duplicate key %r, keeping the last value", path, lineno, key)
            values[key] = value if value else None
    return values


def _validate(values: dict, source) -> ExperimentConfig:
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"{source}: {problems}") from None


def load_preset(name: str) -> ExperimentConfig:
    path = Path(PRESET_DIR) / f"{name}.cfg"
    if not path.exists():
        raise ConfigError(f"unknown preset {name!r}")
    values = read_key_values(path)
    values["preset"] = name
    return _validate(values, path)


def load_config(path, settings: Optional[Settings] = None) -> ExperimentConfig:
    """Load an experiment config file on top of its preset.

    Parameters
    ----------
    path : str or Path, flat `key=value` file; `#` starts a comment line
    settings : Settings, optional, environment overrides (read when not given)

    Returns
    -------
    ExperimentConfig

    Raises
    ------
    ConfigError
        On unknown keys, values of the wrong type, or configured paths that
        do not exist. Relative paths are taken relative to the config file.
    """
    path = Path(path)
    user = read_key_values(path)
    preset = user.get("preset") or "paper"
    base = load_preset(preset).dict()
    base.update(user)
    base["preset"] = preset

    _settings = settings if settings else get_settings()
    if _settings.seed is not None:
        base["seed"] = _settings.seed

    config = _validate(base, path)
    resolved = {}
    for key in PATH_KEYS:
        value = getattr(config, key)
        if value is None:
            continue
        if not value.is_absolute():
            value = path.parent / value
        if not value.exists():
            raise ConfigError(f"{path}: {key} points to a missing file: {value}")
        resolved[key] = value
    return config.copy(update=resolved)


def optional_config(path) -> Optional[ExperimentConfig]:
    return load_config(path) if path is not None else None


def resolve_option(value, config: Optional[ExperimentConfig], key: str, default=None):
    """A command-line value if given, else the config's `key`, else `default`.

    Raises
    ------
    ConfigError
        If all three are unset.
    """
    if value is not None:
        return value
    if config is not None and getattr(config, key) is not None:
        return getattr(config, key)
    if default is None:
        raise ConfigError(f"{key} is neither given on the command line nor set by a --config")
    return default
