"""The ablation switchboard: one ModelConfig describes every model variant."""
from typing import Iterable, Literal, Mapping

from pydantic import BaseModel, Extra, ValidationError, root_validator

from nmt_ablation.errors import ConfigError


class ModelConfig(BaseModel):
    """Architecture of a translation model.

    `encoder_layers=0` gives the encoder-free variants: the decoder attends to
    scaled word embeddings plus sinusoid positions (or embeddings alone when
    `use_source_positions` is false).
    """

    family: Literal["transformer", "rnn"] = "transformer"
    vocab_size: int
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

    class Config:
        extra = Extra.forbid
        allow_mutation = False

    @root_validator(skip_on_failure=True)
    def check_architecture(cls, values):
        if values["vocab_size"] < 5:
            raise ValueError("vocab_size must leave room for at least one regular token")
        if values["encoder_layers"] < 0:
            raise ValueError("encoder_layers must be >= 0")
        if values["decoder_layers"] < 1:
            raise ValueError("decoder_layers must be >= 1")
        if values["family"] == "transformer" and not values["use_attention"]:
            raise ValueError("the transformer family always uses encoder-decoder attention")
        if values["d_model"] % 2:
            raise ValueError("d_model must be even for sinusoid positions")
        if values["heads"] < 1 or values["d_model"] % values["heads"]:
            raise ValueError("heads must divide d_model")
        for key in ("embed_dropout", "block_dropout", "rnn_dropout"):
            if not 0.0 <= values[key] < 1.0:
                raise ValueError(f"{key} must be in [0, 1)")
        return values

    @classmethod
    def from_mapping(cls, values: Mapping) -> "ModelConfig":
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"invalid model config: {e}") from None

    def to_lines(self) -> list:
        lines = []
        for key, value in self.dict().items():
            if isinstance(value, bool):
                value = str(value).lower()
            lines.append(f"{key}={value}")
        return lines

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "ModelConfig":
        values = {}
        for line in lines:
            line = line.strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"model config line is not key=value: {line!r}")
            if key not in cls.__fields__:
                raise ConfigError(f"unknown model config key {key!r}")
            values[key] = value
        return cls.from_mapping(values)


# Variant names and the switches they set.
VARIANTS = {
    "transformer": {"family": "transformer"},
    "trans-noenc": {"family": "transformer", "encoder_layers": 0},
    "trans-noenc-nopos": {"family": "transformer", "encoder_layers": 0, "use_source_positions": False},
    "rnns2s": {"family": "rnn", "use_attention": True},
    "rnns2s-noenc": {"family": "rnn", "encoder_layers": 0, "use_attention": True},
    "rnns2s-noatt": {"family": "rnn", "use_attention": False},
    "rnns2s-noatt-noenc": {"family": "rnn", "encoder_layers": 0, "use_attention": False},
}


def apply_variant(values: Mapping, variant: str) -> dict:
    """Overlay the switches of a named variant onto model config values."""
    try:
        overrides = VARIANTS[variant.lower()]
    except KeyError:
        raise ConfigError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}") from None
    merged = dict(values)
    merged.update(overrides)
    return merged
