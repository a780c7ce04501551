"""Closed-form parameter counts, per allocation group."""
from .config import ModelConfig


def attention_params(d: int) -> int:
    # query, key, value and output projections, each with bias
    return 4 * (d * d + d)


def layer_norm_params(d: int) -> int:
    return 2 * d


def feed_forward_params(d: int, ff: int) -> int:
    return d * ff + ff + ff * d + d


def lstm_params(d_in: int, d: int) -> int:
    return d_in * 4 * d + d * 4 * d + 4 * d


def transformer_encoder_layer_params(d: int, ff: int) -> int:
    return attention_params(d) + 2 * layer_norm_params(d) + feed_forward_params(d, ff)


def transformer_decoder_layer_params(d: int, ff: int) -> int:
    return 2 * attention_params(d) + 3 * layer_norm_params(d) + feed_forward_params(d, ff)


def parameter_breakdown(config: ModelConfig) -> dict:
    """Analytic parameter count of every group a model built from `config` allocates.

    Groups are `embed`, `encoder.<i>`, `decoder.<i>`, `output` and, for the
    RNN family, `attention` and `combine`. The values sum to the size of the
    allocated model exactly.

    Parameters
    ----------
    config : ModelConfig

    Returns
    -------
    dict[str, int], group name to parameter count, in allocation order
    """
    d, v = config.d_model, config.vocab_size
    groups = {"embed": v * d if config.tie_embeddings else 2 * v * d}

    if config.family == "transformer":
        for i in range(config.encoder_layers):
            groups[f"encoder.{i}"] = transformer_encoder_layer_params(d, config.ff_dim)
        for i in range(config.decoder_layers):
            groups[f"decoder.{i}"] = transformer_decoder_layer_params(d, config.ff_dim)
    else:
        for i in range(config.encoder_layers):
            groups[f"encoder.{i}"] = lstm_params(d, d)
        for i in range(config.decoder_layers):
            d_in = 2 * d if i == 0 and not config.use_attention else d
            groups[f"decoder.{i}"] = lstm_params(d_in, d)
        if config.use_attention:
            groups["attention"] = d * d
        groups["combine"] = 2 * d * d + d

    groups["output"] = v if config.tie_embeddings else v * d + v
    return groups


def total_parameters(config: ModelConfig) -> int:
    return sum(parameter_breakdown(config).values())
