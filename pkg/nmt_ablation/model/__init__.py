from .config import VARIANTS, ModelConfig, apply_variant
from .record import (
    EMBEDDINGS_ONLY,
    EMBEDDINGS_PLUS_POSITIONS,
    ENCODER_OUTPUT,
    AttentionRecord,
    AttentionRecorder,
    SourceRepresentation,
)
from .layers import MultiHeadAttention, ParameterStore, sinusoid_positions
from .base import Seq2SeqModel, SourceState, group_of
from .transformer import TransformerModel, causal_mask
from .rnn import RnnModel
from .accounting import parameter_breakdown, total_parameters, transformer_encoder_layer_params
from .checkpoint import Checkpoint
from .model import app, build_model
