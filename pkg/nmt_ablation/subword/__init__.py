from .bpe_funcs import (
    DEFAULT_MARKER,
    DEFAULT_NUM_MERGES,
    TOY_NUM_MERGES,
    BpeModel,
    apply_bpe,
    learn_bpe,
    load_merges,
    restore_words,
    save_merges,
)
from .subword import app
