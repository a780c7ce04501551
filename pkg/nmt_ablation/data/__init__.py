from .vocab import (
    BOS,
    BOS_TOKEN,
    EOS,
    EOS_TOKEN,
    PAD,
    PAD_TOKEN,
    RESERVED,
    UNK,
    UNK_TOKEN,
    Vocabulary,
    build_vocab,
)
from .corpus import (
    MAX_LEN,
    MAX_RATIO,
    ParallelPair,
    encode_corpus,
    encode_sentence,
    filter_pairs,
    read_lines,
    read_parallel,
)
from .batching import DEFAULT_TOKEN_BUDGET, Batch, collate, make_batches, pad_ids
from .synthetic import copy_corpus, reversal_corpus, write_parallel
