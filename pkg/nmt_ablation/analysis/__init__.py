from .entropy import EntropyProfile, attention_entropy, corpus_entropy
from .alignment import (
    AlignmentLinks,
    GoldAlignment,
    aer,
    corpus_aer,
    extract_alignment,
    format_links,
    identity_spans,
    links_from_matrix,
    merge_subword_attention,
    parse_gold_line,
    read_gold_alignments,
    read_links,
    write_links,
)
from .bleu import corpus_bleu
from .embeddings import (
    cosine_similarities,
    frequent_token_neighbors,
    nearest_neighbors,
    source_embedding_matrix,
    transplant_embeddings,
)
from .analysis import app
