from typing import Sequence

import sacrebleu

from nmt_ablation.errors import DataError


def corpus_bleu(hypotheses: Sequence[str], references: Sequence[str], tokenize: str = "13a") -> float:
    """Corpus BLEU (1-4 grams, brevity penalty, no smoothing) on a 0-100 scale.

    Any n-gram order without a match gives 0.

    Raises
    ------
    DataError
        If the corpora are empty or of different lengths.
    """
    hypotheses, references = list(hypotheses), list(references)
    if len(hypotheses) != len(references):
        raise DataError(f"{len(hypotheses)} hypotheses for {len(references)} references")
    if not hypotheses:
        raise DataError("cannot score an empty corpus")
    result = sacrebleu.corpus_bleu(hypotheses, [references], smooth_method="none", tokenize=tokenize, force=True)
    return float(result.score)
