from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Tuple

import weave
from pydantic import Field
from rouge_score import rouge_scorer, tokenizers
from weave import Scorer

from objects.errors import EmptyCorpusError

# Lowercases and splits on runs of non-alphanumeric characters; no stemming.
TOKENIZER = tokenizers.DefaultTokenizer(use_stemmer=False)
SCORER = rouge_scorer.RougeScorer(["rouge1"], use_stemmer=False, tokenizer=TOKENIZER)


def rouge_tokens(text: str) -> List[str]:
    return TOKENIZER.tokenize(text)


@dataclass(frozen=True)
class ScoredPair:
    candidate: Tuple[str, ...]
    reference: Tuple[str, ...]
    precision: float
    recall: float
    f1: float


def rouge1(candidate: str, reference: str) -> ScoredPair:
    """Clipped unigram precision, recall and F1; all zero when either side has no tokens."""
    score = SCORER.score(reference, candidate)["rouge1"]
    return ScoredPair(
        tuple(rouge_tokens(candidate)), tuple(rouge_tokens(reference)),
        score.precision, score.recall, score.fmeasure,
    )


@weave.op(name="eval_metrics-corpus_rouge1")
def corpus_rouge1(pairs: Iterable[Tuple[str, str]]) -> Dict[str, float]:
    """Mean per-pair precision, recall and F1 over (candidate, reference) pairs."""
    scored = [rouge1(candidate, reference) for candidate, reference in pairs]
    if not scored:
        raise EmptyCorpusError("ROUGE-1 needs at least one candidate/reference pair")
    count = len(scored)
    return {
        "rouge1_f1": sum(s.f1 for s in scored) / count,
        "rouge1_precision": sum(s.precision for s in scored) / count,
        "rouge1_recall": sum(s.recall for s in scored) / count,
        "count": count,
    }


class Rouge1Scorer(Scorer):
    """ROUGE-1 of a generated report against the reference caption."""
    reference_key: str = Field(default="caption", description="Key of the reference text in a dict target")

    @weave.op
    def score(self, target: Any, output: str) -> Dict[str, float]:
        reference = target.get(self.reference_key, "") if isinstance(target, dict) else str(target)
        pair = rouge1(output or "", reference)
        return {"precision": pair.precision, "recall": pair.recall, "f1": pair.f1}
