from collections import Counter
from typing import Collection, Iterable, List, Tuple

import weave

from objects.datasets.vocabulary import tokenize
from objects.errors import ConfigError


@weave.op(name="eval_metrics-token_frequency_report")
def token_frequency_report(texts: Iterable[str], top_n: int, stopwords: Collection[str] = ()) -> List[Tuple[str, int]]:
    """Most frequent tokens, by count descending then token ascending."""
    if top_n < 1:
        raise ConfigError(f"top_n must be >= 1, got {top_n}")
    counts = Counter(token for text in texts for token in tokenize(text) if token not in stopwords)
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))[:top_n]


def repeated_unigram_rate(tokens: Iterable[str]) -> float:
    """Fraction of tokens that repeat an earlier token of the same text."""
    seen, repeats, total = set(), 0, 0
    for token in tokens:
        total += 1
        if token in seen:
            repeats += 1
        seen.add(token)
    return repeats / total if total else 0.0
