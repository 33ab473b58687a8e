import hashlib
import os
from typing import Dict, Iterable, List, Sequence, Union

from objects.errors import DataError, VocabularyError

PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3
RESERVED_TOKENS = ("<pad>", "<bos>", "<eos>", "<unk>")


def tokenize(text: str) -> List[str]:
    """Lowercase whitespace tokenization."""
    return text.lower().split()


class Vocabulary:
    """Bijection between token strings and contiguous ids; ids 0-3 are reserved."""

    def __init__(self, tokens: Sequence[str]):
        self._tokens: List[str] = list(RESERVED_TOKENS) + list(tokens)
        self._ids: Dict[str, int] = {}
        for i, token in enumerate(self._tokens):
            if token in self._ids:
                raise VocabularyError(f"duplicate token '{token}' in vocabulary")
            self._ids[token] = i

    @classmethod
    def build(cls, texts: Iterable[str]) -> "Vocabulary":
        return cls(sorted({token for text in texts for token in tokenize(text)} - set(RESERVED_TOKENS)))

    @classmethod
    def load(cls, path: Union[str, os.PathLike]) -> "Vocabulary":
        """One token per line; line i holds id i + the number of reserved ids."""
        try:
            with open(path, encoding="utf-8") as f:
                return cls([line.rstrip("\n") for line in f if line.strip()])
        except OSError as e:
            raise DataError(f"cannot read vocabulary {path}: {e}") from e

    def save(self, path: Union[str, os.PathLike]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for token in self._tokens[len(RESERVED_TOKENS):]:
                f.write(token + "\n")

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @property
    def tokens(self) -> List[str]:
        return list(self._tokens)

    def id_of(self, token: str) -> int:
        return self._ids.get(token, UNK_ID)

    def token_of(self, token_id: int) -> str:
        if not 0 <= token_id < len(self._tokens):
            raise VocabularyError(f"token id {token_id} out of range [0, {len(self._tokens)})")
        return self._tokens[token_id]

    def encode(self, text: str, add_eos: bool = False) -> List[int]:
        ids = [self.id_of(token) for token in tokenize(text)]
        return ids + [EOS_ID] if add_eos else ids

    def decode(self, ids: Iterable[int]) -> str:
        """Space-join content tokens, stopping at the first EOS."""
        words = []
        for token_id in ids:
            if token_id == EOS_ID:
                break
            if token_id in (PAD_ID, BOS_ID):
                continue
            words.append(self.token_of(int(token_id)))
        return " ".join(words)

    def fingerprint(self) -> str:
        return hashlib.sha256("\n".join(self._tokens).encode("utf-8")).hexdigest()
