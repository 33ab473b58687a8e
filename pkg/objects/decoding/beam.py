"""Constrained beam search with a CTRL-style repetition penalty and length limits.

Scores are plain cumulative log-probabilities (no length normalization).
"""
from dataclasses import dataclass
from typing import Collection, Iterable, List, Protocol, Sequence, Tuple

import numpy as np
import weave
from pydantic import BaseModel, ConfigDict, Field, model_validator

from objects.autograd.ops import log_softmax
from objects.autograd.tensor import MASK_VALUE
from objects.errors import DecodingError


class DecodeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    beam_size: int = Field(default=5, ge=1)
    repetition_penalty: float = Field(default=2.0, ge=1.0)
    min_len: int = Field(default=8, ge=1)
    max_len: int = Field(default=64, ge=1)

    @model_validator(mode="after")
    def _length_window(self) -> "DecodeConfig":
        if self.min_len > self.max_len:
            raise ValueError(f"min_len={self.min_len} exceeds max_len={self.max_len}")
        return self


@dataclass(frozen=True)
class BeamHypothesis:
    tokens: Tuple[int, ...]
    score: float
    finished: bool = False

    @property
    def length(self) -> int:
        """Content tokens, EOS excluded."""
        return len(self.tokens) - int(self.finished)

    @property
    def content(self) -> Tuple[int, ...]:
        return self.tokens[:self.length]


class NextTokenModel(Protocol):
    def next_token_logits(self, sequences: Sequence[Tuple[int, ...]]) -> np.ndarray:
        """(len(sequences), V) logits for the token following each sequence."""


def apply_repetition_penalty(logits: np.ndarray, history: Iterable[int], p: float) -> np.ndarray:
    out = np.array(logits, dtype=np.float64)
    seen = np.fromiter(set(history), dtype=np.int64)
    if seen.size and p != 1.0:
        values = out[seen]
        out[seen] = np.where(values > 0, values / p, values * p)
    return out


def apply_min_length(logits: np.ndarray, current_len: int, min_len: int, eos_id: int) -> np.ndarray:
    out = np.array(logits, dtype=np.float64)
    if current_len < min_len:
        out[eos_id] = MASK_VALUE
    return out


def constrained_log_probs(
    logits: np.ndarray,
    tokens: Sequence[int],
    cfg: DecodeConfig,
    eos_id: int,
    banned: Collection[int] = (),
) -> np.ndarray:
    """Penalize, mask and normalize one logit row; disallowed tokens come back as -inf."""
    scores = apply_repetition_penalty(logits, tokens, cfg.repetition_penalty)
    scores = apply_min_length(scores, len(tokens), cfg.min_len, eos_id)
    if banned:
        scores[list(banned)] = MASK_VALUE
    if len(tokens) >= cfg.max_len:
        forced = np.full_like(scores, MASK_VALUE)
        forced[eos_id] = scores[eos_id]
        scores = forced
    allowed = scores > MASK_VALUE / 2
    if not allowed.any():
        raise DecodingError(f"every token is masked after {len(tokens)} generated tokens")
    log_probs = log_softmax(scores)
    log_probs[~allowed] = -np.inf
    return log_probs


@weave.op(name="decoding-greedy_decode")
def greedy_decode(model: NextTokenModel, cfg: DecodeConfig, eos_id: int, banned: Collection[int] = ()) -> BeamHypothesis:
    tokens: Tuple[int, ...] = ()
    score = 0.0
    while True:
        log_probs = constrained_log_probs(model.next_token_logits([tokens])[0], tokens, cfg, eos_id, banned)
        token = int(np.argmax(log_probs))
        score += float(log_probs[token])
        tokens = tokens + (token,)
        if token == eos_id:
            return BeamHypothesis(tokens, score, finished=True)


@weave.op(name="decoding-beam_search")
def beam_search(model: NextTokenModel, cfg: DecodeConfig, eos_id: int, banned: Collection[int] = ()) -> List[BeamHypothesis]:
    """Ranked finished hypotheses, best first, at most `beam_size` of them.

    Each live hypothesis proposes its 2·beam_size best continuations; EOS
    candidates ranked inside the global top beam_size finish, and the best
    beam_size others stay live.
    """
    beam = cfg.beam_size
    live: List[BeamHypothesis] = [BeamHypothesis((), 0.0)]
    finished: List[BeamHypothesis] = []
    while live:
        logits = model.next_token_logits([h.tokens for h in live])
        candidates = []
        for hypothesis, row in zip(live, logits):
            log_probs = constrained_log_probs(row, hypothesis.tokens, cfg, eos_id, banned)
            allowed = int(np.isfinite(log_probs).sum())
            for token in np.argsort(-log_probs, kind="stable")[:min(2 * beam, allowed)]:
                candidates.append((hypothesis.score + float(log_probs[token]), hypothesis.tokens + (int(token),)))
        candidates.sort(key=lambda c: (-c[0], c[1]))

        live = []
        for rank, (score, tokens) in enumerate(candidates):
            if tokens[-1] == eos_id:
                if rank < beam:
                    finished.append(BeamHypothesis(tokens, score, finished=True))
            elif len(live) < beam:
                live.append(BeamHypothesis(tokens, score))
            if rank >= beam and len(live) == beam:
                break

        finished.sort(key=lambda h: (-h.score, h.tokens))
        # Live scores can only fall, so the best live score bounds every continuation.
        if len(finished) >= beam and (not live or finished[beam - 1].score >= live[0].score):
            break
    if not finished:
        raise DecodingError("beam search ended without a finished hypothesis")
    return finished[:beam]
