"""Perplexity-ratio scoring math and the serialized scoring engine.

For a tokenized text x_1..x_L (L >= 2) and models giving next-token
distributions p(v | x_<i):

  log_ppl        = -(1/(L-1)) * sum_{i=2..L} log p_model(x_i | x_<i)
  cross_log_ppl  = -(1/(L-1)) * sum_{i=2..L} sum_v p_obs(v | x_<i) * log p_perf(v | x_<i)
  score          = log_ppl / cross_log_ppl

Natural logs throughout; performer probabilities are clipped at PROB_FLOOR
before the log so a zero cell cannot produce an infinity. The score is
floored at SCORE_FLOOR to stay strictly positive (a perfectly certain and
correct observer would otherwise yield exactly 0).
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateScore, TextTooShort, VocabMismatch

PROB_FLOOR = 1e-12
SCORE_FLOOR = 1e-9


@dataclass
class ModelPairConfig:
    observer_id: str = "toy:uniform"
    performer_id: str = "toy:uniform"
    max_tokens: int = 512
    device: str = "cpu"

    def __post_init__(self):
        if self.max_tokens < 16:
            raise ValueError("max_tokens must be >= 16")


def log_ppl(token_ids: list[int], model) -> float:
    if len(token_ids) < 2:
        raise TextTooShort(0, "log_ppl needs at least 2 tokens")
    probs = model.next_probs(token_ids)
    picked = probs[np.arange(len(token_ids) - 1), token_ids[1:]]
    return float(-np.mean(np.log(np.clip(picked, PROB_FLOOR, None))))


def cross_log_ppl(token_ids: list[int], observer, performer) -> float:
    if len(token_ids) < 2:
        raise TextTooShort(0, "cross_log_ppl needs at least 2 tokens")
    if observer.vocab_size != performer.vocab_size or (
            observer.vocab is not None and performer.vocab is not None
            and observer.vocab != performer.vocab):
        raise VocabMismatch(
            f"{observer.model_id} and {performer.model_id} do not share a vocabulary")
    obs = observer.next_probs(token_ids)
    perf = performer.next_probs(token_ids)
    cells = obs * np.log(np.clip(perf, PROB_FLOOR, None))
    return float(-np.mean(cells.sum(axis=1)))


def binoculars_score(token_ids: list[int], observer, performer) -> float:
    numerator = log_ppl(token_ids, observer)
    denominator = cross_log_ppl(token_ids, observer, performer)
    if denominator <= 0.0:
        raise DegenerateScore(f"cross_log_ppl = {denominator}")
    return max(numerator / denominator, SCORE_FLOOR)


class ScoringEngine:
    """Observer/performer pair plus the single-worker inference lock.

    The HTTP layer may accept concurrent requests; all inference funnels
    through ``score_batch`` under one lock.
    """

    def __init__(self, config: ModelPairConfig, observer, performer):
        if observer.vocab_size != performer.vocab_size or (
                observer.vocab is not None and performer.vocab is not None
                and observer.vocab != performer.vocab):
            raise VocabMismatch(
                f"{observer.model_id} and {performer.model_id} do not share a vocabulary")
        self.config = config
        self.observer = observer
        self.performer = performer
        self.scorer_id = f"{observer.model_id}+{performer.model_id}@v1"
        self._lock = threading.Lock()

    def score_batch(self, texts: list[str]) -> tuple[list[float], list[int]]:
        with self._lock:
            scores, counts = [], []
            for i, text in enumerate(texts):
                token_ids = self.observer.encode(text)[: self.config.max_tokens]
                if len(token_ids) < 2:
                    raise TextTooShort(i)
                scores.append(binoculars_score(token_ids, self.observer, self.performer))
                counts.append(len(token_ids))
            return scores, counts
