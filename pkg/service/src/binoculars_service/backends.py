"""Model backends.

Every backend exposes the same tiny surface:

  model_id     stable identifier used in scorer_id
  vocab        tuple of token strings (toy) or None (real models)
  vocab_size   integer
  encode(text) -> list of token ids
  next_probs(token_ids) -> array of shape (L-1, vocab_size) where row j is
                           the model's distribution over the token following
                           token_ids[:j+1]

The toy backend holds explicit next-token distribution tables keyed by the
previous token (a bigram model), so every score the service can produce is
checkable by hand without any model weights.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ModelLoadError

_DEFAULT_VOCAB = (
    "<unk>", "the", "a", "and", "of", "to", "in", "is", "it", "that",
    "was", "for", "on", "with", "as", "at",
)

_ROW_SUM_TOLERANCE = 1e-9


@dataclass
class ToyModel:
    """Bigram language model over a small explicit vocabulary.

    ``table`` maps a previous token to its next-token distribution; contexts
    without an entry fall back to ``default`` (uniform when omitted). Words
    outside the vocabulary encode to index 0.
    """

    model_id: str
    vocab: tuple[str, ...] = _DEFAULT_VOCAB
    table: dict[str, dict[str, float]] = field(default_factory=dict)
    default: dict[str, float] | None = None

    def __post_init__(self):
        self.vocab = tuple(self.vocab)
        if len(self.vocab) < 2 or len(set(self.vocab)) != len(self.vocab):
            raise ModelLoadError("vocab must have >= 2 distinct tokens")
        self._index = {tok: i for i, tok in enumerate(self.vocab)}
        rows = dict(self.table)
        if self.default is not None:
            rows["<default>"] = self.default
        for name, dist in rows.items():
            unknown = set(dist) - set(self.vocab)
            if unknown:
                raise ModelLoadError(f"row {name!r} names tokens outside the vocab: {unknown}")
            values = list(dist.values())
            if any(p < 0 for p in values) or abs(sum(values) - 1.0) > _ROW_SUM_TOLERANCE:
                raise ModelLoadError(f"row {name!r} is not a probability distribution")
        self._rows = {
            self._index[tok]: self._row_array(dist) for tok, dist in self.table.items()
        }
        if self.default is not None:
            self._default_row = self._row_array(self.default)
        else:
            self._default_row = np.full(len(self.vocab), 1.0 / len(self.vocab))

    def _row_array(self, dist: dict[str, float]) -> np.ndarray:
        row = np.zeros(len(self.vocab))
        for tok, p in dist.items():
            row[self._index[tok]] = p
        return row

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def encode(self, text: str) -> list[int]:
        return [self._index.get(word, 0) for word in text.split()]

    def next_probs(self, token_ids: list[int]) -> np.ndarray:
        rows = [self._rows.get(tid, self._default_row) for tid in token_ids[:-1]]
        return np.stack(rows) if rows else np.zeros((0, self.vocab_size))


def uniform_model(model_id: str, vocab: tuple[str, ...] = _DEFAULT_VOCAB) -> ToyModel:
    return ToyModel(model_id=model_id, vocab=vocab)


def certain_model(model_id: str, vocab: tuple[str, ...] = _DEFAULT_VOCAB) -> ToyModel:
    """Assigns probability 1 to a cyclic successor of the previous token,
    so texts following the cycle are predicted with certainty."""
    table = {
        tok: {vocab[(i + 1) % len(vocab)]: 1.0} for i, tok in enumerate(vocab)
    }
    return ToyModel(model_id=model_id, vocab=vocab, table=table)


def load_toy_json(path: str | Path) -> ToyModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return ToyModel(
            model_id=doc["model_id"],
            vocab=tuple(doc["vocab"]),
            table=doc.get("table", {}),
            default=doc.get("default"),
        )
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ModelLoadError(f"cannot load toy model from {path}: {e}") from e


class TransformersModel:
    """Causal-LM backend over a Hugging Face model.

    The scoring math is identical to the toy backend's; this class only
    swaps in a real tokenizer and softmaxed logits. Greedy evaluation, no
    sampling, so repeated invocations are deterministic.
    """

    def __init__(self, name: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as e:
            raise ModelLoadError(f"transformers backend unavailable: {e}") from e
        self._torch = torch
        self.model_id = name
        self.tokenizer = AutoTokenizer.from_pretrained(name)
        self.model = AutoModelForCausalLM.from_pretrained(name).to(device).eval()
        self.device = device
        self.vocab = None

    @property
    def vocab_size(self) -> int:
        return int(self.model.config.vocab_size)

    def encode(self, text: str) -> list[int]:
        return self.tokenizer.encode(text, add_special_tokens=False)

    def next_probs(self, token_ids: list[int]) -> np.ndarray:
        torch = self._torch
        with torch.no_grad():
            ids = torch.tensor([token_ids], device=self.device)
            logits = self.model(ids).logits[0, :-1, : self.vocab_size]
            return torch.softmax(logits.float(), dim=-1).cpu().numpy()


def load_model(spec: str, device: str = "cpu"):
    """Resolve a model spec string to a backend.

    "toy:uniform" / "toy:certain" build the built-in toy models; a path to a
    .json file loads an explicit toy distribution table; anything else is
    treated as a Hugging Face model name.
    """
    if spec.startswith("toy:"):
        kind = spec.split(":", 1)[1]
        if kind == "uniform":
            return uniform_model(spec)
        if kind == "certain":
            return certain_model(spec)
        raise ModelLoadError(f"unknown toy model {spec!r}")
    if spec.endswith(".json"):
        return load_toy_json(spec)
    return TransformersModel(spec, device=device)
