"""Strict page acceptance rules: length, structure ratios, intra-site dedup.

Rules run in a fixed order (short_text, link_heavy, list_heavy, table_heavy,
duplicate) and the first failure wins, so verdicts are reproducible.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .extractor import ExtractedContent, ratios

_SHINGLE_HASH_KEY = b"sitedetect-shingle-v1"

REASONS = ("ok", "short_text", "link_heavy", "list_heavy", "table_heavy", "duplicate")


@dataclass
class FilterThresholds:
    min_words: int = 200
    max_link_ratio: float = 0.35
    max_list_ratio: float = 0.40
    max_table_ratio: float = 0.30
    shingle_size: int = 5
    dup_jaccard_max: float = 0.50

    def __post_init__(self):
        if self.min_words < 1:
            raise ValueError("min_words must be >= 1")
        if self.shingle_size < 2:
            raise ValueError("shingle_size must be >= 2")
        for name in ("max_link_ratio", "max_list_ratio", "max_table_ratio", "dup_jaccard_max"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


@dataclass
class FilterVerdict:
    accepted: bool
    reason: str
    detail: dict[str, float]

    def __post_init__(self):
        if self.reason not in REASONS:
            raise ValueError(f"unknown reason {self.reason!r}")
        if self.accepted != (self.reason == "ok"):
            raise ValueError("accepted iff reason == ok")


@dataclass
class SiteDedupState:
    """Shingle signatures of pages accepted so far, insertion-ordered."""
    accepted_signatures: list[tuple[str, frozenset[int]]] = field(default_factory=list)

    def add(self, url: str, signature: frozenset[int]):
        self.accepted_signatures.append((url, signature))


def shingle_signature(text: str, k: int) -> frozenset[int]:
    """64-bit hashes of every consecutive k-word window of lowercased text."""
    if k < 2:
        raise ValueError("shingle size must be >= 2")
    words = text.lower().split()
    out = set()
    for i in range(len(words) - k + 1):
        window = " ".join(words[i:i + k]).encode("utf-8")
        digest = hashlib.blake2b(window, digest_size=8, key=_SHINGLE_HASH_KEY).digest()
        out.add(int.from_bytes(digest, "big"))
    return frozenset(out)


def jaccard(a: frozenset[int], b: frozenset[int]) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def evaluate(c: ExtractedContent, state: SiteDedupState, t: FilterThresholds) -> FilterVerdict:
    """Apply the acceptance rules; first failing rule decides the reason.

    Duplication is checked against previously *accepted* pages only; the
    caller appends the signature to ``state`` after an acceptance.
    """
    link_ratio, list_ratio, table_ratio = ratios(c)
    signature = shingle_signature(c.main_text, t.shingle_size)
    max_sim = 0.0
    for _url, prev in state.accepted_signatures:
        sim = jaccard(signature, prev)
        if sim > max_sim:
            max_sim = sim

    detail = {
        "word_count": float(c.word_count),
        "link_ratio": link_ratio,
        "list_ratio": list_ratio,
        "table_ratio": table_ratio,
        "max_jaccard": max_sim,
    }

    if c.word_count < t.min_words:
        return FilterVerdict(False, "short_text", detail)
    if link_ratio > t.max_link_ratio:
        return FilterVerdict(False, "link_heavy", detail)
    if list_ratio > t.max_list_ratio:
        return FilterVerdict(False, "list_heavy", detail)
    if table_ratio > t.max_table_ratio:
        return FilterVerdict(False, "table_heavy", detail)
    if state.accepted_signatures and max_sim >= t.dup_jaccard_max:
        return FilterVerdict(False, "duplicate", detail)
    return FilterVerdict(True, "ok", detail)
