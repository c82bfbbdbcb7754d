"""Detector score acquisition: HTTP client to the scoring service, plus a
deterministic stub scorer for tests and offline runs.

Scores stay raw (no per-page thresholding); aggregation happens at the site
level where the signal is robust.
"""
from __future__ import annotations

import hashlib
import threading
import time
from dataclasses import dataclass

import requests

from .errors import ProtocolError, ScorerRejected, ScorerUnavailable

# client-side safety cap: ~512 tokens worth of characters; the service
# enforces its own true token truncation
CLIENT_TRUNCATE_CHARS = 512 * 6

_STUB_HASH_KEY = b"sitedetect-stub-score-v1"


@dataclass
class PageScore:
    url: str
    score: float
    token_count: int
    scorer_id: str

    def __post_init__(self):
        if not (self.score > 0 and self.score == self.score and self.score != float("inf")):
            raise ValueError(f"score must be positive and finite, got {self.score}")
        if self.token_count < 1:
            raise ValueError("token_count must be >= 1")


@dataclass
class ScorerEndpoint:
    base_url: str
    batch_size: int = 8
    max_retries: int = 3
    request_timeout: float = 60.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class ScoredBatch:
    scores: list[float]
    token_counts: list[int]
    scorer_id: str


def stub_score(text: str) -> float:
    """Deterministic content-dependent score in (0.4, 1.4).

    Hashes the text's character trigrams with a fixed key and folds them into
    a single 64-bit value mapped uniformly onto (0.4, 1.4). Synthetic corpora
    can target a score band by rejection-sampling candidate texts against
    this function (any band of width w is hit with probability w).
    """
    if not text:
        raise ValueError("text must be non-empty")
    lowered = text.lower()
    grams = [lowered[i:i + 3] for i in range(len(lowered) - 2)] or [lowered]
    acc = 0
    for gram in grams:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=_STUB_HASH_KEY).digest()
        acc = (acc * 1099511628211 + int.from_bytes(digest, "big")) % (1 << 64)
    return 0.4 + (acc + 0.5) / float(1 << 64)


class StubScorer:
    """In-process scorer with the same interface as the HTTP client."""

    scorer_id = "stub"

    def score_texts(self, texts: list[str]) -> ScoredBatch:
        for t in texts:
            if not t:
                raise ValueError("texts must be non-empty")
        return ScoredBatch(
            scores=[stub_score(t) for t in texts],
            token_counts=[max(1, len(t.split())) for t in texts],
            scorer_id=self.scorer_id,
        )

    def healthy(self) -> bool:
        return True


class HttpScorer:
    """Client for the scoring service's POST /score endpoint.

    Batches requests, preserves input order, and retries transient failures
    (5xx, timeouts) with exponential backoff (base 1 s, factor 2). A semaphore
    caps concurrent in-flight batches.
    """

    def __init__(self, endpoint: ScorerEndpoint, max_inflight: int = 4,
                 session: requests.Session | None = None, sleep=time.sleep,
                 backoff_base: float = 1.0):
        self.endpoint = endpoint
        self.session = session or requests.Session()
        self.sleep = sleep
        self.backoff_base = backoff_base
        self._inflight = threading.Semaphore(max_inflight)

    def healthy(self) -> bool:
        try:
            resp = self.session.get(
                f"{self.endpoint.base_url.rstrip('/')}/healthz",
                timeout=self.endpoint.request_timeout,
            )
            return resp.status_code == 200 and resp.json().get("status") == "ok"
        except (requests.RequestException, ValueError):
            return False

    def score_texts(self, texts: list[str]) -> ScoredBatch:
        for t in texts:
            if not t:
                raise ValueError("texts must be non-empty")
        clipped = [t[:CLIENT_TRUNCATE_CHARS] for t in texts]
        scores: list[float] = []
        token_counts: list[int] = []
        scorer_id = ""
        size = self.endpoint.batch_size
        for start in range(0, len(clipped), size):
            batch = clipped[start:start + size]
            payload = self._post_batch(batch, start)
            if len(payload["scores"]) != len(batch) or len(payload["token_counts"]) != len(batch):
                raise ProtocolError(
                    f"{len(payload['scores'])} scores for {len(batch)} texts"
                )
            scores.extend(float(s) for s in payload["scores"])
            token_counts.extend(int(n) for n in payload["token_counts"])
            scorer_id = payload.get("scorer_id", scorer_id)
        return ScoredBatch(scores=scores, token_counts=token_counts, scorer_id=scorer_id)

    def _post_batch(self, batch: list[str], start_index: int) -> dict:
        url = f"{self.endpoint.base_url.rstrip('/')}/score"
        attempts = self.endpoint.max_retries + 1
        last_error = None
        with self._inflight:
            for attempt in range(attempts):
                if attempt:
                    self.sleep(self.backoff_base * (2 ** (attempt - 1)))
                try:
                    resp = self.session.post(
                        url, json={"texts": batch},
                        timeout=self.endpoint.request_timeout,
                    )
                except requests.RequestException as e:
                    last_error = e
                    continue
                if resp.status_code == 200:
                    try:
                        body = resp.json()
                    except ValueError as e:
                        raise ProtocolError(f"non-JSON response: {e}") from e
                    if not isinstance(body.get("scores"), list) or not isinstance(body.get("token_counts"), list):
                        raise ProtocolError("response missing scores/token_counts arrays")
                    return body
                if 400 <= resp.status_code < 500:
                    raise ScorerRejected(start_index, f"HTTP {resp.status_code}: {resp.text[:200]}")
                last_error = RuntimeError(f"HTTP {resp.status_code}")
        raise ScorerUnavailable(f"retries exhausted for batch at {start_index}: {last_error}")


def score_pages(urls: list[str], texts: list[str], scorer) -> list[PageScore]:
    """Score page texts and pair the results back with their urls."""
    if len(urls) != len(texts):
        raise ValueError("urls and texts must align")
    if not texts:
        return []
    batch = scorer.score_texts(texts)
    return [
        PageScore(url=u, score=s, token_count=n, scorer_id=batch.scorer_id)
        for u, s, n in zip(urls, batch.scores, batch.token_counts)
    ]
