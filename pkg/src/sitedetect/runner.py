"""End-to-end orchestration: manifest -> sampled, fetched, filtered, scored,
classified sites, with an append-only results log for crash resume.

Per-file state in a run directory:
  manifest.json   materialized manifest + config snapshot
  pages.jsonl     one record per fetched+filtered page
  sites.jsonl     features, page scores, and verdict per classified site
  results.jsonl   one SiteResult per site; source of truth for resume
"""
from __future__ import annotations

import hashlib
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import classifier
from .classifier import LinearModel, SiteFeatures, SiteVerdict, build_site_features, predict
from .errors import FetchError, NoCandidates, SiteDetectError, SiteUnreachable, EncodingError
from .extractor import extract
from .fetcher import Fetcher
from .pagefilter import SiteDedupState, evaluate, shingle_signature
from .runconfig import RunManifest
from .sampler import SamplingConfig, SiteSpec, plan_site_sampling
from .scoring import HttpScorer, StubScorer, score_pages

log = logging.getLogger(__name__)


@dataclass
class SiteResult:
    site_id: str
    status: str  # classified | insufficient_pages | unreachable
    verdict: SiteVerdict | None = None
    pages_sampled: int = 0
    pages_accepted: int = 0
    pages_rejected: int = 0
    rejection_histogram: dict[str, int] = field(default_factory=dict)
    search_rank: int | None = None
    cohort_tags: list[str] = field(default_factory=list)
    error: str | None = None

    def __post_init__(self):
        if (self.verdict is not None) != (self.status == "classified"):
            raise ValueError("verdict present iff status == classified")

    def to_dict(self) -> dict:
        doc = {
            "site_id": self.site_id,
            "status": self.status,
            "pages_sampled": self.pages_sampled,
            "pages_accepted": self.pages_accepted,
            "pages_rejected": self.pages_rejected,
            "rejection_histogram": self.rejection_histogram,
            "search_rank": self.search_rank,
            "cohort_tags": self.cohort_tags,
            "error": self.error,
            "verdict": None,
        }
        if self.verdict is not None:
            doc["verdict"] = {
                "label": self.verdict.label,
                "margin": self.verdict.margin,
                "deciles": self.verdict.features.deciles,
                "n_pages": self.verdict.features.n_pages,
                "scorer_id": self.verdict.features.scorer_id,
            }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "SiteResult":
        verdict = None
        if doc.get("verdict"):
            v = doc["verdict"]
            features = SiteFeatures(
                site_id=doc["site_id"],
                deciles=[float(x) for x in v["deciles"]],
                n_pages=int(v["n_pages"]),
                scorer_id=v["scorer_id"],
            )
            verdict = SiteVerdict(
                site_id=doc["site_id"],
                label=v["label"],
                margin=float(v["margin"]),
                features=features,
            )
        return cls(
            site_id=doc["site_id"],
            status=doc["status"],
            verdict=verdict,
            pages_sampled=doc.get("pages_sampled", 0),
            pages_accepted=doc.get("pages_accepted", 0),
            pages_rejected=doc.get("pages_rejected", 0),
            rejection_histogram=doc.get("rejection_histogram", {}),
            search_rank=doc.get("search_rank"),
            cohort_tags=doc.get("cohort_tags", []),
            error=doc.get("error"),
        )


class RunContext:
    """Shared machinery for one run: fetcher, scorer, model, log writers."""

    def __init__(self, manifest: RunManifest, out_dir: str | Path,
                 fetcher: Fetcher | None = None, scorer=None,
                 model: LinearModel | None = None):
        self.manifest = manifest
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        cfg = manifest.config
        cache_dir = cfg.cache_dir or str(self.out_dir / "cache")
        self.fetcher = fetcher or Fetcher(policy=cfg.fetch, cache_dir=cache_dir)
        if scorer is not None:
            self.scorer = scorer
        elif cfg.scorer_mode == "stub":
            self.scorer = StubScorer()
        else:
            self.scorer = HttpScorer(cfg.scorer)
        if model is not None:
            self.model = model
        elif cfg.model_path:
            self.model = classifier.load_model(cfg.model_path)
        else:
            self.model = None
        self._write_lock = threading.Lock()

    def append(self, name: str, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._write_lock:
            with (self.out_dir / name).open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def site_seed(run_seed: int, site_id: str) -> int:
    """Stable per-site seed, independent of processing order."""
    digest = hashlib.blake2b(f"{run_seed}:{site_id}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def run_site(site: SiteSpec, ctx: RunContext) -> SiteResult:
    cfg = ctx.manifest.config
    rank = ctx.manifest.search_ranks.get(site.site_id)
    histogram: dict[str, int] = {}
    sampled = accepted_n = rejected = 0

    def bump(reason: str):
        histogram[reason] = histogram.get(reason, 0) + 1

    sampling = SamplingConfig(**{
        **cfg.sampling.__dict__,
        "seed": site_seed(cfg.sampling.seed, site.site_id),
    })
    try:
        plan = plan_site_sampling(site, sampling, fetch=ctx.fetcher.fetch)
    except (NoCandidates, SiteUnreachable, FetchError) as e:
        return SiteResult(site_id=site.site_id, status="unreachable",
                          search_rank=rank, cohort_tags=site.cohort_tags,
                          error=f"{type(e).__name__}: {e}")

    state = SiteDedupState()
    accepted: list[tuple[str, str]] = []  # (url, main_text)
    for cand in plan.ordered_candidates:
        if len(accepted) >= plan.target_accepted:
            break
        sampled += 1
        try:
            if cand.source == "cdx":
                page = ctx.fetcher.fetch_archived(cand.url, cand.capture_timestamp, cfg.archive_base)
            else:
                page = ctx.fetcher.fetch(cand.url)
        except FetchError as e:
            rejected += 1
            bump("fetch_error")
            ctx.append("pages.jsonl", {
                "site_id": site.site_id, "url": cand.url,
                "accepted": False, "reason": "fetch_error", "detail": {"error": str(e)},
            })
            continue
        if page.status != 200:
            rejected += 1
            bump("http_error")
            ctx.append("pages.jsonl", {
                "site_id": site.site_id, "url": cand.url,
                "accepted": False, "reason": "http_error", "detail": {"status": page.status},
            })
            continue
        try:
            content = extract(page.body, cand.url)
        except EncodingError as e:
            rejected += 1
            bump("extract_error")
            ctx.append("pages.jsonl", {
                "site_id": site.site_id, "url": cand.url,
                "accepted": False, "reason": "extract_error", "detail": {"error": str(e)},
            })
            continue
        verdict = evaluate(content, state, cfg.filter)
        ctx.append("pages.jsonl", {
            "site_id": site.site_id, "url": cand.url,
            "accepted": verdict.accepted, "reason": verdict.reason,
            "detail": verdict.detail,
        })
        if verdict.accepted:
            state.add(cand.url, shingle_signature(content.main_text, cfg.filter.shingle_size))
            accepted.append((cand.url, content.main_text))
            accepted_n += 1
        else:
            rejected += 1
            bump(verdict.reason)

    if accepted_n < cfg.min_pages:
        return SiteResult(
            site_id=site.site_id, status="insufficient_pages",
            pages_sampled=sampled, pages_accepted=accepted_n, pages_rejected=rejected,
            rejection_histogram=histogram, search_rank=rank, cohort_tags=site.cohort_tags,
        )

    urls = [u for u, _ in accepted]
    texts = [t for _, t in accepted]
    page_scores = score_pages(urls, texts, ctx.scorer)
    features = build_site_features(site.site_id, [p.score for p in page_scores],
                                   page_scores[0].scorer_id)
    site_verdict = predict(ctx.model, features) if ctx.model is not None else None
    ctx.append("sites.jsonl", {
        "site_id": site.site_id,
        "deciles": features.deciles,
        "n_pages": features.n_pages,
        "scorer_id": features.scorer_id,
        "label": site_verdict.label if site_verdict else None,
        "margin": site_verdict.margin if site_verdict else None,
        "page_scores": [{"url": p.url, "score": p.score} for p in page_scores],
    })
    if site_verdict is None:
        return SiteResult(
            site_id=site.site_id, status="insufficient_pages",
            pages_sampled=sampled, pages_accepted=accepted_n, pages_rejected=rejected,
            rejection_histogram=histogram, search_rank=rank, cohort_tags=site.cohort_tags,
            error="no model configured; features recorded without a verdict",
        )
    return SiteResult(
        site_id=site.site_id, status="classified", verdict=site_verdict,
        pages_sampled=sampled, pages_accepted=accepted_n, pages_rejected=rejected,
        rejection_histogram=histogram, search_rank=rank, cohort_tags=site.cohort_tags,
    )


def load_results(out_dir: str | Path) -> dict[str, SiteResult]:
    """Read the append-only results log; last record per site wins."""
    path = Path(out_dir) / "results.jsonl"
    results: dict[str, SiteResult] = {}
    if not path.exists():
        return results
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        try:
            result = SiteResult.from_dict(json.loads(line))
        except (ValueError, KeyError):
            log.warning("skipping corrupt results line in %s", path)
            continue
        results[result.site_id] = result
    return results


def run_batch(manifest: RunManifest, out_dir: str | Path, parallelism: int = 1,
              scorer=None, fetcher=None, model=None) -> list[SiteResult]:
    """Process every site in the manifest, resuming past completed sites.

    Individual site failures never abort the batch; unexpected errors are
    recorded as unreachable with the error message.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    ctx = RunContext(manifest, out_dir, fetcher=fetcher, scorer=scorer, model=model)
    (ctx.out_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")

    done = load_results(out_dir)
    pending = [s for s in manifest.sites if s.site_id not in done]

    def worker(site: SiteSpec) -> SiteResult:
        try:
            result = run_site(site, ctx)
        except SiteDetectError as e:
            result = SiteResult(site_id=site.site_id, status="unreachable",
                                search_rank=ctx.manifest.search_ranks.get(site.site_id),
                                cohort_tags=site.cohort_tags,
                                error=f"{type(e).__name__}: {e}")
        ctx.append("results.jsonl", result.to_dict())
        return result

    fresh: dict[str, SiteResult] = {}
    if pending:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            for result in pool.map(worker, pending):
                fresh[result.site_id] = result

    combined = {**done, **fresh}
    return [combined[s.site_id] for s in manifest.sites if s.site_id in combined]
