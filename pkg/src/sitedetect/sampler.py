"""Candidate page discovery (sitemaps, CDX archive indexes) and random sampling.

Discovery prefers a site's own sitemap; when none exists we fall back to a
CDX index (Wayback Machine or Common Crawl, same line format). Sampling is
seeded and deterministic so whole runs can be reproduced.
"""
from __future__ import annotations

import gzip
import logging
import random
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from urllib.parse import urlparse

from .errors import (
    IndexUnavailable,
    NoCandidates,
    RecursionLimit,
    SitemapParseError,
    SiteUnreachable,
)
from .fetcher import FetchedPage, canonical_url
from .errors import FetchError, FetchTransport

log = logging.getLogger(__name__)

MAX_SITEMAP_DEPTH = 3            # sitemapindex recursion cap
MAX_SITEMAP_URLS = 50_000        # per-file cap, the protocol maximum

_HOST_RE = re.compile(r"^[a-z0-9.\-]+(:\d+)?$")


@dataclass
class SiteSpec:
    site_id: str
    host: str
    label: str = "unknown"  # llm | human | unknown
    cohort_tags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.host or not _HOST_RE.match(self.host):
            raise ValueError(f"host must be non-empty lowercase, no scheme/path: {self.host!r}")
        if self.label not in ("llm", "human", "unknown"):
            raise ValueError(f"unknown label {self.label!r}")


@dataclass
class PageCandidate:
    url: str
    source: str  # sitemap | cdx | manifest
    capture_timestamp: str | None = None  # 14-digit, present iff source == cdx
    mime: str | None = None
    status: int | None = None

    def __post_init__(self):
        p = urlparse(self.url)
        if p.scheme not in ("http", "https") or not p.netloc:
            raise ValueError(f"candidate url must be absolute http(s): {self.url!r}")
        if (self.source == "cdx") != (self.capture_timestamp is not None):
            raise ValueError("capture_timestamp present iff source == cdx")


@dataclass
class SamplingPlan:
    site: SiteSpec
    ordered_candidates: list[PageCandidate]
    target_accepted: int
    max_attempts: int
    seed: int

    def __post_init__(self):
        if self.target_accepted < 1:
            raise ValueError("target_accepted must be >= 1")
        if self.max_attempts < self.target_accepted:
            raise ValueError("max_attempts must be >= target_accepted")
        urls = [c.url for c in self.ordered_candidates]
        if len(urls) != len(set(urls)):
            raise ValueError("duplicate candidate urls in plan")


@dataclass
class SamplingConfig:
    target_accepted: int = 15
    oversample_factor: int = 4
    max_attempts: int = 100
    seed: int = 0
    cdx_endpoint: str = "https://web.archive.org/cdx/search/cdx"
    cdx_limit: int = 500


# --- sitemap discovery ---

def discover_sitemaps(host: str, fetch) -> list[str]:
    """Find sitemap URLs for a host via robots.txt plus the well-known path.

    ``fetch`` is a url -> FetchedPage capability. robots.txt failures are
    treated as "no robots"; a transport failure on the well-known probe after
    robots.txt also failed means the host is unreachable.
    """
    base = f"http://{host}"
    found: list[str] = []
    robots_failed = False
    try:
        robots = fetch(f"{base}/robots.txt")
        if robots.status == 200:
            for line in robots.body.decode("utf-8", errors="replace").splitlines():
                key, _, value = line.partition(":")
                if key.strip().lower() == "sitemap" and value.strip():
                    found.append(value.strip())
    except FetchError:
        robots_failed = True

    well_known = f"{base}/sitemap.xml"
    if well_known not in found:
        try:
            probe = fetch(well_known)
            if probe.status == 200 and _looks_like_xml(probe):
                found.append(well_known)
        except FetchTransport as e:
            if robots_failed:
                raise SiteUnreachable(host) from e
        except FetchError:
            pass
    return found


def _looks_like_xml(page: FetchedPage) -> bool:
    if "xml" in (page.content_type or "").lower():
        return True
    head = page.body[:256].lstrip()
    return head.startswith(b"<?xml") or head.startswith(b"<urlset") or head.startswith(b"<sitemapindex")


@dataclass
class SitemapParse:
    candidates: list[PageCandidate]
    child_sitemaps: list[str]


def parse_sitemap(xml_bytes: bytes, depth: int = 0) -> SitemapParse:
    """Parse one sitemap file (urlset or sitemapindex, optionally gzipped).

    Child sitemaps are returned for the caller to fetch recursively; this
    function never does network I/O.
    """
    if depth > MAX_SITEMAP_DEPTH:
        raise RecursionLimit(f"sitemap depth {depth} > {MAX_SITEMAP_DEPTH}")
    if xml_bytes[:2] == b"\x1f\x8b":
        try:
            xml_bytes = gzip.decompress(xml_bytes)
        except OSError as e:
            raise SitemapParseError(f"bad gzip payload: {e}") from e
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as e:
        raise SitemapParseError(str(e)) from e

    ns = ""
    if root.tag.startswith("{"):
        ns = root.tag.split("}")[0] + "}"
    tag = root.tag[len(ns):]

    candidates: list[PageCandidate] = []
    children: list[str] = []
    if tag == "urlset":
        for loc in root.iterfind(f"./{ns}url/{ns}loc"):
            if loc.text and loc.text.strip():
                candidates.append(PageCandidate(url=canonical_url(loc.text.strip()), source="sitemap"))
                if len(candidates) >= MAX_SITEMAP_URLS:
                    break
    elif tag == "sitemapindex":
        for loc in root.iterfind(f"./{ns}sitemap/{ns}loc"):
            if loc.text and loc.text.strip():
                children.append(loc.text.strip())
    else:
        raise SitemapParseError(f"unexpected root element {root.tag!r}")
    return SitemapParse(candidates=candidates, child_sitemaps=children)


def collect_sitemap_candidates(sitemap_url: str, fetch, depth: int = 0) -> list[PageCandidate]:
    """Fetch a sitemap and recurse through index files, depth-capped."""
    if depth > MAX_SITEMAP_DEPTH:
        raise RecursionLimit(sitemap_url)
    try:
        page = fetch(sitemap_url)
    except FetchError:
        return []
    if page.status != 200:
        return []
    parsed = parse_sitemap(page.body, depth=depth)
    out = list(parsed.candidates)
    for child in parsed.child_sitemaps:
        out.extend(collect_sitemap_candidates(child, fetch, depth=depth + 1))
        if len(out) >= MAX_SITEMAP_URLS:
            break
    return out[:MAX_SITEMAP_URLS]


# --- CDX archive index ---

def cdx_query_url(endpoint: str, host: str, limit: int) -> str:
    return (
        f"{endpoint}?url={host}/*&output=text"
        f"&filter=statuscode:200&filter=mimetype:text/html"
        f"&collapse=urlkey&limit={limit}"
    )


def query_cdx(endpoint: str, host: str, fetch, limit: int = 500) -> list[PageCandidate]:
    """Query a CDX index for a host's text/html 200 captures.

    Parses space-separated CDX lines (urlkey, timestamp, original, mimetype,
    statuscode, digest, length). Unparseable lines are skipped and counted in
    a warning. The same format is served by Common Crawl index endpoints.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    page = fetch(cdx_query_url(endpoint, host, limit))
    if page.status != 200:
        raise IndexUnavailable(f"{endpoint} returned {page.status} for {host}")
    candidates: list[PageCandidate] = []
    skipped = 0
    for line in page.body.decode("utf-8", errors="replace").splitlines():
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) < 5:
            skipped += 1
            continue
        _urlkey, ts, original, mime, status = fields[:5]
        if not re.match(r"^\d{14}$", ts):
            skipped += 1
            continue
        try:
            status_int = int(status)
        except ValueError:
            skipped += 1
            continue
        try:
            candidates.append(PageCandidate(
                url=canonical_url(original),
                source="cdx",
                capture_timestamp=ts,
                mime=mime,
                status=status_int,
            ))
        except ValueError:
            skipped += 1
            continue
        if len(candidates) >= limit:
            break
    if skipped:
        log.warning("query_cdx: skipped %d unparseable lines for %s", skipped, host)
    return candidates


# --- sampling ---

def sample_candidates(candidates: list[PageCandidate], n: int, seed: int) -> list[PageCandidate]:
    """Uniform sample without replacement, deterministic for a fixed seed.

    Output order follows the shuffled draw order.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    k = min(n, len(candidates))
    return random.Random(seed).sample(candidates, k)


def _dedupe_newest(candidates: list[PageCandidate]) -> list[PageCandidate]:
    """Keep the newest capture per canonical url, newest-first."""
    best: dict[str, PageCandidate] = {}
    for c in candidates:
        prev = best.get(c.url)
        if prev is None or (c.capture_timestamp or "") > (prev.capture_timestamp or ""):
            best[c.url] = c
    return sorted(best.values(), key=lambda c: c.capture_timestamp or "", reverse=True)


def plan_site_sampling(site: SiteSpec, config: SamplingConfig, fetch) -> SamplingPlan:
    """Build the ordered candidate list for one site.

    Sitemap candidates win outright when any sitemap exists; otherwise CDX.
    Oversamples by oversample_factor x target because filtering discards
    pages, bounded by max_attempts.
    """
    if config.target_accepted < 1:
        raise ValueError("target_accepted must be >= 1")
    n = min(config.oversample_factor * config.target_accepted, config.max_attempts)

    sitemaps = discover_sitemaps(site.host, fetch)
    pool: list[PageCandidate] = []
    if sitemaps:
        seen: set[str] = set()
        for sm in sitemaps:
            for c in collect_sitemap_candidates(sm, fetch):
                if c.url not in seen:
                    seen.add(c.url)
                    pool.append(c)
    if not pool:
        try:
            pool = _dedupe_newest(query_cdx(config.cdx_endpoint, site.host, fetch, limit=config.cdx_limit))
        except IndexUnavailable:
            pool = []
    if not pool:
        raise NoCandidates(site.host)

    chosen = sample_candidates(pool, n, config.seed)
    return SamplingPlan(
        site=site,
        ordered_candidates=chosen,
        target_accepted=config.target_accepted,
        max_attempts=config.max_attempts,
        seed=config.seed,
    )
