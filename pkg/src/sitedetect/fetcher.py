"""Polite HTTP fetching with per-host rate limiting, caching, and archive support.

The fetcher retrieves static HTML only. A ``renderer`` hook can be supplied to
swap in a browser-based fetch later without touching callers.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
import urllib.robotparser
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urlparse

import requests

from .errors import (
    FetchError,
    FetchTimeout,
    FetchTransport,
    RobotsDenied,
    SnapshotMissing,
    TooManyRedirects,
)

_TS_RE = re.compile(r"^\d{14}$")

DEFAULT_USER_AGENT = "sitedetect-research-crawler/0.1 (+batch measurement tool)"


@dataclass
class FetchPolicy:
    per_host_min_delay: float = 2.0  # seconds
    timeout: float = 30.0
    max_redirects: int = 5
    max_body_bytes: int = 5 * 1024 * 1024
    user_agent: str = DEFAULT_USER_AGENT
    respect_robots: bool = True

    def __post_init__(self):
        if self.per_host_min_delay < 0:
            raise ValueError("per_host_min_delay must be >= 0")
        if self.max_redirects < 0:
            raise ValueError("max_redirects must be >= 0")


@dataclass
class FetchedPage:
    request_url: str
    final_url: str
    status: int
    content_type: str
    body: bytes
    fetched_at: str  # UTC ISO timestamp
    from_cache: bool = False
    truncated: bool = False

    def __post_init__(self):
        if not (100 <= self.status <= 599):
            raise ValueError(f"status {self.status} outside [100, 599]")


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def canonical_url(url: str) -> str:
    """Lowercase the host, drop the fragment, default empty path to /."""
    p = urlparse(url)
    netloc = p.netloc.lower()
    path = p.path or "/"
    canon = f"{p.scheme}://{netloc}{path}"
    if p.query:
        canon += f"?{p.query}"
    return canon


class PageCache:
    """One file per entry under a 2-level hash fan-out directory.

    Layout: ``cache/{h[0:2]}/{h[2:4]}/{h}.bin`` where h is the 64-hex key of
    (canonical url, optional archive timestamp). Stores are atomic
    (write-then-rename), so concurrent writers leave one valid entry.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    @staticmethod
    def key(url: str, ts: str | None = None) -> str:
        raw = f"{canonical_url(url)}|{ts or ''}".encode("utf-8")
        return hashlib.sha256(raw).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[0:2] / key[2:4] / f"{key}.bin"

    def lookup(self, url: str, ts: str | None = None) -> FetchedPage | None:
        path = self._path(self.key(url, ts))
        try:
            blob = path.read_bytes()
            hlen = int.from_bytes(blob[:4], "big")
            header = json.loads(blob[4:4 + hlen].decode("utf-8"))
            body = blob[4 + hlen:]
        except FileNotFoundError:
            return None
        except Exception:
            # Corrupt entry: evict and treat as a miss.
            try:
                path.unlink()
            except OSError:
                pass
            return None
        return FetchedPage(
            request_url=header["request_url"],
            final_url=header["final_url"],
            status=header["status"],
            content_type=header["content_type"],
            body=body,
            fetched_at=header["fetched_at"],
            from_cache=True,
            truncated=header.get("truncated", False),
        )

    def store(self, page: FetchedPage, ts: str | None = None) -> None:
        key = self.key(page.request_url, ts)
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = json.dumps({
            "request_url": page.request_url,
            "final_url": page.final_url,
            "status": page.status,
            "content_type": page.content_type,
            "fetched_at": page.fetched_at,
            "truncated": page.truncated,
        }).encode("utf-8")
        blob = len(header).to_bytes(4, "big") + header + page.body
        tmp = path.with_name(f".{key}.{os.getpid()}.{threading.get_ident()}.tmp")
        tmp.write_bytes(blob)
        os.replace(tmp, path)


class Fetcher:
    """Shared, thread-safe HTTP fetcher.

    Per-host politeness is enforced with an internal per-host clock table:
    request start times to one host are spaced >= policy.per_host_min_delay.
    """

    def __init__(self, policy: FetchPolicy | None = None,
                 cache_dir: str | Path | None = None,
                 renderer=None,
                 session: requests.Session | None = None):
        self.policy = policy or FetchPolicy()
        self.cache = PageCache(cache_dir) if cache_dir else None
        self.renderer = renderer  # optional callable(url, policy) -> FetchedPage
        self.session = session or requests.Session()
        self._host_lock = threading.Lock()
        self._next_allowed: dict[str, float] = {}
        self._robots_lock = threading.Lock()
        self._robots: dict[str, urllib.robotparser.RobotFileParser | None] = {}

    # --- politeness ---

    def _wait_for_host(self, host: str) -> None:
        delay = self.policy.per_host_min_delay
        if delay <= 0:
            return
        while True:
            with self._host_lock:
                now = time.monotonic()
                allowed = self._next_allowed.get(host, 0.0)
                if now >= allowed:
                    self._next_allowed[host] = now + delay
                    return
                wait = allowed - now
            time.sleep(wait)

    # --- robots ---

    def _robots_for(self, url: str) -> urllib.robotparser.RobotFileParser | None:
        p = urlparse(url)
        base = f"{p.scheme}://{p.netloc}"
        with self._robots_lock:
            if base in self._robots:
                return self._robots[base]
        try:
            page = self._raw_fetch(f"{base}/robots.txt", check_robots=False)
            parser = urllib.robotparser.RobotFileParser()
            if page.status == 200:
                parser.parse(page.body.decode("utf-8", errors="replace").splitlines())
            else:
                parser = None  # absent or denied robots: allow everything
        except FetchError:
            parser = None  # network failure on robots.txt is non-fatal
        with self._robots_lock:
            self._robots[base] = parser
        return parser

    def _check_robots(self, url: str) -> None:
        parser = self._robots_for(url)
        if parser is not None and not parser.can_fetch(self.policy.user_agent, url):
            raise RobotsDenied(url)

    # --- core fetch ---

    def _raw_fetch(self, url: str, check_robots: bool) -> FetchedPage:
        if self.renderer is not None:
            return self.renderer(url, self.policy)
        policy = self.policy
        if check_robots and policy.respect_robots:
            self._check_robots(url)
        current = url
        for _hop in range(policy.max_redirects + 1):
            self._wait_for_host(urlparse(current).netloc.lower())
            try:
                resp = self.session.get(
                    current,
                    timeout=policy.timeout,
                    allow_redirects=False,
                    stream=True,
                    headers={"User-Agent": policy.user_agent},
                )
            except requests.Timeout as e:
                raise FetchTimeout(str(e)) from e
            except requests.RequestException as e:
                raise FetchTransport(str(e)) from e
            try:
                if resp.is_redirect or resp.is_permanent_redirect:
                    location = resp.headers.get("Location")
                    if not location:
                        raise FetchTransport(f"redirect without Location from {current}")
                    current = requests.compat.urljoin(current, location)
                    continue
                body, truncated = self._read_body(resp)
            except requests.Timeout as e:
                raise FetchTimeout(str(e)) from e
            except requests.RequestException as e:
                raise FetchTransport(str(e)) from e
            finally:
                resp.close()
            return FetchedPage(
                request_url=url,
                final_url=current,
                status=resp.status_code,
                content_type=resp.headers.get("Content-Type", ""),
                body=body,
                fetched_at=_utcnow(),
                truncated=truncated,
            )
        raise TooManyRedirects(url)

    def _read_body(self, resp) -> tuple[bytes, bool]:
        limit = self.policy.max_body_bytes
        chunks = []
        read = 0
        for chunk in resp.iter_content(chunk_size=65536):
            if not chunk:
                continue
            take = min(len(chunk), limit - read)
            chunks.append(chunk[:take])
            read += take
            if read >= limit:
                return b"".join(chunks), True
        return b"".join(chunks), False

    def fetch(self, url: str) -> FetchedPage:
        """Fetch a live URL, honoring robots.txt, politeness, and the cache."""
        p = urlparse(url)
        if p.scheme not in ("http", "https") or not p.netloc:
            raise ValueError(f"not an absolute http(s) url: {url!r}")
        if self.cache is not None:
            hit = self.cache.lookup(url)
            if hit is not None:
                return hit
        page = self._raw_fetch(url, check_robots=True)
        if self.cache is not None and page.status == 200:
            self.cache.store(page)
        return page

    def fetch_archived(self, url: str, ts: str, archive_base: str) -> FetchedPage:
        """Fetch the raw archived capture via ``{base}/web/{ts}id_/{url}``.

        The ``id_`` flag requests unmodified content. robots.txt is not
        consulted: archives are already public captures.
        """
        if not _TS_RE.match(ts or ""):
            raise ValueError(f"malformed 14-digit timestamp: {ts!r}")
        if self.cache is not None:
            hit = self.cache.lookup(url, ts)
            if hit is not None:
                return hit
        snapshot_url = f"{archive_base.rstrip('/')}/web/{ts}id_/{url}"
        page = self._raw_fetch(snapshot_url, check_robots=False)
        if page.status == 404:
            raise SnapshotMissing(f"{url} @ {ts}")
        # Report the original URL; snapshot plumbing stays internal.
        page = FetchedPage(
            request_url=url,
            final_url=page.final_url,
            status=page.status,
            content_type=page.content_type,
            body=page.body,
            fetched_at=page.fetched_at,
            truncated=page.truncated,
        )
        if self.cache is not None and page.status == 200:
            self.cache.store(page, ts)
        return page
