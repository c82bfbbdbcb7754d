"""Run configuration and manifests.

A manifest JSON names the sites to process and may override config values;
defaults are materialized into the run's config snapshot so every knob that
shaped a run is recorded with it. Config files are simple sectioned
key/value text ([filter], [sampling], ...) readable by configparser.
"""
from __future__ import annotations

import configparser
import dataclasses
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError
from .fetcher import FetchPolicy
from .pagefilter import FilterThresholds
from .sampler import SamplingConfig, SiteSpec
from .scoring import ScorerEndpoint

DEFAULT_ARCHIVE_BASE = "https://web.archive.org"


@dataclass
class RunConfig:
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    fetch: FetchPolicy = field(default_factory=FetchPolicy)
    filter: FilterThresholds = field(default_factory=FilterThresholds)
    scorer_mode: str = "http"  # http | stub
    scorer: ScorerEndpoint = field(default_factory=lambda: ScorerEndpoint(base_url="http://localhost:8400"))
    model_path: str | None = None
    min_pages: int = 15
    archive_base: str = DEFAULT_ARCHIVE_BASE
    cache_dir: str | None = None
    parallelism: int = 4

    def to_dict(self) -> dict:
        return {
            "sampling": dataclasses.asdict(self.sampling),
            "fetch": dataclasses.asdict(self.fetch),
            "filter": dataclasses.asdict(self.filter),
            "scorer_mode": self.scorer_mode,
            "scorer": dataclasses.asdict(self.scorer),
            "model_path": self.model_path,
            "min_pages": self.min_pages,
            "archive_base": self.archive_base,
            "cache_dir": self.cache_dir,
            "parallelism": self.parallelism,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        base = cls()
        try:
            return cls(
                sampling=_merge(SamplingConfig, doc.get("sampling")),
                fetch=_merge(FetchPolicy, doc.get("fetch")),
                filter=_merge(FilterThresholds, doc.get("filter")),
                scorer_mode=doc.get("scorer_mode", base.scorer_mode),
                scorer=_merge_instance(base.scorer, doc.get("scorer")),
                model_path=doc.get("model_path", base.model_path),
                min_pages=int(doc.get("min_pages", base.min_pages)),
                archive_base=doc.get("archive_base", base.archive_base),
                cache_dir=doc.get("cache_dir", base.cache_dir),
                parallelism=int(doc.get("parallelism", base.parallelism)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from e


def _merge(cls, overrides):
    return _merge_instance(cls(), overrides)


def _merge_instance(instance, overrides):
    if not overrides:
        return instance
    values = dataclasses.asdict(instance)
    known = set(values)
    for key, value in overrides.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r} for {type(instance).__name__}")
        values[key] = value
    return type(instance)(**values)


def load_config_file(path: str | Path) -> dict:
    """Read a sectioned key=value config file into a nested dict with
    numbers and booleans coerced."""
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as e:
        raise ConfigError(str(e)) from e
    out: dict = {}
    for section in parser.sections():
        out[section] = {k: _coerce(v) for k, v in parser.items(section)}
    return out


def _coerce(value: str):
    text = value.strip().strip('"')
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null", ""):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class RunManifest:
    run_id: str
    sites: list[SiteSpec]
    config: RunConfig
    search_ranks: dict[str, int] = field(default_factory=dict)
    created_at: str = ""

    def __post_init__(self):
        ids = [s.site_id for s in self.sites]
        if len(ids) != len(set(ids)):
            raise ConfigError("site_ids must be unique within a manifest")
        if not self.created_at:
            self.created_at = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "created_at": self.created_at,
            "config": self.config.to_dict(),
            "sites": [
                {
                    "site_id": s.site_id,
                    "host": s.host,
                    "label": s.label,
                    "cohort_tags": s.cohort_tags,
                    **({"search_rank": self.search_ranks[s.site_id]}
                       if s.site_id in self.search_ranks else {}),
                }
                for s in self.sites
            ],
        }


def load_manifest(path: str | Path) -> RunManifest:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read manifest: {e}") from e
    if not isinstance(doc, dict) or "run_id" not in doc or "sites" not in doc:
        raise ConfigError("manifest must be an object with run_id and sites")
    sites = []
    ranks = {}
    for entry in doc["sites"]:
        try:
            spec = SiteSpec(
                site_id=entry["site_id"],
                host=entry["host"],
                label=entry.get("label", "unknown"),
                cohort_tags=list(entry.get("cohort_tags", [])),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad site entry {entry!r}: {e}") from e
        sites.append(spec)
        if entry.get("search_rank") is not None:
            ranks[spec.site_id] = int(entry["search_rank"])
    config = RunConfig.from_dict(doc.get("config", {}))
    return RunManifest(
        run_id=doc["run_id"],
        sites=sites,
        config=config,
        search_ranks=ranks,
        created_at=doc.get("created_at", ""),
    )
