"""Study reporting: prevalence percentages, cohort breakdowns, the
rank-significance test, and empirical-CDF exports for plotting."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

from .errors import EmptyGroup

BORDERLINE_MARGIN_BAND = 0.25  # |margin| below this flags an in-between site


def _pct(count: int, total: int) -> float:
    return round(100.0 * count / total, 2) if total else 0.0


@dataclass
class CohortStats:
    tag: str
    total: int
    llm_count: int
    llm_pct: float


@dataclass
class PrevalenceReport:
    total_classified: int
    llm_count: int
    llm_pct: float
    cohorts: list[CohortStats]
    pages_total: int
    borderline_count: int = 0

    def to_dict(self) -> dict:
        return {
            "total_classified": self.total_classified,
            "llm_count": self.llm_count,
            "llm_pct": self.llm_pct,
            "pages_total": self.pages_total,
            "borderline_count": self.borderline_count,
            "cohorts": [
                {"tag": c.tag, "total": c.total, "llm_count": c.llm_count, "llm_pct": c.llm_pct}
                for c in self.cohorts
            ],
        }


def prevalence_report(results, borderline_band: float = BORDERLINE_MARGIN_BAND) -> PrevalenceReport:
    """Aggregate SiteResults into prevalence statistics.

    Only status == "classified" sites count; percentages round half-even to
    two decimals. Cohorts come from each site's cohort_tags.
    """
    classified = [r for r in results if r.status == "classified"]
    llm = [r for r in classified if r.verdict is not None and r.verdict.label == "llm"]
    borderline = [
        r for r in classified
        if r.verdict is not None and abs(r.verdict.margin) < borderline_band
    ]

    cohort_totals: dict[str, int] = {}
    cohort_llm: dict[str, int] = {}
    for r in classified:
        for tag in r.cohort_tags:
            cohort_totals[tag] = cohort_totals.get(tag, 0) + 1
            if r.verdict is not None and r.verdict.label == "llm":
                cohort_llm[tag] = cohort_llm.get(tag, 0) + 1
    cohorts = [
        CohortStats(tag=tag, total=total, llm_count=cohort_llm.get(tag, 0),
                    llm_pct=_pct(cohort_llm.get(tag, 0), total))
        for tag, total in sorted(cohort_totals.items())
    ]

    return PrevalenceReport(
        total_classified=len(classified),
        llm_count=len(llm),
        llm_pct=_pct(len(llm), len(classified)),
        cohorts=cohorts,
        pages_total=sum(r.pages_accepted for r in classified),
        borderline_count=len(borderline),
    )


# --- Mann-Whitney U rank test ---

def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0  # average of ranks i+1..j+1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _u_statistic(ranks: list[float], n1: int, n2: int) -> float:
    # U for the first group: number of (group1, group2) pairs where the
    # group-1 value is larger, ties counted half
    r1 = sum(ranks[:n1])
    return r1 - n1 * (n1 + 1) / 2.0


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


EXACT_ENUMERATION_LIMIT = 20_000  # max assignments to enumerate exactly


def rank_significance_test(llm_ranks: list[float], human_ranks: list[float]):
    """Mann-Whitney U for the two rank groups; returns (U, z, p_two_sided).

    U is reported for the first group, with midranks for ties. Small samples
    (up to EXACT_ENUMERATION_LIMIT group assignments) get an exact permutation
    p-value; larger samples use the normal approximation with tie correction
    and continuity correction.
    """
    if not llm_ranks or not human_ranks:
        raise EmptyGroup("both rank groups must be non-empty")
    n1, n2 = len(llm_ranks), len(human_ranks)
    pooled = [float(v) for v in llm_ranks] + [float(v) for v in human_ranks]
    ranks = _midranks(pooled)
    u = _u_statistic(ranks, n1, n2)
    mu = n1 * n2 / 2.0

    n = n1 + n2
    tie_sum = 0.0
    seen: dict[float, int] = {}
    for r in ranks:
        seen[r] = seen.get(r, 0) + 1
    for count in seen.values():
        tie_sum += count ** 3 - count
    var = n1 * n2 / 12.0 * ((n + 1) - tie_sum / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        return u, 0.0, 1.0
    sd = math.sqrt(var)
    dev = u - mu
    z = 0.0 if dev == 0 else (dev - math.copysign(0.5, dev)) / sd

    if math.comb(n, n1) <= EXACT_ENUMERATION_LIMIT:
        p = _exact_p(ranks, n1, n2, abs(dev))
    else:
        p = min(1.0, 2.0 * _normal_sf(abs(z)))
    return u, z, p


def _exact_p(ranks: list[float], n1: int, n2: int, observed_dev: float) -> float:
    """Two-sided permutation p: share of group assignments at least as extreme."""
    mu = n1 * n2 / 2.0
    offset = n1 * (n1 + 1) / 2.0
    total = 0
    extreme = 0
    for combo in combinations(range(n1 + n2), n1):
        u = sum(ranks[i] for i in combo) - offset
        total += 1
        if abs(u - mu) >= observed_dev - 1e-12:
            extreme += 1
    return extreme / total


# --- empirical CDFs ---

def empirical_cdf(scores: list[float]) -> list[tuple[float, float]]:
    """Sorted (score, k/n) rows; the last cumulative fraction is exactly 1."""
    n = len(scores)
    return [(s, (k + 1) / n) for k, s in enumerate(sorted(scores))]


def cdf_export(groups: dict[str, list[float]], out_dir: str | Path,
               prefix: str = "cdf") -> list[Path]:
    """Write one `{prefix}_{group}.csv` of (score, cumulative_fraction) per group."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, scores in sorted(groups.items()):
        safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)
        path = out_dir / f"{prefix}_{safe}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["score", "cumulative_fraction"])
            for score, frac in empirical_cdf(scores):
                writer.writerow([repr(score), repr(frac)])
        written.append(path)
    return written
