"""Synthetic corpora for tests: band-targeted stub-scored texts, prose pages
that pass the strict page filter, and fixture websites served locally."""
import random

from sitedetect.classifier import build_site_features
from sitedetect.scoring import stub_score

VOCAB = [
    "measurement", "network", "archive", "window", "signal", "content",
    "history", "pattern", "service", "account", "quality", "balance",
    "morning", "journey", "station", "process", "feature", "village",
    "traffic", "library", "article", "context", "message", "council",
    "project", "science", "methods", "results", "reading", "writing",
]


def random_words(rng, n):
    return " ".join(rng.choice(VOCAB) for _ in range(n))


def banded_text(rng, lo, hi, words=25, max_tries=10000):
    """Rejection-sample a text whose stub score lands in [lo, hi]."""
    for _ in range(max_tries):
        text = random_words(rng, words) + f" tag{rng.randrange(1 << 30)}"
        if lo <= stub_score(text) <= hi:
            return text
    raise RuntimeError(f"could not hit band [{lo}, {hi}]")


def banded_site_texts(rng, main_band, other_band, n_pages=15, overlap_fraction=0.2):
    """Texts for one site: most pages in the main band, the rest crossing
    into the other band (mimicking page-level detector overlap)."""
    n_cross = round(n_pages * overlap_fraction)
    texts = [banded_text(rng, *main_band) for _ in range(n_pages - n_cross)]
    texts += [banded_text(rng, *other_band) for _ in range(n_cross)]
    rng.shuffle(texts)
    return texts


def make_banded_dataset(seed, llm_band, human_band, n_sites_per_class=30,
                        n_pages=15, overlap_fraction=0.2, prefix="site"):
    """(features, labels, page_scores_by_label) for one synthetic baseline."""
    rng = random.Random(seed)
    features, labels = [], []
    page_scores = {"llm": [], "human": []}
    for label, main, other in (("llm", llm_band, human_band),
                               ("human", human_band, llm_band)):
        for i in range(n_sites_per_class):
            texts = banded_site_texts(rng, main, other, n_pages, overlap_fraction)
            scores = [stub_score(t) for t in texts]
            page_scores[label].extend(scores)
            features.append(build_site_features(f"{prefix}-{label}-{i}", scores, "stub"))
            labels.append(label)
    return features, labels, page_scores


LLM_BAND = (0.55, 0.85)
HUMAN_BAND = (1.00, 1.30)
LLM_BAND_ALT = (0.58, 0.88)
HUMAN_BAND_ALT = (0.98, 1.28)


def prose_page(rng, n_words=240):
    """A unique prose-like page body that passes every filter rule."""
    sentences = []
    used = 0
    while used < n_words:
        length = rng.randint(8, 14)
        words = [rng.choice(VOCAB) for _ in range(length)]
        words.append(f"note{rng.randrange(1 << 30)}")
        sentences.append(" ".join(words).capitalize() + ".")
        used += length + 1
    return " ".join(sentences)


def prose_site_html(rng, n_pages=30):
    """{path: html bytes} plus a sitemap, for serving as a fixture site."""
    pages = {}
    for i in range(n_pages):
        body = prose_page(rng)
        html = (
            "<html><head><title>Post {i}</title></head><body>"
            "<nav><a href='/'>home</a></nav>"
            "<article><h1>Post {i}</h1><p>{body}</p></article>"
            "<footer>footer text</footer></body></html>"
        ).format(i=i, body=body)
        pages[f"/post-{i}.html"] = html.encode("utf-8")
    return pages


def mount_prose_site(server, seed, n_pages=30):
    """Serve a clean prose fixture site (sitemap + pages) on a LocalServer."""
    rng = random.Random(seed)
    pages = prose_site_html(rng, n_pages)
    for path, html in pages.items():
        server.add(path, html)
    server.add("/sitemap.xml", sitemap_xml(server.url, sorted(pages)),
               headers={"Content-Type": "application/xml"})
    return sorted(pages)


def mount_linkfarm_site(server, seed, n_pages=10):
    """Pages whose prose is entirely link text: long enough to dodge the
    short-text rule, rejected as link_heavy."""
    rng = random.Random(seed)
    paths = []
    for i in range(n_pages):
        links = "".join(
            f"<a href='/x{j}'>{random_words(rng, 8)} item{i}x{j}</a> "
            for j in range(30)
        )
        html = f"<html><body><div>{links}</div></body></html>"
        path = f"/links-{i}.html"
        server.add(path, html.encode("utf-8"))
        paths.append(path)
    server.add("/sitemap.xml", sitemap_xml(server.url, paths),
               headers={"Content-Type": "application/xml"})
    return paths


def run_config_dict(model_path=None, target_accepted=15, min_pages=15):
    """Manifest config for local fixture runs: stub scorer, no politeness
    delay, robots ignored."""
    return {
        "scorer_mode": "stub",
        "model_path": str(model_path) if model_path else None,
        "min_pages": min_pages,
        "sampling": {"target_accepted": target_accepted, "seed": 1234},
        "fetch": {"per_host_min_delay": 0.0, "respect_robots": False, "timeout": 10.0},
    }


def manifest_doc(run_id, hosts, config, labels=None, ranks=None):
    sites = []
    for i, host in enumerate(hosts):
        entry = {"site_id": f"site-{i}", "host": host,
                 "label": (labels or {}).get(i, "unknown")}
        if ranks and i in ranks:
            entry["search_rank"] = ranks[i]
        sites.append(entry)
    return {"run_id": run_id, "sites": sites, "config": config}


def sitemap_xml(base_url, paths):
    locs = "".join(f"<url><loc>{base_url}{p}</loc></url>" for p in paths)
    return (
        '<?xml version="1.0" encoding="UTF-8"?>'
        '<urlset xmlns="http://www.sitemaps.org/schemas/sitemap/0.9">'
        f"{locs}</urlset>"
    ).encode("utf-8")
