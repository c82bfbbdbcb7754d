#!/usr/bin/env python3
"""Score a file of texts and print the per-text scores plus the 9-decile
feature vector a site built from them would get.

Input is either plain text (one document per line) or JSONL rows with a
"text" field. Scoring uses the deterministic stub by default; pass
--endpoint to use a running scoring service instead.
"""
import argparse
import json
import sys

from sitedetect.classifier import build_site_features
from sitedetect.scoring import HttpScorer, ScorerEndpoint, StubScorer, score_pages


def read_texts(path):
    texts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                texts.append(json.loads(line)["text"])
            else:
                texts.append(line)
    return texts


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("path", help="input file of texts")
    parser.add_argument("--endpoint", default=None,
                        help="scoring service base URL (default: stub scorer)")
    args = parser.parse_args()

    texts = read_texts(args.path)
    if not texts:
        print("no texts found", file=sys.stderr)
        return 1
    if args.endpoint:
        scorer = HttpScorer(ScorerEndpoint(base_url=args.endpoint))
    else:
        scorer = StubScorer()
    urls = [f"doc-{i}" for i in range(len(texts))]
    scores = score_pages(urls, texts, scorer)
    for p in scores:
        print(f"{p.url}\t{p.score:.6f}\t{p.token_count}")
    features = build_site_features("input", [p.score for p in scores],
                                   scores[0].scorer_id)
    print(json.dumps({"deciles": features.deciles, "n_pages": features.n_pages,
                      "scorer_id": features.scorer_id}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
