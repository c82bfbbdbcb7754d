#!/usr/bin/env python3
"""Generate the two synthetic site-level baselines and run the
out-of-distribution evaluation between them.

Each dataset holds 30 LLM-dominant and 30 human sites; page scores are drawn
from band-targeted texts scored with the deterministic stub scorer, with a
20% fraction of pages crossing into the opposite band to mimic page-level
detector overlap. Feature rows land as JSONL next to a trained model, in a
format `detect train` / `detect eval` read directly.
"""
import argparse
import json
import random
from pathlib import Path

from sitedetect.classifier import (
    LabeledDataset,
    TrainConfig,
    build_site_features,
    evaluate_ood,
    save_model,
    train,
)
from sitedetect.scoring import stub_score

VOCAB = [
    "measurement", "network", "archive", "window", "signal", "content",
    "history", "pattern", "service", "account", "quality", "balance",
    "morning", "journey", "station", "process", "feature", "village",
]

BANDS = {
    "alpha": {"llm": (0.55, 0.85), "human": (1.00, 1.30)},
    "beta": {"llm": (0.58, 0.88), "human": (0.98, 1.28)},
}


def banded_text(rng, lo, hi):
    while True:
        text = " ".join(rng.choice(VOCAB) for _ in range(25))
        text += f" tag{rng.randrange(1 << 30)}"
        if lo <= stub_score(text) <= hi:
            return text


def make_dataset(name, seed, n_sites=30, n_pages=15, overlap=0.2):
    rng = random.Random(seed)
    bands = BANDS[name]
    rows = []
    for label in ("llm", "human"):
        main = bands[label]
        other = bands["human" if label == "llm" else "llm"]
        n_cross = round(n_pages * overlap)
        for i in range(n_sites):
            texts = [banded_text(rng, *main) for _ in range(n_pages - n_cross)]
            texts += [banded_text(rng, *other) for _ in range(n_cross)]
            rng.shuffle(texts)
            scores = [stub_score(t) for t in texts]
            f = build_site_features(f"{name}-{label}-{i}", scores, "stub")
            rows.append((f, label))
    return rows


def write_rows(rows, path):
    with open(path, "w", encoding="utf-8") as fh:
        for f, label in rows:
            fh.write(json.dumps({
                "site_id": f.site_id, "deciles": f.deciles,
                "n_pages": f.n_pages, "scorer_id": f.scorer_id, "label": label,
            }) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="baselines", help="output directory")
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    datasets = {}
    for i, name in enumerate(BANDS):
        rows = make_dataset(name, args.seed + i)
        write_rows(rows, out / f"{name}.jsonl")
        datasets[name] = LabeledDataset(
            name, [f for f, _ in rows], [l for _, l in rows])
        print(f"wrote {out / (name + '.jsonl')} ({len(rows)} sites)")

    alpha, beta = datasets["alpha"], datasets["beta"]
    model = train(alpha.features, alpha.labels, TrainConfig())
    save_model(model, out / "model.json")
    print(f"wrote {out / 'model.json'}")

    for src, dst in ((alpha, beta), (beta, alpha)):
        metrics = evaluate_ood(src, dst)
        print(f"{src.dataset_id} -> {dst.dataset_id}: "
              f"accuracy={metrics.accuracy:.3f} fpr={metrics.fpr:.3f} "
              f"fnr={metrics.fnr:.3f}")


if __name__ == "__main__":
    main()
