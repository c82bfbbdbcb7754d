"""`detect` command line interface.

Subcommands: run, train, eval, report, ranktest, cdf.
Exit codes: 0 success, 2 config error, 3 partial failures present.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import classifier, reporting, runner
from .classifier import LabeledDataset, SiteFeatures, TrainConfig, evaluate_ood
from .errors import ConfigError, SiteDetectError
from .runconfig import load_manifest

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def _read_feature_rows(path: Path, labels_path: Path | None = None):
    labels_map = {}
    if labels_path is not None:
        labels_map = json.loads(labels_path.read_text(encoding="utf-8"))
    features, labels = [], []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        f = SiteFeatures(
            site_id=row["site_id"],
            deciles=[float(x) for x in row["deciles"]],
            n_pages=int(row["n_pages"]),
            scorer_id=row.get("scorer_id", ""),
        )
        label = labels_map.get(row["site_id"], row.get("label"))
        if label is None:
            raise ConfigError(f"no label for site {row['site_id']}")
        features.append(f)
        labels.append(label)
    return features, labels


def cmd_run(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.stub_scorer:
        manifest.config.scorer_mode = "stub"
    if args.model:
        manifest.config.model_path = args.model
    parallelism = args.parallelism or manifest.config.parallelism
    results = runner.run_batch(manifest, args.out, parallelism=parallelism)
    classified = sum(1 for r in results if r.status == "classified")
    print(f"run {manifest.run_id}: {classified}/{len(results)} sites classified")
    for r in results:
        if r.status != "classified":
            print(f"  {r.site_id}: {r.status}" + (f" ({r.error})" if r.error else ""))
    return EXIT_OK if classified == len(results) else EXIT_PARTIAL


def cmd_train(args) -> int:
    features, labels = _read_feature_rows(
        Path(args.features), Path(args.labels) if args.labels else None)
    model = classifier.train(features, labels, TrainConfig())
    classifier.save_model(model, args.model)
    correct = sum(
        1 for f, lab in zip(features, labels)
        if classifier.predict(model, f).label == lab
    )
    print(f"trained on {len(features)} sites; training accuracy {correct}/{len(features)}")
    return EXIT_OK


def cmd_eval(args) -> int:
    train_f, train_l = _read_feature_rows(Path(args.train))
    test_f, test_l = _read_feature_rows(Path(args.test))
    metrics = evaluate_ood(
        LabeledDataset(Path(args.train).stem, train_f, train_l),
        LabeledDataset(Path(args.test).stem, test_f, test_l),
    )
    print(json.dumps({
        "accuracy": metrics.accuracy,
        "fpr": metrics.fpr,
        "fnr": metrics.fnr,
        "confusion": metrics.confusion,
        "margins": metrics.margins,
    }, indent=2))
    return EXIT_OK


def cmd_report(args) -> int:
    results = list(runner.load_results(args.run).values())
    if not results:
        raise ConfigError(f"no results.jsonl under {args.run}")
    report = reporting.prevalence_report(results)
    doc = report.to_dict()
    if not args.cohorts:
        doc.pop("cohorts")
    out_path = Path(args.run) / "report.json"
    out_path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_ranktest(args) -> int:
    results = list(runner.load_results(args.run).values())
    llm_ranks, human_ranks = [], []
    for r in results:
        if r.status != "classified" or r.search_rank is None or r.verdict is None:
            continue
        (llm_ranks if r.verdict.label == "llm" else human_ranks).append(r.search_rank)
    if not llm_ranks or not human_ranks:
        raise ConfigError("need classified sites with search ranks in both groups")
    u, z, p = reporting.rank_significance_test(llm_ranks, human_ranks)
    print(json.dumps({
        "n_llm": len(llm_ranks), "n_human": len(human_ranks),
        "U": u, "z": z, "p_two_sided": p,
    }, indent=2))
    return EXIT_OK


def cmd_cdf(args) -> int:
    sites_path = Path(args.run) / "sites.jsonl"
    if not sites_path.exists():
        raise ConfigError(f"no sites.jsonl under {args.run}")
    groups: dict[str, list[float]] = {}
    for line in sites_path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        key = row["site_id"] if args.group_by == "site" else (row.get("label") or "unlabeled")
        groups.setdefault(key, []).extend(p["score"] for p in row.get("page_scores", []))
    written = reporting.cdf_export(groups, args.run)
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detect",
        description="Batch pipeline deciding, per website, whether its content is LLM-dominant.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="process a manifest of sites into verdicts")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stub-scorer", action="store_true")
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--model", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("train", help="train the site classifier on feature rows")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", default=None, help="JSON site_id -> label map")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="out-of-distribution train/test evaluation")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="prevalence report over a finished run")
    p.add_argument("--run", required=True)
    p.add_argument("--cohorts", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("ranktest", help="rank-significance test over a finished run")
    p.add_argument("--run", required=True)
    p.set_defaults(func=cmd_ranktest)

    p = sub.add_parser("cdf", help="export empirical score CDFs as CSV")
    p.add_argument("--run", required=True)
    p.add_argument("--group-by", choices=["label", "site"], default="label")
    p.set_defaults(func=cmd_cdf)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SiteDetectError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
