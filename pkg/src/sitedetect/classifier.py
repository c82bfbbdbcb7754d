"""Site-level classification: decile feature vectors and a linear SVM.

Each site is summarized by the 9 deciles (10th-90th percentiles) of its page
scores. A linear SVM over standardized deciles separates LLM-dominant sites
from human ones. Training is deterministic full-batch subgradient descent on
the L2-regularized hinge loss, so identical inputs give identical models.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DegenerateTraining,
    EmptyScores,
    InvalidFeature,
    LeakageError,
    ModelFormatError,
)

N_DECILES = 9
DEFAULT_MIN_PAGES = 15

# label encoding for training: human = +1, llm = -1
_LABEL_Y = {"human": 1.0, "llm": -1.0}


@dataclass
class SiteFeatures:
    site_id: str
    deciles: list[float]  # 10th..90th percentiles, ascending
    n_pages: int
    scorer_id: str

    def __post_init__(self):
        if len(self.deciles) != N_DECILES:
            raise ValueError(f"expected {N_DECILES} deciles, got {len(self.deciles)}")
        if any(b < a for a, b in zip(self.deciles, self.deciles[1:])):
            raise ValueError("deciles must be non-decreasing")


@dataclass
class LinearModel:
    weights: list[float]
    bias: float
    feature_means: list[float]
    feature_stds: list[float]
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.weights) != N_DECILES or len(self.feature_means) != N_DECILES \
                or len(self.feature_stds) != N_DECILES:
            raise ValueError(f"model vectors must have {N_DECILES} entries")
        if any(s <= 0 for s in self.feature_stds):
            raise ValueError("feature stds must all be > 0")
        if any(not math.isfinite(w) for w in self.weights) or not math.isfinite(self.bias):
            raise ValueError("weights and bias must be finite")


@dataclass
class SiteVerdict:
    site_id: str
    label: str  # llm | human
    margin: float  # negative => llm
    features: SiteFeatures

    def __post_init__(self):
        if (self.label == "llm") != (self.margin < 0):
            raise ValueError("label llm iff margin < 0")


@dataclass
class TrainConfig:
    C: float = 1.0
    epochs: int = 5000
    lr0: float = 0.1
    lr_decay: float = 0.01  # eta_t = lr0 / (1 + lr_decay * t)
    standardize: bool = True
    seed: int = 0


def compute_deciles(scores: list[float]) -> list[float]:
    """10th..90th percentiles via linear interpolation of order statistics.

    For quantile q over n sorted scores s: h = (n-1)*q, result
    s[floor(h)] + (h - floor(h)) * (s[floor(h)+1] - s[floor(h)]).
    """
    if not scores:
        raise EmptyScores("cannot compute deciles of an empty score list")
    s = sorted(scores)
    n = len(s)
    out = []
    for tenth in range(1, 10):
        h = (n - 1) * tenth / 10.0
        lo = math.floor(h)
        frac = h - lo
        if lo + 1 < n:
            out.append(s[lo] + frac * (s[lo + 1] - s[lo]))
        else:
            out.append(s[lo])
    return out


def build_site_features(site_id: str, scores: list[float], scorer_id: str) -> SiteFeatures:
    return SiteFeatures(
        site_id=site_id,
        deciles=compute_deciles(scores),
        n_pages=len(scores),
        scorer_id=scorer_id,
    )


def standardize(f: SiteFeatures, model: LinearModel) -> list[float]:
    return [
        (d - m) / s
        for d, m, s in zip(f.deciles, model.feature_means, model.feature_stds)
    ]


def _feature_stats(features: list[SiteFeatures], enabled: bool) -> tuple[list[float], list[float]]:
    if not enabled:
        return [0.0] * N_DECILES, [1.0] * N_DECILES
    n = len(features)
    means = [sum(f.deciles[j] for f in features) / n for j in range(N_DECILES)]
    stds = []
    for j in range(N_DECILES):
        var = sum((f.deciles[j] - means[j]) ** 2 for f in features) / n
        stds.append(max(math.sqrt(var), 1e-9))  # floor guards constant features
    return means, stds


def train(features: list[SiteFeatures], labels: list[str],
          config: TrainConfig | None = None) -> LinearModel:
    """Fit the linear SVM by deterministic full-batch subgradient descent.

    Objective: (1/2)||w||^2 + C * sum_i max(0, 1 - y_i (w.z_i + b)) over
    standardized features z, with learning rate eta_t = lr0 / (1 + decay*t).
    """
    config = config or TrainConfig()
    if len(features) != len(labels):
        raise ValueError("features and labels must align")
    if not features:
        raise DegenerateTraining("empty training set")
    try:
        ys = [_LABEL_Y[lab] for lab in labels]
    except KeyError as e:
        raise ValueError(f"unknown label {e}") from e
    if len(set(ys)) < 2:
        raise DegenerateTraining("training set contains a single class")
    for f in features:
        if any(not math.isfinite(d) for d in f.deciles):
            raise InvalidFeature(f.site_id)

    means, stds = _feature_stats(features, config.standardize)
    zs = [
        [(d - m) / s for d, m, s in zip(f.deciles, means, stds)]
        for f in features
    ]

    w = [0.0] * N_DECILES
    b = 0.0
    for t in range(config.epochs):
        eta = config.lr0 / (1.0 + config.lr_decay * t)
        gw = list(w)  # gradient of (1/2)||w||^2
        gb = 0.0
        for z, y in zip(zs, ys):
            if y * (sum(wj * zj for wj, zj in zip(w, z)) + b) < 1.0:
                for j in range(N_DECILES):
                    gw[j] -= config.C * y * z[j]
                gb -= config.C * y
        for j in range(N_DECILES):
            w[j] -= eta * gw[j]
        b -= eta * gb

    return LinearModel(
        weights=w,
        bias=b,
        feature_means=means,
        feature_stds=stds,
        training_meta={
            "C": config.C,
            "epochs": config.epochs,
            "lr0": config.lr0,
            "lr_decay": config.lr_decay,
            "standardize": config.standardize,
            "seed": config.seed,
            "n_train": len(features),
            "scorer_id": features[0].scorer_id,
        },
    )


def predict(model: LinearModel, f: SiteFeatures) -> SiteVerdict:
    """Margin = w.z + b; negative margin means llm. Exactly 0 resolves to
    human (false LLM accusations are the costly error)."""
    z = standardize(f, model)
    margin = sum(wj * zj for wj, zj in zip(model.weights, z)) + model.bias
    label = "llm" if margin < 0 else "human"
    return SiteVerdict(site_id=f.site_id, label=label, margin=margin, features=f)


@dataclass
class LabeledDataset:
    dataset_id: str
    features: list[SiteFeatures]
    labels: list[str]


@dataclass
class OodMetrics:
    accuracy: float
    fpr: float  # human sites misclassified as llm
    fnr: float  # llm sites missed
    confusion: dict[str, int]  # tp/fp/tn/fn with llm as the positive class
    margins: dict[str, float]


def evaluate_ood(train_set: LabeledDataset, test_set: LabeledDataset,
                 config: TrainConfig | None = None,
                 check_leakage: bool = True) -> OodMetrics:
    """Train on one dataset (standardization included), test on the other."""
    if check_leakage:
        overlap = {f.site_id for f in train_set.features} & {f.site_id for f in test_set.features}
        if overlap:
            raise LeakageError(f"site ids in both sets: {sorted(overlap)[:5]}")
    model = train(train_set.features, train_set.labels, config)
    tp = fp = tn = fn = 0
    margins = {}
    for f, truth in zip(test_set.features, test_set.labels):
        verdict = predict(model, f)
        margins[f.site_id] = verdict.margin
        if truth == "llm":
            if verdict.label == "llm":
                tp += 1
            else:
                fn += 1
        else:
            if verdict.label == "llm":
                fp += 1
            else:
                tn += 1
    total = tp + fp + tn + fn
    return OodMetrics(
        accuracy=(tp + tn) / total if total else 0.0,
        fpr=fp / (fp + tn) if (fp + tn) else 0.0,
        fnr=fn / (fn + tp) if (fn + tp) else 0.0,
        confusion={"tp": tp, "fp": fp, "tn": tn, "fn": fn},
        margins=margins,
    )


# --- model persistence ---

def save_model(model: LinearModel, path: str | Path) -> None:
    """JSON round trip preserves every float exactly (repr serialization)."""
    doc = {
        "format": "sitedetect-linear-model/1",
        "weights": model.weights,
        "bias": model.bias,
        "feature_means": model.feature_means,
        "feature_stds": model.feature_stds,
        "training_meta": model.training_meta,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LinearModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ModelFormatError(str(e)) from e
    if not isinstance(doc, dict) or doc.get("format") != "sitedetect-linear-model/1":
        raise ModelFormatError("unrecognized model file format")
    try:
        return LinearModel(
            weights=[float(x) for x in doc["weights"]],
            bias=float(doc["bias"]),
            feature_means=[float(x) for x in doc["feature_means"]],
            feature_stds=[float(x) for x in doc["feature_stds"]],
            training_meta=doc.get("training_meta", {}),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(str(e)) from e
