"""Evaluation mathematics for scoring executed pipelines.

Classification metrics are computed from a binary confusion matrix;
multi-class tasks are scored one-vs-rest per label and macro-averaged
(unweighted mean over labels). Zero denominators never raise: the value is
reported as 0 with a degenerate flag so batch evaluation stays total.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import MetricInputError, MetricPreconditionError

DISTANCES = ("euclidean", "manhattan")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            count = getattr(self, name)
            if not isinstance(count, int) or count < 0:
                raise MetricInputError(f"{name} must be a nonnegative integer, got {count!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionMatrix":
        return ConfusionMatrix(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


@dataclass(frozen=True)
class MetricValue:
    value: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {"value": self.value, "degenerate": self.degenerate}


def _ratio(numerator: float, denominator: float) -> MetricValue:
    # zero denominator -> value 0, flagged, never a crash
    if denominator == 0:
        return MetricValue(0.0, degenerate=True)
    return MetricValue(numerator / denominator)


def confusion_counts(y_true: Sequence, y_pred: Sequence, positive) -> ConfusionMatrix:
    """Count TP/FP/FN/TN for one positive label."""
    if len(y_true) != len(y_pred):
        raise MetricInputError(
            f"y_true and y_pred lengths differ: {len(y_true)} vs {len(y_pred)}")
    if len(y_true) == 0:
        raise MetricInputError("need at least one sample")
    true_pos = np.asarray([label == positive for label in y_true])
    pred_pos = np.asarray([label == positive for label in y_pred])
    return ConfusionMatrix(
        tp=int(np.sum(true_pos & pred_pos)),
        fp=int(np.sum(~true_pos & pred_pos)),
        fn=int(np.sum(true_pos & ~pred_pos)),
        tn=int(np.sum(~true_pos & ~pred_pos)),
    )


def accuracy(cm: ConfusionMatrix) -> MetricValue:
    if cm.total == 0:
        raise MetricInputError("accuracy needs at least one evaluated sample")
    return _ratio(cm.tp + cm.tn, cm.total)


def precision(cm: ConfusionMatrix) -> MetricValue:
    return _ratio(cm.tp, cm.tp + cm.fp)


def recall(cm: ConfusionMatrix) -> MetricValue:
    return _ratio(cm.tp, cm.tp + cm.fn)


def f1(precision_value: float, recall_value: float) -> MetricValue:
    if not (0.0 <= precision_value <= 1.0 and 0.0 <= recall_value <= 1.0):
        raise MetricInputError("precision and recall must both lie in [0, 1]")
    return _ratio(2.0 * precision_value * recall_value,
                  precision_value + recall_value)


def macro_scores(y_true: Sequence, y_pred: Sequence, labels: Sequence) -> dict:
    """One-vs-rest P/R/F1 per label plus their unweighted means.

    A label absent from both vectors contributes degenerate zeros and is
    still averaged, so the macro mean is defined over exactly `labels`.
    """
    if len(labels) == 0:
        raise MetricInputError("labels must be nonempty")
    if len(set(labels)) != len(labels):
        raise MetricInputError("labels must be distinct")
    per_label = {}
    for label in labels:
        cm = confusion_counts(y_true, y_pred, positive=label)
        p = precision(cm)
        r = recall(cm)
        per_label[label] = {
            "precision": p.to_dict(),
            "recall": r.to_dict(),
            "f1": f1(p.value, r.value).to_dict(),
        }
    def mean_of(metric: str) -> float:
        return sum(per_label[label][metric]["value"] for label in labels) / len(labels)
    return {
        "per_label": per_label,
        "macro": {
            "precision": mean_of("precision"),
            "recall": mean_of("recall"),
            "f1": mean_of("f1"),
        },
    }


def mae(y_true: Sequence[float], y_pred: Sequence[float]) -> MetricValue:
    if len(y_true) != len(y_pred):
        raise MetricInputError(
            f"y_true and y_pred lengths differ: {len(y_true)} vs {len(y_pred)}")
    if len(y_true) == 0:
        raise MetricInputError("need at least one sample")
    a = np.asarray(y_true, dtype=float)
    b = np.asarray(y_pred, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise MetricInputError("values must be finite")
    return MetricValue(float(np.mean(np.abs(a - b))))


def _pairwise_distances(points: np.ndarray, distance: str) -> np.ndarray:
    diffs = points[:, None, :] - points[None, :, :]
    if distance == "euclidean":
        return np.sqrt(np.sum(diffs ** 2, axis=-1))
    if distance == "manhattan":
        return np.sum(np.abs(diffs), axis=-1)
    raise MetricInputError(f"distance must be one of {DISTANCES}, got {distance!r}")


def silhouette(points: Sequence[Sequence[float]], labels: Sequence,
               distance: str = "euclidean") -> MetricValue:
    """Mean silhouette coefficient s(i) = (b - a) / max(a, b).

    a(i) is the mean distance to the other members of i's cluster; b(i) is
    the smallest mean distance to any other cluster. Samples in singleton
    clusters score 0.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise MetricPreconditionError("need at least two points")
    if not np.all(np.isfinite(pts)):
        raise MetricInputError("coordinates must be finite")
    if len(labels) != pts.shape[0]:
        raise MetricInputError(
            f"points and labels lengths differ: {pts.shape[0]} vs {len(labels)}")
    labels = list(labels)
    clusters = sorted(set(labels), key=repr)
    if len(clusters) < 2:
        raise MetricPreconditionError("silhouette requires at least two clusters")

    dist = _pairwise_distances(pts, distance)
    members = {c: [i for i, lab in enumerate(labels) if lab == c] for c in clusters}
    scores = np.empty(pts.shape[0])
    for i, lab in enumerate(labels):
        own = members[lab]
        if len(own) == 1:
            scores[i] = 0.0
            continue
        others = [j for j in own if j != i]
        a = float(np.mean(dist[i, others]))
        b = min(float(np.mean(dist[i, members[c]])) for c in clusters if c != lab)
        scores[i] = 0.0 if max(a, b) == 0 else (b - a) / max(a, b)
    return MetricValue(float(np.mean(scores)))


def emit_report(results: dict, baseline: Optional[dict] = None) -> dict:
    """Side-by-side metric report: one row per (pipeline, metric).

    `results` maps pipeline name to {metric name: number}; `baseline`
    optionally supplies comparison values with the same shape. The output
    is deterministic: rows are sorted by pipeline then metric, and the
    rendered text table is stable byte-for-byte for equal inputs.
    """
    if not results:
        raise MetricInputError("results must be nonempty")
    baseline = baseline or {}
    rows = []
    for pipeline in sorted(results):
        metric_map = results[pipeline]
        for metric in sorted(metric_map):
            base = baseline.get(pipeline, {}).get(metric)
            rows.append({
                "pipeline": pipeline,
                "metric": metric,
                "value": metric_map[metric],
                "baseline": base,
            })
    return {"rows": rows, "text": _render_table(rows)}


def _format_number(value) -> str:
    if value is None:
        return "\u2014"
    if isinstance(value, float) and not value.is_integer():
        return f"{value:.4f}".rstrip("0").rstrip(".") if abs(value) < 1e6 else repr(value)
    return f"{value:g}" if isinstance(value, float) else str(value)


def _render_table(rows: list[dict]) -> str:
    headers = ("pipeline", "metric", "value", "baseline")
    cells = [[row["pipeline"], row["metric"],
              _format_number(row["value"]), _format_number(row["baseline"])]
             for row in rows]
    widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(headers)]
    def line(parts):
        return "  ".join(part.ljust(width) for part, width in zip(parts, widths)).rstrip()
    out = [line(headers), line(["-" * w for w in widths])]
    out.extend(line(c) for c in cells)
    return "\n".join(out) + "\n"


def read_prediction_csv(path: str | Path) -> tuple[list[str], list[str]]:
    """Read a classification/regression CSV with y_true and y_pred columns."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"y_true", "y_pred"} <= set(reader.fieldnames):
            raise MetricInputError(f"{path} must have header columns y_true, y_pred")
        y_true, y_pred = [], []
        for row in reader:
            y_true.append(row["y_true"])
            y_pred.append(row["y_pred"])
    if not y_true:
        raise MetricInputError(f"{path} contains no data rows")
    return y_true, y_pred


def read_clustering_csv(path: str | Path, label_column: str = "label"
                        ) -> tuple[list[list[float]], list[str]]:
    """Read a clustering CSV: numeric feature columns plus a label column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or label_column not in reader.fieldnames:
            raise MetricInputError(f"{path} must have a {label_column!r} column")
        feature_cols = [c for c in reader.fieldnames if c != label_column]
        if not feature_cols:
            raise MetricInputError(f"{path} needs at least one feature column")
        points, labels = [], []
        for row in reader:
            try:
                points.append([float(row[c]) for c in feature_cols])
            except ValueError as exc:
                raise MetricInputError(f"{path}: non-numeric feature value: {exc}") from exc
            labels.append(row[label_column])
    if not points:
        raise MetricInputError(f"{path} contains no data rows")
    return points, labels


def evaluate_classification(y_true: Sequence, y_pred: Sequence) -> dict:
    """Full classification scoring: macro P/R/F1 plus overall accuracy."""
    labels = sorted(set(y_true) | set(y_pred), key=repr)
    report = macro_scores(y_true, y_pred, labels)
    correct = sum(1 for t, p in zip(y_true, y_pred) if t == p)
    report["accuracy"] = correct / len(y_true)
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)
