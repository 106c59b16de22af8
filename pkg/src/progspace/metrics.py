"""Accuracy, ROC/AUC and the cross-validated summary report."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

REPORT_CLASSES = ("Control", "Low", "Moderate", "High")


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} vs {len(y_pred)}")
    if not y_true:
        raise ValueError("accuracy of an empty prediction set")
    return sum(a == b for a, b in zip(y_true, y_pred)) / len(y_true)


def confusion_matrix(y_true, y_pred, classes) -> np.ndarray:
    """Rows are true classes, columns predicted, both in `classes` order."""
    idx = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        out[idx[t], idx[p]] += 1
    return out


def roc_curve(scores, y_binary) -> list[tuple[float, float]]:
    """(fpr, tpr) points, one per distinct score, thresholds descending.

    Tied scores move the curve diagonally in one step.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(y_binary).astype(bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    P = int(y.sum())
    N = len(y) - P
    if P == 0 or N == 0:
        raise ValueError("ROC curve needs both positive and negative samples")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    return [(0.0, 0.0)] + [(float(f) / N, float(t) / P) for f, t in zip(fp, tp)]


def auc(points) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two ROC points")
    x, y = pts[:, 0], pts[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def one_vs_rest_auc(proba, y_true, classes) -> dict:
    """AUC per class; `None` for a class absent from (or filling) y_true."""
    proba = np.asarray(proba, dtype=float)
    y_true = np.asarray(list(y_true), dtype=object)
    out = {}
    for j, c in enumerate(classes):
        pos = y_true == c
        if pos.all() or not pos.any():
            out[c] = None
        else:
            out[c] = auc(roc_curve(proba[:, j], pos))
    return out


@dataclass
class EvalReport:
    horizon: int
    accuracy_mean: float
    accuracy_std: float
    auc_mean: dict
    auc_std: dict
    confusion: np.ndarray | None = None
    fold_count: int = 0
    model: str = ""
    classes: tuple = REPORT_CLASSES
    fold_accuracies: list = field(default_factory=list)

    @property
    def label(self) -> str:
        return self.model or f"M{self.horizon}"

    def accuracy_text(self) -> str:
        return f"{self.accuracy_mean:.2f} ± {self.accuracy_std:.2f}"

    def auc_text(self, cls) -> str:
        m, s = self.auc_mean.get(cls), self.auc_std.get(cls)
        if m is None:
            return "NA"
        return f"{m:.2f} ± {s:.2f}"

    def row(self) -> list[str]:
        return [self.label, self.accuracy_text()] + [self.auc_text(c) for c in self.classes]


def cv_summary(fold_accuracies, fold_aucs, horizon: int, confusion=None, model: str = "",
               classes=REPORT_CLASSES) -> EvalReport:
    """Fold means with population standard deviations; accuracy in percent.

    A class whose AUC is undefined in some fold is averaged over the folds
    where it is defined.
    """
    acc = np.asarray(fold_accuracies, dtype=float)
    if len(acc) < 2:
        raise ValueError("a cross-validated summary needs at least two folds")
    means, stds = {}, {}
    for c in classes:
        vals = [f[c] for f in fold_aucs if f.get(c) is not None]
        if vals:
            means[c] = float(np.mean(vals))
            stds[c] = float(np.std(vals))
        else:
            means[c] = stds[c] = None
    return EvalReport(horizon, float(np.mean(acc) * 100), float(np.std(acc) * 100), means, stds,
                      confusion, len(acc), model, tuple(classes), acc.tolist())


REPORT_HEADER = ["model", "accuracy", "auc_control", "auc_low", "auc_moderate", "auc_high"]


def write_report_csv(reports, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in reports:
            w.writerow(r.row())


def read_report_csv(path) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))


def render_report(report: EvalReport, extra: list[str] | None = None) -> str:
    widths = [8, 16] + [14] * len(report.classes)
    head = ["", "Accuracy"] + [f"AUC -{c.lower()}" for c in report.classes]
    lines = ["".join(h.ljust(w) for h, w in zip(head, widths)).rstrip(),
             "".join(v.ljust(w) for v, w in zip(report.row(), widths)).rstrip()]
    if report.confusion is not None:
        lines += ["", "confusion (rows true, columns predicted; summed over folds):"]
        lines.append("".ljust(10) + "".join(c.ljust(10) for c in report.classes))
        for c, row in zip(report.classes, report.confusion):
            lines.append(c.ljust(10) + "".join(str(int(v)).ljust(10) for v in row))
    lines += ["", f"{report.fold_count}-fold cross-validation; mean ± population standard deviation over folds."]
    lines += extra or []
    return "\n".join(lines) + "\n"


def write_report_text(report: EvalReport, path, extra=None) -> None:
    Path(path).write_text(render_report(report, extra), encoding="utf-8")
