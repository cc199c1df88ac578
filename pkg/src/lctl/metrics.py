"""Classification metrics (OA, AA, Cohen's kappa) and report formatting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import EmptyClass, EmptyMatrix, IndexOutOfRange, InvalidArgs, LengthMismatch


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """``counts[i, j]`` = number of samples of true class ``i`` predicted as ``j``."""

    counts: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.counts)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidArgs(f"confusion matrix must be square, got shape {a.shape}")
        if a.size and (not np.all(a == np.round(a)) or a.min() < 0):
            raise InvalidArgs("confusion counts must be non-negative integers")
        a = a.astype(np.int64)
        a.flags.writeable = False
        object.__setattr__(self, "counts", a)

    @property
    def c(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int], c: int) -> ConfusionMatrix:
    t = np.asarray(y_true, dtype=np.int64).ravel()
    p = np.asarray(y_pred, dtype=np.int64).ravel()
    if t.size != p.size:
        raise LengthMismatch(f"{t.size} true labels but {p.size} predictions")
    for name, a in (("true", t), ("predicted", p)):
        if a.size and (a.min() < 0 or a.max() >= c):
            raise IndexOutOfRange(f"{name} class index outside [0, {c})")
    counts = np.bincount(t * c + p, minlength=c * c).reshape(c, c)
    return ConfusionMatrix(counts)


def _cm(cm) -> ConfusionMatrix:
    return cm if isinstance(cm, ConfusionMatrix) else ConfusionMatrix(np.asarray(cm))


def overall_accuracy(cm) -> float:
    cm = _cm(cm)
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    return int(np.trace(cm.counts)) / cm.total


def per_class_accuracy(cm) -> np.ndarray:
    """Recall of each true class; NaN for classes without samples."""
    cm = _cm(cm)
    rows = cm.counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(rows > 0, np.diag(cm.counts) / np.maximum(rows, 1), np.nan)


def average_accuracy(cm) -> float:
    cm = _cm(cm)
    rows = cm.counts.sum(axis=1)
    empty = np.flatnonzero(rows == 0)
    if empty.size:
        raise EmptyClass(f"class {empty[0] + 1} has no evaluated samples")
    return float(np.mean(np.diag(cm.counts) / rows))


def kappa(cm) -> float:
    """Cohen's kappa ``(p_o - p_e) / (1 - p_e)``.

    Evaluated in exact integer arithmetic up to the final division.
    """
    cm = _cm(cm)
    n = cm.total
    if n == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    counts = [[int(v) for v in row] for row in cm.counts]
    rows = [sum(r) for r in counts]
    cols = [sum(r[j] for r in counts) for j in range(cm.c)]
    chance = sum(r * k for r, k in zip(rows, cols))
    agree = sum(counts[i][i] for i in range(cm.c))
    denom = n * n - chance
    if denom == 0:
        # all mass in one cell: perfect agreement
        return 1.0
    return (n * agree - chance) / denom


class SubspaceCounts(NamedTuple):
    synthesis: float
    analysis: int

    @property
    def synthesis_whole(self) -> int:
        """Synthesis count rounded up to a whole number of subspaces."""
        return math.ceil(self.synthesis - 1e-9)


def subspace_counts(n: int, k: int, p: int) -> SubspaceCounts:
    """Capacity comparison between a synthesis dictionary and an analysis transform.

    A dictionary with ``n`` atoms and sparsity ``k`` spans about
    ``k log2(n / k)`` subspaces (Stirling estimate of ``log2 C(n, k)``);
    a transform with ``p`` atoms at matched dimensions spans ``p``.
    """
    for name, v in (("n", n), ("k", k), ("p", p)):
        if isinstance(v, bool) or int(v) != v:
            raise InvalidArgs(f"{name} must be an integer, got {v!r}")
    if not (1 <= k < n) or p < 1:
        raise InvalidArgs(f"need 1 <= k < n and p >= 1, got n={n}, k={k}, p={p}")
    return SubspaceCounts(k * math.log2(n / k), int(p))


def metrics_report(cm, class_names: Sequence[str] | None = None,
                   train_counts: Sequence[int] | None = None) -> dict:
    """Per-class accuracy, OA, AA and kappa as a JSON-ready dict (fractions, not percent)."""
    cm = _cm(cm)
    if class_names is None:
        class_names = [f"class {i + 1}" for i in range(cm.c)]
    if train_counts is not None and len(train_counts) != cm.c:
        raise LengthMismatch(f"{len(train_counts)} training counts for {cm.c} classes")
    acc = per_class_accuracy(cm)
    rows = cm.counts.sum(axis=1)
    classes = []
    for i in range(cm.c):
        entry = {"class": i + 1, "name": str(class_names[i])}
        if train_counts is not None:
            entry["train"] = int(train_counts[i])
        entry["test"] = int(rows[i])
        entry["accuracy"] = None if np.isnan(acc[i]) else float(acc[i])
        classes.append(entry)
    return {
        "classes": classes,
        "total": cm.total,
        "overall_accuracy": overall_accuracy(cm),
        "average_accuracy": average_accuracy(cm),
        "kappa": kappa(cm),
        "confusion": cm.counts.tolist(),
    }


def format_table(report: dict) -> str:
    """Plain-text table: one row per class, then OA, AA (percent) and kappa."""
    has_train = any("train" in e for e in report["classes"])
    head = ["Class"] + (["# Training"] if has_train else []) + ["# Testing", "Accuracy"]
    lines = []
    for e in report["classes"]:
        acc = "-" if e["accuracy"] is None else f"{100 * e['accuracy']:.2f}"
        row = [str(e["class"])] + ([str(e.get("train", ""))] if has_train else [])
        lines.append(row + [str(e["test"]), acc])
    pad = [""] * (len(head) - 2)
    lines.append(["OA"] + pad + [f"{100 * report['overall_accuracy']:.2f}"])
    lines.append(["AA"] + pad + [f"{100 * report['average_accuracy']:.2f}"])
    lines.append(["Kappa"] + pad + [f"{report['kappa']:.4f}"])
    widths = [max(len(r[i]) for r in [head] + lines) for i in range(len(head))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return "\n".join(fmt.format(*r).rstrip() for r in [head] + lines) + "\n"
