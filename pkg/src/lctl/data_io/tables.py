"""Plain-text tables: feature CSVs, label CSVs and index files.

Feature CSVs hold one sample per row; in memory samples become columns.
Label files hold 1-based class numbers, one per line; in memory labels
are 0-based.
"""

from __future__ import annotations

import csv
import hashlib
import os

import numpy as np

from ..errors import EmptyFile, ParseError, RaggedRows
from ..model import DataMatrix


def _rows(path):
    """Yield ``(line_number, fields)`` for non-blank, non-comment lines."""
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not f.strip() for f in row):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            yield lineno, row


def read_numeric_rows(path) -> np.ndarray:
    """Rectangular numeric CSV as an ``N x d`` float64 array."""
    data = []
    width = None
    for lineno, row in _rows(path):
        try:
            vals = [float(f) for f in row]
        except ValueError as exc:
            raise ParseError(f"{path}: line {lineno}: {exc}") from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise RaggedRows(
                f"{path}: line {lineno} has {len(vals)} fields, expected {width}"
            )
        data.append(vals)
    if not data:
        raise EmptyFile(f"{path}: no data rows")
    return np.array(data, dtype=np.float64)


def load_matrix_csv(path) -> DataMatrix:
    """Load a feature CSV (one sample per row) as a ``d x N`` data matrix."""
    return DataMatrix(read_numeric_rows(path).T)


def save_matrix_csv(path, x) -> None:
    """Write a ``d x N`` matrix as one sample per row, losslessly."""
    X = x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=np.float64)
    with open(path, "w") as fh:
        for col in X.T:
            fh.write(",".join(repr(float(v)) for v in col) + "\n")


def _read_ints(path, what: str) -> list:
    out = []
    for lineno, row in _rows(path):
        if len(row) != 1:
            raise ParseError(f"{path}: line {lineno}: expected one {what} per line")
        try:
            out.append(int(row[0].strip()))
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: {row[0]!r} is not an integer") from None
    return out


def load_labels_csv(path) -> np.ndarray:
    """Load 1-based class labels, returned as 0-based indices."""
    vals = _read_ints(path, "label")
    if not vals:
        raise EmptyFile(f"{path}: no labels")
    arr = np.array(vals, dtype=np.int64)
    bad = np.flatnonzero(arr < 1)
    if bad.size:
        raise ParseError(f"{path}: label {arr[bad[0]]} at entry {bad[0] + 1}; labels must be >= 1")
    return arr - 1


def save_labels_csv(path, labels) -> None:
    """Write 0-based class indices as 1-based labels."""
    with open(path, "w") as fh:
        for v in np.asarray(labels, dtype=np.int64):
            fh.write(f"{int(v) + 1}\n")


def load_index_file(path) -> np.ndarray:
    vals = _read_ints(path, "index")
    arr = np.array(vals, dtype=np.int64)
    if arr.size and arr.min() < 0:
        raise ParseError(f"{path}: negative sample index")
    return arr


def save_index_file(path, idx) -> None:
    with open(path, "w") as fh:
        fh.writelines(f"{int(i)}\n" for i in idx)


def load_counts_file(path) -> list:
    """Per-class training counts, one per line in class order."""
    vals = _read_ints(path, "count")
    if not vals:
        raise EmptyFile(f"{path}: no counts")
    return vals


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def ensure_parent(path) -> None:
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def save_predictions(path, index, classes, scores) -> None:
    """Prediction CSV: sample index, 1-based class, then one score per class."""
    S = np.asarray(scores, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write("index,class," + ",".join(f"score_{k + 1}" for k in range(S.shape[0])) + "\n")
        for j, (i, k) in enumerate(zip(index, classes)):
            fh.write(f"{int(i)},{int(k) + 1}," + ",".join(repr(float(v)) for v in S[:, j]) + "\n")


def load_predictions(path):
    """Read a prediction CSV; returns ``(index, classes)`` with 0-based classes."""
    index, classes = [], []
    header_seen = False
    for lineno, row in _rows(path):
        if not header_seen:
            header_seen = True
            if [f.strip() for f in row[:2]] != ["index", "class"]:
                raise ParseError(f"{path}: line {lineno}: expected header 'index,class,...'")
            continue
        try:
            index.append(int(row[0]))
            classes.append(int(row[1]) - 1)
        except (ValueError, IndexError):
            raise ParseError(f"{path}: line {lineno}: malformed prediction row") from None
    if not header_seen:
        raise EmptyFile(f"{path}: no predictions")
    idx = np.array(index, dtype=np.int64)
    cls = np.array(classes, dtype=np.int64)
    if cls.size and cls.min() < 0:
        raise ParseError(f"{path}: predicted classes must be >= 1")
    if idx.size and idx.min() < 0:
        raise ParseError(f"{path}: negative sample index")
    return idx, cls
