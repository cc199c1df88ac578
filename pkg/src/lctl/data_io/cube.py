"""Hyperspectral cubes stored as raw band-interleaved-by-pixel floats.

A cube is described by a JSON header::

    {"height": 145, "width": 145, "bands": 200,
     "dtype": "f32", "interleave": "bip", "byte_order": "little"}

The data file holds ``height * width * bands`` little-endian float32
values, the bands of each pixel contiguous, pixels in row-major order.
Ground truth is a CSV grid of ``height`` rows by ``width`` integer labels
where 0 marks an unlabeled pixel.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from ..errors import GroundTruthDimsMismatch, HeaderInvalid, ParseError, SizeMismatch
from ..model import DataMatrix
from .tables import _rows

HEADER_FIXED = {"dtype": "f32", "interleave": "bip", "byte_order": "little"}


@dataclass(frozen=True, eq=False)
class LabeledPixelSet:
    """Labeled pixels of a cube, one column per pixel in row-major order."""

    features: DataMatrix
    labels: np.ndarray
    coords: np.ndarray
    image_dims: tuple
    class_names: tuple

    def __post_init__(self):
        n = self.features.n
        labels = np.asarray(self.labels, dtype=np.int64)
        coords = np.asarray(self.coords, dtype=np.int64).reshape(-1, 2)
        if labels.shape != (n,) or coords.shape != (n, 2):
            raise GroundTruthDimsMismatch("labels and coords must have one entry per pixel")
        h, w = self.image_dims
        if n and (coords.min() < 0 or coords[:, 0].max() >= h or coords[:, 1].max() >= w):
            raise GroundTruthDimsMismatch("pixel coordinates outside the image")
        if len(np.unique(coords[:, 0] * w + coords[:, 1])) != n:
            raise GroundTruthDimsMismatch("duplicate pixel coordinates")
        labels.flags.writeable = False
        coords.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "image_dims", (int(h), int(w)))
        object.__setattr__(self, "class_names", tuple(self.class_names))


def read_header(path) -> dict:
    try:
        with open(path) as fh:
            hdr = json.load(fh)
    except json.JSONDecodeError as exc:
        raise HeaderInvalid(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(hdr, dict):
        raise HeaderInvalid(f"{path}: header must be a JSON object")
    for key in ("height", "width", "bands"):
        v = hdr.get(key)
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise HeaderInvalid(f"{path}: {key!r} must be a positive integer, got {v!r}")
    for key, want in HEADER_FIXED.items():
        if hdr.get(key) != want:
            raise HeaderInvalid(f"{path}: {key!r} must be {want!r}, got {hdr.get(key)!r}")
    return hdr


def read_cube(header_path, data_path) -> np.ndarray:
    """Raw cube as a ``height x width x bands`` float32 array."""
    hdr = read_header(header_path)
    h, w, b = hdr["height"], hdr["width"], hdr["bands"]
    expected = h * w * b * 4
    size = os.path.getsize(data_path)
    if size != expected:
        raise SizeMismatch(
            f"{data_path}: {size} bytes, expected {expected} for {h}x{w}x{b} float32"
        )
    return np.fromfile(data_path, dtype="<f4").reshape(h, w, b)


def load_gt_csv(path, dims: tuple | None = None) -> np.ndarray:
    """Ground-truth label grid (0 = unlabeled)."""
    grid = []
    for lineno, row in _rows(path):
        try:
            vals = [int(f) for f in row]
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: non-integer label") from None
        if grid and len(vals) != len(grid[0]):
            raise GroundTruthDimsMismatch(f"{path}: line {lineno} has {len(vals)} columns")
        grid.append(vals)
    gt = np.array(grid, dtype=np.int64).reshape(len(grid), -1 if grid else 0)
    if gt.size and gt.min() < 0:
        raise ParseError(f"{path}: negative label")
    if dims is not None and gt.shape != tuple(dims):
        raise GroundTruthDimsMismatch(
            f"{path}: ground truth is {gt.shape[0]}x{gt.shape[1] if gt.ndim == 2 else 0}, "
            f"cube is {dims[0]}x{dims[1]}"
        )
    return gt


def labeled_pixels(gt: np.ndarray):
    """Coordinates (row-major) and 0-based labels of the labeled pixels."""
    rows, cols = np.nonzero(gt)
    return np.stack([rows, cols], axis=1), gt[rows, cols] - 1


def load_cube(header_path, data_path, gt_path) -> LabeledPixelSet:
    cube = read_cube(header_path, data_path)
    h, w, _ = cube.shape
    gt = load_gt_csv(gt_path, (h, w))
    coords, labels = labeled_pixels(gt)
    features = cube[coords[:, 0], coords[:, 1], :].T.astype(np.float64)
    c = int(gt.max()) if gt.size else 0
    return LabeledPixelSet(
        features=DataMatrix(features),
        labels=labels,
        coords=coords,
        image_dims=(h, w),
        class_names=tuple(f"class {i + 1}" for i in range(c)),
    )


def save_cube(header_path, data_path, cube) -> None:
    """Write a ``height x width x bands`` array in the header + raw BIP format."""
    cube = np.asarray(cube)
    if cube.ndim != 3:
        raise ValueError("cube must be height x width x bands")
    h, w, b = cube.shape
    with open(header_path, "w") as fh:
        json.dump({"height": h, "width": w, "bands": b, **HEADER_FIXED}, fh, indent=1)
    np.ascontiguousarray(cube, dtype="<f4").tofile(data_path)


def save_gt_csv(path, gt) -> None:
    with open(path, "w") as fh:
        for row in np.asarray(gt, dtype=np.int64):
            fh.write(",".join(str(int(v)) for v in row) + "\n")
