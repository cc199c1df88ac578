"""Classification maps as binary PPM images."""

from __future__ import annotations

import numpy as np

from ..errors import IndexOutOfRange, LengthMismatch

#: RGB color of class 1..16; class k > 16 reuses entry (k - 1) % 16.
PALETTE = np.array([
    (255, 0, 0), (0, 255, 0), (0, 0, 255), (255, 255, 0),
    (0, 255, 255), (255, 0, 255), (192, 192, 192), (128, 128, 128),
    (128, 0, 0), (128, 128, 0), (0, 128, 0), (128, 0, 128),
    (0, 128, 128), (0, 0, 128), (255, 165, 0), (139, 69, 19),
], dtype=np.uint8)


def class_map(labels, coords, image_dims) -> np.ndarray:
    """``height x width x 3`` image coloring 1-based ``labels`` at ``coords``.

    Label 0 and pixels without a label stay black.
    """
    h, w = (int(v) for v in image_dims)
    img = np.zeros((h, w, 3), dtype=np.uint8)
    lab = np.asarray(labels, dtype=np.int64).ravel()
    xy = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
    if lab.size != xy.shape[0]:
        raise LengthMismatch(f"{lab.size} labels for {xy.shape[0]} coordinates")
    if xy.size and (xy.min() < 0 or xy[:, 0].max() >= h or xy[:, 1].max() >= w):
        raise IndexOutOfRange(f"pixel coordinates outside a {h}x{w} image")
    if lab.size and lab.min() < 0:
        raise IndexOutOfRange("negative class label")
    sel = lab > 0
    img[xy[sel, 0], xy[sel, 1]] = PALETTE[(lab[sel] - 1) % len(PALETTE)]
    return img


def write_ppm(path, img: np.ndarray) -> None:
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P6" or int(fields[3]) != 255:
        raise ValueError(f"{path}: not an 8-bit binary PPM")
    w, h = int(fields[1]), int(fields[2])
    pixels = data[pos + 1:pos + 1 + w * h * 3]
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w, 3)


def render_map(predictions, coords, image_dims, path) -> None:
    """Write a PPM classification map; ``predictions`` are 1-based class numbers."""
    write_ppm(path, class_map(predictions, coords, image_dims))
