"""Dataset loading, splitting, synthetic data, model files and map rendering."""

from .cube import LabeledPixelSet, load_cube, load_gt_csv, save_cube, save_gt_csv
from .modelio import load_model, save_model
from .render import PALETTE, read_ppm, render_map, write_ppm
from .split import SplitSpec, split
from .synth import SynthData, synth_dataset
from .tables import (
    load_counts_file,
    load_index_file,
    load_labels_csv,
    load_matrix_csv,
    save_index_file,
    save_labels_csv,
    save_matrix_csv,
)

__all__ = [
    "LabeledPixelSet", "load_cube", "load_gt_csv", "save_cube", "save_gt_csv",
    "load_model", "save_model", "PALETTE", "read_ppm", "render_map", "write_ppm",
    "SplitSpec", "split", "SynthData", "synth_dataset", "load_counts_file",
    "load_index_file", "load_labels_csv", "load_matrix_csv", "save_index_file",
    "save_labels_csv", "save_matrix_csv",
]
