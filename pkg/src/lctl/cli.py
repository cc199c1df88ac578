"""Command-line interface: ``lctl <command> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 numerical failure.  Set ``LCTL_LOG_LEVEL`` (e.g. ``INFO``) for logging
on standard error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .classifier import predict_arrays
from .data_io.cube import labeled_pixels, load_cube, load_gt_csv
from .data_io.modelio import load_model, save_model
from .data_io.render import render_map
from .data_io.split import SplitSpec, split
from .data_io.synth import synth_dataset
from .data_io.tables import (
    ensure_parent,
    file_digest,
    load_counts_file,
    load_index_file,
    load_labels_csv,
    load_matrix_csv,
    load_predictions,
    save_index_file,
    save_labels_csv,
    save_matrix_csv,
    save_predictions,
)
from .errors import DataError, IndexOutOfRange, InvalidArgs, LengthMismatch, NumericalFailure
from .metrics import confusion_matrix, format_table, metrics_report, subspace_counts
from .model import Hyperparams, minmax_scaling, one_hot
from .trainer import train_lctl

log = logging.getLogger("lctl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class _Dataset:
    x: np.ndarray
    labels: np.ndarray | None
    coords: np.ndarray | None
    image_dims: tuple | None
    class_names: tuple
    inputs: list


def _add_data_flags(p, labels=True):
    g = p.add_argument_group("input data (CSV mode or cube mode)")
    g.add_argument("--features", help="CSV with one sample per row")
    if labels:
        g.add_argument("--labels", help="CSV with one 1-based class label per line")
    g.add_argument("--cube-header", help="JSON cube header")
    g.add_argument("--cube-data", help="raw little-endian float32 BIP cube")
    g.add_argument("--gt", help="ground-truth CSV grid (0 = unlabeled)")


def _add_split_flags(p):
    g = p.add_argument_group("train/test split")
    g.add_argument("--train-idx", help="file of training sample indices")
    g.add_argument("--test-idx", help="file of test sample indices")
    g.add_argument("--fraction", type=float, help="per-class training fraction")
    g.add_argument("--counts-file", help="per-class training counts, one per line")
    g.add_argument("--floor", type=int, default=1, help="minimum training samples per class")
    g.add_argument("--split-seed", type=int, default=0)


def _load_dataset(args, need_labels: bool) -> _Dataset:
    cube = [args.cube_header, args.cube_data, args.gt]
    if any(cube):
        if not all(cube):
            raise UsageError("cube mode needs --cube-header, --cube-data and --gt")
        if args.features:
            raise UsageError("give either --features or the cube flags, not both")
        ps = load_cube(*cube)
        return _Dataset(ps.features.values, ps.labels, ps.coords, ps.image_dims,
                        ps.class_names, list(cube))
    if not args.features:
        raise UsageError("need --features (CSV mode) or --cube-header/--cube-data/--gt")
    X = load_matrix_csv(args.features).values
    inputs = [args.features]
    labels = None
    label_path = getattr(args, "labels", None)
    if label_path:
        labels = load_labels_csv(label_path)
        inputs.append(label_path)
        if labels.size != X.shape[1]:
            raise LengthMismatch(f"{X.shape[1]} samples but {labels.size} labels")
    elif need_labels:
        raise UsageError("--labels is required in CSV mode")
    c = int(labels.max()) + 1 if labels is not None else 0
    return _Dataset(X, labels, None, None, tuple(f"class {i + 1}" for i in range(c)), inputs)


def _split_spec(args):
    if args.fraction is not None and args.counts_file:
        raise UsageError("give either --fraction or --counts-file, not both")
    try:
        if args.fraction is not None:
            return SplitSpec.fraction_mode(args.fraction, args.floor, args.split_seed)
        if args.counts_file:
            return SplitSpec.counts_mode(load_counts_file(args.counts_file), args.split_seed)
    except InvalidArgs as exc:
        raise UsageError(str(exc)) from None
    return None


def _resolve_split(args, labels, c):
    n = labels.size
    train_idx = load_index_file(args.train_idx) if args.train_idx else None
    test_idx = load_index_file(args.test_idx) if args.test_idx else None
    spec = _split_spec(args)
    if spec is not None:
        if train_idx is not None or test_idx is not None:
            raise UsageError("index files and split flags are mutually exclusive")
        train_idx, test_idx = split(labels, spec, c)
    for name, idx in (("training", train_idx), ("test", test_idx)):
        if idx is not None and idx.size and idx.max() >= n:
            raise IndexOutOfRange(f"{name} index {idx.max()} out of range for {n} samples")
    return train_idx, test_idx


def _hyperparams(args) -> Hyperparams:
    try:
        return Hyperparams(
            atoms=args.atoms, lam=args.lam, mu=args.mu, max_outer=args.iters,
            rel_tol=args.tol, ista_max_iters=args.ista_iters, ista_tol=args.ista_tol,
            seed=args.seed, threshold_convention=args.threshold_convention, ridge=args.ridge,
        )
    except InvalidArgs as exc:
        raise UsageError(str(exc)) from None


def _stem(path) -> str:
    root, ext = os.path.splitext(path)
    return root if ext else path


def _write_json(path, doc) -> None:
    ensure_parent(path)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")


def _write_manifest(path, args, t0, inputs, outputs, seed=None, extra=None) -> None:
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    doc = {
        "command": args.command,
        "flags": flags,
        "seed": seed,
        "inputs": {p: file_digest(p) for p in inputs},
        "outputs": list(outputs),
        "tool_version": __version__,
        "wall_time_seconds": time.perf_counter() - t0,
    }
    if extra:
        doc.update(extra)
    _write_json(path, doc)


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    ds = _load_dataset(args, need_labels=True)
    d, n = ds.x.shape
    if args.atoms > d:
        raise UsageError(
            f"--atoms {args.atoms} exceeds the feature count {d}; the transform "
            f"needs atoms <= features, so pass --atoms {d} or fewer"
        )
    hp = _hyperparams(args)
    c = len(ds.class_names)
    if c < 2:
        raise InvalidArgs("need at least two classes")
    train_idx, _ = _resolve_split(args, ds.labels, c)
    idx = np.arange(n) if train_idx is None else train_idx
    X, y = ds.x[:, idx], ds.labels[idx]
    scaling = None
    if args.minmax:
        scaling = minmax_scaling(X)
        X = (X - scaling[0][:, None]) / scaling[1][:, None]

    model, report = train_lctl(X, one_hot(y, c), hp, ds.class_names)
    if scaling is not None:
        model = dataclasses.replace(model, scaling=scaling)

    ensure_parent(args.out)
    save_model(model, args.out)
    trace_path = _stem(args.out) + ".trace.json"
    _write_json(trace_path, {
        "objective_trace": list(report.objective_trace),
        "stage_objectives": [list(s) for s in report.stage_objectives],
        "outer_iterations": report.outer_iterations,
        "converged": report.converged,
    })
    _write_manifest(
        _stem(args.out) + ".manifest.json", args, t0, ds.inputs + (
            [args.train_idx] if args.train_idx else []) + (
            [args.counts_file] if args.counts_file else []),
        [args.out, trace_path], seed=hp.seed,
        extra={"training_samples": int(idx.size),
               "training_wall_time_seconds": report.wall_time_seconds},
    )
    print(f"trained on {idx.size} samples: {report.outer_iterations} iterations, "
          f"objective {report.objective_trace[-1]:.6g}, converged={report.converged}")
    return 0


def cmd_predict(args) -> int:
    t0 = time.perf_counter()
    ds = _load_dataset(args, need_labels=False)
    model = load_model(args.model)
    n = ds.x.shape[1]
    idx = load_index_file(args.indices) if args.indices else np.arange(n)
    if idx.size and idx.max() >= n:
        raise IndexOutOfRange(f"index {idx.max()} out of range for {n} samples")
    if args.map and ds.coords is None:
        raise UsageError("--map needs cube input (pixel coordinates)")
    t_pred = time.perf_counter()
    classes, scores = predict_arrays(model, ds.x[:, idx], mu=args.mu_override)
    t_pred = time.perf_counter() - t_pred

    ensure_parent(args.out)
    save_predictions(args.out, idx, classes, scores)
    outputs = [args.out]
    if args.map:
        ensure_parent(args.map)
        render_map(classes + 1, ds.coords[idx], ds.image_dims, args.map)
        outputs.append(args.map)
    if args.gt_map:
        if ds.coords is None:
            raise UsageError("--gt-map needs cube input")
        ensure_parent(args.gt_map)
        render_map(ds.labels + 1, ds.coords, ds.image_dims, args.gt_map)
        outputs.append(args.gt_map)
    _write_manifest(_stem(args.out) + ".manifest.json", args, t0,
                    ds.inputs + [args.model], outputs, seed=model.seed,
                    extra={"samples": int(idx.size), "prediction_wall_time_seconds": t_pred})
    print(f"predicted {idx.size} samples")
    return 0


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    inputs = []
    train_counts = None
    class_names = None
    if args.model:
        ds = _load_dataset(args, need_labels=True)
        model = load_model(args.model)
        c = model.c
        class_names = model.class_names
        train_idx, test_idx = _resolve_split(args, ds.labels, c)
        idx = np.arange(ds.x.shape[1]) if test_idx is None else test_idx
        pred, _ = predict_arrays(model, ds.x[:, idx])
        truth = ds.labels[idx]
        truth_all = ds.labels
        inputs = ds.inputs + [args.model]
    elif args.pred:
        if bool(args.truth) == bool(args.truth_gt):
            raise UsageError("give exactly one of --truth or --truth-gt with --pred")
        index, pred = load_predictions(args.pred)
        if args.truth:
            truth_all = load_labels_csv(args.truth)
        else:
            truth_all = labeled_pixels(load_gt_csv(args.truth_gt))[1]
        if index.size and index.max() >= truth_all.size:
            raise IndexOutOfRange(f"prediction index {index.max()} beyond {truth_all.size} labels")
        truth = truth_all[index]
        c = args.classes or max(2, int(max(truth_all.max(initial=0), pred.max(initial=0))) + 1)
        train_idx = load_index_file(args.train_idx) if args.train_idx else None
        inputs = [args.pred, args.truth or args.truth_gt]
    else:
        raise UsageError("need --pred with --truth/--truth-gt, or --model with input data")
    if train_idx is not None:
        if train_idx.size and train_idx.max() >= truth_all.size:
            raise IndexOutOfRange("training index out of range")
        train_counts = np.bincount(truth_all[train_idx], minlength=c)[:c].tolist()

    cm = confusion_matrix(truth, pred, c)
    report = metrics_report(cm, class_names, train_counts)
    table = format_table(report)
    sys.stdout.write(table)
    outputs = []
    if args.out_json:
        _write_json(args.out_json, report)
        outputs.append(args.out_json)
    if args.out_table:
        ensure_parent(args.out_table)
        with open(args.out_table, "w") as fh:
            fh.write(table)
        outputs.append(args.out_table)
    if outputs:
        _write_manifest(_stem(outputs[0]) + ".manifest.json", args, t0, inputs, outputs)
    return 0


def cmd_split(args) -> int:
    t0 = time.perf_counter()
    if bool(args.labels) == bool(args.gt):
        raise UsageError("give exactly one of --labels or --gt")
    if args.labels:
        labels = load_labels_csv(args.labels)
        src = args.labels
    else:
        labels = labeled_pixels(load_gt_csv(args.gt))[1]
        src = args.gt
    spec = _split_spec(args)
    if spec is None:
        raise UsageError("need --fraction or --counts-file")
    c = len(spec.counts) if spec.mode == "counts" else int(labels.max()) + 1
    train_idx, test_idx = split(labels, spec, c)
    train_path = f"{args.out_prefix}_train.txt"
    test_path = f"{args.out_prefix}_test.txt"
    ensure_parent(train_path)
    save_index_file(train_path, train_idx)
    save_index_file(test_path, test_idx)
    n_train = np.bincount(labels[train_idx], minlength=c).tolist()
    n_test = np.bincount(labels[test_idx], minlength=c).tolist()
    _write_manifest(
        f"{args.out_prefix}_split.manifest.json", args, t0,
        [src] + ([args.counts_file] if args.counts_file else []),
        [train_path, test_path], seed=spec.seed,
        extra={"per_class": [{"class": k + 1, "train": a, "test": b}
                             for k, (a, b) in enumerate(zip(n_train, n_test))]},
    )
    print(f"{train_idx.size} training / {test_idx.size} test samples")
    return 0


def cmd_synth(args) -> int:
    t0 = time.perf_counter()
    data = synth_dataset(args.d, args.c, args.n_per_class, args.noise, args.seed)
    prefix = args.out_prefix
    paths = [f"{prefix}_features.csv", f"{prefix}_labels.csv", f"{prefix}_planted.csv"]
    ensure_parent(paths[0])
    save_matrix_csv(paths[0], data.x)
    save_labels_csv(paths[1], data.labels)
    with open(paths[2], "w") as fh:
        for row in data.planted:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    _write_manifest(f"{prefix}_synth.manifest.json", args, t0, [], paths, seed=args.seed)
    print(f"wrote {data.x.shape[1]} samples with {args.d} features in {args.c} classes")
    return 0


def cmd_subspaces(args) -> int:
    try:
        counts = subspace_counts(args.n, args.k, args.p)
    except InvalidArgs as exc:
        raise UsageError(str(exc)) from None
    print(f"synthesis subspaces: {counts.synthesis:.2f} (~{counts.synthesis_whole})")
    print(f"analysis subspaces: {counts.analysis}")
    return 0


def cmd_info(args) -> int:
    model = load_model(args.model)
    hp = model.hyperparams
    final = f"{model.objective_trace[-1]:.10g}" if model.objective_trace else "n/a"
    print(f"atoms (p):        {model.p}")
    print(f"features (d):     {model.d}")
    print(f"classes (c):      {model.c}")
    print(f"lambda:           {hp.lam:g}")
    print(f"mu:               {hp.mu:g}")
    print(f"threshold:        {hp.threshold_convention}")
    print(f"seed:             {model.seed} ({model.prng})")
    print(f"iterations:       {max(len(model.objective_trace) - 1, 0)}")
    print(f"final objective:  {final}")
    print(f"feature scaling:  {'min-max' if model.scaling is not None else 'none'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lctl", description="Label-consistent transform learning.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("train", help="train a model")
    _add_data_flags(p)
    _add_split_flags(p)
    p.add_argument("--atoms", type=int, default=40, help="transform atoms p (default 40)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="transform regularizer (default 0.1)")
    p.add_argument("--mu", type=float, default=0.05, help="sparsity weight (default 0.05)")
    p.add_argument("--iters", type=int, default=50, help="maximum outer iterations; 0 keeps the initialization")
    p.add_argument("--tol", type=float, default=1e-6, help="relative objective change to stop")
    p.add_argument("--ista-iters", type=int, default=300)
    p.add_argument("--ista-tol", type=float, default=1e-8)
    p.add_argument("--ridge", type=float, default=1e-8, help="ridge of the classifier map solve")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold-convention", choices=["exact", "paper"], default="exact")
    p.add_argument("--minmax", action="store_true", help="per-feature min-max scaling (off by default)")
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify samples with a trained model")
    _add_data_flags(p, labels=False)
    p.add_argument("--model", required=True)
    p.add_argument("--indices", help="only predict these sample indices")
    p.add_argument("--mu-override", type=float, help="sparsity weight used for test-time coding")
    p.add_argument("--map", help="write a PPM classification map (cube mode)")
    p.add_argument("--gt-map", help="write a PPM ground-truth map (cube mode)")
    p.add_argument("--out", required=True, help="predictions CSV path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="compute OA, AA and kappa")
    _add_data_flags(p)
    _add_split_flags(p)
    p.add_argument("--pred", help="predictions CSV from 'predict'")
    p.add_argument("--truth", help="1-based labels CSV")
    p.add_argument("--truth-gt", help="ground-truth grid CSV")
    p.add_argument("--model", help="evaluate a model end to end on the input data")
    p.add_argument("--classes", type=int, help="number of classes (default: inferred)")
    p.add_argument("--out-json")
    p.add_argument("--out-table")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("split", help="seeded per-class train/test split")
    p.add_argument("--labels")
    p.add_argument("--gt")
    p.add_argument("--fraction", type=float)
    p.add_argument("--counts-file")
    p.add_argument("--floor", type=int, default=1)
    p.add_argument("--seed", dest="split_seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("synth", help="generate a planted synthetic dataset")
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--c", type=int, default=4)
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("subspaces", help="synthesis vs analysis subspace counts")
    p.add_argument("--n", type=int, required=True, help="dictionary atoms")
    p.add_argument("--k", type=int, required=True, help="sparsity")
    p.add_argument("--p", type=int, required=True, help="transform atoms")
    p.set_defaults(func=cmd_subspaces)

    p = sub.add_parser("info", help="summarize a model file")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_info)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("LCTL_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"lctl {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"lctl {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"lctl {args.command}: {exc}", file=sys.stderr)
        return 2
