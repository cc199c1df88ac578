"""JSON model files.

Floats are written with Python's shortest round-trip representation, so a
saved model loads back bit-identical.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import FormatVersionUnsupported, SchemaInvalid
from ..model import Hyperparams, LctlModel, TransformModel

FORMAT_VERSION = 1
_HP_KEYS = {
    "atoms": "atoms", "lambda": "lam", "mu": "mu", "max_outer": "max_outer",
    "rel_tol": "rel_tol", "ista_max_iters": "ista_max_iters", "ista_tol": "ista_tol",
    "seed": "seed", "threshold_convention": "threshold_convention", "ridge": "ridge",
}


def model_to_dict(model: LctlModel) -> dict:
    hp = model.hyperparams
    doc = {
        "format_version": FORMAT_VERSION,
        "dims": {"p": model.p, "d": model.d, "c": model.c},
        "hyperparams": {k: getattr(hp, attr) for k, attr in _HP_KEYS.items()},
        "seed": model.seed,
        "prng": model.prng,
        "threshold_convention": hp.threshold_convention,
        "class_names": list(model.class_names),
        "objective_trace": list(model.objective_trace),
        "T": model.T.tolist(),
        "M": model.M.tolist(),
    }
    if model.scaling is not None:
        doc["scaling"] = {"offset": model.scaling[0].tolist(), "scale": model.scaling[1].tolist()}
    return doc


def _matrix(doc, key, shape):
    rows = doc.get(key)
    if not isinstance(rows, list) or len(rows) != shape[0]:
        raise SchemaInvalid(f"{key!r} must be a list of {shape[0]} rows")
    for r in rows:
        if not isinstance(r, list) or len(r) != shape[1]:
            raise SchemaInvalid(f"every row of {key!r} must have {shape[1]} entries")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in r):
            raise SchemaInvalid(f"{key!r} entries must be numbers")
    return np.array(rows, dtype=np.float64).reshape(shape)


def model_from_dict(doc: dict) -> LctlModel:
    if not isinstance(doc, dict):
        raise SchemaInvalid("model document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionUnsupported(f"unsupported model format_version {version!r}")
    try:
        dims = doc["dims"]
        p, d, c = (int(dims[k]) for k in ("p", "d", "c"))
        hp_doc = doc["hyperparams"]
        hp = Hyperparams(**{attr: hp_doc[k] for k, attr in _HP_KEYS.items()})
        if doc.get("threshold_convention", hp.threshold_convention) != hp.threshold_convention:
            raise SchemaInvalid("threshold_convention disagrees with hyperparams")
        T = _matrix(doc, "T", (p, d))
        M = _matrix(doc, "M", (c, p))
        scaling = None
        if "scaling" in doc:
            scaling = (np.array(doc["scaling"]["offset"], dtype=np.float64),
                       np.array(doc["scaling"]["scale"], dtype=np.float64))
        return LctlModel(
            transform=TransformModel(T, hp),
            M=M,
            class_names=tuple(doc["class_names"]),
            feature_count=d,
            objective_trace=tuple(doc.get("objective_trace", ())),
            seed=int(doc["seed"]),
            prng=str(doc["prng"]),
            scaling=scaling,
        )
    except SchemaInvalid:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaInvalid(f"malformed model document: {exc}") from None


def dumps_model(model: LctlModel) -> str:
    return json.dumps(model_to_dict(model), allow_nan=False, indent=1) + "\n"


def save_model(model: LctlModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> LctlModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaInvalid(f"{path}: not valid JSON: {exc}") from None
    return model_from_dict(doc)
