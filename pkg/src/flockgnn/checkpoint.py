"""JSON checkpoint container for both network kinds.

Arrays are stored flat as float64 lists (complex arrays interleave re/im),
which JSON round-trips exactly. A SHA-256 over the canonical payload guards
against corruption.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Union

import numpy as np

from .baseline import BaselineGNN
from .cvnet import InvariantGNN
from .errors import ConfigurationError

FORMAT = "flockgnn-checkpoint"
VERSION = 1

Model = Union[InvariantGNN, BaselineGNN]


def _payload(model: Model) -> dict:
    arrays = []
    for name, arr in model.params().items():
        arr = np.ascontiguousarray(arr)
        is_complex = np.iscomplexobj(arr)
        flat = arr.astype(np.complex128 if is_complex else np.float64).view(np.float64).ravel()
        arrays.append({"name": name, "shape": list(arr.shape),
                       "dtype": "complex128" if is_complex else "float64",
                       "data": [float(v) for v in flat]})
    meta = {}
    if isinstance(model, BaselineGNN):
        meta["angle_encoding"] = model.angle_encoding
    return {"format": FORMAT, "version": VERSION, "kind": model.kind,
            "meta": meta, "params": arrays}


def _digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def save_model(model: Model, path) -> None:
    payload = _payload(model)
    payload["sha256"] = _digest(payload)
    Path(path).write_text(json.dumps(payload, sort_keys=True))


def load_model(path) -> Model:
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read checkpoint {path}: {exc}") from exc
    if payload.get("format") != FORMAT:
        raise ConfigurationError(f"{path} is not a {FORMAT} file")
    if payload.get("version") != VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {payload.get('version')}")
    digest = payload.pop("sha256", None)
    if digest != _digest(payload):
        raise ConfigurationError(f"checksum mismatch in {path}")
    params = {}
    for rec in payload["params"]:
        flat = np.asarray(rec["data"], dtype=np.float64)
        if rec["dtype"] == "complex128":
            arr = flat.view(np.complex128)
        else:
            arr = flat
        params[rec["name"]] = arr.reshape(rec["shape"]).copy()
    kind = payload["kind"]
    try:
        if kind == "invariant":
            return InvariantGNN.from_params(params)
        if kind == "baseline":
            return BaselineGNN.from_params(params, payload["meta"].get("angle_encoding", "raw"))
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"malformed {kind} checkpoint {path}: {exc}") from exc
    raise ConfigurationError(f"unknown model kind {kind!r} in {path}")
