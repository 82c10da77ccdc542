"""File formats: dataset/prediction/ROC CSV, model and summary JSON, manifests.

Floats are written with 17 significant digits (``%.17g``); non-finite
values become an empty CSV field or JSON ``null``.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DatasetFormatError
from .glm import FittedModel
from .pointproc import Dataset, Sweep

DATASET_HEADER = ("sweep", "bin", "flash", "spike")
PREDICTION_HEADER = ("sweep", "bin", "prob", "valid")
ROC_HEADER = ("threshold", "fpr", "tpr")


def fmt_num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return ""
    return "%.17g" % x


def _json_value(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_num(obj) or "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[" + ", ".join(_json_value(v, indent, level + 1) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    return _json_value(obj, indent, 0) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps_json(obj), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _write_rows(path, header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


# -- datasets ---------------------------------------------------------------

def format_dataset(data: Dataset) -> str:
    lines = [",".join(DATASET_HEADER)]
    for sweep in data:
        for t, (f, s) in enumerate(zip(sweep.flashes.tolist(), sweep.spikes.tolist())):
            lines.append(f"{sweep.id},{t},{f},{s}")
    return "\n".join(lines) + "\n"


def write_dataset(data: Dataset, path):
    Path(path).write_text(format_dataset(data), encoding="utf-8")


def parse_dataset(text: str) -> Dataset:
    lines = text.splitlines()
    if not lines:
        raise DatasetFormatError("empty file", line=1)
    header = tuple(c.strip() for c in lines[0].lstrip("﻿").split(","))
    if header != DATASET_HEADER:
        raise DatasetFormatError(f"header must be {','.join(DATASET_HEADER)!r}", line=1)
    sweeps = []
    cur_id, fl, sp = None, [], []
    seen = set()
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != 4:
            raise DatasetFormatError(f"expected 4 fields, got {len(cells)}", line=lineno)
        try:
            sid, t, f, s = (int(c.strip()) for c in cells)
        except ValueError:
            raise DatasetFormatError("fields must be integers", line=lineno) from None
        if f not in (0, 1):
            raise DatasetFormatError(f"flash must be 0 or 1, got {f}", line=lineno)
        if s not in (0, 1):
            raise DatasetFormatError(f"spike must be 0 or 1, got {s}", line=lineno)
        if sid != cur_id:
            if sid < 0:
                raise DatasetFormatError("sweep id must be non-negative", line=lineno)
            if cur_id is not None:
                if sid < cur_id or sid in seen:
                    raise DatasetFormatError("rows must be sorted by sweep", line=lineno)
                sweeps.append(Sweep(cur_id, fl, sp))
            seen.add(sid)
            cur_id, fl, sp = sid, [], []
        if t != len(fl):
            raise DatasetFormatError(
                f"bin {t} out of sequence in sweep {sid} (expected {len(fl)})", line=lineno)
        fl.append(f)
        sp.append(s)
    if cur_id is not None:
        sweeps.append(Sweep(cur_id, fl, sp))
    return Dataset(tuple(sweeps))


def read_dataset(path) -> Dataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DatasetFormatError(f"not UTF-8: {exc}") from None
    return parse_dataset(text)


# -- models and scores ------------------------------------------------------

def write_model(model: FittedModel, path):
    write_json(path, model.to_dict())


def read_model(path) -> FittedModel:
    return FittedModel.from_dict(read_json(path))


def write_predictions(path, sweep_ids, bins, probs, valid):
    rows = []
    for sid, t, p, ok in zip(sweep_ids, bins, probs, valid):
        rows.append((int(sid), int(t), fmt_num(p) if ok else "", int(bool(ok))))
    _write_rows(path, PREDICTION_HEADER, rows)


def write_roc(path, roc):
    rows = [(fmt_num(th) if math.isfinite(th) else "inf", fmt_num(f), fmt_num(t))
            for th, f, t in zip(roc.thresholds, roc.fpr, roc.tpr)]
    _write_rows(path, ROC_HEADER, rows)


def write_records(path, records, columns):
    rows = []
    for rec in records:
        row = []
        for c in columns:
            v = rec.get(c)
            row.append("" if v is None else (v if isinstance(v, str) else fmt_num(v)))
        rows.append(row)
    _write_rows(path, columns, rows)


# -- manifests --------------------------------------------------------------

def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


def make_manifest(command, config, base_seed=None, inputs=()):
    return {
        "command": command,
        "config": config,
        "base_seed": base_seed,
        "version": __version__,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
