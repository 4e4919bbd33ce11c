"""Model and data files.

Model files are JSON documents::

    {"format": "gwrnet-model", "format_version": 1, "kind": ..., "body": {...},
     "checksum": "<sha256 of the canonical payload>"}

Floats are written with ``repr`` precision, so a load reproduces every weight
bit for bit. Data files are CSV with one frame per row::

    sequence,subject,label,frame,j0_x,j0_y,j0_z,j1_x,...

Frames of a sequence are contiguous and numbered from 0; ``subject`` and
``label`` may be empty.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from collections import OrderedDict
from pathlib import Path

import numpy as np

from .assessment import Assessor
from .features import Sequence
from .gamma import GammaGWR
from .gng import GNG
from .gwr import GWR
from .hierarchy import Pipeline

FORMAT = "gwrnet-model"
FORMAT_VERSION = 1
COORD_PRECISION = 6

_KINDS = {"gwr": GWR, "gamma": GammaGWR, "gng": GNG, "pipeline": Pipeline, "assessor": Assessor}


class ModelFileError(Exception):
    """Unreadable, corrupt or incompatible model file."""


class DataFileError(Exception):
    """Malformed data file."""


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _kind_of(model) -> str:
    if isinstance(model, Pipeline):
        return "pipeline"
    if isinstance(model, Assessor):
        return "assessor"
    return model.kind


def dumps_model(model) -> str:
    payload = {"format": FORMAT, "format_version": FORMAT_VERSION,
               "kind": _kind_of(model), "body": model.to_dict()}
    doc = dict(payload, checksum=hashlib.sha256(_canonical(payload).encode()).hexdigest())
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def loads_model(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"not a model file (invalid JSON: {exc.msg}); "
                             f"expected {FORMAT} format version {FORMAT_VERSION}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFileError(f"not a {FORMAT} file; expected format version {FORMAT_VERSION}")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFileError(f"format version mismatch: file has {doc.get('format_version')!r}, "
                             f"this build reads {FORMAT_VERSION}")
    checksum = doc.pop("checksum", None)
    if checksum != hashlib.sha256(_canonical(doc).encode()).hexdigest():
        raise ModelFileError("checksum mismatch: the model file is corrupt")
    cls = _KINDS.get(doc.get("kind"))
    if cls is None:
        raise ModelFileError(f"unknown model kind {doc.get('kind')!r}")
    try:
        return cls.from_dict(doc["body"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"malformed model body: {exc}") from exc


def save_model(model, path) -> None:
    atomic_write(path, dumps_model(model))


def load_model(path):
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from exc
    return loads_model(text)


# ------------------------------------------------------------------ data files
def _header(n_joints: int) -> list[str]:
    return ["sequence", "subject", "label", "frame"] + [f"j{j}_{a}" for j in range(n_joints) for a in "xyz"]


def format_data(sequences) -> str:
    sequences = list(sequences)
    if not sequences:
        raise DataFileError("no sequences to write")
    J = sequences[0].n_joints
    lines = [",".join(_header(J))]
    fmt = f"{{:.{COORD_PRECISION}f}}"
    for i, s in enumerate(sequences):
        if s.n_joints != J:
            raise DataFileError("all sequences in a file must have the same joint count")
        sid = s.seq_id if s.seq_id is not None else f"seq{i}"
        subj = "" if s.subject is None else s.subject
        lab = "" if s.label is None else s.label
        for t, frame in enumerate(s.frames):
            lines.append(",".join([str(sid), str(subj), str(lab), str(t)] + [fmt.format(v) for v in frame.ravel()]))
    return "\n".join(lines) + "\n"


def write_data(path, sequences) -> None:
    atomic_write(path, format_data(sequences))


def read_data(path) -> list[Sequence]:
    """Sequences of a data file, in order of first appearance.

    Labels and subjects are kept as strings.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataFileError(f"cannot read data file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFileError(f"{path}: empty data file") from None
        if header[:4] != ["sequence", "subject", "label", "frame"] or (len(header) - 4) % 3 or len(header) == 4:
            raise DataFileError(f"{path}: bad header; expected sequence,subject,label,frame,j0_x,...")
        J = (len(header) - 4) // 3
        if header != _header(J):
            raise DataFileError(f"{path}: coordinate columns must be j0_x,j0_y,j0_z,... in order")
        seqs: "OrderedDict[str, dict]" = OrderedDict()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFileError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            sid, subj, lab, frame = row[:4]
            try:
                t = int(frame)
                coords = [float(v) for v in row[4:]]
            except ValueError as exc:
                raise DataFileError(f"{path}:{lineno}: {exc}") from exc
            entry = seqs.get(sid)
            if entry is None:
                if t != 0:
                    raise DataFileError(f"{path}:{lineno}: sequence {sid} must start at frame 0")
                entry = seqs[sid] = {"subject": subj or None, "label": lab or None, "frames": [], "last": sid}
            elif next(reversed(seqs)) != sid:
                raise DataFileError(f"{path}:{lineno}: frames of sequence {sid} are not contiguous")
            if t != len(entry["frames"]):
                raise DataFileError(f"{path}:{lineno}: sequence {sid} frame {t} out of order")
            if (subj or None) != entry["subject"] or (lab or None) != entry["label"]:
                raise DataFileError(f"{path}:{lineno}: subject/label changes inside sequence {sid}")
            entry["frames"].append(coords)
    if not seqs:
        raise DataFileError(f"{path}: no frames")
    out = []
    for sid, e in seqs.items():
        frames = np.array(e["frames"], dtype=np.float64).reshape(-1, J, 3)
        try:
            out.append(Sequence(frames, label=e["label"], subject=e["subject"], seq_id=sid))
        except ValueError as exc:
            raise DataFileError(f"{path}: sequence {sid}: {exc}") from exc
    return out
