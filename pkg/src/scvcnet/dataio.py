"""On-disk formats: raw recording directories, features.json, bank/model JSON.

Raw layout, one directory per recording::

    <root>/<participant>/meta.json      {"fs", "channel_labels", "phases", ["participant_id"]}
    <root>/<participant>/signal.f32le   row-major channels x time, little-endian float32
                         (or signal.csv, one column per channel, header = labels)
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .harness import write_atomic
from .signal_prep import DATABASES, EpochFeatures, PrepError, RawRecording

SCHEMA_VERSION = 1


class DataError(ValueError):
    """Missing or ill-formed input files."""


def _parse_phases(raw, where):
    phases = []
    for ph in raw:
        if isinstance(ph, dict):
            try:
                phases.append((ph["name"], float(ph["start"]), float(ph["end"])))
            except KeyError as exc:
                raise DataError(f"{where}: phase entry missing field {exc}") from None
        elif isinstance(ph, (list, tuple)) and len(ph) == 3:
            phases.append((str(ph[0]), float(ph[1]), float(ph[2])))
        else:
            raise DataError(f"{where}: field 'phases' entries must be [name, start_s, end_s]")
    return phases


def load_recording(path, database_id=""):
    path = Path(path)
    meta_path = path / "meta.json"
    if not meta_path.is_file():
        raise DataError(f"{meta_path}: file not found")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{meta_path}: invalid JSON ({exc})") from None
    for key in ("fs", "phases"):
        if key not in meta:
            raise DataError(f"{meta_path}: missing field '{key}'")
    labels = meta.get("channel_labels")
    bin_path, csv_path = path / "signal.f32le", path / "signal.csv"
    if bin_path.is_file():
        if not labels:
            raise DataError(f"{meta_path}: missing field 'channel_labels'")
        flat = np.fromfile(bin_path, dtype="<f4")
        if flat.size % len(labels):
            raise DataError(
                f"{bin_path}: {flat.size} values do not divide into {len(labels)} channels")
        samples = flat.reshape(len(labels), -1).astype(np.float64)
    elif csv_path.is_file():
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise DataError(f"{csv_path}: empty file")
        header = [h.strip() for h in rows[0]]
        if labels and [str(x) for x in labels] != header:
            raise DataError(f"{csv_path}: header does not match meta.json 'channel_labels'")
        labels = header
        try:
            samples = np.array(rows[1:], dtype=np.float64).T
        except ValueError as exc:
            raise DataError(f"{csv_path}: non-numeric sample ({exc})") from None
    else:
        raise DataError(f"{path}: no signal.f32le or signal.csv")
    try:
        return RawRecording(samples, float(meta["fs"]), labels,
                            _parse_phases(meta["phases"], meta_path),
                            participant_id=str(meta.get("participant_id", path.name)),
                            database_id=str(meta.get("database_id", database_id)).upper())
    except PrepError as exc:
        raise DataError(f"{path}: {exc}") from None


def save_recording(rec, path, fmt="f32le"):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {"fs": rec.fs, "channel_labels": list(rec.channel_labels),
            "phases": [list(p) for p in rec.phases], "participant_id": rec.participant_id,
            "database_id": rec.database_id}
    (path / "meta.json").write_text(json.dumps(meta, indent=1))
    if fmt == "f32le":
        rec.samples.astype("<f4").tofile(path / "signal.f32le")
    elif fmt == "csv":
        with open(path / "signal.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(rec.channel_labels)
            w.writerows(rec.samples.T.tolist())
    else:
        raise ValueError(f"unknown format {fmt!r}")


def recording_dirs(root):
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root}: raw data directory not found")
    dirs = sorted(p for p in root.iterdir() if p.is_dir() and (p / "meta.json").exists())
    if not dirs:
        raise DataError(f"{root}: no recording directories (expected <participant>/meta.json)")
    return dirs


# ---------------------------------------------------------------- features

def params_hash(prep_params):
    blob = json.dumps({"schema_version": SCHEMA_VERSION, **prep_params}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def features_path(features_dir, database_id):
    return Path(features_dir) / database_id / "features.json"


def features_to_json(epochs, database_id, prep_params):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "database_id": database_id,
        "params": prep_params,
        "params_hash": params_hash(prep_params),
        "n_epochs": len(epochs),
        "epochs": [e.to_dict() for e in epochs],
    }
    return json.dumps(doc, separators=(",", ":"), sort_keys=True) + "\n"


def write_features(path, epochs, database_id, prep_params):
    write_atomic(path, features_to_json(epochs, database_id, prep_params))


def read_features(path, expected_hash=None, force=False):
    """Load features.json; refuse stale files unless ``force``."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: feature file not found; run `scvcnet features` first")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported schema_version {doc.get('schema_version')!r}")
    if expected_hash is not None and doc.get("params_hash") != expected_hash and not force:
        raise DataError(
            f"{path}: built with different preprocessing parameters; rerun `scvcnet features` "
            "or pass --force")
    return [EpochFeatures.from_dict(e) for e in doc["epochs"]]


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def import_npz(path, database_id):
    """Epochs from an .npz holding X (N,16,10), Y (N,16,10), label, participant, phase, segment_index."""
    database_id = database_id.upper()
    if database_id not in DATABASES:
        raise DataError(f"unknown database {database_id!r}")
    try:
        z = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DataError(f"{path}: cannot read ({exc})") from None
    need = ("X", "Y", "label", "participant", "phase", "segment_index")
    missing = [k for k in need if k not in z.files]
    if missing:
        raise DataError(f"{path}: missing arrays {missing}")
    X, Y = np.asarray(z["X"], float), np.asarray(z["Y"], float)
    if X.ndim != 3 or X.shape[1:] != (16, 10) or Y.shape != X.shape:
        raise DataError(f"{path}: X and Y must both be (N, 16, 10), got {X.shape} / {Y.shape}")
    return [EpochFeatures(X=X[i], Y=Y[i], label=int(z["label"][i]),
                          participant_id=str(z["participant"][i]), database_id=database_id,
                          phase=str(z["phase"][i]), segment_index=int(z["segment_index"][i]))
            for i in range(X.shape[0])]


def remove_quietly(path):
    try:
        os.unlink(path)
    except FileNotFoundError:
        pass
