"""Tabular text formats for features, raw vectors and the synth manifest.

Every file starts with a ``# radiofp-<kind> v1`` line followed by a CSV
header.  Floats are written with ``repr`` so a read/write cycle is lossless.
"""
from __future__ import annotations

import csv
import json
from typing import Iterable

import numpy as np

from .features import FEATURE_NAMES, RAW_LENGTH, FeatureVector, RawVector
from .learn.dataset import Dataset, Representation

FEATURES_HEADER = "# radiofp-features v1"
LINK_FEATURES_HEADER = "# radiofp-link-features v1"
RAW_HEADER = "# radiofp-raw v1"


class DataFormatError(ValueError):
    pass


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def write_features(path, rows: Iterable[tuple[FeatureVector, str]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(FEATURES_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vehicle_id", *FEATURE_NAMES, "label"])
        for fv, label in rows:
            w.writerow([fv.vehicle_id, *(_num(v) for v in fv.as_array()), label])


def write_link_features(path, rows: Iterable[tuple[int, FeatureVector, str]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(LINK_FEATURES_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vehicle_id", "link_id", *FEATURE_NAMES, "label"])
        for link_id, fv, label in rows:
            w.writerow([fv.vehicle_id, link_id, *(_num(v) for v in fv.as_array()), label])


def write_raw(path, rows: Iterable[tuple[RawVector, str]], length: int = RAW_LENGTH) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(RAW_HEADER + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vehicle_id", "link_id", *(f"x{i}" for i in range(length)), "label"])
        for rv, label in rows:
            w.writerow([rv.vehicle_id, rv.link_id, *(_num(v) for v in rv.values), label])


def _read_table(path, header: str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != header:
            raise DataFormatError(f"{path}:1: expected {header!r}, found {first!r}")
        reader = csv.reader(fh)
        try:
            columns = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}:2: missing column header") from None
        rows = []
        for no, row in enumerate(reader, start=3):
            if not row:
                continue
            if len(row) != len(columns):
                raise DataFormatError(f"{path}:{no}: expected {len(columns)} columns, got {len(row)}")
            rows.append(row)
    return columns, rows


def _floats(path, row, cols, offset) -> list[float]:
    try:
        return [float(v) for v in row[cols]]
    except ValueError as exc:
        raise DataFormatError(f"{path}: row {offset}: {exc}") from None


def detect_kind(path) -> str:
    with open(path) as fh:
        first = fh.readline().strip()
    for kind, header in (("features", FEATURES_HEADER), ("raw", RAW_HEADER), ("link_features", LINK_FEATURES_HEADER)):
        if first == header:
            return kind
    raise DataFormatError(f"{path}:1: unrecognised data file header {first!r}")


def read_dataset(path) -> Dataset:
    """Feature or raw-vector file as a labelled Dataset."""
    kind = detect_kind(path)
    if kind == "link_features":
        raise DataFormatError(f"{path}: per-link file; use read_link_datasets")
    header = FEATURES_HEADER if kind == "features" else RAW_HEADER
    columns, rows = _read_table(path, header)
    first_value = 1 if kind == "features" else 2
    X, y, ids = [], [], []
    for i, row in enumerate(rows):
        X.append(_floats(path, row, slice(first_value, -1), i))
        y.append(row[-1])
        ids.append(int(row[0]))
    rep = Representation.FEATURE_VECTOR if kind == "features" else Representation.RAW_DATA
    dims = len(columns) - first_value - 1
    try:
        return Dataset(np.array(X, dtype=float).reshape(len(X), dims), y, rep, ids)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


def read_link_datasets(path) -> dict[int, Dataset]:
    columns, rows = _read_table(path, LINK_FEATURES_HEADER)
    grouped: dict[int, tuple[list, list, list]] = {i: ([], [], []) for i in range(1, 10)}
    for i, row in enumerate(rows):
        X, y, ids = grouped[int(row[1])]
        X.append(_floats(path, row, slice(2, -1), i))
        y.append(row[-1])
        ids.append(int(row[0]))
    return {
        lid: Dataset(np.array(X, dtype=float).reshape(len(X), len(FEATURE_NAMES)), y, Representation.FEATURE_VECTOR, ids)
        for lid, (X, y, ids) in grouped.items()
    }


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for no, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise DataFormatError(f"{path}:{no}: {exc.msg}") from None
    return out
