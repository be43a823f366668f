"""CSV and JSON outputs with a provenance header.

CSV files start with ``# key: value`` comment lines followed by an RFC 4180
table. Floats are written with ``repr`` so reruns produce identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .errors import InputError


def provenance(config_hash: str, seed: int, **extra) -> dict:
    out = {"config_hash": config_hash, "seed": int(seed), "version": __version__}
    out.update(extra)
    return out


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence], header: Mapping) -> str:
    buf = io.StringIO(newline="")
    for key, value in header.items():
        buf.write(f"# {key}: {value}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_sha256(path) -> str:
    with open(path, "rb") as fh:
        return sha256_bytes(fh.read())


def _write_bytes(path, data: bytes) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
    return sha256_bytes(data)


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], header: Mapping) -> str:
    """Write the table and return the SHA-256 of the file contents."""
    return _write_bytes(path, csv_text(columns, rows, header).encode("utf-8"))


def write_json(path, payload: Mapping, header: Mapping) -> str:
    doc = {"provenance": dict(header), **payload}
    text = json.dumps(doc, indent=2, sort_keys=False, default=_json_default) + "\n"
    return _write_bytes(path, text.encode("utf-8"))


def write_text(path, text: str) -> str:
    return _write_bytes(path, text.encode("utf-8"))


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Return (provenance header, column names, raw rows)."""
    header: dict = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            header[key.strip()] = value.strip()
        elif line:
            body.append(line)
    if not body:
        raise InputError(f"{path}: no table found")
    table = list(csv.reader(body))
    return header, table[0], table[1:]


def read_series(path, x: str = "t", y: str = "mean_xc") -> tuple[dict, np.ndarray, np.ndarray]:
    header, cols, rows = read_csv(path)
    try:
        ix, iy = cols.index(x), cols.index(y)
    except ValueError:
        raise InputError(f"{path}: expected columns {x!r} and {y!r}, found {cols}") from None
    try:
        data = np.array([[float(r[ix]), float(r[iy])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: malformed row ({exc})") from None
    return header, data[:, 0], data[:, 1]
