"""File interchange: CSV observations in, JSON / RCOV binary estimates out,
plus run manifests with reproducibility digests."""

from __future__ import annotations

import csv
import hashlib
import json
import struct

import numpy as np

from .errors import DataError

RCOV_MAGIC = b"RCOV"
RCOV_VERSION = 1
# magic (4) + u32 version + u32 dim + 4 reserved bytes = 16-byte header
_RCOV_HEADER = struct.Struct("<4sII4x")


def read_csv_matrix(path, header=False):
    """Read an (n, d) observation matrix, one row per observation.

    Malformed cells are reported with a 1-based row/column diagnostic.
    """
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(
                    f"{path}: row {lineno} has {len(row)} columns, expected {width}"
                )
            values = []
            for col, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError as exc:
                    raise DataError(
                        f"{path}: row {lineno}, column {col}: "
                        f"cannot parse {cell.strip()!r} as a number"
                    ) from exc
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    X = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: non-finite values in input")
    return X


def read_csv_vector(path, header=False):
    X = read_csv_matrix(path, header=header)
    if X.shape[1] != 1:
        raise DataError(f"{path}: expected a single column, got {X.shape[1]}")
    return X[:, 0]


def matrix_to_lists(A):
    """Row-major nested lists for JSON serialization (repr round-trips bits)."""
    return [[float(v) for v in row] for row in np.asarray(A)]


def write_rcov(path, A):
    """Binary matrix dump: 16-byte header then row-major little-endian f64."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    d = A.shape[0]
    if A.shape != (d, d):
        raise DataError("RCOV files hold square matrices")
    with open(path, "wb") as fh:
        fh.write(_RCOV_HEADER.pack(RCOV_MAGIC, RCOV_VERSION, d))
        fh.write(A.astype("<f8", copy=False).tobytes(order="C"))


def read_rcov(path):
    with open(path, "rb") as fh:
        head = fh.read(_RCOV_HEADER.size)
        if len(head) != _RCOV_HEADER.size:
            raise DataError(f"{path}: truncated RCOV header")
        magic, version, d = _RCOV_HEADER.unpack(head)
        if magic != RCOV_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}")
        if version != RCOV_VERSION:
            raise DataError(f"{path}: unsupported RCOV version {version}")
        body = fh.read(8 * d * d)
    if len(body) != 8 * d * d:
        raise DataError(f"{path}: truncated RCOV body")
    return np.frombuffer(body, dtype="<f8").reshape(d, d).copy()


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def content_digest(obj):
    """sha256 over the canonical JSON form of the deterministic payload."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_report(path, payload, nondeterministic_keys=()):
    """Write a JSON report carrying a digest over its deterministic content."""
    deterministic = {
        k: v for k, v in payload.items() if k not in set(nondeterministic_keys)
    }
    payload = dict(payload)
    payload["digest"] = content_digest(deterministic)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return payload["digest"]
