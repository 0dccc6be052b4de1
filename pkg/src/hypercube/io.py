"""Versioned file formats: tables, factor cubes, trajectories, sweeps, manifests.

Structured files are JSON with an explicit ``schema_version``; readers
refuse versions they do not know.  Factor cubes use a small binary
container::

    b"HCFACTOR"  | uint32 header length (little endian) | JSON header | cubes

where the header holds ``schema_version``, ``n``, ``tied`` and
``layout_tag`` and the cubes follow as row-major little-endian float64,
``A`` then ``B`` then ``C`` (only ``A`` when tied).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import struct
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .optable import OpTable
from .tensor import LAYOUT_TAG, ModelParams

SCHEMA_VERSION = 1
FACTOR_MAGIC = b"HCFACTOR"

TABLE_FORMAT = "hypercube.table"
FACTORS_JSON_FORMAT = "hypercube.factors"
MANIFEST_FORMAT = "hypercube.manifest"


class SchemaError(ValueError):
    """A file is malformed or carries an unsupported schema version."""


def _check_version(doc: dict, what: str):
    if not isinstance(doc, dict):
        raise SchemaError(f"{what}: expected a JSON object")
    v = doc.get("schema_version")
    if v != SCHEMA_VERSION:
        raise SchemaError(f"{what}: unsupported schema_version {v!r} (supported: {SCHEMA_VERSION})")


def _check_format(doc: dict, fmt: str, what: str):
    got = doc.get("format", fmt)
    if got != fmt:
        raise SchemaError(f"{what}: expected format {fmt!r}, got {got!r}")


def write_json(path, doc: dict):
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None


# -- tables -----------------------------------------------------------------

def table_to_dict(op: OpTable) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "format": TABLE_FORMAT,
        "kind": op.kind,
        "n": op.n,
        "identity": op.identity,
        "table": op.table.tolist(),
    }
    if not op.defined.all():
        doc["undefined_cells"] = np.argwhere(~op.defined).tolist()
    return doc


def table_from_dict(doc: dict, what: str = "table") -> OpTable:
    _check_version(doc, what)
    _check_format(doc, TABLE_FORMAT, what)
    try:
        n = int(doc["n"])
        table = np.asarray(doc["table"], dtype=np.int64)
        kind = str(doc["kind"])
        identity = doc.get("identity")
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{what}: missing or bad field ({exc})") from None
    if table.shape != (n, n):
        raise SchemaError(f"{what}: table shape {table.shape} does not match n={n}")
    defined = np.ones((n, n), dtype=bool)
    for cell in doc.get("undefined_cells", []):
        a, b = cell
        defined[a, b] = False
    try:
        return OpTable(n=n, table=table, kind=kind, identity=None if identity is None else int(identity),
                       defined=defined)
    except ValueError as exc:
        raise SchemaError(f"{what}: {exc}") from None


def save_table(op: OpTable, path):
    write_json(path, table_to_dict(op))


def load_table(path) -> OpTable:
    return table_from_dict(read_json(path), str(path))


# -- factors ----------------------------------------------------------------

def factors_to_bytes(params: ModelParams) -> bytes:
    header = json.dumps({
        "schema_version": SCHEMA_VERSION,
        "n": params.n,
        "tied": bool(params.tied),
        "layout_tag": LAYOUT_TAG,
    }, sort_keys=True).encode()
    parts = [FACTOR_MAGIC, struct.pack("<I", len(header)), header]
    for X in params.free():
        parts.append(np.ascontiguousarray(X, dtype="<f8").tobytes())
    return b"".join(parts)


def factors_from_bytes(buf: bytes, what: str = "factors") -> ModelParams:
    if buf[:8] != FACTOR_MAGIC:
        raise SchemaError(f"{what}: not a factor file (bad magic)")
    if len(buf) < 12:
        raise SchemaError(f"{what}: truncated header")
    (hlen,) = struct.unpack("<I", buf[8:12])
    try:
        header = json.loads(buf[12:12 + hlen])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{what}: bad header ({exc})") from None
    _check_version(header, what)
    if header.get("layout_tag") != LAYOUT_TAG:
        raise SchemaError(f"{what}: unknown layout_tag {header.get('layout_tag')!r}")
    n = int(header["n"])
    tied = bool(header["tied"])
    count = 1 if tied else 3
    body = buf[12 + hlen:]
    if len(body) != count * n**3 * 8:
        raise SchemaError(f"{what}: expected {count * n**3 * 8} data bytes, found {len(body)}")
    cubes = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(count, n, n, n)
    if tied:
        return ModelParams.from_shared(cubes[0].copy())
    return ModelParams(cubes[0].copy(), cubes[1].copy(), cubes[2].copy())


def save_factors(params: ModelParams, path):
    Path(path).write_bytes(factors_to_bytes(params))


def load_factors(path) -> ModelParams:
    return factors_from_bytes(Path(path).read_bytes(), str(path))


def factors_to_dict(params: ModelParams) -> dict:
    """Readable export for small ``n``; round-trips exactly."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "format": FACTORS_JSON_FORMAT,
        "n": params.n,
        "tied": bool(params.tied),
        "layout_tag": LAYOUT_TAG,
        "A": params.A.tolist(),
    }
    if not params.tied:
        doc["B"] = params.B.tolist()
        doc["C"] = params.C.tolist()
    return doc


def factors_from_dict(doc: dict, what: str = "factors") -> ModelParams:
    _check_version(doc, what)
    _check_format(doc, FACTORS_JSON_FORMAT, what)
    if doc.get("layout_tag") != LAYOUT_TAG:
        raise SchemaError(f"{what}: unknown layout_tag {doc.get('layout_tag')!r}")
    A = np.asarray(doc["A"], dtype=float)
    if doc.get("tied"):
        return ModelParams.from_shared(A)
    return ModelParams(A, np.asarray(doc["B"], dtype=float), np.asarray(doc["C"], dtype=float))


# -- trajectories and sweeps -------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_trajectory(records, path):
    from .training import TRAJECTORY_COLUMNS

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for rec in records:
            w.writerow([_fmt(v) for v in rec.as_row()])


def read_trajectory(path) -> list[dict]:
    from .training import TRAJECTORY_COLUMNS

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRAJECTORY_COLUMNS:
        raise SchemaError(f"{path}: header does not match trajectory columns")
    out = []
    for row in rows[1:]:
        d = dict(zip(TRAJECTORY_COLUMNS, row))
        out.append({k: (int(v) if k == "step" else float(v)) for k, v in d.items()})
    return out


def write_sweep(rows, path):
    from .complexity import SWEEP_COLUMNS

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in SWEEP_COLUMNS])


def read_sweep(path):
    """Rows of a sweep CSV as :class:`SweepRow` objects."""
    from .complexity import SWEEP_COLUMNS, SweepRow

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != SWEEP_COLUMNS:
        raise SchemaError(f"{path}: header does not match sweep columns {SWEEP_COLUMNS}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(SWEEP_COLUMNS):
            raise SchemaError(f"{path}:{i}: expected {len(SWEEP_COLUMNS)} fields, got {len(row)}")
        d = dict(zip(SWEEP_COLUMNS, row))
        try:
            out.append(SweepRow(
                kind=d["kind"], variant=d["variant"], fraction=float(d["fraction"]), seed=int(d["seed"]),
                steps=int(d["steps"]), converged=d["converged"] == "true", test_acc=float(d["test_acc"]),
                h_final=float(d["h_final"]),
            ))
        except ValueError as exc:
            raise SchemaError(f"{path}:{i}: {exc}") from None
    return out


# -- manifests ----------------------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def make_manifest(command: str, config: dict, seeds: dict, inputs=(), outputs=(), started: str | None = None,
                  extra: dict | None = None) -> dict:
    """Everything needed to re-run ``command``: resolved config, seeds, input digests."""
    from . import __version__

    now = datetime.now(timezone.utc).isoformat(timespec="seconds")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "format": MANIFEST_FORMAT,
        "command": command,
        "tool_version": __version__,
        "config": _jsonable(config),
        "seeds": _jsonable(seeds),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
        "started": started or now,
        "finished": now,
    }
    if extra:
        doc["extra"] = _jsonable(extra)
    return doc


def load_manifest(path) -> dict:
    doc = read_json(path)
    _check_version(doc, str(path))
    _check_format(doc, MANIFEST_FORMAT, str(path))
    return doc
