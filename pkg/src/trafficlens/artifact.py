"""Versioned single-file model container.

Layout (all integers big-endian)::

    b"TLNS" | version:u16 | header_len:u32 | header (UTF-8 JSON) | payload | sha256(all preceding bytes)

The header records the model kind, the schema fingerprint, JSON parameters
and a table of arrays (name, dtype, shape, offset, byte count) stored back
to back in the payload in C order, little-endian. Writing is
deterministic: the same model always yields the same bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ArtifactError, SchemaError

MAGIC = b"TLNS"
FORMAT_VERSION = 1
_PREFIX = struct.Struct(">4sHI")
_DIGEST = 32


def fingerprint(schema) -> str:
    """sha256 of the canonical JSON form of a schema description."""
    text = json.dumps(schema, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass(frozen=True)
class Artifact:
    kind: str
    version: int
    schema: dict
    schema_fingerprint: str
    params: dict
    arrays: dict

    @property
    def state(self) -> dict:
        return {"params": self.params, "arrays": self.arrays}

    def require_kind(self, *kinds) -> "Artifact":
        if self.kind not in kinds:
            raise ArtifactError(f"artifact holds a {self.kind!r} model, expected {' or '.join(kinds)}")
        return self


def to_bytes(kind: str, state: dict, schema: dict) -> bytes:
    arrays = {}
    table = []
    offset = 0
    for name in sorted(state.get("arrays", {})):
        arr = np.asarray(state["arrays"][name])
        if arr.dtype.kind not in "biuf":
            raise ArtifactError(f"array {name!r} has unsupported dtype {arr.dtype}")
        arr = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<"))
        arrays[name] = arr
        table.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                      "offset": offset, "nbytes": arr.nbytes})
        offset += arr.nbytes
    header = {"kind": kind, "schema": schema, "schema_fingerprint": fingerprint(schema),
              "params": state.get("params", {}), "arrays": table}
    head = json.dumps(header, sort_keys=True, separators=(",", ":"), default=_json_default).encode("utf-8")
    body = _PREFIX.pack(MAGIC, FORMAT_VERSION, len(head)) + head + b"".join(a.tobytes() for a in arrays.values())
    return body + hashlib.sha256(body).digest()


def from_bytes(blob: bytes, source: str = "<bytes>") -> Artifact:
    if len(blob) < _PREFIX.size + _DIGEST:
        raise ArtifactError("file too short to be a model artifact", source)
    magic, version, head_len = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise ArtifactError("not a model artifact (bad magic)", source)
    if version != FORMAT_VERSION:
        raise ArtifactError(f"unsupported artifact version {version} (this build reads {FORMAT_VERSION})", source)
    body, digest = blob[:-_DIGEST], blob[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise ArtifactError("checksum mismatch; the file is corrupted", source)
    start = _PREFIX.size
    try:
        header = json.loads(body[start:start + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"unreadable header: {exc}", source) from None
    if fingerprint(header["schema"]) != header["schema_fingerprint"]:
        raise SchemaError("schema fingerprint does not match the stored schema", source)
    payload = body[start + head_len:]
    arrays = {}
    for entry in header["arrays"]:
        end = entry["offset"] + entry["nbytes"]
        if end > len(payload):
            raise ArtifactError(f"array {entry['name']!r} runs past the payload", source)
        arr = np.frombuffer(payload[entry["offset"]:end], dtype=np.dtype(entry["dtype"]))
        arrays[entry["name"]] = arr.reshape(entry["shape"]).astype(arr.dtype.newbyteorder("="))
    return Artifact(kind=header["kind"], version=version, schema=header["schema"],
                    schema_fingerprint=header["schema_fingerprint"], params=header["params"], arrays=arrays)


def save(path, kind: str, state: dict, schema: dict) -> str:
    """Write the artifact and return its schema fingerprint."""
    blob = to_bytes(kind, state, schema)
    Path(path).write_bytes(blob)
    return fingerprint(schema)


def load(path) -> Artifact:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise ArtifactError(f"cannot read artifact: {exc.strerror}", str(path)) from None
    return from_bytes(blob, str(path))
