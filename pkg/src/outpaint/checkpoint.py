"""Versioned single-file checkpoint container.

Layout: a magic line, a JSON header line carrying the format version and
the SHA-256 and length of the payload, then the ``torch.save`` payload.
The header is checked before anything is deserialised, so a version
mismatch or a truncated file never yields partial state.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from pathlib import Path
from typing import Any

import torch

from .errors import CorruptCheckpointError, IncompatibleCheckpointError

MAGIC = b"OUTPAINT-CHECKPOINT\n"
FORMAT_VERSION = 1


def write_container(payload: dict[str, Any], path) -> None:
    buf = io.BytesIO()
    torch.save(payload, buf)
    body = buf.getvalue()
    header = {"format_version": FORMAT_VERSION,
              "sha256": hashlib.sha256(body).hexdigest(),
              "length": len(body)}
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(body)
    os.replace(tmp, path)


def read_container(path) -> dict[str, Any]:
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.readline()
        header_line = fh.readline()
        body = fh.read()
    if magic != MAGIC:
        raise CorruptCheckpointError(f"{path} is not an outpaint checkpoint")
    try:
        header = json.loads(header_line)
        version = header["format_version"]
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptCheckpointError(f"{path} has an unreadable header") from exc
    if version != FORMAT_VERSION:
        raise IncompatibleCheckpointError(
            f"{path} has format version {version!r}; this build reads version {FORMAT_VERSION}")
    if len(body) != header.get("length") or hashlib.sha256(body).hexdigest() != header.get("sha256"):
        raise CorruptCheckpointError(f"{path} is truncated or corrupted (checksum mismatch)")
    try:
        return torch.load(io.BytesIO(body), map_location="cpu", weights_only=True)
    except Exception as exc:  # checksum passed, so this is a writer-side bug
        raise CorruptCheckpointError(f"{path} payload cannot be decoded: {exc}") from exc
