"""Small versioned binary file container with a checksum trailer.

Layout: magic(4) | version u32 LE | payload_len u64 LE | payload |
sha256(bytes so far). Used for model and codebook files.
"""

from __future__ import annotations

import hashlib
import struct


class ContainerError(ValueError):
    """Bad magic, unknown version, truncation or checksum mismatch."""


def write_container(path, magic: bytes, version: int, payload: bytes) -> None:
    assert len(magic) == 4
    head = magic + struct.pack("<IQ", version, len(payload))
    digest = hashlib.sha256(head + payload).digest()
    with open(path, "wb") as fh:
        fh.write(head + payload + digest)


def read_container(path, magic: bytes, version: int) -> bytes:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 + 12 + 32:
        raise ContainerError("file truncated")
    if blob[:4] != magic:
        raise ContainerError(f"bad magic {blob[:4]!r}, expected {magic!r}")
    got_version, length = struct.unpack("<IQ", blob[4:16])
    if got_version != version:
        raise ContainerError(f"unsupported format version {got_version}")
    payload = blob[16 : 16 + length]
    trailer = blob[16 + length :]
    if len(payload) != length or len(trailer) != 32:
        raise ContainerError("file truncated")
    if hashlib.sha256(blob[: 16 + length]).digest() != trailer:
        raise ContainerError("checksum mismatch")
    return payload
