"""Canonical byte encoding primitives.

Every hash input in petra is built from length-prefixed parts so that
concatenation is unambiguous: ``lp(a) + lp(b)`` can never collide with
``lp(a') + lp(b')`` for a different split of the same bytes.
"""

from __future__ import annotations

import hashlib
import struct

U32 = struct.Struct(">I")
U16 = struct.Struct(">H")


def lp(data: bytes) -> bytes:
    """4-byte big-endian length prefix followed by the bytes."""
    return U32.pack(len(data)) + data


def lp_str(text: str) -> bytes:
    return lp(text.encode("utf-8"))


class ByteReader:
    """Sequential reader over an immutable buffer with bounds checking."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise ValueError("truncated buffer")
        out = self._data[self._pos:self._pos + n]
        self._pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return U16.unpack(self.take(2))[0]

    def u32(self) -> int:
        return U32.unpack(self.take(4))[0]

    def lp_bytes(self) -> bytes:
        return self.take(self.u32())

    def lp_text(self) -> str:
        return self.lp_bytes().decode("utf-8")

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def expect_end(self) -> None:
        if self.remaining:
            raise ValueError("trailing bytes")


def hash_parts(*parts: bytes) -> bytes:
    """SHA-256 over the length-prefixed concatenation of ``parts``."""
    h = hashlib.sha256()
    for part in parts:
        h.update(U32.pack(len(part)))
        h.update(part)
    return h.digest()
