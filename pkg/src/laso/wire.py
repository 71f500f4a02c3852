"""Byte-level codec helpers.

All integers are big-endian. Variable-length fields carry a 4-byte
length prefix. Decode failures raise WireFormatError with the structure
kind, the field being read, and the byte offset of the failure.
"""

from __future__ import annotations

import struct


class WireFormatError(ValueError):
    def __init__(self, kind: str, field: str, offset: int, message: str):
        super().__init__(f"{kind}: {message} (field {field!r} at offset {offset})")
        self.kind = kind
        self.field = field
        self.offset = offset


class Reader:
    """Sequential reader over one serialized structure."""

    def __init__(self, data: bytes, kind: str):
        self._data = data
        self._pos = 0
        self.kind = kind

    @property
    def offset(self) -> int:
        return self._pos

    def fail(self, field: str, message: str, offset: int | None = None):
        raise WireFormatError(self.kind, field, self._pos if offset is None else offset, message)

    def take(self, n: int, field: str) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            self.fail(field, f"truncated: need {n} bytes, {len(self._data) - self._pos} left")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def u8(self, field: str) -> int:
        return self.take(1, field)[0]

    def u32(self, field: str) -> int:
        return struct.unpack(">I", self.take(4, field))[0]

    def u64(self, field: str) -> int:
        return struct.unpack(">Q", self.take(8, field))[0]

    def block(self, field: str) -> bytes:
        # u32 length prefix, then that many raw bytes
        return self.take(self.u32(field), field)

    def expect_magic(self, magic: bytes, field: str = "magic"):
        start = self._pos
        got = self.take(len(magic), field)
        if got != magic:
            self.fail(field, f"bad magic {got!r}, expected {magic!r}", offset=start)

    def expect_eof(self):
        if self._pos != len(self._data):
            self.fail("trailing", f"{len(self._data) - self._pos} unexpected trailing bytes")


class Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def raw(self, data: bytes) -> "Writer":
        self._parts.append(bytes(data))
        return self

    def u8(self, value: int) -> "Writer":
        return self.raw(struct.pack(">B", value))

    def u32(self, value: int) -> "Writer":
        return self.raw(struct.pack(">I", value))

    def u64(self, value: int) -> "Writer":
        return self.raw(struct.pack(">Q", value))

    def block(self, data: bytes) -> "Writer":
        return self.u32(len(data)).raw(data)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)
