"""Canonical byte encoding shared by hashing, signing, and persistence.

Every value that is hashed, signed, or written to disk reduces to five
primitives, applied field by field in declared order with no padding:

* integers: 8-byte big-endian two's complement
* byte strings and UTF-8 text: 4-byte big-endian byte length, then the bytes
* lists: 4-byte big-endian element count, then each element in order
* optional fields: one presence byte (0x00 or 0x01), then the value if present
* enum and union values: a single leading tag byte

Fixed-point quantities (topic scores, NFT weights) travel as integer
micro-units (value * 10^6), so encoded bytes are exact and platform
independent. The encoding is injective over structurally valid values:
equal values produce equal bytes and distinct values distinct bytes.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from .errors import DecodeError

HASH_LEN = 32
ZERO_HASH = bytes(HASH_LEN)

MICRO = 10**6

# Integers stay in the signed 64-bit range so the two's-complement encoding
# of a non-negative value matches its unsigned big-endian form.
INT_MAX = 2**63 - 1
INT_MIN = -(2**63)


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def check_hash32(value: bytes, what: str = "hash") -> bytes:
    if not isinstance(value, bytes) or len(value) != HASH_LEN:
        raise ValueError(f"{what} must be exactly {HASH_LEN} bytes")
    return value


def to_micro(value: float) -> int:
    """Quantize a fixed-point value with 6 decimal places to micro-units."""
    return int(round(value * MICRO))


def from_micro(units: int) -> float:
    return units / MICRO


# --- encoders -------------------------------------------------------------

def enc_int(value: int) -> bytes:
    if not INT_MIN <= value <= INT_MAX:
        raise ValueError(f"integer out of encodable range: {value}")
    return struct.pack(">q", value)


def enc_uint(value: int) -> bytes:
    if value < 0:
        raise ValueError(f"expected non-negative integer, got {value}")
    return enc_int(value)


def enc_bytes(value: bytes) -> bytes:
    if len(value) > 0xFFFFFFFF:
        raise ValueError("byte string too long for 4-byte length prefix")
    return struct.pack(">I", len(value)) + value


def enc_text(value: str) -> bytes:
    return enc_bytes(value.encode("utf-8"))


def enc_hash(value: bytes) -> bytes:
    return enc_bytes(check_hash32(value))


def enc_list(items, enc_item) -> bytes:
    parts = [struct.pack(">I", len(items))]
    parts.extend(enc_item(item) for item in items)
    return b"".join(parts)


def enc_optional(value, enc_item) -> bytes:
    if value is None:
        return b"\x00"
    return b"\x01" + enc_item(value)


def enc_tag(tag: int) -> bytes:
    if not 0 <= tag <= 0xFF:
        raise ValueError(f"tag out of range: {tag}")
    return bytes([tag])


def enc_bool(value: bool) -> bytes:
    return b"\x01" if value else b"\x00"


# --- decoder --------------------------------------------------------------

class Reader:
    """Sequential decoder over a canonical byte string."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise DecodeError(
                f"truncated input: wanted {n} bytes at offset {self._pos}"
            )
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def read_int(self) -> int:
        return struct.unpack(">q", self._take(8))[0]

    def read_uint(self) -> int:
        value = self.read_int()
        if value < 0:
            raise DecodeError(f"expected non-negative integer, got {value}")
        return value

    def read_bytes(self) -> bytes:
        (length,) = struct.unpack(">I", self._take(4))
        return self._take(length)

    def read_text(self) -> str:
        raw = self.read_bytes()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid UTF-8 text: {exc}") from exc

    def read_hash(self) -> bytes:
        raw = self.read_bytes()
        if len(raw) != HASH_LEN:
            raise DecodeError(f"expected {HASH_LEN}-byte hash, got {len(raw)}")
        return raw

    def read_list(self, read_item) -> list:
        (count,) = struct.unpack(">I", self._take(4))
        return [read_item(self) for _ in range(count)]

    def read_optional(self, read_item):
        flag = self._take(1)[0]
        if flag == 0:
            return None
        if flag != 1:
            raise DecodeError(f"invalid presence byte: {flag}")
        return read_item(self)

    def read_tag(self) -> int:
        return self._take(1)[0]

    def read_bool(self) -> bool:
        flag = self._take(1)[0]
        if flag > 1:
            raise DecodeError(f"invalid boolean byte: {flag}")
        return flag == 1

    def expect_end(self) -> None:
        if self._pos != len(self._data):
            raise DecodeError(
                f"{len(self._data) - self._pos} trailing bytes after value"
            )

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos


# --- content addresses ----------------------------------------------------

@dataclass(frozen=True)
class ContentAddress:
    """Name of an off-chain blob: fold root over its chunks plus byte length."""

    root: bytes
    total_len: int

    def __post_init__(self):
        check_hash32(self.root, "content root")
        if self.total_len < 0:
            raise ValueError("total_len must be non-negative")

    def encode(self) -> bytes:
        return enc_hash(self.root) + enc_uint(self.total_len)

    @classmethod
    def decode(cls, reader: Reader) -> "ContentAddress":
        root = reader.read_hash()
        total_len = reader.read_uint()
        return cls(root, total_len)

    @property
    def hex_root(self) -> str:
        return self.root.hex()
