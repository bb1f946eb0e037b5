"""Content-addressed blob store for knowledge payloads, models, and evidence.

Content is split into fixed 256 KiB chunks. A chunk is named by
H(0x02 || chunk bytes); content that fits one chunk uses that hash as its
root, larger content gets a Merkle-style fold over the chunk hashes
(leaf = H(0x00 || chunk_hash), internal = H(0x01 || left || right), an
unpaired node is promoted unchanged). The address pairs the root with the
total byte length, so truncations and extensions always change the address.

On disk: one file per chunk under a two-level hex fan-out
(chunks/ab/cd/abcd...), plus a canonical-encoded manifest per multi-chunk
root (manifests/ab/cd/abcd...). Writing identical content twice is a no-op.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .encoding import ContentAddress, Reader, enc_hash, enc_list, enc_uint, sha256
from .errors import DecodeError, IntegrityFailure, NotFound, StorageFull

CHUNK_SIZE = 262144

_LEAF = b"\x00"
_INTERNAL = b"\x01"
_CHUNK = b"\x02"

DEFAULT_CAPACITY = 1 << 30  # 1 GiB


def chunk_hash(chunk: bytes) -> bytes:
    return sha256(_CHUNK + chunk)


def _fold(hashes: list[bytes]) -> bytes:
    level = [sha256(_LEAF + h) for h in hashes]
    while len(level) > 1:
        nxt = [
            sha256(_INTERNAL + level[i] + level[i + 1])
            for i in range(0, len(level) - 1, 2)
        ]
        if len(level) % 2 == 1:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def split_chunks(content: bytes) -> list[bytes]:
    if not content:
        return [b""]
    return [content[i : i + CHUNK_SIZE] for i in range(0, len(content), CHUNK_SIZE)]


def content_address_of(content: bytes) -> ContentAddress:
    """Pure address computation; put() must agree with this exactly."""
    chunks = split_chunks(content)
    hashes = [chunk_hash(c) for c in chunks]
    if len(hashes) == 1:
        return ContentAddress(hashes[0], len(content))
    return ContentAddress(_fold(hashes), len(content))


@dataclass(frozen=True)
class ChunkManifest:
    chunk_hashes: tuple[bytes, ...]

    def encode(self) -> bytes:
        return enc_uint(CHUNK_SIZE) + enc_list(self.chunk_hashes, enc_hash)

    @classmethod
    def decode_bytes(cls, data: bytes) -> "ChunkManifest":
        r = Reader(data)
        size = r.read_uint()
        if size != CHUNK_SIZE:
            raise DecodeError(f"manifest chunk size {size} != {CHUNK_SIZE}")
        hashes = tuple(r.read_list(Reader.read_hash))
        r.expect_end()
        return cls(hashes)


class ContentStore:
    """Single-node chunk store with a configurable byte capacity."""

    def __init__(self, root: str | Path, capacity_bytes: int = DEFAULT_CAPACITY):
        self.root = Path(root)
        self.capacity_bytes = capacity_bytes
        (self.root / "chunks").mkdir(parents=True, exist_ok=True)
        (self.root / "manifests").mkdir(parents=True, exist_ok=True)
        self._used = 0
        self._chunk_files = 0
        for f in (self.root / "chunks").rglob("*"):
            if f.is_file():
                self._used += f.stat().st_size
                self._chunk_files += 1

    def _path(self, kind: str, digest: bytes) -> Path:
        hexd = digest.hex()
        return self.root / kind / hexd[:2] / hexd[2:4] / hexd

    def _write_once(self, path: Path, data: bytes) -> int:
        """Idempotent write; returns the number of new bytes stored."""
        if path.exists():
            return 0
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return len(data)

    def put(self, content: bytes) -> ContentAddress:
        chunks = split_chunks(content)
        hashes = [chunk_hash(c) for c in chunks]
        addr = content_address_of(content)

        new_bytes = sum(
            len(c)
            for c, h in zip(chunks, hashes)
            if not self._path("chunks", h).exists()
        )
        if self._used + new_bytes > self.capacity_bytes:
            raise StorageFull(
                f"{self._used + new_bytes} bytes would exceed cap {self.capacity_bytes}"
            )

        for c, h in zip(chunks, hashes):
            path = self._path("chunks", h)
            if not path.exists():
                self._chunk_files += 1
            self._used += self._write_once(path, c)
        if len(hashes) > 1:
            manifest = ChunkManifest(tuple(hashes))
            self._write_once(self._path("manifests", addr.root), manifest.encode())
        return addr

    def _read_chunk(self, digest: bytes) -> bytes:
        path = self._path("chunks", digest)
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            raise NotFound(f"chunk {digest.hex()}")
        if chunk_hash(data) != digest:
            raise IntegrityFailure(f"chunk {digest.hex()} no longer hashes to its name")
        return data

    def get(self, addr: ContentAddress) -> bytes:
        if addr.total_len <= CHUNK_SIZE:
            data = self._read_chunk(addr.root)
            if len(data) != addr.total_len:
                raise IntegrityFailure("stored length does not match address")
            return data

        manifest_path = self._path("manifests", addr.root)
        try:
            manifest = ChunkManifest.decode_bytes(manifest_path.read_bytes())
        except FileNotFoundError:
            raise NotFound(f"manifest {addr.root.hex()}")
        except DecodeError as exc:
            raise IntegrityFailure(f"manifest {addr.root.hex()}: {exc}")

        expected_chunks = -(-addr.total_len // CHUNK_SIZE)
        if len(manifest.chunk_hashes) != expected_chunks:
            raise IntegrityFailure("manifest chunk count does not match address")
        content = b"".join(self._read_chunk(h) for h in manifest.chunk_hashes)
        if content_address_of(content) != addr:
            raise IntegrityFailure("reassembled content does not match address")
        return content

    def verify(self, addr: ContentAddress, content: bytes) -> bool:
        return content_address_of(content) == addr

    def has(self, addr: ContentAddress) -> bool:
        if addr.total_len <= CHUNK_SIZE:
            return self._path("chunks", addr.root).exists()
        return self._path("manifests", addr.root).exists()

    @property
    def chunk_count(self) -> int:
        return self._chunk_files

    @property
    def used_bytes(self) -> int:
        return self._used
