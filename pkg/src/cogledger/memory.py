"""Memory pool: validation, ingestion, and indexed querying of activity.

The inverted index tokenizes titles, query terms, and URL hosts the same
way: lowercase, split on any non-alphanumeric character, drop tokens
shorter than two characters. URLs contribute their host only, which keeps
the index bounded. Query results are ordered by (captured_at, record_id).
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from typing import Iterable, Optional
from urllib.parse import urlsplit

from .encoding import enc_hash, enc_list, enc_tag, enc_text, enc_uint, sha256
from .errors import BadHeader, Duplicate, ValidationFailed
from .records import (
    ActivityKind,
    ActivityRecord,
    encode_record,
    make_activity,
    validate_activity,
)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_MIN_TOKEN_LEN = 2


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric tokens of length >= 2, in order."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= _MIN_TOKEN_LEN]


def url_host(url: str) -> Optional[str]:
    try:
        return urlsplit(url).hostname
    except ValueError:
        return None


def index_tokens(rec: ActivityRecord) -> set[str]:
    tokens: set[str] = set()
    if rec.title:
        tokens.update(tokenize(rec.title))
    if rec.query_terms:
        for term in rec.query_terms:
            tokens.update(tokenize(term))
    if rec.url:
        host = url_host(rec.url)
        if host:
            tokens.update(tokenize(host))
    return tokens


class MemoryIndex:
    """Indexes over on-chain activity records. Single writer (the block
    application path); reads are safe against the immutable records."""

    def __init__(self):
        self.records: dict[bytes, ActivityRecord] = {}
        self.height_of: dict[bytes, int] = {}
        self.by_height: dict[int, list[bytes]] = {}
        self.by_kind: dict[ActivityKind, set[bytes]] = {}
        self.inverted: dict[str, set[bytes]] = {}

    def __contains__(self, record_id: bytes) -> bool:
        return record_id in self.records

    def __len__(self) -> int:
        return len(self.records)

    def add(self, rec: ActivityRecord, height: int) -> None:
        if rec.record_id in self.records:
            raise Duplicate(rec.record_id.hex())
        self.records[rec.record_id] = rec
        self.height_of[rec.record_id] = height
        self.by_height.setdefault(height, []).append(rec.record_id)
        self.by_kind.setdefault(rec.kind, set()).add(rec.record_id)
        for token in index_tokens(rec):
            self.inverted.setdefault(token, set()).add(rec.record_id)

    def state_hash(self) -> bytes:
        parts = [
            enc_list(
                sorted(self.records),
                lambda rid: enc_hash(rid)
                + enc_uint(self.height_of[rid])
                + encode_record(self.records[rid]),
            ),
            enc_list(
                sorted(self.by_kind),
                lambda kind: enc_tag(int(kind))
                + enc_list(sorted(self.by_kind[kind]), enc_hash),
            ),
            enc_list(
                sorted(self.inverted),
                lambda tok: enc_text(tok)
                + enc_list(sorted(self.inverted[tok]), enc_hash),
            ),
        ]
        return sha256(b"".join(parts))


@dataclass(frozen=True)
class QueryFilter:
    from_ts: Optional[int] = None
    to_ts: Optional[int] = None
    kind: Optional[ActivityKind] = None
    token: Optional[str] = None


def query(index: MemoryIndex, flt: QueryFilter) -> list[ActivityRecord]:
    """Conjunctive filter over the index; time bounds are inclusive."""
    candidates: Optional[set[bytes]] = None
    if flt.kind is not None:
        candidates = set(index.by_kind.get(flt.kind, ()))
    if flt.token is not None:
        hits = index.inverted.get(flt.token.lower(), set())
        candidates = set(hits) if candidates is None else candidates & hits
    if candidates is None:
        candidates = set(index.records)

    out = []
    for rid in candidates:
        rec = index.records[rid]
        if flt.from_ts is not None and rec.captured_at < flt.from_ts:
            continue
        if flt.to_ts is not None and rec.captured_at > flt.to_ts:
            continue
        out.append(rec)
    out.sort(key=lambda r: (r.captured_at, r.record_id))
    return out


def ingest(
    rec: ActivityRecord,
    pending: list[ActivityRecord],
    index: MemoryIndex,
    pending_ids: set[bytes],
) -> None:
    """Validate and add to the pending set; dedup against both the pending
    set and everything already on-chain."""
    validate_activity(rec)
    if rec.record_id in pending_ids or rec.record_id in index:
        raise Duplicate(rec.record_id.hex())
    pending.append(rec)
    pending_ids.add(rec.record_id)


# --- browser-history import ------------------------------------------------

CSV_HEADER = ["url", "title", "visited_at", "dwell_seconds"]


def import_history_csv(
    data: bytes, actor: bytes, shell_id: bytes
) -> tuple[list[ActivityRecord], list[tuple[int, str]]]:
    """Parse a history CSV into PageVisit records.

    Returns (records, row_errors) where row numbers are 1-based over data
    rows; a bad row never blocks the rest of the import. Raises BadHeader
    unless the header is exactly url,title,visited_at,dwell_seconds.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise BadHeader(f"not UTF-8: {exc}")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise BadHeader("empty file")
    if header != CSV_HEADER:
        raise BadHeader(f"expected {','.join(CSV_HEADER)!r}, got {','.join(header)!r}")

    records: list[ActivityRecord] = []
    errors: list[tuple[int, str]] = []
    for row_num, row in enumerate(reader, start=1):
        if not row or all(not cell for cell in row):
            continue
        if len(row) != len(CSV_HEADER):
            errors.append((row_num, f"expected {len(CSV_HEADER)} columns, got {len(row)}"))
            continue
        url, title, visited_at_raw, dwell_raw = row
        try:
            visited_at = int(visited_at_raw)
            if visited_at < 0:
                raise ValueError("negative timestamp")
        except ValueError:
            errors.append((row_num, f"malformed timestamp {visited_at_raw!r}"))
            continue
        dwell: Optional[int] = None
        if dwell_raw.strip():
            try:
                dwell = int(dwell_raw)
            except ValueError:
                errors.append((row_num, f"malformed dwell_seconds {dwell_raw!r}"))
                continue
            if dwell < 0:
                errors.append((row_num, f"negative dwell_seconds {dwell}"))
                continue
        if not url:
            errors.append((row_num, "empty url"))
            continue
        records.append(
            make_activity(
                actor=actor,
                kind=ActivityKind.PAGE_VISIT,
                shell_id=shell_id,
                captured_at=visited_at,
                url=url,
                title=title or None,
                dwell_seconds=dwell,
            )
        )
    return records, errors
