"""Append-only chain core: block sealing, validation, validator rotation,
fork choice, and the strictly-append-only persistence file.

Consensus is single-proposer, stake-weighted rotation: the validator for a
height is a pure function of (validator set, height), so a desk-scale
ledger stays deterministic without BFT machinery. One SHA-256 everywhere
keeps golden files portable.
"""

from __future__ import annotations

import configparser
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import keys
from .encoding import (
    ZERO_HASH,
    Reader,
    enc_bytes,
    enc_hash,
    enc_list,
    enc_uint,
    sha256,
)
from .errors import (
    DecodeError,
    EmptyBlock,
    EmptyHeads,
    EmptySet,
    LedgerError,
    RecordInvalid,
    WrongValidator,
)
from .grants import GrantsState, apply_grant_event, grants_state_hash
from .memory import MemoryIndex
from .records import (
    ActivityRecord,
    GrantApproved,
    GrantRegistered,
    GrantRevoked,
    LedgerRecord,
    MintNft,
    TokenClass,
    decode_record,
    encode_record,
    validate_record,
)
from .registry import RegistryState, apply_op, registry_state_hash

MAX_RECORDS_PER_BLOCK = 1024


# --- headers and blocks -----------------------------------------------------

@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: bytes
    merkle_root: bytes
    timestamp: int
    validator_id: bytes
    signature: bytes = b""


def encode_header(header: BlockHeader, with_signature: bool = True) -> bytes:
    parts = [
        enc_uint(header.height),
        enc_hash(header.prev_hash),
        enc_hash(header.merkle_root),
        enc_uint(header.timestamp),
        enc_hash(header.validator_id),
    ]
    if with_signature:
        parts.append(enc_bytes(header.signature))
    return b"".join(parts)


def header_hash(header: BlockHeader) -> bytes:
    return sha256(encode_header(header))


def decode_header(r: Reader) -> BlockHeader:
    return BlockHeader(
        height=r.read_uint(),
        prev_hash=r.read_hash(),
        merkle_root=r.read_hash(),
        timestamp=r.read_uint(),
        validator_id=r.read_hash(),
        signature=r.read_bytes(),
    )


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    records: tuple[LedgerRecord, ...]


def encode_block(block: Block) -> bytes:
    return encode_header(block.header) + enc_list(block.records, encode_record)


def decode_block_bytes(data: bytes) -> Block:
    r = Reader(data)
    header = decode_header(r)
    records = tuple(r.read_list(decode_record))
    r.expect_end()
    return Block(header, records)


# --- merkle root ------------------------------------------------------------

def merkle_root(records: Sequence[LedgerRecord]) -> bytes:
    """Leaf = H(0x00 || record bytes), internal = H(0x01 || left || right);
    an unpaired last node is promoted unchanged; empty list is all zeros."""
    if not records:
        return ZERO_HASH
    level = [sha256(b"\x00" + encode_record(rec)) for rec in records]
    while len(level) > 1:
        nxt = [
            sha256(b"\x01" + level[i] + level[i + 1])
            for i in range(0, len(level) - 1, 2)
        ]
        if len(level) % 2 == 1:
            nxt.append(level[-1])
        level = nxt
    return level[0]


# --- validator set ------------------------------------------------------------

@dataclass(frozen=True)
class ValidatorEntry:
    validator_id: bytes
    pubkey: bytes
    stake: int


@dataclass(frozen=True)
class ValidatorSet:
    validators: tuple[ValidatorEntry, ...]

    def __post_init__(self):
        if not self.validators:
            raise EmptySet("validator set must be non-empty")
        ids = [v.validator_id for v in self.validators]
        if len(set(ids)) != len(ids):
            raise ValueError("validator ids must be unique")
        if any(v.stake < 0 for v in self.validators):
            raise ValueError("stakes must be non-negative")

    @classmethod
    def from_pubkeys(cls, entries: Iterable[tuple[bytes, int]]) -> "ValidatorSet":
        return cls(
            tuple(
                ValidatorEntry(keys.account_id(pub), pub, stake)
                for pub, stake in entries
            )
        )

    def pubkey_of(self, validator_id: bytes) -> Optional[bytes]:
        for v in self.validators:
            if v.validator_id == validator_id:
                return v.pubkey
        return None

    @property
    def first(self) -> ValidatorEntry:
        return self.validators[0]


def scheduled_validator(vset: ValidatorSet, height: int) -> bytes:
    """Stake-weighted round-robin: conceptually expand each validator stake
    times, ordered by validator_id, and take index height mod total stake.
    If every stake is zero, fall back to plain rotation by sorted id."""
    ordered = sorted(vset.validators, key=lambda v: v.validator_id)
    total = sum(v.stake for v in ordered)
    if total == 0:
        return ordered[height % len(ordered)].validator_id
    idx = height % total
    for v in ordered:
        if idx < v.stake:
            return v.validator_id
        idx -= v.stake
    raise AssertionError("unreachable: idx < total by construction")


def parse_validators_config(text: str) -> ValidatorSet:
    """[validators] section: one `pubkey_hex = stake` line per validator,
    in scheduling-file order (the first entry signs genesis)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # hex keys are case-sensitive as written
    parser.read_string(text)
    if "validators" not in parser:
        raise LedgerError("config has no [validators] section")
    entries = []
    for pub_hex, stake in parser["validators"].items():
        pub = bytes.fromhex(pub_hex)
        if len(pub) != 32:
            raise LedgerError(f"validator pubkey must be 32 bytes: {pub_hex}")
        entries.append((pub, int(stake)))
    return ValidatorSet.from_pubkeys(entries)


# --- fork choice ---------------------------------------------------------------

def fork_choice(heads: Sequence[BlockHeader]) -> BlockHeader:
    """Greatest height wins; ties break to the lexicographically smallest
    header hash. Deterministic and permutation-invariant."""
    if not heads:
        raise EmptyHeads("no heads to choose from")
    return min(heads, key=lambda h: (-h.height, header_hash(h)))


# --- violations -----------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    height: Optional[int] = None
    record_index: Optional[int] = None

    def __str__(self) -> str:
        where = "" if self.height is None else f" at height {self.height}"
        idx = "" if self.record_index is None else f" record {self.record_index}"
        return f"{self.code}{where}{idx}: {self.message}"


# --- genesis ---------------------------------------------------------------------

GENESIS_TIMESTAMP = 0


def make_genesis(vset: ValidatorSet, first_validator_key) -> Block:
    """Height 0, zero prev_hash, no records, fixed timestamp, signed by the
    first configured validator."""
    first = vset.first
    if keys.account_id(keys.public_bytes(first_validator_key)) != first.validator_id:
        raise WrongValidator("genesis must be signed by the first configured validator")
    header = BlockHeader(
        height=0,
        prev_hash=ZERO_HASH,
        merkle_root=merkle_root(()),
        timestamp=GENESIS_TIMESTAMP,
        validator_id=first.validator_id,
    )
    signature = keys.sign(first_validator_key, encode_header(header, with_signature=False))
    return Block(replace(header, signature=signature), ())


def validate_genesis(block: Block, vset: ValidatorSet) -> list[Violation]:
    violations = []
    h = block.header
    if h.height != 0:
        violations.append(Violation("height", "genesis height must be 0", 0))
    if h.prev_hash != ZERO_HASH:
        violations.append(Violation("prev_hash", "genesis prev_hash must be zero", 0))
    if block.records:
        violations.append(Violation("record_count", "genesis must be empty", 0))
    if h.merkle_root != merkle_root(block.records):
        violations.append(Violation("merkle_root", "does not match records", 0))
    if h.timestamp != GENESIS_TIMESTAMP:
        violations.append(Violation("timestamp", "genesis timestamp must be 0", 0))
    if h.validator_id != vset.first.validator_id:
        violations.append(
            Violation("validator", "genesis must name the first configured validator", 0)
        )
    elif not keys.verify(
        vset.first.pubkey, h.signature, encode_header(h, with_signature=False)
    ):
        violations.append(Violation("signature", "genesis signature invalid", 0))
    return violations


# --- chain state --------------------------------------------------------------------

class ChainState:
    """Canonical chain plus every state derived from it. Single logical
    writer: apply_block and seal are only ever called from one ordered
    command stream; reads may happen concurrently."""

    def __init__(self, vset: ValidatorSet, genesis: Block, owner_account: bytes):
        bad = validate_genesis(genesis, vset)
        if bad:
            raise LedgerError(f"invalid genesis: {bad[0]}")
        self.validator_set = vset
        self.owner_account = owner_account
        self.blocks: list[Block] = [genesis]
        self.registry = RegistryState.genesis(owner_account)
        self.grants = GrantsState.genesis()
        self.memory = MemoryIndex()
        self.mint_times: dict[bytes, int] = {}
        self.mint_order: list[bytes] = []

    @property
    def head(self) -> BlockHeader:
        return self.blocks[-1].header

    @property
    def head_hash(self) -> bytes:
        return header_hash(self.head)

    @property
    def height(self) -> int:
        return self.head.height

    # -- record transitions, shared by validation and application --

    def _transition(self, records: Sequence[LedgerRecord], height: int):
        violations: list[Violation] = []
        registry = self.registry
        grants = self.grants
        new_ids: set[bytes] = set()
        activities: list[ActivityRecord] = []
        mints: list[MintNft] = []
        for i, rec in enumerate(records):
            try:
                validate_record(rec)
                if isinstance(rec, ActivityRecord):
                    if rec.record_id in self.memory or rec.record_id in new_ids:
                        raise RecordInvalid(i, "duplicate activity record id")
                    new_ids.add(rec.record_id)
                    activities.append(rec)
                elif isinstance(rec, (GrantRegistered, GrantApproved, GrantRevoked)):
                    grants = apply_grant_event(grants, rec)
                else:
                    registry = apply_op(registry, rec)
                    if isinstance(rec, MintNft):
                        mints.append(rec)
            except LedgerError as exc:
                violations.append(
                    Violation("record", str(exc), height=height, record_index=i)
                )
        return violations, registry, grants, activities, mints

    def validate_block(self, block: Block) -> list[Violation]:
        """All violations found, never just the first."""
        violations: list[Violation] = []
        h = block.header
        head = self.head
        if h.height != head.height + 1:
            violations.append(
                Violation("height", f"expected {head.height + 1}, got {h.height}", h.height)
            )
        if h.prev_hash != self.head_hash:
            violations.append(Violation("prev_hash", "does not link to chain head", h.height))
        if h.merkle_root != merkle_root(block.records):
            violations.append(Violation("merkle_root", "does not match records", h.height))
        if h.timestamp < head.timestamp:
            violations.append(
                Violation("timestamp", "decreases along the chain", h.height)
            )
        expected = scheduled_validator(self.validator_set, h.height)
        if h.validator_id != expected:
            violations.append(
                Violation("validator", "not the scheduled validator", h.height)
            )
        pubkey = self.validator_set.pubkey_of(expected)
        if not keys.verify(pubkey, h.signature, encode_header(h, with_signature=False)):
            violations.append(Violation("signature", "invalid header signature", h.height))
        if not 1 <= len(block.records) <= MAX_RECORDS_PER_BLOCK:
            violations.append(
                Violation(
                    "record_count",
                    f"must be 1..{MAX_RECORDS_PER_BLOCK}, got {len(block.records)}",
                    h.height,
                )
            )
        record_violations, *_ = self._transition(block.records, h.height)
        violations.extend(record_violations)
        return violations

    def seal(self, pending: Sequence[LedgerRecord], validator_key, now: int) -> Block:
        """Build and sign the next block from pending records. The caller
        must hold the scheduled validator's key."""
        if not pending:
            raise EmptyBlock("no pending records to seal")
        if len(pending) > MAX_RECORDS_PER_BLOCK:
            raise RecordInvalid(
                MAX_RECORDS_PER_BLOCK, f"block record limit {MAX_RECORDS_PER_BLOCK} exceeded"
            )
        height = self.height + 1
        expected = scheduled_validator(self.validator_set, height)
        if keys.account_id(keys.public_bytes(validator_key)) != expected:
            raise WrongValidator(f"validator not scheduled for height {height}")
        violations, *_ = self._transition(pending, height)
        if violations:
            v = violations[0]
            raise RecordInvalid(v.record_index or 0, v.message)
        header = BlockHeader(
            height=height,
            prev_hash=self.head_hash,
            merkle_root=merkle_root(pending),
            timestamp=max(now, self.head.timestamp),
            validator_id=expected,
        )
        signature = keys.sign(validator_key, encode_header(header, with_signature=False))
        return Block(replace(header, signature=signature), tuple(pending))

    def apply_block(self, block: Block) -> None:
        """Append a block that already passed validate_block."""
        violations, registry, grants, activities, mints = self._transition(
            block.records, block.header.height
        )
        if violations:
            raise LedgerError(f"apply of invalid block: {violations[0]}")
        self.registry = registry
        self.grants = grants
        for rec in activities:
            self.memory.add(rec, block.header.height)
        for mint in mints:
            self.mint_times[mint.token_id] = block.header.timestamp
            self.mint_order.append(mint.token_id)
        self.blocks.append(block)

    def latest_model_token(self) -> Optional[bytes]:
        for token_id in reversed(self.mint_order):
            entry = self.registry.nfts.get(token_id)
            if (
                entry is not None
                and entry.alive
                and entry.metadata.token_class is TokenClass.MODEL
            ):
                return token_id
        return None

    def state_hash(self) -> bytes:
        return sha256(
            registry_state_hash(self.registry)
            + self.memory.state_hash()
            + grants_state_hash(self.grants)
            + self.head_hash
        )


# module-level aliases matching the operation names
def canonical_encode(value) -> bytes:
    """Deterministic bytes for any record, header, or block."""
    if isinstance(value, Block):
        return encode_block(value)
    if isinstance(value, BlockHeader):
        return encode_header(value)
    return encode_record(value)


def seal_block(
    pending: Sequence[LedgerRecord], state: ChainState, validator_key, now: int
) -> Block:
    return state.seal(pending, validator_key, now)


def validate_block(block: Block, state: ChainState) -> list[Violation]:
    return state.validate_block(block)


# --- chain persistence file ------------------------------------------------------

def append_block_file(path: str | Path, block: Block) -> None:
    data = encode_block(block)
    with open(path, "ab") as fh:
        fh.write(struct.pack(">I", len(data)) + data)


def write_chain_file(path: str | Path, blocks: Iterable[Block]) -> None:
    with open(path, "wb") as fh:
        for block in blocks:
            data = encode_block(block)
            fh.write(struct.pack(">I", len(data)) + data)


def iter_chain_file(path: str | Path) -> Iterable[Block]:
    """Yields blocks; raises DecodeError on framing or decoding damage."""
    data = Path(path).read_bytes()
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise DecodeError(f"truncated length prefix at offset {pos}")
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        pos += 4
        if pos + length > len(data):
            raise DecodeError(f"truncated block at offset {pos}")
        yield decode_block_bytes(data[pos : pos + length])
        pos += length


def replay_chain(
    blocks: Iterable[Block], vset: ValidatorSet, owner_account: bytes
) -> tuple[Optional[ChainState], list[Violation]]:
    """Rebuild state from a block sequence, collecting violations. Replay
    stops at the first invalid block (state beyond it is undefined)."""
    state: Optional[ChainState] = None
    violations: list[Violation] = []
    try:
        for block in blocks:
            if state is None:
                bad = validate_genesis(block, vset)
                if bad:
                    return None, bad
                state = ChainState(vset, block, owner_account)
                continue
            bad = state.validate_block(block)
            if bad:
                violations.extend(bad)
                return state, violations
            state.apply_block(block)
    except DecodeError as exc:
        violations.append(Violation("decode", str(exc)))
        return state, violations
    if state is None:
        violations.append(Violation("empty", "chain has no genesis block"))
    return state, violations


def load_chain(
    path: str | Path, vset: ValidatorSet, owner_account: bytes
) -> ChainState:
    state, violations = replay_chain(iter_chain_file(path), vset, owner_account)
    if violations or state is None:
        raise LedgerError(f"chain file invalid: {violations[0]}")
    return state


def validate_chain_file(
    path: str | Path, vset: ValidatorSet, owner_account: bytes
) -> list[Violation]:
    _, violations = replay_chain(iter_chain_file(path), vset, owner_account)
    return violations
