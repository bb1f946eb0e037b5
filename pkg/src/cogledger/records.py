"""On-chain record types: activity records, token operations, grant events.

A LedgerRecord is the unit of block storage. The union encoding starts with
one tag byte (1 = activity, 2 = token op, 3 = grant event); token ops and
grant events carry a second tag byte for their own variant.

Identifier derivation:

* ActivityRecord.record_id = H(tagged encoding with the record_id field
  left out entirely)
* GrantRegistered.grant_id is derived the same way.
* TokenId (NFT mints) = H(tagged op encoding with token_id zeroed and the
  signature left out; the signer pubkey is included).

Token ops are signed by their originator over the op's canonical encoding,
which by construction is everything except the signature bytes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Union

from . import keys
from .encoding import (
    HASH_LEN,
    MICRO,
    ZERO_HASH,
    ContentAddress,
    Reader,
    enc_bytes,
    enc_hash,
    enc_int,
    enc_list,
    enc_optional,
    enc_tag,
    enc_text,
    enc_uint,
    sha256,
)
from .errors import DecodeError, ValidationFailed

# Union tags.
TAG_ACTIVITY = 1
TAG_TOKEN_OP = 2
TAG_GRANT_EVENT = 3

# Per-record canonical-encoding cap, in bytes.
MAX_RECORD_BYTES = 256 * 1024

REWARD_PER_KNOWLEDGE_OBJECT = 10

BURN_OWNER_REQUEST = 1
BURN_REFINERY = 2


class ActivityKind(enum.IntEnum):
    PAGE_VISIT = 1
    SEARCH = 2
    BOOKMARK = 3
    QUIZ_ANSWER = 4
    SHELL_EVENT = 5


_KIND_NAMES = {
    ActivityKind.PAGE_VISIT: "PageVisit",
    ActivityKind.SEARCH: "Search",
    ActivityKind.BOOKMARK: "Bookmark",
    ActivityKind.QUIZ_ANSWER: "QuizAnswer",
    ActivityKind.SHELL_EVENT: "ShellEvent",
}
_KIND_BY_NAME = {name: kind for kind, name in _KIND_NAMES.items()}


def kind_name(kind: ActivityKind) -> str:
    return _KIND_NAMES[kind]


def kind_from_name(name: str) -> ActivityKind:
    try:
        return _KIND_BY_NAME[name]
    except KeyError:
        raise ValidationFailed("kind", f"unknown activity kind {name!r}")


class TokenClass(enum.IntEnum):
    FUNGIBLE_INCENTIVE = 1
    PERSONALITY_BADGE = 2
    KNOWLEDGE_OBJECT = 3
    MODEL = 4


_CLASS_NAMES = {
    TokenClass.FUNGIBLE_INCENTIVE: "FungibleIncentive",
    TokenClass.PERSONALITY_BADGE: "PersonalityBadge",
    TokenClass.KNOWLEDGE_OBJECT: "KnowledgeObjectNft",
    TokenClass.MODEL: "ModelNft",
}
_CLASS_BY_NAME = {name: cls for cls, name in _CLASS_NAMES.items()}


def class_name(token_class: TokenClass) -> str:
    return _CLASS_NAMES[token_class]


def class_from_name(name: str) -> TokenClass:
    try:
        return _CLASS_BY_NAME[name]
    except KeyError:
        raise ValidationFailed("class", f"unknown token class {name!r}")


class Scope(enum.IntEnum):
    READ_ASSETS = 1
    SUBMIT_ACTIVITY = 2
    READ_KNOWLEDGE = 3
    QUERY_MODEL = 4
    TAKE_QUIZ = 5


_SCOPE_NAMES = {
    Scope.READ_ASSETS: "read_assets",
    Scope.SUBMIT_ACTIVITY: "submit_activity",
    Scope.READ_KNOWLEDGE: "read_knowledge",
    Scope.QUERY_MODEL: "query_model",
    Scope.TAKE_QUIZ: "take_quiz",
}
_SCOPE_BY_NAME = {name: scope for scope, name in _SCOPE_NAMES.items()}

ALL_SCOPES = tuple(Scope)


def scope_name(scope: Scope) -> str:
    return _SCOPE_NAMES[scope]


def scope_from_name(name: str) -> Scope:
    try:
        return _SCOPE_BY_NAME[name]
    except KeyError:
        raise ValidationFailed("scope", f"unknown scope {name!r}")


# --- activity records -----------------------------------------------------

@dataclass(frozen=True)
class ActivityRecord:
    record_id: bytes
    actor: bytes
    kind: ActivityKind
    url: Optional[str]
    title: Optional[str]
    dwell_seconds: Optional[int]
    query_terms: Optional[tuple[str, ...]]
    question_id: Optional[str]
    answer_value: Optional[int]
    shell_id: bytes
    captured_at: int


def _enc_activity_fields(rec: ActivityRecord, with_id: bool) -> bytes:
    parts = [enc_tag(TAG_ACTIVITY)]
    if with_id:
        parts.append(enc_hash(rec.record_id))
    parts.append(enc_hash(rec.actor))
    parts.append(enc_tag(int(rec.kind)))
    parts.append(enc_optional(rec.url, enc_text))
    parts.append(enc_optional(rec.title, enc_text))
    parts.append(enc_optional(rec.dwell_seconds, enc_uint))
    parts.append(
        enc_optional(rec.query_terms, lambda terms: enc_list(terms, enc_text))
    )
    parts.append(enc_optional(rec.question_id, enc_text))
    parts.append(enc_optional(rec.answer_value, enc_int))
    parts.append(enc_hash(rec.shell_id))
    parts.append(enc_uint(rec.captured_at))
    return b"".join(parts)


def activity_record_id(rec: ActivityRecord) -> bytes:
    return sha256(_enc_activity_fields(rec, with_id=False))


def make_activity(
    actor: bytes,
    kind: ActivityKind,
    shell_id: bytes,
    captured_at: int,
    url: Optional[str] = None,
    title: Optional[str] = None,
    dwell_seconds: Optional[int] = None,
    query_terms=None,
    question_id: Optional[str] = None,
    answer_value: Optional[int] = None,
) -> ActivityRecord:
    """Build an activity record with its derived record_id filled in."""
    rec = ActivityRecord(
        record_id=ZERO_HASH,
        actor=actor,
        kind=kind,
        url=url,
        title=title,
        dwell_seconds=dwell_seconds,
        query_terms=tuple(query_terms) if query_terms is not None else None,
        question_id=question_id,
        answer_value=answer_value,
        shell_id=shell_id,
        captured_at=captured_at,
    )
    return replace(rec, record_id=activity_record_id(rec))


def validate_activity(rec: ActivityRecord) -> None:
    """Kind-specific invariants. Raises ValidationFailed on the first breach."""
    if rec.record_id != activity_record_id(rec):
        raise ValidationFailed("record_id", "does not match derived id")
    if rec.captured_at < 0:
        raise ValidationFailed("captured_at", "must be non-negative")
    if rec.dwell_seconds is not None and rec.dwell_seconds < 0:
        raise ValidationFailed("dwell_seconds", "must be non-negative")
    if rec.kind in (ActivityKind.PAGE_VISIT, ActivityKind.BOOKMARK):
        if not rec.url:
            raise ValidationFailed("url", f"required for {kind_name(rec.kind)}")
    if rec.kind is ActivityKind.SEARCH:
        if not rec.query_terms:
            raise ValidationFailed("query_terms", "required and non-empty for Search")
    if rec.kind is ActivityKind.QUIZ_ANSWER:
        if not rec.question_id:
            raise ValidationFailed("question_id", "required for QuizAnswer")
        if rec.answer_value is None or not -2 <= rec.answer_value <= 2:
            raise ValidationFailed("answer_value", "must be an integer in [-2, 2]")


# --- NFT metadata ---------------------------------------------------------

@dataclass(frozen=True)
class NftMetadata:
    """NFT metadata holds a content address, never bulk content."""

    token_class: TokenClass
    content_hash: ContentAddress
    schema_version: int
    trait_code: Optional[str]
    weight_micro: Optional[int]
    issuer: bytes

    @property
    def weight(self) -> Optional[float]:
        return None if self.weight_micro is None else self.weight_micro / MICRO


def enc_metadata(meta: NftMetadata) -> bytes:
    return b"".join(
        [
            enc_tag(int(meta.token_class)),
            meta.content_hash.encode(),
            enc_uint(meta.schema_version),
            enc_optional(meta.trait_code, enc_text),
            enc_optional(meta.weight_micro, enc_uint),
            enc_hash(meta.issuer),
        ]
    )


def dec_metadata(r: Reader) -> NftMetadata:
    token_class = _dec_enum(r, TokenClass, "token class")
    content_hash = ContentAddress.decode(r)
    schema_version = r.read_uint()
    trait_code = r.read_optional(Reader.read_text)
    weight_micro = r.read_optional(Reader.read_uint)
    issuer = r.read_hash()
    return NftMetadata(
        token_class, content_hash, schema_version, trait_code, weight_micro, issuer
    )


# Everything in the metadata besides the content address must stay tiny.
_METADATA_FIELD_BUDGET = 256


def validate_metadata(meta: NftMetadata) -> None:
    if meta.token_class is TokenClass.FUNGIBLE_INCENTIVE:
        raise ValidationFailed("class", "metadata applies to non-fungible classes only")
    if (meta.trait_code is not None) != (
        meta.token_class is TokenClass.PERSONALITY_BADGE
    ):
        raise ValidationFailed("trait_code", "present iff class is PersonalityBadge")
    if meta.trait_code is not None and not (
        len(meta.trait_code) == 4 and meta.trait_code.isalpha()
    ):
        raise ValidationFailed("trait_code", "must be exactly 4 letters")
    if (meta.weight_micro is not None) != (
        meta.token_class is TokenClass.KNOWLEDGE_OBJECT
    ):
        raise ValidationFailed("weight", "present iff class is KnowledgeObjectNft")
    if meta.weight_micro is not None and not 0 <= meta.weight_micro <= MICRO:
        raise ValidationFailed("weight", "must be in [0, 1]")
    if meta.schema_version < 0:
        raise ValidationFailed("schema_version", "must be non-negative")
    overhead = len(enc_metadata(meta)) - len(meta.content_hash.encode())
    if overhead > _METADATA_FIELD_BUDGET:
        raise ValidationFailed("metadata", "fields exceed the 256-byte budget")


# --- token operations -----------------------------------------------------

OP_MINT_NFT = 1
OP_MINT_INCENTIVE = 2
OP_TRANSFER_NFT = 3
OP_TRANSFER_FUNGIBLE = 4
OP_BURN = 5
OP_UPDATE_WEIGHT = 6


@dataclass(frozen=True)
class MintNft:
    token_id: bytes
    metadata: NftMetadata
    owner: bytes
    signer_pubkey: bytes = b""
    signature: bytes = b""


@dataclass(frozen=True)
class MintIncentive:
    owner: bytes
    amount: int
    signer_pubkey: bytes = b""
    signature: bytes = b""


@dataclass(frozen=True)
class TransferNft:
    token_id: bytes
    sender: bytes
    recipient: bytes
    signer_pubkey: bytes = b""
    signature: bytes = b""


@dataclass(frozen=True)
class TransferFungible:
    amount: int
    sender: bytes
    recipient: bytes
    signer_pubkey: bytes = b""
    signature: bytes = b""


@dataclass(frozen=True)
class Burn:
    token_id: bytes
    reason_code: int
    signer_pubkey: bytes = b""
    signature: bytes = b""


@dataclass(frozen=True)
class UpdateWeight:
    token_id: bytes
    new_weight_micro: int
    signer_pubkey: bytes = b""
    signature: bytes = b""


TokenOp = Union[MintNft, MintIncentive, TransferNft, TransferFungible, Burn, UpdateWeight]

_OP_TAGS = {
    MintNft: OP_MINT_NFT,
    MintIncentive: OP_MINT_INCENTIVE,
    TransferNft: OP_TRANSFER_NFT,
    TransferFungible: OP_TRANSFER_FUNGIBLE,
    Burn: OP_BURN,
    UpdateWeight: OP_UPDATE_WEIGHT,
}


def _enc_op_fields(op: TokenOp) -> bytes:
    if isinstance(op, MintNft):
        return enc_hash(op.token_id) + enc_metadata(op.metadata) + enc_hash(op.owner)
    if isinstance(op, MintIncentive):
        return enc_hash(op.owner) + enc_uint(op.amount)
    if isinstance(op, TransferNft):
        return enc_hash(op.token_id) + enc_hash(op.sender) + enc_hash(op.recipient)
    if isinstance(op, TransferFungible):
        return enc_uint(op.amount) + enc_hash(op.sender) + enc_hash(op.recipient)
    if isinstance(op, Burn):
        return enc_hash(op.token_id) + enc_uint(op.reason_code)
    if isinstance(op, UpdateWeight):
        return enc_hash(op.token_id) + enc_uint(op.new_weight_micro)
    raise TypeError(f"not a token op: {op!r}")


def token_op_signing_bytes(op: TokenOp) -> bytes:
    """Canonical encoding of the op; the signature signs exactly this."""
    return (
        enc_tag(TAG_TOKEN_OP)
        + enc_tag(_OP_TAGS[type(op)])
        + _enc_op_fields(op)
        + enc_bytes(op.signer_pubkey)
    )


def derive_token_id(op: MintNft) -> bytes:
    """TokenId: hash of the op's canonical encoding with token_id zeroed."""
    return sha256(token_op_signing_bytes(replace(op, token_id=ZERO_HASH)))


def sign_token_op(op: TokenOp, key) -> TokenOp:
    """Attach the signer and signature; mints get their derived token id."""
    op = replace(op, signer_pubkey=keys.public_bytes(key), signature=b"")
    if isinstance(op, MintNft):
        op = replace(op, token_id=derive_token_id(op))
    return replace(op, signature=keys.sign(key, token_op_signing_bytes(op)))


def verify_token_op(op: TokenOp) -> bool:
    if not op.signer_pubkey or not op.signature:
        return False
    return keys.verify(op.signer_pubkey, op.signature, token_op_signing_bytes(op))


def op_signer(op: TokenOp) -> bytes:
    return keys.account_id(op.signer_pubkey)


def validate_token_op(op: TokenOp) -> None:
    """Structural checks plus signature verification."""
    if isinstance(op, MintNft):
        validate_metadata(op.metadata)
    if isinstance(op, (MintIncentive, TransferFungible)) and op.amount <= 0:
        raise ValidationFailed("amount", "must be positive")
    if isinstance(op, UpdateWeight) and not 0 <= op.new_weight_micro <= MICRO:
        raise ValidationFailed("new_weight", "must be in [0, 1]")
    if isinstance(op, Burn) and op.reason_code < 0:
        raise ValidationFailed("reason_code", "must be non-negative")
    if not verify_token_op(op):
        raise ValidationFailed("signature", "missing or invalid")


# --- grant events ---------------------------------------------------------

GRANT_REGISTERED = 1
GRANT_APPROVED = 2
GRANT_REVOKED = 3


@dataclass(frozen=True)
class GrantRegistered:
    grant_id: bytes
    shell_id: bytes
    display_name: str
    scopes: tuple[Scope, ...]
    autonomy_level: int
    created_at: int


@dataclass(frozen=True)
class GrantApproved:
    grant_id: bytes
    secret_hash: bytes
    approved_at: int


@dataclass(frozen=True)
class GrantRevoked:
    grant_id: bytes
    revoked_at: int


GrantEvent = Union[GrantRegistered, GrantApproved, GrantRevoked]


def _enc_registration_fields(ev: GrantRegistered, with_id: bool) -> bytes:
    parts = [enc_tag(TAG_GRANT_EVENT), enc_tag(GRANT_REGISTERED)]
    if with_id:
        parts.append(enc_hash(ev.grant_id))
    parts.append(enc_hash(ev.shell_id))
    parts.append(enc_text(ev.display_name))
    parts.append(enc_list(ev.scopes, lambda s: enc_tag(int(s))))
    parts.append(enc_uint(ev.autonomy_level))
    parts.append(enc_uint(ev.created_at))
    return b"".join(parts)


def make_grant_registration(
    shell_id: bytes,
    display_name: str,
    scopes,
    autonomy_level: int,
    created_at: int,
) -> GrantRegistered:
    ev = GrantRegistered(
        grant_id=ZERO_HASH,
        shell_id=shell_id,
        display_name=display_name,
        scopes=tuple(sorted(set(scopes))),
        autonomy_level=autonomy_level,
        created_at=created_at,
    )
    return replace(ev, grant_id=sha256(_enc_registration_fields(ev, with_id=False)))


def validate_grant_event(ev: GrantEvent) -> None:
    if isinstance(ev, GrantRegistered):
        if ev.grant_id != sha256(_enc_registration_fields(ev, with_id=False)):
            raise ValidationFailed("grant_id", "does not match derived id")
        if not ev.scopes:
            raise ValidationFailed("scopes", "must request at least one scope")
        if list(ev.scopes) != sorted(set(ev.scopes)):
            raise ValidationFailed("scopes", "must be sorted and unique")
        if not 0 <= ev.autonomy_level <= 4:
            raise ValidationFailed("autonomy_level", "must be in 0..4")
        if not ev.display_name:
            raise ValidationFailed("display_name", "must be non-empty")


# --- the LedgerRecord union -----------------------------------------------

LedgerRecord = Union[ActivityRecord, TokenOp, GrantEvent]


def encode_record(rec: LedgerRecord) -> bytes:
    if isinstance(rec, ActivityRecord):
        return _enc_activity_fields(rec, with_id=True)
    if isinstance(rec, (MintNft, MintIncentive, TransferNft, TransferFungible, Burn, UpdateWeight)):
        return token_op_signing_bytes(rec) + enc_bytes(rec.signature)
    if isinstance(rec, GrantRegistered):
        return _enc_registration_fields(rec, with_id=True)
    if isinstance(rec, GrantApproved):
        return (
            enc_tag(TAG_GRANT_EVENT)
            + enc_tag(GRANT_APPROVED)
            + enc_hash(rec.grant_id)
            + enc_hash(rec.secret_hash)
            + enc_uint(rec.approved_at)
        )
    if isinstance(rec, GrantRevoked):
        return (
            enc_tag(TAG_GRANT_EVENT)
            + enc_tag(GRANT_REVOKED)
            + enc_hash(rec.grant_id)
            + enc_uint(rec.revoked_at)
        )
    raise TypeError(f"not a ledger record: {rec!r}")


def _dec_enum(r: Reader, enum_cls, what: str):
    tag = r.read_tag()
    try:
        return enum_cls(tag)
    except ValueError:
        raise DecodeError(f"unknown {what} tag {tag}")


def _decode_activity(r: Reader) -> ActivityRecord:
    record_id = r.read_hash()
    actor = r.read_hash()
    kind = _dec_enum(r, ActivityKind, "activity kind")
    url = r.read_optional(Reader.read_text)
    title = r.read_optional(Reader.read_text)
    dwell = r.read_optional(Reader.read_uint)
    terms = r.read_optional(lambda rr: tuple(rr.read_list(Reader.read_text)))
    question_id = r.read_optional(Reader.read_text)
    answer_value = r.read_optional(Reader.read_int)
    shell_id = r.read_hash()
    captured_at = r.read_uint()
    return ActivityRecord(
        record_id, actor, kind, url, title, dwell, terms,
        question_id, answer_value, shell_id, captured_at,
    )


def _decode_token_op(r: Reader) -> TokenOp:
    op_tag = r.read_tag()
    if op_tag == OP_MINT_NFT:
        token_id = r.read_hash()
        metadata = dec_metadata(r)
        owner = r.read_hash()
        core = MintNft(token_id, metadata, owner)
    elif op_tag == OP_MINT_INCENTIVE:
        core = MintIncentive(r.read_hash(), r.read_uint())
    elif op_tag == OP_TRANSFER_NFT:
        core = TransferNft(r.read_hash(), r.read_hash(), r.read_hash())
    elif op_tag == OP_TRANSFER_FUNGIBLE:
        core = TransferFungible(r.read_uint(), r.read_hash(), r.read_hash())
    elif op_tag == OP_BURN:
        core = Burn(r.read_hash(), r.read_uint())
    elif op_tag == OP_UPDATE_WEIGHT:
        core = UpdateWeight(r.read_hash(), r.read_uint())
    else:
        raise DecodeError(f"unknown token op tag {op_tag}")
    pubkey = r.read_bytes()
    signature = r.read_bytes()
    return replace(core, signer_pubkey=pubkey, signature=signature)


def _decode_grant_event(r: Reader) -> GrantEvent:
    ev_tag = r.read_tag()
    if ev_tag == GRANT_REGISTERED:
        grant_id = r.read_hash()
        shell_id = r.read_hash()
        name = r.read_text()
        scopes = tuple(r.read_list(lambda rr: _dec_enum(rr, Scope, "scope")))
        autonomy = r.read_uint()
        created_at = r.read_uint()
        return GrantRegistered(grant_id, shell_id, name, scopes, autonomy, created_at)
    if ev_tag == GRANT_APPROVED:
        return GrantApproved(r.read_hash(), r.read_hash(), r.read_uint())
    if ev_tag == GRANT_REVOKED:
        return GrantRevoked(r.read_hash(), r.read_uint())
    raise DecodeError(f"unknown grant event tag {ev_tag}")


def decode_record(r: Reader) -> LedgerRecord:
    tag = r.read_tag()
    if tag == TAG_ACTIVITY:
        return _decode_activity(r)
    if tag == TAG_TOKEN_OP:
        return _decode_token_op(r)
    if tag == TAG_GRANT_EVENT:
        return _decode_grant_event(r)
    raise DecodeError(f"unknown record tag {tag}")


def decode_record_bytes(data: bytes) -> LedgerRecord:
    r = Reader(data)
    rec = decode_record(r)
    r.expect_end()
    return rec


def validate_record(rec: LedgerRecord) -> None:
    """Structural validation for any record, including the size cap."""
    encoded = encode_record(rec)
    if len(encoded) > MAX_RECORD_BYTES:
        raise ValidationFailed("record", f"exceeds {MAX_RECORD_BYTES} byte cap")
    if isinstance(rec, ActivityRecord):
        validate_activity(rec)
    elif isinstance(rec, (GrantRegistered, GrantApproved, GrantRevoked)):
        validate_grant_event(rec)
    else:
        validate_token_op(rec)
