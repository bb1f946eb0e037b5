"""Capability grant state, replayed from on-chain grant events.

The secret itself is generated at approval time and handed out exactly once;
only its SHA-256 ever appears on-chain or in state, so chain replay restores
everything authorization needs without ever persisting a usable credential.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from types import MappingProxyType
from typing import Mapping, Optional

from .encoding import enc_hash, enc_list, enc_tag, enc_text, enc_uint, sha256
from .errors import ValidationFailed
from .records import (
    GrantApproved,
    GrantEvent,
    GrantRegistered,
    GrantRevoked,
    Scope,
)

STATUS_PENDING = "pending"
STATUS_APPROVED = "approved"
STATUS_REVOKED = "revoked"


@dataclass(frozen=True)
class GrantInfo:
    shell_id: bytes
    display_name: str
    scopes: tuple[Scope, ...]
    autonomy_level: int
    status: str
    secret_hash: Optional[bytes]
    created_at: int


@dataclass(frozen=True)
class GrantsState:
    grants: Mapping[bytes, GrantInfo]

    @classmethod
    def genesis(cls) -> "GrantsState":
        return cls(MappingProxyType({}))

    def by_secret_hash(self, secret_hash: bytes) -> Optional[tuple[bytes, GrantInfo]]:
        for grant_id, info in self.grants.items():
            if info.secret_hash == secret_hash:
                return grant_id, info
        return None

    def pending(self) -> list[tuple[bytes, GrantInfo]]:
        return sorted(
            (gid, info)
            for gid, info in self.grants.items()
            if info.status == STATUS_PENDING
        )


def apply_grant_event(state: GrantsState, ev: GrantEvent) -> GrantsState:
    grants = dict(state.grants)
    if isinstance(ev, GrantRegistered):
        if ev.grant_id in grants:
            raise ValidationFailed("grant_id", "already registered")
        grants[ev.grant_id] = GrantInfo(
            shell_id=ev.shell_id,
            display_name=ev.display_name,
            scopes=ev.scopes,
            autonomy_level=ev.autonomy_level,
            status=STATUS_PENDING,
            secret_hash=None,
            created_at=ev.created_at,
        )
    elif isinstance(ev, GrantApproved):
        info = grants.get(ev.grant_id)
        if info is None:
            raise ValidationFailed("grant_id", "approval of unknown grant")
        if info.status != STATUS_PENDING:
            raise ValidationFailed("grant_id", f"approval of {info.status} grant")
        grants[ev.grant_id] = replace(
            info, status=STATUS_APPROVED, secret_hash=ev.secret_hash
        )
    elif isinstance(ev, GrantRevoked):
        info = grants.get(ev.grant_id)
        if info is None:
            raise ValidationFailed("grant_id", "revocation of unknown grant")
        if info.status == STATUS_REVOKED:
            raise ValidationFailed("grant_id", "grant already revoked")
        grants[ev.grant_id] = replace(info, status=STATUS_REVOKED)
    else:
        raise TypeError(f"not a grant event: {ev!r}")
    return GrantsState(MappingProxyType(grants))


def grants_state_hash(state: GrantsState) -> bytes:
    def enc_info(kv) -> bytes:
        gid, info = kv
        return b"".join(
            [
                enc_hash(gid),
                enc_hash(info.shell_id),
                enc_text(info.display_name),
                enc_list(info.scopes, lambda s: enc_tag(int(s))),
                enc_uint(info.autonomy_level),
                enc_text(info.status),
                enc_hash(info.secret_hash) if info.secret_hash else enc_tag(0),
                enc_uint(info.created_at),
            ]
        )

    return sha256(enc_list(sorted(state.grants.items()), enc_info))
