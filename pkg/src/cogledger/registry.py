"""Token registry: the state machine for COG balances and the NFT classes.

RegistryState is an immutable value; apply_op returns a new state and never
mutates its input, so a rejected op leaves state untouched by construction.
Burned NFTs are tombstoned (alive=False), never deleted: the ledger is
immutable, burning hides the asset while preserving the record.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from types import MappingProxyType
from typing import Mapping, Optional

from .encoding import MICRO, enc_bool, enc_hash, enc_list, enc_uint, sha256
from .errors import (
    DuplicateTokenId,
    InsufficientBalance,
    NotOwner,
    TokenBurned,
    UnknownToken,
    WeightOnNonKnowledge,
)
from .records import (
    Burn,
    MintIncentive,
    MintNft,
    NftMetadata,
    TokenClass,
    TokenOp,
    TransferFungible,
    TransferNft,
    UpdateWeight,
    derive_token_id,
    enc_metadata,
    op_signer,
)


@dataclass(frozen=True)
class NftEntry:
    metadata: NftMetadata
    owner: bytes
    alive: bool


@dataclass(frozen=True)
class RegistryState:
    """Full asset state: NFT table, COG balances, mint/burn totals."""

    owner_account: bytes
    nfts: Mapping[bytes, NftEntry]
    balances: Mapping[bytes, int]
    total_minted: int = 0
    total_burned: int = 0

    @classmethod
    def genesis(cls, owner_account: bytes) -> "RegistryState":
        return cls(owner_account, MappingProxyType({}), MappingProxyType({}))

    def balance_of(self, account: bytes) -> int:
        return self.balances.get(account, 0)


def _with(state: RegistryState, *, nfts=None, balances=None, minted=None) -> RegistryState:
    return RegistryState(
        owner_account=state.owner_account,
        nfts=MappingProxyType(nfts) if nfts is not None else state.nfts,
        balances=MappingProxyType(balances) if balances is not None else state.balances,
        total_minted=minted if minted is not None else state.total_minted,
        total_burned=state.total_burned,
    )


def _alive_entry(state: RegistryState, token_id: bytes) -> NftEntry:
    entry = state.nfts.get(token_id)
    if entry is None:
        raise UnknownToken(token_id.hex())
    if not entry.alive:
        raise TokenBurned(token_id.hex())
    return entry


def apply_op(state: RegistryState, op: TokenOp) -> RegistryState:
    """Pure state transition. The op's signature must already be verified;
    authorization (who may do what) is checked here against the signer."""
    signer = op_signer(op)

    if isinstance(op, MintNft):
        if op.token_id != derive_token_id(op):
            raise DuplicateTokenId("carried token_id does not match derivation")
        if op.token_id in state.nfts:
            raise DuplicateTokenId(op.token_id.hex())
        if signer != op.metadata.issuer:
            raise NotOwner("mint must be signed by the metadata issuer")
        nfts = dict(state.nfts)
        nfts[op.token_id] = NftEntry(op.metadata, op.owner, alive=True)
        return _with(state, nfts=nfts)

    if isinstance(op, MintIncentive):
        if signer != state.owner_account:
            raise NotOwner("incentive mints must be signed by the chain owner")
        balances = dict(state.balances)
        balances[op.owner] = balances.get(op.owner, 0) + op.amount
        return _with(state, balances=balances, minted=state.total_minted + op.amount)

    if isinstance(op, TransferNft):
        entry = _alive_entry(state, op.token_id)
        if entry.owner != op.sender or signer != op.sender:
            raise NotOwner("transfer must be signed by the current owner")
        nfts = dict(state.nfts)
        nfts[op.token_id] = replace(entry, owner=op.recipient)
        return _with(state, nfts=nfts)

    if isinstance(op, TransferFungible):
        if signer != op.sender:
            raise NotOwner("transfer must be signed by the sender")
        available = state.balance_of(op.sender)
        if available < op.amount:
            raise InsufficientBalance(f"{available} < {op.amount}")
        balances = dict(state.balances)
        balances[op.sender] = available - op.amount
        balances[op.recipient] = balances.get(op.recipient, 0) + op.amount
        return _with(state, balances=balances)

    if isinstance(op, Burn):
        entry = _alive_entry(state, op.token_id)
        if signer != entry.owner:
            raise NotOwner("burn must be signed by the current owner")
        nfts = dict(state.nfts)
        nfts[op.token_id] = replace(entry, alive=False)
        return _with(state, nfts=nfts)

    if isinstance(op, UpdateWeight):
        entry = _alive_entry(state, op.token_id)
        if entry.metadata.token_class is not TokenClass.KNOWLEDGE_OBJECT:
            raise WeightOnNonKnowledge(op.token_id.hex())
        if signer != state.owner_account:
            raise NotOwner("weight updates must be signed by the chain owner")
        nfts = dict(state.nfts)
        new_meta = replace(entry.metadata, weight_micro=op.new_weight_micro)
        nfts[op.token_id] = replace(entry, metadata=new_meta)
        return _with(state, nfts=nfts)

    raise TypeError(f"not a token op: {op!r}")


# --- asset view -----------------------------------------------------------

@dataclass(frozen=True)
class AssetView:
    account: bytes
    balance: int
    badges: tuple[tuple[bytes, NftEntry], ...]
    knowledge: tuple[tuple[bytes, NftEntry], ...]
    models: tuple[tuple[bytes, NftEntry], ...]


def assets_of(state: RegistryState, owner: bytes) -> AssetView:
    """Wallet view: COG balance plus alive NFTs grouped by class, ordered
    by (class, token id)."""
    groups: dict[TokenClass, list] = {
        TokenClass.PERSONALITY_BADGE: [],
        TokenClass.KNOWLEDGE_OBJECT: [],
        TokenClass.MODEL: [],
    }
    for token_id in sorted(state.nfts):
        entry = state.nfts[token_id]
        if entry.alive and entry.owner == owner:
            groups[entry.metadata.token_class].append((token_id, entry))
    return AssetView(
        account=owner,
        balance=state.balance_of(owner),
        badges=tuple(groups[TokenClass.PERSONALITY_BADGE]),
        knowledge=tuple(groups[TokenClass.KNOWLEDGE_OBJECT]),
        models=tuple(groups[TokenClass.MODEL]),
    )


def reward_codification(agent: bytes, amount: int = 10) -> MintIncentive:
    """Unsigned incentive mint for one accepted knowledge object."""
    return MintIncentive(owner=agent, amount=amount)


def registry_state_hash(state: RegistryState) -> bytes:
    """Canonical-encoding hash of the full registry state."""
    parts = [
        enc_hash(state.owner_account),
        enc_uint(state.total_minted),
        enc_uint(state.total_burned),
        enc_list(
            sorted(state.balances.items()),
            lambda kv: enc_hash(kv[0]) + enc_uint(kv[1]),
        ),
        enc_list(
            sorted(state.nfts.items()),
            lambda kv: enc_hash(kv[0])
            + enc_metadata(kv[1].metadata)
            + enc_hash(kv[1].owner)
            + enc_bool(kv[1].alive),
        ),
    ]
    return sha256(b"".join(parts))
