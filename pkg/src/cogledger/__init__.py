"""cogledger: a desk-scale personal cognitive ledger.

A single-owner blockchain node that lifelogs activity into an immutable
memory pool, codifies it into content-addressed knowledge objects owned as
NFTs, scores personality quizzes into badges, trains a deterministic
preference model, and exposes the resulting assets to the owner and to
capability-scoped shell applications.
"""

from .encoding import ContentAddress, sha256
from .errors import LedgerError
from .keys import KeyFile
from .ledger import (
    Block,
    BlockHeader,
    ChainState,
    ValidatorSet,
    canonical_encode,
    fork_choice,
    merkle_root,
    scheduled_validator,
)
from .memory import MemoryIndex, QueryFilter, import_history_csv, query
from .records import (
    ActivityKind,
    ActivityRecord,
    NftMetadata,
    Scope,
    TokenClass,
    make_activity,
)
from .registry import RegistryState, apply_op, assets_of
from .store import ContentStore, content_address_of

__version__ = "0.1.0"

__all__ = [
    "ActivityKind",
    "ActivityRecord",
    "Block",
    "BlockHeader",
    "ChainState",
    "ContentAddress",
    "ContentStore",
    "KeyFile",
    "LedgerError",
    "MemoryIndex",
    "NftMetadata",
    "QueryFilter",
    "RegistryState",
    "Scope",
    "TokenClass",
    "ValidatorSet",
    "apply_op",
    "assets_of",
    "canonical_encode",
    "content_address_of",
    "fork_choice",
    "import_history_csv",
    "make_activity",
    "merkle_root",
    "query",
    "scheduled_validator",
    "sha256",
]
