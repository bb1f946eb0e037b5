"""Exception types shared across the ledger modules."""


class LedgerError(Exception):
    """Base class for every error this package raises on purpose."""


class DecodeError(LedgerError):
    """Canonical bytes could not be decoded back into a value."""


# --- ledger-core ---------------------------------------------------------

class WrongValidator(LedgerError):
    pass


class EmptyBlock(LedgerError):
    pass


class RecordInvalid(LedgerError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"record {index}: {reason}")
        self.index = index
        self.reason = reason


class EmptySet(LedgerError):
    pass


class EmptyHeads(LedgerError):
    pass


# --- token-registry ------------------------------------------------------

class DuplicateTokenId(LedgerError):
    pass


class UnknownToken(LedgerError):
    pass


class NotOwner(LedgerError):
    pass


class TokenBurned(LedgerError):
    pass


class InsufficientBalance(LedgerError):
    pass


class WeightOnNonKnowledge(LedgerError):
    pass


# --- content-store -------------------------------------------------------

class StorageFull(LedgerError):
    pass


class NotFound(LedgerError):
    pass


class IntegrityFailure(LedgerError):
    pass


# --- memory-pool ---------------------------------------------------------

class ValidationFailed(LedgerError):
    def __init__(self, field: str, reason: str = ""):
        super().__init__(f"{field}: {reason}" if reason else field)
        self.field = field
        self.reason = reason


class Duplicate(LedgerError):
    pass


class BadHeader(LedgerError):
    pass


# --- learning ------------------------------------------------------------

class EmptyWindow(LedgerError):
    pass


class MixedActors(LedgerError):
    pass


class NoSignal(LedgerError):
    pass


class UnknownQuestion(LedgerError):
    pass


# --- network-sim / node-service ------------------------------------------

class InvalidScript(LedgerError):
    pass


class QueueFull(LedgerError):
    pass
