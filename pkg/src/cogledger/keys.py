"""Ed25519 key handling and the encrypted on-disk key file.

Accounts and validators are both plain Ed25519 keypairs; their on-chain
identity is the SHA-256 of the 32-byte raw public key. The key file stores
the account and validator private keys AES-GCM encrypted under a
scrypt-derived key. Losing the passphrase is unrecoverable by design.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.scrypt import Scrypt
from cryptography.hazmat.primitives import serialization

from .encoding import sha256
from .errors import LedgerError

_SCRYPT_N = 2**14
_SCRYPT_R = 8
_SCRYPT_P = 1


class KeyFileError(LedgerError):
    pass


def generate_key() -> Ed25519PrivateKey:
    return Ed25519PrivateKey.generate()


def key_from_seed(seed: bytes) -> Ed25519PrivateKey:
    """Deterministic key from a 32-byte seed (simulation and tests)."""
    if len(seed) != 32:
        raise ValueError("seed must be 32 bytes")
    return Ed25519PrivateKey.from_private_bytes(seed)


def public_bytes(key: Ed25519PrivateKey) -> bytes:
    return key.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )


def private_bytes(key: Ed25519PrivateKey) -> bytes:
    return key.private_bytes(
        serialization.Encoding.Raw,
        serialization.PrivateFormat.Raw,
        serialization.NoEncryption(),
    )


def account_id(pubkey: bytes) -> bytes:
    """On-chain identity of a public key. Carries no contact information."""
    return sha256(pubkey)


def sign(key: Ed25519PrivateKey, message: bytes) -> bytes:
    return key.sign(message)


def verify(pubkey: bytes, signature: bytes, message: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(pubkey).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


@dataclass
class KeyFile:
    """Owner key material: one account keypair, one validator keypair."""

    account_key: Ed25519PrivateKey
    validator_key: Ed25519PrivateKey

    @property
    def account_id(self) -> bytes:
        return account_id(public_bytes(self.account_key))

    @property
    def validator_id(self) -> bytes:
        return account_id(public_bytes(self.validator_key))

    @classmethod
    def create(cls, path: str | Path, passphrase: str) -> "KeyFile":
        kf = cls(generate_key(), generate_key())
        kf.save(path, passphrase)
        return kf

    def save(self, path: str | Path, passphrase: str) -> None:
        path = Path(path)
        salt = os.urandom(16)
        nonce = os.urandom(12)
        secret = _derive(passphrase, salt)
        payload = json.dumps(
            {
                "account": private_bytes(self.account_key).hex(),
                "validator": private_bytes(self.validator_key).hex(),
            }
        ).encode("utf-8")
        blob = {
            "version": 1,
            "kdf": {"name": "scrypt", "n": _SCRYPT_N, "r": _SCRYPT_R, "p": _SCRYPT_P},
            "salt": salt.hex(),
            "nonce": nonce.hex(),
            "ciphertext": AESGCM(secret).encrypt(nonce, payload, None).hex(),
        }
        path.write_text(json.dumps(blob, indent=2) + "\n")
        os.chmod(path, 0o600)

    @classmethod
    def load(cls, path: str | Path, passphrase: str) -> "KeyFile":
        try:
            blob = json.loads(Path(path).read_text())
            salt = bytes.fromhex(blob["salt"])
            nonce = bytes.fromhex(blob["nonce"])
            ciphertext = bytes.fromhex(blob["ciphertext"])
        except (OSError, ValueError, KeyError) as exc:
            raise KeyFileError(f"unreadable key file {path}: {exc}") from exc
        secret = _derive(passphrase, salt)
        try:
            payload = json.loads(AESGCM(secret).decrypt(nonce, ciphertext, None))
        except InvalidTag as exc:
            raise KeyFileError("wrong passphrase or corrupted key file") from exc
        return cls(
            key_from_seed(bytes.fromhex(payload["account"])),
            key_from_seed(bytes.fromhex(payload["validator"])),
        )


def _derive(passphrase: str, salt: bytes) -> bytes:
    kdf = Scrypt(salt=salt, length=32, n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P)
    return kdf.derive(passphrase.encode("utf-8"))
