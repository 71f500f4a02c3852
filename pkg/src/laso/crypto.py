"""Symmetric building blocks: hash, labeled KDF, AEAD envelope, epoch
clock, and the seed-keyed rolling-nonce PRF.

Fixed primitive choices (identifiers recorded in every directory store
header): SHA-256, HKDF-SHA256, ChaCha20-Poly1305, HMAC-SHA256.
"""

from __future__ import annotations

import hashlib
import hmac as _hmac
import struct
import time
from dataclasses import dataclass, field
from random import Random
from typing import Callable

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

HASH_ID = "sha256"
KDF_ID = "hkdf-sha256"
AEAD_ID = "chacha20poly1305"
PRF_ID = "hmac-sha256"

DIGEST_SIZE = 32
KEY_SIZE = 32
NONCE_SIZE = 12  # AEAD nonce, not a beacon nonce
TAG_SIZE = 16
SEED_SIZE = 32

# key-derivation context labels
CONTEXT_BEACON_PAYLOAD = "laso/beacon-payload"
CONTEXT_OUTER = "laso/outer"
CONTEXT_INNER = "laso/inner"


class AuthFailError(Exception):
    """Envelope did not authenticate. Deliberately does not say whether
    the key was wrong or the bytes were tampered with."""


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def password_digest(password: bytes | str) -> bytes:
    """Passwords enter the system only through this digest."""
    if isinstance(password, str):
        password = password.encode("utf-8")
    return digest(password)


def sign_on_digest(beacon_nonce: bytes, pw_digest: bytes) -> bytes:
    """Innermost sign-on proof: hash over the current beacon nonce and
    the password digest, each length-prefixed, nonce first."""
    buf = struct.pack(">I", len(beacon_nonce)) + beacon_nonce
    buf += struct.pack(">I", len(pw_digest)) + pw_digest
    return digest(buf)


@dataclass(frozen=True)
class SymmetricKey:
    key: bytes
    context: str

    def __post_init__(self):
        if len(self.key) != KEY_SIZE:
            raise ValueError(f"key must be {KEY_SIZE} bytes, got {len(self.key)}")

    def __repr__(self) -> str:
        return f"SymmetricKey(context={self.context!r})"


def derive_key(secret: bytes, context: str) -> SymmetricKey:
    """HKDF with the context label as info; distinct labels give
    independent keys from the same secret. Empty labels are a misuse."""
    if not context:
        raise ValueError("context label must be non-empty")
    raw = HKDF(
        algorithm=hashes.SHA256(),
        length=KEY_SIZE,
        salt=None,
        info=context.encode("utf-8"),
    ).derive(secret)
    return SymmetricKey(raw, context)


@dataclass(frozen=True)
class Envelope:
    """One AEAD box: fresh random nonce, ciphertext, 16-byte tag."""

    nonce: bytes
    ciphertext: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return self.nonce + struct.pack(">I", len(self.ciphertext)) + self.ciphertext + self.tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "Envelope":
        from .wire import Reader

        r = Reader(data, "envelope")
        nonce = r.take(NONCE_SIZE, "nonce")
        ciphertext = r.block("ciphertext")
        tag = r.take(TAG_SIZE, "tag")
        r.expect_eof()
        return cls(nonce, ciphertext, tag)


def seal(key: SymmetricKey, plaintext: bytes, rng: Random) -> Envelope:
    nonce = rng.randbytes(NONCE_SIZE)
    boxed = ChaCha20Poly1305(key.key).encrypt(nonce, plaintext, None)
    return Envelope(nonce, boxed[:-TAG_SIZE], boxed[-TAG_SIZE:])


def open_envelope(key: SymmetricKey, envelope: Envelope) -> bytes:
    try:
        return ChaCha20Poly1305(key.key).decrypt(
            envelope.nonce, envelope.ciphertext + envelope.tag, None
        )
    except InvalidTag:
        raise AuthFailError("envelope failed to authenticate") from None


@dataclass
class EpochClock:
    """Maps a time source to epoch counters: epoch(t) = floor(t / period)."""

    period_seconds: int
    time_source: Callable[[], float] = field(default=time.time)

    def __post_init__(self):
        if self.period_seconds <= 0:
            raise ValueError("period must be positive")

    def now(self) -> float:
        return self.time_source()

    def epoch(self, at: float | None = None) -> int:
        t = self.now() if at is None else at
        return int(t // self.period_seconds)


@dataclass(frozen=True)
class TokenSeed:
    """Long-lived 32-byte PRF seed; owner marks which side keys it."""

    secret: bytes
    owner: str  # "beacon" or "user"

    def __post_init__(self):
        if len(self.secret) != SEED_SIZE:
            raise ValueError(f"seed must be {SEED_SIZE} bytes, got {len(self.secret)}")
        if self.owner not in ("beacon", "user"):
            raise ValueError(f"unknown seed owner {self.owner!r}")

    def __repr__(self) -> str:
        return f"TokenSeed(owner={self.owner!r})"


def token_nonce(seed: TokenSeed, epoch: int) -> bytes:
    """The rolling value both sides compute independently per epoch:
    HMAC over the 8-byte big-endian epoch, keyed by the seed. Covers
    beacon nonces and c-nonces alike."""
    if epoch < 0:
        raise ValueError("epochs are non-negative")
    return _hmac.new(seed.secret, struct.pack(">Q", epoch), hashlib.sha256).digest()
