"""Over-the-air messages and the backend verification path.

Beacons broadcast an epoch nonce sealed under an attribute-gated KEM;
clients that can open it answer with a two-layer sign-on envelope. The
c-nonce keying the inner layer is never transmitted in any form, and
passwords appear only as digests. The backend is the sole verifier;
nothing is sent back to the client.
"""

from __future__ import annotations

import enum
import hmac as _hmac
from dataclasses import dataclass
from random import Random

from .abe import AbeCiphertext, AttributeKey, PublicParams, ciphertext_to_bytes, decapsulate, encapsulate, read_ciphertext
from .crypto import (
    CONTEXT_BEACON_PAYLOAD,
    CONTEXT_INNER,
    CONTEXT_OUTER,
    DIGEST_SIZE,
    AuthFailError,
    Envelope,
    EpochClock,
    TokenSeed,
    derive_key,
    digest,
    open_envelope,
    seal,
    sign_on_digest,
    token_nonce,
)
from .directory import BEACON_ID_SIZE, BeaconRecord, Directory, valid_username
from .wire import Reader, WireFormatError, Writer

BROADCAST_MAGIC = b"LASO-B"
SIGNON_MAGIC = b"LASO-S"
WIRE_VERSION = 1
BEACON_NONCE_SIZE = 32
EPOCH_WINDOW = 1  # accept current epoch +/- this much, clock skew allowance


class RejectReason(enum.Enum):
    UNKNOWN_EPOCH = "UNKNOWN_EPOCH"
    UNKNOWN_USER = "UNKNOWN_USER"
    BAD_CNONCE = "BAD_CNONCE"
    BAD_HASH = "BAD_HASH"
    REPLAY = "REPLAY"
    MALFORMED = "MALFORMED"


@dataclass(frozen=True)
class VerifyResult:
    """Backend-internal outcome; reason codes feed logs and tests, they
    are never answered back over the air."""

    accepted: bool
    username: str | None = None
    beacon_id: bytes | None = None
    epoch: int | None = None
    reason: RejectReason | None = None

    @classmethod
    def ok(cls, username: str, beacon_id: bytes, epoch: int) -> "VerifyResult":
        return cls(True, username=username, beacon_id=beacon_id, epoch=epoch)

    @classmethod
    def reject(cls, reason: RejectReason) -> "VerifyResult":
        return cls(False, reason=reason)


@dataclass(frozen=True)
class BeaconBroadcast:
    beacon_id: bytes
    epoch: int
    policy_text: str
    abe_ct: AbeCiphertext
    payload: Envelope  # seals the 32-byte epoch nonce under the KEM secret


@dataclass(frozen=True)
class LocationSignOn:
    beacon_id: bytes
    epoch_hint: int  # advisory; verification never widens its window for it
    outer: Envelope


def broadcast_to_bytes(b: BeaconBroadcast, params: PublicParams) -> bytes:
    w = Writer()
    w.raw(BROADCAST_MAGIC).u8(WIRE_VERSION)
    w.raw(b.beacon_id).u64(b.epoch)
    w.block(b.policy_text.encode("utf-8"))
    w.block(ciphertext_to_bytes(b.abe_ct, params.suite))
    w.block(b.payload.to_bytes())
    return w.getvalue()


def broadcast_from_bytes(data: bytes, params: PublicParams) -> BeaconBroadcast:
    r = Reader(data, "beacon-broadcast")
    r.expect_magic(BROADCAST_MAGIC)
    version = r.u8("version")
    if version != WIRE_VERSION:
        r.fail("version", f"unsupported version {version}")
    beacon_id = r.take(BEACON_ID_SIZE, "beacon_id")
    epoch = r.u64("epoch")
    policy_text = r.block("policy").decode("utf-8")
    ct_reader = Reader(r.block("abe_ct"), "abe-ciphertext")
    abe_ct = read_ciphertext(ct_reader, params.suite)
    ct_reader.expect_eof()
    if abe_ct.policy_text != policy_text:
        r.fail("policy", "broadcast policy differs from ciphertext policy")
    payload = Envelope.from_bytes(r.block("payload"))
    r.expect_eof()
    return BeaconBroadcast(beacon_id, epoch, policy_text, abe_ct, payload)


def signon_to_bytes(s: LocationSignOn) -> bytes:
    w = Writer()
    w.raw(SIGNON_MAGIC).u8(WIRE_VERSION)
    w.raw(s.beacon_id).u64(s.epoch_hint)
    w.block(s.outer.to_bytes())
    return w.getvalue()


def signon_from_bytes(data: bytes) -> LocationSignOn:
    r = Reader(data, "location-sign-on")
    r.expect_magic(SIGNON_MAGIC)
    version = r.u8("version")
    if version != WIRE_VERSION:
        r.fail("version", f"unsupported version {version}")
    beacon_id = r.take(BEACON_ID_SIZE, "beacon_id")
    epoch_hint = r.u64("epoch_hint")
    outer = Envelope.from_bytes(r.block("outer"))
    r.expect_eof()
    return LocationSignOn(beacon_id, epoch_hint, outer)


def build_broadcast(beacon: BeaconRecord, params: PublicParams, epoch: int, rng: Random) -> BeaconBroadcast:
    """One advertisement for the given epoch: the epoch nonce, sealed so
    that exactly the policy-satisfying keys can open it."""
    nonce = token_nonce(beacon.seed, epoch)
    abe_ct, z = encapsulate(params, beacon.policy_text, rng)
    payload_key = derive_key(params.suite.element_bytes(z), CONTEXT_BEACON_PAYLOAD)
    payload = seal(payload_key, nonce, rng)
    return BeaconBroadcast(beacon.beacon_id, epoch, beacon.policy_text, abe_ct, payload)


def extract_nonce(broadcast: BeaconBroadcast, params: PublicParams, key: AttributeKey) -> bytes | None:
    """Client side: recover the epoch nonce, or None when the key does
    not satisfy the broadcast policy. A tampered payload raises
    AuthFailError instead of returning a wrong nonce."""
    z = decapsulate(params, key, broadcast.abe_ct)
    if z is None:
        return None
    payload_key = derive_key(params.suite.element_bytes(z), CONTEXT_BEACON_PAYLOAD)
    nonce = open_envelope(payload_key, broadcast.payload)
    if len(nonce) != BEACON_NONCE_SIZE:
        raise WireFormatError("beacon-broadcast", "payload", 0, f"nonce must be {BEACON_NONCE_SIZE} bytes, got {len(nonce)}")
    return nonce


def build_sign_on(
    username: str,
    pw_digest: bytes,
    cnonce_seed: TokenSeed,
    beacon_nonce: bytes,
    beacon_id: bytes,
    epoch_hint: int,
    cnonce_clock: EpochClock,
    rng: Random,
) -> LocationSignOn:
    """Two nested envelopes: the outer keyed by the beacon nonce, the
    inner keyed by the current c-nonce, wrapping the sign-on digest.
    Neither the c-nonce nor the password digest is ever transmitted."""
    if not valid_username(username):
        raise ValueError(f"invalid username {username!r}")
    if len(beacon_nonce) != BEACON_NONCE_SIZE:
        raise ValueError(f"beacon nonce must be {BEACON_NONCE_SIZE} bytes")
    if len(beacon_id) != BEACON_ID_SIZE:
        raise ValueError(f"beacon id must be {BEACON_ID_SIZE} bytes")
    h = sign_on_digest(beacon_nonce, pw_digest)
    cnonce = token_nonce(cnonce_seed, cnonce_clock.epoch())
    inner = seal(derive_key(cnonce, CONTEXT_INNER), h, rng)
    body = Writer().block(username.encode("utf-8")).block(inner.to_bytes()).getvalue()
    outer = seal(derive_key(beacon_nonce, CONTEXT_OUTER), body, rng)
    return LocationSignOn(beacon_id, epoch_hint, outer)


class ReplayCache:
    """Fingerprints of accepted sign-ons, scoped to the epoch window.

    Entries are recorded only on ACCEPT and evicted once the epoch they
    verified under falls out of the window; stale replays then fail as
    UNKNOWN_EPOCH rather than lingering here forever.
    """

    def __init__(self, window: int = EPOCH_WINDOW):
        self.window = window
        self._seen: dict[bytes, int] = {}

    def __len__(self) -> int:
        return len(self._seen)

    def check(self, fingerprint: bytes) -> bool:
        return fingerprint in self._seen

    def record(self, fingerprint: bytes, epoch: int):
        self._seen[fingerprint] = epoch

    def evict(self, current_epoch: int):
        self._seen = {
            fp: e for fp, e in self._seen.items() if abs(e - current_epoch) <= self.window
        }


def _epoch_candidates(current: int, hint: int) -> list[int]:
    window = [e for e in (current, current - 1, current + 1) if e >= 0]
    if hint in window:
        window.remove(hint)
        window.insert(0, hint)
    return window


def backend_verify(
    message: LocationSignOn,
    directory: Directory,
    beacon_clock: EpochClock,
    cnonce_clock: EpochClock,
    cache: ReplayCache,
) -> VerifyResult:
    """Decide one sign-on. The replay lookup keys on a digest of the
    full message bytes and runs before any decryption; BAD_CNONCE and
    BAD_HASH differ only in the logged reason, not in any externally
    visible behavior (no response is transmitted at all).
    """
    fingerprint = digest(signon_to_bytes(message))
    current = beacon_clock.epoch()
    cache.evict(current)
    if cache.check(fingerprint):
        return VerifyResult.reject(RejectReason.REPLAY)

    beacon = directory.lookup_beacon(message.beacon_id)
    if beacon is None:
        # no such beacon: undecodable in this deployment, treat as malformed
        return VerifyResult.reject(RejectReason.MALFORMED)

    matched_epoch: int | None = None
    body: bytes | None = None
    nonce = b""
    for epoch in _epoch_candidates(current, message.epoch_hint):
        candidate = token_nonce(beacon.seed, epoch)
        try:
            body = open_envelope(derive_key(candidate, CONTEXT_OUTER), message.outer)
        except AuthFailError:
            continue
        matched_epoch = epoch
        nonce = candidate
        break
    if matched_epoch is None or body is None:
        return VerifyResult.reject(RejectReason.UNKNOWN_EPOCH)

    try:
        r = Reader(body, "sign-on-body")
        username_bytes = r.block("username")
        inner = Envelope.from_bytes(r.block("inner"))
        r.expect_eof()
        username = username_bytes.decode("utf-8")
    except (WireFormatError, UnicodeDecodeError):
        return VerifyResult.reject(RejectReason.MALFORMED)
    if not valid_username(username):
        return VerifyResult.reject(RejectReason.MALFORMED)

    user = directory.lookup_user(username)
    if user is None:
        return VerifyResult.reject(RejectReason.UNKNOWN_USER)

    proof: bytes | None = None
    for epoch in _epoch_candidates(cnonce_clock.epoch(), -1):
        cnonce = token_nonce(user.cnonce_seed, epoch)
        try:
            proof = open_envelope(derive_key(cnonce, CONTEXT_INNER), inner)
        except AuthFailError:
            continue
        break
    if proof is None:
        return VerifyResult.reject(RejectReason.BAD_CNONCE)
    if len(proof) != DIGEST_SIZE:
        return VerifyResult.reject(RejectReason.MALFORMED)

    expected = sign_on_digest(nonce, user.password_digest)
    if not _hmac.compare_digest(proof, expected):
        return VerifyResult.reject(RejectReason.BAD_HASH)

    cache.record(fingerprint, matched_epoch)
    directory.record_location(beacon_clock.now(), username, message.beacon_id, matched_epoch)
    return VerifyResult.ok(username, message.beacon_id, matched_epoch)
