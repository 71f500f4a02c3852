from __future__ import annotations

import hashlib
import hmac
import struct
from random import Random

import pytest

from laso.crypto import (
    AuthFailError,
    Envelope,
    EpochClock,
    SymmetricKey,
    TokenSeed,
    derive_key,
    digest,
    open_envelope,
    password_digest,
    seal,
    sign_on_digest,
    token_nonce,
)
from laso.wire import WireFormatError


def test_digest_is_sha256():
    assert digest(b"") == bytes.fromhex(
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    )
    assert digest(b"abc") == hashlib.sha256(b"abc").digest()
    assert len(digest(b"x" * 1000)) == 32


def test_password_digest():
    assert password_digest("hunter2") == hashlib.sha256(b"hunter2").digest()
    assert password_digest(b"hunter2") == password_digest("hunter2")


def test_sign_on_digest_matches_length_prefixed_layout():
    nonce = bytes(range(32))
    pw = hashlib.sha256(b"pw").digest()
    manual = hashlib.sha256(
        struct.pack(">I", 32) + nonce + struct.pack(">I", 32) + pw
    ).digest()
    assert sign_on_digest(nonce, pw) == manual
    assert sign_on_digest(nonce, pw) != sign_on_digest(bytes(32), pw)
    assert sign_on_digest(nonce, pw) != sign_on_digest(nonce, bytes(32))


def test_derive_key_contexts_are_independent():
    secret = b"\x07" * 32
    outer = derive_key(secret, "laso/outer")
    inner = derive_key(secret, "laso/inner")
    assert outer.key != inner.key
    assert outer == derive_key(secret, "laso/outer")
    assert derive_key(b"\x08" * 32, "laso/outer").key != outer.key


def test_derive_key_frozen_vector_matches_manual_hkdf():
    key = derive_key(b"\x00" * 32, "laso/outer")
    assert key.key.hex() == "88c8ff9a2627c56f685aeddfdb077371c9222e62dedbefb94d7b86f2aad4d11f"
    # independent rfc5869 arithmetic: one expand block, zero salt
    prk = hmac.new(b"\x00" * 32, b"\x00" * 32, hashlib.sha256).digest()
    assert key.key == hmac.new(prk, b"laso/outer" + b"\x01", hashlib.sha256).digest()


def test_derive_key_rejects_empty_context():
    with pytest.raises(ValueError):
        derive_key(b"\x00" * 32, "")


def test_key_repr_hides_bytes():
    key = derive_key(b"\x01" * 32, "laso/outer")
    assert key.key.hex() not in repr(key)
    with pytest.raises(ValueError):
        SymmetricKey(b"short", "laso/outer")


def test_seal_open_round_trips():
    rng = Random(9)
    key = derive_key(b"\x42" * 32, "laso/outer")
    for size in (0, 1, 13, 32, 1000):
        message = rng.randbytes(size)
        assert open_envelope(key, seal(key, message, rng)) == message


def test_seal_open_many_random_keys():
    rng = Random(10)
    for _ in range(1000):
        key = SymmetricKey(rng.randbytes(32), "laso/outer")
        message = rng.randbytes(rng.randrange(64))
        assert open_envelope(key, seal(key, message, rng)) == message


def test_wrong_key_fails_like_tampering():
    rng = Random(11)
    key = derive_key(b"\x01" * 32, "laso/outer")
    other = derive_key(b"\x02" * 32, "laso/outer")
    envelope = seal(key, b"payload", rng)
    with pytest.raises(AuthFailError):
        open_envelope(other, envelope)


def test_every_single_bit_flip_fails():
    rng = Random(12)
    key = derive_key(b"\x03" * 32, "laso/inner")
    envelope = seal(key, b"sign-on", rng)
    fields = ("nonce", "ciphertext", "tag")
    for name in fields:
        data = getattr(envelope, name)
        for bit in range(len(data) * 8):
            flipped = bytearray(data)
            flipped[bit // 8] ^= 1 << (bit % 8)
            mutated = Envelope(**{**{f: getattr(envelope, f) for f in fields}, name: bytes(flipped)})
            with pytest.raises(AuthFailError):
                open_envelope(key, mutated)


def test_envelope_codec():
    rng = Random(13)
    key = derive_key(b"\x04" * 32, "laso/outer")
    envelope = seal(key, b"boxed bytes", rng)
    assert Envelope.from_bytes(envelope.to_bytes()) == envelope
    with pytest.raises(WireFormatError):
        Envelope.from_bytes(envelope.to_bytes()[:-1])
    with pytest.raises(WireFormatError):
        Envelope.from_bytes(envelope.to_bytes() + b"\x00")


def test_epoch_clock_floor_and_monotonicity():
    times = iter([0.0, 59.999, 60.0, 61.5, 3600.0])
    clock = EpochClock(60, lambda: next(times))
    assert [clock.epoch() for _ in range(5)] == [0, 0, 1, 1, 60]
    assert EpochClock(30, lambda: 3600.0).epoch() == 120
    assert EpochClock(30, lambda: 100.0).epoch(at=59.0) == 1
    last = -1
    for t in range(0, 500, 7):
        epoch = EpochClock(60, lambda: float(t)).epoch()
        assert epoch >= last
        last = epoch
    with pytest.raises(ValueError):
        EpochClock(0)


def test_token_nonce_both_sides_agree():
    seed = TokenSeed(b"\x11" * 32, "beacon")
    device = token_nonce(seed, 7)
    backend = token_nonce(TokenSeed(b"\x11" * 32, "beacon"), 7)
    assert device == backend
    assert device.hex() == "b5c3e17d4f98ee2a8121d6d51fb26f62b638f9bacd524a11a09c79452122a5bc"
    # direct prf arithmetic
    assert device == hmac.new(b"\x11" * 32, struct.pack(">Q", 7), hashlib.sha256).digest()


def test_token_nonce_varies_by_epoch_and_seed():
    seed = TokenSeed(b"\x22" * 32, "user")
    values = {token_nonce(seed, e) for e in range(100)}
    assert len(values) == 100
    assert token_nonce(TokenSeed(b"\x23" * 32, "user"), 5) != token_nonce(seed, 5)


def test_token_nonce_rejects_negative_epoch():
    with pytest.raises(ValueError):
        token_nonce(TokenSeed(b"\x22" * 32, "user"), -1)


def test_token_seed_validation_and_repr():
    with pytest.raises(ValueError):
        TokenSeed(b"short", "user")
    with pytest.raises(ValueError):
        TokenSeed(b"\x00" * 32, "router")
    seed = TokenSeed(b"\x5a" * 32, "beacon")
    assert seed.secret.hex() not in repr(seed)
