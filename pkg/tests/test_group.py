from __future__ import annotations

import hashlib
import itertools
from random import Random

import pytest

from laso.group import (
    DEFAULT_MODULUS,
    GroupSuite,
    SuiteMismatchError,
    UnsupportedSuiteError,
    is_prime,
    pairing,
    suite_from_id,
)

SMALL_PRIMES = (3, 5, 7, 11, 13)


def test_stated_examples():
    s = GroupSuite(101)
    assert (s.g1(60) * s.g1(50)).exponent == 9
    assert (s.g1(30) ** 7).exponent == 8
    assert pairing(s.g1(50), s.g1(60)).exponent == 71


@pytest.mark.parametrize("p", SMALL_PRIMES)
def test_group_laws_exhaustive(p):
    """Associativity, commutativity, identity, inverse over every element."""
    s = GroupSuite(p)
    elements = [s.g1(e) for e in range(p)]
    for a in elements:
        assert a * s.identity == a
        assert a * a.inverse() == s.identity
        for b in elements:
            assert a * b == b * a
            for c in elements:
                assert (a * b) * c == a * (b * c)


@pytest.mark.parametrize("p", SMALL_PRIMES)
def test_gt_laws_exhaustive(p):
    s = GroupSuite(p)
    elements = [s.gt(e) for e in range(p)]
    for a in elements:
        assert a * s.gt_identity == a
        assert a / a == s.gt_identity
        for b in elements:
            assert (a * b) / b == a


@pytest.mark.parametrize("p", SMALL_PRIMES)
def test_bilinearity_exhaustive(p):
    s = GroupSuite(p)
    g = s.generator
    base = pairing(g, g)
    for x in range(p):
        for y in range(p):
            assert pairing(g**x, g**y) == base ** (x * y)
            assert pairing(g**x * g**y, g) == pairing(g**x, g) * pairing(g**y, g)


def test_exponentiation_matches_repeated_op():
    s = GroupSuite(13)
    g = s.g1(1)
    acc = s.identity
    for k in range(26):
        assert g**k == acc
        acc = acc * g


def test_negative_exponents():
    s = GroupSuite(101)
    a = s.g1(17)
    assert a**-1 == a.inverse()
    assert a**-5 * a**5 == s.identity


def test_hash_to_g1_deterministic_nonzero():
    s = GroupSuite(101)
    for i in range(300):
        label = f"attr-{i}".encode()
        element = s.hash_to_g1(label)
        assert element == s.hash_to_g1(label)
        assert element.exponent != 0


def test_hash_to_g1_redraws_on_zero():
    # hunt for a label whose digest is 0 mod p, then check the redraw
    s = GroupSuite(101)
    label = None
    for i in itertools.count():
        candidate = f"zero-{i}".encode()
        if int.from_bytes(hashlib.sha256(candidate).digest(), "big") % 101 == 0:
            label = candidate
            break
    expected = None
    for counter in itertools.count(1):
        spun = int.from_bytes(hashlib.sha256(label + counter.to_bytes(4, "big")).digest(), "big") % 101
        if spun != 0:
            expected = spun
            break
    assert s.hash_to_g1(label).exponent == expected


def test_random_scalar_stream_and_range():
    s = GroupSuite(101)
    first = [s.random_scalar(Random(42)) for _ in range(3)]
    assert first[0] == first[1] == first[2]
    rng = Random(7)
    draws = [s.random_scalar(rng) for _ in range(10_000)]
    assert all(0 <= d < 101 for d in draws)
    assert set(draws) == set(range(101))


def test_random_scalar_first_draw_frozen():
    # regression pin on the draw path: rng.randrange(p)
    assert GroupSuite(101).random_scalar(Random(1234)) == 99
    assert Random(1234).randrange(101) == 99


def test_suite_identifier_round_trip():
    s = GroupSuite(DEFAULT_MODULUS)
    assert s.suite_id == "oracle-exp/p=2305843009213693951"
    assert suite_from_id(s.suite_id) == s
    assert suite_from_id("oracle-exp/p=101") == GroupSuite(101)


def test_unknown_suites_rejected():
    with pytest.raises(UnsupportedSuiteError):
        suite_from_id("bls12-381/g1")
    with pytest.raises(UnsupportedSuiteError):
        suite_from_id("oracle-exp/p=not-a-number")
    with pytest.raises(ValueError):
        suite_from_id("oracle-exp/p=100")  # parses, but 100 is not prime
    with pytest.raises(ValueError):
        GroupSuite(1)
    with pytest.raises(ValueError):
        GroupSuite(561)  # carmichael number


def test_suite_mismatch_rejected():
    a = GroupSuite(101)
    b = GroupSuite(13)
    with pytest.raises(SuiteMismatchError):
        a.g1(5) * b.g1(5)
    with pytest.raises(SuiteMismatchError):
        pairing(a.g1(5), b.g1(5))
    with pytest.raises(SuiteMismatchError):
        a.gt(5) / b.gt(5)
    with pytest.raises(SuiteMismatchError):
        a.element_bytes(b.g1(5))


def test_element_bytes_round_trip():
    small = GroupSuite(101)
    assert small.scalar_size == 1
    big = GroupSuite(DEFAULT_MODULUS)
    assert big.scalar_size == 8
    for s in (small, big):
        rng = Random(3)
        for _ in range(50):
            g1 = s.g1(s.random_scalar(rng))
            gt = s.gt(s.random_scalar(rng))
            assert s.g1_from_bytes(s.element_bytes(g1)) == g1
            assert s.gt_from_bytes(s.element_bytes(gt)) == gt
            assert len(s.element_bytes(g1)) == s.scalar_size


def test_element_bytes_rejects_bad_input():
    s = GroupSuite(101)
    with pytest.raises(ValueError):
        s.g1_from_bytes(b"")  # wrong width
    with pytest.raises(ValueError):
        s.g1_from_bytes(bytes([101]))  # out of range residue


def test_is_prime():
    assert is_prime(2) and is_prime(3) and is_prime(101)
    assert is_prime(2**61 - 1)
    assert not is_prime(1)
    assert not is_prime(561)  # fools fermat, not miller-rabin
    assert not is_prime(2**61 + 1)
