"""Prime-order symmetric bilinear group with an exponent-oracle backend.

The oracle backend stores every group element as its discrete logarithm
to a fixed generator: the G1 operation is exponent addition mod p,
exponentiation is multiplication, and the pairing multiplies exponents.
Every algebraic identity is therefore checkable exactly, at any desk
scale. It provides zero security (discrete logs are the representation)
and exists so that protocol algebra can be verified end to end. Curve
backends would register under different suite identifiers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from random import Random

DEFAULT_MODULUS = 2**61 - 1

_ORACLE_PREFIX = "oracle-exp/p="

# enough witnesses for a deterministic Miller-Rabin answer below 3.3e24
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class SuiteMismatchError(ValueError):
    """Elements from different suites were combined, or a serialized
    object declares a different suite than the one in hand."""


class UnsupportedSuiteError(ValueError):
    """Suite identifier names no registered backend."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = (x * x) % n
            if x == n - 1:
                break
        else:
            return False
    return True


class GroupSuite:
    """One concrete (G1, GT, pairing) instantiation of prime order p."""

    __slots__ = ("modulus", "suite_id", "scalar_size")

    def __init__(self, modulus: int):
        if modulus < 3 or not is_prime(modulus):
            raise ValueError(f"group order must be an odd prime, got {modulus}")
        self.modulus = modulus
        self.suite_id = f"{_ORACLE_PREFIX}{modulus}"
        self.scalar_size = (modulus.bit_length() + 7) // 8

    def __repr__(self) -> str:
        return f"GroupSuite({self.suite_id!r})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GroupSuite) and other.suite_id == self.suite_id

    def __hash__(self) -> int:
        return hash(self.suite_id)

    # element constructors

    def g1(self, exponent: int) -> "G1Element":
        return G1Element(self, exponent % self.modulus)

    def gt(self, exponent: int) -> "GTElement":
        return GTElement(self, exponent % self.modulus)

    @property
    def generator(self) -> "G1Element":
        return G1Element(self, 1)

    @property
    def gt_generator(self) -> "GTElement":
        return GTElement(self, 1)

    @property
    def identity(self) -> "G1Element":
        return G1Element(self, 0)

    @property
    def gt_identity(self) -> "GTElement":
        return GTElement(self, 0)

    def random_scalar(self, rng: Random) -> int:
        """Uniform residue mod p from an injected generator."""
        return rng.randrange(self.modulus)

    def hash_to_g1(self, label: bytes) -> "G1Element":
        """Deterministic non-identity element for a label.

        SHA-256 of the label, reduced mod p. A zero exponent would map
        the label to the identity, whose blindings are all the identity
        too, so on zero the label is re-drawn with a 4-byte big-endian
        counter suffix until nonzero.
        """
        payload = label
        counter = 0
        while True:
            e = int.from_bytes(hashlib.sha256(payload).digest(), "big") % self.modulus
            if e != 0:
                return G1Element(self, e)
            counter += 1
            payload = label + counter.to_bytes(4, "big")

    # fixed-width serialization of exponents

    def element_bytes(self, element: "G1Element | GTElement") -> bytes:
        if element.suite != self:
            raise SuiteMismatchError(f"element from {element.suite.suite_id}, suite is {self.suite_id}")
        return element.exponent.to_bytes(self.scalar_size, "big")

    def scalar_bytes(self, value: int) -> bytes:
        return (value % self.modulus).to_bytes(self.scalar_size, "big")

    def _exponent_from(self, data: bytes) -> int:
        if len(data) != self.scalar_size:
            raise ValueError(f"expected {self.scalar_size} bytes, got {len(data)}")
        value = int.from_bytes(data, "big")
        if value >= self.modulus:
            raise ValueError(f"exponent {value} out of range for p={self.modulus}")
        return value

    def g1_from_bytes(self, data: bytes) -> "G1Element":
        return G1Element(self, self._exponent_from(data))

    def gt_from_bytes(self, data: bytes) -> "GTElement":
        return GTElement(self, self._exponent_from(data))


def suite_from_id(suite_id: str) -> GroupSuite:
    """Instantiate the suite a serialized identifier names."""
    if suite_id.startswith(_ORACLE_PREFIX):
        digits = suite_id[len(_ORACLE_PREFIX) :]
        if not digits.isdigit():
            raise UnsupportedSuiteError(f"malformed suite identifier {suite_id!r}")
        return GroupSuite(int(digits))
    raise UnsupportedSuiteError(f"no backend registered for suite {suite_id!r}")


def _same_suite(a: "G1Element | GTElement", b: "G1Element | GTElement") -> GroupSuite:
    if a.suite != b.suite:
        raise SuiteMismatchError(f"cannot combine {a.suite.suite_id} with {b.suite.suite_id}")
    return a.suite


@dataclass(frozen=True)
class G1Element:
    suite: GroupSuite
    exponent: int

    def __mul__(self, other: "G1Element") -> "G1Element":
        if not isinstance(other, G1Element):
            return NotImplemented
        suite = _same_suite(self, other)
        return G1Element(suite, (self.exponent + other.exponent) % suite.modulus)

    def __pow__(self, k: int) -> "G1Element":
        if not isinstance(k, int):
            return NotImplemented
        return G1Element(self.suite, (self.exponent * k) % self.suite.modulus)

    def inverse(self) -> "G1Element":
        return G1Element(self.suite, (-self.exponent) % self.suite.modulus)


@dataclass(frozen=True)
class GTElement:
    suite: GroupSuite
    exponent: int

    def __mul__(self, other: "GTElement") -> "GTElement":
        if not isinstance(other, GTElement):
            return NotImplemented
        suite = _same_suite(self, other)
        return GTElement(suite, (self.exponent + other.exponent) % suite.modulus)

    def __truediv__(self, other: "GTElement") -> "GTElement":
        if not isinstance(other, GTElement):
            return NotImplemented
        suite = _same_suite(self, other)
        return GTElement(suite, (self.exponent - other.exponent) % suite.modulus)

    def __pow__(self, k: int) -> "GTElement":
        if not isinstance(k, int):
            return NotImplemented
        return GTElement(self.suite, (self.exponent * k) % self.suite.modulus)

    def inverse(self) -> "GTElement":
        return GTElement(self.suite, (-self.exponent) % self.suite.modulus)


def pairing(a: G1Element, b: G1Element) -> GTElement:
    """Symmetric bilinear map e: G1 x G1 -> GT."""
    if not isinstance(a, G1Element) or not isinstance(b, G1Element):
        raise TypeError("pairing takes two G1 elements")
    suite = _same_suite(a, b)
    return GTElement(suite, (a.exponent * b.exponent) % suite.modulus)
