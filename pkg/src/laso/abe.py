"""Ciphertext-policy attribute-based key encapsulation.

A ciphertext carries its access policy; any single key whose attribute
set satisfies that policy recovers the encapsulated GT element, so one
broadcast serves every qualified holder. Secrets are shared across the
policy's LSSS rows and recombined with pairings.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random

from .group import G1Element, GroupSuite, GTElement, SuiteMismatchError, pairing, suite_from_id
from .policy import (
    AccessPolicy,
    LsssProgram,
    SatisfactionWitness,
    compile_lsss,
    find_witness,
    format_policy,
    parse_policy,
    valid_attribute,
)
from .wire import Reader, Writer

PARAMS_MAGIC = b"LASP"
MASTER_MAGIC = b"LASM"
KEY_MAGIC = b"LASK"
FORMAT_VERSION = 1


class MalformedCiphertextError(ValueError):
    """Ciphertext rows disagree with the policy it carries."""


@dataclass(frozen=True)
class PublicParams:
    suite: GroupSuite
    g: G1Element
    g_a: G1Element
    e_gg_alpha: GTElement


@dataclass(frozen=True)
class MasterSecret:
    suite: GroupSuite
    g_alpha: G1Element
    a: int

    def __repr__(self) -> str:
        return f"MasterSecret(suite={self.suite.suite_id!r})"


@dataclass(frozen=True)
class AttributeKey:
    """Per-holder decryption key for one attribute set.

    All components share the same blinding factor, so components of two
    different keys cannot be mixed to widen either attribute set.
    """

    suite: GroupSuite
    attrs: frozenset[str]
    k: G1Element
    l: G1Element
    k_x: dict[str, G1Element]


@dataclass(frozen=True)
class CiphertextRow:
    c: G1Element  # masks one share of the KEM exponent
    d: G1Element  # commitment to the row blinder


@dataclass(frozen=True)
class AbeCiphertext:
    policy_text: str
    c_kem: GTElement
    c_prime: G1Element
    rows: tuple[CiphertextRow, ...]


def setup(suite: GroupSuite, rng: Random) -> tuple[PublicParams, MasterSecret]:
    # draw order is frozen: alpha, then a
    alpha = suite.random_scalar(rng)
    a = suite.random_scalar(rng)
    g = suite.generator
    params = PublicParams(suite, g, g**a, pairing(g, g) ** alpha)
    return params, MasterSecret(suite, g**alpha, a)


def keygen(params: PublicParams, master: MasterSecret, attrs: frozenset[str] | set[str], rng: Random) -> AttributeKey:
    if not attrs:
        raise ValueError("attribute set must be non-empty")
    for attr in attrs:
        if not valid_attribute(attr):
            raise ValueError(f"invalid attribute name {attr!r}")
    if master.suite != params.suite:
        raise SuiteMismatchError("master secret and params disagree on suite")
    suite = params.suite
    t = suite.random_scalar(rng)
    k = master.g_alpha * params.g_a**t
    l = params.g**t
    k_x = {attr: suite.hash_to_g1(attr.encode("utf-8")) ** t for attr in sorted(attrs)}
    return AttributeKey(suite, frozenset(attrs), k, l, k_x)


def encapsulate(
    params: PublicParams, policy: AccessPolicy | str, rng: Random
) -> tuple[AbeCiphertext, GTElement]:
    """Fresh random GT element plus the ciphertext that gates it.

    String policies keep their text verbatim in the ciphertext; parsed
    trees are pretty-printed.
    """
    if isinstance(policy, str):
        policy_text = policy
        tree = parse_policy(policy)
    else:
        tree = policy
        policy_text = format_policy(policy)
    suite = params.suite
    program = compile_lsss(tree, suite.modulus)
    # draw order is frozen: KEM exponent, sharing vector, row blinders
    z = suite.gt_generator ** suite.random_scalar(rng)
    vector = [suite.random_scalar(rng) for _ in range(program.width)]
    s = vector[0]
    blinders = [suite.random_scalar(rng) for _ in range(program.row_count)]
    rows = []
    for row, attr, r in zip(program.matrix, program.row_attributes, blinders):
        share = sum(m * v for m, v in zip(row, vector)) % suite.modulus
        h_attr = suite.hash_to_g1(attr.encode("utf-8"))
        rows.append(CiphertextRow(params.g_a**share * h_attr**-r, params.g**r))
    ct = AbeCiphertext(policy_text, z * params.e_gg_alpha**s, params.g**s, tuple(rows))
    return ct, z


def decapsulate(params: PublicParams, key: AttributeKey, ct: AbeCiphertext) -> GTElement | None:
    """Recover the encapsulated element, or None when the key's
    attribute set does not satisfy the ciphertext policy (an answer,
    not an error). The witness check runs before any pairing work."""
    program = _program_for(params.suite, ct)
    witness = find_witness(program, key.attrs)
    if witness is None:
        return None
    return decapsulate_with_witness(params, key, ct, program, witness)


def decapsulate_with_witness(
    params: PublicParams,
    key: AttributeKey,
    ct: AbeCiphertext,
    program: LsssProgram,
    witness: SatisfactionWitness,
) -> GTElement:
    """Decapsulate along one explicit recombination; any valid witness
    for the same key yields the same element."""
    if key.suite != params.suite:
        raise SuiteMismatchError("key and params disagree on suite")
    numerator = pairing(ct.c_prime, key.k)
    recombined = params.suite.gt_identity
    for row_index, coefficient in zip(witness.rows, witness.coefficients):
        attr = program.row_attributes[row_index]
        row = ct.rows[row_index]
        term = pairing(row.c, key.l) * pairing(row.d, key.k_x[attr])
        recombined = recombined * term**coefficient
    return ct.c_kem / (numerator / recombined)


def _program_for(suite: GroupSuite, ct: AbeCiphertext) -> LsssProgram:
    program = compile_lsss(parse_policy(ct.policy_text), suite.modulus)
    if program.row_count != len(ct.rows):
        raise MalformedCiphertextError(
            f"policy compiles to {program.row_count} rows, ciphertext has {len(ct.rows)}"
        )
    return program


# serialization
#
# Key material files open with a magic, a format version, and the suite
# identifier; loads against a different suite are refused up front.

def _write_header(w: Writer, magic: bytes, suite: GroupSuite):
    w.raw(magic).u8(FORMAT_VERSION).block(suite.suite_id.encode("ascii"))


def _read_header(r: Reader, magic: bytes, expected_suite: GroupSuite | None) -> GroupSuite:
    r.expect_magic(magic)
    version = r.u8("version")
    if version != FORMAT_VERSION:
        r.fail("version", f"unsupported version {version}")
    suite_id = r.block("suite").decode("ascii")
    suite = suite_from_id(suite_id)
    if expected_suite is not None and suite != expected_suite:
        raise SuiteMismatchError(f"file is for suite {suite_id!r}, expected {expected_suite.suite_id!r}")
    return suite


def params_to_bytes(params: PublicParams) -> bytes:
    w = Writer()
    _write_header(w, PARAMS_MAGIC, params.suite)
    suite = params.suite
    for element in (params.g, params.g_a):
        w.raw(suite.element_bytes(element))
    w.raw(suite.element_bytes(params.e_gg_alpha))
    return w.getvalue()


def params_from_bytes(data: bytes, expected_suite: GroupSuite | None = None) -> PublicParams:
    r = Reader(data, "public-params")
    suite = _read_header(r, PARAMS_MAGIC, expected_suite)
    n = suite.scalar_size
    g = suite.g1_from_bytes(r.take(n, "g"))
    g_a = suite.g1_from_bytes(r.take(n, "g_a"))
    e_gg_alpha = suite.gt_from_bytes(r.take(n, "e_gg_alpha"))
    r.expect_eof()
    return PublicParams(suite, g, g_a, e_gg_alpha)


def master_to_bytes(master: MasterSecret) -> bytes:
    w = Writer()
    _write_header(w, MASTER_MAGIC, master.suite)
    w.raw(master.suite.element_bytes(master.g_alpha))
    w.raw(master.suite.scalar_bytes(master.a))
    return w.getvalue()


def master_from_bytes(data: bytes, expected_suite: GroupSuite | None = None) -> MasterSecret:
    r = Reader(data, "master-secret")
    suite = _read_header(r, MASTER_MAGIC, expected_suite)
    n = suite.scalar_size
    g_alpha = suite.g1_from_bytes(r.take(n, "g_alpha"))
    a = int.from_bytes(r.take(n, "a"), "big")
    if a >= suite.modulus:
        r.fail("a", f"scalar {a} out of range")
    r.expect_eof()
    return MasterSecret(suite, g_alpha, a)


def key_to_bytes(key: AttributeKey) -> bytes:
    w = Writer()
    _write_header(w, KEY_MAGIC, key.suite)
    suite = key.suite
    attrs = sorted(key.attrs)
    w.u32(len(attrs))
    for attr in attrs:
        w.block(attr.encode("utf-8"))
    w.raw(suite.element_bytes(key.k))
    w.raw(suite.element_bytes(key.l))
    for attr in attrs:
        w.raw(suite.element_bytes(key.k_x[attr]))
    return w.getvalue()


def key_from_bytes(data: bytes, expected_suite: GroupSuite | None = None) -> AttributeKey:
    r = Reader(data, "attribute-key")
    suite = _read_header(r, KEY_MAGIC, expected_suite)
    count = r.u32("attr-count")
    attrs = [r.block("attr").decode("utf-8") for _ in range(count)]
    if not attrs:
        r.fail("attr-count", "key carries no attributes")
    n = suite.scalar_size
    k = suite.g1_from_bytes(r.take(n, "k"))
    l = suite.g1_from_bytes(r.take(n, "l"))
    k_x = {attr: suite.g1_from_bytes(r.take(n, "k_x")) for attr in attrs}
    r.expect_eof()
    return AttributeKey(suite, frozenset(attrs), k, l, k_x)


def ciphertext_to_bytes(ct: AbeCiphertext, suite: GroupSuite) -> bytes:
    w = Writer()
    w.block(ct.policy_text.encode("utf-8"))
    w.raw(suite.element_bytes(ct.c_kem))
    w.raw(suite.element_bytes(ct.c_prime))
    w.u32(len(ct.rows))
    for row in ct.rows:
        w.raw(suite.element_bytes(row.c))
        w.raw(suite.element_bytes(row.d))
    return w.getvalue()


def ciphertext_from_bytes(data: bytes, suite: GroupSuite) -> AbeCiphertext:
    r = Reader(data, "abe-ciphertext")
    ct = read_ciphertext(r, suite)
    r.expect_eof()
    return ct


def read_ciphertext(r: Reader, suite: GroupSuite) -> AbeCiphertext:
    policy_text = r.block("policy").decode("utf-8")
    n = suite.scalar_size
    c_kem = suite.gt_from_bytes(r.take(n, "c_kem"))
    c_prime = suite.g1_from_bytes(r.take(n, "c_prime"))
    count = r.u32("row-count")
    rows = tuple(
        CiphertextRow(
            suite.g1_from_bytes(r.take(n, "row-c")),
            suite.g1_from_bytes(r.take(n, "row-d")),
        )
        for _ in range(count)
    )
    return AbeCiphertext(policy_text, c_kem, c_prime, rows)
