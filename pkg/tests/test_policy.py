from __future__ import annotations

import pytest

from laso.policy import (
    And,
    Leaf,
    Or,
    PolicySyntaxError,
    SatisfactionWitness,
    compile_lsss,
    eval_boolean,
    find_witness,
    format_policy,
    parse_policy,
    policy_attributes,
    valid_attribute,
)
from conftest import all_subsets, formula_corpus

P = 101


def test_parse_basic_shapes():
    assert parse_policy("A") == Leaf("A")
    assert parse_policy("A AND B") == And(Leaf("A"), Leaf("B"))
    assert parse_policy("A OR B") == Or(Leaf("A"), Leaf("B"))


def test_and_binds_tighter_than_or():
    assert parse_policy("A OR B AND C") == Or(Leaf("A"), And(Leaf("B"), Leaf("C")))
    assert parse_policy("A AND B OR C") == Or(And(Leaf("A"), Leaf("B")), Leaf("C"))
    assert parse_policy("(A OR B) AND C") == And(Or(Leaf("A"), Leaf("B")), Leaf("C"))


def test_operators_left_associate():
    assert parse_policy("A AND B AND C") == And(And(Leaf("A"), Leaf("B")), Leaf("C"))
    assert parse_policy("A OR B OR C") == Or(Or(Leaf("A"), Leaf("B")), Leaf("C"))


def test_keywords_case_insensitive():
    expected = And(Leaf("left"), Leaf("right"))
    for text in ("left AND right", "left and right", "left AnD right"):
        assert parse_policy(text) == expected


def test_attribute_charset():
    assert parse_policy("role:employee AND floor_3.x-y") == And(Leaf("role:employee"), Leaf("floor_3.x-y"))
    assert valid_attribute("a-b_c.d:e")
    assert not valid_attribute("")
    assert not valid_attribute("two words")
    assert not valid_attribute("and")  # keywords cannot be attributes
    assert not valid_attribute("OR")


@pytest.mark.parametrize(
    "text,offset",
    [
        ("", 0),
        ("   ", 0),
        ("A AND (B OR", 11),
        ("A AND", 5),
        ("AND A", 0),
        ("A B", 2),
        ("(A AND B", 8),
        ("A)", 1),
        ("A & B", 2),
        ("(A OR B) AND", 12),
        ("()", 1),
    ],
)
def test_syntax_errors_carry_byte_offsets(text, offset):
    with pytest.raises(PolicySyntaxError) as err:
        parse_policy(text)
    assert err.value.offset == offset, str(err.value)


def test_round_trip_over_corpus():
    for formula in formula_corpus():
        assert parse_policy(format_policy(formula)) == formula


def test_format_policy_spot_checks():
    assert format_policy(Or(And(Leaf("A"), Leaf("B")), Leaf("C"))) == "A AND B OR C"
    assert format_policy(And(Or(Leaf("A"), Leaf("B")), Leaf("C"))) == "(A OR B) AND C"
    assert format_policy(And(Leaf("A"), And(Leaf("B"), Leaf("C")))) == "A AND (B AND C)"


def test_policy_attributes():
    tree = parse_policy("(A AND B) OR (A AND C)")
    assert policy_attributes(tree) == frozenset({"A", "B", "C"})


# share matrix compilation


def test_compile_and_gate():
    program = compile_lsss(parse_policy("A AND B"), P)
    assert program.matrix == ((1, 1), (0, P - 1))
    assert program.row_attributes == ("A", "B")


def test_compile_or_gate():
    program = compile_lsss(parse_policy("A OR B"), P)
    assert program.matrix == ((1,), (1,))
    assert program.row_attributes == ("A", "B")


def test_compile_nested_or_of_and():
    program = compile_lsss(parse_policy("(A AND B) OR C"), P)
    assert program.row_count == 3
    assert program.width == 2
    assert program.matrix == ((1, 1), (0, P - 1), (1, 0))
    assert program.row_attributes == ("A", "B", "C")


def test_compile_two_ands_under_or():
    program = compile_lsss(parse_policy("(A AND B) OR (C AND D)"), P)
    # second AND pads the root vector to the counter before splitting
    assert program.matrix == (
        (1, 1, 0),
        (0, P - 1, 0),
        (1, 0, 1),
        (0, 0, P - 1),
    )
    assert program.row_attributes == ("A", "B", "C", "D")


def test_compile_rows_follow_leaf_order_with_duplicates():
    program = compile_lsss(parse_policy("A OR A"), P)
    assert program.row_attributes == ("A", "A")
    assert program.matrix == ((1,), (1,))


def test_witness_examples():
    both = compile_lsss(parse_policy("A AND B"), P)
    witness = find_witness(both, {"A", "B"})
    assert witness == SatisfactionWitness((0, 1), (1, 1))
    assert find_witness(both, {"A"}) is None
    assert find_witness(both, set()) is None

    either = compile_lsss(parse_policy("(A AND B) OR C"), P)
    assert find_witness(either, {"C"}) == SatisfactionWitness((2,), (1,))
    assert find_witness(either, {"C", "E"}) == SatisfactionWitness((2,), (1,))


def test_witness_is_deterministic():
    program = compile_lsss(parse_policy("(A AND B) OR (C AND D) OR A"), P)
    attrs = {"A", "B", "C", "D"}
    assert find_witness(program, attrs) == find_witness(program, attrs)


def test_witness_reconstructs_target_over_corpus():
    """The recombination identity, checked exactly for every corpus
    formula and every attribute subset that satisfies it."""
    for modulus in (P, 2**61 - 1):
        for formula in formula_corpus(3):
            program = compile_lsss(formula, modulus)
            for attrs in all_subsets():
                witness = find_witness(program, attrs)
                if witness is None:
                    continue
                total = [0] * program.width
                for row, coefficient in zip(witness.rows, witness.coefficients):
                    assert program.row_attributes[row] in attrs
                    assert coefficient % modulus != 0
                    for i, entry in enumerate(program.matrix[row]):
                        total[i] = (total[i] + coefficient * entry) % modulus
                assert total == [1] + [0] * (program.width - 1)


def test_witness_agrees_with_boolean_oracle():
    for formula in formula_corpus():
        program = compile_lsss(formula, P)
        for attrs in all_subsets():
            satisfiable = find_witness(program, attrs) is not None
            assert satisfiable == eval_boolean(formula, attrs), format_policy(formula)


def test_eval_boolean_spot_checks():
    tree = parse_policy("(role:employee AND floor:3) OR role:admin")
    assert eval_boolean(tree, {"role:admin"})
    assert eval_boolean(tree, {"role:employee", "floor:3"})
    assert not eval_boolean(tree, {"role:employee"})
    assert not eval_boolean(tree, set())
