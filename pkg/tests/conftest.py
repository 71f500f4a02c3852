from __future__ import annotations

import itertools

import pytest

from laso.group import GroupSuite
from laso.policy import AccessPolicy, And, Leaf, Or

CORPUS_ATTRS = ("A", "B", "C", "D")


def formula_corpus(max_leaves: int = 4) -> list[AccessPolicy]:
    """Every distinct AND/OR tree with up to max_leaves leaves, leaves
    labeled A.. left to right: 1 + 2 + 8 + 40 = 51 formulas, depth <= 3.
    Deterministic and deduplicated by construction."""

    def build(leaves: int, start: int):
        if leaves == 1:
            yield Leaf(CORPUS_ATTRS[start])
            return
        for left_leaves in range(1, leaves):
            for left in build(left_leaves, start):
                for right in build(leaves - left_leaves, start + left_leaves):
                    yield And(left, right)
                    yield Or(left, right)

    corpus: list[AccessPolicy] = []
    for leaves in range(1, max_leaves + 1):
        corpus.extend(build(leaves, 0))
    return corpus


def all_subsets() -> list[frozenset[str]]:
    out = []
    for r in range(len(CORPUS_ATTRS) + 1):
        for combo in itertools.combinations(CORPUS_ATTRS, r):
            out.append(frozenset(combo))
    return out


@pytest.fixture(scope="session")
def suite101() -> GroupSuite:
    return GroupSuite(101)


@pytest.fixture(scope="session")
def corpus() -> list[AccessPolicy]:
    return formula_corpus()
