"""Access policies: boolean formulas over attributes and their
linear secret sharing form.

Grammar (AND binds tighter than OR, parens group, keywords are
case-insensitive, attributes match [A-Za-z0-9_:.-]+):

    expr   := term (OR term)*
    term   := factor (AND factor)*
    factor := ATTRIBUTE | '(' expr ')'
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_ATTRIBUTE_RE = re.compile(r"[A-Za-z0-9_:.\-]+")
_KEYWORDS = ("AND", "OR")


class PolicySyntaxError(ValueError):
    """Policy text that does not parse; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Leaf:
    attribute: str


@dataclass(frozen=True)
class And:
    left: "AccessPolicy"
    right: "AccessPolicy"


@dataclass(frozen=True)
class Or:
    left: "AccessPolicy"
    right: "AccessPolicy"


AccessPolicy = Leaf | And | Or


def valid_attribute(name: str) -> bool:
    return bool(_ATTRIBUTE_RE.fullmatch(name)) and name.upper() not in _KEYWORDS


@dataclass(frozen=True)
class _Token:
    kind: str  # "ATTR", "AND", "OR", "(", ")"
    value: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "()":
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        match = _ATTRIBUTE_RE.match(text, i)
        if match is None:
            raise PolicySyntaxError(f"unexpected character {ch!r}", i)
        word = match.group()
        kind = word.upper() if word.upper() in _KEYWORDS else "ATTR"
        tokens.append(_Token(kind, word, i))
        i = match.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], length: int):
        self._tokens = tokens
        self._length = length  # offset to report at end of input
        self._pos = 0

    def _peek(self) -> _Token | None:
        return self._tokens[self._pos] if self._pos < len(self._tokens) else None

    def _advance(self) -> _Token:
        token = self._peek()
        if token is None:
            raise PolicySyntaxError("unexpected end of policy", self._length)
        self._pos += 1
        return token

    def expr(self) -> AccessPolicy:
        node = self.term()
        while (token := self._peek()) is not None and token.kind == "OR":
            self._advance()
            node = Or(node, self.term())
        return node

    def term(self) -> AccessPolicy:
        node = self.factor()
        while (token := self._peek()) is not None and token.kind == "AND":
            self._advance()
            node = And(node, self.factor())
        return node

    def factor(self) -> AccessPolicy:
        token = self._advance()
        if token.kind == "ATTR":
            return Leaf(token.value)
        if token.kind == "(":
            node = self.expr()
            closing = self._peek()
            if closing is None or closing.kind != ")":
                offset = self._length if closing is None else closing.offset
                raise PolicySyntaxError("unbalanced parenthesis", offset)
            self._advance()
            return node
        raise PolicySyntaxError(f"unexpected token {token.value!r}", token.offset)

    def finish(self, node: AccessPolicy) -> AccessPolicy:
        leftover = self._peek()
        if leftover is not None:
            raise PolicySyntaxError(f"unexpected token {leftover.value!r}", leftover.offset)
        return node


def parse_policy(text: str) -> AccessPolicy:
    tokens = _tokenize(text)
    if not tokens:
        raise PolicySyntaxError("empty policy", 0)
    parser = _Parser(tokens, len(text))
    return parser.finish(parser.expr())


def format_policy(policy: AccessPolicy) -> str:
    """Minimal-paren text form; parse(format_policy(p)) == p."""
    if isinstance(policy, Leaf):
        return policy.attribute
    if isinstance(policy, And):
        left = _wrap(policy.left, isinstance(policy.left, Or))
        right = _wrap(policy.right, isinstance(policy.right, (And, Or)))
        return f"{left} AND {right}"
    # OR: the only child needing parens is a right-nested OR, to keep
    # the printed form re-parsing left-associated into the same tree
    left = format_policy(policy.left)
    right = _wrap(policy.right, isinstance(policy.right, Or))
    return f"{left} OR {right}"


def _wrap(node: AccessPolicy, parens: bool) -> str:
    text = format_policy(node)
    return f"({text})" if parens else text


def policy_attributes(policy: AccessPolicy) -> frozenset[str]:
    if isinstance(policy, Leaf):
        return frozenset((policy.attribute,))
    return policy_attributes(policy.left) | policy_attributes(policy.right)


def eval_boolean(policy: AccessPolicy, attrs: frozenset[str] | set[str]) -> bool:
    """Plain boolean semantics; the independent oracle the share-matrix
    path is checked against."""
    if isinstance(policy, Leaf):
        return policy.attribute in attrs
    if isinstance(policy, And):
        return eval_boolean(policy.left, attrs) and eval_boolean(policy.right, attrs)
    return eval_boolean(policy.left, attrs) or eval_boolean(policy.right, attrs)


@dataclass(frozen=True)
class LsssProgram:
    """Share matrix over Z_p plus the attribute each row answers to.

    Rows are in leaf order (left-to-right DFS). A row set S is
    authorized iff (1, 0, ..., 0) lies in the span of its rows.
    """

    matrix: tuple[tuple[int, ...], ...]
    row_attributes: tuple[str, ...]
    modulus: int

    @property
    def row_count(self) -> int:
        return len(self.matrix)

    @property
    def width(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0


def compile_lsss(policy: AccessPolicy, modulus: int) -> LsssProgram:
    """Monotone formula to share matrix.

    Root vector is (1) with counter c=1. OR hands its vector to both
    children. AND pads its vector to length c, hands one child the
    padded vector with 1 appended and the other (0,...,0,-1) of length
    c+1, then increments c. All rows are zero-padded to the final c.
    """
    rows: list[tuple[list[int], str]] = []
    counter = 1

    def walk(node: AccessPolicy, vector: list[int]):
        nonlocal counter
        if isinstance(node, Leaf):
            rows.append((vector, node.attribute))
            return
        if isinstance(node, Or):
            walk(node.left, list(vector))
            walk(node.right, list(vector))
            return
        padded = vector + [0] * (counter - len(vector))
        left = padded + [1]
        right = [0] * counter + [-1]
        counter += 1
        walk(node.left, left)
        walk(node.right, right)

    walk(policy, [1])
    width = counter
    matrix = tuple(
        tuple(entry % modulus for entry in vector + [0] * (width - len(vector)))
        for vector, _ in rows
    )
    return LsssProgram(matrix, tuple(attr for _, attr in rows), modulus)


@dataclass(frozen=True)
class SatisfactionWitness:
    """Rows of the share matrix and coefficients recombining them to
    (1, 0, ..., 0). Zero-coefficient rows are dropped."""

    rows: tuple[int, ...]
    coefficients: tuple[int, ...]


def find_witness(program: LsssProgram, attrs: frozenset[str] | set[str]) -> SatisfactionWitness | None:
    """Recombination witness over the rows the attribute set owns, or
    None when those rows cannot span the target (NOT_SATISFIED is an
    answer, not an error).

    Deterministic: Gaussian elimination in natural pivot order with
    free variables set to zero, so equal inputs give equal witnesses.
    """
    selected = [i for i in range(program.row_count) if program.row_attributes[i] in attrs]
    if not selected:
        return None
    p = program.modulus
    # solve (M_S)^T w = (1, 0, ..., 0) for w indexed by selected rows
    columns = [[program.matrix[i][c] for i in selected] for c in range(program.width)]
    target = [1] + [0] * (program.width - 1)
    solution = _solve_mod(columns, target, p)
    if solution is None:
        return None
    kept = [(row, w) for row, w in zip(selected, solution) if w % p != 0]
    rows, coefficients = zip(*kept)
    return SatisfactionWitness(rows, coefficients)


def _solve_mod(a: list[list[int]], b: list[int], p: int) -> list[int] | None:
    """One solution of A x = b over Z_p (free variables zero), or None."""
    nrows = len(a)
    ncols = len(a[0])
    m = [[value % p for value in row] + [rhs % p] for row, rhs in zip(a, b)]
    pivot_cols: list[int] = []
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, nrows) if m[r][col]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        inv = pow(m[rank][col], -1, p)
        m[rank] = [(value * inv) % p for value in m[rank]]
        for r in range(nrows):
            if r != rank and m[r][col]:
                factor = m[r][col]
                m[r] = [(value - factor * keep) % p for value, keep in zip(m[r], m[rank])]
        pivot_cols.append(col)
        rank += 1
        if rank == nrows:
            break
    for r in range(rank, nrows):
        if m[r][ncols]:
            return None
    solution = [0] * ncols
    for r, col in enumerate(pivot_cols):
        solution[col] = m[r][ncols]
    return solution
